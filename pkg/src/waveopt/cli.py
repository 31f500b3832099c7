"""waveopt command line.

    waveopt eval log_gaussian:tau=1
    waveopt minimize bump --config cfg.txt --out run/
    waveopt transform f.json s.json --alpha-range -2,2,65 --beta-range -5,5,65 --out w.csv
    waveopt ambiguity log_gaussian --out amb/
    waveopt catalog warped_hermite:order=2 --out seed.json
    waveopt check f.json

Exit codes: 0 ok, 1 malformed input, 2 domain-check failure,
3 minimizer did not converge, 4 invariant violation.
"""

from __future__ import annotations

import csv
import io
import json
import math
import sys
import warnings
from pathlib import Path

import click
import numpy as np

from .catalog import FAMILIES, CatalogError, catalog_get, parse_spec
from .freqgrid import GridError, build_grid, load_wavelet, wavelet_to_dict
from .minimizer import MinimizerConfig, load_config, minimize, perturbed_start
from .observables import (
    DomainError,
    DomainWarning,
    GroupElement,
    NormalizationError,
    canonical_normalize,
    canonical_residuals,
    commutation_check,
    group_action,
)
from .phasespace import ambiguity, auto_nodes, phase_uncertainty_direct, wavelet_transform
from .uncertainty import (
    CANONICAL_TOL,
    domain_membership,
    feasibility_bounds,
    phase_uncertainty_pullback,
    signal_uncertainty,
)

EXIT_INPUT, EXIT_DOMAIN, EXIT_NOCONV, EXIT_INVARIANT = 1, 2, 3, 4
DEFAULT_GRID = "1e-4,1e4,4096"
CHECK_TOL = 1e-4


class CliFailure(Exception):
    def __init__(self, code, message):
        super().__init__(message)
        self.code = code


def _triple(text, what, int_last=True):
    parts = [p.strip() for p in str(text).split(",")]
    if len(parts) != 3:
        raise CliFailure(EXIT_INPUT, f"{what} must be lo,hi,n; got {text!r}")
    try:
        lo, hi = float(parts[0]), float(parts[1])
        n = int(parts[2]) if int_last else float(parts[2])
    except ValueError:
        raise CliFailure(EXIT_INPUT, f"{what} must be lo,hi,n; got {text!r}") from None
    if not (math.isfinite(lo) and math.isfinite(hi)):
        raise CliFailure(EXIT_INPUT, f"{what} bounds must be finite")
    return lo, hi, n


def _grid(text):
    lo, hi, n = _triple(text, "--grid")
    return build_grid(lo, hi, n)


def _nodes(text, what):
    if text is None:
        return None
    lo, hi, n = _triple(text, what)
    if n < 1 or hi < lo:
        raise CliFailure(EXIT_INPUT, f"{what} needs hi >= lo and n >= 1")
    return np.linspace(lo, hi, n)


def _wavelet(source, grid_text):
    """A wavelet from a JSON file or a catalog spec."""
    path = Path(source)
    if path.exists():
        return load_wavelet(path)
    if source.partition(":")[0] in FAMILIES:
        return catalog_get(parse_spec(source), _grid(grid_text))
    raise CliFailure(EXIT_INPUT, f"{source}: no such file and not a catalog spec")


def _dumps(obj):
    # Python float repr is the shortest string that round-trips exactly
    return json.dumps(obj, indent=2, allow_nan=True) + "\n"


def _emit(text, out):
    if out:
        Path(out).write_text(text)
    else:
        click.echo(text, nl=False)


def _csv_text(header, rows):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


grid_option = click.option("--grid", "grid_text", default=DEFAULT_GRID, show_default=True,
                           help="omega_min,omega_max,n for catalog inputs.")
out_option = click.option("--out", default=None, help="Output path.")


@click.group()
def cli():
    """Uncertainty functionals and minimizers for frequency-domain wavelets."""


@cli.command("eval")
@click.argument("source")
@click.option("--functional", type=click.Choice(["signal", "phase"]), default=None)
@click.option("--format", "fmt", type=click.Choice(["json", "csv"]), default="json")
@grid_option
@out_option
def eval_cmd(source, functional, fmt, grid_text, out):
    """Uncertainty report for SOURCE (file or catalog spec)."""
    f = _wavelet(source, grid_text)
    report = {"source": source}
    if functional in (None, "signal"):
        report["signal"] = signal_uncertainty(f).to_flat()
    if functional in (None, "phase"):
        normalized = max(canonical_residuals(f)) > CANONICAL_TOL
        fc = canonical_normalize(f)[0] if normalized else f
        report["phase"] = phase_uncertainty_pullback(fc).to_flat()
        report["phase"]["input_normalized"] = normalized
    if fmt == "json":
        _emit(_dumps(report), out)
    else:
        rows = [(sec, k, v) for sec in ("signal", "phase") if sec in report
                for k, v in report[sec].items()]
        _emit(_csv_text(["functional", "key", "value"], rows), out)


@cli.command("minimize")
@click.argument("source")
@click.option("--functional", type=click.Choice(["signal", "phase"]), default="signal")
@click.option("--config", "config_path", default=None, help="key = value minimizer config.")
@click.option("--seed", type=int, default=None, help="Perturb the start with this seed.")
@grid_option
@click.option("--out", default="minimize_out", show_default=True, help="Output directory.")
def minimize_cmd(source, functional, config_path, seed, grid_text, out):
    """Projected gradient descent from SOURCE."""
    try:
        cfg = load_config(config_path) if config_path else MinimizerConfig()
    except (OSError, ValueError) as exc:
        raise CliFailure(EXIT_INPUT, f"config: {exc}") from None
    if seed is not None:
        cfg = MinimizerConfig(**{**cfg.__dict__, "seed": seed})
        if Path(source).exists():
            raise CliFailure(EXIT_INPUT, "--seed perturbs catalog starts only")
        f0 = perturbed_start(_grid(grid_text), seed, base=source, real=cfg.real)
    else:
        f0 = _wavelet(source, grid_text)
    res = minimize(functional, f0, cfg)
    d = Path(out)
    d.mkdir(parents=True, exist_ok=True)
    summary = {"source": source, "config": dict(cfg.__dict__), **res.to_dict()}
    (d / "result.json").write_text(_dumps(summary))
    res.write_trajectory(d / "trajectory.csv")
    (d / "minimizer.json").write_text(json.dumps(wavelet_to_dict(res.minimizer)) + "\n")
    click.echo(f"{functional} value {res.value!r} after {res.iterations} iterations", err=True)
    if not res.converged:
        raise CliFailure(EXIT_NOCONV, f"minimizer did not converge: {res.message}")


@cli.command("transform")
@click.argument("window")
@click.argument("signal")
@click.option("--alpha-range", default="-2,2,41", show_default=True)
@click.option("--beta-range", default="-5,5,41", show_default=True)
@grid_option
@out_option
def transform_cmd(window, signal, alpha_range, beta_range, grid_text, out):
    """CSV of <SIGNAL, pi(alpha, beta) WINDOW> over the (alpha, beta) nodes."""
    f = _wavelet(window, grid_text)
    s = _wavelet(signal, grid_text)
    if f.grid != s.grid:
        raise CliFailure(EXIT_INPUT, "window and signal live on different grids")
    surf = wavelet_transform(f, s, _nodes(alpha_range, "--alpha-range"),
                             _nodes(beta_range, "--beta-range"))
    _write_surface(surf, out)


def _write_surface(surf, out, normalized=False):
    if out:
        surf.to_csv(out, normalized=normalized)
        return
    v = surf.normalized if normalized else surf.values
    rows = [(repr(float(a)), repr(float(b)), repr(float(v[i, j].real)), repr(float(v[i, j].imag)),
             repr(float(surf.haar_weights[i, j])))
            for i, a in enumerate(surf.alpha_nodes) for j, b in enumerate(surf.beta_nodes)]
    click.echo(_csv_text(["alpha", "beta", "re", "im", "haar_weight"], rows), nl=False)


@cli.command("ambiguity")
@click.argument("source")
@click.option("--alpha-range", default=None, help="lo,hi,n (default: auto-sized, 512 nodes).")
@click.option("--beta-range", default=None, help="lo,hi,n (default: auto-sized, 512 nodes).")
@grid_option
@click.option("--out", default="ambiguity_out", show_default=True, help="Output directory.")
def ambiguity_cmd(source, alpha_range, beta_range, grid_text, out):
    """Ambiguity surface CSV and direct-vs-pull-back comparison JSON."""
    f = canonical_normalize(_wavelet(source, grid_text))[0]
    a_auto, b_auto = auto_nodes(f)
    a = _nodes(alpha_range, "--alpha-range")
    b = _nodes(beta_range, "--beta-range")
    a = a_auto if a is None else a
    b = b_auto if b is None else b
    d = Path(out)
    d.mkdir(parents=True, exist_ok=True)
    ambiguity(f, a, b).to_csv(d / "surface.csv")
    pull = phase_uncertainty_pullback(f)
    direct = phase_uncertainty_direct(f, a, b, strict=False)
    cmp_ = {"source": source, "pullback": pull.to_flat(), "direct": direct.to_flat(),
            "relative_gap": (direct.total - pull.total) / pull.total,
            "boundary_certified": direct.diagnostics["boundary_mass"] <= 1e-4}
    (d / "comparison.json").write_text(_dumps(cmp_))
    if not cmp_["boundary_certified"]:
        raise CliFailure(EXIT_DOMAIN, "surface does not cover the ambiguity: boundary mass "
                         f"{direct.diagnostics['boundary_mass']:.3e} > 1e-4")


@cli.command("catalog")
@click.argument("spec", required=False)
@click.option("--format", "fmt", type=click.Choice(["json", "csv"]), default="json")
@grid_option
@out_option
def catalog_cmd(spec, fmt, grid_text, out):
    """List families, or sample SPEC on the grid."""
    if spec is None:
        _emit(_dumps({"families": FAMILIES}), out)
        return
    f = catalog_get(parse_spec(spec), _grid(grid_text))
    if fmt == "json":
        _emit(json.dumps(wavelet_to_dict(f)) + "\n", out)
    else:
        rows = [(repr(float(w)), repr(float(v.real)), repr(float(v.imag)))
                for w, v in zip(f.grid.nodes, f.values)]
        _emit(_csv_text(["omega", "re", "im"], rows), out)


def run_checks(f):
    """Invariant suite; returns (domain_failures, invariant_failures, details)."""
    details = {}
    res = canonical_residuals(f)
    details["canonical_residuals"] = list(res)
    if max(res) > CANONICAL_TOL:
        return [f"canonical residual {max(res):.3e} exceeds {CANONICAL_TOL:g}"], [], details
    dp = domain_membership(f, "D_P")
    details["D_P_failures"] = dp.failures
    if not dp.member:
        return [f"not in D_P: {', '.join(dp.failures)}"], [], details
    bad = []
    ls = signal_uncertainty(f)
    lp = phase_uncertainty_pullback(f)
    fast = signal_uncertainty(f, assume_canonical=True)
    details["signal"] = ls.total
    details["phase"] = lp.total
    if abs(fast.total - ls.total) > CHECK_TOL * ls.total:
        bad.append("general and canonical signal formulas disagree")
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", DomainWarning)
        for c, al, be in [(2.0, 0.3, 1.7), (-1 + 1j, -0.5, 0.0)]:
            moved = c * group_action(GroupElement(al, be), f)
            rel = abs(signal_uncertainty(moved).total - ls.total) / ls.total
            details[f"invariance_{al}_{be}"] = rel
            if rel > CHECK_TOL:
                bad.append(f"signal uncertainty not invariant at ({al}, {be}): {rel:.3e}")
        for al, be in [(0.5, 0.0), (0.0, 0.5)]:
            r = commutation_check(f, al, be)
            details[f"commutation_{al}_{be}"] = r
            if r > CHECK_TOL:
                bad.append(f"commutation residual {r:.3e} at ({al}, {be})")
    for k in ("time_var", "scale_var"):
        if lp.terms[k] < ls.terms[k] * (1 - CHECK_TOL):
            bad.append(f"phase term {k} below signal term")
    fb = feasibility_bounds(f, 2 * ls.total + 1)
    details["feasibility_failures"] = fb.failures
    bad += [f"feasibility bound {x}" for x in fb.failures]
    return [], bad, details


@cli.command("check")
@click.argument("source")
@grid_option
@out_option
def check_cmd(source, grid_text, out):
    """Run the invariant suite on SOURCE; nonzero exit on any violation."""
    f = _wavelet(source, grid_text)
    domain, bad, details = run_checks(f)
    details.update({"source": source, "domain_failures": domain, "violations": bad})
    _emit(_dumps(details), out)
    if domain:
        raise CliFailure(EXIT_DOMAIN, domain[0])
    if bad:
        raise CliFailure(EXIT_INVARIANT, "; ".join(bad))


def main(argv=None):
    try:
        cli.main(args=argv, prog_name="waveopt", standalone_mode=False)
    except CliFailure as exc:
        click.echo(f"error: {exc}", err=True)
        return exc.code
    except click.exceptions.Abort:
        click.echo("error: aborted", err=True)
        return EXIT_INPUT
    except click.ClickException as exc:
        click.echo(f"error: {exc.format_message()}", err=True)
        return EXIT_INPUT
    except (GridError, CatalogError, json.JSONDecodeError, OSError) as exc:
        click.echo(f"error: {exc}", err=True)
        return EXIT_INPUT
    except (DomainError, NormalizationError) as exc:
        click.echo(f"error: {exc}", err=True)
        return EXIT_DOMAIN
    except ValueError as exc:
        click.echo(f"error: {exc}", err=True)
        return EXIT_INPUT
    return 0


def entry():
    sys.exit(main())


if __name__ == "__main__":
    entry()
