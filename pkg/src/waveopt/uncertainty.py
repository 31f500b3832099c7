"""Signal-space and phase-space uncertainty, domain membership and the
quantitative feasibility bounds used to monitor minimizing sequences."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

import numpy as np

from .freqgrid import coarsen, left_endpoint_ok, norm
from .observables import (
    DomainError,
    canonical_residuals,
    moments,
)

CANONICAL_TOL = 1e-8
REFINEMENT_TOL = 1e-4
MARGIN_FLOOR = -1e-9
TERM_NAMES = ("time_var", "scale_var", "window_dilation", "window_scale_var")


@dataclass
class UncertaintyReport:
    functional: str
    total: float
    terms: dict
    constraint_residuals: dict = field(default_factory=dict)
    diagnostics: dict = field(default_factory=dict)

    def to_flat(self):
        """Flat JSON-ready dict with fixed key order."""
        out = {"functional": self.functional, "total": self.total}
        out.update(self.terms)
        out.update({f"residual_{k}": v for k, v in self.constraint_residuals.items()})
        for k, v in self.diagnostics.items():
            out[f"diag_{k}"] = v
        return out


@dataclass
class FeasibilityDiagnostics:
    K: float = math.nan
    member: bool = False
    in_KS: bool = False
    in_KP: bool = False
    residuals: dict = field(default_factory=dict)
    terms: dict = field(default_factory=dict)
    pointwise_bound_margin: float = math.nan
    window_norm_bound_margin: float = math.nan
    inv_omega_lower_margin: float = math.nan
    omega_deriv_bound_margin: float = math.nan
    chebyshev_tail: list = field(default_factory=list)
    failures: list = field(default_factory=list)

    def margins(self):
        vals = [self.pointwise_bound_margin, self.window_norm_bound_margin,
                self.inv_omega_lower_margin, self.omega_deriv_bound_margin]
        vals += [bound - tail for _, tail, bound in self.chebyshev_tail]
        return [v for v in vals if not math.isnan(v)]

    def bounds_hold(self, floor=MARGIN_FLOOR):
        return all(m >= floor for m in self.margins())

    def to_dict(self):
        return asdict(self)


def quadratic_terms(f):
    """Raw quadratic quantities of f on its grid (no normalization).

    Keys: norm2, window_norm2, tx2 = ||f'||^2, ts2 = ||ln(w) f||^2,
    dil2 = ||w f'||_W^2, inv2 = ||f/w||^2, ex, es (unnormalized signal
    expected time and scale), log_w (= <ln w f, f>_W), log2_w.
    """
    g = f.grid
    v = f.values
    a2 = np.abs(v) ** 2
    dv = g.derivative_matrix @ v
    dsv = g.log_derivative_matrix @ v
    s = g.log_nodes
    ws, ww = g.w_signal, g.w_window
    return {
        "norm2": float(np.sum(a2 * ws)),
        "window_norm2": float(np.sum(a2 * ww)),
        "tx2": float(np.sum(np.abs(dv) ** 2 * ws)),
        "ts2": float(np.sum(s ** 2 * a2 * ws)),
        "dil2": float(np.sum(np.abs(dsv) ** 2 * ww)),
        "inv2": float(np.sum(a2 / g.nodes ** 2 * ws)),
        "ex": float(np.sum((1j * dv * np.conj(v) * ws)).real),
        "es": float(np.sum(-s * a2 * ws)),
        "log_w": float(np.sum(s * a2 * ww)),
        "log2_w": float(np.sum(s ** 2 * a2 * ww)),
    }


def pullback_terms(q):
    """The four phase-space terms from ``quadratic_terms`` output."""
    nw = q["window_norm2"]
    m = q["log_w"] / nw
    return {
        "time_var": q["tx2"],
        "scale_var": q["ts2"],
        "window_dilation": q["dil2"] * q["inv2"] / nw,
        "window_scale_var": max(q["log2_w"] / nw - m * m, 0.0),
    }


def _residuals(f):
    r = canonical_residuals(f)
    return {"norm": r[0], "ex": r[1], "esigma": r[2]}


def admissibility_constant(f):
    """int |f|^2 / w dw, i.e. the squared window norm."""
    return norm(f, "window") ** 2


def signal_uncertainty(f, assume_canonical=False):
    """L_S(f).

    The general form e^{-2 e(T_sigma)} v(T_x) + v(T_sigma) (moments of f/||f||)
    is used unless ``assume_canonical`` is set and f passes the canonical
    residual check, in which case ||T_x f||^2 + ||T_sigma f||^2 is returned.
    """
    if norm(f) == 0.0:
        raise DomainError("zero-norm wavelet")
    res = _residuals(f)
    diag = {"left_endpoint_ok": bool(left_endpoint_ok(f))}
    if assume_canonical and max(res.values()) <= CANONICAL_TOL:
        q = quadratic_terms(f)
        terms = {"time_var": q["tx2"], "scale_var": q["ts2"]}
        diag["path"] = "canonical"
    else:
        mt = moments(f, "time")
        ms = moments(f, "scale")
        terms = {"time_var": math.exp(-2 * ms.expected) * mt.variance,
                 "scale_var": ms.variance}
        diag["path"] = "general"
    return UncertaintyReport("signal", sum(terms.values()), terms, res, diag)


def square_integrability(f):
    """Relative change of the four D_P quadratures when the grid is halved."""
    fine = quadratic_terms(f)
    coarse = quadratic_terms(coarsen(f))
    out = {}
    for key in ("tx2", "dil2", "inv2", "ts2"):
        a, b = fine[key], coarse[key]
        out[key] = abs(a - b) / max(abs(a), 1e-300) if math.isfinite(a) else math.inf
    return out


def phase_uncertainty_pullback(f, check_refinement=True):
    """L_P(f) from the window function (f must be canonical)."""
    res = _residuals(f)
    if max(res.values()) > CANONICAL_TOL:
        raise DomainError(f"pull-back formula needs a canonical wavelet; residuals {res}")
    q = quadratic_terms(f)
    if q["window_norm2"] == 0.0:
        raise DomainError("zero window norm")
    terms = pullback_terms(q)
    diag = {"left_endpoint_ok": bool(left_endpoint_ok(f))}
    if check_refinement:
        ref = square_integrability(f)
        diag["refinement_change"] = max(ref.values())
        diag["in_DP"] = bool(diag["refinement_change"] <= REFINEMENT_TOL and diag["left_endpoint_ok"])
        if not diag["left_endpoint_ok"]:
            raise DomainError("wavelet is not in D_P: it does not vanish at omega_min "
                              "(widen the grid towards zero)")
        if not diag["in_DP"]:
            raise DomainError("wavelet is not in D_P: quadratures are not refinement-stable "
                              f"(max relative change {diag['refinement_change']:.3e})")
    return UncertaintyReport("phase", sum(terms.values()), terms, res, diag)


def feasibility_bounds(f, M, alphas=(1.0, 2.0, 3.0)):
    """Check the a-priori bounds a canonical f with ||T_x f||^2 <= M satisfies.

    pointwise  |f(w)| <= sqrt(M w)
    window     ||f||_W^2 <= M + 1
    inverse    ||f/w||^2 >= 1/(2 e^2)
    dilation   ||w f'||_W^2 <= 2 e^2 M (M + 1)   (only if the product term <= M)
    Chebyshev  int_{[e^-a, e^a]^c} |f|^2 <= K / a^2 with K = ||T_sigma f||^2
    """
    res = _residuals(f)
    if max(res.values()) > CANONICAL_TOL:
        raise DomainError("feasibility bounds apply to canonical wavelets only")
    q = quadratic_terms(f)
    g = f.grid
    d = FeasibilityDiagnostics(K=float(M), residuals=res)
    d.pointwise_bound_margin = float(np.min(math.sqrt(M) * np.sqrt(g.nodes) - np.abs(f.values)))
    d.window_norm_bound_margin = (M + 1) - q["window_norm2"]
    d.inv_omega_lower_margin = q["inv2"] - 1 / (2 * math.e ** 2)
    product = q["dil2"] * q["inv2"] / q["window_norm2"]
    if q["tx2"] <= M and product <= M:
        d.omega_deriv_bound_margin = 2 * math.e ** 2 * M * (M + 1) - q["dil2"]
    K = q["ts2"]
    mass = np.abs(f.values) ** 2 * g.w_signal
    for a in alphas:
        tail = float(mass[np.abs(g.log_nodes) > a].sum())
        d.chebyshev_tail.append((float(a), tail, K / a ** 2))
    d.terms = {"tx2": q["tx2"], "ts2": q["ts2"], "product": product,
               "window_norm2": q["window_norm2"], "inv2": q["inv2"], "dil2": q["dil2"]}
    d.failures = [name for name, m in [
        ("pointwise", d.pointwise_bound_margin), ("window_norm", d.window_norm_bound_margin),
        ("inv_omega", d.inv_omega_lower_margin), ("omega_deriv", d.omega_deriv_bound_margin),
    ] if m < MARGIN_FLOOR]
    d.failures += [f"chebyshev@{a:g}" for a, t, b in d.chebyshev_tail if b - t < MARGIN_FLOOR]
    d.member = not d.failures
    return d


def domain_membership(f, which, K=None):
    """Evaluate every defining condition of dom_LS, D_P, K_S or K_P.

    Never raises for feasibility questions; the verdict is in ``member`` and
    the violated conditions in ``failures``.
    """
    if which not in ("dom_LS", "D_P", "K_S", "K_P"):
        raise ValueError(f"unknown set {which!r}")
    if which in ("K_S", "K_P") and not (K is not None and K > 0):
        raise ValueError("K must be positive for the K-sets")
    d = FeasibilityDiagnostics(K=math.nan if K is None else float(K))
    nf = norm(f)
    if nf == 0.0:
        d.failures = ["zero_norm"]
        return d
    q = quadratic_terms(f)
    res = _residuals(f)
    d.residuals = res
    d.terms = pullback_terms(q) if q["window_norm2"] > 0 else {}
    fails = []
    if not left_endpoint_ok(f):
        fails.append("left_endpoint")
    if not all(math.isfinite(v) for v in q.values()):
        fails.append("non_finite")
    if which != "dom_LS":
        fails += [f"residual_{k}" for k, v in res.items() if v > CANONICAL_TOL]
    if which in ("D_P", "K_P"):
        ref = square_integrability(f)
        fails += [f"refinement_{k}" for k, v in ref.items() if v > REFINEMENT_TOL]
    if which in ("K_S", "K_P"):
        if q["tx2"] > K:
            fails.append("time_var>K")
        if q["ts2"] > K:
            fails.append("scale_var>K")
    if which == "K_P":
        t = d.terms
        if t.get("window_dilation", math.inf) > K:
            fails.append("window_dilation>K")
        if t.get("window_scale_var", math.inf) > K:
            fails.append("window_scale_var>K")
    d.failures = fails
    d.member = not fails
    if which in ("K_S", "K_P"):
        base_ok = not [x for x in fails if not x.startswith("window_")]
        d.in_KS = base_ok and not [x for x in fails if x.startswith("refinement_")]
        d.in_KP = d.member if which == "K_P" else False
    return d
