"""Wavelet transform, ambiguity function and the direct phase-space uncertainty.

For a fixed log-dilation alpha the transform <s, pi(alpha, beta) f> is a
Fourier integral in omega of s(w) conj(e^{alpha/2} f(e^alpha w)), evaluated
at the beta nodes.  The integrand is sampled on the log grid, so the sweep
uses Filon-type weights (exact oscillatory integrals of the piecewise-linear
interpolant) rescaled to agree with the grid's Gregory weights at beta = 0.
"""

from __future__ import annotations

import csv
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .freqgrid import GridError, norm, same_grid
from .observables import DomainError, extend_samples, canonical_normalize
from .uncertainty import UncertaintyReport, pullback_terms, quadratic_terms

BOUNDARY_TOL = 1e-4
BOUNDARY_BAND = 0.05
ALPHA_SPREADS = 8.0
BETA_SPREADS = 6.0
_SMALL_THETA = 1e-2


def worker_count():
    """Thread cap from WAVEOPT_THREADS (default: CPU count)."""
    raw = os.environ.get("WAVEOPT_THREADS")
    if raw:
        try:
            return max(1, int(raw))
        except ValueError:
            pass
    return os.cpu_count() or 1


def trapezoid_weights(nodes):
    """Endpoint-halved trapezoid weights for equi-spaced nodes."""
    nodes = np.asarray(nodes, dtype=float)
    if nodes.size < 2:
        return np.ones_like(nodes)
    w = np.full(nodes.size, nodes[1] - nodes[0])
    w[[0, -1]] /= 2
    return w


@dataclass(frozen=True, eq=False)
class AmbiguitySurface:
    alpha_nodes: np.ndarray
    beta_nodes: np.ndarray
    values: np.ndarray
    haar_weights: np.ndarray = field(init=False, repr=False)
    # K_f / normalization is the unit-norm ambiguity
    normalization: float = 1.0

    def __post_init__(self):
        a = np.asarray(self.alpha_nodes, dtype=float)
        b = np.asarray(self.beta_nodes, dtype=float)
        object.__setattr__(self, "alpha_nodes", a)
        object.__setattr__(self, "beta_nodes", b)
        hw = (np.exp(-a) * trapezoid_weights(a))[:, None] * trapezoid_weights(b)[None, :]
        object.__setattr__(self, "haar_weights", hw)

    @property
    def normalized(self):
        return self.values / self.normalization

    def l2_norm(self, normalized=True):
        v = self.normalized if normalized else self.values
        return math.sqrt(float(np.sum(np.abs(v) ** 2 * self.haar_weights)))

    def value_at(self, alpha, beta):
        i = int(np.argmin(np.abs(self.alpha_nodes - alpha)))
        j = int(np.argmin(np.abs(self.beta_nodes - beta)))
        return complex(self.values[i, j])

    def to_csv(self, path, normalized=False):
        v = self.normalized if normalized else self.values
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["alpha", "beta", "re", "im", "haar_weight"])
            for i, a in enumerate(self.alpha_nodes):
                for j, b in enumerate(self.beta_nodes):
                    z = v[i, j]
                    w.writerow([repr(float(a)), repr(float(b)), repr(float(z.real)),
                                repr(float(z.imag)), repr(float(self.haar_weights[i, j]))])


def _panel_moments(theta):
    # J0 = int_0^1 e^{i theta t} dt, J1 = int_0^1 t e^{i theta t} dt
    small = np.abs(theta) < _SMALL_THETA
    th = np.where(small, 1.0, theta)
    e = np.exp(1j * th)
    j0 = (e - 1) / (1j * th)
    j1 = e / (1j * th) + (e - 1) / th ** 2
    t2 = theta ** 2
    j0s = 1 + 1j * theta / 2 - t2 / 6 - 1j * theta * t2 / 24 + t2 * t2 / 120
    j1s = 0.5 + 1j * theta / 3 - t2 / 8 - 1j * theta * t2 / 30 + t2 * t2 / 144
    return np.where(small, j0s, j0), np.where(small, j1s, j1)


def sweep_weights(grid, beta_nodes):
    """Matrix W with sum_k g_k W[k, j] ~ int g(w) e^{i beta_j w} dw."""
    w = grid.nodes
    b = np.asarray(beta_nodes, dtype=float)[None, :]
    d = np.diff(w)[:, None]
    j0, j1 = _panel_moments(b * d)
    base = np.exp(1j * b * w[:-1, None]) * d
    hats = np.zeros((w.size, b.size), dtype=complex)
    hats[:-1] += base * (j0 - j1)
    hats[1:] += base * j1
    hat_mass = np.zeros(w.size)
    hat_mass[:-1] += np.diff(w) / 2
    hat_mass[1:] += np.diff(w) / 2
    return hats * (grid.w_signal / hat_mass)[:, None]


def _check_nodes(alpha_nodes, beta_nodes):
    a = np.atleast_1d(np.asarray(alpha_nodes, dtype=float))
    b = np.atleast_1d(np.asarray(beta_nodes, dtype=float))
    if a.size == 0 or b.size == 0:
        raise ValueError("alpha and beta node lists must be non-empty")
    if not (np.all(np.isfinite(a)) and np.all(np.isfinite(b))):
        raise ValueError("node lists must be finite")
    return a, b


def _dilated_rows(f, alpha):
    x = f.grid.log_nodes[None, :] + alpha[:, None]
    return extend_samples(f.values, f.grid, x) * np.exp(alpha / 2)[:, None]


def wavelet_transform(f, s, alpha_nodes, beta_nodes, workers=None):
    """Surface of W_f[s](alpha, beta) = <s, pi(alpha, beta) f>.

    Rows are independent and computed in parallel chunks.
    """
    same_grid(f, s)
    a, b = _check_nodes(alpha_nodes, beta_nodes)
    W = sweep_weights(f.grid, b)
    workers = workers or worker_count()
    chunks = [c for c in np.array_split(np.arange(a.size), min(workers, a.size)) if c.size]

    def row_block(idx):
        G = s.values[None, :] * np.conj(_dilated_rows(f, a[idx]))
        return G @ W

    if len(chunks) == 1:
        blocks = [row_block(chunks[0])]
    else:
        with ThreadPoolExecutor(max_workers=len(chunks)) as pool:
            blocks = list(pool.map(row_block, chunks))
    return AmbiguitySurface(a, b, np.vstack(blocks))


def ambiguity(f, alpha_nodes, beta_nodes, workers=None):
    """K_f = W_f[f] with the factor that makes K_f / normalization unit-norm.

    The L2(e^{-alpha} d alpha d beta) norm of K_f is sqrt(2 pi) ||f||_S ||f||_W
    in the angular-frequency convention.
    """
    ns, nw = norm(f, "signal"), norm(f, "window")
    if ns == 0.0 or nw == 0.0:
        raise DomainError("ambiguity needs non-zero signal and window norms")
    surf = wavelet_transform(f, f, alpha_nodes, beta_nodes, workers)
    return AmbiguitySurface(surf.alpha_nodes, surf.beta_nodes, surf.values,
                            normalization=math.sqrt(2 * math.pi) * ns * nw)


def auto_nodes(f, n_alpha=512, n_beta=512):
    """Surface nodes sized from the pull-back variances of canonical f.

    alpha: mean +- 8 spreads.  beta: +- 6 spreads widened by sqrt(n_beta/32),
    since |K|^2 has slowly decaying beta tails and a finer surface can afford
    a wider window at the same step.
    """
    q = quadratic_terms(f)
    t = pullback_terms(q)
    v_alpha = t["scale_var"] + t["window_scale_var"]
    v_beta = t["time_var"] + t["window_dilation"]
    e_alpha = -q["log_w"] / q["window_norm2"]
    ra = ALPHA_SPREADS * math.sqrt(v_alpha)
    rb = BETA_SPREADS * math.sqrt(v_beta) * math.sqrt(max(n_beta, 32) / 32)
    return (np.linspace(e_alpha - ra, e_alpha + ra, n_alpha),
            np.linspace(-rb, rb, n_beta))


def _band_mass(p, band):
    k = max(1, int(math.ceil(band * p.size)))
    return float(p[:k].sum() + p[-k:].sum())


def phase_uncertainty_direct(f, alpha_nodes=None, beta_nodes=None, n_alpha=512,
                             n_beta=512, strict=True, workers=None):
    """L_P as the alpha- plus beta-variance of the normalized ambiguity.

    f is first brought to canonical form.  The boundary mass is the share of
    |K|^2 d mu in the outer 5% band of either axis; above 1e-4 the surface
    does not cover the ambiguity and ``strict`` raises.
    """
    fc = canonical_normalize(f)[0]
    if alpha_nodes is None or beta_nodes is None:
        an, bn = auto_nodes(fc, n_alpha, n_beta)
        alpha_nodes = an if alpha_nodes is None else alpha_nodes
        beta_nodes = bn if beta_nodes is None else beta_nodes
    surf = ambiguity(fc, alpha_nodes, beta_nodes, workers)
    a, b = surf.alpha_nodes, surf.beta_nodes
    if a.size < 3 or b.size < 3:
        raise GridError("direct evaluation needs at least 3 nodes per axis")
    p = np.abs(surf.normalized) ** 2 * surf.haar_weights
    z = p.sum()
    p /= z
    pa, pb = p.sum(axis=1), p.sum(axis=0)
    ma, mb = float(pa @ a), float(pb @ b)
    va = float(pa @ (a - ma) ** 2)
    vb = float(pb @ (b - mb) ** 2)
    boundary = max(_band_mass(pa, BOUNDARY_BAND), _band_mass(pb, BOUNDARY_BAND))
    diag = {"alpha_mean": ma, "beta_mean": mb, "boundary_mass": boundary,
            "surface_norm": math.sqrt(z), "n_alpha": int(a.size), "n_beta": int(b.size),
            "alpha_range": [float(a[0]), float(a[-1])], "beta_range": [float(b[0]), float(b[-1])]}
    if strict and boundary > BOUNDARY_TOL:
        raise DomainError(f"surface does not cover the ambiguity: boundary mass "
                          f"{boundary:.3e} > {BOUNDARY_TOL:g}")
    terms = {"alpha_var": va, "beta_var": vb}
    return UncertaintyReport("phase_direct", va + vb, terms, {}, diag)
