"""Projected gradient descent of the discretized uncertainty functionals.

Iterates stay on {||f||_S = 1, e(T_x) = 0, e(T_sigma) = 0}.  Search
directions are Riesz representatives of the Euclidean gradient in a
Sobolev-type metric M (the identity plus the functional's own leading
quadratic forms), with the three constraint normals removed M-orthogonally.
Each trial point is pulled back onto the manifold by canonical_normalize and
accepted by an Armijo test on the pulled-back value.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field, fields

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import splu

from .catalog import _hermite_function, catalog_get
from .freqgrid import WaveletFn, norm
from .observables import DomainError, canonical_normalize, canonical_residuals
from .uncertainty import MARGIN_FLOOR, feasibility_bounds

FUNCTIONALS = ("signal", "phase")
CANONICAL_TOL = 1e-8
MIN_STEP = 1e-14
TRAJECTORY_HEADER = ("iter", "value", "grad_norm", "res_norm", "res_ex", "res_esigma")


@dataclass(frozen=True)
class MinimizerConfig:
    step: float = 1.0
    shrink: float = 0.5
    grad_tol: float = 1e-4
    max_iters: int = 2000
    K_margin: float = 2.0
    seed: int = 0
    real: bool = False
    armijo: float = 1e-4

    def __post_init__(self):
        if not self.step > 0:
            raise ValueError("step must be positive")
        if not 0 < self.shrink < 1:
            raise ValueError("shrink must lie in (0, 1)")
        if not self.grad_tol > 0:
            raise ValueError("grad_tol must be positive")
        if int(self.max_iters) != self.max_iters or self.max_iters < 1:
            raise ValueError("max_iters must be a positive integer")
        if not self.K_margin >= 1:
            # K below the current value would make the bounds' hypothesis false
            raise ValueError("K_margin must be at least 1")
        if not 0 < self.armijo < 1:
            raise ValueError("armijo constant must lie in (0, 1)")


def load_config(path):
    """Read a flat ``key = value`` file into a MinimizerConfig."""
    types = {f.name: f.type for f in fields(MinimizerConfig)}
    kwargs = {}
    with open(path) as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            key, eq, value = (x.strip() for x in line.partition("="))
            if not eq or key not in types:
                raise ValueError(f"{path}:{lineno}: expected one of {sorted(types)} = value")
            kind = types[key]
            try:
                if kind in ("bool", bool):
                    if value.lower() not in ("true", "false", "1", "0"):
                        raise ValueError(value)
                    kwargs[key] = value.lower() in ("true", "1")
                elif kind in ("int", int):
                    kwargs[key] = int(value)
                else:
                    kwargs[key] = float(value)
            except ValueError:
                raise ValueError(f"{path}:{lineno}: bad value for {key}: {value!r}") from None
    return MinimizerConfig(**kwargs)


@dataclass(frozen=True)
class TrajectoryPoint:
    iter: int
    value: float
    grad_norm: float
    res_norm: float
    res_ex: float
    res_esigma: float
    feasible: bool = True
    min_margin: float = math.nan


@dataclass(frozen=True, eq=False)
class MinimizeResult:
    minimizer: WaveletFn
    value: float
    trajectory: tuple
    converged: bool
    iterations: int
    message: str = ""
    functional: str = "signal"

    def to_dict(self):
        last = self.trajectory[-1]
        return {"functional": self.functional, "value": self.value,
                "converged": self.converged, "iterations": self.iterations,
                "grad_norm": last.grad_norm, "res_norm": last.res_norm,
                "res_ex": last.res_ex, "res_esigma": last.res_esigma,
                "all_feasible": all(p.feasible for p in self.trajectory),
                "message": self.message}

    def write_trajectory(self, path):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(TRAJECTORY_HEADER)
            for p in self.trajectory:
                w.writerow([p.iter] + [repr(float(getattr(p, k))) for k in TRAJECTORY_HEADER[1:]])


class _Forms:
    """Sparse quadratic forms of one grid."""

    def __init__(self, grid):
        self.grid = grid
        ws, ww = grid.w_signal, grid.w_window
        s = grid.log_nodes
        D = grid.derivative_matrix.tocsr()
        Ds = grid.log_derivative_matrix.tocsr()
        self.Ws = sp.diags(ws)
        self.Ww = sp.diags(ww)
        self.tx = (D.T @ self.Ws @ D).tocsr()
        self.ts = sp.diags(s ** 2 * ws)
        self.dil = (Ds.T @ self.Ww @ Ds).tocsr()
        self.inv = ws / grid.nodes ** 2
        self.s = s
        self.ws = ws
        self.D = D
        self.Ds = Ds
        self.ts_diag = s ** 2 * ws
        self.ww = ww
        # e(T_x) form: Re v^H Ws (i D) v
        H = self.Ws @ (1j * D)
        self.ex = (H + H.conj().T).tocsr()
        self._metric = {}

    def metric(self, functional):
        if functional not in self._metric:
            M = self.Ws + self.tx + self.ts
            if functional == "phase":
                M = M + self.dil + self.Ww
            # Dirichlet at both ends: search directions keep f(omega_min) = 0
            inner = sp.csc_matrix(M)[1:-1, 1:-1]
            self._metric[functional] = (sp.csr_matrix(M), splu(sp.csc_matrix(inner)))
        return self._metric[functional]


_FORMS = {}


def _forms(grid):
    if grid not in _FORMS:
        _FORMS[grid] = _Forms(grid)
    return _FORMS[grid]


def _check_functional(functional):
    if functional not in FUNCTIONALS:
        raise ValueError(f"functional must be one of {FUNCTIONALS}, got {functional!r}")


def _fsum(x):
    # correctly rounded sums keep central differences free of summation noise
    return math.fsum(np.real(x))


def _value_and_grad(functional, v, F, need_grad=True):
    """Discrete functional at raw samples v and its Euclidean gradient.

    The gradient g packs dQ/dRe + i dQ/dIm, so dQ(v)[d] = Re(g^H d).
    """
    # sums of squares, not v^H A v: no cancellation between large terms
    dv = F.D @ v
    a2 = np.abs(v) ** 2
    q = _fsum(F.ws * np.abs(dv) ** 2) + _fsum(F.ts_diag * a2)
    g = 2 * (F.D.T @ (F.ws * dv) + F.ts_diag * v) if need_grad else None
    if functional == "phase":
        dsv = F.Ds @ v
        A = _fsum(F.ww * np.abs(dsv) ** 2)
        B = _fsum(F.inv * a2)
        N = _fsum(F.ww * a2)
        a = _fsum(F.s ** 2 * F.ww * a2)
        b = _fsum(F.s * F.ww * a2)
        q += A * B / N + (a / N - (b / N) ** 2)
        if need_grad:
            gA, gB, gN = 2 * (F.Ds.T @ (F.ww * dsv)), 2 * F.inv * v, 2 * F.ww * v
            ga, gb = 2 * F.s ** 2 * F.ww * v, 2 * F.s * F.ww * v
            g = g + (B / N) * gA + (A / N) * gB - (A * B / N ** 2) * gN
            g = g + ga / N - a * gN / N ** 2 - 2 * b * gb / N ** 2 + 2 * b * b * gN / N ** 3
    return q, g


def functional_value(functional, f):
    """Discrete L_S or L_P on the canonical manifold (no moment recentering)."""
    _check_functional(functional)
    return _value_and_grad(functional, f.values, _forms(f.grid), need_grad=False)[0]


def _require_canonical(f):
    if norm(f) == 0.0:
        raise DomainError("zero wavelet")
    res = max(canonical_residuals(f))
    if res > CANONICAL_TOL:
        raise DomainError(f"wavelet is not canonical (residual {res:.3e})")


def gradient(functional, f):
    """Euclidean gradient of the discretized functional, as a WaveletFn.

    Real part: derivative in the real parts of the samples; imaginary part:
    derivative in the imaginary parts.
    """
    _check_functional(functional)
    _require_canonical(f)
    return WaveletFn(f.grid, _value_and_grad(functional, f.values, _forms(f.grid))[1])


def project(f):
    """Nearest canonical representative: canonical_normalize without bookkeeping."""
    if norm(f) == 0.0:
        raise DomainError("cannot project the zero wavelet")
    return canonical_normalize(f)[0]


def _normals(v, F, real):
    n = [2 * F.Ws @ v, 2 * (-F.s) * (F.Ws @ v)]
    if not real:
        n.append(F.ex @ v)
    return n


def _rdot(x, y):
    return float(np.vdot(x, y).real)


def _riesz_tangent(g, v, F, functional, real):
    """Tangent Riesz gradient r_T and its M-norm."""
    M, lu = F.metric(functional)

    def solve(x):
        out = np.zeros(x.size, dtype=complex)
        out[1:-1] = lu.solve(np.ascontiguousarray(x.real[1:-1]))
        if not real:
            out[1:-1] += 1j * lu.solve(np.ascontiguousarray(x.imag[1:-1]))
        return out

    r = solve(g)
    normals = _normals(v, F, real)
    m_inv_n = [solve(x) for x in normals]
    G = np.array([[_rdot(a, b) for b in m_inv_n] for a in normals])
    c = np.linalg.solve(G, np.array([_rdot(a, r) for a in normals]))
    for cj, mn in zip(c, m_inv_n):
        r = r - cj * mn
    gn = math.sqrt(max(_rdot(r, M @ r), 0.0))
    return r, gn


def minimize(functional, f0, cfg=None, callback=None):
    """Projected gradient descent with Armijo backtracking."""
    _check_functional(functional)
    cfg = cfg or MinimizerConfig()
    f = WaveletFn(f0.grid, f0.values.real) if cfg.real else f0
    f = project(f)
    F = _forms(f.grid)

    def point(k, f, q, gn):
        res = canonical_residuals(f)
        d = feasibility_bounds(f, cfg.K_margin * q)
        ms = d.margins()
        return TrajectoryPoint(k, q, gn, *res, feasible=d.bounds_hold(MARGIN_FLOOR),
                               min_margin=min(ms) if ms else math.nan)

    v = f.values
    q, g = _value_and_grad(functional, v, F)
    r, gn = _riesz_tangent(g, v, F, functional, cfg.real)
    traj = [point(0, f, q, gn)]
    t = cfg.step
    converged, message = gn <= cfg.grad_tol, ""
    k = 0
    while not converged and k < cfg.max_iters:
        accepted = False
        while t >= MIN_STEP:
            trial = v - t * r
            if cfg.real:
                trial = trial.real
            try:
                ft = project(WaveletFn(f.grid, trial))
            except (DomainError, RuntimeError):
                t *= cfg.shrink
                continue
            qt = _value_and_grad(functional, ft.values, F, need_grad=False)[0]
            if qt <= q - cfg.armijo * t * gn ** 2 and qt < q:
                accepted = True
                break
            t *= cfg.shrink
        if not accepted:
            message = "line search step underflow"
            break
        k += 1
        f, v = ft, ft.values
        q, g = _value_and_grad(functional, v, F)
        r, gn = _riesz_tangent(g, v, F, functional, cfg.real)
        traj.append(point(k, f, q, gn))
        if callback is not None:
            callback(traj[-1])
        converged = gn <= cfg.grad_tol
        t = min(t / cfg.shrink, cfg.step)
    if not converged and not message:
        message = f"max_iters={cfg.max_iters} reached"
    return MinimizeResult(f, q, tuple(traj), bool(converged), k, message, functional)


def finite_diff_check(functional, f, h=1e-6, coords=32, seed=0, indices=None):
    """Max relative error between central differences and the analytic gradient.

    Directions are single real or imaginary sample coordinates, drawn at
    random among nodes carrying non-negligible amplitude unless ``indices``
    is given.  Entries where both sides are exactly zero count as agreement.
    """
    _check_functional(functional)
    if not 1e-8 <= h <= 1e-4:
        raise ValueError(f"h must lie in [1e-8, 1e-4], got {h}")
    _require_canonical(f)
    F = _forms(f.grid)
    v = np.array(f.values, dtype=complex)
    g = _value_and_grad(functional, v, F)[1]
    rng = np.random.default_rng(seed)
    if indices is None:
        active = np.flatnonzero(np.abs(v) >= 1e-3 * np.abs(v).max())
        indices = rng.choice(active, size=coords, replace=active.size < coords)
    parts = rng.integers(0, 2, size=len(indices))
    worst = 0.0
    for k, part in zip(indices, parts):
        unit = 1.0 if part == 0 else 1j
        e = np.zeros_like(v)
        e[k] = unit * h
        qp = _value_and_grad(functional, v + e, F, need_grad=False)[0]
        qm = _value_and_grad(functional, v - e, F, need_grad=False)[0]
        fd = (qp - qm) / (2 * h)
        an = g[k].real if part == 0 else g[k].imag
        scale = max(abs(fd), abs(an))
        if scale == 0.0:
            continue
        worst = max(worst, abs(fd - an) / scale)
    return worst


def perturbed_start(grid, seed, base="log_gaussian:tau=1", amplitude=0.1, terms=6, real=False):
    """Catalog member plus a seeded random combination of Hermite functions
    in the scale variable, projected to canonical form."""
    rng = np.random.default_rng(seed)
    f = catalog_get(base, grid)
    coef = rng.normal(size=terms) + (0 if real else 1j * rng.normal(size=terms))
    sigma = -grid.log_nodes
    bump = sum(c * _hermite_function(sigma, 1.0, k) for k, c in enumerate(coef))
    pert = grid.nodes ** -0.5 * bump
    return project(WaveletFn(grid, f.values + amplitude * pert / np.linalg.norm(coef)))

