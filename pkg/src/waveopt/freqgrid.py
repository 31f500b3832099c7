"""Log-spaced frequency grids, sampled wavelets and the calculus on them.

Everything lives on the positive half-line.  A grid carries two sets of
quadrature weights, one for ``d omega`` (the signal space) and one for
``d omega / omega`` (the window space).  Both come from the trapezoid rule in
the log variable ``s = ln omega`` with Gregory end corrections, so the window
weights are exactly ``w_signal / nodes``.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from pathlib import Path

import numpy as np
import scipy.sparse as sp

MIN_NODES = 16
GREGORY_ORDER = 6
LEFT_ENDPOINT_TOL = 1e-6

_CENTRAL = {
    2: (-1 / 2, 0.0, 1 / 2),
    4: (1 / 12, -2 / 3, 0.0, 2 / 3, -1 / 12),
    6: (-1 / 60, 3 / 20, -3 / 4, 0.0, 3 / 4, -3 / 20, 1 / 60),
}


class GridError(ValueError):
    """Invalid grid parameters or mismatched grids."""


def _bernoulli(m):
    b = [Fraction(1)]
    for k in range(1, m + 1):
        b.append(-sum(math.comb(k + 1, j) * b[j] for j in range(k)) / Fraction(k + 1))
    return b


def gregory_corrections(order=GREGORY_ORDER):
    """Endpoint corrections added to the unit-step trapezoid weights.

    The ``order`` corrections c_j satisfy sum_j c_j j^d = B_{d+1}/(d+1) for odd
    d and 0 for even d, d < order, which cancels the Euler-Maclaurin endpoint
    terms for polynomials of degree below ``order``.
    """
    bern = _bernoulli(order + 1)
    A = np.array([[1.0 if d == 0 else float(j) ** d for j in range(order)] for d in range(order)])
    rhs = np.array([float(bern[d + 1] / (d + 1)) if d % 2 else 0.0 for d in range(order)])
    return np.linalg.solve(A, rhs)


@dataclass(frozen=True)
class FreqGrid:
    omega_min: float
    omega_max: float
    n: int
    nodes: np.ndarray = field(init=False, repr=False, compare=False)
    log_nodes: np.ndarray = field(init=False, repr=False, compare=False)
    w_signal: np.ndarray = field(init=False, repr=False, compare=False)
    w_window: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if not self.omega_min > 0:
            raise GridError(f"omega_min must be positive, got {self.omega_min}")
        if not self.omega_max > self.omega_min:
            raise GridError(f"omega_max ({self.omega_max}) must exceed omega_min ({self.omega_min})")
        if int(self.n) != self.n or self.n < MIN_NODES:
            raise GridError(f"need at least {MIN_NODES} nodes, got {self.n}")
        s = np.linspace(math.log(self.omega_min), math.log(self.omega_max), int(self.n))
        nodes = np.exp(s)
        nodes[0], nodes[-1] = self.omega_min, self.omega_max
        u = np.ones(self.n)
        u[0] = u[-1] = 0.5
        c = gregory_corrections()
        u[: c.size] += c
        u[-c.size:] += c[::-1]
        w_signal = self.step * u * nodes
        for name, arr in [("log_nodes", s), ("nodes", nodes), ("w_signal", w_signal),
                          ("w_window", w_signal / nodes)]:
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    @property
    def step(self):
        """Spacing of the log nodes."""
        return (math.log(self.omega_max) - math.log(self.omega_min)) / (self.n - 1)

    def weights(self, space):
        if space == "signal":
            return self.w_signal
        if space == "window":
            return self.w_window
        raise ValueError(f"unknown space {space!r}; expected 'signal' or 'window'")

    @cached_property
    def log_derivative_matrix(self):
        """Sparse d/ds on the log nodes: 6th-order central in the interior,
        lower-order central near the ends, one-sided 2nd order at the ends."""
        n, h = self.n, self.step
        rows, cols, vals = [], [], []
        for i in range(n):
            if i == 0:
                stencil = [(0, -1.5), (1, 2.0), (2, -0.5)]
            elif i == n - 1:
                stencil = [(0, 1.5), (-1, -2.0), (-2, 0.5)]
            else:
                order = 6
                while i < order // 2 or i > n - 1 - order // 2:
                    order -= 2
                coef = _CENTRAL[order]
                half = order // 2
                stencil = [(j - half, c) for j, c in enumerate(coef) if c != 0.0]
            for off, v in stencil:
                rows.append(i)
                cols.append(i + off)
                vals.append(v / h)
        return sp.csr_matrix((vals, (rows, cols)), shape=(n, n))

    @cached_property
    def derivative_matrix(self):
        """Sparse d/d omega, i.e. diag(1/omega) @ d/ds."""
        return sp.diags(1.0 / self.nodes) @ self.log_derivative_matrix

    def to_dict(self):
        return {"omega_min": float(self.omega_min), "omega_max": float(self.omega_max),
                "n": int(self.n), "spacing": "log"}


def build_grid(omega_min, omega_max, n):
    """Log-uniform grid on [omega_min, omega_max] with ``n`` nodes."""
    return FreqGrid(float(omega_min), float(omega_max), int(n))


@dataclass(frozen=True, eq=False)
class WaveletFn:
    """Complex samples of a function on a FreqGrid, zero outside it."""

    grid: FreqGrid
    values: np.ndarray

    def __post_init__(self):
        v = np.array(self.values, dtype=complex)
        if v.shape != (self.grid.n,):
            raise GridError(f"expected {self.grid.n} samples, got shape {v.shape}")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    def _check(self, other):
        if not isinstance(other, WaveletFn):
            return NotImplemented
        if other.grid != self.grid:
            raise GridError("wavelets live on different grids")
        return other

    def __add__(self, other):
        other = self._check(other)
        if other is NotImplemented:
            return other
        return WaveletFn(self.grid, self.values + other.values)

    def __sub__(self, other):
        other = self._check(other)
        if other is NotImplemented:
            return other
        return WaveletFn(self.grid, self.values - other.values)

    def __mul__(self, c):
        if isinstance(c, WaveletFn):
            return NotImplemented
        return WaveletFn(self.grid, complex(c) * self.values)

    __rmul__ = __mul__

    def __neg__(self):
        return WaveletFn(self.grid, -self.values)

    def with_values(self, values):
        return WaveletFn(self.grid, values)

    @property
    def is_real(self):
        return not np.any(self.values.imag)


def zeros(grid):
    return WaveletFn(grid, np.zeros(grid.n, dtype=complex))


def same_grid(f, g):
    if f.grid != g.grid:
        raise GridError("wavelets live on different grids")


def inner_product(f, g, space="signal"):
    """<f, g> = sum f conj(g) w in the chosen space."""
    same_grid(f, g)
    return complex(np.sum(f.values * np.conj(g.values) * f.grid.weights(space)))


def norm(f, space="signal"):
    return math.sqrt(max(inner_product(f, f, space).real, 0.0))


def derivative(f):
    """f'(omega) by finite differences in s = ln(omega) and the chain rule."""
    return WaveletFn(f.grid, f.grid.derivative_matrix @ f.values)


def log_warp(f):
    """Return (s, f(e^s)) on the equi-spaced log nodes.

    The L2(ds) norm of the result equals the window-space norm of ``f``.
    """
    return f.grid.log_nodes.copy(), f.values.copy()


def scale_transform(f):
    """Return (sigma, e^{-sigma/2} f(e^{-sigma})) with sigma increasing.

    Unitary from the signal space onto L2(d sigma).
    """
    sigma = -f.grid.log_nodes[::-1]
    return sigma, np.exp(-sigma / 2) * f.values[::-1]


def left_endpoint_ok(f, tol=LEFT_ENDPOINT_TOL):
    """Discrete stand-in for f(0) = 0: the first sample is negligible."""
    return abs(f.values[0]) <= tol * norm(f, "signal")


def sample(grid, func):
    return WaveletFn(grid, func(grid.nodes))


def indicator(grid, a, b):
    """Indicator of [a, b] sampled so that |f_k|^2 is the fraction of node k's
    log-cell covered by [a, b]; window-space integrals of |f|^2 are then exact."""
    s = grid.log_nodes
    h = grid.step
    lo = np.maximum(s - h / 2, math.log(a))
    hi = np.minimum(s + h / 2, math.log(b))
    cover = np.clip(hi - lo, 0.0, None) / h
    return WaveletFn(grid, np.sqrt(cover))


def coarsen(f):
    """Every other sample of ``f`` on the matching half-resolution grid."""
    g = f.grid
    last = g.n - 1 if g.n % 2 else g.n - 2
    idx = np.arange(0, last + 1, 2)
    coarse = FreqGrid(g.omega_min, float(g.nodes[last]), idx.size)
    return WaveletFn(coarse, f.values[idx])


def wavelet_to_dict(f):
    return {"grid": f.grid.to_dict(),
            "values": [[float(v.real), float(v.imag)] for v in f.values]}


def wavelet_from_dict(data):
    try:
        gd = data["grid"]
        spacing = gd.get("spacing", "log")
        values = data["values"]
    except (KeyError, TypeError, AttributeError) as exc:
        raise GridError(f"malformed wavelet document: {exc}") from None
    if spacing != "log":
        raise GridError(f"unsupported grid spacing {spacing!r}")
    grid = build_grid(gd["omega_min"], gd["omega_max"], gd["n"])
    arr = np.asarray(values, dtype=float)
    if arr.ndim != 2 or arr.shape[1] != 2:
        raise GridError("values must be a list of [re, im] pairs")
    if arr.shape[0] != grid.n:
        raise GridError(f"grid has {grid.n} nodes but {arr.shape[0]} values were given")
    return WaveletFn(grid, arr[:, 0] + 1j * arr[:, 1])


def save_wavelet(f, path):
    Path(path).write_text(json.dumps(wavelet_to_dict(f)) + "\n")


def load_wavelet(path):
    try:
        data = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise GridError(f"{path}: not valid JSON ({exc})") from None
    return wavelet_from_dict(data)
