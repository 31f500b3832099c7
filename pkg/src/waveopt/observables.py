"""Time and scale observables, the affine group action and canonical form.

Conventions (frequency domain, angular frequency):

    T_x f(w)        = i f'(w)
    T_sigma f(w)    = -ln(w) f(w)
    pi(a, b) f(w)   = exp(-i w b) exp(a/2) f(exp(a) w)

With the angular-frequency phase the commutation relations
pi_1(a)* T_sigma pi_1(a) = T_sigma + a and pi_2(b)* T_x pi_2(b) = T_x + b hold
exactly, so expected scale shifts by ``a`` and expected time by ``b``.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.interpolate import CubicSpline

from .freqgrid import (
    WaveletFn,
    inner_product,
    left_endpoint_ok,
    norm,
)

VARIANCE_FLOOR = 1e-12
CANONICAL_TOL = 1e-8
_CANONICAL_TARGET = 1e-11
MAX_NORMALIZE_ROUNDS = 5


class DomainWarning(UserWarning):
    """A wavelet fails a (non-fatal) domain check."""


class DomainError(ValueError):
    """A wavelet is outside the domain an operation requires."""


class NormalizationError(RuntimeError):
    """Moment zeroing did not converge."""


@dataclass(frozen=True)
class GroupElement:
    """Affine group point: log-dilation ``alpha`` and translation ``beta``."""

    alpha: float = 0.0
    beta: float = 0.0

    def __post_init__(self):
        if not (math.isfinite(self.alpha) and math.isfinite(self.beta)):
            raise ValueError("group parameters must be finite")

    def compose(self, other):
        """Element acting as ``self`` after ``other``: pi(self) pi(other)."""
        return GroupElement(self.alpha + other.alpha,
                            self.beta + math.exp(self.alpha) * other.beta)

    def inverse(self):
        return GroupElement(-self.alpha, -math.exp(-self.alpha) * self.beta)

    @property
    def is_identity(self):
        return self.alpha == 0.0 and self.beta == 0.0


IDENTITY = GroupElement()


@dataclass(frozen=True)
class MomentPair:
    expected: float
    variance: float


def apply_time(f):
    """T_x f = i f'.  Warns (does not raise) when f(omega_min) is not negligible."""
    if not left_endpoint_ok(f):
        warnings.warn("wavelet does not vanish at the left grid endpoint; "
                      "it is outside the domain of the time observable", DomainWarning,
                      stacklevel=2)
    return _signal_time(f)


def _signal_time(f):
    return WaveletFn(f.grid, 1j * (f.grid.derivative_matrix @ f.values))


def apply_scale(f):
    return WaveletFn(f.grid, -f.grid.log_nodes * f.values)


def _window_time(f):
    # i omega d/d omega is i d/ds on the log nodes
    return WaveletFn(f.grid, 1j * (f.grid.log_derivative_matrix @ f.values))


def _operator(observable, space):
    if observable == "time":
        return _window_time if space == "window" else _signal_time
    if observable == "scale":
        return apply_scale
    raise ValueError(f"unknown observable {observable!r}; expected 'time' or 'scale'")


def moments(f, observable, space="signal"):
    """Expected value and variance of ``observable`` for f / ||f|| in ``space``."""
    nf = norm(f, space)
    if nf == 0.0:
        raise DomainError("zero-norm wavelet has no moments")
    fh = f * (1.0 / nf)
    Tf = _operator(observable, space)(fh)
    e = inner_product(Tf, fh, space).real
    v = norm(Tf - e * fh, space) ** 2
    if v < 0 and v > -VARIANCE_FLOOR:
        v = 0.0
    return MomentPair(e, v)


def extend_samples(values, grid, x):
    """Samples at log-frequencies x: cubic spline on the grid, linear in omega
    towards f(0) = 0 below it, zero above it."""
    s = grid.log_nodes
    out = np.zeros(x.shape, dtype=complex)
    inside = (x >= s[0]) & (x <= s[-1])
    if np.any(inside):
        out[inside] = CubicSpline(s, values, bc_type="not-a-knot")(x[inside])
    below = x < s[0]
    out[below] = values[0] * np.exp(x[below] - s[0])
    return out


def _dilate(values, grid, alpha):
    """exp(alpha/2) f(exp(alpha) w) on the grid nodes."""
    if alpha == 0.0:
        return values.copy()
    return math.exp(alpha / 2) * extend_samples(values, grid, grid.log_nodes + alpha)


def lost_fraction(f, alpha):
    """Fraction of the signal-space mass of f that pi(alpha, .) pushes off the grid."""
    s = f.grid.log_nodes
    w = f.grid.w_signal
    mass = np.abs(f.values) ** 2 * w
    total = mass.sum()
    if total == 0.0:
        return 0.0
    # output node s_k samples f at s_k + alpha
    kept = (s >= s[0] + alpha) & (s <= s[-1] + alpha)
    return float(mass[~kept].sum() / total)


def group_action(g, f, warn=True):
    """Sampled pi(alpha, beta) f."""
    if warn and g.alpha != 0.0 and lost_fraction(f, g.alpha) > 0.01:
        warnings.warn(f"dilation by alpha={g.alpha} pushes more than 1% of the "
                      "wavelet's mass off the grid", DomainWarning, stacklevel=2)
    vals = _dilate(f.values, f.grid, g.alpha)
    if g.beta != 0.0:
        vals = vals * np.exp(-1j * f.grid.nodes * g.beta)
    return WaveletFn(f.grid, vals)


def commutation_check(f, alpha, beta):
    """Largest relative residual of the two canonical commutation relations."""
    nf = norm(f)
    if nf == 0.0:
        return 0.0
    d = GroupElement(alpha, 0.0)
    lhs = group_action(d.inverse(), apply_scale(group_action(d, f, warn=False)), warn=False)
    rhs = apply_scale(f) + alpha * f
    r1 = norm(lhs - rhs) / nf
    t = GroupElement(0.0, beta)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", DomainWarning)
        lhs = group_action(t.inverse(), apply_time(group_action(t, f)))
        rhs = apply_time(f) + beta * f
    r2 = norm(lhs - rhs) / nf
    return max(r1, r2)


def canonical_residuals(f):
    """(| ||f|| - 1 |, |e(T_x)|, |e(T_sigma)|) in the signal space."""
    nf = norm(f)
    if nf == 0.0:
        return (1.0, math.inf, math.inf)
    fh = f * (1.0 / nf)
    ex = inner_product(_signal_time(fh), fh).real
    es = inner_product(apply_scale(fh), fh).real
    return (abs(nf - 1.0), abs(ex), abs(es))


def is_canonical(f, tol=CANONICAL_TOL):
    return max(canonical_residuals(f)) <= tol


def canonical_normalize(f):
    """Map f to unit norm and zero expected time and scale.

    Returns ``(f_N, g, c)`` with f_N = c * pi(g) f.  Applies the closed-form
    normalization (1/||f||) pi(e(T_sigma), e(T_x))^{-1} f and repeats it to
    absorb interpolation drift.
    """
    if norm(f) == 0.0:
        raise DomainError("cannot normalize the zero wavelet")
    total_g = IDENTITY
    total_c = 1.0
    cur = f
    for _ in range(MAX_NORMALIZE_ROUNDS):
        if max(canonical_residuals(cur)) <= _CANONICAL_TARGET:
            return cur, total_g, total_c
        es = moments(cur, "scale").expected
        ex = moments(cur, "time").expected
        g = GroupElement(es, ex).inverse()
        moved = group_action(g, cur, warn=False)
        c = 1.0 / norm(moved)
        cur = moved * c
        total_g = g.compose(total_g)
        total_c *= c
    res = max(canonical_residuals(cur))
    if res > CANONICAL_TOL:
        raise NormalizationError(f"moment zeroing left residual {res:.3e} after "
                                 f"{MAX_NORMALIZE_ROUNDS} rounds")
    return cur, total_g, total_c
