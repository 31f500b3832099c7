"""Closed-form seed wavelets.

All families are real-valued.  ``log_gaussian`` and ``warped_hermite`` are
defined in the scale space, f~(sigma) = e^{-sigma/2} f(e^{-sigma}), as
(normalized) Hermite functions of sigma / tau, so their scale moments are
exact Gaussian moments: e(T_sigma) = 0 and v(T_sigma) = tau^2 (k + 1/2).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import eval_hermite

from .freqgrid import WaveletFn, left_endpoint_ok
from .observables import canonical_normalize

SPAN_UNITS = 6.0

FAMILIES = {
    "log_gaussian": {"tau": 1.0},
    "bump": {"a": 1.0, "b": 2.0},
    "warped_hermite": {"order": 1, "tau": 1.0},
}


class CatalogError(ValueError):
    pass


@dataclass(frozen=True)
class CatalogSpec:
    family: str
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise CatalogError(f"unknown family {self.family!r}; known: {', '.join(FAMILIES)}")
        unknown = set(self.params) - set(FAMILIES[self.family])
        if unknown:
            raise CatalogError(f"unknown parameters for {self.family}: {sorted(unknown)}")
        p = self.resolved()
        if self.family in ("log_gaussian", "warped_hermite") and not p["tau"] > 0:
            raise CatalogError("tau must be positive")
        if self.family == "bump" and not 0 < p["a"] < p["b"]:
            raise CatalogError("bump needs 0 < a < b")
        if self.family == "warped_hermite" and p["order"] not in (0, 1, 2):
            raise CatalogError("hermite order must be 0, 1 or 2")

    def resolved(self):
        p = dict(FAMILIES[self.family])
        p.update(self.params)
        if self.family == "warped_hermite":
            p["order"] = int(p["order"])
        return p

    def __str__(self):
        p = self.resolved()
        return self.family + ":" + ",".join(f"{k}={p[k]}" for k in sorted(p))


def parse_spec(text):
    """Parse ``"family:key=value,..."``, e.g. ``"log_gaussian:tau=1.0"``."""
    family, _, rest = text.strip().partition(":")
    params = {}
    for item in filter(None, (x.strip() for x in rest.split(","))):
        key, eq, value = item.partition("=")
        if not eq:
            raise CatalogError(f"expected key=value, got {item!r}")
        try:
            params[key.strip()] = float(value)
        except ValueError:
            raise CatalogError(f"parameter {key!r} is not a number: {value!r}") from None
    return CatalogSpec(family, params)


def _hermite_function(sigma, tau, order):
    x = sigma / tau
    c = (math.pi * tau ** 2) ** -0.25 / math.sqrt(2.0 ** order * math.factorial(order))
    return c * eval_hermite(order, x) * np.exp(-x ** 2 / 2)


def _from_scale_space(grid, ftilde):
    # f(w) = w^{-1/2} f~(-ln w)
    return grid.nodes ** -0.5 * ftilde(-grid.log_nodes)


def scale_spread(spec):
    """Standard deviation of |f~(sigma)|^2 for the scale-space families."""
    p = spec.resolved()
    if spec.family == "log_gaussian":
        return p["tau"] / math.sqrt(2)
    if spec.family == "warped_hermite":
        return p["tau"] * math.sqrt(p["order"] + 0.5)
    raise CatalogError(f"{spec.family} has no scale-space spread")


def catalog_get(spec, grid, canonical=True):
    """Sample a catalog member on ``grid``.

    ``bump`` is not canonical as sampled; with ``canonical=True`` (default) it
    is passed through canonical_normalize.  The other families are canonical
    by construction.
    """
    if isinstance(spec, str):
        spec = parse_spec(spec)
    p = spec.resolved()
    s = grid.log_nodes
    if spec.family == "bump":
        a, b = p["a"], p["b"]
        if a <= grid.omega_min or b >= grid.omega_max:
            raise CatalogError(f"grid [{grid.omega_min}, {grid.omega_max}] does not "
                               f"contain the bump support [{a}, {b}]")
        w = grid.nodes
        inside = (w > a) & (w < b)
        vals = np.zeros(grid.n)
        vals[inside] = np.exp(-((b - a) / 2) ** 2 / ((w[inside] - a) * (b - w[inside])))
        f = WaveletFn(grid, vals)
        return canonical_normalize(f)[0] if canonical else f

    span = SPAN_UNITS * scale_spread(spec)
    if s[0] > -span or s[-1] < span:
        raise CatalogError(f"grid log-span [{s[0]:.3g}, {s[-1]:.3g}] is narrower than "
                           f"+-{SPAN_UNITS:g} spread units ({span:.3g}) for {spec}")
    if spec.family == "log_gaussian":
        f = WaveletFn(grid, _from_scale_space(grid, lambda x: _hermite_function(x, p["tau"], 0)))
    else:
        f = WaveletFn(grid, _from_scale_space(
            grid, lambda x: _hermite_function(x, p["tau"], p["order"])))
    if not left_endpoint_ok(f):
        raise CatalogError(f"{spec} does not decay at omega_min={grid.omega_min:g}; "
                           "widen the grid")
    return f
