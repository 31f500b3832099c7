import math

import numpy as np
import pytest
from hypothesis import given, settings
import hypothesis.strategies as st

from conftest import (
    CATALOG,
    LG_PHASE,
    LG_SIGNAL,
    LG_TIME_VAR,
    LG_WINDOW_DILATION,
)
from waveopt.catalog import catalog_get
from waveopt.freqgrid import WaveletFn, build_grid, indicator
from waveopt.observables import DomainError, GroupElement, canonical_residuals, group_action
from waveopt.uncertainty import (
    TERM_NAMES,
    admissibility_constant,
    domain_membership,
    feasibility_bounds,
    phase_uncertainty_pullback,
    signal_uncertainty,
    square_integrability,
)


def test_signal_uncertainty_log_gaussian(log_gaussian):
    general = signal_uncertainty(log_gaussian)
    fast = signal_uncertainty(log_gaussian, assume_canonical=True)
    assert general.total == pytest.approx(LG_SIGNAL, rel=1e-8)
    assert fast.total == pytest.approx(general.total, rel=1e-12)
    assert general.diagnostics["path"] == "general"
    assert fast.diagnostics["path"] == "canonical"


@pytest.mark.parametrize("tau", [0.5, 1.0, 1.5])
def test_time_variance_closed_form(tau):
    # ||f'||^2 = e^{tau^2} (1/(2 tau^2) + 1/4) for the log-Gaussian
    g = build_grid(1e-6, 1e6, 6000)
    f = catalog_get(f"log_gaussian:tau={tau}", g)
    r = signal_uncertainty(f)
    assert r.terms["time_var"] == pytest.approx(math.exp(tau ** 2) * (0.5 / tau ** 2 + 0.25), rel=1e-8)
    assert r.terms["scale_var"] == pytest.approx(tau ** 2 / 2, rel=1e-10)


def test_pullback_log_gaussian(log_gaussian):
    r = phase_uncertainty_pullback(log_gaussian)
    assert tuple(r.terms) == TERM_NAMES
    assert r.terms["time_var"] == pytest.approx(LG_TIME_VAR, rel=1e-8)
    assert r.terms["window_dilation"] == pytest.approx(LG_WINDOW_DILATION, rel=1e-8)
    assert r.terms["window_scale_var"] == pytest.approx(0.5, rel=1e-8)
    assert r.total == pytest.approx(LG_PHASE, rel=1e-8)
    assert r.diagnostics["in_DP"]


def test_flat_report_keys(log_gaussian):
    flat = phase_uncertainty_pullback(log_gaussian).to_flat()
    assert list(flat)[:6] == ["functional", "total", *TERM_NAMES]


def test_pullback_refuses_non_canonical(log_gaussian):
    with pytest.raises(DomainError, match="canonical"):
        phase_uncertainty_pullback(2 * log_gaussian)


def test_zero_wavelet_rejected(grid):
    with pytest.raises(DomainError):
        signal_uncertainty(WaveletFn(grid, np.zeros(grid.n)))


@pytest.mark.parametrize("spec", CATALOG)
def test_phase_dominates_signal_termwise(catalog_members, spec):
    f = catalog_members[spec]
    s = signal_uncertainty(f, assume_canonical=True).terms
    p = phase_uncertainty_pullback(f).terms
    for k in s:
        assert p[k] >= s[k] - 1e-12
    assert p["window_dilation"] >= 0 and p["window_scale_var"] >= 0


@given(st.sampled_from([2.0, -1 + 1j, 0.3j]), st.floats(-0.6, 0.6), st.floats(-2.0, 2.0))
@settings(max_examples=15, deadline=None)
def test_invariance(c, alpha, beta):
    g = build_grid(1e-4, 1e4, 4096)
    f = catalog_get("warped_hermite:order=2,tau=0.8", g)
    base = signal_uncertainty(f).total
    moved = c * group_action(GroupElement(alpha, beta), f)
    assert signal_uncertainty(moved).total == pytest.approx(base, rel=1e-5)


def test_admissibility(grid):
    g = build_grid(0.5, 4.0, 2048)
    assert admissibility_constant(indicator(g, 1, 2)) == pytest.approx(math.log(2), rel=1e-12)


def test_bump_admissibility_refinement_stable():
    vals = [admissibility_constant(catalog_get("bump", build_grid(1e-4, 1e4, n)))
            for n in (4096, 8192)]
    assert np.isfinite(vals).all()
    assert vals[1] == pytest.approx(vals[0], rel=1e-6)


@pytest.mark.parametrize("spec", CATALOG)
def test_catalog_in_dp(catalog_members, spec):
    d = domain_membership(catalog_members[spec], "D_P")
    assert d.member, d.failures
    assert max(square_integrability(catalog_members[spec]).values()) <= 1e-4


def test_feasible_set_membership(log_gaussian):
    L = signal_uncertainty(log_gaussian).total
    assert domain_membership(log_gaussian, "K_S", K=2 * L).in_KS
    d = domain_membership(log_gaussian, "K_S", K=L / 10)
    assert not d.in_KS and "time_var>K" in d.failures
    assert domain_membership(log_gaussian, "K_P", K=2 * LG_PHASE).in_KP
    assert not domain_membership(log_gaussian, "K_P", K=1.0).member


def test_forced_scale_moment_reported(log_gaussian):
    moved = group_action(GroupElement(1.0, 0.0), log_gaussian)
    d = domain_membership(moved, "K_S", K=100.0)
    assert not d.member
    assert "residual_esigma" in d.failures
    assert d.residuals["esigma"] == pytest.approx(1.0, abs=1e-6)


def test_membership_argument_checks(log_gaussian):
    with pytest.raises(ValueError):
        domain_membership(log_gaussian, "nowhere")
    with pytest.raises(ValueError):
        domain_membership(log_gaussian, "K_S")


def test_membership_of_zero(grid):
    d = domain_membership(WaveletFn(grid, np.zeros(grid.n)), "dom_LS")
    assert not d.member and d.failures == ["zero_norm"]


def test_chebyshev_tail_against_gaussian_oracle(log_gaussian):
    d = feasibility_bounds(log_gaussian, LG_TIME_VAR, alphas=(3.0,))
    a, tail, bound = d.chebyshev_tail[0]
    # sigma ~ N(0, 1/2): P(|sigma| > 3) = erfc(3)
    assert tail == pytest.approx(2.2090496998585438e-05, rel=1e-2)
    assert bound == pytest.approx(0.5 / 9, rel=1e-10)
    assert tail <= bound


@pytest.mark.parametrize("spec", CATALOG)
def test_pointwise_bound_at_tight_M(catalog_members, spec):
    f = catalog_members[spec]
    M = signal_uncertainty(f, assume_canonical=True).terms["time_var"]
    d = feasibility_bounds(f, M)
    assert d.pointwise_bound_margin >= -1e-9
    assert d.bounds_hold(), d.failures


def test_feasibility_rejects_non_canonical(grid):
    with pytest.raises(DomainError):
        feasibility_bounds(WaveletFn(grid, np.zeros(grid.n)), 1.0)


def test_truncation_monotone():
    narrow = catalog_get("log_gaussian:tau=0.5", build_grid(1e-3, 1e3, 4096))
    wide = catalog_get("log_gaussian:tau=0.5", build_grid(1e-5, 1e5, 4096))
    rn, rw = canonical_residuals(narrow), canonical_residuals(wide)
    assert all(w <= n + 1e-15 for w, n in zip(rw, rn))
