import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings
import hypothesis.strategies as st

from waveopt.freqgrid import WaveletFn, norm, sample
from waveopt.observables import (
    IDENTITY,
    DomainError,
    DomainWarning,
    GroupElement,
    apply_scale,
    apply_time,
    canonical_normalize,
    canonical_residuals,
    commutation_check,
    group_action,
    is_canonical,
    moments,
)

finite = st.floats(-2.0, 2.0, allow_nan=False)


@given(finite, finite, finite, finite)
def test_group_law(a1, b1, a2, b2):
    g, h = GroupElement(a1, b1), GroupElement(a2, b2)
    e = g.compose(g.inverse())
    assert e.alpha == pytest.approx(0.0, abs=1e-12)
    assert e.beta == pytest.approx(0.0, abs=1e-12)
    k = g.compose(h).compose(g)
    k2 = g.compose(h.compose(g))
    assert k.alpha == pytest.approx(k2.alpha)
    assert k.beta == pytest.approx(k2.beta)


def test_group_element_must_be_finite():
    with pytest.raises(ValueError):
        GroupElement(math.inf, 0.0)


def test_action_is_a_representation(log_gaussian):
    g, h = GroupElement(0.2, 0.7), GroupElement(-0.4, 1.1)
    lhs = group_action(g, group_action(h, log_gaussian))
    rhs = group_action(g.compose(h), log_gaussian)
    # the inner action leaves a chirp that the spline resamples
    assert norm(lhs - rhs) < 1e-6


def test_action_is_unitary(log_gaussian):
    moved = group_action(GroupElement(0.7, -2.0), log_gaussian)
    assert norm(moved) == pytest.approx(1.0, abs=1e-10)


def test_log_gaussian_moments(log_gaussian):
    s = moments(log_gaussian, "scale")
    t = moments(log_gaussian, "time")
    assert s.expected == pytest.approx(0.0, abs=1e-12)
    assert s.variance == pytest.approx(0.5, rel=1e-10)
    assert t.expected == pytest.approx(0.0, abs=1e-12)
    assert t.variance == pytest.approx(3 * math.e / 4, rel=1e-8)


@pytest.mark.parametrize("alpha", [-0.7, 0.4, 1.0])
def test_scale_moment_shift(log_gaussian, alpha):
    m0 = moments(log_gaussian, "scale")
    m = moments(group_action(GroupElement(alpha, 0.0), log_gaussian), "scale")
    assert m.expected - m0.expected == pytest.approx(alpha, abs=1e-6)
    assert m.variance == pytest.approx(m0.variance, abs=1e-6)


@pytest.mark.parametrize("beta", [-1.0, 0.5, 1.7])
def test_time_moment_shift(log_gaussian, beta):
    m0 = moments(log_gaussian, "time")
    m = moments(group_action(GroupElement(0.0, beta), log_gaussian), "time")
    assert m.expected - m0.expected == pytest.approx(beta, abs=1e-6)
    assert m.variance == pytest.approx(m0.variance, abs=1e-6)


def test_window_space_moments(log_gaussian):
    # window weight 1/w shifts the log-Gaussian's scale mean by +tau^2/2
    m = moments(log_gaussian, "scale", "window")
    assert m.expected == pytest.approx(0.5, abs=1e-10)
    assert m.variance == pytest.approx(0.5, rel=1e-10)


def test_unknown_observable(log_gaussian):
    with pytest.raises(ValueError):
        moments(log_gaussian, "energy")


def test_zero_wavelet_has_no_moments(grid):
    with pytest.raises(DomainError):
        moments(WaveletFn(grid, np.zeros(grid.n)), "time")


def test_time_operator_warns_off_domain(grid):
    f = sample(grid, lambda w: np.exp(-w))
    with pytest.warns(DomainWarning):
        apply_time(f)


def test_large_dilation_warns(log_gaussian):
    with pytest.warns(DomainWarning):
        group_action(GroupElement(8.0, 0.0), log_gaussian)


def test_scale_operator(log_gaussian):
    np.testing.assert_allclose(apply_scale(log_gaussian).values,
                               -log_gaussian.grid.log_nodes * log_gaussian.values)


@pytest.mark.parametrize("alpha,beta", [(0.5, 0.0), (0.0, 2.0)])
def test_commutation_relations(log_gaussian, alpha, beta):
    assert commutation_check(log_gaussian, alpha, beta) <= 1e-6


def test_canonical_normalize_recovers_moved_wavelet(log_gaussian):
    moved = 3.0 * group_action(GroupElement(0.4, -1.2), log_gaussian)
    fn, g, c = canonical_normalize(moved)
    assert is_canonical(fn)
    assert norm(fn - log_gaussian) < 1e-8
    assert c == pytest.approx(1 / 3, rel=1e-8)
    assert g.alpha == pytest.approx(-0.4, abs=1e-8)
    np.testing.assert_allclose(group_action(g, moved).values * c, fn.values, atol=1e-8)


def test_first_round_uses_scale_then_time_moments(log_gaussian):
    moved = group_action(GroupElement(0.3, 0.8), log_gaussian)
    es = moments(moved, "scale").expected
    ex = moments(moved, "time").expected
    _, g, _ = canonical_normalize(moved)
    expect = GroupElement(es, ex).inverse()
    assert g.alpha == pytest.approx(expect.alpha, abs=1e-8)
    assert g.beta == pytest.approx(expect.beta, abs=1e-8)


@given(st.integers(0, 2 ** 32 - 1))
@settings(max_examples=10, deadline=None)
def test_canonical_normalize_random_inputs(seed):
    from waveopt.catalog import catalog_get
    from waveopt.freqgrid import build_grid
    g = build_grid(1e-4, 1e4, 1024)
    rng = np.random.default_rng(seed)
    base = catalog_get("warped_hermite:order=2,tau=0.8", g)
    f = complex(rng.normal(1, 0.3), rng.normal()) * group_action(
        GroupElement(rng.uniform(-1, 1), rng.uniform(-2, 2)), base, warn=False)
    fn, _, _ = canonical_normalize(f)
    assert max(canonical_residuals(fn)) <= 1e-8
    again, gg, c = canonical_normalize(fn)
    assert norm(again - fn) <= 1e-10
    assert gg == IDENTITY and c == 1.0


def test_normalize_zero_raises(grid):
    with pytest.raises(DomainError):
        canonical_normalize(WaveletFn(grid, np.zeros(grid.n)))


def test_zero_residuals():
    from waveopt.freqgrid import build_grid
    g = build_grid(1e-2, 1e2, 64)
    assert canonical_residuals(WaveletFn(g, np.zeros(64)))[0] == 1.0


def test_no_warning_for_interior_mass(log_gaussian):
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        group_action(GroupElement(0.5, 1.0), log_gaussian)
