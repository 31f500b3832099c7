import csv
import math

import numpy as np
import pytest

from conftest import LG_PHASE
from waveopt.catalog import catalog_get
from waveopt.freqgrid import GridError, WaveletFn
from waveopt.observables import DomainError, GroupElement, group_action
from waveopt.phasespace import (
    AmbiguitySurface,
    ambiguity,
    auto_nodes,
    phase_uncertainty_direct,
    sweep_weights,
    wavelet_transform,
    worker_count,
)
from waveopt.uncertainty import phase_uncertainty_pullback


@pytest.fixture(scope="module")
def lg_surface(log_gaussian):
    a, b = auto_nodes(log_gaussian, 256, 256)
    return ambiguity(log_gaussian, a, b)


def test_sweep_weights_reduce_to_grid_weights(grid):
    W = sweep_weights(grid, [0.0])
    np.testing.assert_allclose(W[:, 0].real, grid.w_signal, rtol=1e-14)
    assert not W[:, 0].imag.any()


def test_peak_is_norm_squared(log_gaussian, lg_surface):
    assert ambiguity(log_gaussian, [0.0], [0.0]).values[0, 0] == pytest.approx(1.0, abs=1e-10)
    assert np.abs(lg_surface.values).max() <= 1 + 1e-6


@pytest.mark.parametrize("spec", ["log_gaussian:tau=1", "bump:a=1,b=2",
                                  "warped_hermite:order=1,tau=1"])
def test_peak_at_center_node(catalog_members, spec):
    a, b = np.linspace(-2, 2, 41), np.linspace(-4, 4, 81)
    k = np.abs(ambiguity(catalog_members[spec], a, b).values)
    i, j = np.unravel_index(np.argmax(k), k.shape)
    assert (a[i], b[j]) == (0.0, 0.0)


def test_dilation_slice_closed_form(log_gaussian):
    # K(alpha, 0) = exp(-alpha^2 / (4 tau^2)) for the log-Gaussian
    a = np.linspace(-2, 2, 9)
    k = ambiguity(log_gaussian, a, [0.0]).values[:, 0]
    np.testing.assert_allclose(k, np.exp(-a ** 2 / 4), atol=1e-9)


def test_translation_slice_against_quadrature(log_gaussian):
    # int |f|^2 e^{i beta w} dw at beta = 1, 2 by mpmath
    k = ambiguity(log_gaussian, [0.0], [1.0, 2.0]).values[0]
    expect = [0.348769513484283 + 0.643718603209728j, -0.0953838839578428 + 0.45544644303654j]
    np.testing.assert_allclose(k, expect, atol=1e-5)


def test_linearity(catalog_members):
    f = catalog_members["log_gaussian:tau=1"]
    s1 = catalog_members["bump:a=1,b=2"]
    s2 = catalog_members["warped_hermite:order=1,tau=1"]
    a, b = np.linspace(-1, 1, 7), np.linspace(-3, 3, 9)
    lhs = wavelet_transform(f, s1 + 2 * s2, a, b).values
    rhs = wavelet_transform(f, s1, a, b).values + 2 * wavelet_transform(f, s2, a, b).values
    np.testing.assert_allclose(lhs, rhs, atol=1e-10)


def test_matched_signal_peaks_at_its_group_point(log_gaussian):
    s = group_action(GroupElement(0.5, 1.5), log_gaussian)
    a, b = np.linspace(-1, 1, 21), np.linspace(-1, 3, 41)
    w = np.abs(wavelet_transform(log_gaussian, s, a, b).values)
    i, j = np.unravel_index(np.argmax(w), w.shape)
    assert a[i] == pytest.approx(0.5) and b[j] == pytest.approx(1.5)


def test_surface_norm_is_one(lg_surface):
    assert lg_surface.l2_norm() == pytest.approx(1.0, abs=1e-3)


def test_haar_weights(lg_surface):
    a, b = lg_surface.alpha_nodes, lg_surface.beta_nodes
    da, db = a[1] - a[0], b[1] - b[0]
    hw = lg_surface.haar_weights
    assert hw[3, 4] == pytest.approx(math.exp(-a[3]) * da * db)
    assert hw[0, 4] == pytest.approx(math.exp(-a[0]) * da * db / 2)
    assert hw[0, 0] == pytest.approx(math.exp(-a[0]) * da * db / 4)


def test_csv_export(tmp_path):
    s = AmbiguitySurface(np.array([0.0, 1.0]), np.array([-1.0, 0.0, 1.0]),
                         np.arange(6).reshape(2, 3) * (1 + 1j))
    p = tmp_path / "s.csv"
    s.to_csv(p)
    rows = list(csv.reader(open(p)))
    assert rows[0] == ["alpha", "beta", "re", "im", "haar_weight"]
    assert len(rows) == 7
    assert [float(x) for x in rows[2][:4]] == [0.0, 0.0, 1.0, 1.0]


def test_direct_matches_pullback(log_gaussian):
    pull = phase_uncertainty_pullback(log_gaussian).total
    direct = phase_uncertainty_direct(log_gaussian, n_alpha=512, n_beta=512)
    assert pull == pytest.approx(LG_PHASE, rel=1e-8)
    assert direct.total == pytest.approx(pull, rel=1e-2)
    assert direct.diagnostics["boundary_mass"] <= 1e-4
    assert direct.terms["alpha_var"] >= 0 and direct.terms["beta_var"] >= 0


def test_translation_covariance(log_gaussian):
    base = phase_uncertainty_direct(log_gaussian, n_alpha=256, n_beta=256).total
    moved = group_action(GroupElement(0.0, 2.5), log_gaussian)
    assert phase_uncertainty_direct(moved, n_alpha=256, n_beta=256).total == pytest.approx(base, rel=1e-2)


def test_small_window_fails_certificate(log_gaussian):
    a, b = np.linspace(-1, 1, 64), np.linspace(-2, 2, 64)
    with pytest.raises(DomainError, match="boundary mass"):
        phase_uncertainty_direct(log_gaussian, a, b)
    r = phase_uncertainty_direct(log_gaussian, a, b, strict=False)
    assert r.diagnostics["boundary_mass"] > 1e-4


def test_node_validation(log_gaussian, small_grid):
    with pytest.raises(ValueError):
        wavelet_transform(log_gaussian, log_gaussian, [], [0.0])
    other = catalog_get("log_gaussian", small_grid)
    with pytest.raises(GridError):
        wavelet_transform(log_gaussian, other, [0.0], [0.0])
    with pytest.raises(DomainError):
        ambiguity(WaveletFn(log_gaussian.grid, np.zeros(log_gaussian.grid.n)), [0.0], [0.0])


def test_rows_are_independent(log_gaussian):
    a, b = np.linspace(-1, 1, 13), np.linspace(-4, 4, 17)
    one = wavelet_transform(log_gaussian, log_gaussian, a, b, workers=1).values
    many = wavelet_transform(log_gaussian, log_gaussian, a, b, workers=4).values
    np.testing.assert_array_equal(one, many)


def test_worker_count_env(monkeypatch):
    monkeypatch.setenv("WAVEOPT_THREADS", "3")
    assert worker_count() == 3
    monkeypatch.setenv("WAVEOPT_THREADS", "junk")
    assert worker_count() >= 1
