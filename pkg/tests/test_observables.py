import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pairsource.jsa import (
    FrequencyGrid,
    GaussianJsaCoefficients,
    JsaMatrix,
    PumpSpec,
    build_jsa,
    default_grid,
    gaussian_coefficients,
)
from pairsource.observables import (
    FilterShape,
    FitError,
    GridMismatchError,
    HomPair,
    LossBudget,
    MeasuredJsi,
    ReducedState,
    Side,
    brightness_report,
    fit_jsi_gaussian,
    hom_dip,
    hom_visibility,
    hom_visibility_from_distance,
    reduced_state,
    simulate_jsi_measurement,
)
from pairsource.schmidt import purity_gaussian_analytic, schmidt_decompose

W0 = 1.22e15
C = 299_792_458.0


def gaussian_jsa(coeffs, points=128, half=None):
    sx, sy = coeffs.marginal_std()
    half = half or 7 * max(sx, sy)
    grid = FrequencyGrid.symmetric(W0, W0, half, points)
    ws, wi = grid.mesh()
    return JsaMatrix(grid, coeffs.evaluate(ws - W0, wi - W0).astype(complex)).normalize()


CORRELATED = GaussianJsaCoefficients(1e-24, 1.5e-24, 1.6e-24)
SEPARABLE = GaussianJsaCoefficients(1e-24, 1.5e-24, 0.0)


@pytest.fixture(scope="module")
def jsa_033(crystal, pump_033):
    return build_jsa(crystal, pump_033, default_grid(crystal, pump_033))


# reduced states


def test_product_state_gives_projector():
    rho = reduced_state(gaussian_jsa(SEPARABLE), Side.SIGNAL).rho
    np.testing.assert_allclose(rho @ rho, rho, atol=1e-12)


@pytest.mark.parametrize("side", list(Side))
def test_reduced_state_purity_equals_schmidt(jsa_033, side):
    r = reduced_state(jsa_033, side)
    assert r.purity == pytest.approx(schmidt_decompose(jsa_033).purity, abs=1e-9)


def test_reduced_state_is_density_matrix(jsa_033):
    rho = reduced_state(jsa_033, Side.IDLER).rho
    assert np.trace(rho).real == pytest.approx(1.0, abs=1e-9)
    np.testing.assert_allclose(rho, rho.conj().T, atol=1e-15)
    assert np.linalg.eigvalsh(rho).min() >= -1e-10


def test_reduced_state_needs_normalized_input():
    grid = FrequencyGrid.symmetric(W0, W0, 1e12, 16)
    with pytest.raises(ValueError):
        reduced_state(JsaMatrix(grid, np.ones((16, 16), complex)), Side.SIGNAL)


# HOM visibility


def pure(axis_grid, vec):
    v = vec / np.linalg.norm(vec)
    return ReducedState(axis_grid.signal, np.outer(v, v.conj()))


def test_visibility_of_identical_pure_states():
    g = FrequencyGrid.symmetric(W0, W0, 1e12, 16)
    a = pure(g, np.arange(1.0, 17.0))
    assert hom_visibility(a, a) == pytest.approx(1.0, abs=1e-12)


def test_visibility_of_orthogonal_pure_states():
    g = FrequencyGrid.symmetric(W0, W0, 1e12, 16)
    e0, e1 = np.eye(16)[0], np.eye(16)[5]
    assert hom_visibility(pure(g, e0), pure(g, e1)) == pytest.approx(0.0, abs=1e-15)


def test_visibility_with_itself_is_purity(jsa_033):
    r = reduced_state(jsa_033, Side.SIGNAL)
    assert hom_visibility(r, r) == pytest.approx(r.purity, abs=1e-12)


def test_visibility_grid_mismatch():
    a = reduced_state(gaussian_jsa(SEPARABLE, 64), Side.SIGNAL)
    b = reduced_state(gaussian_jsa(SEPARABLE, 32), Side.SIGNAL)
    with pytest.raises(GridMismatchError):
        hom_visibility(a, b)


def random_rho(rng, n, rank):
    m = rng.normal(size=(n, rank)) + 1j * rng.normal(size=(n, rank))
    rho = m @ m.conj().T
    return rho / np.trace(rho).real


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), ra=st.integers(1, 6), rb=st.integers(1, 6))
def test_visibility_identities(seed, ra, rb):
    rng = np.random.default_rng(seed)
    g = FrequencyGrid.symmetric(W0, W0, 1e12, 16)
    a = ReducedState(g.signal, random_rho(rng, 16, ra))
    b = ReducedState(g.signal, random_rho(rng, 16, rb))
    v = hom_visibility(a, b)
    assert v == pytest.approx(hom_visibility(b, a), abs=1e-12)
    assert v == pytest.approx(hom_visibility_from_distance(a, b), abs=1e-12)
    assert -1e-12 <= v <= math.sqrt(a.purity * b.purity) + 1e-12
    assert v <= 1 + 1e-12


# HOM dip


def test_dip_vanishes_for_identical_pure_photons():
    j = gaussian_jsa(SEPARABLE)
    curve = hom_dip(j, j, HomPair.SIGNAL_SIGNAL, [0.0])
    assert curve.coincidences[0] == pytest.approx(0.0, abs=1e-12)


@pytest.mark.parametrize("which", list(HomPair))
def test_dip_depth_matches_visibility(jsa_033, which):
    rs = reduced_state(jsa_033, Side.SIGNAL)
    rb = reduced_state(jsa_033, Side.SIGNAL if which is HomPair.SIGNAL_SIGNAL else Side.IDLER)
    curve = hom_dip(jsa_033, jsa_033, which, [0.0])
    assert curve.coincidences[0] == pytest.approx(1 - hom_visibility(rs, rb), abs=1e-9)


def test_dip_returns_to_baseline_and_is_symmetric(jsa_033):
    delays = np.linspace(-30e-12, 30e-12, 121)
    c = hom_dip(jsa_033, jsa_033, HomPair.SIGNAL_IDLER, delays).coincidences
    assert c[0] == pytest.approx(1.0, abs=1e-3) and c[-1] == pytest.approx(1.0, abs=1e-3)
    np.testing.assert_allclose(c, c[::-1], atol=1e-9)
    assert np.all((c >= -1e-12) & (c <= 1.05))


def test_dip_width_matches_coherence_time():
    """Pure Gaussian photon with intensity std s: p(tau) = 1 - exp(-s^2 tau^2)."""
    j = gaussian_jsa(SEPARABLE, 256)
    s = SEPARABLE.marginal_std()[0]
    expect = 2 * math.sqrt(math.log(2)) / s
    delays = np.linspace(-3 * expect, 3 * expect, 601)
    assert hom_dip(j, j, HomPair.SIGNAL_SIGNAL, delays).fwhm() == pytest.approx(expect, rel=1e-3)


def test_dip_width_at_operating_point_tracks_marginal_bandwidth(crystal, pump_033, jsa_033):
    s = gaussian_coefficients(crystal, pump_033).marginal_std()[0]
    expect = 2 * math.sqrt(math.log(2)) / s
    delays = np.linspace(-3 * expect, 3 * expect, 301)
    fwhm = hom_dip(jsa_033, jsa_033, HomPair.SIGNAL_SIGNAL, delays).fwhm()
    assert fwhm == pytest.approx(expect, rel=0.15)


# simulated JSI measurement


def test_delta_filters_sample_the_jsi():
    """A delta filter on a cell centre reads that cell; on a cell edge, the mean of both."""
    j = gaussian_jsa(CORRELATED, 128)
    g = j.grid.signal
    to_lam = (2 * math.pi * C / g.center) ** 2 / (2 * math.pi * C)
    step = 2.5 * g.step * to_lam  # alternates between edges and centres
    with pytest.warns(UserWarning, match="undersamples"):
        m = simulate_jsi_measurement(j, 1e-6 * step, step)
    frac = (m.signal_positions - g.values[0]) / g.step
    lo = np.floor(frac + 1e-9).astype(int)
    t = np.clip(frac - lo, 0.0, None)
    t = np.where(t < 1e-6, 0.0, 0.5)
    hi = np.minimum(lo + 1, g.points - 1)
    interp = np.zeros((len(frac), g.points))
    interp[np.arange(len(frac)), lo] += 1 - t
    interp[np.arange(len(frac)), hi] += t
    expect = interp @ j.intensity @ interp.T
    np.testing.assert_allclose(m.counts, expect, rtol=1e-6, atol=1e-9 * j.intensity.max())


@pytest.mark.parametrize("shape", list(FilterShape))
def test_measurement_preserves_total_intensity(jsa_033, shape):
    m = simulate_jsi_measurement(jsa_033, 0.2e-9, 0.02e-9, shape)
    ds = m.signal_positions[1] - m.signal_positions[0]
    di = m.idler_positions[1] - m.idler_positions[0]
    total = m.counts.sum() * ds * di
    assert total == pytest.approx(jsa_033.intensity.sum() * jsa_033.grid.cell, abs=1e-3)


def test_coarse_filter_step_warns(jsa_033):
    with pytest.warns(UserWarning, match="exceeds the filter FWHM"):
        simulate_jsi_measurement(jsa_033, 0.1e-9, 0.2e-9)


def test_filter_width_must_be_positive(jsa_033):
    with pytest.raises(ValueError):
        simulate_jsi_measurement(jsa_033, 0.0, 0.1e-9)


def test_wide_filters_bias_fit_towards_purity():
    j = gaussian_jsa(CORRELATED, 128)
    true = purity_gaussian_analytic(CORRELATED)
    lam0 = 2 * math.pi * C / W0
    sx = max(CORRELATED.marginal_std())
    to_lam = lam0**2 / (2 * math.pi * C)
    narrow = fit_jsi_gaussian(simulate_jsi_measurement(j, 0.05 * sx * to_lam, 0.04 * sx * to_lam)).purity
    wide = fit_jsi_gaussian(simulate_jsi_measurement(j, 10 * 2.355 * sx * to_lam, 0.2 * sx * to_lam)).purity
    assert narrow == pytest.approx(true, abs=5e-3)
    assert wide > narrow
    assert wide > 0.97


# Gaussian fit


def synthetic_map(A, B, Cc, n=41, half=3e12, cx=0.0, cy=0.0):
    pos = W0 + np.linspace(-half, half, n)
    X, Y = np.meshgrid(pos - W0 - cx, pos - W0 - cy, indexing="ij")
    return MeasuredJsi(pos, pos.copy(), 7.0 * np.exp(-A * X**2 - B * Y**2 - Cc * X * Y))


def test_fit_of_separable_map():
    fit = fit_jsi_gaussian(synthetic_map(1e-24, 2e-24, 0.0))
    assert fit.purity == pytest.approx(1.0, abs=1e-3)


def test_fit_recovers_coefficients():
    A, B, Cc = 1.2e-24, 0.8e-24, -1.1e-24
    fit = fit_jsi_gaussian(synthetic_map(A, B, Cc, cx=1e11, cy=-2e11))
    for got, want in zip(fit.intensity, (A, B, Cc)):
        assert got == pytest.approx(want, rel=1e-4)
    assert fit.center[0] - W0 == pytest.approx(1e11, rel=1e-4)
    # amplitude coefficients are half the intensity ones
    assert fit.amplitude.a == pytest.approx(A / 2, rel=1e-4)
    assert fit.purity == pytest.approx(purity_gaussian_analytic(GaussianJsaCoefficients(A / 2, B / 2, Cc / 2)), abs=1e-6)


def test_fit_needs_enough_points_above_half_maximum():
    with pytest.raises(FitError, match="above half maximum"):
        fit_jsi_gaussian(synthetic_map(1e-22, 1e-22, 0.0, n=21))


def test_fit_rejects_empty_map():
    m = synthetic_map(1e-24, 1e-24, 0.0)
    with pytest.raises(FitError):
        fit_jsi_gaussian(MeasuredJsi(m.signal_positions, m.idler_positions, np.zeros_like(m.counts)))


def test_fit_rejects_single_column_map():
    m = synthetic_map(1e-24, 1e-24, 0.0)
    line = np.zeros_like(m.counts)
    line[:, 20] = np.exp(-np.linspace(-3, 3, len(line)) ** 2)
    with pytest.raises(FitError):
        fit_jsi_gaussian(MeasuredJsi(m.signal_positions, m.idler_positions, line))


# brightness


def test_source_brightness():
    pump = PumpSpec(772e-9, 4.4e11, pulse_energy=200e-3 / 80e6, rep_rate=80e6)
    rep = brightness_report(0.01, pump, LossBudget((("optics", 0.50), ("coupling", 0.46))))
    assert rep.source_brightness == pytest.approx(4.0, abs=1e-12)
    assert rep.fibered_brightness == pytest.approx(4.0 * 10 ** (-0.192), rel=1e-12)
    assert rep.fibered_brightness == pytest.approx(2.6, abs=0.05)
    assert 0.0024 <= rep.pairs_per_pulse_at(600e-12) <= 0.0025
    assert rep.pair_rate == pytest.approx(0.01 * 80e6)
    assert rep.heralded_single_rate == pytest.approx(0.01 * 80e6 * 10 ** (-0.096))


@settings(max_examples=30)
@given(n=st.floats(1e-6, 0.5), e=st.floats(1e-12, 1e-6), k=st.floats(0.1, 10))
def test_brightness_scaling(n, e, k):
    budget = LossBudget(())
    base = brightness_report(n, PumpSpec(772e-9, 1e11, pulse_energy=e), budget).source_brightness
    assert brightness_report(k * n, PumpSpec(772e-9, 1e11, pulse_energy=e), budget).source_brightness == \
        pytest.approx(k * base, rel=1e-12)
    assert brightness_report(n, PumpSpec(772e-9, 1e11, pulse_energy=k * e), budget).source_brightness == \
        pytest.approx(base / k, rel=1e-12)


def test_negative_loss_rejected():
    with pytest.raises(ValueError):
        LossBudget((("gain", -1.0),))


def test_brightness_needs_pulse_energy():
    with pytest.raises(ValueError):
        brightness_report(0.01, PumpSpec(772e-9, 1e11), LossBudget(()))
