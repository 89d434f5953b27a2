import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pairsource.dispersion import (
    C_LIGHT,
    DEFAULT_POLARIZATIONS,
    Axis,
    CrystalSpec,
    PhaseMatchingError,
    Polarizations,
    SellmeierDomainError,
    SellmeierSet,
    bundled_sets,
    design_crystal,
    group_slowness,
    load_sellmeier,
    omega_of,
    parse_sellmeier,
    qpm_mismatch,
    refractive_index,
    slownesses,
    slowness_product,
    solve_degenerate_wavelength,
    solve_poling_period,
    wavevector,
)

# n^2 = A + B1/(l^2 - C1) + B2/(l^2 - C2), l in micrometres, typed in from the
# published coefficient table and evaluated without the package.
KATO_X = (3.29100, 0.04140, 0.03978, 9.35522, 31.45571)
KATO_Z = (4.59423, 0.06206, 0.04763, 110.80672, 86.12171)


def by_hand(coeffs, lam_um):
    A, B1, C1, B2, C2 = coeffs
    l2 = lam_um * lam_um
    return math.sqrt(A + B1 / (l2 - C1) + B2 / (l2 - C2))


GOLDEN_NZ_1544 = 1.8159115660570688
GOLDEN_NX_772 = 1.7499371627502396


def test_index_z_1544_matches_hand_evaluation(kato):
    assert by_hand(KATO_Z, 1.544) == pytest.approx(GOLDEN_NZ_1544, abs=1e-15)
    assert refractive_index(Axis.Z, 1544e-9, kato) == pytest.approx(GOLDEN_NZ_1544, abs=1e-12)


def test_index_x_772_matches_hand_evaluation(kato):
    assert by_hand(KATO_X, 0.772) == pytest.approx(GOLDEN_NX_772, abs=1e-15)
    assert refractive_index(Axis.X, 772e-9, kato) == pytest.approx(GOLDEN_NX_772, abs=1e-12)


def test_out_of_window_error_names_window():
    s = SellmeierSet.constant(1.8, window=(400e-9, 4e-6))
    with pytest.raises(SellmeierDomainError, match=r"\[400, 4000\] nm"):
        refractive_index(Axis.Z, 10e-6, s)


def test_wavevector_at_772(kato):
    w = omega_of(772e-9)
    assert wavevector(Axis.X, w, kato) == pytest.approx(GOLDEN_NX_772 * w / C_LIGHT, rel=1e-13)


def test_wavevector_rejects_zero_frequency(kato):
    with pytest.raises(ValueError):
        wavevector(Axis.X, 0.0, kato)


def test_constant_index_wavevector_is_linear():
    s = SellmeierSet.constant(2.0)
    w = omega_of(1500e-9)
    assert wavevector(Axis.Y, 2 * w, s) == pytest.approx(2 * wavevector(Axis.Y, w, s), rel=1e-15)


def test_constant_index_slowness_is_n_over_c():
    s = SellmeierSet.constant(1.5)
    k1 = group_slowness(Axis.X, omega_of(1000e-9), s)
    assert k1.value == pytest.approx(1.5 / C_LIGHT, rel=1e-10)
    assert k1.group_index == pytest.approx(1.5, rel=1e-10)


@pytest.mark.parametrize("axis", list(Axis))
@pytest.mark.parametrize("lam", [772e-9, 1544e-9])
def test_slowness_stable_under_step_halving(kato, axis, lam):
    w = omega_of(lam)
    a = group_slowness(axis, w, kato, rel_step=1e-4).value
    b = group_slowness(axis, w, kato, rel_step=5e-5).value
    assert a == pytest.approx(b, rel=1e-6)


def test_slowness_ordering_and_negative_product(crystal):
    wp = omega_of(772e-9)
    kp, ks, ki = slownesses(crystal, wp, wp / 2, wp / 2)
    assert ks.value < kp.value < ki.value
    assert slowness_product(crystal, 772e-9) < 0


def test_mismatch_vanishes_at_design_point(crystal):
    wp = omega_of(772e-9)
    assert abs(qpm_mismatch(crystal, wp, wp / 2, wp / 2)) < 1e-6


def test_infinite_period_gives_bulk_mismatch(kato):
    cr = CrystalSpec(0.03, math.inf, DEFAULT_POLARIZATIONS, kato)
    wp = omega_of(772e-9)
    bulk = wavevector(Axis.X, wp / 2, kato) + wavevector(Axis.Z, wp / 2, kato) - wavevector(Axis.X, wp, kato)
    assert qpm_mismatch(cr, wp, wp / 2, wp / 2) == pytest.approx(bulk, rel=1e-12)


def test_mismatch_first_order_in_signal_detuning(crystal):
    wp = omega_of(772e-9)
    dw = 2 * math.pi * 100e9
    _, ks, ki = slownesses(crystal, wp, wp / 2, wp / 2)
    direct = qpm_mismatch(crystal, wp, wp / 2 + dw, wp / 2 - dw) - qpm_mismatch(crystal, wp, wp / 2, wp / 2)
    assert direct == pytest.approx((ks.value - ki.value) * dw, rel=1e-3)


def test_signal_idler_swap_needs_polarization_swap(crystal):
    wp = omega_of(772e-9)
    ws, wi = wp / 2 + 3e12, wp / 2 - 3e12
    swapped = CrystalSpec(crystal.length, crystal.poling_period, crystal.polarizations.swapped(),
                          crystal.sellmeier, crystal.grating_sign)
    same = qpm_mismatch(crystal, wp, ws, wi)
    assert qpm_mismatch(swapped, wp, wi, ws) == pytest.approx(same, rel=1e-12)
    # type II: relabelling the frequencies alone is a different physical configuration
    assert abs(qpm_mismatch(crystal, wp, wi, ws) - same) > 1.0


def test_poling_period_round_trip(kato):
    period = solve_poling_period(kato, DEFAULT_POLARIZATIONS, 772e-9, 1544e-9, 1544e-9)
    cr = design_crystal(kato, DEFAULT_POLARIZATIONS, 0.03, 772e-9, poling_period=period)
    wp = omega_of(772e-9)
    assert abs(qpm_mismatch(cr, wp, wp / 2, wp / 2)) < 1e-6


def test_poling_period_rejects_energy_violation(kato):
    with pytest.raises(ValueError, match="energy"):
        solve_poling_period(kato, DEFAULT_POLARIZATIONS, 772e-9, 1544e-9, 1550e-9)


def test_poling_period_rejects_incompatible_grating_sign(kato):
    with pytest.raises(PhaseMatchingError, match="opposite sign"):
        solve_poling_period(kato, DEFAULT_POLARIZATIONS, 772e-9, 1544e-9, 1544e-9, grating_sign=+1)


def test_degenerate_wavelength_for_47_8_um_period(kato):
    lam = solve_degenerate_wavelength(kato, DEFAULT_POLARIZATIONS, 47.8e-6, grating_sign=-1, near=772e-9)
    assert lam == pytest.approx(772e-9, abs=1e-9)


def test_degenerate_wavelength_inverts_default_design(crystal):
    lam = solve_degenerate_wavelength(
        crystal.sellmeier, crystal.polarizations, crystal.poling_period, crystal.grating_sign, near=772e-9
    )
    assert lam == pytest.approx(772e-9, rel=1e-6)


def test_y_pump_configuration_has_47_8_um_class_period():
    """With a Y-polarized pump the same crystal needs a ~48 um grating."""
    fan = load_sellmeier("ktp_fan1987")
    pol = Polarizations.parse("Y Y Z")
    period = solve_poling_period(fan, pol, 772e-9, 1544e-9, 1544e-9)
    assert period == pytest.approx(47.8e-6, rel=0.01)


def test_degenerate_wavelength_reports_turning_point_ambiguity(crystal):
    with pytest.raises(PhaseMatchingError, match="several"):
        solve_degenerate_wavelength(crystal.sellmeier, crystal.polarizations, crystal.poling_period,
                                    crystal.grating_sign)


def test_degenerate_wavelength_no_root(kato):
    with pytest.raises(PhaseMatchingError, match="no degenerate"):
        solve_degenerate_wavelength(kato, DEFAULT_POLARIZATIONS, 1e-6)


@settings(max_examples=25, deadline=None)
@given(lam_p=st.floats(700e-9, 900e-9))
def test_period_and_wavelength_solvers_are_inverse(kato, lam_p):
    period = solve_poling_period(kato, DEFAULT_POLARIZATIONS, lam_p, 2 * lam_p, 2 * lam_p)
    cr = design_crystal(kato, DEFAULT_POLARIZATIONS, 0.03, lam_p)
    back = solve_degenerate_wavelength(kato, DEFAULT_POLARIZATIONS, period, cr.grating_sign, near=lam_p)
    assert back == pytest.approx(lam_p, rel=1e-4)


@pytest.mark.parametrize("name", bundled_sets())
def test_bundled_sets_give_physical_indices(name):
    s = load_sellmeier(name)
    lam = np.linspace(*s.window, 400)
    for axis in Axis:
        n = refractive_index(axis, lam, s)
        assert np.all(np.isfinite(n)) and np.all((n > 1) & (n < 3))


def test_unknown_sellmeier_set_lists_bundled():
    with pytest.raises(FileNotFoundError, match="ktp_kato2002"):
        load_sellmeier("no_such_set")


def test_sellmeier_form_arity_checked():
    text = "[set]\nwindow_nm = 400, 4000\nform = pole2\n[X]\ncoefficients = 1, 2\n[Y]\ncoefficients = 1\n[Z]\ncoefficients = 1\n"
    with pytest.raises(ValueError, match="takes 5 coefficients"):
        parse_sellmeier(text)


def test_polarization_parse_round_trip():
    p = Polarizations.parse("x, z, x")
    assert p == (Axis.X, Axis.Z, Axis.X)
    assert Polarizations.parse(str(p)) == p
    with pytest.raises(ValueError):
        Polarizations.parse("X Z")
