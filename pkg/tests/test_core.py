"""Unit conversions, pair kinematics, timestamps, fingerprints."""

import numpy as np
import pytest

from twinphoton.core import (
    FS_PER_S,
    SPEED_OF_LIGHT_M_PER_S,
    PairEvent,
    PolarizationDescriptor,
    angular_frequency_to_wavelength,
    conjugate_wavelength,
    degenerate_wavelength,
    fingerprint,
    join_timestamp,
    seconds_to_fs,
    split_timestamp,
    wavelength_to_angular_frequency,
)

# frozen oracle: 2*pi*299792458/1550e-9, computed independently
OMEGA_1550_RAD_S = 1.215259075683131e15


def test_wavelength_frequency_round_trip():
    lam = np.array([400.0, 660.0, 1310.0, 1320.0, 1550.0, 1600.0])
    back = angular_frequency_to_wavelength(wavelength_to_angular_frequency(lam))
    assert np.allclose(back, lam, rtol=1e-12, atol=0.0)


def test_frequency_ratio_is_exact():
    # half the wavelength, twice the frequency
    w1 = wavelength_to_angular_frequency(660.0)
    w2 = wavelength_to_angular_frequency(1320.0)
    assert w2 / w1 == pytest.approx(0.5, rel=1e-15)


def test_frequency_at_1550_nm():
    assert wavelength_to_angular_frequency(1550.0) == pytest.approx(
        OMEGA_1550_RAD_S, rel=1e-12
    )


def test_conversion_domain_errors():
    with pytest.raises(ValueError):
        wavelength_to_angular_frequency(0.0)
    with pytest.raises(ValueError):
        wavelength_to_angular_frequency(-5.0)
    with pytest.raises(ValueError):
        angular_frequency_to_wavelength(0.0)


def test_conjugate_degenerate_case():
    # at twice the pump wavelength both photons coincide
    assert conjugate_wavelength(660.0, 1320.0) == pytest.approx(1320.0, abs=1e-12)
    assert degenerate_wavelength(660.0) == 1320.0


def test_conjugate_known_values():
    # exact rational arithmetic: 660*1310/650 and 700*1300/600
    assert conjugate_wavelength(660.0, 1310.0) == pytest.approx(
        1330.1538461538462, rel=1e-14
    )
    assert conjugate_wavelength(700.0, 1300.0) == pytest.approx(
        1516.6666666666667, rel=1e-14
    )


def test_conjugate_is_energy_conserving():
    rng = np.random.default_rng(7)
    lam_p = 700.0
    lam_s = rng.uniform(1250.0, 1350.0, 1000)
    lam_i = conjugate_wavelength(lam_p, lam_s)
    # 1/ls + 1/li = 1/lp, scaled by lam_p for a dimensionless residual
    resid = lam_p / lam_s + lam_p / lam_i - 1.0
    assert np.max(np.abs(resid)) < 1e-12


def test_conjugate_is_an_involution():
    rng = np.random.default_rng(11)
    lam_s = rng.uniform(701.0, 5000.0, 5000)
    twice = conjugate_wavelength(700.0, conjugate_wavelength(700.0, lam_s))
    assert np.allclose(twice, lam_s, rtol=1e-12, atol=0.0)


def test_conjugate_rejects_subpump_wavelengths():
    with pytest.raises(ValueError):
        conjugate_wavelength(660.0, 660.0)
    with pytest.raises(ValueError):
        conjugate_wavelength(660.0, 500.0)


def test_polarization_type_i_axis_normalized():
    d = PolarizationDescriptor.type_i(np.pi + 0.3)
    assert 0.0 <= d.axis_angle_rad < np.pi
    assert d.axis_angle_rad == pytest.approx(0.3, abs=1e-12)


def test_polarization_type_ii_has_no_axis():
    d = PolarizationDescriptor.type_ii()
    assert d.axis_angle_rad is None
    with pytest.raises(ValueError):
        PolarizationDescriptor(kind="type_ii", axis_angle_rad=0.1)
    with pytest.raises(ValueError):
        PolarizationDescriptor(kind="type_i")


def test_pair_event_split_view():
    ev = PairEvent(
        t_emit_fs=3 * FS_PER_S + 250,
        lambda_signal_nm=1300.0,
        lambda_idler_nm=1340.0,
        polarization=PolarizationDescriptor.type_ii(),
    )
    secs, frac = ev.split_emit()
    assert secs == 3
    assert frac == pytest.approx(250e-15, rel=1e-12)


def test_timestamp_split_join_round_trip():
    t = np.array([0, 1, 999_999_999_999_999, FS_PER_S, 7 * FS_PER_S + 1], dtype=np.int64)
    secs, frac = split_timestamp(t)
    assert np.array_equal(join_timestamp(secs, frac), t)


def test_timestamp_scalar_path():
    secs, frac = split_timestamp(2 * FS_PER_S + 5)
    assert isinstance(secs, int) and isinstance(frac, float)
    assert join_timestamp(secs, frac) == 2 * FS_PER_S + 5


def test_single_femtosecond_survives_round_trip():
    # the smallest representable offset must not be lost to rounding
    assert join_timestamp(0, 1e-15) == 1


def test_join_rejects_out_of_range_fraction():
    with pytest.raises(ValueError):
        join_timestamp(1, 1.0)
    with pytest.raises(ValueError):
        join_timestamp(1, -0.1)


def test_seconds_to_fs_rounding():
    assert seconds_to_fs(1.0) == FS_PER_S
    assert seconds_to_fs(1.5e-15) == 2  # banker's rounding on .5
    assert seconds_to_fs(-2e-15) == -2


def test_fingerprint_stability_and_sensitivity():
    a = {"x": 1.0, "y": [1, 2, 3]}
    b = {"y": [1, 2, 3], "x": 1.0}
    assert fingerprint(a) == fingerprint(b)
    assert fingerprint({"x": 1.0, "y": [1, 2, 4]}) != fingerprint(a)


def test_fingerprint_arrays_match_lists():
    assert fingerprint({"v": np.array([1.5, 2.5])}) == fingerprint({"v": [1.5, 2.5]})


def test_fingerprint_covers_dataclasses():
    d1 = PolarizationDescriptor.type_i(0.25)
    d2 = PolarizationDescriptor.type_i(0.25)
    d3 = PolarizationDescriptor.type_i(0.26)
    assert fingerprint(d1) == fingerprint(d2)
    assert fingerprint(d1) != fingerprint(d3)


def test_speed_of_light_is_the_defined_constant():
    assert SPEED_OF_LIGHT_M_PER_S == 299792458.0
