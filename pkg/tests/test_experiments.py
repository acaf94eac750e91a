"""End-to-end protocol runs against analytic oracles."""

import numpy as np
import pytest
from scipy import stats

from twinphoton.core import conjugate_wavelength, wavelength_to_angular_frequency
from twinphoton.detection import DetectorSpec
from twinphoton.experiments import (
    DELAY_AXIS,
    MIRROR_AXIS,
    InterferogramScan,
    centered_mirror_grid,
    downconversion_envelope,
    envelope_value,
    predict_envelope_centroid_um,
    predict_mirror_center_um,
    run_detector_calibration,
    run_pmd_interferogram,
    run_tof_dispersion,
    run_two_photon_interferometer,
)
from twinphoton.fiber import (
    FiberSpec,
    QuadraticCoefficients,
    group_delay,
    quartz_plate_fixture,
    smf_fixture,
)
from twinphoton.source import RECTANGULAR, SOURCE_PRESETS, SourceSpec

C_NM_PER_S = 299792458.0e9


def tof_source(rate=1e6):
    return SourceSpec(660.0, rate, 1300.0, 100.0)


def quad_fiber(length_km=10.0):
    return FiberSpec(
        length_km, QuadraticCoefficients(4.9e6, 1312.0, 0.092), attenuation_db_per_km=0.0
    )


def ideal_det(det_id, jitter=0.0):
    return DetectorSpec(efficiency=1.0, jitter_ps=jitter, detector_id=det_id)


# -----------------------------------------------------------------
# time-of-flight scan


def test_tof_zero_length_fiber_is_flat():
    """No dispersion and no noise: every bin sits at minus the
    reference delay with zero spread."""
    scan = run_tof_dispersion(
        tof_source(),
        FiberSpec(0.0, QuadraticCoefficients(4.9e6, 1312.0, 0.092)),
        ideal_det("loc"),
        ideal_det("fib"),
        1250.0,
        1350.0,
        duration_s=0.05,
        reference_delay_ps=500.0,
        seed=7,
    )
    assert np.all(scan.count > 0)
    assert np.all(scan.mean_dt_ps == -500.0)
    assert np.all(scan.std_dt_ps == 0.0)


def test_tof_recovers_quadratic_group_delay():
    """Bin means vs the analytic delay at each bin's conjugate centre:
    global chi-squared over the occupied bins must look like chi2(df)."""
    fib = quad_fiber(10.0)
    scan = run_tof_dispersion(
        tof_source(),
        fib,
        ideal_det("loc", jitter=100.0),
        ideal_det("fib", jitter=100.0),
        1250.0,
        1350.0,
        wdm_bin_nm=4.0,
        duration_s=0.2,
        seed=99,
    )
    truth = group_delay(fib, scan.lambda_conjugate_nm)
    keep = scan.count > 50
    z = (scan.mean_dt_ps[keep] - truth[keep]) / scan.std_dt_ps[keep]
    chi2 = float((z**2).sum())
    df = int(keep.sum())
    assert stats.chi2.ppf(1e-4, df) < chi2 < stats.chi2.ppf(1.0 - 1e-4, df)


def test_tof_bins_are_sorted_and_conjugate():
    scan = run_tof_dispersion(
        tof_source(rate=2e5),
        quad_fiber(1.0),
        ideal_det("loc"),
        ideal_det("fib"),
        1260.0,
        1340.0,
        wdm_bin_nm=8.0,
        duration_s=0.05,
        seed=3,
    )
    assert np.all(np.diff(scan.lambda_local_nm) > 0)
    want = conjugate_wavelength(660.0, scan.lambda_local_nm)
    assert np.allclose(scan.lambda_conjugate_nm, want, rtol=1e-12)
    assert np.all(scan.count >= 0)


def test_tof_grid_validation():
    kw = dict(duration_s=0.01, seed=1)
    with pytest.raises(ValueError):
        # 1250..1349 is not a whole number of 4 nm bins
        run_tof_dispersion(
            tof_source(), quad_fiber(), ideal_det("a"), ideal_det("b"),
            1250.0, 1349.0, wdm_bin_nm=4.0, **kw,
        )
    with pytest.raises(ValueError):
        # grid exceeds the source support
        run_tof_dispersion(
            tof_source(), quad_fiber(), ideal_det("a"), ideal_det("b"),
            1000.0, 1400.0, wdm_bin_nm=100.0, **kw,
        )


def test_tof_provenance_recorded():
    scan = run_tof_dispersion(
        tof_source(rate=1e5), quad_fiber(1.0), ideal_det("a"), ideal_det("b"),
        1270.0, 1330.0, wdm_bin_nm=10.0, duration_s=0.02, seed=42,
    )
    assert scan.provenance["seed"] == 42
    for key in ("source_fingerprint", "fiber_fingerprint", "tool_version"):
        assert key in scan.provenance


# -----------------------------------------------------------------
# two-photon interferometer


def test_interferometer_balanced_arms_full_visibility():
    """Zero-length test fiber and the mirror at balance: both paths
    are identical, so the noiseless fringe visibility is 1 at x = 0."""
    src = SOURCE_PRESETS["sec42-source"]()
    fib = FiberSpec(0.0, QuadraticCoefficients(4.9e6, 1312.0, 0.092))
    grid = centered_mirror_grid(0.0, 30.0, 0.1)
    scan = run_two_photon_interferometer(src, fib, grid, [20.0])[0]
    lam_i = scan.meta["lambda_idler_center_nm"]
    # rate at x=0 is the constructive maximum, 2x the baseline
    i0 = np.argmin(np.abs(scan.axis))
    assert scan.rate_cps[i0] == pytest.approx(2.0, abs=1e-9)
    assert scan.rate_cps.min() >= -1e-12
    # fringe period is half the routed wavelength
    assert scan.meta["fringe_period_um"] == pytest.approx(lam_i * 5e-4, rel=1e-12)


def test_interferometer_envelope_is_unimodal_noiseless():
    src = SOURCE_PRESETS["sec42-source"]()
    fib = smf_fixture(0.0005)
    center = predict_mirror_center_um(src, fib)
    grid = centered_mirror_grid(center, 80.0, 0.2)
    scan = run_two_photon_interferometer(src, fib, grid, [20.0])[0]
    # visibility-optimal point beats every other scanned point: the
    # max of |rate - 1| sits inside the central fringe
    dev = np.abs(scan.rate_cps - 1.0)
    x_best = scan.axis[np.argmax(dev)]
    assert abs(x_best - center) < 2.0 * scan.meta["fringe_period_um"]


def test_interferometer_split_must_clear_bands():
    src = SOURCE_PRESETS["sec42-source"]()
    fib = smf_fixture(0.001)
    grid = centered_mirror_grid(0.0, 5.0, 0.5)
    with pytest.raises(ValueError):
        run_two_photon_interferometer(src, fib, grid, [20.0], wdm_split_nm=1280.0)
    with pytest.raises(ValueError):
        run_two_photon_interferometer(src, fib, grid, [20.0], wdm_split_nm=1600.0)


def test_interferometer_poisson_noise_level():
    src = SOURCE_PRESETS["sec42-source"]()
    fib = smf_fixture(0.001)
    grid = centered_mirror_grid(500.0, 40.0, 0.2)  # far from the peak
    cpp = 1.0e4
    scan = run_two_photon_interferometer(
        src, fib, grid, [20.0], counts_per_point=cpp, seed=5
    )[0]
    # off-peak the modulation washes out; counts hover around cpp
    assert abs(scan.rate_cps.mean() - cpp) < 5.0 * np.sqrt(cpp / len(grid))
    assert scan.rate_cps.std() > 0.5 * np.sqrt(cpp)


def test_interferometer_seed_determinism_across_workers():
    src = SOURCE_PRESETS["sec42-source"]()
    fib = smf_fixture(0.002)
    temps = [20.0, 45.0, 70.0]
    grids = [
        centered_mirror_grid(predict_mirror_center_um(
            __import__("twinphoton.source", fromlist=["tune_center_wavelength"]).tune_center_wavelength(src, t), fib
        ), 20.0, 0.2)
        for t in temps
    ]
    runs = [
        run_two_photon_interferometer(
            src, fib, grids, temps, counts_per_point=1e4, n_workers=w, seed=11
        )
        for w in (1, 4)
    ]
    for a, b in zip(*runs):
        assert np.array_equal(a.rate_cps, b.rate_cps)


def test_predicted_centroid_tracks_band_center_for_short_fiber():
    # negligible chirp: the density-squared average and the band-centre
    # delay agree to well under a fringe
    src = SOURCE_PRESETS["sec42-source"]()
    fib = smf_fixture(0.0002)
    a = predict_mirror_center_um(src, fib)
    b = predict_envelope_centroid_um(src, fib)
    assert abs(a - b) < 0.05


def test_interferogram_scan_validation():
    with pytest.raises(ValueError):
        InterferogramScan(
            axis=np.array([0.0, 1.0, 1.0]),
            axis_kind=MIRROR_AXIS,
            rate_cps=np.zeros(3),
            temperature_c=20.0,
        )
    with pytest.raises(ValueError):
        InterferogramScan(
            axis=np.array([0.0, 1.0]),
            axis_kind="voltage",
            rate_cps=np.zeros(2),
            temperature_c=20.0,
        )


# -----------------------------------------------------------------
# polarization-delay interferogram


def pmd_source(shape=RECTANGULAR, fwhm=300.0):
    return SourceSpec(
        660.0, 1e6, 1320.0, fwhm, spectral_shape=shape, pm_type="type_ii"
    )


def test_pmd_requires_entangled_source():
    grid = np.linspace(-100.0, 100.0, 51)
    with pytest.raises(TypeError):
        run_pmd_interferogram(tof_source(), quartz_plate_fixture(), grid, seed=1)


def test_pmd_dip_centered_on_element_delay():
    el = quartz_plate_fixture()
    grid = np.linspace(-120.0, 180.0, 301)
    scan = run_pmd_interferogram(
        pmd_source(), el, grid, noiseless=True, visibility=1.0, seed=1
    )
    assert scan.axis_kind == DELAY_AXIS
    i_min = int(np.argmin(scan.rate_cps))
    assert abs(scan.axis[i_min] - el.dgd_fs) <= (grid[1] - grid[0])


def test_pmd_zero_dgd_dip_at_origin():
    from twinphoton.fiber import BirefringentElement

    grid = np.linspace(-50.0, 50.0, 101)
    scan = run_pmd_interferogram(
        pmd_source(), BirefringentElement(0.0), grid, noiseless=True, seed=2
    )
    assert scan.axis[np.argmin(scan.rate_cps)] == pytest.approx(0.0, abs=1e-12)


def test_pmd_noiseless_dip_depth_equals_visibility():
    el = quartz_plate_fixture()
    # place a grid point exactly on the dip centre
    grid = el.dgd_fs + np.linspace(-60.0, 60.0, 121)
    for vis in (1.0, 0.4):
        scan = run_pmd_interferogram(
            pmd_source(), el, grid, counts_per_point=1e4,
            visibility=vis, noiseless=True, seed=3,
        )
        depth = 1.0 - scan.rate_cps.min() / 1e4
        assert depth == pytest.approx(vis, abs=1e-9)


def test_envelope_families_match_fourier_oracle():
    """The dip envelope is the magnitude of the band's Fourier
    transform.  Rectangular band of angular width dw: first zero at
    2 pi / dw (the triangle half-base).  Gaussian band of rms width
    s: |FT| = exp(-(s t)^2 / 2), e^-1/2 at the returned width."""
    # rectangular: numeric FT of a flat band between the edge
    # frequencies of the configured source
    src = pmd_source(RECTANGULAR, fwhm=300.0)
    lo_nm, hi_nm = src.support_nm()
    w1 = wavelength_to_angular_frequency(hi_nm)
    w2 = wavelength_to_angular_frequency(lo_nm)
    kind, width_fs = downconversion_envelope(src)
    assert kind == "triangular"
    assert width_fs == pytest.approx(2.0 * np.pi / (w2 - w1) * 1e15, rel=1e-12)
    om = np.linspace(w1, w2, 20001)
    t = width_fs * 1e-15
    amp = np.abs(np.trapezoid(np.exp(1j * om * t), om))
    peak = np.abs(np.trapezoid(np.ones_like(om), om))
    assert amp / peak < 1e-4  # first zero of the transform
    # triangle value at half the base matches autocorrelation overlap
    assert envelope_value("triangular", np.array([0.5]))[0] == 0.5

    gsrc = pmd_source("gaussian", fwhm=40.0)
    kind_g, width_g = downconversion_envelope(gsrc)
    assert kind_g == "gaussian"
    sigma_nm = 40.0 / (2.0 * np.sqrt(2.0 * np.log(2.0)))
    sigma_om = 2.0 * np.pi * C_NM_PER_S * sigma_nm / 1320.0**2
    assert width_g == pytest.approx(1e15 / sigma_om, rel=1e-12)
    assert envelope_value("gaussian", np.array([1.0]))[0] == pytest.approx(
        np.exp(-0.5), rel=1e-12
    )


def test_pmd_poisson_counts_near_baseline():
    el = quartz_plate_fixture()
    grid = np.linspace(400.0, 600.0, 201)  # far outside the dip
    scan = run_pmd_interferogram(pmd_source(), el, grid, counts_per_point=1e4, seed=4)
    assert abs(scan.rate_cps.mean() - 1e4) < 5.0 * np.sqrt(1e4 / len(grid))


# -----------------------------------------------------------------
# detector calibration


def test_calibration_ideal_detectors_count_everything():
    src = tof_source(rate=1e5)
    counts = run_detector_calibration(
        src, ideal_det("a"), ideal_det("b"), duration_s=0.1, window_ns=1.0, seed=21
    )
    assert counts.n_a == counts.n_b == counts.true_pair_count
    assert counts.n_ab == counts.true_pair_count


def test_calibration_thinning_matches_product_law():
    src = tof_source(rate=1e6)
    det_a = DetectorSpec(efficiency=0.1, detector_id="a")
    det_b = DetectorSpec(efficiency=0.2, detector_id="b")
    counts = run_detector_calibration(
        src, det_a, det_b, duration_s=0.5, window_ns=1.0, seed=22
    )
    n = counts.true_pair_count
    want = 0.1 * 0.2 * n
    assert abs(counts.n_ab - want) < 4.0 * np.sqrt(want)
    assert abs(counts.n_a - 0.1 * n) < 4.0 * np.sqrt(0.1 * n)


def test_calibration_darks_inflate_singles():
    src = tof_source(rate=1e5)
    det_a = DetectorSpec(efficiency=0.3, dark_rate_cps=5e4, detector_id="a")
    det_b = DetectorSpec(efficiency=0.3, detector_id="b")
    counts = run_detector_calibration(
        src, det_a, det_b, duration_s=1.0, window_ns=1.0, seed=23
    )
    # n_a gains ~5e4 dark tags on top of 0.3 * N true clicks
    excess = counts.n_a - 0.3 * counts.true_pair_count
    assert excess > 4e4
    assert counts.coincidence.n_ab == counts.n_ab


def test_calibration_provenance_and_invariants():
    src = tof_source(rate=1e5)
    counts = run_detector_calibration(
        src, ideal_det("a"), ideal_det("b"), duration_s=0.05, window_ns=1.0, seed=24
    )
    assert counts.n_ab <= min(counts.n_a, counts.n_b)
    assert counts.provenance["seed"] == 24
    assert "detector_a_fingerprint" in counts.provenance
