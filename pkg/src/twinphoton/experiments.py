"""End-to-end measurement protocols.

Four protocols, each deterministic for a given seed and carrying
provenance (seed, fingerprints of every input spec, tool version):

* time-of-flight dispersion scan: one photon is wavelength-binned
  locally, its partner runs through a long fiber; the per-bin mean of
  the coincidence time differences traces the fiber group delay at the
  conjugate wavelength.
* two-photon interferometer: both photons enter either a long arm
  containing the test fiber or a short arm where a wavelength splitter
  routes the longer-wavelength band to a movable mirror.  Scanning the
  mirror recovers an interferogram whose visibility peaks where the
  mirror delay compensates the fiber's group-delay difference between
  the two bands.
* polarization-delay interferogram: entangled pairs cross a
  birefringent element; coincidence rate vs compensator delay shows a
  dip centred on the element's differential group delay.
* detector calibration: raw coincidence and singles counts from a
  split pair source, the inputs to absolute efficiency estimation.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from ._version import __version__
from .core import (
    FS_PER_S,
    SPEED_OF_LIGHT_M_PER_S,
    SPEED_OF_LIGHT_NM_PER_S,
    TYPE_II,
    conjugate_wavelength,
    degenerate_wavelength,
    fingerprint,
    seconds_to_fs,
    wavelength_to_angular_frequency,
)
from .detection import (
    ORIGIN_PHOTON,
    CoincidenceResult,
    DetectorSpec,
    count_coincidences,
    detect_stream,
)
from .fiber import (
    BirefringentElement,
    FiberSpec,
    group_delay,
    phase_integral,
    propagate,
)
from .source import (
    GAUSSIAN,
    RECTANGULAR,
    SourceSpec,
    sample_pair_stream,
    spectral_density,
    tune_center_wavelength,
)

_FWHM_SIGMA = 2.0 * np.sqrt(2.0 * np.log(2.0))


def _provenance(seed, **specs) -> dict:
    prov = {"seed": seed, "tool_version": __version__}
    for name, obj in specs.items():
        if obj is not None:
            prov[f"{name}_fingerprint"] = fingerprint(obj)
    return prov


def _resolve_rng(rng, seed):
    if rng is None:
        rng = np.random.default_rng(seed)
    return rng


# -----------------------------------------------------------------
# Time-of-flight dispersion scan


@dataclass
class TofScanResult:
    """Wavelength-binned coincidence delays.

    ``std_dt_ps`` is the standard error of ``mean_dt_ps`` (per-bin
    sample std over sqrt(count)); zero for bins with fewer than two
    entries.
    """

    lambda_local_nm: np.ndarray
    lambda_conjugate_nm: np.ndarray
    mean_dt_ps: np.ndarray
    std_dt_ps: np.ndarray
    count: np.ndarray
    fiber: FiberSpec
    wdm_bin_nm: float
    reference_delay_ps: float
    provenance: dict = field(default_factory=dict)


def run_tof_dispersion(
    source: SourceSpec,
    fiber: FiberSpec,
    detector_local: DetectorSpec,
    detector_fiber: DetectorSpec,
    wdm_min_nm: float,
    wdm_max_nm: float,
    *,
    wdm_bin_nm: float = 4.0,
    duration_s: float = 1.0,
    reference_delay_ps: float = 0.0,
    window_ns: float | None = None,
    rng: np.random.Generator | None = None,
    seed: int | None = None,
) -> TofScanResult:
    """Time-of-flight group-delay scan.

    For each emitted pair the local photon is binned by its true
    wavelength on an ideal grid and time-tagged after a fixed reference
    delay; the partner traverses the fiber.  Delays t_fiber - t_local
    of pairs detected on both channels accumulate per bin, so the bin
    mean estimates group_delay(fiber, conjugate(bin centre)) minus the
    reference delay.  Dark counts occupy detector dead time but carry
    no wavelength bin and are excluded from the per-bin accumulation
    (an ideal coincidence window); ``window_ns`` optionally clips
    outliers around each bin's median delay.
    """
    rng = _resolve_rng(rng, seed)
    if wdm_max_nm <= wdm_min_nm:
        raise ValueError("wdm_max_nm must exceed wdm_min_nm")
    nbins_f = (wdm_max_nm - wdm_min_nm) / wdm_bin_nm
    nbins = int(round(nbins_f))
    if nbins < 1 or abs(nbins_f - nbins) > 1e-9:
        raise ValueError("wdm grid must hold a whole number of bins")
    lo_sup, hi_sup = source.support_nm()
    if wdm_min_nm < lo_sup or wdm_max_nm > hi_sup:
        raise ValueError(
            f"wdm grid [{wdm_min_nm}, {wdm_max_nm}] nm lies outside the "
            f"source band [{lo_sup:.1f}, {hi_sup:.1f}] nm"
        )

    pairs = sample_pair_stream(source, duration_s, rng)
    n = len(pairs)
    arr_local = pairs.t_emit_fs + seconds_to_fs(reference_delay_ps * 1e-12)
    arr_fiber, survived = propagate(fiber, pairs.t_emit_fs, pairs.lambda_idler_nm, rng)

    # recorded local tag per pair (or -1)
    rec_local = np.full(n, -1, dtype=np.int64)
    stream_l = detect_stream(arr_local, detector_local, duration_s, rng)
    ph = stream_l.origin == ORIGIN_PHOTON
    rec_local[stream_l.source_index[ph]] = stream_l.t_fs[ph]

    # the fiber side needs a sort before detection (dispersion reorders)
    rec_fiber = np.full(n, -1, dtype=np.int64)
    surv_idx = np.nonzero(survived)[0]
    order = np.argsort(arr_fiber[surv_idx], kind="stable")
    sorted_idx = surv_idx[order]
    stream_f = detect_stream(arr_fiber[sorted_idx], detector_fiber, duration_s, rng)
    ph = stream_f.origin == ORIGIN_PHOTON
    rec_fiber[sorted_idx[stream_f.source_index[ph]]] = stream_f.t_fs[ph]

    both = (rec_local >= 0) & (rec_fiber >= 0)
    lam = pairs.lambda_signal_nm
    in_grid = (lam >= wdm_min_nm) & (lam < wdm_max_nm)
    use = both & in_grid
    dt_ps = (rec_fiber[use] - rec_local[use]) * 1e-3
    bin_idx = ((lam[use] - wdm_min_nm) / wdm_bin_nm).astype(np.int64)

    if window_ns is not None:
        half_ps = window_ns * 1e3 / 2.0
        keep = np.ones(len(dt_ps), dtype=bool)
        for b in range(nbins):
            m = bin_idx == b
            if np.any(m):
                center = np.median(dt_ps[m])
                keep[m] = np.abs(dt_ps[m] - center) <= half_ps
        dt_ps, bin_idx = dt_ps[keep], bin_idx[keep]

    count = np.bincount(bin_idx, minlength=nbins)
    sums = np.bincount(bin_idx, weights=dt_ps, minlength=nbins)
    mean = np.divide(sums, count, out=np.zeros(nbins), where=count > 0)
    sq = np.bincount(bin_idx, weights=(dt_ps - mean[bin_idx]) ** 2, minlength=nbins)
    with np.errstate(invalid="ignore", divide="ignore"):
        var = np.where(count > 1, sq / np.maximum(count - 1, 1), 0.0)
        sem = np.where(count > 1, np.sqrt(var / np.maximum(count, 1)), 0.0)

    centers = wdm_min_nm + (np.arange(nbins) + 0.5) * wdm_bin_nm
    return TofScanResult(
        lambda_local_nm=centers,
        lambda_conjugate_nm=conjugate_wavelength(source.lambda_pump_nm, centers),
        mean_dt_ps=mean,
        std_dt_ps=sem,
        count=count.astype(np.int64),
        fiber=fiber,
        wdm_bin_nm=wdm_bin_nm,
        reference_delay_ps=reference_delay_ps,
        provenance=_provenance(
            seed,
            source=source,
            fiber=fiber,
            detector_local=detector_local,
            detector_fiber=detector_fiber,
        ),
    )


# -----------------------------------------------------------------
# Interferogram scans (shared by the mirror and compensator protocols)

MIRROR_AXIS = "mirror_position_um"
DELAY_AXIS = "delay_fs"


@dataclass
class InterferogramScan:
    """Coincidence rate along a strictly increasing scan axis."""

    axis: np.ndarray
    axis_kind: str
    rate_cps: np.ndarray
    temperature_c: float
    visibility: np.ndarray | None = None
    meta: dict = field(default_factory=dict)
    provenance: dict = field(default_factory=dict)

    def __post_init__(self) -> None:
        self.axis = np.asarray(self.axis, dtype=float)
        self.rate_cps = np.asarray(self.rate_cps, dtype=float)
        if self.axis_kind not in (MIRROR_AXIS, DELAY_AXIS):
            raise ValueError(f"unknown axis_kind {self.axis_kind!r}")
        if len(self.axis) != len(self.rate_cps):
            raise ValueError("axis and rate arrays differ in length")
        if len(self.axis) > 1 and np.any(np.diff(self.axis) <= 0.0):
            raise ValueError("scan axis must be strictly increasing")


# -----------------------------------------------------------------
# Two-photon interferometer


def _frequency_grid(spec: SourceSpec, n_freq: int, power: float = 1.0):
    """Angular-frequency grid over the signal band plus Simpson weights
    of the spectral density (raised to ``power``) expressed per unit
    angular frequency."""
    if n_freq < 5:
        raise ValueError("n_freq must be at least 5")
    if n_freq % 2 == 0:
        n_freq += 1
    lo_nm, hi_nm = spec.support_nm()
    w_hi = wavelength_to_angular_frequency(lo_nm)
    w_lo = wavelength_to_angular_frequency(hi_nm)
    omega = np.linspace(w_lo, w_hi, n_freq)
    lam = 2.0 * np.pi * SPEED_OF_LIGHT_NM_PER_S / omega
    dens = spectral_density(spec, lam) * (2.0 * np.pi * SPEED_OF_LIGHT_NM_PER_S / omega**2)
    simp = np.ones(n_freq)
    simp[1:-1:2] = 4.0
    simp[2:-1:2] = 2.0
    weights = dens**power * simp
    return omega, weights / weights.sum()


def _interferometer_rates(
    tuned: SourceSpec,
    fiber: FiberSpec,
    positions_um: np.ndarray,
    n_freq: int,
    split_nm: float,
) -> np.ndarray:
    """Noiseless normalized rate (baseline 1) over mirror positions.

    The long arm sends both photons through the test fiber; the short
    arm routes the longer-wavelength band via the movable mirror (round
    trip 2x) and the shorter band straight through.  Coincidences of
    the two indistinguishable both-long / both-short amplitudes give

        R(x) = integral S(w_s) * [1 + cos(dphi(w_s, x))] dw_s

    with dphi the spectral phase of the long arm minus the mirror
    phase on the routed band.  The distinguishable single-long paths
    add only a flat pedestal inside a wide coincidence window and the
    default model excludes them.
    """
    lo_nm, hi_nm = tuned.support_nm()
    if hi_nm >= split_nm:
        raise ValueError(
            f"wavelength splitter at {split_nm:.1f} nm does not clear the "
            f"signal band (ends {hi_nm:.1f} nm)"
        )
    idler_min = conjugate_wavelength(tuned.lambda_pump_nm, hi_nm)
    if idler_min <= split_nm:
        raise ValueError(
            f"wavelength splitter at {split_nm:.1f} nm does not clear the "
            f"partner band (starts {idler_min:.1f} nm)"
        )
    omega_s, weights = _frequency_grid(tuned, n_freq)
    omega_p = wavelength_to_angular_frequency(tuned.lambda_pump_nm)
    omega_i = omega_p - omega_s
    omega_c = wavelength_to_angular_frequency(tuned.signal_center_nm)
    phi_fiber = phase_integral(fiber, omega_s, omega_c) + phase_integral(
        fiber, omega_i, omega_c
    )
    # mirror round trip: 2 x / c seconds of delay on the routed band
    delay_s = 2.0 * positions_um[:, None] * 1e-6 / SPEED_OF_LIGHT_M_PER_S
    phase = phi_fiber[None, :] - delay_s * omega_i[None, :]
    return 1.0 + np.cos(phase) @ weights


def run_two_photon_interferometer(
    source: SourceSpec,
    test_fiber: FiberSpec,
    mirror_positions_um,
    temperatures_c,
    *,
    counts_per_point: float | None = None,
    n_freq: int = 1025,
    wdm_split_nm: float | None = None,
    n_workers: int = 1,
    rng: np.random.Generator | None = None,
    seed: int | None = None,
) -> list[InterferogramScan]:
    """Mirror-scan interferograms, one per crystal temperature.

    ``mirror_positions_um`` is either one strictly increasing grid
    shared by all temperatures or a list with one grid per temperature.
    ``counts_per_point`` injects Poisson shot noise at that baseline
    count level; None keeps the noiseless analytic rates.  Temperatures
    re-tune the source band, so a sweep samples the fiber's group-delay
    difference across the whole emission range.
    """
    rng = _resolve_rng(rng, seed)
    temps = [float(t) for t in np.atleast_1d(temperatures_c)]
    if isinstance(mirror_positions_um, (list, tuple)) and len(
        mirror_positions_um
    ) == len(temps):
        grids = [np.asarray(g, dtype=float) for g in mirror_positions_um]
    else:
        grids = [np.asarray(mirror_positions_um, dtype=float)] * len(temps)
    split = (
        float(wdm_split_nm)
        if wdm_split_nm is not None
        else degenerate_wavelength(source.lambda_pump_nm)
    )
    child_rngs = rng.spawn(len(temps))

    def one(idx: int) -> InterferogramScan:
        tuned = tune_center_wavelength(source, temps[idx])
        rel = _interferometer_rates(tuned, test_fiber, grids[idx], n_freq, split)
        if counts_per_point is None:
            rate = rel
        else:
            rate = child_rngs[idx].poisson(counts_per_point * rel).astype(float)
        lam_i_center = conjugate_wavelength(
            tuned.lambda_pump_nm, tuned.signal_center_nm
        )
        omega_i_center = wavelength_to_angular_frequency(lam_i_center)
        fringe_um = np.pi * SPEED_OF_LIGHT_M_PER_S / omega_i_center * 1e6
        return InterferogramScan(
            axis=grids[idx],
            axis_kind=MIRROR_AXIS,
            rate_cps=rate,
            temperature_c=temps[idx],
            meta={
                "lambda_signal_center_nm": tuned.signal_center_nm,
                "lambda_idler_center_nm": lam_i_center,
                "fringe_period_um": fringe_um,
                "wdm_split_nm": split,
                "counts_per_point": counts_per_point,
            },
            provenance=_provenance(seed, source=tuned, fiber=test_fiber),
        )

    if n_workers > 1 and len(temps) > 1:
        with ThreadPoolExecutor(max_workers=n_workers) as pool:
            scans = list(pool.map(one, range(len(temps))))
    else:
        scans = [one(i) for i in range(len(temps))]
    return scans


def centered_mirror_grid(
    center_um: float, half_span_um: float, step_um: float
) -> np.ndarray:
    """Uniform mirror grid centred on ``center_um``."""
    if step_um <= 0.0 or half_span_um <= 0.0:
        raise ValueError("step_um and half_span_um must be positive")
    n = int(round(half_span_um / step_um))
    return center_um + step_um * np.arange(-n, n + 1)


def predict_mirror_center_um(source: SourceSpec, fiber: FiberSpec) -> float:
    """Mirror position of the expected visibility peak.

    The fringe envelope maximizes where the mirror round trip matches
    the fiber's group-delay difference between the band centres:
    2 x / c = tau_g(idler centre) - tau_g(signal centre).  Delay-curve
    curvature across a finite band shifts the true peak at second
    order (fractions of a fringe for metre-scale fibers), so treat
    this as the centre of the search window, not an exact answer.
    """
    lam_s = source.signal_center_nm
    lam_i = conjugate_wavelength(source.lambda_pump_nm, lam_s)
    dtau_ps = group_delay(fiber, lam_i) - group_delay(fiber, lam_s)
    return dtau_ps * 1e-12 * SPEED_OF_LIGHT_M_PER_S / 2.0 * 1e6


def predict_envelope_centroid_um(
    source: SourceSpec, fiber: FiberSpec, n_freq: int = 1025
) -> float:
    """Analytic first moment of the squared fringe envelope, in mirror
    micrometres.

    The squared envelope of a mirror-scan interferogram is the Fourier
    transform of the band's spectral autocorrelation, so its centroid
    equals the density-squared weighted average of the group-delay
    difference across the band.  Unlike the peak position, this moment
    is untouched by the chirp-induced envelope skew, which makes it the
    right analytic partner for the centroid reported by the envelope
    estimator.
    """
    omega_s, w2 = _frequency_grid(source, n_freq, power=2.0)
    omega_p = wavelength_to_angular_frequency(source.lambda_pump_nm)
    lam_s = 2.0 * np.pi * SPEED_OF_LIGHT_NM_PER_S / omega_s
    lam_i = 2.0 * np.pi * SPEED_OF_LIGHT_NM_PER_S / (omega_p - omega_s)
    dtau_ps = float(w2 @ (group_delay(fiber, lam_i) - group_delay(fiber, lam_s)))
    return dtau_ps * 1e-12 * SPEED_OF_LIGHT_M_PER_S / 2.0 * 1e6


# -----------------------------------------------------------------
# Polarization-delay interferogram


def downconversion_envelope(source: SourceSpec) -> tuple[str, float]:
    """Interferogram envelope family and width (fs) for a source.

    The dip envelope is the normalized transform of the downconversion
    band: a rectangular band of angular width dw gives a triangular
    envelope with half-base 2*pi/dw (the first zero of the band's
    Fourier transform); a Gaussian band of width sigma_w gives a
    Gaussian envelope exp(-(eps*sigma_w)^2/2), returned here as the
    1/sigma_w width.
    """
    if source.spectral_shape == RECTANGULAR:
        lo_nm, hi_nm = source.support_nm()
        delta_omega = wavelength_to_angular_frequency(
            lo_nm
        ) - wavelength_to_angular_frequency(hi_nm)
        return "triangular", 2.0 * np.pi / delta_omega * 1e15
    sigma_nm = source.signal_fwhm_nm / _FWHM_SIGMA
    sigma_omega = (
        2.0
        * np.pi
        * SPEED_OF_LIGHT_NM_PER_S
        * sigma_nm
        / source.signal_center_nm**2
    )
    return "gaussian", 1e15 / sigma_omega


def envelope_value(kind: str, x: np.ndarray) -> np.ndarray:
    """Unit envelope g(x) for normalized offset x = (eps - dip)/width."""
    x = np.asarray(x, dtype=float)
    if kind == "triangular":
        return np.maximum(0.0, 1.0 - np.abs(x))
    if kind == "gaussian":
        return np.exp(-0.5 * x * x)
    raise ValueError(f"unknown envelope kind {kind!r}")


def run_pmd_interferogram(
    source: SourceSpec,
    element: BirefringentElement,
    delays_fs,
    *,
    counts_per_point: float = 1.0e4,
    visibility: float = 1.0,
    noiseless: bool = False,
    rng: np.random.Generator | None = None,
    seed: int | None = None,
) -> InterferogramScan:
    """Coincidence dip versus compensator delay.

    Requires an entangled (type_ii) source: the dip interferes the
    fast/slow against slow/fast pair amplitudes through the element,
    which only exist for anticorrelated polarizations.  The rate is

        R(eps) = counts_per_point * (1 - V * g(eps - dgd))

    with g the source's envelope (see :func:`downconversion_envelope`).
    """
    if source.pm_type != TYPE_II:
        raise TypeError(
            "polarization-delay interferogram requires an entangled "
            f"(type_ii) source, got {source.pm_type!r}"
        )
    if not 0.0 <= visibility <= 1.0:
        raise ValueError("visibility must lie in [0, 1]")
    if counts_per_point <= 0.0:
        raise ValueError("counts_per_point must be positive")
    rng = _resolve_rng(rng, seed)
    eps = np.asarray(delays_fs, dtype=float)
    kind, width_fs = downconversion_envelope(source)
    g = envelope_value(kind, (eps - element.dgd_fs) / width_fs)
    rate = counts_per_point * (1.0 - visibility * g)
    if not noiseless:
        rate = rng.poisson(rate).astype(float)
    return InterferogramScan(
        axis=eps,
        axis_kind=DELAY_AXIS,
        rate_cps=rate,
        temperature_c=source.temperature_c,
        meta={
            "envelope": kind,
            "envelope_width_fs": width_fs,
            "counts_per_point": counts_per_point,
        },
        provenance=_provenance(seed, source=source, element=element),
    )


# -----------------------------------------------------------------
# Detector calibration


@dataclass
class CalibrationCounts:
    """Raw counts from a split-pair calibration run.

    ``true_pair_count`` is simulation truth kept for validation tests;
    estimators use only the counts, window, duration and configured
    dark rates.
    """

    n_a: int
    n_b: int
    n_ab: int
    duration_s: float
    window_ns: float
    dark_rate_a_cps: float
    dark_rate_b_cps: float
    coincidence: CoincidenceResult
    true_pair_count: int
    provenance: dict = field(default_factory=dict)


def run_detector_calibration(
    source: SourceSpec,
    detector_a: DetectorSpec,
    detector_b: DetectorSpec,
    *,
    duration_s: float = 1.0,
    window_ns: float = 1.0,
    path_delay_a_ps: float = 0.0,
    path_delay_b_ps: float = 0.0,
    rng: np.random.Generator | None = None,
    seed: int | None = None,
) -> CalibrationCounts:
    """Full Monte Carlo of the absolute-calibration counting scheme.

    Pairs are split deterministically: signal photon to detector A,
    partner to detector B.  Both channels run the complete detection
    model (efficiency, jitter, darks, dead time) and the coincidence
    engine pairs the resulting tag streams.
    """
    rng = _resolve_rng(rng, seed)
    pairs = sample_pair_stream(source, duration_s, rng)
    arr_a = pairs.t_emit_fs + seconds_to_fs(path_delay_a_ps * 1e-12)
    arr_b = pairs.t_emit_fs + seconds_to_fs(path_delay_b_ps * 1e-12)
    stream_a = detect_stream(arr_a, detector_a, duration_s, rng)
    stream_b = detect_stream(arr_b, detector_b, duration_s, rng)
    result = count_coincidences(stream_a, stream_b, window_ns)
    return CalibrationCounts(
        n_a=result.n_a,
        n_b=result.n_b,
        n_ab=result.n_ab,
        duration_s=duration_s,
        window_ns=window_ns,
        dark_rate_a_cps=detector_a.dark_rate_cps,
        dark_rate_b_cps=detector_b.dark_rate_cps,
        coincidence=result,
        true_pair_count=len(pairs),
        provenance=_provenance(
            seed, source=source, detector_a=detector_a, detector_b=detector_b
        ),
    )
