"""Correlated photon-pair source model.

Pairs are emitted as a homogeneous Poisson process in time.  One photon
("signal") is drawn from a configurable spectral density; its partner
("idler") is pinned by pump energy conservation, optionally blurred by
a finite pump linewidth.  Crystal temperature shifts the emission band
linearly at a configurable slope.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .core import (
    FS_PER_S,
    SPEED_OF_LIGHT_NM_PER_S,
    TYPE_I,
    TYPE_II,
    PairEvent,
    PolarizationDescriptor,
    conjugate_wavelength,
    degenerate_wavelength,
)

GAUSSIAN = "gaussian"
RECTANGULAR = "rectangular"

# FWHM of a Gaussian = _FWHM_SIGMA * sigma
_FWHM_SIGMA = 2.0 * np.sqrt(2.0 * np.log(2.0))
# Gaussian spectra are truncated at +-5 sigma; the density is
# renormalized by the mass inside the window so it still integrates to 1.
_TRUNC_SIGMA = 5.0


def _truncated_mass() -> float:
    from math import erf, sqrt

    return erf(_TRUNC_SIGMA / sqrt(2.0))


@dataclass(frozen=True)
class SourceSpec:
    """Static description of a photon-pair source.

    Parameters
    ----------
    lambda_pump_nm : pump vacuum wavelength.
    pair_rate_hz : mean pair emission rate.
    signal_center_nm : centre of the signal photon's spectral density.
    signal_fwhm_nm : full width at half maximum of that density.
    spectral_shape : "gaussian" or "rectangular".
    pm_type : "type_i" (both photons share ``axis_angle_rad``) or
        "type_ii" (entangled, anticorrelated under analysis).
    pump_linewidth_hz : FWHM of a Gaussian blur applied to the
        frequency-sum constraint; 0 means a monochromatic pump.
    temperature_c : crystal temperature the band centre refers to.
    tuning_slope_nm_per_c : linear shift of the band centre with
        temperature.
    temperature_range_c : admissible (min, max) crystal temperatures.
    """

    lambda_pump_nm: float
    pair_rate_hz: float
    signal_center_nm: float
    signal_fwhm_nm: float
    spectral_shape: str = GAUSSIAN
    pm_type: str = TYPE_I
    axis_angle_rad: float = 0.0
    pump_linewidth_hz: float = 0.0
    temperature_c: float = 25.0
    tuning_slope_nm_per_c: float = 0.0
    temperature_range_c: tuple[float, float] = (0.0, 100.0)

    def __post_init__(self) -> None:
        if self.lambda_pump_nm <= 0.0:
            raise ValueError("lambda_pump_nm must be positive")
        if self.pair_rate_hz < 0.0:
            raise ValueError("pair_rate_hz must be non-negative")
        if self.signal_fwhm_nm <= 0.0:
            raise ValueError("signal_fwhm_nm must be positive")
        if self.spectral_shape not in (GAUSSIAN, RECTANGULAR):
            raise ValueError(f"unknown spectral_shape {self.spectral_shape!r}")
        if self.pm_type not in (TYPE_I, TYPE_II):
            raise ValueError(f"unknown pm_type {self.pm_type!r}")
        if self.pump_linewidth_hz < 0.0:
            raise ValueError("pump_linewidth_hz must be non-negative")
        lo, hi = self.temperature_range_c
        if lo > hi:
            raise ValueError("temperature_range_c must be (min, max)")
        if not lo <= self.temperature_c <= hi:
            raise ValueError(
                f"temperature_c {self.temperature_c} outside configured "
                f"range {self.temperature_range_c}"
            )
        smin, _ = self.support_nm()
        if smin <= self.lambda_pump_nm:
            raise ValueError(
                "signal band must lie entirely above the pump wavelength "
                f"(support starts at {smin:.1f} nm, pump "
                f"{self.lambda_pump_nm:.1f} nm)"
            )
        if self.signal_center_nm > degenerate_wavelength(self.lambda_pump_nm):
            raise ValueError(
                "signal_center_nm must not exceed the degenerate wavelength "
                f"{degenerate_wavelength(self.lambda_pump_nm):.1f} nm, so the "
                "conjugate centre lands on the opposite side of degeneracy"
            )

    def support_nm(self) -> tuple[float, float]:
        """Wavelength interval outside which the density is exactly zero."""
        if self.spectral_shape == RECTANGULAR:
            half = 0.5 * self.signal_fwhm_nm
        else:
            half = _TRUNC_SIGMA * self.signal_fwhm_nm / _FWHM_SIGMA
        return self.signal_center_nm - half, self.signal_center_nm + half

    def polarization(self) -> PolarizationDescriptor:
        if self.pm_type == TYPE_I:
            return PolarizationDescriptor.type_i(self.axis_angle_rad)
        return PolarizationDescriptor.type_ii()


def spectral_density(spec: SourceSpec, lambda_nm) -> np.ndarray:
    """Signal-photon spectral density in 1/nm.

    Integrates to 1 over the support interval; exactly zero outside it.
    The Gaussian shape is truncated at +-5 sigma and renormalized, so
    the center-to-half-width ratio of 2 is preserved.
    """
    lam = np.atleast_1d(np.asarray(lambda_nm, dtype=float))
    lo, hi = spec.support_nm()
    inside = (lam >= lo) & (lam <= hi)
    out = np.zeros_like(lam)
    if spec.spectral_shape == RECTANGULAR:
        out[inside] = 1.0 / spec.signal_fwhm_nm
    else:
        sigma = spec.signal_fwhm_nm / _FWHM_SIGMA
        z = (lam[inside] - spec.signal_center_nm) / sigma
        out[inside] = np.exp(-0.5 * z * z) / (
            sigma * np.sqrt(2.0 * np.pi) * _truncated_mass()
        )
    if np.isscalar(lambda_nm):
        return float(out[0])
    return out


def sample_signal_wavelengths(
    spec: SourceSpec, n: int, rng: np.random.Generator
) -> np.ndarray:
    """Draw ``n`` signal wavelengths from the configured density."""
    if spec.spectral_shape == RECTANGULAR:
        lo, hi = spec.support_nm()
        return rng.uniform(lo, hi, n)
    sigma = spec.signal_fwhm_nm / _FWHM_SIGMA
    z = rng.standard_normal(n)
    # redraw the (rare) tail samples so the result is a true truncation
    bad = np.abs(z) > _TRUNC_SIGMA
    while np.any(bad):
        z[bad] = rng.standard_normal(int(bad.sum()))
        bad = np.abs(z) > _TRUNC_SIGMA
    return spec.signal_center_nm + sigma * z


def idler_wavelengths(
    spec: SourceSpec, lambda_signal_nm: np.ndarray, rng: np.random.Generator
) -> np.ndarray:
    """Partner wavelengths under energy conservation plus pump blur.

    With zero linewidth this is exactly
    :func:`twinphoton.core.conjugate_wavelength`.  A nonzero linewidth
    adds a Gaussian offset (FWHM = ``pump_linewidth_hz``, clipped at
    +-5 sigma) to the frequency sum.
    """
    lam_i = conjugate_wavelength(spec.lambda_pump_nm, lambda_signal_nm)
    if spec.pump_linewidth_hz == 0.0:
        return lam_i
    sigma_hz = spec.pump_linewidth_hz / _FWHM_SIGMA
    blur = np.clip(
        rng.standard_normal(np.shape(lam_i)) * sigma_hz,
        -_TRUNC_SIGMA * sigma_hz,
        _TRUNC_SIGMA * sigma_hz,
    )
    nu_i = SPEED_OF_LIGHT_NM_PER_S / lam_i + blur
    if np.any(nu_i <= 0.0):
        raise ValueError("pump linewidth blur produced a non-physical idler")
    return SPEED_OF_LIGHT_NM_PER_S / nu_i


@dataclass
class PairStream:
    """Bulk column view of emitted pairs (times in integer fs)."""

    t_emit_fs: np.ndarray
    lambda_signal_nm: np.ndarray
    lambda_idler_nm: np.ndarray
    polarization: PolarizationDescriptor
    duration_s: float

    def __len__(self) -> int:
        return len(self.t_emit_fs)

    def event(self, i: int) -> PairEvent:
        return PairEvent(
            int(self.t_emit_fs[i]),
            float(self.lambda_signal_nm[i]),
            float(self.lambda_idler_nm[i]),
            self.polarization,
        )


def sample_pair(
    spec: SourceSpec, rng: np.random.Generator, t_prev_fs: int = 0
) -> PairEvent:
    """Draw one pair; emission time advances from ``t_prev_fs``.

    The inter-emission gap is exponential with mean 1/pair_rate.
    """
    if spec.pair_rate_hz <= 0.0:
        raise ValueError("pair_rate_hz must be positive to sample pairs")
    gap_s = rng.exponential(1.0 / spec.pair_rate_hz)
    t = t_prev_fs + int(round(gap_s * FS_PER_S))
    lam_s = sample_signal_wavelengths(spec, 1, rng)
    lam_i = idler_wavelengths(spec, lam_s, rng)
    return PairEvent(t, float(lam_s[0]), float(lam_i[0]), spec.polarization())


def sample_pair_stream(
    spec: SourceSpec, duration_s: float, rng: np.random.Generator
) -> PairStream:
    """Emit pairs over ``duration_s`` as a homogeneous Poisson process."""
    if duration_s <= 0.0:
        raise ValueError("duration_s must be positive")
    if spec.pair_rate_hz <= 0.0:
        raise ValueError("pair_rate_hz must be positive to sample pairs")
    rate = spec.pair_rate_hz
    expected = rate * duration_s
    # draw exponential gaps in blocks until the cumulative time passes
    # the end of the run; the leftover tail is discarded
    block = int(expected + 6.0 * np.sqrt(expected + 1.0)) + 16
    gaps = rng.exponential(1.0 / rate, block)
    t_s = np.cumsum(gaps)
    while t_s[-1] < duration_s:
        gaps = rng.exponential(1.0 / rate, max(block // 4, 16))
        t_s = np.concatenate([t_s, t_s[-1] + np.cumsum(gaps)])
    t_s = t_s[t_s < duration_s]
    n = len(t_s)
    t_fs = np.rint(t_s * FS_PER_S).astype(np.int64)
    lam_s = sample_signal_wavelengths(spec, n, rng)
    lam_i = idler_wavelengths(spec, lam_s, rng)
    return PairStream(t_fs, lam_s, lam_i, spec.polarization(), duration_s)


def tune_center_wavelength(spec: SourceSpec, temperature_c: float) -> SourceSpec:
    """Return a copy of ``spec`` tuned to a new crystal temperature.

    The band centre moves linearly: slope * (new - current) nm.
    """
    lo, hi = spec.temperature_range_c
    if not lo <= temperature_c <= hi:
        raise ValueError(
            f"temperature {temperature_c} outside configured range ({lo}, {hi})"
        )
    shift = spec.tuning_slope_nm_per_c * (temperature_c - spec.temperature_c)
    return replace(
        spec,
        signal_center_nm=spec.signal_center_nm + shift,
        temperature_c=temperature_c,
    )


# -----------------------------------------------------------------
# Named presets

def _fig1_source() -> SourceSpec:
    # 660 nm pump, broadband pairs around 1.3 um; used by the
    # time-of-flight protocol (degenerate point at 1320 nm).
    return SourceSpec(
        lambda_pump_nm=660.0,
        pair_rate_hz=1.0e6,
        signal_center_nm=1300.0,
        signal_fwhm_nm=100.0,
        spectral_shape=GAUSSIAN,
        pm_type=TYPE_I,
        temperature_c=25.0,
        tuning_slope_nm_per_c=0.0,
        temperature_range_c=(0.0, 50.0),
    )


def _sec42_source() -> SourceSpec:
    # 700 nm pump, temperature-tunable band: 1250 nm at 20 C, slope
    # 2 nm/C, up to 1350 nm at 70 C; conjugates sweep 1454-1591 nm.
    return SourceSpec(
        lambda_pump_nm=700.0,
        pair_rate_hz=1.0e6,
        signal_center_nm=1250.0,
        signal_fwhm_nm=20.0,
        spectral_shape=GAUSSIAN,
        pm_type=TYPE_I,
        temperature_c=20.0,
        tuning_slope_nm_per_c=2.0,
        temperature_range_c=(20.0, 70.0),
    )


def _pmd_source() -> SourceSpec:
    # entangled pairs spanning a ~300 nm band centred on degeneracy,
    # for the polarization-dispersion interferogram protocol
    return SourceSpec(
        lambda_pump_nm=660.0,
        pair_rate_hz=1.0e6,
        signal_center_nm=1320.0,
        signal_fwhm_nm=300.0,
        spectral_shape=RECTANGULAR,
        pm_type=TYPE_II,
        temperature_c=25.0,
        tuning_slope_nm_per_c=0.0,
        temperature_range_c=(0.0, 50.0),
    )


SOURCE_PRESETS = {
    "fig1-source": _fig1_source,
    "sec42-source": _sec42_source,
    "pmd-source": _pmd_source,
}
