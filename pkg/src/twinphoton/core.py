"""Core physical model: units, spectral conversions, pair events.

Conventions used across the package:

* wavelengths are vacuum wavelengths in nanometres,
* angular frequencies are in rad/s,
* event timestamps are integer femtoseconds since the start of the run
  (an exact split representation: ``t // FS_PER_S`` coarse seconds plus
  a sub-second remainder), which keeps tag arithmetic lossless over
  second-scale runs,
* model-level delays (group delays, jitter widths, gate times) stay in
  floating point in the unit stated by the field name.

The pump laser is treated as monochromatic unless a nonzero linewidth
is configured on the source.
"""

from __future__ import annotations

import dataclasses
import hashlib
import json
from dataclasses import dataclass

import numpy as np

SPEED_OF_LIGHT_M_PER_S = 299792458.0
SPEED_OF_LIGHT_NM_PER_S = SPEED_OF_LIGHT_M_PER_S * 1e9

# Integer femtoseconds per second; timestamps are int64 multiples of 1 fs.
FS_PER_S = 10**15


def wavelength_to_angular_frequency(lambda_nm: float) -> float:
    """Convert a vacuum wavelength in nm to angular frequency in rad/s.

    Parameters
    ----------
    lambda_nm : float or ndarray
        Vacuum wavelength, nm. Must be positive.
    """
    lam = np.asarray(lambda_nm, dtype=float)
    if np.any(lam <= 0.0):
        raise ValueError("wavelength must be positive")
    omega = 2.0 * np.pi * SPEED_OF_LIGHT_NM_PER_S / lam
    return float(omega) if np.isscalar(lambda_nm) else omega


def angular_frequency_to_wavelength(omega_rad_s: float) -> float:
    """Convert angular frequency in rad/s back to vacuum wavelength in nm."""
    om = np.asarray(omega_rad_s, dtype=float)
    if np.any(om <= 0.0):
        raise ValueError("angular frequency must be positive")
    lam = 2.0 * np.pi * SPEED_OF_LIGHT_NM_PER_S / om
    return float(lam) if np.isscalar(omega_rad_s) else lam


def conjugate_wavelength(lambda_pump_nm: float, lambda_signal_nm: float) -> float:
    """Wavelength of the partner photon enforced by pump energy conservation.

    The pair satisfies 1/lambda_signal + 1/lambda_idler = 1/lambda_pump,
    so the partner of a photon at ``lambda_signal_nm`` sits at

        lambda_idler = lambda_pump * lambda_signal / (lambda_signal - lambda_pump)

    Parameters
    ----------
    lambda_pump_nm : float
        Pump vacuum wavelength, nm.
    lambda_signal_nm : float or ndarray
        Wavelength of one photon of the pair, nm. Must exceed the pump
        wavelength (otherwise no partner with positive energy exists).

    Returns
    -------
    float or ndarray
        Partner wavelength in nm.
    """
    if lambda_pump_nm <= 0.0:
        raise ValueError("pump wavelength must be positive")
    lam_s = np.asarray(lambda_signal_nm, dtype=float)
    if np.any(lam_s <= lambda_pump_nm):
        raise ValueError(
            "signal wavelength must exceed the pump wavelength "
            f"(got {lambda_signal_nm!r} with pump {lambda_pump_nm!r} nm)"
        )
    lam_i = lambda_pump_nm * lam_s / (lam_s - lambda_pump_nm)
    return float(lam_i) if np.isscalar(lambda_signal_nm) else lam_i


def degenerate_wavelength(lambda_pump_nm: float) -> float:
    """Wavelength at which both photons of a pair coincide (2x pump)."""
    if lambda_pump_nm <= 0.0:
        raise ValueError("pump wavelength must be positive")
    return 2.0 * lambda_pump_nm


# -----------------------------------------------------------------
# Polarization

TYPE_I = "type_i"
TYPE_II = "type_ii"


@dataclass(frozen=True)
class PolarizationDescriptor:
    """Polarization state of an emitted pair.

    ``type_i`` pairs share one fixed linear axis (``axis_angle_rad``,
    normalized into [0, pi)).  ``type_ii`` pairs are entangled with
    anticorrelated outcomes on analysis; no per-photon value exists
    before an analyzer is applied, so ``axis_angle_rad`` is None.
    """

    kind: str
    axis_angle_rad: float | None = None

    def __post_init__(self) -> None:
        if self.kind not in (TYPE_I, TYPE_II):
            raise ValueError(f"unknown polarization kind {self.kind!r}")
        if self.kind == TYPE_I:
            if self.axis_angle_rad is None:
                raise ValueError("type_i polarization requires an axis angle")
            object.__setattr__(
                self, "axis_angle_rad", float(self.axis_angle_rad) % np.pi
            )
        elif self.axis_angle_rad is not None:
            raise ValueError("type_ii polarization carries no per-photon axis")

    @classmethod
    def type_i(cls, axis_angle_rad: float) -> "PolarizationDescriptor":
        return cls(TYPE_I, axis_angle_rad)

    @classmethod
    def type_ii(cls) -> "PolarizationDescriptor":
        return cls(TYPE_II)


@dataclass(frozen=True)
class PairEvent:
    """One emitted photon pair.

    ``t_emit_fs`` is the emission timestamp in integer femtoseconds since
    the start of the run; ``split_emit()`` exposes the (seconds,
    sub-second) view of the same instant.
    """

    t_emit_fs: int
    lambda_signal_nm: float
    lambda_idler_nm: float
    polarization: PolarizationDescriptor

    def split_emit(self) -> tuple[int, float]:
        return split_timestamp(self.t_emit_fs)


# -----------------------------------------------------------------
# Split-timestamp helpers (int64 femtoseconds <-> seconds + sub-second)


def split_timestamp(t_fs):
    """Split fs timestamps into (coarse seconds, sub-second seconds).

    Works on scalars or int64 arrays. The sub-second part is exact to
    1 fs by construction (see module docstring).
    """
    t = np.asarray(t_fs, dtype=np.int64)
    secs = t // FS_PER_S
    frac = (t - secs * FS_PER_S) * 1e-15
    if np.isscalar(t_fs) or t.ndim == 0:
        return int(secs), float(frac)
    return secs, frac


def join_timestamp(seconds, subsecond):
    """Inverse of :func:`split_timestamp`; returns int64 femtoseconds."""
    secs = np.asarray(seconds, dtype=np.int64)
    frac = np.asarray(subsecond, dtype=float)
    if np.any(frac < 0.0) or np.any(frac >= 1.0):
        raise ValueError("sub-second part must lie in [0, 1)")
    t = secs * FS_PER_S + np.rint(frac * 1e15).astype(np.int64)
    if np.isscalar(seconds) and np.isscalar(subsecond):
        return int(t)
    return t


def seconds_to_fs(t_s):
    """Round float seconds to the nearest integer femtosecond."""
    t = np.rint(np.asarray(t_s, dtype=float) * 1e15).astype(np.int64)
    if np.isscalar(t_s):
        return int(t)
    return t


# -----------------------------------------------------------------
# Provenance


def _canonical(obj):
    if dataclasses.is_dataclass(obj) and not isinstance(obj, type):
        return {
            f.name: _canonical(getattr(obj, f.name))
            for f in dataclasses.fields(obj)
        }
    if isinstance(obj, dict):
        return {str(k): _canonical(v) for k, v in sorted(obj.items())}
    if isinstance(obj, (list, tuple)):
        return [_canonical(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_canonical(v) for v in obj.tolist()]
    if isinstance(obj, (np.floating, float)):
        return repr(float(obj))
    if isinstance(obj, (np.integer, int)):
        return int(obj)
    return obj


def fingerprint(obj) -> str:
    """Stable sha256 hex digest of a spec dataclass or plain structure.

    Floats are rendered with shortest round-trip repr so the digest is
    byte-stable across runs and platforms.
    """
    blob = json.dumps(_canonical(obj), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode("utf-8")).hexdigest()
