"""Fiber propagation: chromatic group delay, loss, birefringent delay.

Two interchangeable group-delay models are supported, both expressed
per kilometre and scaled by the fiber length:

* ``Sellmeier3Coefficients``: tau(lambda)/L = A + B*lambda^2 + C/lambda^2.
  The dispersion coefficient is D(lambda) = 2*B*lambda - 2*C/lambda^3
  and the zero-dispersion wavelength is (C/B)^(1/4) with slope
  S0 = 8*B there.
* ``QuadraticCoefficients``: tau(lambda)/L = tau0 + (S0/2)*(lambda-lambda0)^2,
  the canonical parabolic approximation around the zero-dispersion
  wavelength.

Attenuation follows the usual dB/km law: the survival probability over
the full length is 10^(-attenuation_db_per_km * length_km / 10).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import (
    SPEED_OF_LIGHT_M_PER_S,
    SPEED_OF_LIGHT_NM_PER_S,
    seconds_to_fs,
)

_TWO_PI_C = 2.0 * np.pi * SPEED_OF_LIGHT_NM_PER_S  # nm rad / s


@dataclass(frozen=True)
class Sellmeier3Coefficients:
    """Three-term group-delay model, per kilometre of fiber."""

    a_ps_per_km: float
    b_ps_per_nm2_km: float
    c_ps_nm2_per_km: float


@dataclass(frozen=True)
class QuadraticCoefficients:
    """Parabolic group-delay model around ``lambda0_nm``, per kilometre."""

    tau0_ps_per_km: float
    lambda0_nm: float
    s0_ps_per_nm2_km: float


@dataclass(frozen=True)
class FiberSpec:
    length_km: float
    model: Sellmeier3Coefficients | QuadraticCoefficients
    attenuation_db_per_km: float = 0.0

    def __post_init__(self) -> None:
        if self.length_km < 0.0:
            raise ValueError("length_km must be non-negative")
        if self.attenuation_db_per_km < 0.0:
            raise ValueError("attenuation_db_per_km must be non-negative")


def group_delay(fiber: FiberSpec, lambda_nm):
    """Total group delay through the fiber in ps, at the given nm."""
    lam = np.asarray(lambda_nm, dtype=float)
    if np.any(lam <= 0.0):
        raise ValueError("wavelength must be positive")
    m = fiber.model
    if isinstance(m, Sellmeier3Coefficients):
        per_km = m.a_ps_per_km + m.b_ps_per_nm2_km * lam**2 + m.c_ps_nm2_per_km / lam**2
    else:
        per_km = m.tau0_ps_per_km + 0.5 * m.s0_ps_per_nm2_km * (lam - m.lambda0_nm) ** 2
    out = fiber.length_km * per_km
    return float(out) if np.isscalar(lambda_nm) else out


def dispersion_coefficient(fiber: FiberSpec, lambda_nm):
    """Chromatic dispersion D(lambda) = (1/L) dtau/dlambda, ps/(nm km)."""
    lam = np.asarray(lambda_nm, dtype=float)
    if np.any(lam <= 0.0):
        raise ValueError("wavelength must be positive")
    m = fiber.model
    if isinstance(m, Sellmeier3Coefficients):
        out = 2.0 * m.b_ps_per_nm2_km * lam - 2.0 * m.c_ps_nm2_per_km / lam**3
    else:
        out = m.s0_ps_per_nm2_km * (lam - m.lambda0_nm)
    return float(out) if np.isscalar(lambda_nm) else out


def zero_dispersion_wavelength(fiber: FiberSpec) -> float:
    """Wavelength at which D vanishes; length-independent."""
    m = fiber.model
    if isinstance(m, QuadraticCoefficients):
        return m.lambda0_nm
    if m.b_ps_per_nm2_km <= 0.0 or m.c_ps_nm2_per_km <= 0.0:
        raise ValueError(
            "zero-dispersion wavelength requires positive B and C coefficients"
        )
    return (m.c_ps_nm2_per_km / m.b_ps_per_nm2_km) ** 0.25


def dispersion_slope_at_zero(fiber: FiberSpec) -> float:
    """dD/dlambda at the zero-dispersion wavelength, ps/(nm^2 km)."""
    m = fiber.model
    if isinstance(m, QuadraticCoefficients):
        return m.s0_ps_per_nm2_km
    # D' = 2B + 6C/lambda^4; with C = B*lambda0^4 this is 8B at lambda0
    return 8.0 * m.b_ps_per_nm2_km


def survival_probability(fiber: FiberSpec) -> float:
    return 10.0 ** (-fiber.attenuation_db_per_km * fiber.length_km / 10.0)


def propagate(
    fiber: FiberSpec,
    t_emit_fs: np.ndarray,
    lambda_nm: np.ndarray,
    rng: np.random.Generator,
):
    """Send photons through the fiber.

    Returns ``(arrival_fs, survived)``: arrival timestamps shifted by
    the chromatic group delay, and a boolean mask of photons that beat
    the attenuation.  Arrival order can differ from emission order for
    dispersive fibers; callers sort before detection.
    """
    tau_ps = np.atleast_1d(np.asarray(group_delay(fiber, lambda_nm), dtype=float))
    if np.any(tau_ps < 0.0):
        raise ValueError("group delay must be non-negative over the band")
    arrival = np.asarray(t_emit_fs, dtype=np.int64) + seconds_to_fs(tau_ps * 1e-12)
    p = survival_probability(fiber)
    survived = rng.random(arrival.shape) < p if p < 1.0 else np.ones(
        arrival.shape, dtype=bool
    )
    return arrival, survived


def phase_integral(fiber: FiberSpec, omega_rad_s, omega_ref_rad_s: float):
    """Spectral phase accumulated in the fiber, radians.

    Integral of the group delay (in seconds) over angular frequency
    from ``omega_ref_rad_s`` to ``omega_rad_s``, evaluated in closed
    form for both models.  The arbitrary constant is fixed by the
    reference frequency; only phase differences are meaningful.
    """
    om = np.asarray(omega_rad_s, dtype=float)
    if np.any(om <= 0.0) or omega_ref_rad_s <= 0.0:
        raise ValueError("angular frequencies must be positive")
    m = fiber.model
    scale = fiber.length_km * 1e-12  # ps/km -> s over full length
    k = _TWO_PI_C

    def antiderivative(w):
        if isinstance(m, Sellmeier3Coefficients):
            return scale * (
                m.a_ps_per_km * w
                - m.b_ps_per_nm2_km * k**2 / w
                + m.c_ps_nm2_per_km * w**3 / (3.0 * k**2)
            )
        lam0 = m.lambda0_nm
        return scale * (
            m.tau0_ps_per_km * w
            + 0.5
            * m.s0_ps_per_nm2_km
            * (-(k**2) / w - 2.0 * lam0 * k * np.log(w) + lam0**2 * w)
        )

    out = antiderivative(om) - antiderivative(omega_ref_rad_s)
    return float(out) if np.isscalar(omega_rad_s) else out


# -----------------------------------------------------------------
# Birefringent elements (polarization-mode delay)


@dataclass(frozen=True)
class BirefringentElement:
    """A lumped birefringent element with fixed differential delay."""

    dgd_fs: float
    axis_angle_rad: float = 0.0

    def __post_init__(self) -> None:
        if self.dgd_fs < 0.0:
            raise ValueError("dgd_fs must be non-negative")


def dgd_phase_delay(element: BirefringentElement, component: str) -> float:
    """Group delay in fs for one polarization component.

    The fast axis is the zero-delay reference; the slow axis lags by
    the element's differential group delay.
    """
    if component == "fast":
        return 0.0
    if component == "slow":
        return element.dgd_fs
    raise ValueError(f"component must be 'fast' or 'slow', got {component!r}")


def birefringent_plate(
    delta_n: float, length_m: float, axis_angle_rad: float = 0.0
) -> BirefringentElement:
    """Element for a plate of index contrast ``delta_n`` and length ``length_m``."""
    if delta_n < 0.0 or length_m < 0.0:
        raise ValueError("delta_n and length_m must be non-negative")
    dgd_s = delta_n * length_m / SPEED_OF_LIGHT_M_PER_S
    return BirefringentElement(dgd_fs=dgd_s * 1e15, axis_angle_rad=axis_angle_rad)


# -----------------------------------------------------------------
# Named presets


def smf_fixture(length_km: float = 10.0) -> FiberSpec:
    """Standard single-mode fiber fixture.

    Zero-dispersion wavelength 1312 nm with slope 0.092 ps/(nm^2 km);
    in the three-term model that pins B = S0/8 and C = B * lambda0^4.
    The additive constant sets a realistic ~4.9 us/km transit time.
    """
    lambda0 = 1312.0
    s0 = 0.092
    b = s0 / 8.0
    c = b * lambda0**4
    a = 4.9e6 - 2.0 * b * lambda0**2  # tau(lambda0) = 4.9e6 ps/km
    return FiberSpec(
        length_km=length_km,
        model=Sellmeier3Coefficients(a, b, c),
        attenuation_db_per_km=0.35,
    )


def quartz_plate_fixture() -> BirefringentElement:
    """1 mm quartz plate, index contrast 0.009 (about 30 fs of delay)."""
    return birefringent_plate(delta_n=0.009, length_m=1.0e-3)


FIBER_PRESETS = {
    "smf-fixture": smf_fixture,
}

ELEMENT_PRESETS = {
    "quartz-1mm": quartz_plate_fixture,
}
