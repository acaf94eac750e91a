"""Estimators that turn protocol outputs into physical quantities.

Every estimator reports a value together with a propagated standard
error and raises a typed :mod:`twinphoton.errors` exception when the
data cannot support the estimate (no dip, no fringes, too few counts,
singular design, unphysical fit domain).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import least_squares

from .core import fingerprint
from .errors import (
    FitDomainError,
    InsufficientCountsError,
    NoDipError,
    NoFringeError,
    RankDeficiencyError,
)
from .experiments import (
    DELAY_AXIS,
    MIRROR_AXIS,
    CalibrationCounts,
    InterferogramScan,
    TofScanResult,
    envelope_value,
)

# -----------------------------------------------------------------
# Group delay curve from a time-of-flight scan


@dataclass
class GroupDelayFit:
    """tau(lambda) = a + b lambda^2 + c / lambda^2 over the full fiber.

    Units: ps, nm.  ``s0_ps_per_nm2_km`` (the dispersion slope 8 b / L
    at the zero-dispersion wavelength) is present only when the fiber
    length was supplied.
    """

    a_ps: float
    b_ps_per_nm2: float
    c_ps_nm2: float
    covariance: np.ndarray
    lambda0_nm: float
    lambda0_stderr_nm: float
    s0_ps_per_nm2_km: float | None
    residual_ps: np.ndarray
    lambda_nm: np.ndarray
    weighted: bool
    data_fingerprint: str = ""

    def delay_at(self, lambda_nm) -> np.ndarray:
        lam = np.asarray(lambda_nm, dtype=float)
        return self.a_ps + self.b_ps_per_nm2 * lam**2 + self.c_ps_nm2 / lam**2


def _solve_scaled_lsq(design: np.ndarray, y: np.ndarray, w: np.ndarray | None):
    """Column-scaled weighted least squares.

    Returns (beta, unscaled normal-matrix inverse); the caller decides
    the variance scale.  Columns are normalized first because the
    [1, lambda^2, lambda^-2] basis spans ~13 decades.
    """
    if w is not None:
        sw = np.sqrt(w)
        design = design * sw[:, None]
        y = y * sw
    norms = np.linalg.norm(design, axis=0)
    if np.any(norms == 0.0):
        raise RankDeficiencyError("design matrix has a zero column")
    ds = design / norms
    if np.linalg.matrix_rank(ds) < design.shape[1]:
        raise RankDeficiencyError(
            "design matrix is rank deficient; the scan does not constrain "
            "all fit coefficients (too few distinct wavelengths?)"
        )
    beta_s, *_ = np.linalg.lstsq(ds, y, rcond=None)
    ninv_s = np.linalg.inv(ds.T @ ds)
    beta = beta_s / norms
    ninv = ninv_s / np.outer(norms, norms)
    return beta, ninv


def fit_group_delay(
    lambda_nm,
    delay_ps,
    std_ps=None,
    *,
    length_km: float | None = None,
    data_fingerprint: str = "",
) -> GroupDelayFit:
    """Weighted least-squares fit of the three-term delay curve.

    ``std_ps`` holds per-point standard errors; weights are 1/std^2.
    Pass None, or an all-zero array (a noiseless scan), for an
    unweighted fit whose variance scale comes from the residuals.  A
    mix of zero and positive uncertainties is ambiguous and rejected.
    """
    lam = np.asarray(lambda_nm, dtype=float)
    y = np.asarray(delay_ps, dtype=float)
    if lam.shape != y.shape or lam.ndim != 1:
        raise ValueError("lambda_nm and delay_ps must be 1-d arrays of equal length")
    if np.any(lam <= 0.0):
        raise ValueError("wavelengths must be positive")

    w = None
    weighted = False
    if std_ps is not None:
        std = np.asarray(std_ps, dtype=float)
        if std.shape != lam.shape:
            raise ValueError("std_ps must match lambda_nm in shape")
        if np.any(std > 0.0):
            if np.any(std <= 0.0):
                raise FitDomainError(
                    "some points carry zero uncertainty while others do not; "
                    "pass std_ps=None for an unweighted fit"
                )
            w = 1.0 / std**2
            weighted = True

    n_min = 3 if weighted else 4
    if lam.size < n_min:
        raise InsufficientCountsError(
            f"need at least {n_min} wavelength bins, got {lam.size}"
        )

    design = np.column_stack([np.ones_like(lam), lam**2, lam**-2])
    beta, ninv = _solve_scaled_lsq(design, y, w)
    resid = design @ beta - y
    if weighted:
        cov = ninv
    else:
        dof = lam.size - 3
        cov = ninv * (resid @ resid / dof)

    a, b, c = beta
    if b <= 0.0 or c <= 0.0:
        raise FitDomainError(
            "fitted curve has no zero-dispersion wavelength "
            f"(b={b:.4g} ps/nm^2, c={c:.4g} ps nm^2 must both be positive)"
        )
    lambda0 = (c / b) ** 0.25
    grad = np.array([0.0, -lambda0 / (4.0 * b), lambda0 / (4.0 * c)])
    var0 = float(grad @ cov @ grad)
    s0 = None
    if length_km is not None:
        if length_km <= 0.0:
            raise ValueError("length_km must be positive")
        s0 = float(8.0 * b / length_km)
    return GroupDelayFit(
        a_ps=float(a),
        b_ps_per_nm2=float(b),
        c_ps_nm2=float(c),
        covariance=cov,
        lambda0_nm=float(lambda0),
        lambda0_stderr_nm=float(np.sqrt(max(var0, 0.0))),
        s0_ps_per_nm2_km=s0,
        residual_ps=resid,
        lambda_nm=lam,
        weighted=weighted,
        data_fingerprint=data_fingerprint,
    )


def fit_group_delay_scan(scan: TofScanResult, *, min_count: int = 1) -> GroupDelayFit:
    """Fit the delay curve of a time-of-flight scan result.

    Bins with fewer than ``min_count`` entries are dropped.  The fit
    runs against the conjugate (fiber-side) wavelength of each bin.
    """
    keep = scan.count >= max(min_count, 1)
    if not np.any(keep):
        raise InsufficientCountsError("scan has no occupied wavelength bins")
    std = scan.std_dt_ps[keep]
    return fit_group_delay(
        scan.lambda_conjugate_nm[keep],
        scan.mean_dt_ps[keep],
        std if np.any(std > 0.0) else None,
        length_km=scan.fiber.length_km,
        data_fingerprint=fingerprint(
            {
                "lambda_nm": scan.lambda_conjugate_nm[keep],
                "mean_dt_ps": scan.mean_dt_ps[keep],
                "std_dt_ps": std,
            }
        ),
    )


# -----------------------------------------------------------------
# Band delay differences from an interferometer temperature sweep


@dataclass
class BandDelayCurve:
    """Relative delay curve from paired band-delay differences.

    Fits delta_k = b (li^2 - ls^2) + c (li^-2 - ls^-2) so the constant
    term cancels; ``delay_relative_to`` evaluates
    tau(lambda) - tau(lambda_ref) in ps.
    """

    b_ps_per_nm2: float
    c_ps_nm2: float
    covariance: np.ndarray
    lambda0_nm: float
    lambda0_stderr_nm: float
    residual_ps: np.ndarray

    def delay_relative_to(self, lambda_nm, lambda_ref_nm: float) -> np.ndarray:
        lam = np.asarray(lambda_nm, dtype=float)
        return self.b_ps_per_nm2 * (lam**2 - lambda_ref_nm**2) + self.c_ps_nm2 * (
            lam**-2 - lambda_ref_nm**-2
        )


def fit_delay_difference_curve(
    lambda_short_nm,
    lambda_long_nm,
    delay_diff_ps,
    std_ps=None,
) -> BandDelayCurve:
    """Assemble a relative group-delay curve from band delay differences.

    Each measurement k supplies tau(lambda_long_k) - tau(lambda_short_k)
    in ps (for the two-photon interferometer: twice the best mirror
    position over c).  Two distinct band pairs are enough to pin the
    curve shape; the absolute offset is unobservable and omitted.
    """
    ls = np.asarray(lambda_short_nm, dtype=float)
    ll = np.asarray(lambda_long_nm, dtype=float)
    y = np.asarray(delay_diff_ps, dtype=float)
    if not (ls.shape == ll.shape == y.shape) or ls.ndim != 1:
        raise ValueError("inputs must be 1-d arrays of equal length")
    if ls.size < 2:
        raise InsufficientCountsError("need at least two band pairs")
    w = None
    if std_ps is not None:
        std = np.asarray(std_ps, dtype=float)
        if np.any(std > 0.0):
            if np.any(std <= 0.0):
                raise FitDomainError(
                    "mixed zero and positive uncertainties; pass std_ps=None"
                )
            w = 1.0 / std**2
    design = np.column_stack([ll**2 - ls**2, ll**-2 - ls**-2])
    beta, ninv = _solve_scaled_lsq(design, y, w)
    resid = design @ beta - y
    if w is not None:
        cov = ninv
    elif ls.size > 2:
        cov = ninv * (resid @ resid / (ls.size - 2))
    else:
        cov = ninv * 0.0
    b, c = beta
    if b <= 0.0 or c <= 0.0:
        raise FitDomainError(
            "fitted curve has no zero-dispersion wavelength "
            f"(b={b:.4g}, c={c:.4g} must both be positive)"
        )
    lambda0 = (c / b) ** 0.25
    grad = np.array([-lambda0 / (4.0 * b), lambda0 / (4.0 * c)])
    var0 = float(grad @ cov @ grad)
    return BandDelayCurve(
        b_ps_per_nm2=float(b),
        c_ps_nm2=float(c),
        covariance=cov,
        lambda0_nm=float(lambda0),
        lambda0_stderr_nm=float(np.sqrt(max(var0, 0.0))),
        residual_ps=resid,
    )


# -----------------------------------------------------------------
# Absolute detector efficiency


@dataclass
class EfficiencyEstimate:
    """Absolute efficiencies from split-pair counting.

    With corrected coincidences M = n_ab - accidentals and corrected
    singles D_x = n_x - dark_x * T:

        eta_a = M / D_b        eta_b = M / D_a
        pair_rate = D_a * D_b / (M * T)

    Standard errors come from first-order Poisson propagation with
    cov(n_ab, n_a) = cov(n_ab, n_b) = cov(n_a, n_b) = n_ab (every true
    coincidence contributes one count to each stream); dark rates and
    the window are treated as known constants.
    """

    efficiency_a: float
    efficiency_b: float
    stderr_a: float
    stderr_b: float
    pair_rate_hz: float
    corrected_coincidences: float
    accidentals: float
    background_corrected: bool
    clipped: bool = False
    data_fingerprint: str = ""


def _efficiency_variance(n_ab, n_a, n_b, acc, m, d_other, which: str) -> float:
    """First-order variance of M / D for eta_a (which='a') or eta_b."""
    # partials of eta = (n_ab - n_a n_b w/T) / (n_other - dark_other T)
    g_ab = 1.0 / d_other
    if which == "a":
        g_a = -(acc / n_a) / d_other if n_a > 0 else 0.0
        g_b = (-(acc / n_b) if n_b > 0 else 0.0) / d_other - m / d_other**2
    else:
        g_b = -(acc / n_b) / d_other if n_b > 0 else 0.0
        g_a = (-(acc / n_a) if n_a > 0 else 0.0) / d_other - m / d_other**2
    var = (
        g_ab**2 * n_ab
        + g_a**2 * n_a
        + g_b**2 * n_b
        + 2.0 * n_ab * (g_ab * g_a + g_ab * g_b + g_a * g_b)
    )
    return max(var, 0.0)


def estimate_efficiency(
    counts: CalibrationCounts,
    *,
    correct_background: bool = True,
    clip: bool = False,
) -> EfficiencyEstimate:
    """Estimate both detector efficiencies from calibration counts.

    ``correct_background=False`` uses the raw ratios (no accidental or
    dark subtraction), which overestimate the efficiencies whenever
    background is present.  ``clip=True`` clamps the reported values
    into [0, 1]; estimators downstream of bias studies should leave the
    raw values untouched.
    """
    n_ab, n_a, n_b = counts.n_ab, counts.n_a, counts.n_b
    t = counts.duration_s
    if correct_background:
        acc = n_a * n_b * counts.window_ns * 1e-9 / t
        d_a = n_a - counts.dark_rate_a_cps * t
        d_b = n_b - counts.dark_rate_b_cps * t
    else:
        acc = 0.0
        d_a = float(n_a)
        d_b = float(n_b)
    m = n_ab - acc
    if d_a <= 0.0 or d_b <= 0.0 or m <= 0.0:
        raise InsufficientCountsError(
            "corrected counts are not positive "
            f"(M={m:.1f}, D_a={d_a:.1f}, D_b={d_b:.1f}); collect more data "
            "or lower the background"
        )
    eta_a = m / d_b
    eta_b = m / d_a
    var_a = _efficiency_variance(n_ab, n_a, n_b, acc, m, d_b, "a")
    var_b = _efficiency_variance(n_ab, n_a, n_b, acc, m, d_a, "b")
    clipped = False
    if clip:
        clipped = not (0.0 <= eta_a <= 1.0 and 0.0 <= eta_b <= 1.0)
        eta_a = min(max(eta_a, 0.0), 1.0)
        eta_b = min(max(eta_b, 0.0), 1.0)
    return EfficiencyEstimate(
        efficiency_a=float(eta_a),
        efficiency_b=float(eta_b),
        stderr_a=float(np.sqrt(var_a)),
        stderr_b=float(np.sqrt(var_b)),
        pair_rate_hz=float(d_a * d_b / (m * t)),
        corrected_coincidences=float(m),
        accidentals=float(acc),
        background_corrected=correct_background,
        clipped=clipped,
        data_fingerprint=fingerprint(
            {
                "n_a": n_a,
                "n_b": n_b,
                "n_ab": n_ab,
                "duration_s": t,
                "window_ns": counts.window_ns,
            }
        ),
    )


# -----------------------------------------------------------------
# Fringe envelope of a mirror-scan interferogram


@dataclass
class VisibilityEnvelopeFit:
    """Gaussian envelope of the demodulated fringe amplitude.

    ``center_um`` is the centroid of the squared envelope.  That moment
    is the robust location estimate for a dispersed interferogram: the
    squared fringe envelope is the Fourier transform of the spectral
    autocorrelation, so its first moment equals the spectral-density-
    squared weighted mean of the group-delay difference no matter how
    fiber chirp skews the envelope shape.  A Gaussian peak fit
    (``gauss_center_um``) is also reported; the two agree for an
    undispersed scan and drift apart as chirp makes the envelope
    asymmetric.
    """

    center_um: float
    center_stderr_um: float
    gauss_center_um: float
    sigma_um: float
    sigma_stderr_um: float
    visibility_peak: float
    visibility_stderr: float
    baseline_cps: float
    fringe_period_um: float
    position_um: np.ndarray
    envelope: np.ndarray
    degenerate: bool
    data_fingerprint: str = ""


def _dominant_fringe_frequency(x: np.ndarray, y: np.ndarray) -> float:
    """Fringe angular frequency (rad per axis unit) via an FFT peak
    with parabolic refinement.  Requires a uniform axis."""
    dx = np.diff(x)
    if not np.allclose(dx, dx[0], rtol=1e-6, atol=0.0):
        raise NoFringeError("fringe search needs a uniformly spaced scan axis")
    resid = y - y.mean()
    n = len(y)
    spec = np.abs(np.fft.rfft(resid * np.hanning(n), n=4 * n))
    spec[0] = 0.0
    k = int(np.argmax(spec))
    floor = np.median(spec[1:])
    if floor > 0.0 and spec[k] < 5.0 * floor:
        raise NoFringeError("no dominant fringe frequency above the noise floor")
    if spec[k] == 0.0:
        raise NoFringeError("scan contains no fringe signal")
    if 0 < k < len(spec) - 1:
        a, b, c = np.log(np.maximum(spec[k - 1 : k + 2], 1e-300))
        denom = a - 2.0 * b + c
        if denom < 0.0:
            k = k + 0.5 * (a - c) / denom
    return 2.0 * np.pi * k / (4 * n * dx[0])


def fit_visibility_envelope(
    scan: InterferogramScan,
    *,
    window_periods: float = 3.0,
) -> VisibilityEnvelopeFit:
    """Locate the visibility peak of a mirror-scan interferogram.

    The fringe carrier frequency is found by FFT, the scan is
    quadrature-demodulated against it, and the carrier is low-passed
    with a flat window ``window_periods`` fringe periods long.  The
    optimal mirror position ``center_um`` is the centroid of the
    squared envelope (see ``VisibilityEnvelopeFit``); width, peak
    visibility and the error scale come from a Gaussian nonlinear
    least-squares fit to the envelope.
    """
    if scan.axis_kind != MIRROR_AXIS:
        raise ValueError("envelope fit expects a mirror-position scan")
    x = scan.axis
    y = scan.rate_cps
    if len(x) < 16:
        raise NoFringeError("scan is too short to resolve fringes")
    k_rad = _dominant_fringe_frequency(x, y)
    baseline = float(y.mean())
    if baseline <= 0.0:
        raise NoFringeError("scan has no counts")

    z = (y - baseline) * np.exp(-1j * k_rad * x)
    period = 2.0 * np.pi / k_rad
    dx = x[1] - x[0]
    win = max(3, int(round(window_periods * period / dx)) | 1)
    kernel = np.ones(win) / win
    env = 2.0 * np.abs(np.convolve(z, kernel, mode="same"))

    peak = int(np.argmax(env))
    amp0 = env[peak]
    if amp0 <= 0.0:
        raise NoFringeError("demodulated envelope shows no visibility peak")
    # second-moment width seed
    wts = np.maximum(env - 0.1 * amp0, 0.0)
    mu0 = float((wts * x).sum() / wts.sum())
    sig0 = float(np.sqrt((wts * (x - mu0) ** 2).sum() / wts.sum()))
    sig0 = max(sig0, dx)

    # the moving average correlates neighbours across one window, so
    # the fit runs on window-stride samples whose residuals are
    # independent; otherwise the quoted errors would be ~sqrt(win)
    # too small
    start = peak % win
    xs, es = x[start::win], env[start::win]
    if len(xs) < 8:
        xs, es = x, env

    def resid(p):
        return p[0] * np.exp(-0.5 * ((xs - p[1]) / p[2]) ** 2) - es

    span = x[-1] - x[0]
    sol = least_squares(
        resid,
        x0=[amp0, x[peak], sig0],
        bounds=([0.0, x[0] - span, dx / 10.0], [np.inf, x[-1] + span, np.inf]),
        xtol=1e-14,
        ftol=1e-14,
        gtol=1e-14,
    )
    amp, mu, sig = sol.x
    dof = max(len(xs) - 3, 1)
    scale = 2.0 * sol.cost / dof
    jtj = sol.jac.T @ sol.jac
    degenerate = False
    try:
        cov = np.linalg.inv(jtj) * scale
        err = np.sqrt(np.maximum(np.diag(cov), 0.0))
    except np.linalg.LinAlgError:
        degenerate = True
        err = np.full(3, np.inf)
    # narrower than one step or wider than the whole scan: either way
    # the envelope shape is unresolved and the peak location means
    # nothing, but the demodulation itself is fine (not a no-fringe
    # condition)
    if sig <= dx or sig >= span:
        degenerate = True
        err = np.full(3, np.inf)

    # First moment of the squared envelope.  Integrate over a window
    # wide enough that the truncated tail is negligible, and measure
    # the additive noise power of |z|^2 from the samples outside it so
    # shot noise does not drag the centroid toward the grid middle.
    e2 = env * env
    core = np.abs(x - mu) <= 4.5 * sig
    far = np.abs(x - mu) > 6.0 * sig
    noise_power = float(e2[far].mean()) if far.sum() >= 8 else 0.0
    if not degenerate and core.sum() >= 8:
        mass = e2[core] - noise_power
        total = float(mass.sum())
        if total > 0.0:
            centroid = float((mass * x[core]).sum() / total)
            # delta-method error; neighbouring samples share the
            # smoothing window, hence the factor ``win``
            var_e2 = 2.0 * noise_power * e2[core] + noise_power**2
            var_c = win * float(((x[core] - centroid) ** 2 * var_e2).sum()) / total**2
            centroid_err = np.sqrt(var_c)
        else:
            centroid, centroid_err = float(mu), np.inf
    else:
        centroid, centroid_err = float(mu), np.inf
    return VisibilityEnvelopeFit(
        center_um=centroid,
        center_stderr_um=float(max(err[1], centroid_err)) if not degenerate else float(err[1]),
        gauss_center_um=float(mu),
        sigma_um=float(sig),
        sigma_stderr_um=float(err[2]),
        visibility_peak=float(amp / baseline),
        visibility_stderr=float(err[0] / baseline),
        baseline_cps=baseline,
        fringe_period_um=float(period),
        position_um=x,
        envelope=env / baseline,
        degenerate=degenerate,
        data_fingerprint=fingerprint({"axis": x, "rate": y}),
    )


# -----------------------------------------------------------------
# Dip centre of a polarization-delay interferogram


@dataclass
class DipFit:
    """Fitted dip of a delay-scan interferogram.

    Model: rate = B * (1 - V * g((eps - delay)/width)) with g the
    chosen unit envelope.  Standard errors come from the full
    four-parameter jacobian at the solution with the variance scale
    estimated from the residuals.
    """

    delay_fs: float
    delay_stderr_fs: float
    width_fs: float
    width_stderr_fs: float
    visibility: float
    visibility_stderr: float
    baseline_cps: float
    baseline_stderr_cps: float
    envelope: str
    data_fingerprint: str = ""


def fit_dip_center(
    scan: InterferogramScan,
    envelope: str | None = None,
) -> DipFit:
    """Fit the dip position of a delay-scan interferogram.

    ``envelope`` selects the dip shape family ('triangular' or
    'gaussian'); when omitted it is taken from ``scan.meta`` if the
    protocol recorded one.  The nonlinear search runs over (delay,
    width) with the linear pair (baseline, depth) projected out at each
    step, then the quoted errors come from the joint four-parameter
    covariance.
    """
    if scan.axis_kind != DELAY_AXIS:
        raise ValueError("dip fit expects a delay scan")
    if envelope is None:
        envelope = scan.meta.get("envelope")
    if envelope not in ("triangular", "gaussian"):
        raise ValueError(f"envelope must be 'triangular' or 'gaussian', got {envelope!r}")
    eps = scan.axis
    y = scan.rate_cps
    if len(eps) < 6:
        raise NoDipError("scan is too short to fit a dip")
    base0 = float(np.median(y))
    if base0 <= 0.0:
        raise NoDipError("scan has no counts")
    depth0 = base0 - float(y.min())
    # a real dip must poke below the shot-noise floor of the baseline
    if depth0 <= 4.0 * np.sqrt(base0):
        raise NoDipError(
            "no dip found: minimum rate sits within the noise of the baseline"
        )
    span = eps[-1] - eps[0]
    step = float(np.min(np.diff(eps)))
    delay0 = float(eps[np.argmin(y)])
    below = eps[y < base0 - depth0 / 2.0]
    whm = float(below.max() - below.min()) / 2.0 if below.size > 1 else step
    width0 = max(whm * 1.5, step)

    def linear_solve(p):
        u = (eps - p[0]) / p[1]
        g = envelope_value(envelope, u)
        design = np.column_stack([np.ones_like(g), -g])
        coef, *_ = np.linalg.lstsq(design, y, rcond=None)
        return coef, design @ coef - y, g

    def resid(p):
        return linear_solve(p)[1]

    sol = least_squares(
        resid,
        x0=[delay0, width0],
        bounds=([eps[0] - span, step / 100.0], [eps[-1] + span, 10.0 * span]),
        xtol=1e-15,
        ftol=1e-15,
        gtol=1e-15,
    )
    delay, width = sol.x
    coef, r, g = linear_solve(sol.x)
    baseline, depth = coef
    if baseline <= 0.0 or depth <= 0.0:
        raise NoDipError("fit collapsed to a flat scan")
    vis = depth / baseline

    # joint covariance over (baseline, depth, delay, width)
    u = (eps - delay) / width
    if envelope == "triangular":
        gprime = np.where(np.abs(u) < 1.0, -np.sign(u), 0.0)
    else:
        gprime = -u * np.exp(-0.5 * u * u)
    jac = np.column_stack(
        [
            np.ones_like(u),
            -g,
            depth * gprime / width,
            depth * gprime * u / width,
        ]
    )
    dof = max(len(eps) - 4, 1)
    scale = float(r @ r) / dof
    try:
        cov = np.linalg.inv(jac.T @ jac) * scale
    except np.linalg.LinAlgError as exc:
        raise RankDeficiencyError(
            "dip fit covariance is singular; widen the scan"
        ) from exc
    err = np.sqrt(np.maximum(np.diag(cov), 0.0))
    var_vis = (
        vis**2
        * (
            cov[1, 1] / depth**2
            + cov[0, 0] / baseline**2
            - 2.0 * cov[0, 1] / (depth * baseline)
        )
        if depth > 0.0 and baseline > 0.0
        else np.inf
    )
    return DipFit(
        delay_fs=float(delay),
        delay_stderr_fs=float(err[2]),
        width_fs=float(width),
        width_stderr_fs=float(err[3]),
        visibility=float(vis),
        visibility_stderr=float(np.sqrt(max(var_vis, 0.0))),
        baseline_cps=float(baseline),
        baseline_stderr_cps=float(err[0]),
        envelope=envelope,
        data_fingerprint=fingerprint({"axis": eps, "rate": y}),
    )
