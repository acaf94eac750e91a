"""Single-photon detection and coincidence counting.

Detectors apply efficiency thinning, Gaussian timing jitter (clipped at
+-5 sigma), Poissonian dark counts, and a non-paralyzable dead time.
Output tag streams are sorted and dead-time separated by construction.

Coincidences are formed the way counting hardware does it: walking both
sorted streams in time order, each tag on one channel pairs with the
nearest still-unused tag on the other channel inside +-window/2, ties
going to the earlier tag, one-to-one.  ``origin`` and ``source_index``
annotations on tag streams are simulation truth kept for tests and
protocol bookkeeping; estimators never read them.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .core import TYPE_I, TYPE_II, FS_PER_S, PolarizationDescriptor
from .errors import TagFormatError

ORIGIN_PHOTON = 0
ORIGIN_DARK = 1

_JITTER_CLIP_SIGMA = 5.0


@dataclass(frozen=True)
class DetectorSpec:
    """Static description of one single-photon detector."""

    efficiency: float
    dark_rate_cps: float = 0.0
    jitter_ps: float = 0.0
    dead_time_ns: float = 0.0
    detector_id: str = "det"

    def __post_init__(self) -> None:
        if not 0.0 <= self.efficiency <= 1.0:
            raise ValueError(
                f"efficiency must be within [0, 1], got {self.efficiency}"
            )
        if self.dark_rate_cps < 0.0:
            raise ValueError("dark_rate_cps must be non-negative")
        if self.jitter_ps < 0.0:
            raise ValueError("jitter_ps must be non-negative")
        if self.dead_time_ns < 0.0:
            raise ValueError("dead_time_ns must be non-negative")


@dataclass(frozen=True)
class TimeTag:
    """One detector click; ``t_fs`` is integer femtoseconds."""

    t_fs: int
    detector_id: str
    origin: int = ORIGIN_PHOTON


@dataclass
class TimeTagStream:
    """Sorted tag stream from one detector.

    ``origin`` marks photon vs dark tags and ``source_index`` maps
    photon tags back to the arrival that produced them (-1 for darks);
    both are simulation-truth annotations.
    """

    t_fs: np.ndarray
    detector_id: str
    duration_s: float
    origin: np.ndarray = field(default=None)  # type: ignore[assignment]
    source_index: np.ndarray = field(default=None)  # type: ignore[assignment]

    def __post_init__(self) -> None:
        self.t_fs = np.asarray(self.t_fs, dtype=np.int64)
        if self.origin is None:
            self.origin = np.zeros(len(self.t_fs), dtype=np.uint8)
        if self.source_index is None:
            self.source_index = np.full(len(self.t_fs), -1, dtype=np.int64)

    def __len__(self) -> int:
        return len(self.t_fs)

    def require_sorted(self) -> None:
        if len(self.t_fs) > 1 and np.any(np.diff(self.t_fs) < 0):
            row = int(np.argmax(np.diff(self.t_fs) < 0)) + 2
            raise TagFormatError(
                f"stream {self.detector_id!r} is not time-sorted", row=row
            )


# -----------------------------------------------------------------
# Polarization analyzers


def analyzer_outcome(
    polarization: PolarizationDescriptor,
    analyzer_angle_rad: float,
    rng: np.random.Generator,
    partner: tuple[bool, float] | None = None,
) -> bool:
    """Whether one photon passes a linear analyzer.

    For ``type_i`` pairs both photons carry the shared fixed axis, so
    each passes independently with the projection probability
    cos^2(analyzer - axis).

    For ``type_ii`` pairs the first photon of a pair (no ``partner``
    given) passes with probability 1/2; once one outcome is fixed, the
    partner at angle beta conditions on an analyzer at alpha as
    sin^2(alpha - beta) after a pass and cos^2(alpha - beta) after a
    block, reproducing perfect anticorrelation at parallel analyzers.
    """
    if polarization.kind == TYPE_I:
        delta = analyzer_angle_rad - polarization.axis_angle_rad
        p = np.cos(delta) ** 2
    elif partner is None:
        p = 0.5
    else:
        partner_passed, partner_angle = partner
        delta = analyzer_angle_rad - partner_angle
        p = np.sin(delta) ** 2 if partner_passed else np.cos(delta) ** 2
    return bool(rng.random() < p)


def joint_analyzer_outcomes(
    polarization: PolarizationDescriptor,
    angle_a_rad: float,
    angle_b_rad: float,
    n: int,
    rng: np.random.Generator,
) -> tuple[np.ndarray, np.ndarray]:
    """Vectorized pass/block outcomes for ``n`` pairs at two analyzers."""
    if polarization.kind == TYPE_I:
        pa = np.cos(angle_a_rad - polarization.axis_angle_rad) ** 2
        pb = np.cos(angle_b_rad - polarization.axis_angle_rad) ** 2
        return rng.random(n) < pa, rng.random(n) < pb
    first = rng.random(n) < 0.5
    delta = angle_b_rad - angle_a_rad
    p_cond = np.where(first, np.sin(delta) ** 2, np.cos(delta) ** 2)
    second = rng.random(n) < p_cond
    return first, second


# -----------------------------------------------------------------
# Detection


def generate_dark_counts(
    spec: DetectorSpec, duration_s: float, rng: np.random.Generator
) -> np.ndarray:
    """Sorted dark-count timestamps (int64 fs) over the run."""
    if duration_s < 0.0:
        raise ValueError("duration_s must be non-negative")
    n = rng.poisson(spec.dark_rate_cps * duration_s)
    if n == 0:
        return np.empty(0, dtype=np.int64)
    t = rng.integers(0, int(round(duration_s * FS_PER_S)), size=n, dtype=np.int64)
    t.sort()
    return t


def _dead_time_filter(t_sorted_fs: np.ndarray, dead_fs: int) -> np.ndarray:
    """Boolean keep-mask for a non-paralyzable dead time."""
    keep = np.ones(len(t_sorted_fs), dtype=bool)
    if dead_fs <= 0 or len(t_sorted_fs) == 0:
        return keep
    times = t_sorted_fs.tolist()
    last = times[0]
    for i in range(1, len(times)):
        if times[i] - last < dead_fs:
            keep[i] = False
        else:
            last = times[i]
    return keep


def detect_stream(
    arrival_fs: np.ndarray,
    spec: DetectorSpec,
    duration_s: float,
    rng: np.random.Generator,
    include_darks: bool = True,
) -> TimeTagStream:
    """Turn sorted photon arrivals into a recorded tag stream.

    Order of effects: efficiency thinning, timing jitter on survivors,
    merge with dark counts, sort, then the dead-time gate on recorded
    times (so the output invariant -- sorted, separated by at least the
    dead time -- holds exactly).
    """
    arr = np.asarray(arrival_fs, dtype=np.int64)
    if len(arr) > 1 and np.any(np.diff(arr) < 0):
        raise TagFormatError("arrival stream must be time-sorted")
    kept = rng.random(len(arr)) < spec.efficiency
    t = arr[kept]
    src = np.nonzero(kept)[0].astype(np.int64)
    if spec.jitter_ps > 0.0 and len(t):
        sigma_fs = spec.jitter_ps * 1e3
        jit = rng.standard_normal(len(t)) * sigma_fs
        clip = _JITTER_CLIP_SIGMA * sigma_fs
        t = t + np.rint(np.clip(jit, -clip, clip)).astype(np.int64)
    origin = np.zeros(len(t), dtype=np.uint8)
    if include_darks and spec.dark_rate_cps > 0.0:
        darks = generate_dark_counts(spec, duration_s, rng)
        t = np.concatenate([t, darks])
        origin = np.concatenate([origin, np.full(len(darks), ORIGIN_DARK, np.uint8)])
        src = np.concatenate([src, np.full(len(darks), -1, dtype=np.int64)])
    order = np.argsort(t, kind="stable")
    t, origin, src = t[order], origin[order], src[order]
    keep = _dead_time_filter(t, int(round(spec.dead_time_ns * 1e6)))
    return TimeTagStream(
        t_fs=t[keep],
        detector_id=spec.detector_id,
        duration_s=duration_s,
        origin=origin[keep],
        source_index=src[keep],
    )


@dataclass
class DetectorState:
    """Memory for the one-tag-at-a-time detection path."""

    last_arrival_fs: int | None = None
    last_tag_fs: int | None = None


def detect(
    arrival_fs: int,
    spec: DetectorSpec,
    rng: np.random.Generator,
    state: DetectorState,
) -> int | None:
    """Streaming single-arrival counterpart of :func:`detect_stream`.

    Arrivals must be fed in time order (raises on a regression).  A
    click whose recorded time would precede the previous tag (possible
    when the jitter exceeds the gap) is treated as falling in the dead
    window, which keeps the emitted tag sequence sorted.  Returns the
    recorded timestamp or None.
    """
    if state.last_arrival_fs is not None and arrival_fs < state.last_arrival_fs:
        raise TagFormatError("arrivals must be fed in time order")
    state.last_arrival_fs = arrival_fs
    if rng.random() >= spec.efficiency:
        return None
    t = arrival_fs
    if spec.jitter_ps > 0.0:
        sigma_fs = spec.jitter_ps * 1e3
        jit = float(
            np.clip(
                rng.standard_normal() * sigma_fs,
                -_JITTER_CLIP_SIGMA * sigma_fs,
                _JITTER_CLIP_SIGMA * sigma_fs,
            )
        )
        t = t + int(round(jit))
    dead_fs = int(round(spec.dead_time_ns * 1e6))
    if state.last_tag_fs is not None and t - state.last_tag_fs < dead_fs:
        return None
    if state.last_tag_fs is not None and t <= state.last_tag_fs:
        return None
    state.last_tag_fs = t
    return t


# -----------------------------------------------------------------
# Coincidence counting


@dataclass
class CoincidenceResult:
    """Output of the pairing engine between two tag streams."""

    n_a: int
    n_b: int
    n_ab: int
    window_ns: float
    duration_s: float
    hist_bin_edges_ns: np.ndarray
    hist_counts: np.ndarray
    pairs_a_idx: np.ndarray
    pairs_b_idx: np.ndarray
    dt_fs: np.ndarray  # matched t_B - t_A


def _match_greedy(ta: np.ndarray, tb: np.ndarray, half_fs: int) -> np.ndarray:
    """A-index matched to each B tag (-1 when unmatched).

    Equivalent to processing B tags in time order, each taking the
    nearest unused A within +-half_fs, ties to the earlier A.  Runs of
    B tags whose candidate windows cannot interact are resolved in
    bulk; contested runs are replayed sequentially.
    """
    na, nb = len(ta), len(tb)
    match = np.full(nb, -1, dtype=np.int64)
    if na == 0 or nb == 0:
        return match
    lo = np.searchsorted(ta, tb - half_fs, side="left")
    hi = np.searchsorted(ta, tb + half_fs, side="right")
    has = hi > lo
    if not np.any(has):
        return match
    cummax_hi = np.maximum.accumulate(hi)
    start = np.ones(nb, dtype=bool)
    start[1:] = lo[1:] >= cummax_hi[:-1]
    comp = np.cumsum(start) - 1
    n_active = np.bincount(comp[has], minlength=int(comp[-1]) + 1)
    simple = has & (n_active[comp] == 1)

    if np.any(simple):
        tbs = tb[simple]
        pos = np.searchsorted(ta, tbs)
        left = np.clip(pos - 1, 0, na - 1)
        right = np.clip(pos, 0, na - 1)
        dl = np.abs(tbs - ta[left])
        dr = np.abs(ta[right] - tbs)
        use_left = dl <= dr
        picked = np.where(use_left, left, right)
        dist = np.where(use_left, dl, dr)
        ok = dist <= half_fs
        idx = np.nonzero(simple)[0]
        match[idx[ok]] = picked[ok]

    contested = has & ~simple
    if np.any(contested):
        used = np.zeros(na, dtype=bool)
        used[match[match >= 0]] = True
        ta_l = ta.tolist()
        tb_l = tb.tolist()
        lo_l = lo.tolist()
        hi_l = hi.tolist()
        for j in np.nonzero(contested)[0].tolist():
            best = -1
            best_d = half_fs + 1
            t = tb_l[j]
            for i in range(lo_l[j], hi_l[j]):
                if used[i]:
                    continue
                d = abs(ta_l[i] - t)
                if d < best_d:
                    best_d = d
                    best = i
            if best >= 0:
                match[j] = best
                used[best] = True
    return match


def count_coincidences(
    stream_a: TimeTagStream,
    stream_b: TimeTagStream,
    window_ns: float,
    hist_span_ns: float | None = None,
    hist_bin_ns: float | None = None,
) -> CoincidenceResult:
    """Pair two sorted tag streams and histogram their time differences.

    ``n_ab`` counts one-to-one greedy matches with |t_B - t_A| <=
    window/2.  The histogram covers *all* A-B tag pairs whose delta-t
    falls inside the (wider) histogram span, matched or not, which is
    what a start-stop histogrammer records.
    """
    if window_ns <= 0.0:
        raise ValueError("window_ns must be positive")
    stream_a.require_sorted()
    stream_b.require_sorted()
    if stream_a.duration_s != stream_b.duration_s:
        raise ValueError("streams cover different run durations")
    ta, tb = stream_a.t_fs, stream_b.t_fs
    half_fs = int(round(window_ns * 1e6 / 2.0))
    match = _match_greedy(ta, tb, half_fs)
    b_idx = np.nonzero(match >= 0)[0].astype(np.int64)
    a_idx = match[b_idx]
    dt = tb[b_idx] - ta[a_idx]

    if hist_span_ns is None:
        hist_span_ns = 10.0 * window_ns
    if hist_bin_ns is None:
        hist_bin_ns = window_ns / 5.0
    nbins = max(int(round(hist_span_ns / hist_bin_ns)), 1)
    edges_ns = (np.arange(nbins + 1) - nbins / 2.0) * hist_bin_ns
    half_span_fs = int(round(hist_span_ns * 1e6 / 2.0))
    all_dt = _all_pair_dts(ta, tb, half_span_fs)
    counts, _ = np.histogram(all_dt * 1e-6, bins=edges_ns)

    return CoincidenceResult(
        n_a=len(ta),
        n_b=len(tb),
        n_ab=len(b_idx),
        window_ns=window_ns,
        duration_s=stream_a.duration_s,
        hist_bin_edges_ns=edges_ns,
        hist_counts=counts.astype(np.int64),
        pairs_a_idx=a_idx,
        pairs_b_idx=b_idx,
        dt_fs=dt,
    )


def _all_pair_dts(
    ta: np.ndarray, tb: np.ndarray, half_span_fs: int, cap: int = 50_000_000
) -> np.ndarray:
    """delta-t (fs) of every A-B pair with |dt| <= half_span_fs."""
    if len(ta) == 0 or len(tb) == 0:
        return np.empty(0, dtype=np.int64)
    lo = np.searchsorted(ta, tb - half_span_fs, side="left")
    hi = np.searchsorted(ta, tb + half_span_fs, side="right")
    counts = hi - lo
    total = int(counts.sum())
    if total > cap:
        raise ValueError(
            "coincidence histogram expansion too large; narrow hist_span_ns"
        )
    if total == 0:
        return np.empty(0, dtype=np.int64)
    b_rep = np.repeat(np.arange(len(tb)), counts)
    offsets = np.cumsum(counts) - counts
    a_idx = np.arange(total) - np.repeat(offsets, counts) + np.repeat(lo, counts)
    return tb[b_rep] - ta[a_idx]


def accidental_estimate(
    n_a: int, n_b: int, window_ns: float, duration_s: float
) -> float:
    """Expected accidental coincidences: n_a * n_b * window / duration."""
    if duration_s <= 0.0:
        raise ValueError("duration_s must be positive")
    return n_a * n_b * (window_ns * 1e-9) / duration_s
