"""Coincidence engine vs an O(n^2) brute-force oracle."""

import numpy as np
import pytest

from twinphoton.detection import (
    TimeTagStream,
    accidental_estimate,
    count_coincidences,
)
from twinphoton.errors import TagFormatError


def stream(t_fs, det_id="a", duration_s=1.0):
    return TimeTagStream(np.asarray(t_fs, dtype=np.int64), det_id, duration_s)


def brute_force_match(ta, tb, half_fs):
    """Reference pairing: B tags in time order, each takes the nearest
    unused A within +-half_fs, ties to the earlier A."""
    used = [False] * len(ta)
    match = np.full(len(tb), -1, dtype=np.int64)
    for j in range(len(tb)):
        best = -1
        best_d = half_fs + 1
        for i in range(len(ta)):
            if used[i]:
                continue
            d = abs(int(ta[i]) - int(tb[j]))
            if d < best_d:
                best_d = d
                best = i
        if best >= 0:
            match[j] = best
            used[best] = True
    return match


def test_trivial_examples():
    ns = 1_000_000
    a = stream([0, 100 * ns])
    b = stream([int(0.3 * ns), 200 * ns], det_id="b")
    r = count_coincidences(a, b, window_ns=1.0)
    assert r.n_ab == 1
    assert r.n_a == 2 and r.n_b == 2
    assert r.dt_fs[0] == int(0.3 * ns)


def test_identical_streams_self_coincide():
    t = np.arange(100, dtype=np.int64) * 10**9
    r = count_coincidences(stream(t), stream(t, "b"), window_ns=1.0)
    assert r.n_ab == r.n_a == r.n_b == 100
    assert np.all(r.dt_fs == 0)


def test_window_must_be_positive():
    with pytest.raises(ValueError):
        count_coincidences(stream([0]), stream([0], "b"), window_ns=0.0)


def test_duration_mismatch_rejected():
    with pytest.raises(ValueError):
        count_coincidences(
            stream([0], duration_s=1.0), stream([0], "b", duration_s=2.0), 1.0
        )


def test_unsorted_stream_rejected():
    bad = stream([100, 50])
    with pytest.raises(TagFormatError):
        count_coincidences(bad, stream([0], "b"), 1.0)


def test_all_identical_timestamps_pair_in_order():
    # every distance ties at zero; earlier A tags win, extras unmatched
    a = stream([5, 5, 5])
    b = stream([5, 5, 5, 5], "b")
    r = count_coincidences(a, b, window_ns=1.0)
    assert r.n_ab == 3
    assert np.array_equal(np.sort(r.pairs_a_idx), np.array([0, 1, 2]))


@pytest.mark.parametrize("seed", range(120))
def test_greedy_matches_brute_force(seed):
    """Property test over 120 random instances spanning sparse to
    heavily contested regimes, compared match-for-match."""
    rng = np.random.default_rng(1000 + seed)
    na = int(rng.integers(0, 1000))
    nb = int(rng.integers(0, 1000))
    regime = seed % 3
    if regime == 0:  # sparse: rare overlaps
        span, window_fs = 10**12, 10**6
    elif regime == 1:  # moderate
        span, window_fs = 10**9, 10**6
    else:  # dense: windows cover many tags
        span, window_fs = 10**6, 10**4
    ta = np.sort(rng.integers(0, span, na)).astype(np.int64)
    tb = np.sort(rng.integers(0, span, nb)).astype(np.int64)
    window_ns = 2.0 * window_fs * 1e-6
    r = count_coincidences(stream(ta), stream(tb, "b"), window_ns)
    want = brute_force_match(ta, tb, window_fs)
    got = np.full(nb, -1, dtype=np.int64)
    got[r.pairs_b_idx] = r.pairs_a_idx
    assert np.array_equal(got, want)


def test_no_double_counting_and_window_respected():
    rng = np.random.default_rng(77)
    ta = np.sort(rng.integers(0, 10**7, 500)).astype(np.int64)
    tb = np.sort(rng.integers(0, 10**7, 600)).astype(np.int64)
    r = count_coincidences(stream(ta), stream(tb, "b"), window_ns=0.02)
    assert r.n_ab <= min(r.n_a, r.n_b)
    assert len(np.unique(r.pairs_a_idx)) == r.n_ab
    assert len(np.unique(r.pairs_b_idx)) == r.n_ab
    half_fs = 0.02 * 1e6 / 2.0
    assert np.all(np.abs(r.dt_fs) <= half_fs)


def test_histogram_counts_all_pairs_in_span():
    rng = np.random.default_rng(78)
    ta = np.sort(rng.integers(0, 10**8, 400)).astype(np.int64)
    tb = np.sort(rng.integers(0, 10**8, 400)).astype(np.int64)
    span_ns = 50.0
    r = count_coincidences(
        stream(ta), stream(tb, "b"), window_ns=1.0, hist_span_ns=span_ns
    )
    half_fs = span_ns * 1e6 / 2.0
    want = sum(
        int(np.sum(np.abs(ta - t) <= half_fs)) for t in tb
    )
    assert int(r.hist_counts.sum()) == want
    # edges symmetric around zero
    assert r.hist_bin_edges_ns[0] == -r.hist_bin_edges_ns[-1]


def test_empty_streams():
    r = count_coincidences(stream([]), stream([0, 5], "b"), 1.0)
    assert r.n_ab == 0 and r.n_a == 0 and r.n_b == 2
    r = count_coincidences(stream([0, 5]), stream([], "b"), 1.0)
    assert r.n_ab == 0


def test_accidental_estimate_formula():
    assert accidental_estimate(10**5, 10**5, 1.0, 1.0) == pytest.approx(10.0)
    assert accidental_estimate(10**5, 10**5, 0.0, 1.0) == 0.0
    one = accidental_estimate(3000, 4000, 2.0, 5.0)
    two = accidental_estimate(3000, 4000, 4.0, 5.0)
    assert two == pytest.approx(2.0 * one, rel=1e-12)
    with pytest.raises(ValueError):
        accidental_estimate(1, 1, 1.0, 0.0)


def test_accidentals_match_independent_poisson_monte_carlo():
    """Two unrelated Poisson streams: the matched-coincidence count
    must agree with n_a*n_b*window/T within 3 sigma."""
    rng = np.random.default_rng(123)
    duration = 1.0
    rate_a, rate_b = 50_000.0, 80_000.0
    ta = np.sort(rng.integers(0, 10**15, rng.poisson(rate_a))).astype(np.int64)
    tb = np.sort(rng.integers(0, 10**15, rng.poisson(rate_b))).astype(np.int64)
    window_ns = 2.0
    r = count_coincidences(stream(ta), stream(tb, "b"), window_ns)
    expect = accidental_estimate(r.n_a, r.n_b, window_ns, duration)
    assert abs(r.n_ab - expect) < 3.0 * np.sqrt(expect)
