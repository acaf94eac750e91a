"""Delimited time-tag files.

One row per detection event, merged across detectors and sorted by
time:

    t_seconds,t_subsecond,detector_id

``t_seconds`` is a non-negative integer, ``t_subsecond`` a float in
[0, 1) written with shortest round-trip precision.  The pair encodes
the internal integer femtosecond timestamp exactly, so export followed
by import reproduces every tag bit for bit.
"""

from __future__ import annotations

import numpy as np

from .core import join_timestamp, split_timestamp
from .detection import ORIGIN_PHOTON, TimeTagStream
from .errors import TagFormatError

HEADER = "t_seconds,t_subsecond,detector_id"


def export_time_tags(path, streams) -> None:
    """Write one or more tag streams to a delimited file.

    Streams are merged and sorted by timestamp; ties keep the order the
    streams were passed in, so the output is deterministic.
    """
    if isinstance(streams, TimeTagStream):
        streams = [streams]
    if not streams:
        raise ValueError("need at least one stream to export")
    t_all = np.concatenate([s.t_fs for s in streams])
    rank = np.concatenate(
        [np.full(len(s.t_fs), i, dtype=np.int64) for i, s in enumerate(streams)]
    )
    order = np.lexsort((rank, t_all))
    t_all = t_all[order]
    ids = [streams[i].detector_id for i in rank[order]]
    secs, frac = split_timestamp(t_all)
    lines = [HEADER]
    for s, f, d in zip(secs.tolist(), frac.tolist(), ids):
        lines.append(f"{s},{f!r},{d}")
    with open(path, "w", newline="") as fh:
        fh.write("\n".join(lines))
        fh.write("\n")


def import_time_tags(path, duration_s: float | None = None) -> dict[str, TimeTagStream]:
    """Read a tag file back into per-detector streams.

    Raises :class:`TagFormatError` with the offending row number on
    malformed fields, subseconds outside [0, 1), or timestamps that run
    backwards within a detector.  ``duration_s`` defaults to the final
    timestamp in the file.  Imported tags carry no origin information;
    they are all marked as photon detections.
    """
    per_det_t: dict[str, list[int]] = {}
    per_det_last: dict[str, tuple[int, int]] = {}
    with open(path, newline="") as fh:
        header = fh.readline().rstrip("\n")
        if header != HEADER:
            raise TagFormatError(f"expected header {HEADER!r}, got {header!r}", row=1)
        t_max = 0
        for row, line in enumerate(fh, start=2):
            line = line.rstrip("\n")
            if not line:
                continue
            parts = line.split(",")
            if len(parts) != 3:
                raise TagFormatError(
                    f"expected 3 comma-separated fields, got {len(parts)}", row=row
                )
            s_txt, f_txt, det = parts
            if not det:
                raise TagFormatError("empty detector id", row=row)
            try:
                secs = int(s_txt)
                frac = float(f_txt)
            except ValueError as exc:
                raise TagFormatError(f"unparsable timestamp field: {exc}", row=row) from exc
            if secs < 0:
                raise TagFormatError("negative seconds", row=row)
            try:
                t_fs = join_timestamp(secs, frac)
            except ValueError as exc:
                raise TagFormatError(str(exc), row=row) from exc
            last = per_det_last.get(det)
            if last is not None and t_fs < last[0]:
                raise TagFormatError(
                    f"detector {det!r} runs backwards in time "
                    f"(previous tag at row {last[1]})",
                    row=row,
                )
            per_det_last[det] = (t_fs, row)
            per_det_t.setdefault(det, []).append(t_fs)
            t_max = max(t_max, t_fs)
    if not per_det_t:
        raise TagFormatError("file contains no tags", row=2)
    if duration_s is None:
        duration_s = t_max * 1e-15
    out = {}
    for det, times in per_det_t.items():
        t = np.asarray(times, dtype=np.int64)
        out[det] = TimeTagStream(
            t_fs=t,
            detector_id=det,
            duration_s=duration_s,
            origin=np.full(len(t), ORIGIN_PHOTON, dtype=np.uint8),
            source_index=np.full(len(t), -1, dtype=np.int64),
        )
    return out
