"""Protocol orchestration for the command line.

``run`` executes one configured protocol end to end: simulate,
estimate, write delimited outputs plus a ``result.yaml`` record, and
optionally render figures.  All randomness flows from the single seed
in the record, so ``replay`` can re-run a record and verify that the
delimited outputs and estimates come back identical.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass
from datetime import datetime, timezone
from pathlib import Path

import numpy as np
import yaml

from ._version import __version__
from .config import RunConfig, config_to_dict, parse_config
from .core import SPEED_OF_LIGHT_M_PER_S, fingerprint
from .errors import ConfigError
from .estimation import (
    estimate_efficiency,
    fit_delay_difference_curve,
    fit_dip_center,
    fit_group_delay_scan,
    fit_visibility_envelope,
)
from .experiments import (
    centered_mirror_grid,
    predict_envelope_centroid_um,
    predict_mirror_center_um,
    run_detector_calibration,
    run_pmd_interferogram,
    run_tof_dispersion,
    run_two_photon_interferometer,
)
from .source import tune_center_wavelength

RESULT_NAME = "result.yaml"


@dataclass
class RunResult:
    out_dir: Path
    record: dict


def _cell(v) -> str:
    if isinstance(v, float):
        return repr(v)
    return str(v)


def _write_csv(path: Path, header: list[str], columns: list) -> None:
    """Delimited output with shortest round-trip float formatting."""
    cols = [c.tolist() if isinstance(c, np.ndarray) else list(c) for c in columns]
    lines = [",".join(header)]
    for row in zip(*cols):
        lines.append(",".join(_cell(v) for v in row))
    path.write_text("\n".join(lines) + "\n")


def _sha256_file(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def _grid(lo: float, hi: float, step: float) -> np.ndarray:
    n = int(np.floor((hi - lo) / step + 1e-9)) + 1
    return lo + step * np.arange(n)


def _run_tof(cfg: RunConfig, out: Path, seed: int, figures: bool):
    scan = run_tof_dispersion(
        cfg.source,
        cfg.fiber,
        cfg.detector_a,
        cfg.detector_b,
        cfg.params["wdm_min_nm"],
        cfg.params["wdm_max_nm"],
        wdm_bin_nm=cfg.params["wdm_bin_nm"],
        duration_s=cfg.params["duration_s"],
        reference_delay_ps=cfg.params["reference_delay_ps"],
        window_ns=cfg.params["window_ns"],
        seed=seed,
    )
    _write_csv(
        out / "tof_scan.csv",
        ["lambda_local_nm", "lambda_conjugate_nm", "count", "mean_dt_ps", "std_dt_ps"],
        [scan.lambda_local_nm, scan.lambda_conjugate_nm, scan.count,
         scan.mean_dt_ps, scan.std_dt_ps],
    )
    fit = fit_group_delay_scan(scan)
    estimates = {
        "lambda0_nm": fit.lambda0_nm,
        "lambda0_stderr_nm": fit.lambda0_stderr_nm,
        "s0_ps_per_nm2_km": fit.s0_ps_per_nm2_km,
        "curve_a_ps": fit.a_ps,
        "curve_b_ps_per_nm2": fit.b_ps_per_nm2,
        "curve_c_ps_nm2": fit.c_ps_nm2,
        "weighted": fit.weighted,
        "n_bins": int(np.count_nonzero(scan.count)),
    }
    if figures:
        from . import plots

        plots.plot_tof_scan(scan, fit, out / "tof_scan.png")
    return estimates


def _run_interferometer(cfg: RunConfig, out: Path, seed: int, figures: bool, workers: int):
    p = cfg.params
    temps = p["temperatures_c"]
    mirror = p["mirror"]
    if mirror["mode"] == "centered":
        grids = []
        for t in temps:
            tuned = tune_center_wavelength(cfg.source, t)
            center = predict_mirror_center_um(tuned, cfg.fiber)
            grids.append(
                centered_mirror_grid(center, mirror["half_span_um"], mirror["step_um"])
            )
    else:
        grids = [_grid(mirror["min_um"], mirror["max_um"], mirror["step_um"])] * len(temps)
    scans = run_two_photon_interferometer(
        cfg.source,
        cfg.fiber,
        grids,
        temps,
        counts_per_point=p["counts_per_point"],
        n_freq=p["n_freq"],
        wdm_split_nm=p["wdm_split_nm"],
        n_workers=workers,
        seed=seed,
    )
    fits = [fit_visibility_envelope(s) for s in scans]
    for scan, fit in zip(scans, fits):
        scan.visibility = fit.envelope
    for i, (scan, fit) in enumerate(zip(scans, fits)):
        _write_csv(
            out / f"interferogram_{i:02d}.csv",
            ["mirror_position_um", "rate_cps", "envelope"],
            [scan.axis, scan.rate_cps, fit.envelope],
        )
    lam_s = np.array([s.meta["lambda_signal_center_nm"] for s in scans])
    lam_i = np.array([s.meta["lambda_idler_center_nm"] for s in scans])
    centers = np.array([f.center_um for f in fits])
    center_err = np.array([f.center_stderr_um for f in fits])
    to_ps = 2.0 * 1e-6 / SPEED_OF_LIGHT_M_PER_S * 1e12
    delay_ps = centers * to_ps
    delay_err = center_err * to_ps
    _write_csv(
        out / "band_delays.csv",
        ["temperature_c", "lambda_signal_nm", "lambda_idler_nm",
         "mirror_center_um", "mirror_center_stderr_um",
         "delay_diff_ps", "delay_diff_stderr_ps"],
        [np.array(temps), lam_s, lam_i, centers, center_err, delay_ps, delay_err],
    )
    curve = fit_delay_difference_curve(
        lam_s, lam_i, delay_ps,
        delay_err if np.all(delay_err > 0.0) else None,
    )
    predicted = np.array(
        [
            predict_envelope_centroid_um(
                tune_center_wavelength(cfg.source, t), cfg.fiber, p["n_freq"]
            )
            for t in temps
        ]
    )
    estimates = {
        "lambda0_nm": curve.lambda0_nm,
        "lambda0_stderr_nm": curve.lambda0_stderr_nm,
        "b_ps_per_nm2": curve.b_ps_per_nm2,
        "c_ps_nm2": curve.c_ps_nm2,
        "per_temperature": [
            {
                "temperature_c": float(t),
                "mirror_center_um": float(c),
                "mirror_center_stderr_um": float(e),
                "predicted_center_um": float(pr),
                "visibility_peak": float(f.visibility_peak),
                "delay_diff_ps": float(d),
            }
            for t, c, e, pr, d, f in zip(
                temps, centers, center_err, predicted, delay_ps, fits
            )
        ],
    }
    if figures:
        from . import plots

        plots.plot_interferograms(scans, fits, out / "interferograms.png")
        plots.plot_delay_curve(lam_s, lam_i, delay_ps, curve, out / "delay_curve.png")
    return estimates


def _run_pmd(cfg: RunConfig, out: Path, seed: int, figures: bool):
    p = cfg.params
    delays = _grid(p["delay_min_fs"], p["delay_max_fs"], p["delay_step_fs"])
    scan = run_pmd_interferogram(
        cfg.source,
        cfg.element,
        delays,
        counts_per_point=p["counts_per_point"],
        visibility=p["visibility"],
        noiseless=p["noiseless"],
        seed=seed,
    )
    _write_csv(
        out / "pmd_scan.csv",
        ["delay_fs", "rate_cps"],
        [scan.axis, scan.rate_cps],
    )
    fit = fit_dip_center(scan)
    estimates = {
        "dgd_fs": fit.delay_fs,
        "dgd_stderr_fs": fit.delay_stderr_fs,
        "visibility": fit.visibility,
        "visibility_stderr": fit.visibility_stderr,
        "width_fs": fit.width_fs,
        "width_stderr_fs": fit.width_stderr_fs,
        "baseline_cps": fit.baseline_cps,
        "envelope": fit.envelope,
    }
    if figures:
        from . import plots

        plots.plot_pmd_scan(scan, fit, out / "pmd_scan.png")
    return estimates


def _run_calibration(cfg: RunConfig, out: Path, seed: int, figures: bool):
    p = cfg.params
    counts = run_detector_calibration(
        cfg.source,
        cfg.detector_a,
        cfg.detector_b,
        duration_s=p["duration_s"],
        window_ns=p["window_ns"],
        path_delay_a_ps=p["path_delay_a_ps"],
        path_delay_b_ps=p["path_delay_b_ps"],
        seed=seed,
    )
    _write_csv(
        out / "calibration_counts.csv",
        ["n_a", "n_b", "n_ab", "duration_s", "window_ns"],
        [[counts.n_a], [counts.n_b], [counts.n_ab],
         [counts.duration_s], [counts.window_ns]],
    )
    res = counts.coincidence
    _write_csv(
        out / "coincidence_histogram.csv",
        ["bin_lo_ns", "bin_hi_ns", "pairs"],
        [res.hist_bin_edges_ns[:-1], res.hist_bin_edges_ns[1:], res.hist_counts],
    )
    est = estimate_efficiency(counts)
    estimates = {
        "efficiency_a": est.efficiency_a,
        "efficiency_a_stderr": est.stderr_a,
        "efficiency_b": est.efficiency_b,
        "efficiency_b_stderr": est.stderr_b,
        "pair_rate_hz": est.pair_rate_hz,
        "accidentals": est.accidentals,
        "n_a": counts.n_a,
        "n_b": counts.n_b,
        "n_ab": counts.n_ab,
    }
    if figures:
        from . import plots

        plots.plot_calibration(counts, est, out / "calibration.png")
    return estimates


def run(
    cfg: RunConfig,
    out_dir,
    *,
    workers: int = 1,
    figures: bool = True,
    seed_override: int | None = None,
) -> RunResult:
    """Execute a configured protocol and write its output bundle.

    The bundle holds the delimited raw outputs, rendered figures
    (unless disabled) and ``result.yaml`` with the seed, a config
    fingerprint, the estimates and a sha256 per output file.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    seed = cfg.seed if seed_override is None else seed_override
    if cfg.protocol == "tof":
        estimates = _run_tof(cfg, out, seed, figures)
    elif cfg.protocol == "interferometer":
        estimates = _run_interferometer(cfg, out, seed, figures, workers)
    elif cfg.protocol == "pmd":
        estimates = _run_pmd(cfg, out, seed, figures)
    else:
        estimates = _run_calibration(cfg, out, seed, figures)
    cfg_dict = config_to_dict(cfg)
    files = {
        p.name: _sha256_file(p)
        for p in sorted(out.iterdir())
        if p.is_file() and p.name != RESULT_NAME
    }
    record = {
        "tool": "twinphoton",
        "tool_version": __version__,
        "protocol": cfg.protocol,
        "seed": seed,
        "created_utc": datetime.now(timezone.utc).isoformat(),
        "config_hash": fingerprint(cfg_dict),
        "config": cfg_dict,
        "estimates": estimates,
        "files": files,
    }
    with open(out / RESULT_NAME, "w") as fh:
        yaml.safe_dump(record, fh, sort_keys=True)
    return RunResult(out_dir=out, record=record)


def load_record(path) -> dict:
    with open(path) as fh:
        record = yaml.safe_load(fh)
    if not isinstance(record, dict) or "config" not in record:
        raise ConfigError(f"{path} is not a result record")
    return record


def replay(record_path, out_dir=None) -> tuple[bool, list[str]]:
    """Re-run a result record and verify it reproduces.

    Re-executes the recorded config and seed (figures off), then
    compares the config fingerprint, every estimate and the sha256 of
    every delimited output.  Returns (ok, report_lines).
    """
    import tempfile

    record = load_record(record_path)
    cfg = parse_config(record["config"])
    lines = []
    ok = True

    def check(name, old, new):
        nonlocal ok
        same = old == new
        ok = ok and same
        lines.append(f"{'ok  ' if same else 'FAIL'} {name}: "
                     + (f"{new!r}" if same else f"recorded {old!r}, replay {new!r}"))

    with tempfile.TemporaryDirectory() as tmp:
        target = Path(out_dir) if out_dir is not None else Path(tmp) / "replay"
        result = run(cfg, target, figures=False, seed_override=record["seed"])
        check("config_hash", record["config_hash"], result.record["config_hash"])
        old_est = record.get("estimates", {})
        new_est = result.record["estimates"]
        for key in sorted(set(old_est) | set(new_est)):
            check(f"estimates.{key}", old_est.get(key), new_est.get(key))
        old_files = record.get("files", {})
        for name in sorted(old_files):
            if not name.endswith(".csv"):
                continue
            check(f"files.{name}", old_files[name],
                  result.record["files"].get(name))
    return ok, lines
