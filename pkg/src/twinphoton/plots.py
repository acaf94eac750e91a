"""Report figures.

All functions render to a file with the Agg backend and return the
path, so they work headless.  The CLI report path calls these next to
the delimited outputs; library users can ignore the module entirely.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .experiments import envelope_value


def plot_tof_scan(scan, fit=None, path="tof_scan.png") -> str:
    """Binned delay vs fiber-side wavelength, with the fitted curve."""
    fig, ax = plt.subplots(figsize=(7.0, 4.5))
    occ = scan.count > 0
    ax.errorbar(
        scan.lambda_conjugate_nm[occ],
        scan.mean_dt_ps[occ],
        yerr=scan.std_dt_ps[occ],
        fmt="o",
        ms=4,
        capsize=2,
        label="binned coincidences",
    )
    if fit is not None:
        lam = np.linspace(
            scan.lambda_conjugate_nm[occ].min(),
            scan.lambda_conjugate_nm[occ].max(),
            400,
        )
        ax.plot(lam, fit.delay_at(lam), "-", lw=1.2, label="fit")
        ax.axvline(fit.lambda0_nm, color="gray", ls="--", lw=0.8)
        ax.annotate(
            f"zero dispersion\n{fit.lambda0_nm:.2f} nm",
            xy=(fit.lambda0_nm, np.interp(fit.lambda0_nm, lam, fit.delay_at(lam))),
            xytext=(8, 12),
            textcoords="offset points",
            fontsize=8,
        )
    ax.set_xlabel("fiber-side wavelength (nm)")
    ax.set_ylabel("coincidence delay (ps)")
    ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return str(path)


def plot_interferograms(scans, fits=None, path="interferograms.png") -> str:
    """One panel per temperature: rate vs mirror position plus envelope."""
    n = len(scans)
    ncol = min(n, 3)
    nrow = (n + ncol - 1) // ncol
    fig, axes = plt.subplots(
        nrow, ncol, figsize=(4.0 * ncol, 2.8 * nrow), squeeze=False
    )
    for i, scan in enumerate(scans):
        ax = axes[i // ncol][i % ncol]
        ax.plot(scan.axis, scan.rate_cps, lw=0.4)
        if fits is not None and fits[i] is not None:
            f = fits[i]
            base = f.baseline_cps
            ax.plot(f.position_um, base * (1.0 + f.envelope), "r-", lw=1.0)
            ax.plot(f.position_um, base * (1.0 - f.envelope), "r-", lw=1.0)
            ax.axvline(f.center_um, color="gray", ls="--", lw=0.8)
        ax.set_title(f"{scan.temperature_c:g} C", fontsize=9)
        ax.set_xlabel("mirror position (um)", fontsize=8)
        ax.set_ylabel("rate", fontsize=8)
        ax.tick_params(labelsize=7)
    for j in range(n, nrow * ncol):
        axes[j // ncol][j % ncol].set_axis_off()
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return str(path)


def plot_delay_curve(
    lambda_signal_nm,
    lambda_idler_nm,
    delay_diff_ps,
    curve=None,
    path="delay_curve.png",
) -> str:
    """Band delay differences from a temperature sweep, with the
    reconstructed relative delay curve when a fit is supplied."""
    ls = np.asarray(lambda_signal_nm, dtype=float)
    li = np.asarray(lambda_idler_nm, dtype=float)
    dd = np.asarray(delay_diff_ps, dtype=float)
    fig, axes = plt.subplots(1, 2 if curve is not None else 1, figsize=(9.5, 4.0), squeeze=False)
    ax = axes[0][0]
    ax.plot(li, dd, "o", ms=5)
    ax.set_xlabel("long-band wavelength (nm)")
    ax.set_ylabel("band delay difference (ps)")
    if curve is not None:
        ax2 = axes[0][1]
        lam = np.linspace(min(ls.min(), li.min()), max(ls.max(), li.max()), 400)
        ref = float(ls.min())
        ax2.plot(lam, curve.delay_relative_to(lam, ref), "-", lw=1.2)
        ax2.axvline(curve.lambda0_nm, color="gray", ls="--", lw=0.8)
        ax2.set_xlabel("wavelength (nm)")
        ax2.set_ylabel(f"delay relative to {ref:.0f} nm (ps)")
        ax2.set_title(
            f"zero dispersion {curve.lambda0_nm:.2f} "
            f"+/- {curve.lambda0_stderr_nm:.2f} nm",
            fontsize=9,
        )
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return str(path)


def plot_pmd_scan(scan, fit=None, path="pmd_scan.png") -> str:
    """Coincidence dip vs compensator delay with the fitted model."""
    fig, ax = plt.subplots(figsize=(7.0, 4.5))
    ax.plot(scan.axis, scan.rate_cps, ".", ms=3, label="scan")
    if fit is not None:
        eps = np.linspace(scan.axis[0], scan.axis[-1], 800)
        g = envelope_value(fit.envelope, (eps - fit.delay_fs) / fit.width_fs)
        model = fit.baseline_cps * (1.0 - fit.visibility * g)
        ax.plot(eps, model, "-", lw=1.2, label="fit")
        ax.axvline(fit.delay_fs, color="gray", ls="--", lw=0.8)
        ax.annotate(
            f"dip at {fit.delay_fs:.3f} +/- {fit.delay_stderr_fs:.3f} fs",
            xy=(0.02, 0.05),
            xycoords="axes fraction",
            fontsize=8,
        )
    ax.set_xlabel("compensator delay (fs)")
    ax.set_ylabel("coincidences per point")
    ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return str(path)


def plot_calibration(counts, estimate=None, path="calibration.png") -> str:
    """Coincidence delay histogram with the pairing window marked."""
    res = counts.coincidence
    fig, ax = plt.subplots(figsize=(7.0, 4.5))
    edges = res.hist_bin_edges_ns
    centers = 0.5 * (edges[:-1] + edges[1:])
    ax.bar(centers, res.hist_counts, width=edges[1] - edges[0], align="center")
    half = counts.window_ns / 2.0
    ax.axvline(-half, color="r", ls="--", lw=0.8)
    ax.axvline(half, color="r", ls="--", lw=0.8)
    ax.set_xlabel("tag delay B - A (ns)")
    ax.set_ylabel("pairs per bin")
    lines = [
        f"n_a={counts.n_a}  n_b={counts.n_b}  n_ab={counts.n_ab}",
        f"window {counts.window_ns:g} ns, {counts.duration_s:g} s",
    ]
    if estimate is not None:
        lines.append(
            f"eta_a = {estimate.efficiency_a:.4f} +/- {estimate.stderr_a:.4f}"
        )
        lines.append(
            f"eta_b = {estimate.efficiency_b:.4f} +/- {estimate.stderr_b:.4f}"
        )
    ax.set_title("\n".join(lines), fontsize=8)
    if np.any(res.hist_counts > 0):
        ax.set_yscale("log")
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return str(path)
