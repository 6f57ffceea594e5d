"""The figure renderers.

Each function takes CSV paths produced by the salab CLI plus an output
stem, draws one figure, and writes both PNG and PDF next to each other.
Rendering is deterministic given the inputs.
"""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .spec import FigureSpec, SchemaError, read_table

SPECTRUM_COLS = ("beta", "mean_max_cos", "mean_entropy", "var_max_cos",
                 "var_entropy")
PHASE_COLS = ("load_ratio", "k", "beta", "concentration")
ENERGY_COLS = ("chain", "step", "energy")
REF_COLS = ("step", "energy")
SUMMARY_COLS = ("ks_statistic", "ks_p_value", "pooled_mean_energy",
                "sd_across_chains", "max_chain_dev_in_sd")
ACF_COLS = ("coordinate", "lag", "acf_raw", "acf_squared", "band_99")


def _save(fig, out) -> list:
    out = Path(out)
    out.parent.mkdir(parents=True, exist_ok=True)
    png = out.with_suffix(".png")
    pdf = out.with_suffix(".pdf")
    fig.savefig(png, dpi=150, bbox_inches="tight")
    fig.savefig(pdf, bbox_inches="tight")
    plt.close(fig)
    return [png, pdf]


def plot_spectrum(csv_path, out) -> list:
    """Dual-axis temperature spectrum: max-cos left, entropy right."""
    FigureSpec("spectrum", ((csv_path, SPECTRUM_COLS),), Path(out)).validate()
    t = read_table(csv_path, SPECTRUM_COLS)
    fig, ax = plt.subplots(figsize=(6.5, 4))
    ax.semilogx(t[:, 0], t[:, 1], "o-", color="tab:blue", label="mean max-cos")
    ax.set_xlabel(r"inverse temperature $\beta$")
    ax.set_ylabel("cosine to nearest stored pattern", color="tab:blue")
    ax.tick_params(axis="y", labelcolor="tab:blue")
    ax2 = ax.twinx()
    ax2.semilogx(t[:, 0], t[:, 2], "s-", color="tab:orange",
                 label="mean attention entropy")
    ax2.set_ylabel("attention entropy (nats)", color="tab:orange")
    ax2.tick_params(axis="y", labelcolor="tab:orange")
    ax.set_title("Retrieval-generation spectrum")
    fig.tight_layout()
    return _save(fig, out)


def plot_phase_diagram(csv_path, out) -> list:
    """Concentration heatmap over (load ratio, beta) with a dashed C=0.5
    contour."""
    FigureSpec("phase-diagram", ((csv_path, PHASE_COLS),), Path(out)).validate()
    t = read_table(csv_path, PHASE_COLS)
    loads = np.unique(t[:, 0])
    betas = np.unique(t[:, 2])
    grid = np.full((betas.size, loads.size), np.nan)
    for row in t:
        i = int(np.searchsorted(betas, row[2]))
        j = int(np.searchsorted(loads, row[0]))
        grid[i, j] = row[3]
    if np.isnan(grid).any():
        raise SchemaError("phase-diagram CSV is not a complete load x beta grid")
    fig, ax = plt.subplots(figsize=(6, 4.5))
    mesh = ax.pcolormesh(loads, betas, grid, shading="nearest", cmap="magma",
                         vmin=0.0, vmax=1.0)
    ax.contour(loads, betas, grid, levels=[0.5], colors="white",
               linestyles="dashed", linewidths=1.5)
    ax.set_yscale("log")
    ax.set_xlabel("load ratio K/d")
    ax.set_ylabel(r"inverse temperature $\beta$")
    ax.set_title("Attention concentration $C$ (dashed: $C=0.5$)")
    fig.colorbar(mesh, ax=ax, label="concentration")
    fig.tight_layout()
    return _save(fig, out)


def _gaussian_kde(values: np.ndarray, grid: np.ndarray) -> np.ndarray:
    """1-D Gaussian KDE with Scott's-rule bandwidth sigma * n^(-1/5)."""
    n = values.size
    h = values.std(ddof=1) * n ** (-0.2)
    if h <= 0:
        raise SchemaError("degenerate energy sample: zero variance")
    z = (grid[:, None] - values[None, :]) / h
    return np.exp(-0.5 * z ** 2).sum(axis=1) / (n * h * np.sqrt(2 * np.pi))


def plot_convergence(chains_csv, reference_csv, out, summary_csv=None) -> list:
    """Pooled chain-energy density over the long-reference density.

    The KS annotation is re-read from the run's summary CSV when given;
    it is never computed here.
    """
    spec = FigureSpec("convergence", ((chains_csv, ENERGY_COLS),
                                      (reference_csv, REF_COLS)), Path(out))
    spec.validate()
    chains = read_table(chains_csv, ENERGY_COLS)
    ref = read_table(reference_csv, REF_COLS)
    pooled = chains[:, 2]
    reference = ref[:, 1]
    lo = min(pooled.min(), reference.min())
    hi = max(pooled.max(), reference.max())
    pad = 0.05 * (hi - lo if hi > lo else 1.0)
    grid = np.linspace(lo - pad, hi + pad, 400)
    fig, ax = plt.subplots(figsize=(6.5, 4))
    ax.fill_between(grid, _gaussian_kde(reference, grid), alpha=0.4,
                    color="tab:orange", label="long reference")
    ax.plot(grid, _gaussian_kde(pooled, grid), color="0.25",
            label="pooled chains")
    if summary_csv is not None:
        s = read_table(summary_csv, SUMMARY_COLS)
        ax.annotate("KS = %.4f" % s[0, 0], xy=(0.97, 0.95),
                    xycoords="axes fraction", ha="right", va="top")
    ax.set_xlabel("reduced energy")
    ax.set_ylabel("density")
    ax.set_title("Chain energies vs long-run reference")
    ax.legend(loc="upper left")
    fig.tight_layout()
    return _save(fig, out)


def plot_sample_grid(samples_csv, rows, cols, out) -> list:
    """4x4 grid of samples rendered as (rows x cols) grayscale images."""
    p = Path(samples_csv)
    if not p.exists():
        raise SchemaError("sample CSV not found: %s" % p)
    header = p.read_text().split("\n", 1)[0].split(",")
    if header[:2] != ["chain", "step"]:
        raise SchemaError("%s: expected columns chain,step,x0..x{d-1}" % p)
    d = len(header) - 2
    if d != rows * cols:
        raise SchemaError("sample dimension %d does not match %dx%d"
                          % (d, rows, cols))
    t = read_table(samples_csv)
    samples = t[:, 2:]
    if samples.shape[0] < 1:
        raise SchemaError("no samples in %s" % p)
    take = np.linspace(0, samples.shape[0] - 1, min(16, samples.shape[0]))
    take = np.unique(take.astype(int))
    fig, axes = plt.subplots(4, 4, figsize=(5, 5))
    for k, ax in enumerate(axes.ravel()):
        ax.set_xticks([])
        ax.set_yticks([])
        if k < take.size:
            ax.imshow(samples[take[k]].reshape(rows, cols), cmap="gray")
        else:
            ax.axis("off")
    fig.suptitle("Generated samples")
    fig.tight_layout()
    return _save(fig, out)


def plot_acf(csv_path, out) -> list:
    """Raw and squared autocorrelations per coordinate with the 99% band."""
    FigureSpec("acf", ((csv_path, ACF_COLS),), Path(out)).validate()
    t = read_table(csv_path, ACF_COLS)
    coords = np.unique(t[:, 0]).astype(int)
    fig, axes = plt.subplots(2, coords.size, figsize=(2.2 * coords.size, 4.5),
                             sharex=True, sharey="row", squeeze=False)
    for j, c in enumerate(coords):
        sel = t[t[:, 0] == c]
        band = sel[0, 4]
        for row, col_idx, label in ((0, 2, "ACF"), (1, 3, r"ACF$^2$")):
            ax = axes[row, j]
            ax.bar(sel[:, 1], sel[:, col_idx], width=0.6, color="tab:blue")
            ax.axhline(band, ls="--", c="tab:red", lw=0.8)
            ax.axhline(-band, ls="--", c="tab:red", lw=0.8)
            ax.axhline(0.0, c="0.4", lw=0.6)
            if row == 0:
                ax.set_title("coordinate %d" % c, fontsize=9)
            if j == 0:
                ax.set_ylabel(label)
        axes[1, j].set_xlabel("lag")
    fig.suptitle("Autocorrelation with 99% white-noise band")
    fig.tight_layout()
    return _save(fig, out)
