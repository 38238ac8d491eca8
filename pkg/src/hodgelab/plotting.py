"""Report figures rendered with the Agg backend."""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

# strip the software/date stamps so figures are reproducible
_META = {"Software": None}


def _save(fig, path: Path) -> str:
    path.parent.mkdir(parents=True, exist_ok=True)
    fig.tight_layout()
    fig.savefig(path, dpi=100, metadata=_META)
    plt.close(fig)
    return str(path)


def spectrum_figure(spectra: dict, cutoff: dict, path) -> str:
    """Eigenvalues of each Laplacian on a log scale, with the zero cutoff."""
    fig, ax = plt.subplots(figsize=(6, 4))
    for p, vals in sorted(spectra.items()):
        vals = np.sort(np.abs(np.asarray(vals)))
        ax.semilogy(np.arange(len(vals)), np.maximum(vals, 1e-18), ".", label=f"p = {p}")
        if p in cutoff:
            ax.axhline(cutoff[p], color="0.6", lw=0.8, ls="--")
    ax.set_xlabel("index")
    ax.set_ylabel("eigenvalue")
    ax.set_title("Hodge Laplacian spectra")
    ax.legend(frameon=False)
    return _save(fig, Path(path))


def heat_figure(times, ratios, rate: float, path) -> str:
    """Observed decay of the non-harmonic part against ``exp(-lambda1 t)``."""
    times = np.asarray(times, dtype=float)
    fig, ax = plt.subplots(figsize=(6, 4))
    ratios = np.asarray(ratios, dtype=float)
    for k in range(ratios.shape[1]):
        ax.semilogy(times, ratios[:, k], color="C0", alpha=0.25, lw=0.8)
    grid = np.linspace(0.0, times.max(), 200)
    ax.semilogy(grid, np.exp(-rate * grid), "k--", label=r"$e^{-\lambda_1 t}$")
    ax.set_xlabel("t")
    ax.set_ylabel("relative distance to harmonic part")
    ax.set_ylim(bottom=max(1e-300, float(np.exp(-rate * times.max())) * 1e-3))
    ax.legend(frameon=False)
    return _save(fig, Path(path))


def betti_figure(harmonic, exact, path, title: str = "") -> str:
    """Bar chart of harmonic dimensions beside the exact-arithmetic Betti numbers."""
    p = np.arange(len(harmonic))
    fig, ax = plt.subplots(figsize=(5, 3.5))
    ax.bar(p - 0.2, harmonic, width=0.4, label="harmonic kernel")
    ax.bar(p + 0.2, exact, width=0.4, label="rational rank")
    ax.set_xticks(p)
    ax.set_xlabel("degree p")
    ax.set_ylabel("Betti number")
    if title:
        ax.set_title(title)
    ax.legend(frameon=False)
    return _save(fig, Path(path))
