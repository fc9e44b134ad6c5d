"""Matplotlib rendering of sweep curves and resource tables to PNG files."""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

_MARKERS = "osv^Dp*Xh"


def render_sweeps(sweeps, out_path, title: str | None = None) -> None:
    """One log-y error-probability line per sweep; zero rows are dropped by the log axis."""
    sweeps = list(sweeps)
    if not sweeps:
        raise ValueError("nothing to plot: no sweeps were given")
    fig, ax = plt.subplots(figsize=(7.2, 5.0))
    for i, sweep in enumerate(sweeps):
        snr = [row.snr_db for row in sweep.rows]
        p_e = [row.p_e for row in sweep.rows]
        ax.semilogy(
            snr,
            p_e,
            marker=_MARKERS[i % len(_MARKERS)],
            markersize=4.5,
            linewidth=1.2,
            label=sweep.curve,
        )
    ax.set_xlabel("SNR (dB)")
    ax.set_ylabel("Error probability of TS")
    if title:
        ax.set_title(title)
    ax.grid(True, which="both", alpha=0.3)
    ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(Path(out_path), dpi=150)
    plt.close(fig)


def render_resource_bars(rows, out_path) -> None:
    """Side-by-side storage and air-time bars for the accounting table."""
    rows = list(rows)
    if not rows:
        raise ValueError("nothing to plot: no table rows were given")
    names = [r["strategy"] for r in rows]
    fig, (ax_s, ax_b) = plt.subplots(1, 2, figsize=(8.2, 4.2))
    ax_s.bar(names, [r["storage_mb"] for r in rows], color="#4878cf")
    ax_s.set_ylabel("storage (MB)")
    ax_s.grid(True, axis="y", alpha=0.3)
    ax_b.bar(names, [r["bandwidth_s"] for r in rows], color="#d65f5f")
    ax_b.set_ylabel("air time (s)")
    ax_b.grid(True, axis="y", alpha=0.3)
    fig.tight_layout()
    fig.savefig(Path(out_path), dpi=150)
    plt.close(fig)
