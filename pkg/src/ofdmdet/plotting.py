"""Figure rendering for sweep and complexity reports.

Plots are derived views of the delimited output: the CSV stays the data
contract and each report command drops a PNG next to it.
"""

from __future__ import annotations

import csv
from collections import defaultdict

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt

_LABELS = {
    "mf": "Matched filter",
    "zf": "Zero forcing",
    "mmse": "MMSE",
    "vblast": "VBLAST (MMSE-SD)",
    "map-gs": "MAP-GS",
    "exact-map": "Exact MAP",
}


def _curves_from_rows(rows):
    curves = defaultdict(list)
    for r in rows:
        curves[r["detector"]].append((float(r["ebn0_db"]), float(r["ber"])))
    for pts in curves.values():
        pts.sort()
    return curves


def plot_ber_csv(csv_path, out_path, title=None):
    """Render BER-vs-Eb/N0 curves, one line per detector, from a sweep CSV."""
    with open(csv_path, newline="") as f:
        rows = list(csv.DictReader(f))
    return plot_ber_rows(rows, out_path, title=title)


def plot_ber_rows(rows, out_path, title=None):
    curves = _curves_from_rows(rows)
    fig, ax = plt.subplots(figsize=(6.4, 4.4))
    for det, pts in sorted(curves.items()):
        x = [p[0] for p in pts]
        y = [max(p[1], 1e-12) for p in pts]
        ax.semilogy(x, y, marker="o", label=_LABELS.get(det, det))
    ax.set_xlabel(r"$E_b/N_0$ (dB)")
    ax.set_ylabel("BER")
    ax.grid(True, which="both", alpha=0.3)
    ax.legend()
    if title:
        ax.set_title(title)
    fig.tight_layout()
    fig.savefig(out_path, dpi=150)
    plt.close(fig)
    return out_path


def plot_complexity(rows, out_path, title=None):
    """Operation counts versus Q: measured detector cost and the closed forms."""
    qs = [r["q"] for r in rows]
    fig, ax = plt.subplots(figsize=(6.4, 4.4))
    ax.semilogy(qs, [r["measured_total"] for r in rows], marker="o",
                label="MAP-GS measured")
    ax.semilogy(qs, [r["mapgs_bound"] for r in rows], marker="s", linestyle="--",
                label="MAP-GS bound")
    ax.semilogy(qs, [r["block_mmse"] for r in rows], marker="^", label="block MMSE")
    ax.semilogy(qs, [r["serial_mmse"] for r in rows], marker="v", label="serial MMSE")
    ax.set_xlabel("Q")
    ax.set_ylabel("complex operations per block")
    ax.grid(True, which="both", alpha=0.3)
    ax.legend()
    if title:
        ax.set_title(title)
    fig.tight_layout()
    fig.savefig(out_path, dpi=150)
    plt.close(fig)
    return out_path
