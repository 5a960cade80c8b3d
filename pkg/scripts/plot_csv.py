"""Render CSV output of the ``hostile-strip`` commands with matplotlib.

    python scripts/plot_csv.py ell ell.csv [more.csv ...] -o ell.png
    python scripts/plot_csv.py profile small.csv ground.csv big.csv -o profiles.png
    python scripts/plot_csv.py snapshots snapshots.csv -o run.png
"""
from __future__ import annotations

import argparse

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402


def _read(path):
    """Return ``(meta, columns)`` for a CSV with optional ``# key=value`` lines."""
    meta, skip = {}, 0
    with open(path) as fh:
        for line in fh:
            if not line.startswith("#"):
                names = line.strip().split(",")
                break
            key, _, val = line[1:].strip().partition("=")
            meta[key.strip()] = val.strip()
            skip += 1
    data = np.loadtxt(path, delimiter=",", skiprows=skip + 1, ndmin=2)
    return meta, dict(zip(names, data.T))


def plot_ell(paths, ax):
    for path in paths:
        _, d = _read(path)
        ax.semilogx(d["a"], d["ell"], label=path)
    ax.set_xlabel("a")
    ax.set_ylabel("ell(a)")


def plot_profiles(paths, ax):
    for path in paths:
        meta, d = _read(path)
        ax.plot(d["x"], d["v"], label=meta.get("kind", path))
        if "L" in meta:
            for edge in (-float(meta["L"]), float(meta["L"])):
                ax.axvline(edge, color="0.7", lw=0.8)
    ax.set_xlabel("x")
    ax.set_ylabel("v")


def plot_snapshots(paths, ax):
    _, d = _read(paths[0])
    times = np.unique(d["t"])
    for t in times:
        m = d["t"] == t
        ax.plot(d["x"][m], d["u"][m], lw=0.8, label=f"t={t:g}" if len(times) <= 8 else None)
    ax.set_xlabel("x")
    ax.set_ylabel("u")


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("what", choices=["ell", "profile", "snapshots"])
    ap.add_argument("paths", nargs="+")
    ap.add_argument("-o", "--output", default="plot.png")
    args = ap.parse_args(argv)
    fig, ax = plt.subplots(figsize=(7, 4))
    {"ell": plot_ell, "profile": plot_profiles, "snapshots": plot_snapshots}[args.what](args.paths, ax)
    if ax.get_legend_handles_labels()[0]:
        ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(args.output, dpi=120)


if __name__ == "__main__":
    main()
