"""Deterministic SVG output through matplotlib's Agg-free SVG backend."""

from __future__ import annotations

import matplotlib

matplotlib.use("svg")

import matplotlib.pyplot as plt  # noqa: E402

matplotlib.rcParams["svg.hashsalt"] = "foldcont"
matplotlib.rcParams["svg.fonttype"] = "none"


def new_figure(size=(5.0, 5.0)):
    fig, ax = plt.subplots(figsize=size)
    return fig, ax


def save_svg(fig, path) -> None:
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)
