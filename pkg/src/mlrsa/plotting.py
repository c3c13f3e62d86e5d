"""Optional PNG rendering of an artifact table (matplotlib, Agg backend).

The delimited files stay the primary output; a plot is drawn from exactly
the rows that were written, so it never shows anything the CSV lacks.
"""

from __future__ import annotations

from itertools import groupby
from pathlib import Path

from .report import Artifact


def render(art: Artifact, path: Path, title: str = "") -> Path:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    spec = art.plot or {}
    col = {c: i for i, c in enumerate(art.columns)}
    x, y = spec.get("x", art.columns[0]), spec.get("y", art.columns[-1])
    err = spec.get("err")
    group = spec.get("group", [])
    markers = spec.get("markers")

    fig, ax = plt.subplots(figsize=(6.4, 4.4))
    key = lambda r: tuple(r[col[g]] for g in group)
    for label, rows in groupby(sorted(art.rows, key=key), key=key):
        rows = sorted(rows, key=lambda r: r[col[x]])
        xs = [r[col[x]] for r in rows]
        ys = [r[col[y]] for r in rows]
        name = ", ".join(f"{g}={v}" for g, v in zip(group, label)) or y
        # ungrouped tables with error bars are simulation series (comparison reports)
        as_markers = (markers is not None and markers in label) or (not group and bool(err))
        if as_markers and err:
            ax.errorbar(xs, ys, yerr=[r[col[err]] for r in rows], fmt="o", ms=3, label=name)
        elif as_markers:
            ax.plot(xs, ys, "o", ms=3, label=name)
        else:
            ax.plot(xs, ys, "-", lw=1.2, label=name)
    for extra in spec.get("lines", []):
        rows = sorted(art.rows, key=lambda r: r[col[x]])
        ax.plot([r[col[x]] for r in rows], [r[col[extra]] for r in rows], "-", label=extra)
    if spec.get("logx"):
        ax.set_xscale("log")
    if spec.get("logy"):
        ax.set_yscale("log")
    ax.set_xlabel(x)
    ax.set_ylabel(y)
    if title:
        ax.set_title(title)
    ax.legend(fontsize=7)
    fig.tight_layout()
    path = Path(path)
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path
