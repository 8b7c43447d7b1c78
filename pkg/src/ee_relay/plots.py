"""Static SVG figures drawn from the CSV rows of the experiment runners.

Output is reproducible: a fixed hash salt and no date metadata, so the
same rows give the same file.
"""

from __future__ import annotations

from pathlib import Path
from typing import Sequence

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

plt.rcParams["svg.hashsalt"] = "ee-relay"


def _save(fig, path: Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)
    return path


def _xs(rows: list[dict]) -> list:
    return [r["value"] if r.get("value") is not None else i for i, r in enumerate(rows)]


def plot_series(rows: list[dict], columns: Sequence[str], path: Path, ylabel: str,
                logy: bool = False, xkey: str | None = None) -> Path | None:
    """One line per column against the swept value (or ``xkey``)."""
    rows = [r for r in rows if not r.get("infeasible")]
    if not rows:
        return None
    x = [r[xkey] for r in rows] if xkey else _xs(rows)
    fig, ax = plt.subplots(figsize=(6, 4))
    for col in columns:
        ys = [r.get(col) for r in rows]
        if any(y is None for y in ys):
            continue
        ax.plot(x, ys, marker="o", markersize=3, label=col)
    ax.set_xlabel(xkey or rows[0].get("param") or "point")
    ax.set_ylabel(ylabel)
    if logy:
        ax.set_yscale("log")
    ax.grid(True, alpha=0.3)
    ax.legend()
    fig.tight_layout()
    return _save(fig, path)


def plot_trace(trace: list[dict], path: Path) -> Path | None:
    """EE_LB per outer iteration, one line per (sweep value, start)."""
    if not trace:
        return None
    fig, ax = plt.subplots(figsize=(6, 4))
    groups: dict[tuple, list[dict]] = {}
    for t in trace:
        groups.setdefault((t["value"], t["start"]), []).append(t)
    for (value, start), ts in groups.items():
        label = f"start {start}" if value is None else f"{value}, start {start}"
        ax.plot([t["iteration"] for t in ts], [t["ee_lb"] for t in ts], marker=".", label=label)
    ax.set_xlabel("outer iteration")
    ax.set_ylabel("EE_LB [bit/J]")
    ax.grid(True, alpha=0.3)
    if len(groups) <= 12:
        ax.legend(fontsize="small")
    fig.tight_layout()
    return _save(fig, path)
