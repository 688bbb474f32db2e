"""Route maps (SVG/PNG via matplotlib, or GeoJSON) and convergence plots."""

from __future__ import annotations

import csv
import json
import logging
from pathlib import Path
from typing import Any, Optional, Union

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

from .model import Instance, NodeKind, Solution  # noqa: E402

log = logging.getLogger(__name__)

COMPANY_COLORS = {1: "tab:red", 2: "tab:blue"}
IMAGE_SUFFIXES = (".svg", ".png", ".pdf")


class NoCoordinatesError(ValueError):
    pass


def _require_xy(instance: Instance) -> None:
    missing = [n.label for n in instance.nodes if n.x is None or n.y is None]
    if missing:
        raise NoCoordinatesError(
            f"instance {instance.name!r} has no coordinates for {len(missing)} node(s) "
            f"(e.g. {missing[0]}); use the CSV/JSON report output instead"
        )


def slot_of(instance: Instance, node: int) -> int:
    """Index of the node's window opening among the distinct customer openings (0 = earliest)."""
    opens = sorted({instance.window(j)[0] for j in instance.customers})
    return opens.index(instance.window(node)[0])


def plot_solution(
    instance: Instance,
    solution: Optional[Solution],
    path: Union[str, Path],
    title: Optional[str] = None,
) -> Path:
    """Depots as squares, meet points as stars, customers as circles.

    Customers in the earliest window slot are filled, later slots hollow;
    colour marks the owning company.  Routes are drawn as polylines.
    """
    _require_xy(instance)
    path = Path(path)
    fig, ax = plt.subplots(figsize=(7, 7))
    if solution is not None:
        for r in solution.routes:
            if len(r.nodes) < 2:
                continue
            xs = [instance.nodes[i].x for i in r.nodes]
            ys = [instance.nodes[i].y for i in r.nodes]
            ax.plot(xs, ys, "-", color=COMPANY_COLORS.get(r.company, "k"), lw=1.2, alpha=0.8, zorder=1,
                    label=f"route {r.company}")
    chosen = solution.meet_point if solution is not None else None
    for i, n in enumerate(instance.nodes):
        color = COMPANY_COLORS.get(n.company or 0, "k")
        if n.kind is NodeKind.DEPOT:
            ax.scatter(n.x, n.y, marker="s", s=120, color=color, edgecolors="k", zorder=3)
        elif n.kind is NodeKind.MEET:
            ax.scatter(n.x, n.y, marker="*", s=260 if i == chosen else 140,
                       color="gold" if i == chosen else "lightgray", edgecolors="k", zorder=3)
        else:
            filled = slot_of(instance, i) == 0
            ax.scatter(n.x, n.y, marker="o", s=40, facecolors=color if filled else "white",
                       edgecolors=color, linewidths=1.2, zorder=2)
    ax.set_aspect("equal")
    ax.set_xlabel("x (km)")
    ax.set_ylabel("y (km)")
    if title is None and solution is not None:
        title = f"{instance.name}: TC {solution.total_cost:.1f} SEK"
    if title:
        ax.set_title(title)
    if solution is not None and solution.routes:
        ax.legend(loc="upper right", fontsize=8)
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)
    return path


def solution_geojson(instance: Instance, solution: Optional[Solution]) -> dict[str, Any]:
    """FeatureCollection with one Point per node and one LineString per route (planar km)."""
    _require_xy(instance)
    feats: list[dict[str, Any]] = []
    chosen = solution.meet_point if solution is not None else None
    for i, n in enumerate(instance.nodes):
        props: dict[str, Any] = {"index": i, "label": n.label, "kind": n.kind.value, "company": n.company}
        if n.kind is NodeKind.CUSTOMER:
            e, l = instance.window(i)
            props.update(shared=n.shared, slot=slot_of(instance, i), tw=[e, l if l != float("inf") else None])
        if n.kind is NodeKind.MEET:
            props["chosen"] = i == chosen
        feats.append({"type": "Feature", "geometry": {"type": "Point", "coordinates": [n.x, n.y]},
                      "properties": props})
    if solution is not None:
        for r in solution.routes:
            coords = [[instance.nodes[i].x, instance.nodes[i].y] for i in r.nodes]
            feats.append(
                {
                    "type": "Feature",
                    "geometry": {"type": "LineString", "coordinates": coords},
                    "properties": {"company": r.company, "nodes": [instance.nodes[i].label for i in r.nodes],
                                   "return_time": r.arrival},
                }
            )
    return {"type": "FeatureCollection", "features": feats}


def write_geojson(instance: Instance, solution: Optional[Solution], path: Union[str, Path]) -> Path:
    path = Path(path)
    path.write_text(json.dumps(solution_geojson(instance, solution), indent=1))
    return path


def render(instance: Instance, solution: Optional[Solution], path: Union[str, Path]) -> Path:
    """Dispatch on the suffix: ``.geojson``/``.json`` or an image format."""
    path = Path(path)
    suffix = path.suffix.lower()
    if suffix in (".geojson", ".json"):
        return write_geojson(instance, solution, path)
    if suffix in IMAGE_SUFFIXES:
        return plot_solution(instance, solution, path)
    raise ValueError(f"unsupported plot format {suffix!r}; use .svg, .png, .pdf or .geojson")


def plot_convergence(progress_csv: Union[str, Path], path: Union[str, Path]) -> Path:
    """Best cost per iteration from an ``iter,segment,run,best_cost`` log, one line per run."""
    runs: dict[int, tuple[list[int], list[float]]] = {}
    with Path(progress_csv).open() as fh:
        for row in csv.DictReader(fh):
            cost = float(row["best_cost"])
            if cost == float("inf"):
                continue
            xs, ys = runs.setdefault(int(row["run"]), ([], []))
            xs.append(int(row["iter"]))
            ys.append(cost)
    fig, ax = plt.subplots(figsize=(7, 4))
    for run, (xs, ys) in sorted(runs.items()):
        ax.plot(xs, ys, lw=1, label=f"run {run}")
    ax.set_xlabel("iteration")
    ax.set_ylabel("best cost (SEK)")
    if runs:
        ax.legend(fontsize=8)
    fig.tight_layout()
    path = Path(path)
    fig.savefig(path)
    plt.close(fig)
    return path
