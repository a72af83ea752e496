"""
viz.py

Fruchterman-Reingold layout and static figures of pair networks.

Internal nodes are drawn in their party's colour, boundary nodes in dark grey
and edges touching the boundary in light grey. Figures go out as SVG (or PNG)
through matplotlib, as DOT through pydot, or as GraphML through networkx; the
two graph formats carry positions and colours as node attributes.

Usage:
------
>>> from echoscope.viz import fruchterman_reingold, render
>>> layout = fruchterman_reingold(pair.network, iterations=500, rng_seed=2014)
>>> render(pair.network, layout, "pair.svg", partition=part)
"""

from __future__ import annotations

import logging
from collections.abc import Mapping, Sequence
from dataclasses import dataclass
from pathlib import Path

import matplotlib
import networkx as nx
import numpy as np
from matplotlib.axes import Axes
from matplotlib.collections import LineCollection
from matplotlib.figure import Figure
from matplotlib.patches import Circle

from .errors import LayoutError
from .extensions import make_rng
from .models import InteractionNetwork, Layout, PairNetwork, PairPartition

logger = logging.getLogger(__name__)

BOUNDARY_COLOR = "#404040"
BOUNDARY_EDGE_COLOR = "#b0b0b0"
NEUTRAL_COLOR = "#9e9e9e"
SIDE_COLORS = ("#1f77b4", "#d62728")
MIN_DISTANCE = 0.01
MAX_STEP_HALVINGS = 8
# dense pairwise forces; larger networks need a sparse layout
MAX_LAYOUT_NODES = 5000


def _network(network: InteractionNetwork | PairNetwork) -> InteractionNetwork:
    return network.network if isinstance(network, PairNetwork) else network


def _adjacency(network: InteractionNetwork, nodes: list[str]) -> np.ndarray:
    """Binary symmetric adjacency in ``nodes`` order."""
    index = {node: i for i, node in enumerate(nodes)}
    A = np.zeros((len(nodes), len(nodes)))
    src = network.edges["source"].map(index).to_numpy(dtype=np.int64)
    tgt = network.edges["target"].map(index).to_numpy(dtype=np.int64)
    A[src, tgt] = 1.0
    A[tgt, src] = 1.0
    return A


def _energy(A: np.ndarray, pos: np.ndarray, k: float) -> float:
    """FR potential: d^3 / 3k per edge minus k^2 ln d per node pair."""
    delta = pos[:, np.newaxis, :] - pos[np.newaxis, :, :]
    distance = np.clip(np.linalg.norm(delta, axis=-1), MIN_DISTANCE, None)
    upper = np.triu_indices(len(pos), k=1)
    d = distance[upper]
    return float(np.sum(A[upper] * d**3) / (3 * k) - k * k * np.sum(np.log(d)))


def layout_energy(network: InteractionNetwork | PairNetwork, layout: Layout) -> float:
    """Energy of a finished layout, on the same scale as ``Layout.energy``."""
    net = _network(network)
    nodes = sorted(net.nodes)
    pos = np.array([layout.positions[n] for n in nodes], dtype=float)
    return _energy(_adjacency(net, nodes), pos, np.sqrt(1.0 / len(nodes)))


def fruchterman_reingold(
    network: InteractionNetwork | PairNetwork,
    iterations: int = 500,
    rng_seed: int = 0,
    record_energy: bool = False,
) -> Layout:
    """
    Force-directed layout in the unit square.

    Repulsion k^2/d between every node pair, attraction d^2/k along edges
    (direction and weight ignored), k = sqrt(1/n). The temperature starts at
    0.1 (a tenth of the frame) and cools linearly to 0; each node moves along
    its net force by at most the temperature and is kept inside the frame. A
    step that would raise the layout energy is halved, up to
    ``MAX_STEP_HALVINGS`` times, and skipped if it still would.

    Args:
        network: network to lay out.
        iterations: number of cooling steps.
        rng_seed: seed of the uniform initial positions.
        record_energy: store the layout energy after every step.

    Returns:
        Layout: one finite position per node.

    Raises:
        LayoutError: empty network, or too large for the dense solver.
    """
    net = _network(network)
    nodes = sorted(net.nodes)
    n = len(nodes)
    if n == 0:
        raise LayoutError("cannot lay out an empty network")
    if n > MAX_LAYOUT_NODES:
        raise LayoutError(f"{n} nodes exceed the layout limit of {MAX_LAYOUT_NODES}")

    rng = make_rng(rng_seed)
    pos = rng.random((n, 2))
    A = _adjacency(net, nodes)
    k = np.sqrt(1.0 / n)
    t = 0.1
    dt = t / iterations if iterations else 0.0
    current = _energy(A, pos, k)
    energy: list[float] = []

    for _ in range(iterations):
        delta = pos[:, np.newaxis, :] - pos[np.newaxis, :, :]
        distance = np.clip(np.linalg.norm(delta, axis=-1), MIN_DISTANCE, None)
        # displacement "force"
        displacement = np.einsum("ijk,ij->ik", delta, k * k / distance**2 - A * distance / k)
        length = np.linalg.norm(displacement, axis=-1)
        scale = np.minimum(length, t) / np.maximum(length, 1e-12)
        step = displacement * scale[:, np.newaxis]
        for _ in range(MAX_STEP_HALVINGS + 1):
            trial = np.clip(pos + step, 0.0, 1.0)
            trial_energy = _energy(A, trial, k)
            if trial_energy <= current:
                pos, current = trial, trial_energy
                break
            step /= 2.0
        t -= dt
        if record_energy:
            energy.append(current)

    positions = {node: (float(x), float(y)) for node, (x, y) in zip(nodes, pos)}
    logger.debug("laid out %d nodes in %d iterations", n, iterations)
    return Layout(positions, iterations, rng_seed, energy=energy)


# =========================================================================
# Rendering
# =========================================================================
def node_colors(
    network: InteractionNetwork | PairNetwork,
    partition: PairPartition | None = None,
    colors: Mapping[str, str] | None = None,
) -> dict[str, str]:
    """
    Colour per node: party colours and dark grey boundary from a partition,
    or an explicit map (unlisted nodes neutral).

    Raises:
        LayoutError: the colour map names a node the network does not have.
    """
    net = _network(network)
    if partition is not None:
        result = {}
        for node in net.nodes:
            if node in partition.boundary:
                result[node] = BOUNDARY_COLOR
            elif node in partition.internal_a:
                result[node] = SIDE_COLORS[0]
            elif node in partition.internal_b:
                result[node] = SIDE_COLORS[1]
            else:
                result[node] = NEUTRAL_COLOR
        return result
    colors = dict(colors or {})
    unknown = sorted(set(colors) - net.nodes)
    if unknown:
        raise LayoutError(f"colour map names unknown node(s): {', '.join(unknown[:5])}")
    return {node: colors.get(node, NEUTRAL_COLOR) for node in net.nodes}


def _draw(
    ax: Axes,
    network: InteractionNetwork,
    layout: Layout,
    fill: Mapping[str, str],
    boundary: frozenset[str],
    title: str | None = None,
    gid_prefix: str = "",
) -> None:
    nodes = sorted(network.nodes)
    _check_positions(network, layout)

    segments, edge_colors = [], []
    for source, target in zip(network.edges["source"], network.edges["target"]):
        segments.append([layout.positions[source], layout.positions[target]])
        if source in boundary or target in boundary:
            edge_colors.append(BOUNDARY_EDGE_COLOR)
        else:
            edge_colors.append(fill[source])
    if segments:
        ax.add_collection(
            LineCollection(segments, colors=edge_colors, linewidths=0.4, alpha=0.5, zorder=1)
        )

    radius = min(0.02, 0.3 / np.sqrt(len(nodes)))
    for i, node in enumerate(nodes):
        circle = Circle(
            layout.positions[node], radius, facecolor=fill[node], edgecolor="none", zorder=2
        )
        circle.set_gid(f"{gid_prefix}node-{i}")
        ax.add_patch(circle)

    xmin, ymin, xmax, ymax = layout.bbox
    pad = 0.05 * max(xmax - xmin, ymax - ymin)
    ax.set_xlim(xmin - pad, xmax + pad)
    ax.set_ylim(ymin - pad, ymax + pad)
    ax.set_aspect("equal")
    ax.set_axis_off()
    if title:
        ax.set_title(title, fontsize=9)


def _check_positions(network: InteractionNetwork, layout: Layout) -> None:
    missing = [n for n in network.nodes if n not in layout.positions]
    if missing:
        raise LayoutError(f"layout has no position for {len(missing)} node(s)")


def _save(fig: Figure, path: Path) -> None:
    with matplotlib.rc_context({"svg.hashsalt": "echoscope", "svg.fonttype": "path"}):
        metadata = {"Date": None} if path.suffix.lower() == ".svg" else None
        fig.savefig(path, metadata=metadata)


def _graph_with_attributes(
    network: InteractionNetwork, layout: Layout, fill: Mapping[str, str]
) -> nx.DiGraph:
    graph = nx.DiGraph()
    for node in sorted(network.nodes):
        x, y = layout.positions[node]
        graph.add_node(node, x=x, y=y, color=fill[node])
    for row in network.edges.itertuples(index=False):
        graph.add_edge(row.source, row.target, weight=int(row.weight))
    return graph


def render(
    network: InteractionNetwork | PairNetwork,
    layout: Layout,
    path: str | Path,
    partition: PairPartition | None = None,
    colors: Mapping[str, str] | None = None,
    fmt: str | None = None,
    title: str | None = None,
) -> Path:
    """
    Write one network figure.

    Args:
        network: network to draw.
        layout: positions for every node.
        path: output file.
        partition: colours internal sides and the boundary.
        colors: explicit node -> colour map, used when no partition is given.
        fmt: ``svg``, ``png``, ``dot`` or ``graphml``; defaults to the suffix.
        title: optional figure title.

    Raises:
        LayoutError: unknown coloured node, a node without a position, or an
            unsupported format.
    """
    net = _network(network)
    path = Path(path)
    fmt = (fmt or path.suffix.lstrip(".") or "svg").lower()
    fill = node_colors(net, partition, colors)
    boundary = partition.boundary if partition is not None else frozenset()
    _check_positions(net, layout)

    if fmt in ("svg", "png"):
        fig = Figure(figsize=(6, 6))
        _draw(fig.add_subplot(1, 1, 1), net, layout, fill, boundary, title)
        _save(fig, path)
    elif fmt == "dot":
        dot = nx.DiGraph()
        for node in sorted(net.nodes):
            x, y = layout.positions[node]
            dot.add_node(node, pos=f"{x:.4f},{y:.4f}!", style="filled", fillcolor=fill[node])
        for row in net.edges.itertuples(index=False):
            dot.add_edge(row.source, row.target, weight=int(row.weight))
        nx.nx_pydot.write_dot(dot, path)
    elif fmt == "graphml":
        nx.write_graphml(_graph_with_attributes(net, layout, fill), path)
    else:
        raise LayoutError(f"unsupported figure format {fmt!r}")
    logger.info("wrote %s figure %s", fmt, path)
    return path


@dataclass(slots=True)
class Panel:
    """One cell of a figure grid."""

    network: InteractionNetwork | PairNetwork
    layout: Layout
    partition: PairPartition | None = None
    title: str | None = None


def render_grid(panels: Sequence[Panel], path: str | Path, columns: int = 2) -> Path:
    """Side-by-side pair panels in one SVG/PNG file."""
    if not panels:
        raise LayoutError("no panels to render")
    path = Path(path)
    rows = -(-len(panels) // columns)
    fig = Figure(figsize=(4 * columns, 4 * rows))
    for i, panel in enumerate(panels):
        net = _network(panel.network)
        fill = node_colors(net, panel.partition)
        boundary = panel.partition.boundary if panel.partition is not None else frozenset()
        _draw(
            fig.add_subplot(rows, columns, i + 1),
            net,
            panel.layout,
            fill,
            boundary,
            panel.title,
            gid_prefix=f"panel{i}-",
        )
    _save(fig, path)
    logger.info("wrote %d-panel figure %s", len(panels), path)
    return path
