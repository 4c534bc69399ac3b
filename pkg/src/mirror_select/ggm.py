"""Gaussian graphical model edge selection via nodewise regressions.

Zero entries of a Gaussian precision matrix correspond to zero coefficients
when one variable is regressed on all the others, so the graph can be
estimated by running the data-splitting selector once per node and declaring
an edge whenever either endpoint selects the other (the OR rule).  Because
each edge gets up to two chances, every nodewise regression targets half the
designated level.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .errors import MirrorSelectError
from .linalg import make_dataset
from .mds import mds_select
from .mirror import Contrast, ds_select

logger = logging.getLogger(__name__)

Edge = tuple[int, int]


@dataclass(frozen=True)
class GraphEstimate:
    """An undirected edge set with per-node selection provenance."""

    edges: frozenset[Edge]
    neighborhoods: tuple[np.ndarray, ...]
    level: float
    failed_nodes: tuple[int, ...] = ()

    def __post_init__(self):
        for i, j in self.edges:
            if i == j:
                raise ValueError("self-loops are not allowed")


def edges_from_neighborhoods(neighborhoods) -> frozenset[Edge]:
    """OR rule: {i, j} is an edge iff i selected j or j selected i."""
    edges = set()
    for j, neighbors in enumerate(neighborhoods):
        for i in neighbors:
            if int(i) != j:
                edges.add((min(int(i), j), max(int(i), j)))
    return frozenset(edges)


def nodewise_select(
    x: np.ndarray,
    node: int,
    node_level: float,
    method: str,
    num_splits: int,
    contrast: Contrast,
    rng: np.random.Generator,
    cv_folds: int = 10,
    grid_size: int = 100,
) -> np.ndarray:
    """Select the neighbors of ``node`` by regressing it on the rest.

    ``method`` is ``"ds"`` or ``"mds"``; the returned indices refer to the
    original columns of ``x``.
    """
    x = np.asarray(x, dtype=np.float64)
    p = x.shape[1]
    if p < 3:
        raise ValueError("need at least 3 columns for nodewise regression")
    others = np.delete(np.arange(p), node)
    data = make_dataset(x[:, others], x[:, node])
    if method == "ds":
        result = ds_select(data, node_level, contrast, rng, cv_folds, grid_size)
    elif method == "mds":
        result = mds_select(
            data, node_level, contrast, num_splits, rng, cv_folds, grid_size
        )
    else:
        raise ValueError(f"unknown method {method!r}")
    return others[result.selected]


def ggm_select(
    x: np.ndarray,
    level: float,
    method: str,
    num_splits: int,
    rng: np.random.Generator,
    contrast: Contrast = Contrast.SUM,
    cv_folds: int = 10,
    grid_size: int = 100,
    on_node: Optional[Callable[[int, float], None]] = None,
) -> GraphEstimate:
    """Estimate the graph: one nodewise selection per column, OR-combined.

    Every nodewise call runs at ``level / 2``.  For ``method="mds"`` the
    splits are replicated inside each nodewise regression and aggregated
    there (one OR combination at the end).  A node whose regression fails
    numerically contributes an empty neighborhood and is reported in
    ``failed_nodes``.  ``on_node`` (if given) is invoked with each node index
    and its level, before the node runs.
    """
    x = np.asarray(x, dtype=np.float64)
    p = x.shape[1]
    node_level = level / 2.0
    children = rng.spawn(p)
    neighborhoods: list[np.ndarray] = []
    failed: list[int] = []
    for node in range(p):
        if on_node is not None:
            on_node(node, node_level)
        try:
            neighbors = nodewise_select(
                x,
                node,
                node_level,
                method,
                num_splits,
                contrast,
                children[node],
                cv_folds,
                grid_size,
            )
        except MirrorSelectError as exc:
            logger.warning("node %d failed (%s); empty neighborhood", node, exc)
            neighbors = np.empty(0, dtype=np.int64)
            failed.append(node)
        neighborhoods.append(neighbors)
    return GraphEstimate(
        edges=edges_from_neighborhoods(neighborhoods),
        neighborhoods=tuple(neighborhoods),
        level=level,
        failed_nodes=tuple(failed),
    )


def fdp_power_edges(
    edges: frozenset[Edge] | set[Edge], truth: frozenset[Edge] | set[Edge]
) -> tuple[float, float]:
    """Edge-level false discovery proportion and power against ``truth``."""
    edges = {(min(i, j), max(i, j)) for i, j in edges}
    truth = {(min(i, j), max(i, j)) for i, j in truth}
    for i, j in truth:
        if i == j:
            raise ValueError("truth contains a self-loop")
    false_pos = len(edges - truth)
    fdp = false_pos / max(len(edges), 1)
    power = len(edges & truth) / max(len(truth), 1)
    return fdp, power
