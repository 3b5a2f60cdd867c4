"""Keyword placement, overlap jitter, representatives and zoom levels.

A keyword sits at the count-weighted average of the positions of the images
whose prompts contain it, so it always lies in their convex hull.  Exactly
coincident placements are separated by a small seeded shift.  Semantic-zoom
levels come from halving thresholds over merge distances rather than tree
depth, which behaves sanely on unbalanced dendrograms.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .clustering import ClusterNode, ClusterTree
from .errors import NoOccurrences
from .keywords import Term

DEFAULT_LEVELS = 4
COINCIDENCE_EPS = 1e-9


@dataclass(frozen=True)
class KeywordPlacement:
    term: Term
    position: tuple[float, float]
    level: int
    anchor_cluster: int
    image_ids: tuple[str, ...] = ()


@dataclass(frozen=True)
class LodAssignment:
    levels: int
    node_levels: dict[int, int]          # tree node id -> level
    representatives: dict[int, str]      # eligible cluster id -> record id


def keyword_position(term: Term, images: list[tuple[tuple[float, float], int]]) -> tuple[float, float]:
    """Count-weighted average position of the images containing the term."""
    weighted = [(p, n) for p, n in images if n >= 1]
    if not weighted:
        raise NoOccurrences(f"term {term.text!r} occurs in no image prompt")
    total = sum(n for _, n in weighted)
    x = sum(n * p[0] for p, n in weighted) / total
    y = sum(n * p[1] for p, n in weighted) / total
    return (x, y)


def jitter_collisions(
    placements: list[KeywordPlacement], radius: float, rng_seed: int
) -> list[KeywordPlacement]:
    """Separate exactly coincident placements with a seeded in-disc shift.

    Placements whose positions coincide within 1e-9 form a group; the first
    of each group (input order) stays put, the rest move by a uniform draw
    from a disc of the given radius.  Everything else passes through.
    """
    if radius <= 0:
        raise ValueError(f"radius must be > 0, got {radius}")
    n = len(placements)
    group = list(range(n))

    def find(i):
        while group[i] != i:
            group[i] = group[group[i]]
            i = group[i]
        return i

    for i in range(n):
        for j in range(i + 1, n):
            pi, pj = placements[i].position, placements[j].position
            if math.hypot(pi[0] - pj[0], pi[1] - pj[1]) <= COINCIDENCE_EPS:
                group[max(find(i), find(j))] = min(find(i), find(j))

    rng = np.random.default_rng(rng_seed)
    seen_roots: set[int] = set()
    out = []
    for i, placement in enumerate(placements):
        root = find(i)
        if root not in seen_roots:
            seen_roots.add(root)
            out.append(placement)
            continue
        angle = rng.uniform(0.0, 2.0 * math.pi)
        r = radius * math.sqrt(rng.uniform(0.0, 1.0))
        x, y = placement.position
        out.append(replace(placement, position=(x + r * math.cos(angle), y + r * math.sin(angle))))
    return out


def representative_image(
    cluster: ClusterNode, positions: dict[str, tuple[float, float]]
) -> str:
    """Leaf closest to the cluster centroid; ties go to the lowest id."""
    cx, cy = cluster.centroid
    best = min(
        cluster.leaf_ids,
        key=lambda rid: (
            (positions[rid][0] - cx) ** 2 + (positions[rid][1] - cy) ** 2,
            rid,
        ),
    )
    return best


def assign_lod(
    tree: ClusterTree,
    levels: int = DEFAULT_LEVELS,
    eligible: list[ClusterNode] | None = None,
    positions: dict[str, tuple[float, float]] | None = None,
) -> LodAssignment:
    """Zoom levels via merge-distance halving thresholds.

    tau_l = d_max / 2^l.  An internal node lands at the smallest level
    where its parent's merge distance exceeds the threshold but its own
    does not; the root is level 0, leaves take the deepest level, and
    nodes matching no threshold window clamp to the deepest level.
    Levels are monotone non-decreasing from root to leaves.
    """
    if levels < 1:
        raise ValueError(f"levels must be >= 1, got {levels}")
    merges = [tree.nodes[i].merge_distance for i in tree.merge_order]
    d_max = max(merges) if merges else 0.0
    taus = [d_max / 2.0**level for level in range(levels)]
    parents = tree.parent_map()

    node_levels: dict[int, int] = {}
    # reversed merge order visits parents before children; equal parent and
    # child merge distances leave no threshold window, so clamp to the
    # parent's level to keep levels monotone along every path
    for node_id in reversed(tree.merge_order):
        node = tree.nodes[node_id]
        parent_id = parents.get(node.node_id)
        parent_merge = math.inf if parent_id is None else tree.nodes[parent_id].merge_distance
        level = levels - 1
        for candidate in range(levels):
            if parent_merge > taus[candidate] and node.merge_distance <= taus[candidate]:
                level = candidate
                break
        if parent_id is not None:
            level = max(level, node_levels[parent_id])
        node_levels[node.node_id] = level
    for node in tree.nodes:
        if node.is_leaf:
            node_levels[node.node_id] = levels - 1

    representatives: dict[int, str] = {}
    if eligible and positions is not None:
        for node in eligible:
            representatives[node.node_id] = representative_image(node, positions)

    return LodAssignment(levels=levels, node_levels=node_levels, representatives=representatives)


def point_levels(
    lod: LodAssignment, record_ids: list[str]
) -> dict[str, int]:
    """Per-record visibility level: representatives inherit their cluster's
    level (deepest wins if several), everything else appears at full detail."""
    rep_levels: dict[str, int] = {}
    for cluster_id, rid in lod.representatives.items():
        lvl = lod.node_levels.get(cluster_id, lod.levels - 1)
        rep_levels[rid] = min(lvl, rep_levels.get(rid, lod.levels - 1))
    return {rid: rep_levels.get(rid, lod.levels - 1) for rid in record_ids}


def bounding_box_diagonal(positions: list[tuple[float, float]]) -> float:
    if not positions:
        return 0.0
    xs = [p[0] for p in positions]
    ys = [p[1] for p in positions]
    return math.hypot(max(xs) - min(xs), max(ys) - min(ys))
