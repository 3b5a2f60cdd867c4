"""Agglomerative clustering of projected 2D image positions.

Average linkage over Euclidean distance.  Average linkage is reducible, so
merge distances never decrease along the merge order; that monotonicity is
asserted on every build.  The tie rule is fixed: among equal-distance merge
candidates, pick the pair with the lexicographically smallest
(min node_id, max node_id).  Leaves get node ids 0..N-1 in input order,
internal nodes N..2N-2 in merge order.

Keyword mining only makes sense for mid-size, spatially tight clusters:
eligible nodes have between 3 and 20 leaf images and a merge distance
within a configurable multiple of the median merge distance.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import NonFinitePoint


@dataclass
class ClusterNode:
    node_id: int
    children: tuple[int, int] | None      # None for leaves
    leaf_record_id: Optional[str]         # set for leaves only
    merge_distance: Optional[float]       # set for internal nodes only
    leaf_count: int
    centroid: tuple[float, float]
    leaf_ids: tuple[str, ...]             # record ids of all leaf descendants
    eligible: bool = False

    @property
    def is_leaf(self) -> bool:
        return self.children is None


@dataclass
class ClusterTree:
    nodes: list[ClusterNode]              # indexed by node_id
    root: int
    merge_order: list[int] = field(default_factory=list)

    @property
    def n_leaves(self) -> int:
        return (len(self.nodes) + 1) // 2

    def leaves(self) -> list[ClusterNode]:
        return [n for n in self.nodes if n.is_leaf]

    def parent_map(self) -> dict[int, int]:
        parents: dict[int, int] = {}
        for node in self.nodes:
            if node.children is not None:
                for child in node.children:
                    parents[child] = node.node_id
        return parents


def build_dendrogram(points: list[tuple[str, tuple[float, float]]]) -> ClusterTree:
    """Average-linkage agglomerative tree over 2D points.

    Maintains the active-pair average distances with the Lance-Williams
    update d(k, i+j) = (n_i d(k,i) + n_j d(k,j)) / (n_i + n_j).
    """
    n = len(points)
    if n < 1:
        raise ValueError("need at least one point")
    for _, (x, y) in points:
        if not (math.isfinite(x) and math.isfinite(y)):
            raise NonFinitePoint(f"point ({x}, {y})")

    coords = np.array([p for _, p in points], dtype=np.float64)
    row_of = {rid: idx for idx, (rid, _) in enumerate(points)}
    nodes = [
        ClusterNode(
            node_id=i,
            children=None,
            leaf_record_id=rid,
            merge_distance=None,
            leaf_count=1,
            centroid=(float(coords[i, 0]), float(coords[i, 1])),
            leaf_ids=(rid,),
        )
        for i, (rid, _) in enumerate(points)
    ]
    if n == 1:
        return ClusterTree(nodes=nodes, root=0, merge_order=[])

    total = 2 * n - 1
    # Full (total x total) distance matrix over node ids; inactive/diagonal
    # entries are +inf so a row-major argmin lands on the lexicographically
    # smallest (i, j) tie automatically.
    dist = np.full((total, total), np.inf)
    diff = coords[:, None, :] - coords[None, :, :]
    base = np.sqrt((diff**2).sum(axis=2))
    iu = np.triu_indices(n, k=1)
    dist[:n, :n][iu] = base[iu]

    sizes = np.zeros(total, dtype=np.int64)
    sizes[:n] = 1
    active = np.zeros(total, dtype=bool)
    active[:n] = True

    merge_order: list[int] = []
    prev_merge = -np.inf
    for new_id in range(n, total):
        flat = int(np.argmin(dist))
        i, j = divmod(flat, total)
        d = float(dist[i, j])
        assert math.isfinite(d)
        assert d >= prev_merge - 1e-9, "average-linkage merges must be non-decreasing"
        prev_merge = max(prev_merge, d)

        ni, nj = int(sizes[i]), int(sizes[j])
        others = np.nonzero(active)[0]
        others = others[(others != i) & (others != j)]
        if others.size:
            dki = dist[np.minimum(others, i), np.maximum(others, i)]
            dkj = dist[np.minimum(others, j), np.maximum(others, j)]
            # new_id is larger than every active id, so (k, new_id) is upper-triangular
            dist[others, new_id] = (ni * dki + nj * dkj) / (ni + nj)

        active[i] = active[j] = False
        active[new_id] = True
        dist[i, :] = np.inf
        dist[:, i] = np.inf
        dist[j, :] = np.inf
        dist[:, j] = np.inf
        sizes[new_id] = ni + nj

        left = nodes[i]
        right = nodes[j]
        leaf_ids = left.leaf_ids + right.leaf_ids
        centroid = coords[[row_of[rid] for rid in leaf_ids]].mean(axis=0)
        nodes.append(
            ClusterNode(
                node_id=new_id,
                children=(i, j),
                leaf_record_id=None,
                merge_distance=d,
                leaf_count=ni + nj,
                centroid=(float(centroid[0]), float(centroid[1])),
                leaf_ids=leaf_ids,
            )
        )
        merge_order.append(new_id)

    return ClusterTree(nodes=nodes, root=total - 1, merge_order=merge_order)


def eligible_clusters(
    tree: ClusterTree,
    min_leaves: int = 3,
    max_leaves: int = 20,
    dist_factor: float = 2.0,
) -> list[ClusterNode]:
    """Internal nodes suitable for keyword mining, in merge order.

    A node qualifies when its leaf count lies in [min_leaves, max_leaves]
    and it was not merged from relatively distant sub-clusters, i.e. its
    merge distance is at most dist_factor times the median merge distance.
    """
    merges = [tree.nodes[i].merge_distance for i in tree.merge_order]
    if not merges:
        return []
    bound = dist_factor * float(np.median(merges))
    out = []
    for node_id in tree.merge_order:
        node = tree.nodes[node_id]
        if min_leaves <= node.leaf_count <= max_leaves and node.merge_distance <= bound:
            out.append(node)
    return out


def mark_eligibility(tree: ClusterTree, **kwargs) -> list[ClusterNode]:
    """Set the eligible flag for the given thresholds and return the list."""
    chosen = eligible_clusters(tree, **kwargs)
    chosen_ids = {n.node_id for n in chosen}
    for node in tree.nodes:
        node.eligible = node.node_id in chosen_ids
    return chosen
