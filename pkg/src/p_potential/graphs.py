"""Weighted graphs, rooted ball structure, and model-family generators.

A graph here is finite, connected, undirected, simple, with strictly
positive edge weights (conductances).  The vertex measure is the weighted
degree mu(x) = sum of incident edge weights.  All radial quantities are
measured from a designated root by hop distance: B_R is the closed ball,
S_k the sphere, W_n the measure of B_n, b_k the total conductance of edges
leaving B_k, and M_N the prefix sums of b_k.

Generators build finite truncations of standard infinite families
(lattice boxes, rooted regular trees, layered radial models).  Quantities
indexed by a radius R are only meaningful for R <= R_max, the largest
radius whose ball still has a nonempty exterior in the truncation.
"""

from __future__ import annotations

import itertools
import json
import os

import numpy as np
import scipy.sparse as sp
from scipy.sparse import csgraph

from .errors import GraphFormatError, GraphValidationError, ResourceLimitError

MAX_VERTICES_ENV = "P_POTENTIAL_MAX_VERTICES"
DEFAULT_MAX_VERTICES = 200_000


def max_vertex_budget() -> int:
    """Vertex budget for generators, read from the environment at call time."""
    raw = os.environ.get(MAX_VERTICES_ENV)
    if raw is None:
        return DEFAULT_MAX_VERTICES
    try:
        value = int(raw)
    except ValueError as exc:
        raise ResourceLimitError(
            f"{MAX_VERTICES_ENV} must be an integer, got {raw!r}") from exc
    if value <= 0:
        raise ResourceLimitError(f"{MAX_VERTICES_ENV} must be positive, got {value}")
    return value


class WeightedGraph:
    """Immutable connected weighted graph with dense vertex ids 0..n-1.

    Edges are stored once in canonical form (u < v, sorted lexicographically).
    The constructor validates structure and precomputes the symmetric CSR
    adjacency and the vertex measure.
    """

    __slots__ = ("vertex_count", "root", "edge_tails", "edge_heads",
                 "edge_weights", "adjacency", "vertex_measure")

    def __init__(self, vertex_count: int, edges, root: int = 0):
        if not isinstance(vertex_count, (int, np.integer)) or vertex_count < 2:
            raise GraphValidationError(
                f"vertex_count must be an integer >= 2, got {vertex_count!r}")
        vertex_count = int(vertex_count)
        if not isinstance(root, (int, np.integer)) or not 0 <= root < vertex_count:
            raise GraphValidationError(f"root {root!r} outside 0..{vertex_count - 1}")

        edge_list = list(edges)
        if not edge_list:
            raise GraphValidationError("graph has no edges")
        tails = np.empty(len(edge_list), dtype=np.int64)
        heads = np.empty(len(edge_list), dtype=np.int64)
        weights = np.empty(len(edge_list), dtype=np.float64)
        for i, edge in enumerate(edge_list):
            try:
                u, v, w = edge
            except (TypeError, ValueError) as exc:
                raise GraphValidationError(f"edge {i}: expected (u, v, weight)") from exc
            u, v, w = int(u), int(v), float(w)
            if not (0 <= u < vertex_count and 0 <= v < vertex_count):
                raise GraphValidationError(
                    f"edge {i}: endpoint outside 0..{vertex_count - 1}: ({u}, {v})")
            if u == v:
                raise GraphValidationError(f"edge {i}: self loop at {u}")
            if not np.isfinite(w) or w <= 0.0:
                raise GraphValidationError(f"edge {i}: weight must be finite and > 0, got {w}")
            if u > v:
                u, v = v, u
            tails[i], heads[i], weights[i] = u, v, w

        order = np.lexsort((heads, tails))
        tails, heads, weights = tails[order], heads[order], weights[order]
        dup = (tails[1:] == tails[:-1]) & (heads[1:] == heads[:-1])
        if dup.any():
            j = int(np.flatnonzero(dup)[0])
            raise GraphValidationError(
                f"duplicate edge ({tails[j]}, {heads[j]})")

        both_u = np.concatenate([tails, heads])
        both_v = np.concatenate([heads, tails])
        both_w = np.concatenate([weights, weights])
        adjacency = sp.csr_matrix((both_w, (both_u, both_v)),
                                  shape=(vertex_count, vertex_count))

        n_comp = csgraph.connected_components(adjacency, directed=False,
                                              return_labels=False)
        if n_comp != 1:
            raise GraphValidationError(f"graph is disconnected ({n_comp} components)")

        object.__setattr__(self, "vertex_count", vertex_count)
        object.__setattr__(self, "root", int(root))
        object.__setattr__(self, "edge_tails", tails)
        object.__setattr__(self, "edge_heads", heads)
        object.__setattr__(self, "edge_weights", weights)
        object.__setattr__(self, "adjacency", adjacency)
        object.__setattr__(self, "vertex_measure",
                           np.asarray(adjacency.sum(axis=1)).ravel())
        for arr in (tails, heads, weights):
            arr.setflags(write=False)

    def __setattr__(self, name, value):
        raise AttributeError("WeightedGraph is immutable")

    @property
    def edge_count(self) -> int:
        return self.edge_tails.size

    @property
    def edges(self):
        """Canonical edge list as (u, v, weight) tuples with u < v."""
        return [(int(u), int(v), float(w)) for u, v, w
                in zip(self.edge_tails, self.edge_heads, self.edge_weights)]

    def neighbors(self, x: int):
        """Neighbor ids and the corresponding edge weights of vertex x."""
        row = self.adjacency
        start, stop = row.indptr[x], row.indptr[x + 1]
        return row.indices[start:stop], row.data[start:stop]

    def __eq__(self, other):
        if not isinstance(other, WeightedGraph):
            return NotImplemented
        return (self.vertex_count == other.vertex_count
                and self.root == other.root
                and np.array_equal(self.edge_tails, other.edge_tails)
                and np.array_equal(self.edge_heads, other.edge_heads)
                and np.array_equal(self.edge_weights, other.edge_weights))

    def __hash__(self):
        return hash((self.vertex_count, self.root, self.edge_tails.tobytes(),
                     self.edge_heads.tobytes(), self.edge_weights.tobytes()))

    def __repr__(self):
        return (f"WeightedGraph(vertices={self.vertex_count}, "
                f"edges={self.edge_count}, root={self.root})")


class BallProfile:
    """Radial structure of a rooted graph.

    Attributes
    ----------
    radius_of : int array, hop distance from the root per vertex.
    eccentricity : largest radius present in the host.
    R_max : largest radius whose ball has a nonempty exterior
        (= eccentricity - 1).
    W : float array of length eccentricity + 1; W[n] is the vertex measure
        of the closed ball B_n.
    b : float array of length eccentricity; b[k] is the total conductance
        of edges from B_k to its complement.
    M : float array, prefix sums of b (cut-volume sums M_N).
    """

    __slots__ = ("graph", "radius_of", "eccentricity", "R_max", "W", "b", "M")

    def __init__(self, graph: WeightedGraph):
        dist = csgraph.dijkstra(graph.adjacency, directed=False,
                                unweighted=True, indices=graph.root)
        radius_of = dist.astype(np.int64)
        ecc = int(radius_of.max())

        ru = radius_of[graph.edge_tails]
        rv = radius_of[graph.edge_heads]
        if np.abs(ru - rv).max() > 1:
            # cannot happen for a hop metric; guards against internal misuse
            raise GraphValidationError("adjacent vertices with radii differing by > 1")

        sphere_measure = np.bincount(radius_of, weights=graph.vertex_measure,
                                     minlength=ecc + 1)
        W = np.cumsum(sphere_measure)

        crossing = ru != rv
        cut_level = np.minimum(ru, rv)[crossing]
        b = np.bincount(cut_level, weights=graph.edge_weights[crossing],
                        minlength=max(ecc, 1))[:ecc]
        M = np.cumsum(b)

        self.graph = graph
        self.radius_of = radius_of
        self.eccentricity = ecc
        self.R_max = ecc - 1
        self.W = W
        self.b = b
        self.M = M
        radius_of.setflags(write=False)
        W.setflags(write=False)
        b.setflags(write=False)
        M.setflags(write=False)

    def ball_mask(self, R: int) -> np.ndarray:
        """Boolean mask of the closed ball B_R."""
        self._check_radius(R)
        return self.radius_of <= R

    def sphere(self, k: int) -> np.ndarray:
        """Vertex ids at hop distance exactly k, ascending."""
        if not 0 <= k <= self.eccentricity:
            raise ValueError(f"sphere index {k} outside 0..{self.eccentricity}")
        return np.flatnonzero(self.radius_of == k)

    def _check_radius(self, R: int):
        if not isinstance(R, (int, np.integer)) or R < 0:
            raise ValueError(f"radius must be a nonnegative integer, got {R!r}")
        if R > self.R_max:
            raise ValueError(f"radius {R} exceeds R_max = {self.R_max}")

    def __repr__(self):
        return (f"BallProfile(vertices={self.graph.vertex_count}, "
                f"eccentricity={self.eccentricity}, R_max={self.R_max})")


def ball_profile(graph: WeightedGraph) -> BallProfile:
    """Compute the radial profile (radii, W, b, M, R_max) of a rooted graph."""
    return BallProfile(graph)


def _check_budget(requested: int, what: str):
    budget = max_vertex_budget()
    if requested > budget:
        raise ResourceLimitError(
            f"{what} needs {requested} vertices, over the budget of {budget} "
            f"(set {MAX_VERTICES_ENV} to raise it)")


def build_lattice(dimension: int, half_side: int) -> WeightedGraph:
    """Integer lattice box [-half_side, half_side]^dimension, unit weights.

    The root is the origin (id 0).  Vertex ids are assigned by
    (hop radius, lexicographic coordinates), so ids are deterministic and
    radial structure is id-ordered.  Balls B_n agree with the infinite
    lattice for n <= half_side - 1 in every dimension.
    """
    if dimension not in (1, 2, 3, 4):
        raise ValueError(f"dimension must be in 1..4, got {dimension!r}")
    if not isinstance(half_side, (int, np.integer)) or half_side < 1:
        raise ValueError(f"half_side must be a positive integer, got {half_side!r}")
    count = (2 * half_side + 1) ** dimension
    _check_budget(count, f"lattice({dimension}, {half_side})")

    coords = sorted(itertools.product(range(-half_side, half_side + 1),
                                      repeat=dimension),
                    key=lambda c: (sum(abs(x) for x in c), c))
    index = {c: i for i, c in enumerate(coords)}
    edges = []
    for c, i in index.items():
        for axis in range(dimension):
            shifted = list(c)
            shifted[axis] += 1
            if shifted[axis] <= half_side:
                edges.append((i, index[tuple(shifted)], 1.0))
    return WeightedGraph(count, edges, root=0)


def build_tree(branching: int, depth: int) -> WeightedGraph:
    """Rooted tree where every vertex above the leaf level has `branching`
    children; unit weights; ids in breadth-first order (root 0)."""
    if not isinstance(branching, (int, np.integer)) or branching < 2:
        raise ValueError(f"branching must be an integer >= 2, got {branching!r}")
    if not isinstance(depth, (int, np.integer)) or depth < 1:
        raise ValueError(f"depth must be a positive integer, got {depth!r}")
    count = (branching ** (depth + 1) - 1) // (branching - 1)
    _check_budget(count, f"tree({branching}, {depth})")

    edges = []
    level_start, level_size = 0, 1
    next_id = 1
    for _ in range(depth):
        for parent in range(level_start, level_start + level_size):
            for _ in range(branching):
                edges.append((parent, next_id, 1.0))
                next_id += 1
        level_start += level_size
        level_size *= branching
    return WeightedGraph(count, edges, root=0)


def build_radial_model(sphere_sizes, edge_weight_profile) -> WeightedGraph:
    """Layered graph with prescribed sphere sizes and per-layer edge weights.

    sphere_sizes[k] vertices sit at radius k (sphere_sizes[0] must be 1, the
    root); every radius-(k+1) vertex is joined to exactly one radius-k parent
    by round-robin matching, with weight edge_weight_profile[k].  Sphere
    sizes must be nondecreasing so the matching covers each child once.
    """
    sizes = [int(s) for s in sphere_sizes]
    weights = [float(w) for w in edge_weight_profile]
    if len(sizes) < 2:
        raise ValueError("need at least two spheres")
    if len(weights) != len(sizes) - 1:
        raise ValueError(
            f"need one weight per consecutive-sphere layer: "
            f"{len(sizes)} spheres require {len(sizes) - 1} weights, got {len(weights)}")
    if sizes[0] != 1:
        raise ValueError(f"sphere_sizes[0] must be 1 (the root), got {sizes[0]}")
    for k, s in enumerate(sizes):
        if s < 1:
            raise ValueError(f"sphere_sizes[{k}] must be positive, got {s}")
    for k in range(len(sizes) - 1):
        if sizes[k + 1] < sizes[k]:
            raise ValueError(
                f"sphere_sizes must be nondecreasing; shrinks at layer {k}: "
                f"{sizes[k]} -> {sizes[k + 1]}")
    for k, w in enumerate(weights):
        if not np.isfinite(w) or w <= 0.0:
            raise ValueError(f"edge_weight_profile[{k}] must be finite and > 0, got {w}")
    count = sum(sizes)
    _check_budget(count, "radial model")

    starts = np.concatenate([[0], np.cumsum(sizes)])
    edges = []
    for k, w in enumerate(weights):
        parent_base, child_base = starts[k], starts[k + 1]
        for j in range(sizes[k + 1]):
            edges.append((parent_base + j % sizes[k], child_base + j, w))
    return WeightedGraph(count, edges, root=0)


def save_graph(graph: WeightedGraph, path) -> None:
    """Write a graph as JSON: {"vertex_count", "root", "edges": [[u, v, w]...]}
    with the canonical (u < v, sorted) edge order and full float precision."""
    payload = {
        "vertex_count": graph.vertex_count,
        "root": graph.root,
        "edges": [[int(u), int(v), float(w)] for u, v, w
                  in zip(graph.edge_tails, graph.edge_heads, graph.edge_weights)],
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, sort_keys=True)
        fh.write("\n")


def load_graph(path) -> WeightedGraph:
    """Read a graph written by save_graph, validating structure.

    Raises GraphFormatError naming the offending field on malformed input,
    GraphValidationError on structural problems.
    """
    with open(path, "r", encoding="utf-8") as fh:
        try:
            raw = json.load(fh)
        except json.JSONDecodeError as exc:
            raise GraphFormatError(f"{path}: not valid JSON "
                                   f"(line {exc.lineno}, column {exc.colno})") from exc
    if not isinstance(raw, dict):
        raise GraphFormatError(f"{path}: top level must be an object")
    for key in ("vertex_count", "root", "edges"):
        if key not in raw:
            raise GraphFormatError(f"{path}: missing key {key!r}")
    if not isinstance(raw["vertex_count"], int):
        raise GraphFormatError(f"{path}: vertex_count must be an integer")
    if not isinstance(raw["root"], int):
        raise GraphFormatError(f"{path}: root must be an integer")
    if not isinstance(raw["edges"], list):
        raise GraphFormatError(f"{path}: edges must be a list")
    edges = []
    for i, item in enumerate(raw["edges"]):
        if (not isinstance(item, list) or len(item) != 3
                or not isinstance(item[0], int) or not isinstance(item[1], int)
                or not isinstance(item[2], (int, float)) or isinstance(item[2], bool)):
            raise GraphFormatError(
                f"{path}: edges[{i}] must be [int, int, number], got {item!r}")
        edges.append((item[0], item[1], float(item[2])))
    return WeightedGraph(raw["vertex_count"], edges, root=raw["root"])
