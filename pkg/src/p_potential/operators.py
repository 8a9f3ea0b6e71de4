"""The discrete p-Laplacian and its associated forms.

For 1 < p < infinity write phi_p(t) = |t|^(p-2) t.  On a weighted graph the
p-Laplacian of f at x is

    lap_p f(x) = (1/mu(x)) * sum_{y ~ x} w(x,y) phi_p(f(y) - f(x)),

the Dirichlet pairing of f against a test function psi is

    sum_{edges {x,y}} w(x,y) phi_p(f(x) - f(y)) (psi(x) - psi(y)),

and the p-energy is the pairing of f with itself, sum w |df|^p.  Summation
by parts makes pairing(f, psi) = sum_x (-lap_p f)(x) psi(x) mu(x) exactly
on a finite graph.

Exponent bookkeeping for the source problem -lap_p u >= u^sigma lives in
ExponentParams: r = p - 1 (degree of the current nonlinearity),
eta = sigma - p + 1 (must be positive), alpha = sigma / r, and the path
Hardy constant c_hardy = 2^(-p) (eta/r)^r.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .graphs import WeightedGraph


@dataclass(frozen=True)
class ExponentParams:
    """Exponent pair (p, sigma) with the derived quantities used throughout.

    Requires p > 1 and sigma > p - 1 so that eta = sigma - p + 1 > 0.
    """

    p: float
    sigma: float

    def __post_init__(self):
        p, sigma = float(self.p), float(self.sigma)
        if not np.isfinite(p) or p <= 1.0:
            raise ValueError(f"p must be finite and > 1, got {p!r}")
        if not np.isfinite(sigma) or sigma <= p - 1.0:
            raise ValueError(f"sigma must be finite and > p - 1 = {p - 1}, got {sigma!r}")
        object.__setattr__(self, "p", p)
        object.__setattr__(self, "sigma", sigma)

    @property
    def r(self) -> float:
        """Degree of the p-current nonlinearity, p - 1."""
        return self.p - 1.0

    @property
    def eta(self) -> float:
        """sigma - p + 1, the exponent surplus over the p-harmonic case."""
        return self.sigma - self.p + 1.0

    @property
    def alpha(self) -> float:
        """sigma / r, the rescaling exponent in the path Hardy argument."""
        return self.sigma / self.r

    @property
    def c_hardy(self) -> float:
        """Path Hardy constant 2^(-p) * (eta/r)^r."""
        return 2.0 ** (-self.p) * (self.eta / self.r) ** self.r

    @property
    def growth_exponent(self) -> float:
        """p*sigma/(p-1) - 1, the power of n in the volume series terms.

        Algebraically equal to r + eta + eta/r.
        """
        return self.p * self.sigma / (self.p - 1.0) - 1.0


class VertexFunction:
    """A real-valued function on the vertices of a fixed host graph."""

    __slots__ = ("graph", "values")

    def __init__(self, graph: WeightedGraph, values):
        values = np.asarray(values, dtype=np.float64)
        if values.shape != (graph.vertex_count,):
            raise ValueError(
                f"values must have shape ({graph.vertex_count},), got {values.shape}")
        if not np.all(np.isfinite(values)):
            raise ValueError("values must all be finite")
        self.graph = graph
        self.values = values
        values.setflags(write=False)

    def __len__(self):
        return self.values.size

    def __getitem__(self, x):
        return self.values[x]

    def __repr__(self):
        return f"VertexFunction(n={len(self)}, sup={np.abs(self.values).max():.6g})"


def as_values(f, graph: WeightedGraph) -> np.ndarray:
    """Coerce a VertexFunction or array-like to a validated value array."""
    if isinstance(f, VertexFunction):
        if f.graph.vertex_count != graph.vertex_count:
            raise ValueError("vertex function belongs to a different-sized graph")
        return f.values
    values = np.asarray(f, dtype=np.float64)
    if values.shape != (graph.vertex_count,):
        raise ValueError(
            f"expected {graph.vertex_count} vertex values, got shape {values.shape}")
    if not np.all(np.isfinite(values)):
        raise ValueError("vertex values must all be finite")
    return values


def save_vertex_function(f: VertexFunction, path) -> None:
    """Write a vertex function as CSV with header vertex,value (full precision)."""
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["vertex", "value"])
        for i, v in enumerate(f.values):
            writer.writerow([i, repr(float(v))])


def load_vertex_function(graph: WeightedGraph, path) -> VertexFunction:
    """Read a CSV written by save_vertex_function onto the given host graph."""
    values = np.full(graph.vertex_count, np.nan)
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != ["vertex", "value"]:
            raise ValueError(f"{path}: expected header vertex,value, got {header!r}")
        for row in reader:
            if len(row) != 2:
                raise ValueError(f"{path}: malformed row {row!r}")
            values[int(row[0])] = float(row[1])
    if np.isnan(values).any():
        missing = int(np.flatnonzero(np.isnan(values))[0])
        raise ValueError(f"{path}: no value for vertex {missing}")
    return VertexFunction(graph, values)


def _check_p(p: float) -> float:
    p = float(p)
    if not np.isfinite(p) or p <= 1.0:
        raise ValueError(f"p must be finite and > 1, got {p!r}")
    return p


def phi_p(t, p: float):
    """phi_p(t) = |t|^(p-2) t, elementwise; odd and (p-1)-homogeneous."""
    p = _check_p(p)
    t = np.asarray(t, dtype=np.float64)
    result = np.sign(t) * np.abs(t) ** (p - 1.0)
    return result if result.ndim else float(result)


def _edge_currents(graph: WeightedGraph, values: np.ndarray, p: float) -> np.ndarray:
    """w_e * phi_p(values[u] - values[v]) over the canonical edge arrays."""
    drops = values[graph.edge_tails] - values[graph.edge_heads]
    return graph.edge_weights * phi_p(drops, p)


def p_laplacian_all(graph: WeightedGraph, f, p: float) -> np.ndarray:
    """lap_p f at every vertex (vectorized over edges)."""
    p = _check_p(p)
    values = as_values(f, graph)
    currents = _edge_currents(graph, values, p)
    n = graph.vertex_count
    # current flows tail -> head when values[tail] > values[head]
    net = (np.bincount(graph.edge_heads, weights=currents, minlength=n)
           - np.bincount(graph.edge_tails, weights=currents, minlength=n))
    return net / graph.vertex_measure


def p_laplacian(graph: WeightedGraph, f, x: int, p: float) -> float:
    """lap_p f(x) = (1/mu(x)) sum_y w(x,y) phi_p(f(y) - f(x))."""
    p = _check_p(p)
    values = as_values(f, graph)
    if not 0 <= x < graph.vertex_count:
        raise ValueError(f"vertex {x} outside 0..{graph.vertex_count - 1}")
    nbrs, weights = graph.neighbors(x)
    return float(np.dot(weights, phi_p(values[nbrs] - values[x], p))
                 / graph.vertex_measure[x])


def dirichlet_pairing(graph: WeightedGraph, f, psi, p: float) -> float:
    """sum over edges of w * phi_p(f(u) - f(v)) * (psi(u) - psi(v))."""
    p = _check_p(p)
    values = as_values(f, graph)
    test = as_values(psi, graph)
    currents = _edge_currents(graph, values, p)
    return float(np.dot(currents, test[graph.edge_tails] - test[graph.edge_heads]))


def p_energy(graph: WeightedGraph, f, p: float) -> float:
    """sum over edges of w * |f(u) - f(v)|^p (always >= 0)."""
    p = _check_p(p)
    values = as_values(f, graph)
    drops = values[graph.edge_tails] - values[graph.edge_heads]
    return float(np.dot(graph.edge_weights, np.abs(drops) ** p))


def defect_tolerance(u_sup: float, p: float, sigma: float | None = None,
                     base: float = 1e-10) -> float:
    """Absolute tolerance for defect-type checks: base scaled by
    max(1, ||u||_inf ^ max(p-1, sigma))."""
    exponent = p - 1.0 if sigma is None else max(p - 1.0, sigma)
    return base * max(1.0, float(u_sup) ** exponent)


def _interior_ids(graph: WeightedGraph, interior) -> np.ndarray:
    if interior is None:
        return np.arange(graph.vertex_count)
    interior = np.asarray(interior)
    if interior.dtype == bool:
        if interior.shape != (graph.vertex_count,):
            raise ValueError("boolean interior mask has wrong length")
        return np.flatnonzero(interior)
    ids = interior.astype(np.int64)
    if ids.size and (ids.min() < 0 or ids.max() >= graph.vertex_count):
        raise ValueError("interior vertex id out of range")
    return ids


def supersolution_defect(graph: WeightedGraph, u, params: ExponentParams,
                         interior=None) -> np.ndarray:
    """Pointwise defect (-lap_p u)(x) - u(x)^sigma on the interior set.

    Nonnegative defect everywhere on the interior means u is a supersolution
    of the source equation there.  Requires u >= 0 on all vertices.
    """
    values = as_values(u, graph)
    if values.min() < 0.0:
        raise ValueError(f"u must be nonnegative everywhere; min is {values.min()}")
    ids = _interior_ids(graph, interior)
    lap = p_laplacian_all(graph, values, params.p)
    return -lap[ids] - values[ids] ** params.sigma


class SuperharmonicVerdict(NamedTuple):
    ok: bool
    witness_vertex: int
    witness_value: float


def is_p_superharmonic(graph: WeightedGraph, u, p: float, interior=None,
                       tol: float | None = None) -> SuperharmonicVerdict:
    """Check -lap_p u >= -tol on the interior set.

    Returns (ok, witness vertex, witness value of -lap_p u); the witness is
    the interior vertex where -lap_p u is smallest.
    """
    values = as_values(u, graph)
    ids = _interior_ids(graph, interior)
    if ids.size == 0:
        raise ValueError("interior set is empty")
    if tol is None:
        tol = defect_tolerance(np.abs(values).max(), p)
    neg_lap = -p_laplacian_all(graph, values, p)[ids]
    worst = int(np.argmin(neg_lap))
    return SuperharmonicVerdict(bool(neg_lap[worst] >= -tol),
                                int(ids[worst]), float(neg_lap[worst]))
