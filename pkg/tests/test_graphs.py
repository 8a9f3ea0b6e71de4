"""Graph construction, radial profiles, generators, and (de)serialization."""

import numpy as np
import pytest

from p_potential import (
    BallProfile,
    GraphFormatError,
    GraphValidationError,
    ResourceLimitError,
    WeightedGraph,
    ball_profile,
    build_lattice,
    build_radial_model,
    build_tree,
    load_graph,
    save_graph,
)


# ---------------------------------------------------------------------------
# constructor and validation


def test_edges_are_canonicalized():
    g = WeightedGraph(3, [(2, 1, 0.5), (1, 0, 2.0)])
    assert g.edges == [(0, 1, 2.0), (1, 2, 0.5)]
    assert g.edge_count == 2


def test_vertex_measure_is_weighted_degree():
    g = WeightedGraph(3, [(0, 1, 2.0), (1, 2, 0.5)])
    assert g.vertex_measure.tolist() == [2.0, 2.5, 0.5]


def test_neighbors_returns_ids_and_weights():
    g = WeightedGraph(4, [(0, 1, 1.0), (0, 2, 3.0), (2, 3, 2.0)])
    ids, weights = g.neighbors(0)
    assert ids.tolist() == [1, 2]
    assert weights.tolist() == [1.0, 3.0]
    ids, weights = g.neighbors(3)
    assert ids.tolist() == [2]
    assert weights.tolist() == [2.0]


def test_graph_is_immutable():
    g = WeightedGraph(2, [(0, 1, 1.0)])
    with pytest.raises(AttributeError):
        g.root = 1
    with pytest.raises(ValueError):
        g.edge_weights[0] = 2.0


@pytest.mark.parametrize("bad", [
    dict(vertex_count=1, edges=[(0, 0, 1.0)]),
    dict(vertex_count=2, edges=[]),
    dict(vertex_count=2, edges=[(0, 0, 1.0)]),          # self loop
    dict(vertex_count=2, edges=[(0, 1, 0.0)]),          # zero weight
    dict(vertex_count=2, edges=[(0, 1, -1.0)]),
    dict(vertex_count=2, edges=[(0, 1, np.inf)]),
    dict(vertex_count=2, edges=[(0, 1, np.nan)]),
    dict(vertex_count=2, edges=[(0, 2, 1.0)]),          # endpoint range
    dict(vertex_count=2, edges=[(0, 1, 1.0), (1, 0, 2.0)]),  # duplicate
    dict(vertex_count=4, edges=[(0, 1, 1.0), (2, 3, 1.0)]),  # disconnected
    dict(vertex_count=2, edges=[(0, 1, 1.0)], root=5),
])
def test_constructor_rejects_bad_input(bad):
    with pytest.raises(GraphValidationError):
        WeightedGraph(bad["vertex_count"], bad["edges"], root=bad.get("root", 0))


def test_validation_errors_are_value_errors():
    # callers that only know ValueError still catch format/validation issues
    assert issubclass(GraphValidationError, ValueError)
    assert issubclass(GraphFormatError, ValueError)


# ---------------------------------------------------------------------------
# generators against hand counts


def test_path_lattice_profile():
    # seven-vertex path: the root has measure 2, each sphere adds two
    # vertices of measure 2 except the endpoints of measure 1
    g = build_lattice(1, 3)
    assert g.vertex_count == 7
    assert g.edge_count == 6
    prof = ball_profile(g)
    assert prof.eccentricity == 3
    assert prof.R_max == 2
    assert prof.W.tolist() == [2.0, 6.0, 10.0, 12.0]
    assert prof.b.tolist() == [2.0, 2.0, 2.0]
    assert prof.M.tolist() == [2.0, 4.0, 6.0]


def test_square_lattice_counts():
    g = build_lattice(2, 1)
    assert g.vertex_count == 9
    assert g.edge_count == 12
    prof = ball_profile(g)
    assert prof.W.tolist() == [4.0, 16.0, 24.0]
    assert prof.b.tolist() == [4.0, 8.0]
    assert prof.M.tolist() == [4.0, 12.0]


def test_cubic_lattice_counts():
    g = build_lattice(3, 1)
    assert g.vertex_count == 27
    assert g.edge_count == 54
    assert ball_profile(g).W[0] == 6.0


def test_lattice_ids_are_radial():
    g = build_lattice(2, 3)
    rad = ball_profile(g).radius_of
    assert rad[0] == 0
    assert np.all(np.diff(rad) >= 0)  # ids sorted by radius first


def test_binary_tree_profile():
    g = build_tree(2, 3)
    assert g.vertex_count == 15
    assert g.edge_count == 14
    prof = ball_profile(g)
    assert prof.W.tolist() == [2.0, 8.0, 20.0, 28.0]
    assert prof.b.tolist() == [2.0, 4.0, 8.0]
    assert prof.M.tolist() == [2.0, 6.0, 14.0]
    # breadth-first ids: sphere k is a contiguous id block of size 2^k
    for k in range(4):
        assert prof.sphere(k).tolist() == list(range(2 ** k - 1, 2 ** (k + 1) - 1))


def test_ternary_tree_count():
    assert build_tree(3, 2).vertex_count == 13


def test_radial_model_layout():
    g = build_radial_model([1, 2, 2], [1.0, 0.5])
    assert g.vertex_count == 5
    assert g.edges == [(0, 1, 1.0), (0, 2, 1.0), (1, 3, 0.5), (2, 4, 0.5)]
    prof = ball_profile(g)
    assert prof.radius_of.tolist() == [0, 1, 1, 2, 2]
    assert prof.b.tolist() == [2.0, 1.0]
    assert prof.W.tolist() == [2.0, 5.0, 6.0]


@pytest.mark.parametrize("sizes, weights", [
    ([2, 2], [1.0]),          # first sphere must be the root alone
    ([1, 2, 1], [1.0, 1.0]),  # shrinking spheres
    ([1, 2], [1.0, 1.0]),     # weight count mismatch
    ([1, 2], [-1.0]),
    ([1], []),
])
def test_radial_model_rejects_bad_shape(sizes, weights):
    with pytest.raises(ValueError):
        build_radial_model(sizes, weights)


@pytest.mark.parametrize("factory, args", [
    (build_lattice, (5, 2)),
    (build_lattice, (2, 0)),
    (build_tree, (1, 3)),
    (build_tree, (2, 0)),
])
def test_generator_parameter_validation(factory, args):
    with pytest.raises(ValueError):
        factory(*args)


def test_vertex_budget_env(monkeypatch):
    monkeypatch.setenv("P_POTENTIAL_MAX_VERTICES", "100")
    with pytest.raises(ResourceLimitError):
        build_lattice(2, 10)
    build_lattice(1, 40)  # 81 vertices still fits
    monkeypatch.setenv("P_POTENTIAL_MAX_VERTICES", "banana")
    with pytest.raises(ResourceLimitError):
        build_lattice(1, 2)
    monkeypatch.setenv("P_POTENTIAL_MAX_VERTICES", "-3")
    with pytest.raises(ResourceLimitError):
        build_lattice(1, 2)


# ---------------------------------------------------------------------------
# profiles


def test_ball_mask_and_radius_validation():
    prof = ball_profile(build_lattice(1, 3))
    assert prof.ball_mask(0).sum() == 1
    assert prof.ball_mask(2).sum() == 5
    with pytest.raises(ValueError):
        prof.ball_mask(3)  # R_max is 2: B_3 has empty exterior
    with pytest.raises(ValueError):
        prof.ball_mask(-1)
    with pytest.raises(ValueError):
        prof.sphere(4)


def test_profile_arrays_read_only():
    prof = ball_profile(build_tree(2, 2))
    for arr in (prof.W, prof.b, prof.M, prof.radius_of):
        with pytest.raises(ValueError):
            arr[0] = 0


def test_profile_type():
    assert isinstance(ball_profile(build_tree(2, 2)), BallProfile)


# ---------------------------------------------------------------------------
# round trips


def test_save_load_round_trip(tmp_path):
    g = build_radial_model([1, 3, 3, 3], [1 / 3, 1e-7, 123.456])
    path = tmp_path / "g.json"
    save_graph(g, path)
    assert load_graph(path) == g  # exact floats, canonical edge order


def test_load_graph_format_errors(tmp_path):
    cases = {
        "not-json.json": "{oops",
        "top-level.json": "[1, 2]",
        "missing-key.json": '{"vertex_count": 2, "root": 0}',
        "bad-count.json": '{"vertex_count": "2", "root": 0, "edges": [[0, 1, 1.0]]}',
        "bad-root.json": '{"vertex_count": 2, "root": null, "edges": [[0, 1, 1.0]]}',
        "bad-edges.json": '{"vertex_count": 2, "root": 0, "edges": 7}',
        "bad-edge-row.json": '{"vertex_count": 2, "root": 0, "edges": [[0, 1]]}',
        "bool-weight.json": '{"vertex_count": 2, "root": 0, "edges": [[0, 1, true]]}',
        "float-endpoint.json": '{"vertex_count": 2, "root": 0, "edges": [[0.5, 1, 1.0]]}',
    }
    for name, text in cases.items():
        path = tmp_path / name
        path.write_text(text)
        with pytest.raises(GraphFormatError):
            load_graph(path)


def test_load_graph_structural_errors(tmp_path):
    path = tmp_path / "dup.json"
    path.write_text('{"vertex_count": 2, "root": 0,'
                    ' "edges": [[0, 1, 1.0], [1, 0, 1.0]]}')
    with pytest.raises(GraphValidationError):
        load_graph(path)
