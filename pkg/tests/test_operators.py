"""Exponent bookkeeping, the nonlinearity, and the discrete operators."""

import numpy as np
import pytest

from p_potential import (
    ExponentParams,
    VertexFunction,
    as_values,
    build_lattice,
    build_tree,
    ball_profile,
    defect_tolerance,
    dirichlet_pairing,
    is_p_superharmonic,
    load_vertex_function,
    p_energy,
    p_laplacian,
    p_laplacian_all,
    phi_p,
    save_vertex_function,
    solve_green,
    supersolution_defect,
    WeightedGraph,
)


# ---------------------------------------------------------------------------
# exponent parameters


def test_exponent_params_p2_sigma3():
    params = ExponentParams(p=2, sigma=3)
    assert params.r == 1.0
    assert params.eta == 2.0
    assert params.alpha == 3.0
    assert params.c_hardy == 0.5
    assert params.growth_exponent == 5.0


def test_exponent_params_p3_sigma4():
    params = ExponentParams(p=3, sigma=4)
    assert params.r == 2.0
    assert params.eta == 2.0
    assert params.alpha == 2.0
    assert params.c_hardy == 0.125
    assert params.growth_exponent == 5.0


def test_exponent_params_fractional():
    params = ExponentParams(p=1.5, sigma=3)
    assert params.r == 0.5
    assert params.eta == 2.5
    assert params.alpha == 6.0
    assert params.c_hardy == pytest.approx(np.sqrt(5.0 / 8.0), rel=1e-15)
    assert params.growth_exponent == pytest.approx(8.0, rel=1e-15)


def test_growth_exponent_identity_random():
    rng = np.random.default_rng(7)
    for _ in range(1000):
        p = float(rng.uniform(1.01, 5.0))
        sigma = float(rng.uniform(p - 1.0 + 1e-6, 8.0))
        params = ExponentParams(p=p, sigma=sigma)
        lhs = params.growth_exponent
        rhs = params.r + params.eta + params.eta / params.r
        assert abs(lhs - rhs) <= 1e-12 * max(1.0, abs(lhs))


@pytest.mark.parametrize("p, sigma", [(1.0, 2.0), (0.5, 2.0), (2.0, 1.0),
                                      (2.0, 0.99), (np.nan, 2.0), (2.0, np.inf)])
def test_exponent_params_validation(p, sigma):
    with pytest.raises(ValueError):
        ExponentParams(p=p, sigma=sigma)


# ---------------------------------------------------------------------------
# phi_p


def test_phi_p_values():
    assert phi_p(0.5, 1.5) == pytest.approx(np.sqrt(0.5), rel=1e-15)
    assert phi_p(-2.0, 3.0) == -4.0
    assert phi_p(0.0, 1.5) == 0.0
    assert phi_p(1.0, 2.7) == 1.0


def test_phi_p_is_odd_and_homogeneous():
    rng = np.random.default_rng(0)
    t = rng.normal(size=50)
    for p in (1.5, 2.0, 3.0, 4.2):
        np.testing.assert_allclose(phi_p(-t, p), -phi_p(t, p), atol=1e-14)
        np.testing.assert_allclose(phi_p(2.0 * t, p),
                                   2.0 ** (p - 1.0) * phi_p(t, p), rtol=1e-13)


def test_phi_p_rejects_p_at_most_one():
    with pytest.raises(ValueError):
        phi_p(1.0, 1.0)
    with pytest.raises(ValueError):
        phi_p(1.0, 0.5)


# ---------------------------------------------------------------------------
# vertex functions


def test_vertex_function_validation():
    g = WeightedGraph(2, [(0, 1, 1.0)])
    with pytest.raises(ValueError):
        VertexFunction(g, [1.0])
    with pytest.raises(ValueError):
        VertexFunction(g, [1.0, np.nan])
    f = VertexFunction(g, [1.0, 2.0])
    with pytest.raises(ValueError):
        f.values[0] = 3.0


def test_as_values_coercion():
    g = WeightedGraph(3, [(0, 1, 1.0), (1, 2, 1.0)])
    out = as_values([1, 2, 3], g)
    assert out.dtype == np.float64
    assert out.tolist() == [1.0, 2.0, 3.0]
    with pytest.raises(ValueError):
        as_values([1, 2], g)
    other = WeightedGraph(2, [(0, 1, 1.0)])
    with pytest.raises(ValueError):
        as_values(VertexFunction(other, [0.0, 1.0]), g)


def test_vertex_function_csv_round_trip(tmp_path):
    g = build_tree(2, 2)
    f = VertexFunction(g, np.linspace(1 / 3, 1e-7, g.vertex_count))
    path = tmp_path / "f.csv"
    save_vertex_function(f, path)
    g2 = load_vertex_function(g, path)
    assert np.array_equal(f.values, g2.values)  # repr round-trips exactly


# ---------------------------------------------------------------------------
# operators on tiny graphs


def test_p_laplacian_single_edge():
    g = WeightedGraph(2, [(0, 1, 1.0)])
    f = [0.0, 2.0]
    assert p_laplacian(g, f, 0, 3.0) == 4.0
    assert p_laplacian(g, f, 1, 3.0) == -4.0
    np.testing.assert_allclose(p_laplacian_all(g, f, 3.0), [4.0, -4.0])


def test_p_laplacian_weight_and_measure_cancel():
    # single edge: the measure at each endpoint equals the edge weight,
    # so the weight cancels and only the drop matters
    g = WeightedGraph(2, [(0, 1, 0.25)])
    assert p_laplacian(g, [0.0, 3.0], 0, 3.0) == 9.0


def test_p2_laplacian_matches_dense_oracle():
    g = build_lattice(2, 2)
    rng = np.random.default_rng(3)
    f = rng.normal(size=g.vertex_count)
    # independent dense assembly straight from the edge list
    n = g.vertex_count
    A = np.zeros((n, n))
    for u, v, w in g.edges:
        A[u, v] += w
        A[v, u] += w
    mu = A.sum(axis=1)
    expected = (A @ f - mu * f) / mu
    np.testing.assert_allclose(p_laplacian_all(g, f, 2.0), expected,
                               rtol=1e-12, atol=1e-12)


def test_pairing_with_self_is_energy():
    g = build_tree(2, 3)
    rng = np.random.default_rng(5)
    f = rng.normal(size=g.vertex_count)
    for p in (1.5, 2.0, 3.0):
        assert dirichlet_pairing(g, f, f, p) == pytest.approx(
            p_energy(g, f, p), rel=1e-12)


def test_pairing_is_integration_by_parts():
    # sum_x psi(x) mu(x) (-lap_p f)(x) telescopes to the edge pairing
    g = build_tree(2, 3)
    rng = np.random.default_rng(11)
    f = rng.normal(size=g.vertex_count)
    psi = rng.normal(size=g.vertex_count)
    for p in (1.5, 2.0, 3.0):
        lhs = dirichlet_pairing(g, f, psi, p)
        rhs = float(np.dot(psi, g.vertex_measure * (-p_laplacian_all(g, f, p))))
        assert lhs == pytest.approx(rhs, rel=1e-11, abs=1e-11)


def test_p_energy_explicit():
    g = WeightedGraph(3, [(0, 1, 2.0), (1, 2, 0.5)])
    #  drops 1 and 2: energy = 2*1^3 + 0.5*2^3 = 6
    assert p_energy(g, [1.0, 0.0, -2.0], 3.0) == pytest.approx(6.0, rel=1e-14)


# ---------------------------------------------------------------------------
# supersolution bookkeeping


def test_defect_tolerance_scales_with_sup():
    assert defect_tolerance(1.0, 2.0) == 1e-10
    assert defect_tolerance(10.0, 2.0) == pytest.approx(1e-9)
    assert defect_tolerance(10.0, 3.0, sigma=4.0) == pytest.approx(1e-6)
    assert defect_tolerance(0.1, 3.0) == 1e-10  # never below base


def test_supersolution_defect_matches_direct_formula():
    g = build_lattice(1, 4)
    rng = np.random.default_rng(2)
    u = rng.uniform(0.1, 2.0, size=g.vertex_count)
    params = ExponentParams(p=2.5, sigma=3.0)
    interior = [0, 1, 2]
    defect = supersolution_defect(g, u, params, interior=interior)
    direct = -p_laplacian_all(g, u, 2.5)[interior] - u[interior] ** 3.0
    np.testing.assert_allclose(defect, direct, rtol=1e-13)
    with pytest.raises(ValueError):
        supersolution_defect(g, u - 5.0, params)


def test_green_function_is_superharmonic_inside_only():
    g = build_lattice(1, 4)
    prof = ball_profile(g)
    green = solve_green(g, prof, 2, 2.0)
    ball_ids = np.flatnonzero(prof.ball_mask(2))
    verdict = is_p_superharmonic(g, green.values, 2.0, interior=ball_ids)
    assert verdict.ok
    outside = is_p_superharmonic(g, green.values, 2.0)
    assert not outside.ok
    assert prof.radius_of[outside.witness_vertex] == 3  # first zero layer
