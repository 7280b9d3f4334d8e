import math

import numpy as np
import pytest

from boundary_lab.boundary import BoundaryPoint, Params, count_cylinders, dimension, reduce
from boundary_lab.conformal import BundleChart
from boundary_lab.errors import DegenerateGram, ParamError, SupportTouchesTail
from boundary_lab.experiments import ball_classes, rescaling_cases
from boundary_lab.functions import CylinderFunction, Partition, ShellFunction, gagliardo_energy, sobolev_gram, sobolev_norm
from boundary_lab.operators import (
    OperatorMatrix,
    almost_invariance_curve,
    almost_invariance_value,
    cayley_inverse_operator,
    cayley_operator,
    dual_norm_oracle,
    factorization_residual,
    growth_fit,
    heat_matrix,
    invariant_vector_probe,
    kernel_values,
    knapp_stein_diagonal,
    knapp_stein_diagonal_refined,
    knapp_stein_matrix,
    laplacian_matrix,
    operator_norm_general_p,
    operator_norm_p2,
    potential_matrix,
    potential_ratio_window,
    rep_norm,
    rep_pi,
    rep_pi_matrix,
    rescaling_check,
    rescaling_sequence,
)

D = dimension(2)


def test_laplacian_depth_one_closed_form():
    # all four cylinders sit at distance 1, each with mass 1/4
    L = laplacian_matrix(2, 0.3, 1).entries
    assert np.allclose(L, np.eye(4) - 0.25 * np.ones((4, 4)), atol=1e-15)


@pytest.mark.parametrize("n", [2, 3])
def test_laplacian_form_is_half_the_energy(n):
    rng = np.random.default_rng(n)
    N = count_cylinders(2, n)
    f = rng.standard_normal(N)
    L = laplacian_matrix(2, 0.35, n).entries
    form = f @ L @ f / N
    assert form == pytest.approx(0.5 * gagliardo_energy(CylinderFunction(2, n, f), 0.35, 2), rel=1e-12)
    assert np.allclose(L @ np.ones(N), 0, atol=1e-12)


@pytest.mark.parametrize("n", [1, 2])
def test_knapp_stein_diagonal_matches_refinement(n):
    for s in (0.2, 0.3, 0.45):
        assert knapp_stein_diagonal(2, s, n) == pytest.approx(knapp_stein_diagonal_refined(2, s, n), rel=1e-12)
    assert knapp_stein_diagonal(2, 0.3, 2) == pytest.approx(0.3337787895334222, rel=1e-12)


def test_knapp_stein_is_positive_definite():
    for s in (0.2, 0.45):
        K = knapp_stein_matrix(2, s, 4).entries
        assert np.linalg.eigvalsh(K).min() > 0
    with pytest.raises(ParamError):
        knapp_stein_matrix(2, 0.6, 2)


def test_potential_is_pd_and_fixes_constants():
    J = potential_matrix(2, 0.3, 3).entries
    assert np.linalg.eigvalsh(0.5 * (J + J.T)).min() > 0
    assert np.allclose(J @ np.ones(len(J)), 1.0, atol=1e-12)
    lo, hi = potential_ratio_window(2, 0.3, 3)
    assert (lo, hi) == pytest.approx((0.5, 1.0098064047602207), rel=1e-10)
    k = kernel_values(potential_matrix(2, 0.3, 3), 2)
    assert np.allclose(k, k.T, atol=1e-12)


def test_dual_norm_matches_constrained_oracle():
    n, s = 2, 0.3
    phi = np.random.default_rng(0).standard_normal(count_cylinders(2, n))
    J = potential_matrix(2, s, n).entries
    direct = math.sqrt(phi @ J @ phi / count_cylinders(2, n))
    assert dual_norm_oracle(2, s, n, phi) == pytest.approx(direct, rel=1e-7)


def test_heat_semigroup():
    H1 = heat_matrix(2, 0.3, 0.2, 3).entries
    H2 = heat_matrix(2, 0.3, 0.5, 3).entries
    H3 = heat_matrix(2, 0.3, 0.7, 3).entries
    assert np.allclose(H1 @ H2, H3, atol=1e-12)
    assert np.allclose(H1.sum(axis=1), 1.0, atol=1e-12)
    assert H1.min() > 0


def test_operator_norm_on_simple_pencils():
    G = np.diag([1.0, 2.0, 4.0])
    A = OperatorMatrix(np.diag([1.0, 1.0, 3.0]), G, G)
    assert operator_norm_p2(A) == pytest.approx(3.0)
    # the domain seminorm kills constants while the operator does not
    Gd = np.array([[1.0, -1.0], [-1.0, 1.0]])
    with pytest.raises(DegenerateGram):
        operator_norm_p2(OperatorMatrix(np.eye(2), Gd, np.eye(2)))


def test_ascent_agrees_with_pencil_for_p2():
    n, s = 2, 0.3
    params = Params(2, s, 2.0, 0.0)
    exact = rep_norm("a", n, params)
    res = operator_norm_general_p(
        lambda x: rep_pi("a", CylinderFunction(2, n, x), params).coeffs,
        lambda x: sobolev_norm(CylinderFunction(2, n, x), s, 2.0),
        lambda y: sobolev_norm(CylinderFunction(2, n + 1, y), s, 2.0),
        count_cylinders(2, n), trials=4, seed=1)
    assert res.value <= exact * (1 + 1e-9)
    assert res.value == pytest.approx(exact, rel=1e-4)


def test_rep_norm_frozen_and_depth_stable():
    params = Params(2, 0.3, 2.0, 0.0)
    assert rep_norm("a", 3, params) == pytest.approx(1.0511090729829005, rel=1e-10)
    assert rep_norm("ab", 3, params) == pytest.approx(1.0877061431652326, rel=1e-10)
    assert rep_norm("a", 4, params) == pytest.approx(rep_norm("a", 3, params), rel=1e-10)
    assert rep_norm("", 3, params) == pytest.approx(1.0, rel=1e-12)


def test_rep_norm_constant_on_symmetry_classes():
    params = Params(2, 0.3, 2.0, 0.7)
    for cls, members in [("a", ["a", "b", "A", "B"]), ("ab", ["ab", "Ba", "AB", "bA"])]:
        ref = rep_norm(cls, 3, params)
        for g in members:
            assert rep_norm(g, 3, params) == pytest.approx(ref, rel=1e-10)
    assert len(ball_classes(2, 3)) == 9


def test_rep_pi_group_law_and_factorization():
    rng = np.random.default_rng(7)
    params = Params(2, 0.3, 2.0, 1.3)
    f = CylinderFunction(2, 2, rng.standard_normal(12) + 1j * rng.standard_normal(12))
    for g, h in [("a", "b"), ("ab", "B"), ("aa", "AB")]:
        two = rep_pi(g, rep_pi(h, f, params), params)
        one = rep_pi(reduce(g + h), f, params).refine(two.depth)
        assert np.max(np.abs(one.coeffs - two.coeffs)) <= 1e-12 * np.max(np.abs(two.coeffs))
        chart = BundleChart(BoundaryPoint("b", "a"), 4)
        assert factorization_residual(g, f, chart, params) <= 1e-12
    assert rep_pi_matrix("ab", 2, params).shape == (count_cylinders(2, 4), 12)


def test_cayley_norms_frozen_and_basepoint_free():
    values = []
    for a in (BoundaryPoint("", "a"), BoundaryPoint("aB", "A")):
        chart = BundleChart(a, 7)
        values.append((operator_norm_p2(cayley_operator(chart, 4, 0.3, 0.0)),
                       operator_norm_p2(cayley_inverse_operator(chart, 4, 0.3, 0.0))))
    assert values[0] == pytest.approx((0.991480254268362, 1.1769374687927725), rel=1e-9)
    assert values[1] == pytest.approx(values[0], rel=1e-9)


def test_rescaling_law_and_disjoint_zero():
    a = BoundaryPoint("b", "ab")
    assert rescaling_sequence(a, 2) == "BABAB"
    for name, phi, psi in rescaling_cases(a, 2, 4):
        res = rescaling_check(a, 0.3, phi, psi, 5)
        for n, r, pred in zip(res.n, res.residual, res.predicted):
            if n >= res.n0:
                assert r == pytest.approx(pred, abs=1e-12)
                if name == "disjoint_shells":
                    assert r <= 1e-12
        if name == "same_shell":
            assert res.residual[-1] > 1e-6


def test_rescaling_rejects_tails():
    a = BoundaryPoint("", "a")
    part = Partition.adapted(2, 1, a, 3)
    F = ShellFunction(part, np.ones(len(part)), ((1.0, 0),))
    with pytest.raises(SupportTouchesTail):
        rescaling_check(a, 0.3, F, F, 2)


def test_almost_invariance():
    assert almost_invariance_value("a", 2, 0.2, 2.0) == pytest.approx(0.5472448264608037, rel=1e-10)
    assert almost_invariance_value("", 2, 0.2, 2.0) == 0.0
    top = D / 2
    grid = [top * i / 21 for i in range(15, 21)]
    curve = almost_invariance_curve(2, 2.0, grid, ["a", "b", "A", "B"])
    assert all(y < x for x, y in zip(curve, curve[1:]))
    with pytest.raises(ParamError):
        almost_invariance_curve(2, 1.0, grid, ["a"])


def test_growth_fit_recovers_exponential():
    C, A = growth_fit({1: 2 * math.exp(0.3), 2: 2 * math.exp(0.6), 3: 2 * math.exp(0.9)})
    assert (C, A) == pytest.approx((2.0, 0.3), rel=1e-10)


def test_invariant_vector_probe_is_positive():
    assert invariant_vector_probe(2, 2, Params(2, 0.3, 2.0, 0.0)) > 1e-3


def test_sobolev_gram_matches_norm():
    rng = np.random.default_rng(3)
    f = rng.standard_normal(36)
    G = sobolev_gram(2, 3, 0.3)
    assert f @ G @ f == pytest.approx(sobolev_norm(CylinderFunction(2, 3, f), 0.3, 2.0) ** 2, rel=1e-12)
