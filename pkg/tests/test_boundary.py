import math

import numpy as np
import pytest

from boundary_lab.boundary import (
    BoundaryPoint,
    Cylinder,
    Params,
    act_on_cylinder,
    act_on_point,
    act_on_word,
    ball,
    busemann,
    canonical_class,
    cancellation,
    count_cylinders,
    cross_ratio,
    cylinder_measure,
    d_a_distance,
    dimension,
    gromov_product,
    inverse,
    is_reduced,
    log_derivative,
    metric_derivative,
    product_matrix,
    random_point,
    random_word,
    reduce,
    visual_distance,
    words_at_depth,
)
from boundary_lab.errors import ParamError

from oracles import prefix_matrix, words


def test_reduce_and_inverse():
    assert reduce("abBA") == ""
    assert reduce("aAbaB") == "baB"
    assert inverse("abA") == "aBA"
    assert reduce("abA" + inverse("abA")) == ""
    assert is_reduced("abAB") and not is_reduced("abBa")


def test_cylinder_counts_and_measure():
    assert [count_cylinders(2, n) for n in range(1, 5)] == [4, 12, 36, 108]
    assert words_at_depth(2, 2) == tuple(words(2))
    assert cylinder_measure(Cylinder("abA"), 2) == pytest.approx(1 / 36)
    assert sum(cylinder_measure(Cylinder(w), 2) for w in words_at_depth(2, 3)) == pytest.approx(1.0)
    assert dimension(2) == pytest.approx(math.log(3))
    assert dimension(3) == pytest.approx(math.log(5))


def test_product_matrix_matches_string_prefixes():
    ws = list(words_at_depth(2, 3))
    P = product_matrix(2, 3)
    Q = prefix_matrix(ws)
    off = ~np.eye(len(ws), dtype=bool)
    assert np.array_equal(P[off], Q[off])


def test_gromov_product_and_distance():
    assert gromov_product(BoundaryPoint("ab", "a"), BoundaryPoint("aB", "a")) == 1
    assert gromov_product(Cylinder("abA"), Cylinder("aba")) == 2
    assert visual_distance(Cylinder("a"), Cylinder("b")) == 1.0
    assert visual_distance(Cylinder("aab"), Cylinder("aaB")) == pytest.approx(math.exp(-2))
    # two spellings of the same point
    x, y = BoundaryPoint("", "ab"), BoundaryPoint("ab", "ab")
    assert gromov_product(x, y) == math.inf
    assert visual_distance(x, y) == 0.0


def test_boundary_point_validation():
    with pytest.raises(ParamError):
        BoundaryPoint("aB", "b")
    with pytest.raises(ParamError):
        BoundaryPoint("a", "aA")
    assert BoundaryPoint("b", "ab").prefix(6) == "bababa"


def test_action_and_cancellation():
    assert act_on_word("ab", "Baa") == "aaa"
    assert cancellation("ab", "BA") == 2
    assert act_on_cylinder("a", Cylinder("Ab")).prefix == "b"
    # a^inf is fixed by every power of a
    fixed = BoundaryPoint("", "a")
    assert gromov_product(act_on_point("A", fixed), fixed) == math.inf


def test_metric_derivative_values():
    # no cancellation: |g'| = e^{-|g|}; full cancellation of g^{-1}: e^{+|g|}
    assert metric_derivative("ab", Cylinder("aab")) == pytest.approx(math.exp(-2))
    assert metric_derivative("ab", Cylinder("BA")) == pytest.approx(math.exp(2))
    assert log_derivative("ab", "BAa") == 2
    assert busemann("ab", Cylinder("bb")) == 2


def test_gmv_cocycle_and_measure_change():
    rng = np.random.default_rng(11)
    D = dimension(2)
    for _ in range(60):
        g = random_word(rng, 2, int(rng.integers(0, 4)))
        h = random_word(rng, 2, int(rng.integers(0, 4)))
        n = len(g) + len(h) + 2
        ws = words_at_depth(2, n)
        u, v = (Cylinder(ws[i]) for i in rng.choice(len(ws), 2, replace=False))
        lhs = visual_distance(act_on_cylinder(g, u), act_on_cylinder(g, v)) ** 2
        rhs = metric_derivative(g, u) * metric_derivative(g, v) * visual_distance(u, v) ** 2
        assert lhs == pytest.approx(rhs, rel=1e-12)
        assert metric_derivative(reduce(g + h), u) == pytest.approx(
            metric_derivative(g, act_on_cylinder(h, u)) * metric_derivative(h, u), rel=1e-12)
        img = act_on_cylinder(g, u)
        assert cylinder_measure(img, 2) == pytest.approx(metric_derivative(g, u) ** D * cylinder_measure(u, 2))


def test_cross_ratio_invariance():
    q = [Cylinder(w) for w in ("aab", "abA", "bab", "BBa")]
    base = cross_ratio(*q)
    for g in ("a", "bA", "ABa"):
        assert cross_ratio(*(act_on_cylinder(g, c) for c in q)) == pytest.approx(base, rel=1e-12)


def test_d_a_is_inversion_metric():
    a = BoundaryPoint("", "a")
    u, v = BoundaryPoint("b", "b"), BoundaryPoint("ab", "b")
    # <u,v> = 0, <u,a> = 0, <v,a> = 1
    assert d_a_distance(a, u, v) == pytest.approx(math.e)


def test_ball_and_classes():
    assert [len(ball(2, r)) for r in range(4)] == [1, 5, 17, 53]
    assert canonical_class("B") == "a"
    assert canonical_class("Ba") == canonical_class("ab")
    assert len({canonical_class(g) for g in ball(2, 3)}) == 9


def test_params_and_random_helpers():
    pr = Params(2, 0.3, 2.0, 1.5)
    assert pr.k == 4 and pr.z == complex(0.3, 1.5)
    with pytest.raises(ParamError):
        Params(2, 0.6, 2.0).require_sobolev()
    rng = np.random.default_rng(0)
    assert is_reduced(random_word(rng, 2, 7)) and len(random_word(rng, 2, 7)) == 7
    x = random_point(rng, 2)
    assert is_reduced(x.prefix(12))
