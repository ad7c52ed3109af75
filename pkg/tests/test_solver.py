import math

import numpy as np
import pytest
from scipy.optimize import linprog as highs

from fwrobust.errors import InputError, InvariantError, PreconditionError
from fwrobust.gauges import euclidean_gauge, l1_gauge, quantile_gauge, separable_gauge, tropical_gauge
from fwrobust.instances import abs_gauge
from fwrobust.solver import (
    Uniqueness,
    WeightedSample,
    euclid_three_point_witness,
    fw_uniqueness,
    is_fw_point,
    objective,
    skew_line_fw_check,
    solve_fw_lp,
    solve_fw_subgradient,
)


def highs_fw(g, s):
    """Independent oracle: the epigraph LP solved by HiGHS."""
    P = g.dual_vertices
    n, d, k = len(s), g.dim, len(P)
    A = np.zeros((n * k, d + n))
    b = np.zeros(n * k)
    for i, a in enumerate(s.points):
        for j, p in enumerate(P):
            A[i * k + j, :d] = p
            A[i * k + j, d + i] = -1
            b[i * k + j] = p @ a
    c = np.concatenate([np.zeros(d), s.weights])
    res = highs(c, A_ub=A, b_ub=b, bounds=[(None, None)] * d + [(0, None)] * n, method="highs")
    return res.fun


def random_instance(rng, g, n=None):
    n = int(rng.integers(1, 11)) if n is None else n
    return WeightedSample(rng.normal(scale=2, size=(n, g.dim)), rng.uniform(0.2, 3, n))


GAUGES = [tropical_gauge(2), l1_gauge(2), separable_gauge([0.2, 0.35]), quantile_gauge(0.3)]


def test_sample_validation():
    with pytest.raises(InputError):
        WeightedSample(np.zeros((0, 2)), [])
    with pytest.raises(InputError):
        WeightedSample([[0, 0]], [0.0])
    with pytest.raises(InputError):
        WeightedSample([[0, 0], [1, 1]], [1.0])
    with pytest.raises(InputError):
        solve_fw_lp(tropical_gauge(2), WeightedSample([[0.0]], [1.0]))


def test_sample_bookkeeping():
    s = WeightedSample([[0, 0], [1, 0]], [1, 2])
    assert s.total_weight == 3
    t = s.plus([[1, 0], [5, 5]], [4, 1])
    assert len(t) == 3 and t.total_weight == 8 and t.weights[1] == 6
    m = WeightedSample([[0, 0], [0, 0], [1, 1]], [1, 2, 3]).merged()
    assert len(m) == 2 and m.weights.tolist() == [3, 3]


def test_odd_median():
    s = WeightedSample.uniform([[0], [1], [2]])
    assert solve_fw_lp(quantile_gauge(0.5), s).optimizer[0] == pytest.approx(1)
    assert solve_fw_lp(abs_gauge(), s).optimizer[0] == pytest.approx(1)


def test_hexagon_origin(hexagon):
    g, s = hexagon
    sol = solve_fw_lp(g, s, check_unique=True)
    assert np.allclose(sol.optimizer, 0, atol=1e-12)
    assert sol.unique is Uniqueness.YES
    assert sol.objective == pytest.approx(objective(g, s, sol.optimizer), rel=1e-8)
    assert is_fw_point(g, s, [0, 0])
    assert not is_fw_point(g, s, [0.25, 0.5])


def test_quantile_example():
    g = quantile_gauge(0.25)
    s = WeightedSample.uniform([[0], [1], [2], [3]])
    sol = solve_fw_lp(g, s)
    assert is_fw_point(g, s, sol.optimizer)
    # the b-quantile mass condition: left mass >= b n and right mass >= (1-b) n
    assert is_fw_point(g, s, [0.0])
    assert sol.objective == pytest.approx(objective(g, s, [0.0]))


def test_single_point():
    g = tropical_gauge(2)
    s = WeightedSample([[2.0, -1.0]], [4.0])
    assert np.allclose(solve_fw_lp(g, s).optimizer, [2, -1])
    assert is_fw_point(g, s, [2.0, -1.0])


def test_uniqueness_examples(hexagon):
    g, s = hexagon
    assert fw_uniqueness(g, s, [0, 0]) is Uniqueness.YES
    two = WeightedSample.uniform([[0.0], [2.0]])
    assert fw_uniqueness(abs_gauge(), two, [1.0]) is Uniqueness.NO
    a = np.array([0.5, 0.0])
    t = s.plus(a[None, :], [5.0])
    assert is_fw_point(g, t, a)
    assert fw_uniqueness(g, t, a) in (Uniqueness.YES, Uniqueness.NO)
    with pytest.raises(PreconditionError):
        fw_uniqueness(g, s, [0.25, 0.5])


def test_uniqueness_no_is_confirmed_by_a_second_optimizer(rng):
    g = l1_gauge(2)
    s = WeightedSample.uniform([[0, 0], [2, 0]])
    x = solve_fw_lp(g, s).optimizer
    assert fw_uniqueness(g, s, x) is Uniqueness.NO
    assert is_fw_point(g, s, [1.0, 0.0]) and is_fw_point(g, s, [0.3, 0.0])


@pytest.mark.parametrize("g", GAUGES, ids=lambda g: g.name)
def test_lp_matches_highs(g, rng):
    for _ in range(25):
        s = random_instance(rng, g)
        sol = solve_fw_lp(g, s)
        assert sol.objective == pytest.approx(highs_fw(g, s), rel=1e-9, abs=1e-9)
        assert sol.certificate.residual <= 1e-8 * s.total_weight
        for lam in sol.certificate.multipliers:
            assert np.all(lam >= 0) and lam.sum() == pytest.approx(1)


@pytest.mark.parametrize("g", GAUGES, ids=lambda g: g.name)
def test_translation_and_scaling(g, rng):
    for _ in range(10):
        s = random_instance(rng, g)
        x = solve_fw_lp(g, s).optimizer
        t = rng.normal(scale=10, size=g.dim)
        moved = solve_fw_lp(g, s.translate(t))
        assert moved.objective == pytest.approx(solve_fw_lp(g, s).objective, rel=1e-8)
        assert is_fw_point(g, s.translate(t), x + t)
        assert is_fw_point(g, s.scale_weights(float(rng.uniform(0.1, 10))), x)


@pytest.mark.parametrize("g", GAUGES, ids=lambda g: g.name)
def test_majority_point_is_optimal(g, rng):
    for _ in range(10):
        s = random_instance(rng, g, n=5)
        rest = s.total_weight - s.weights[0]
        w = s.weights.copy()
        w[0] = g.skewness * rest * 1.01
        heavy = WeightedSample(s.points, w)
        assert is_fw_point(g, heavy, s.points[0])


def test_subgradient_euclidean():
    tri = WeightedSample.uniform([[0, 0], [1, 0], [0.5, math.sqrt(3) / 2]])
    sol = solve_fw_subgradient(euclidean_gauge(2), tri)
    assert np.allclose(sol.optimizer, tri.points.mean(axis=0), atol=1e-8)
    assert sol.certificate.residual <= 1e-8
    line = WeightedSample.uniform(np.arange(5.0)[:, None])
    assert solve_fw_subgradient(euclidean_gauge(1), line).optimizer[0] == pytest.approx(2.0)


def test_subgradient_wrapped_polyhedral(rng):
    g = l1_gauge(2)
    s = WeightedSample.uniform(rng.normal(size=(10, 2)))
    sol = solve_fw_subgradient(g.as_black_box(), s)
    ref = solve_fw_lp(g, s).objective
    assert abs(sol.objective - ref) <= 1e-6 * ref
    assert sol.unique is Uniqueness.UNKNOWN


def test_subgradient_guards():
    g = tropical_gauge(2).as_black_box()
    s = WeightedSample.uniform([[0, 0], [4, 1], [1, 4], [5, 5], [2, -3]])
    with pytest.raises(PreconditionError):
        solve_fw_subgradient(g, s, iters=0)
    with pytest.raises(InvariantError):
        solve_fw_subgradient(g, s, iters=50, step=1e4, polish=False)


@pytest.mark.parametrize(
    "g, n, ell",
    [(tropical_gauge(2), 6, 2), (abs_gauge(), 5, 3), (quantile_gauge(0.25), 8, 2)],
    ids=["tropical", "abs", "quantile"],
)
def test_skew_line_examples(g, n, ell, rng):
    assert math.ceil(n / (1 + g.skewness)) == ell
    taus = np.sort(rng.normal(size=n))
    cert = skew_line_fw_check(g, taus, base=rng.normal(size=g.dim))
    assert cert and cert.residual <= 1e-8
    with pytest.raises(PreconditionError):
        skew_line_fw_check(g, taus[::-1])


def test_euclid_witness():
    for rho in (1.0, 100.0):
        wit = euclid_three_point_witness([0, 0], [2, 0], [1, 1], rho)
        assert wit.verified and wit.residual <= 1e-8 and wit.w_c < 2
        # independent check: the Euclidean objective at m is not beaten nearby
        s = WeightedSample([[0, 0], [2, 0], wit.c], [1, 1, wit.w_c])
        sol = solve_fw_subgradient(euclidean_gauge(2), s)
        assert np.allclose(sol.optimizer, [1, 1], atol=1e-6)
    assert euclid_three_point_witness([0, 0], [2, 0], [1, 1], 1).w_c == pytest.approx(
        euclid_three_point_witness([0, 0], [2, 0], [1, 1], 100).w_c
    )
    with pytest.raises(PreconditionError):
        euclid_three_point_witness([0, 0], [2, 0], [1, 0], 1.0)
