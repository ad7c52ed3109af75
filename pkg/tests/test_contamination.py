import numpy as np
import pytest

from fwrobust.cells import ehull_contains, probe_grid
from fwrobust.contamination import (
    cl_bruteforce_oracle,
    cl_membership,
    contamination_locus,
    quantile_cl,
    self_contamination_check,
    tropical_balance,
    tropical_median_check,
)
from fwrobust.errors import InputError, PreconditionError
from fwrobust.gauges import l1_gauge, quantile_gauge, tropical_gauge
from fwrobust.instances import INTERIOR_PROBE, SEGMENT_PROBE
from fwrobust.solver import Uniqueness, WeightedSample, is_fw_point, solve_fw_lp

from conftest import PLANAR_GAUGES


def vset(arr):
    return {tuple(round(float(v), 9) + 0.0 for v in row) for row in np.atleast_2d(arr)}


def test_membership_examples(hexagon):
    g, s = hexagon
    seg = cl_membership(g, s, None, SEGMENT_PROBE)
    assert seg.status == "in" and seg.witness.w_e < s.total_weight / g.skewness
    wit = seg.witness
    assert is_fw_point(g, s.plus(wit.e[None, :], [wit.w_e]), SEGMENT_PROBE)
    assert wit.certificate.residual <= 1e-8 * (s.total_weight + wit.w_e)
    heavy = cl_membership(g, s, None, [0.5, 0.5])
    assert heavy.status == "out" and heavy.value > heavy.bound and heavy.witness is None
    origin = cl_membership(g, s, None, [0.0, 0.0])
    assert origin.status == "in" and np.allclose(origin.witness.e, 0)
    with pytest.raises(InputError):
        cl_membership(g, s, None, [0.0])
    with pytest.raises(PreconditionError):
        cl_membership(g.as_black_box(), s, None, [0.0, 0.0])


def test_self_contamination(hexagon):
    g, s = hexagon
    bad = self_contamination_check(g, s, None, INTERIOR_PROBE, weight=6.0)
    assert bad.refutes_membership and not bad.optimal
    good = self_contamination_check(g, s, None, SEGMENT_PROBE, weight=5.0)
    assert good.optimal and not good.refutes_membership
    for w in (0.5, 3.0, 40.0):
        o = self_contamination_check(g, s, None, [0.0, 0.0], weight=w)
        assert o.optimal and o.unique is Uniqueness.YES


def test_balance_worked_values(hexagon):
    g, s = hexagon
    pts = np.vstack([s.points, INTERIOR_PROBE])
    bal = tropical_balance(pts, np.append(s.weights, 6.0), INTERIOR_PROBE)
    assert bal.total == 18 and max(bal.interior) == 7 and not bal
    pts = np.vstack([s.points, SEGMENT_PROBE])
    bal = tropical_balance(pts, np.append(s.weights, 5.0), SEGMENT_PROBE)
    assert sorted(bal.interior) == [1, 4, 4]
    assert sorted(bal.interior + bal.apex) == [6, 9, 9]
    assert bal.rule_interior and bal.rule_inclusive and bal
    assert tropical_median_check(s.points, s.weights, [0.0, 0.0])
    # projective coordinates are accepted and reduce to the same chart
    proj = np.hstack([np.zeros((6, 1)), s.points]) + 4.0
    assert tropical_median_check(proj, s.weights, [[4.0, 4.0, 4.0]])
    with pytest.raises(PreconditionError):
        tropical_balance(np.zeros((2, 4)), [1, 1], np.zeros(4))


def test_balance_matches_optimality(rng):
    g = tropical_gauge(2)
    agree = 0
    for t in range(500):
        n = int(rng.integers(1, 9))
        pts = rng.integers(-10, 11, size=(n, 2)).astype(float)
        w = rng.integers(1, 6, size=n).astype(float)
        s = WeightedSample(pts, w)
        kind = t % 4
        if kind == 0:
            m = solve_fw_lp(g, s, certify=False).optimizer
        elif kind == 1:
            m = pts[int(rng.integers(n))]
        elif kind == 2:
            m = rng.integers(-10, 11, size=2).astype(float)
        else:
            m = np.round(solve_fw_lp(g, s, certify=False).optimizer + rng.integers(-1, 2, size=2), 0)
        agree += tropical_median_check(pts, w, m) == bool(is_fw_point(g, s, m))
    assert agree == 500


def test_locus_hexagon(hexagon):
    g, s = hexagon
    cl = contamination_locus(g, s)
    segs = {frozenset(vset(c.vertices)) for c in cl.region.cells if c.dim == 1}
    assert segs == {frozenset({(0.0, 0.0), p}) for p in [(0.0, 1.0), (1.0, 0.0), (-1.0, -1.0)]}
    assert vset([c.vertices[0] for c in cl.region.cells if c.dim == 0]) == {(0.0, 0.0), (0.0, 1.0), (1.0, 0.0), (-1.0, -1.0)}
    assert not [c for c in cl.region.cells if c.dim == 2]
    assert cl.connected and cl.sandwich
    for i in cl.accepted:
        if i in cl.witnesses:
            w = cl.witnesses[i]
            assert w.w_e < s.total_weight / g.skewness
            assert w.certificate.residual <= 1e-8 * (s.total_weight + w.w_e)
    # every indeterminate cell is unbounded, so it cannot belong to the locus
    assert all(not cl.cells[i].bounded for i in cl.indeterminate)


def test_locus_single_point():
    g = tropical_gauge(2)
    cl = contamination_locus(g, [[1.0, 2.0]], [3.0])
    assert len(cl.region.cells) == 1 and vset(cl.region.cells[0].vertices) == {(1.0, 2.0)}


@pytest.mark.parametrize("name", sorted(PLANAR_GAUGES))
def test_locus_properties(name, rng):
    g = PLANAR_GAUGES[name]()
    for _ in range(3):
        n = int(rng.integers(2, 6))
        D = rng.integers(-3, 4, size=(n, 2)).astype(float)
        w = rng.integers(1, 4, size=n).astype(float)
        cl = contamination_locus(g, D, w)
        assert cl.connected and cl.sandwich
        s = WeightedSample(D, w).merged()
        x = solve_fw_lp(g, s).optimizer
        assert cl.contains(x)
        for c in cl.region.cells:
            assert ehull_contains(g, s.points, c.representative)
            m = cl_membership(g, s, None, c.representative)
            assert m.status == "in"
            assert not self_contamination_check(g, s, None, c.representative).refutes_membership


def test_quantile_cl_examples():
    assert quantile_cl(np.arange(5.0), np.ones(5), 0.25) == (0.0, 1.0)
    assert quantile_cl(np.arange(5.0), [100, 1, 1, 1, 1], 0.25) == (0.0, 0.0)
    assert quantile_cl(np.arange(5.0), np.ones(5), 0.49) == (0.0, 4.0)
    with pytest.raises(InputError):
        quantile_cl([2.0, 1.0], [1, 1], 0.25)
    with pytest.raises(PreconditionError):
        quantile_cl([1.0, 2.0], [1, 1], 0.5)


def test_quantile_cl_agrees_with_cells(rng):
    for _ in range(10):
        n = int(rng.integers(1, 9))
        D = np.sort(rng.choice(np.arange(-10, 11), size=n, replace=False)).astype(float)
        w = rng.integers(1, 4, size=n).astype(float)
        b = float(rng.choice([0.1, 0.2, 0.25, 0.4]))
        closed = quantile_cl(D, w, b)
        iv = contamination_locus(quantile_gauge(b), D[:, None], w).region.interval()
        assert np.allclose(iv, closed, atol=1e-9)


def test_bruteforce_consistency(hexagon):
    g, s = hexagon
    bf = cl_bruteforce_oracle(g, s, None, [-2, -2], [2, 2], steps=11, weight_steps=5)
    assert bf.contaminants == 11 * 11 * 5 and len(bf) > 0
    for x in bf.points:
        assert cl_membership(g, s, None, x, band=1e-6).status == "in"
    empty = cl_bruteforce_oracle(g, s, None, [-2, -2], [2, 2], steps=5, weight_steps=0)
    assert len(empty) == 0 and empty.contaminants == 0


def test_bruteforce_fills_quantile_interval():
    g = quantile_gauge(0.25)
    bf = cl_bruteforce_oracle(g, np.arange(5.0)[:, None], np.ones(5), [-1.0], [5.0], steps=61, weight_steps=20)
    assert bf.points.min() == pytest.approx(0.0) and bf.points.max() == pytest.approx(1.0)
    assert (bf.points.max() - bf.points.min()) >= 1 - 0.1


def test_bruteforce_threads_match(hexagon):
    g, s = hexagon
    one = cl_bruteforce_oracle(g, s, None, [-1, -1], [1, 1], steps=5, weight_steps=3)
    many = cl_bruteforce_oracle(g, s, None, [-1, -1], [1, 1], steps=5, weight_steps=3, threads=4)
    assert np.array_equal(one.points, many.points)


def test_l1_locus_is_inside_hull(rng):
    g = l1_gauge(2)
    D = np.array([[1, 0], [-1, 0], [0, 1], [0, -1]], dtype=float)
    cl = contamination_locus(g, D, np.ones(4))
    for y in probe_grid([-1, -1], [1, 1], 9):
        if cl.contains(y):
            assert ehull_contains(g, D, y)
