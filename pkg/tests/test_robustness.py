import numpy as np
import pytest

from fwrobust.errors import InputError, PreconditionError
from fwrobust.gauges import quantile_gauge, separable_gauge, tropical_gauge
from fwrobust.instances import abs_gauge, escape_instances, kappa_instances, line_sample
from fwrobust.robustness import (
    CorruptionPlan,
    breakdown_estimate,
    corrupt_shift,
    escape_experiment,
    greedy_subset,
    kappa_bound,
    reach,
    separable_box_bound,
    threshold,
    verify_lower_bound,
)
from fwrobust.solver import WeightedSample, is_fw_point, solve_fw_lp


def test_corrupt_shift_examples():
    s = WeightedSample([[0, 0], [1, 2], [3, 1]], [1, 2, 3])
    t = corrupt_shift(s, [1], 10, [1, 0])
    assert t.points.tolist() == [[0, 0], [-9, 2], [3, 1]]
    assert t.weights.tolist() == s.weights.tolist()
    assert corrupt_shift(s, [], 5, [1, 0]) is s
    plan = CorruptionPlan.shift(s, [0, 2], 2.0, [0, 1])
    assert plan.w_C == 4
    assert plan.apply(s).points.tolist() == [[0, -2], [1, 2], [3, -1]]
    with pytest.raises(PreconditionError):
        corrupt_shift(s, [0], -1, [1, 0])
    with pytest.raises(InputError):
        corrupt_shift(s, [3], 1, [1, 0])
    with pytest.raises(InputError):
        corrupt_shift(s, [0, 0], 1, [1, 0])
    with pytest.raises(InputError):
        corrupt_shift(s, [0], 1, [1, 0, 0])


def test_threshold_values():
    assert threshold(tropical_gauge(2)) == pytest.approx(1 / 3)
    assert threshold(abs_gauge()) == pytest.approx(0.5)
    assert threshold(quantile_gauge(0.25)) == pytest.approx(0.25)


def test_reach_against_pairwise_max(rng):
    g = tropical_gauge(2)
    s = WeightedSample.uniform(rng.normal(size=(7, 2)))
    a = rng.normal(size=2)
    assert reach(g, a, s) == pytest.approx(max(g(a - p) for p in s.points))


def test_kappa_worked_values():
    s = line_sample([0, 1], [0.5, 0.5])
    # (1 - 1/4)/(1 - 2/4) * sigma (1 + sigma) * M with sigma = 1 and M = 1
    assert kappa_bound(abs_gauge(), s, 0.25, [0.0]) == pytest.approx(3.0)
    g = tropical_gauge(2)
    t = WeightedSample([[0, 0], [-2, 0]], [0.5, 0.5])
    assert reach(g, [0, 0], t) == pytest.approx(2.0)
    assert kappa_bound(g, t, 0.25, [0, 0]) == pytest.approx(18 * 2.0)
    with pytest.raises(PreconditionError):
        kappa_bound(abs_gauge(), s, 0.5, [0.0])
    with pytest.raises(PreconditionError):
        kappa_bound(abs_gauge(), s, -0.1, [0.0])


def test_kappa_monotone_and_positive(hexagon):
    g, s = hexagon
    a = solve_fw_lp(g, s).optimizer
    cap = s.total_weight / (1 + g.skewness)
    ws = np.linspace(0, cap * 0.999, 30)
    ks = [kappa_bound(g, s, w, a) for w in ws]
    assert all(k > 0 for k in ks)
    assert all(b > a for a, b in zip(ks, ks[1:]))
    assert ks[0] == pytest.approx(g.skewness * (1 + g.skewness) * reach(g, a, s))


@pytest.mark.parametrize("inst", kappa_instances(), ids=lambda i: i[0])
def test_kappa_holds_on_trials(inst):
    _, g, s, C = inst
    rep = verify_lower_bound(g, s, C, trials=200, seed=3)
    assert rep.verdict == "pass" and rep.violations == 0
    assert rep.max_ratio <= 1 + 1e-9
    assert rep.consistent(g)
    assert len(rep.records) == 200
    again = verify_lower_bound(g, s, C, trials=200, seed=3, threads=4)
    assert [r.distance for r in again.records] == [r.distance for r in rep.records]


@pytest.mark.parametrize("inst", escape_instances(), ids=lambda i: i[0])
def test_escape_above_threshold(inst):
    _, g, s, C = inst
    res = escape_experiment(g, s, C)
    assert res.precondition_met and res.escaped
    assert res.trace[-1][1] > res.radius
    assert res.trace_csv().startswith("M,distance\n")


@pytest.mark.parametrize("inst", kappa_instances(), ids=lambda i: i[0])
def test_no_escape_below_threshold(inst):
    _, g, s, C = inst
    res = escape_experiment(g, s, C, max_doublings=30)
    assert not res.precondition_met and not res.escaped
    k = kappa_bound(g, s, s.subset_weight(C), res.a_star)
    assert max(d for _, d in res.trace) <= k * (1 + 1e-9)


def test_greedy_subset():
    g = abs_gauge()
    s = line_sample([0, 1, 2, 3, 4], [1, 1, 3, 1, 1])
    assert greedy_subset(g, s, 3 / 7, [2.0]) == [2]
    assert greedy_subset(g, s, 0.5, [2.0]) == [0, 2]
    assert sum(s.weights[greedy_subset(g, s, 0.8, [2.0])]) >= 0.8 * 7


def test_breakdown_brackets_threshold():
    g = abs_gauge()
    s = line_sample(np.arange(20.0))
    b = breakdown_estimate(g, s, 0.01)
    assert b.hi - b.lo <= 0.01
    assert b.brackets
    assert abs(b.estimate - 0.5) <= 0.01 + b.granularity
    t = breakdown_estimate(*(tropical_gauge(2), WeightedSample.uniform(np.random.default_rng(1).normal(size=(30, 2)))))
    assert t.brackets
    with pytest.raises(PreconditionError):
        breakdown_estimate(g, s, 0)


def test_separable_box(rng):
    bs = [0.25, 0.4]
    g = separable_gauge(bs)
    s = WeightedSample.uniform(rng.normal(size=(10, 2)))
    box = separable_box_bound(bs, s)
    assert np.allclose(box.lo, s.points.min(axis=0)) and np.allclose(box.hi, s.points.max(axis=0))
    # one of ten unit points is below the 1/(1+sigma) threshold
    assert g.skewness == pytest.approx(3.0)
    for _ in range(50):
        k = int(rng.integers(10))
        t = s.replace([k], rng.uniform(-1e6, 1e6, size=(1, 2)))
        x = solve_fw_lp(g, t).optimizer
        assert box.contains(x)
        assert is_fw_point(g, t, x)
    with pytest.raises(PreconditionError):
        separable_box_bound([0.7, 0.2], s)
    with pytest.raises(InputError):
        separable_box_bound([0.2], s)
