import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from oracles import brute_force_min
from wallopt.materials import LAYER_INDEX, baseline_reunion_wall
from wallopt.optimizer import (
    EXPLORATORY, INITIAL, PATTERN, NonFiniteCostError, OptimizerConfig, ParamSpec, TraceFormatError,
    map_params, optimize, read_trace,
)


def test_interior_quadratic():
    res = optimize(lambda v: (v[0] - 0.3) ** 2, [ParamSpec("x")])
    assert res.x[0] == pytest.approx(0.3, abs=1e-3)
    assert res.converged and not res.budget_exhausted
    assert res.trace[0].move == INITIAL and res.trace[0].params == (0.5,)


def test_monotone_objective_pins_lower_bound():
    res = optimize(lambda v: v[0], [ParamSpec("x")])
    assert res.x == (0.001,)
    assert res.cost == 0.001


def _coupled(x, y):
    return (x - 0.2) ** 2 + 2 * (y - 0.7) ** 2 + 0.3 * x * y


def test_two_dimensional_matches_grid_oracle():
    gx, gy = brute_force_min(_coupled, (0.001, 0.001), (1.0, 1.0), 1e-3)
    res = optimize(lambda v: _coupled(*v), [ParamSpec("x"), ParamSpec("y")])
    cell = 0.999 / round(0.999 / 1e-3)
    assert abs(res.x[0] - gx) <= cell and abs(res.x[1] - gy) <= cell
    assert (gx, gy) == pytest.approx((0.096, 0.693), abs=1e-9)


def _check_trace(res, specs):
    best = math.inf
    for r in res.trace:
        for v, s in zip(r.params, specs):
            assert s.lower <= v <= s.upper
        if r.accepted:
            assert r.cost < best
            best = r.cost
    assert res.cost == best == min(r.cost for r in res.trace)
    assert res.trace.best_so_far() == sorted(res.trace.best_so_far(), reverse=True)
    points = [r.params for r in res.trace]
    assert len(set(points)) == len(points)


@pytest.mark.parametrize("seed", range(100))
def test_random_quadratic_invariants(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(1, 4))
    a = rng.uniform(-0.5, 1.5, n)
    h = rng.uniform(0.1, 3.0, n)
    specs = [ParamSpec(f"x{i}", initial=float(rng.uniform(0.001, 1))) for i in range(n)]
    res = optimize(lambda v: float(np.sum(h * (np.asarray(v) - a) ** 2)), specs)
    _check_trace(res, specs)
    # Separable and strictly convex: the constrained minimiser is the clipped centre.
    target = np.clip(a, 0.001, 1.0)
    assert np.all(np.abs(np.asarray(res.x) - target) <= 1e-4)


@settings(max_examples=40, deadline=None)
@given(st.lists(st.tuples(st.floats(-1, 2), st.floats(0.05, 5)), min_size=1, max_size=3),
       st.floats(0.1, 0.9))
def test_separable_within_min_step(terms, factor):
    cfg = OptimizerConfig(step_reduction_factor=factor, max_evaluations=5000)
    specs = [ParamSpec(f"x{i}") for i in range(len(terms))]

    def f(v):
        return sum(h * (x - a) ** 2 for x, (a, h) in zip(v, terms))

    res = optimize(f, specs, cfg)
    assert res.converged
    for x, (a, _) in zip(res.x, terms):
        assert abs(x - min(max(a, 0.001), 1.0)) <= cfg.min_step


def test_determinism():
    f = lambda v: _coupled(*v)  # noqa: E731
    a = optimize(f, [ParamSpec("x"), ParamSpec("y")])
    b = optimize(f, [ParamSpec("x"), ParamSpec("y")])
    assert [(r.params, r.cost, r.move, r.accepted) for r in a.trace] == \
        [(r.params, r.cost, r.move, r.accepted) for r in b.trace]


def test_trace_moves_and_first_exploration():
    res = optimize(lambda v: (v[0] - 0.3) ** 2, [ParamSpec("x")])
    # Step 0.999/8 from 0.5: + is worse, - is better and accepted.
    assert res.trace[1].move == EXPLORATORY and res.trace[1].params[0] == pytest.approx(0.5 + 0.999 / 8)
    assert not res.trace[1].accepted
    assert res.trace[2].params[0] == pytest.approx(0.5 - 0.999 / 8) and res.trace[2].accepted
    assert res.trace[3].move == PATTERN


@pytest.mark.parametrize("bad", [math.nan, math.inf, "x"])
def test_non_finite_cost(bad):
    with pytest.raises(NonFiniteCostError) as info:
        optimize(lambda v: bad if v[0] < 0.4 else 1.0, [ParamSpec("x")])
    assert info.value.vector[0] < 0.4


def test_budget_exhaustion_is_flagged():
    res = optimize(lambda v: (v[0] - 0.3) ** 2, [ParamSpec("x")], OptimizerConfig(max_evaluations=5))
    assert res.budget_exhausted and not res.converged
    assert res.evaluations == 5
    assert res.cost == min(r.cost for r in res.trace)
    res = optimize(lambda v: 1.0, [ParamSpec("x")], OptimizerConfig(max_evaluations=1))
    assert res.budget_exhausted and res.x == (0.5,)


def test_flat_objective_terminates():
    res = optimize(lambda v: 1.0, [ParamSpec("x")])
    assert res.converged and res.x == (0.5,)
    assert all(not r.accepted for r in res.trace[1:])


def test_workers_agree_with_serial():
    specs = [ParamSpec("x"), ParamSpec("y")]
    serial = optimize(lambda v: _coupled(*v), specs)
    parallel = optimize(lambda v: _coupled(*v), specs, OptimizerConfig(workers=2))
    assert parallel.x == pytest.approx(serial.x, abs=2e-4)
    _check_trace(parallel, specs)
    again = optimize(lambda v: _coupled(*v), specs, OptimizerConfig(workers=2))
    assert [r.params for r in again.trace] == [r.params for r in parallel.trace]


def test_param_spec_validation():
    assert ParamSpec("x").initial_step == pytest.approx(0.999 / 8)
    for kwargs in ({"lower": 1.0, "upper": 0.5}, {"initial": 2.0}, {"initial_step": 0.0}):
        with pytest.raises(ValueError):
            ParamSpec("x", **kwargs)
    with pytest.raises(ValueError):
        OptimizerConfig(step_reduction_factor=1.0)
    with pytest.raises(ValueError):
        optimize(lambda v: 0.0, [])


def test_map_params_examples():
    wall = baseline_reunion_wall()
    assert map_params(wall, LAYER_INDEX["concrete"], [0.2032]) == wall
    assert map_params(wall, LAYER_INDEX["wood"], [0.100]).layers[0].thickness == 0.1
    assert map_params(wall, LAYER_INDEX["insulation"], [0.100]).layers[1].thickness == 0.1
    both = map_params(wall, [0, 2], [0.05, 0.3])
    assert (both.layers[0].thickness, both.layers[2].thickness) == (0.05, 0.3)
    with pytest.raises(ValueError):
        map_params(wall, 2, [0.1, 0.2])
    with pytest.raises(ValueError):
        map_params(wall, 2, [1.5])


def test_trace_csv_round_trip(tmp_path):
    res = optimize(lambda v: _coupled(*v), [ParamSpec("x"), ParamSpec("y")])
    res.trace.write_csv(tmp_path / "t.csv")
    back = read_trace(tmp_path / "t.csv")
    assert back.names == ("x", "y")
    assert [(r.index, r.params, r.cost, r.move, r.accepted) for r in back] == \
        [(r.index, r.params, r.cost, r.move, r.accepted) for r in res.trace]
    assert (tmp_path / "t.csv").read_text().splitlines()[0] == "eval,x,y,cost,move,accepted"


def test_read_trace_errors(tmp_path):
    (tmp_path / "empty.csv").write_text("")
    with pytest.raises(TraceFormatError, match="empty"):
        read_trace(tmp_path / "empty.csv")
    (tmp_path / "head.csv").write_text("eval,x,cost,move,accepted\n")
    with pytest.raises(TraceFormatError, match="no evaluations"):
        read_trace(tmp_path / "head.csv")
    (tmp_path / "bad.csv").write_text("eval,x,cost,move,accepted\n0,0.5,abc,initial,1\n")
    with pytest.raises(TraceFormatError, match=":2:"):
        read_trace(tmp_path / "bad.csv")
