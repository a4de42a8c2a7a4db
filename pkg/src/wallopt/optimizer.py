"""Bounded Hooke-Jeeves pattern search with evaluation tracing.

Trial points are clamped to the box, never rejected. The memo cache is keyed
on the exact parameter tuple, so repeated points cost nothing and do not
appear twice in the trace.
"""

from __future__ import annotations

import csv
import math
import threading
from collections.abc import Callable, Sequence
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

from .materials import MAX_THICKNESS, MIN_THICKNESS, WallAssembly, with_layer_thickness

INITIAL = "initial"
EXPLORATORY = "exploratory"
PATTERN = "pattern"


class NonFiniteCostError(ValueError):
    def __init__(self, vector, value):
        super().__init__(f"cost function returned {value!r} at {list(vector)}")
        self.vector = tuple(vector)
        self.value = value


class TraceFormatError(ValueError):
    pass


@dataclass(frozen=True)
class ParamSpec:
    name: str
    lower: float = MIN_THICKNESS
    upper: float = MAX_THICKNESS
    initial: float = 0.5
    initial_step: float | None = None  # default (upper - lower) / 8

    def __post_init__(self):
        if not self.lower < self.upper:
            raise ValueError(f"{self.name}: lower bound must be < upper bound")
        if not self.lower <= self.initial <= self.upper:
            raise ValueError(f"{self.name}: initial value {self.initial} outside [{self.lower}, {self.upper}]")
        if self.initial_step is None:
            object.__setattr__(self, "initial_step", (self.upper - self.lower) / 8.0)
        if not self.initial_step > 0:
            raise ValueError(f"{self.name}: initial_step must be > 0")

    def clamp(self, value: float) -> float:
        return min(max(value, self.lower), self.upper)


@dataclass(frozen=True)
class OptimizerConfig:
    step_reduction_factor: float = 0.5
    min_step: float = 1e-4
    max_evaluations: int = 500
    workers: int = 1  # >1 evaluates the +/- trials of a coordinate concurrently

    def __post_init__(self):
        if not 0 < self.step_reduction_factor < 1:
            raise ValueError("step_reduction_factor must lie in (0, 1)")
        if not self.min_step > 0:
            raise ValueError("min_step must be > 0")
        if self.max_evaluations < 1:
            raise ValueError("max_evaluations must be >= 1")
        if self.workers < 1:
            raise ValueError("workers must be >= 1")


@dataclass
class TraceRecord:
    index: int
    params: tuple[float, ...]
    cost: float
    move: str
    accepted: bool = False


@dataclass
class Trace:
    names: tuple[str, ...]
    records: list[TraceRecord] = field(default_factory=list)

    def __len__(self):
        return len(self.records)

    def __iter__(self):
        return iter(self.records)

    def __getitem__(self, i):
        return self.records[i]

    def best_so_far(self) -> list[float]:
        out, best = [], math.inf
        for r in self.records:
            best = min(best, r.cost)
            out.append(best)
        return out

    def write_csv(self, path) -> None:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["eval", *self.names, "cost", "move", "accepted"])
            for r in self.records:
                w.writerow([r.index, *(repr(v) for v in r.params), repr(r.cost), r.move, int(r.accepted)])


def read_trace(path) -> Trace:
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise TraceFormatError(f"{path}: empty trace file")
    header = rows[0]
    if len(header) < 5 or header[0] != "eval" or header[-3:] != ["cost", "move", "accepted"]:
        raise TraceFormatError(f"{path}:1: bad trace header {header}")
    names = tuple(header[1:-3])
    trace = Trace(names)
    for line, row in enumerate(rows[1:], start=2):
        if len(row) != len(header):
            raise TraceFormatError(f"{path}:{line}: expected {len(header)} fields")
        try:
            rec = TraceRecord(int(row[0]), tuple(float(v) for v in row[1:-3]), float(row[-3]),
                              row[-2], bool(int(row[-1])))
        except ValueError:
            raise TraceFormatError(f"{path}:{line}: malformed trace row") from None
        if rec.move not in (INITIAL, EXPLORATORY, PATTERN):
            raise TraceFormatError(f"{path}:{line}: unknown move {rec.move!r}")
        trace.records.append(rec)
    if not trace.records:
        raise TraceFormatError(f"{path}: trace has no evaluations")
    return trace


@dataclass
class OptimizeResult:
    x: tuple[float, ...]
    cost: float
    trace: Trace
    converged: bool
    budget_exhausted: bool

    @property
    def evaluations(self) -> int:
        return len(self.trace)

    def __iter__(self):
        # Unpacks as (best vector, best cost, trace).
        return iter((self.x, self.cost, self.trace))


class _BudgetExhausted(Exception):
    pass


class _Evaluator:
    """Memoised, budgeted, thread-safe wrapper that appends to the trace."""

    def __init__(self, cost, trace: Trace, budget: int, workers: int):
        self.cost = cost
        self.trace = trace
        self.budget = budget
        self.memo: dict[tuple[float, ...], tuple[float, TraceRecord]] = {}
        self.lock = threading.Lock()
        self.pool = ThreadPoolExecutor(workers) if workers > 1 else None

    def close(self):
        if self.pool is not None:
            self.pool.shutdown()

    def _call(self, x):
        value = self.cost(list(x))
        try:
            value = float(value)
        except (TypeError, ValueError):
            raise NonFiniteCostError(x, value) from None
        if not math.isfinite(value):
            raise NonFiniteCostError(x, value)
        return value

    def many(self, points, move) -> list[tuple[float, TraceRecord]]:
        """Evaluate points in order; new points may run concurrently."""
        results: list = [None] * len(points)
        pending = []
        exhausted = False
        with self.lock:
            for i, p in enumerate(points):
                if p in self.memo:
                    results[i] = self.memo[p]
                elif any(p == q for _, q in pending):
                    continue
                elif len(self.trace.records) + len(pending) >= self.budget:
                    exhausted = True
                    break
                else:
                    pending.append((i, p))
        if self.pool is not None and len(pending) > 1:
            values = list(self.pool.map(self._call, [p for _, p in pending]))
        else:
            values = [self._call(p) for _, p in pending]
        with self.lock:
            for (i, p), v in zip(pending, values):
                rec = TraceRecord(len(self.trace.records), p, v, move)
                self.trace.records.append(rec)
                self.memo[p] = (v, rec)
            for i, p in enumerate(points):
                if results[i] is None and p in self.memo:
                    results[i] = self.memo[p]
        if exhausted:
            raise _BudgetExhausted
        return results

    def one(self, point, move):
        return self.many([point], move)[0]


def optimize(cost: Callable[[list[float]], float], specs: Sequence[ParamSpec],
             config: OptimizerConfig | None = None) -> OptimizeResult:
    """Minimise `cost` over the box defined by `specs` with Hooke-Jeeves.

    The exploratory phase tries +step then -step on each coordinate in order,
    keeping strict improvements; success triggers pattern moves that
    extrapolate base -> new point and explore around the result, kept while
    it improves and moves the base by at least half a step; failure scales
    every step by ``step_reduction_factor``. The search stops after
    an unsuccessful exploration whose steps are all below ``min_step``, or
    when the evaluation budget is spent.
    """
    config = config or OptimizerConfig()
    specs = list(specs)
    if not specs:
        raise ValueError("at least one parameter is required")
    n = len(specs)
    trace = Trace(tuple(s.name for s in specs))
    ev = _Evaluator(cost, trace, config.max_evaluations, config.workers)
    steps = [s.initial_step for s in specs]
    state = {"best_x": None, "best": math.inf}

    def adopt(x, fx, rec):
        if fx < state["best"]:
            state["best"], state["best_x"] = fx, x
            if rec is not None:
                rec.accepted = True

    def clamp(vec):
        return tuple(s.clamp(v) for s, v in zip(specs, vec))

    def explore(base, fbase):
        x, fx = base, fbase
        for i in range(n):
            trials = []
            for sign in (1.0, -1.0):
                t = list(x)
                t[i] = specs[i].clamp(x[i] + sign * steps[i])
                if t[i] != x[i]:
                    trials.append(tuple(t))
            if not trials:
                continue
            if ev.pool is not None and len(trials) == 2:
                (fp, rp), (fm, rm) = ev.many(trials, EXPLORATORY)
                cand = [(fp, 0, trials[0], rp), (fm, 1, trials[1], rm)]
                cand = [c for c in cand if c[0] < fx]
                if cand:
                    f_new, _, t_new, rec = min(cand, key=lambda c: (c[0], c[1]))
                    x, fx = t_new, f_new
                    adopt(x, fx, rec)
                continue
            for t in trials:
                ft, rec = ev.one(t, EXPLORATORY)
                if ft < fx:
                    x, fx = t, ft
                    adopt(x, fx, rec)
                    break
        return x, fx

    converged = exhausted = False
    try:
        base = clamp([s.initial for s in specs])
        fbase, rec = ev.one(base, INITIAL)
        adopt(base, fbase, rec)
        while True:
            x, fx = explore(base, fbase)
            if fx < fbase:
                while True:
                    pattern = clamp([2 * a - b for a, b in zip(x, base)])
                    base, fbase = x, fx
                    if pattern == base:
                        break
                    fp, rec = ev.one(pattern, PATTERN)
                    adopt(pattern, fp, rec)
                    xt, ft = explore(pattern, fp)
                    # A return to within round-off of the base is not progress;
                    # without this the 2x - base extrapolation can creep by ulps forever.
                    moved = any(abs(a - b) > 0.5 * s for a, b, s in zip(xt, base, steps))
                    if ft < fbase and moved:
                        x, fx = xt, ft
                    else:
                        break
                continue
            if all(s < config.min_step for s in steps):
                converged = True
                break
            steps = [s * config.step_reduction_factor for s in steps]
    except _BudgetExhausted:
        exhausted = True
    finally:
        ev.close()
    return OptimizeResult(state["best_x"], state["best"], trace, converged, exhausted)


def map_params(assembly: WallAssembly, active_layer, vector: Sequence[float]) -> WallAssembly:
    """Write optimiser variables into layer thicknesses.

    `active_layer` is one layer index (single-variable run) or a sequence of
    indices, one per entry of `vector`.
    """
    indices = [active_layer] if isinstance(active_layer, int) else list(active_layer)
    if len(indices) != len(vector):
        raise ValueError(f"{len(vector)} values for {len(indices)} active layers")
    for i, v in zip(indices, vector):
        assembly = with_layer_thickness(assembly, i, float(v))
    return assembly
