"""Derivative-free search over tile sizes and unroll factors.

A search owns one captured kernel module and one fixed set of seeded
inputs.  Every budgeted step instantiates the pipeline template at a
parameter point, runs the transformed module in the interpreter, and
scores it with the static cost model (or wall time when asked).  Trial 0
is always the identity point, so its cost is the untransformed baseline
and ``best.cost <= baseline.cost`` holds by construction.

Two strategies are provided.  ``random`` samples each coordinate
uniformly and independently.  ``one_plus_one_es`` keeps a parent point
and mutates each coordinate with probability one half, moving only on
strict improvement.  Both are pure functions of the seed.
"""
import math
import random

from staircase.errors import (
    EmptySpace,
    MissingMain,
    PassFailure,
    StaircaseError,
    VerificationFailed,
)
from staircase.interp import Buffer, cost as model_cost
from staircase.interp.machine import run
from staircase.ir.core import Operation
from staircase.ir.verify import verify_or_raise
from staircase.passes import run_pipeline
from staircase.tuner.space import ParamSpace, Trial

__all__ = ["default_pipeline", "evaluate", "search"]

_REL_TOL = 1e-6
_ABS_TOL = 1e-9


def default_pipeline(tiles, unroll: int) -> str:
    """Render the pipeline spec for one parameter point.

    The identity point renders an empty pipeline so its trial is exactly
    the baseline: unit tiles add no tiling pass and factor 1 adds no
    unroll pass.  Unrolling is preceded by lower-affine so kernels
    captured with affine loops expose plain counted loops to it.
    """
    items = []
    if any(t != 1 for t in tiles):
        sizes = ", ".join(str(t) for t in tiles)
        items.append("scf-parallel-loop-tiling{sizes=[" + sizes + "]}")
    if unroll != 1:
        items.append("lower-affine")
        items.append("loop-unroll{factor=%d}" % unroll)
    return "builtin.module(func.func(" + ", ".join(items) + "))"


def _resolve_module(kernel) -> Operation:
    module = kernel() if callable(kernel) else kernel
    if not isinstance(module, Operation) or module.name != "builtin.module":
        raise StaircaseError(
            "tuner needs a builtin.module or a factory returning one, "
            f"got {module!r}"
        )
    return module


def _find_func(module: Operation, name: str | None) -> Operation:
    funcs = [op for op in module.body().ops if op.name == "func.func"]
    if name is None:
        if not funcs:
            raise MissingMain("module has no func.func to tune")
        return funcs[0]
    for op in funcs:
        if op.attributes["sym_name"].value == name:
            return op
    raise MissingMain(f"no function named @{name} in module")


def _fresh_argument(ty, rng: random.Random):
    if ty.kind == "memref":
        kind = ty.element.kind
        size = math.prod(ty.shape)
        if ty.element.is_float:
            data = [rng.uniform(-2.0, 2.0) for _ in range(size)]
        elif kind == "i1":
            data = [rng.randrange(2) for _ in range(size)]
        else:
            data = [rng.randrange(-50, 50) for _ in range(size)]
        return Buffer(ty.shape, kind, data)
    if ty.is_float:
        return rng.uniform(-2.0, 2.0)
    if ty.kind == "i1":
        return rng.randrange(2)
    if ty.kind == "index":
        return rng.randrange(0, 8)
    return rng.randrange(-50, 50)


def make_inputs(module: Operation, func: str | None, seed: int) -> list:
    """Deterministic arguments for the named function, same for every trial."""
    func_op = _find_func(module, func)
    rng = random.Random(seed)
    return [_fresh_argument(arg.type, rng) for arg in func_op.body().args]


def _copy_args(args) -> list:
    return [a.copy() if isinstance(a, Buffer) else a for a in args]


def _values_close(got, want) -> bool:
    if isinstance(want, float):
        return math.isclose(got, want, rel_tol=_REL_TOL, abs_tol=_ABS_TOL)
    return got == want


def _state_matches(got_results, got_args, want_results, want_args) -> bool:
    if len(got_results) != len(want_results):
        return False
    for g, w in zip(got_results, want_results):
        if isinstance(w, Buffer):
            if not _buffers_close(g, w):
                return False
        elif not _values_close(g, w):
            return False
    for g, w in zip(got_args, want_args):
        if isinstance(w, Buffer) and not _buffers_close(g, w):
            return False
    return True


def _buffers_close(got, want) -> bool:
    if not isinstance(got, Buffer) or got.shape != want.shape:
        return False
    if want.dtype in ("f32", "f64"):
        return all(
            math.isclose(g, w, rel_tol=_REL_TOL, abs_tol=_ABS_TOL)
            for g, w in zip(got.data, want.data)
        )
    return list(got.data) == list(want.data)


def _digest(stats) -> dict:
    return {
        "total": stats.total,
        "arith": stats.arith_ops,
        "loads": stats.loads,
        "stores": stats.stores,
        "bookkeeping": stats.bookkeeping,
        "wall_time": stats.wall_time,
    }


class _Session:
    """One kernel, one input set, one baseline; evaluates parameter points."""

    def __init__(self, module, func=None, seed=0, objective="model",
                 pipeline_template=None, mode="sequential", workers=1):
        if objective not in ("model", "wall"):
            raise ValueError(f"unknown objective {objective!r}")
        verify_or_raise(module)
        self.module = module
        self.func_op = _find_func(module, func)
        self.func = self.func_op.attributes["sym_name"].value
        self.seed = seed
        self.objective = objective
        self.template = pipeline_template or default_pipeline
        self.mode = mode
        self.workers = workers
        self.inputs = make_inputs(module, self.func, seed)
        args = _copy_args(self.inputs)
        results, stats = run(module, self.func, args, mode="sequential")
        self.want_results = results
        self.want_args = args
        self.baseline_cost = self._score(stats)
        self.baseline_stats = stats

    def _score(self, stats) -> float:
        if self.objective == "wall":
            return stats.wall_time
        return model_cost(stats)

    def trial(self, idx: int, tiles, unroll: int) -> Trial:
        params = {"tiles": [int(t) for t in tiles], "unroll": int(unroll)}
        spec = self.template(params["tiles"], params["unroll"])
        try:
            work, _ = run_pipeline(self.module, spec)
        except (PassFailure, VerificationFailed):
            return Trial(idx, params, None, "skipped", self.seed)
        try:
            args = _copy_args(self.inputs)
            results, stats = run(work, self.func, args,
                                 mode=self.mode, workers=self.workers)
        finally:
            if work in self.module.ctx.modules:
                self.module.ctx.modules.remove(work)
        if not _state_matches(results, args, self.want_results, self.want_args):
            raise StaircaseError(
                f"pipeline {spec!r} changed the results of @{self.func}; "
                "transformed kernels must match the untransformed run"
            )
        return Trial(idx, params, self._score(stats), "evaluated", self.seed,
                     stats=_digest(stats))


def evaluate(kernel, pipeline_template=None, params=None, *, func=None,
             seed=0, objective="model") -> Trial:
    """Score a single parameter point against a freshly run baseline.

    ``params`` holds ``tiles`` (list of ints) and ``unroll``.  Points the
    pipeline rejects come back as skipped trials with no cost; points
    whose transformed kernel disagrees with the baseline raise.
    """
    if params is None:
        raise EmptySpace("evaluate needs a params dict with tiles and unroll")
    module = _resolve_module(kernel)
    session = _Session(module, func=func, seed=seed, objective=objective,
                       pipeline_template=pipeline_template)
    return session.trial(0, params["tiles"], params["unroll"])


def _sample_random(space: ParamSpace, rng: random.Random):
    tiles = [rng.choice(dim) for dim in space.tile_sizes]
    unroll = rng.choice(space.unroll_factors)
    return tiles, unroll


def _mutate(space: ParamSpace, parent, rng: random.Random):
    tiles = list(parent["tiles"])
    unroll = parent["unroll"]
    for axis, dim in enumerate(space.tile_sizes):
        if rng.random() < 0.5:
            tiles[axis] = rng.choice(dim)
    if rng.random() < 0.5:
        unroll = rng.choice(space.unroll_factors)
    return tiles, unroll


def search(kernel, pipeline_template=None, space: ParamSpace | None = None,
           budget: int = 20, seed: int = 0, strategy: str = "random", *,
           func=None, objective="model", mode="sequential", workers=1):
    """Run a budgeted search and return ``(best, log)``.

    The log has exactly ``budget`` trials; trial 0 is the identity point.
    Searches are deterministic: the same seed, space, budget and strategy
    replay the same trial sequence and costs.
    """
    if space is None:
        raise EmptySpace("search needs a ParamSpace")
    if not isinstance(budget, int) or isinstance(budget, bool) or budget < 1:
        raise ValueError(f"budget must be a positive integer, got {budget!r}")
    strategy = {"es": "one_plus_one_es", "1+1-es": "one_plus_one_es"}.get(
        strategy, strategy)
    if strategy not in ("random", "one_plus_one_es"):
        raise ValueError(f"unknown strategy {strategy!r}")

    module = _resolve_module(kernel)
    session = _Session(module, func=func, seed=seed, objective=objective,
                       pipeline_template=pipeline_template,
                       mode=mode, workers=workers)
    identity = space.identity()
    log = [session.trial(0, identity["tiles"], identity["unroll"])]

    rng = random.Random(seed)
    parent = dict(log[0].params)
    parent_cost = log[0].cost
    for idx in range(1, budget):
        if strategy == "random":
            tiles, unroll = _sample_random(space, rng)
        else:
            tiles, unroll = _mutate(space, parent, rng)
        trial = session.trial(idx, tiles, unroll)
        log.append(trial)
        if (strategy == "one_plus_one_es" and trial.status == "evaluated"
                and trial.cost < parent_cost):
            parent = dict(trial.params)
            parent_cost = trial.cost

    evaluated = [t for t in log if t.status == "evaluated"]
    best = min(evaluated, key=lambda t: (t.cost, t.idx))
    return best, log
