"""Deterministic random module builder for round-trip and pass tests.

Builds structurally valid modules out of the core dialects with a seeded
RNG: nested counted loops, conditionals, parallel nests, arithmetic
chains, and memory traffic. Every module is verified before it is
returned, so a failure here is a generator bug, not test noise.
"""
import random

from staircase.dialects.builders import build_func
from staircase.ir.core import (
    F64,
    I64,
    INDEX,
    IRType,
    create_context,
    create_op,
    create_module,
    float_attr,
    int_attr,
    str_attr,
    memref_type,
)
from staircase.ir.verify import verify_or_raise

_BINOPS_F = ("arith.addf", "arith.subf", "arith.mulf")
_BINOPS_I = ("arith.addi", "arith.subi", "arith.muli")


class _Scope:
    """Values visible at the current insertion point, grouped by kind."""

    def __init__(self, parent=None):
        self.parent = parent
        self.values = {"index": [], "f64": [], "i64": [], "i1": [],
                       "memref": []}

    def add(self, value):
        kind = value.type.kind
        if kind in self.values:
            self.values[kind].append(value)

    def all_of(self, kind):
        out = []
        scope = self
        while scope is not None:
            out.extend(scope.values[kind])
            scope = scope.parent
        return out


def _const(block, rng, scope, kind):
    if kind == "index":
        attr, ty = int_attr(rng.randrange(0, 8)), INDEX
    elif kind == "i64":
        attr, ty = int_attr(rng.randrange(-30, 30)), I64
    else:
        attr, ty = float_attr(round(rng.uniform(-4.0, 4.0), 3)), F64
    op = create_op(block, block.insertion_index(), "arith.constant",
                   attributes={"value": attr}, result_types=[ty])
    scope.add(op.results[0])
    return op.results[0]


def _ensure(block, rng, scope, kind, n=1):
    values = scope.all_of(kind)
    while len(values) < n:
        _const(block, rng, scope, kind)
        values = scope.all_of(kind)
    return values


def _emit_flat(block, rng, scope):
    """One non-region op appended to block."""
    roll = rng.random()
    if roll < 0.25:
        _const(block, rng, scope, rng.choice(("index", "i64", "f64")))
        return
    if roll < 0.45:
        kind, names = (("f64", _BINOPS_F) if rng.random() < 0.6
                       else ("i64", _BINOPS_I))
        vals = _ensure(block, rng, scope, kind, 2)
        op = create_op(block, block.insertion_index(), rng.choice(names),
                       operands=[rng.choice(vals), rng.choice(vals)],
                       result_types=[vals[0].type])
        scope.add(op.results[0])
        return
    if roll < 0.55:
        vals = _ensure(block, rng, scope, "f64", 2)
        op = create_op(block, block.insertion_index(), "arith.cmpf",
                       operands=[rng.choice(vals), rng.choice(vals)],
                       attributes={"predicate": str_attr("olt")},
                       result_types=[IRType("i1")])
        scope.add(op.results[0])
        return
    if roll < 0.65:
        vals = _ensure(block, rng, scope, "index", 1)
        op = create_op(block, block.insertion_index(), "arith.index_cast",
                       operands=[rng.choice(vals)], result_types=[I64])
        scope.add(op.results[0])
        return
    memrefs = scope.all_of("memref")
    if not memrefs:
        shape = tuple(rng.randrange(2, 9) for _ in range(rng.randrange(1, 3)))
        op = create_op(block, block.insertion_index(),
                       rng.choice(("memref.alloc", "memref.alloca")),
                       result_types=[memref_type(shape, F64)])
        scope.add(op.results[0])
        return
    buf = rng.choice(memrefs)
    idx = _ensure(block, rng, scope, "index", 1)
    indices = [rng.choice(idx) for _ in buf.type.shape]
    if rng.random() < 0.5:
        op = create_op(block, block.insertion_index(), "memref.load",
                       operands=[buf, *indices],
                       result_types=[buf.type.element])
        scope.add(op.results[0])
    else:
        vals = _ensure(block, rng, scope, "f64", 1)
        create_op(block, block.insertion_index(), "memref.store",
                  operands=[rng.choice(vals), buf, *indices])


def _emit_region_op(block, rng, scope, depth):
    roll = rng.random()
    if roll < 0.35:
        lb = _const(block, rng, scope, "index")
        ub = _const(block, rng, scope, "index")
        step_op = create_op(block, block.insertion_index(), "arith.constant",
                            attributes={"value": int_attr(rng.randrange(1, 4))},
                            result_types=[INDEX])
        scope.add(step_op.results[0])
        loop = create_op(block, block.insertion_index(), "scf.for",
                         operands=[lb, ub, step_op.results[0]],
                         region_count=1)
        body = loop.body()
        body.add_arg(INDEX)
        inner = _Scope(scope)
        inner.add(body.args[0])
        _fill_block(body, rng, inner, depth - 1)
        create_op(body, len(body.ops), "scf.yield")
        return
    if roll < 0.55:
        loop = create_op(block, block.insertion_index(), "affine.for",
                         attributes={
                             "lower_bound": int_attr(0),
                             "upper_bound": int_attr(rng.randrange(1, 9)),
                             "step": int_attr(rng.randrange(1, 3)),
                         }, region_count=1)
        body = loop.body()
        body.add_arg(INDEX)
        inner = _Scope(scope)
        inner.add(body.args[0])
        _fill_block(body, rng, inner, depth - 1)
        create_op(body, len(body.ops), "scf.yield")
        return
    if roll < 0.8:
        vals = _ensure(block, rng, scope, "f64", 2)
        cond = create_op(block, block.insertion_index(), "arith.cmpf",
                         operands=[rng.choice(vals), rng.choice(vals)],
                         attributes={"predicate": str_attr(rng.choice(("olt", "ogt")))},
                         result_types=[IRType("i1")])
        branch = create_op(block, block.insertion_index(), "scf.if",
                           operands=[cond.results[0]], region_count=2)
        for region in branch.regions:
            body = region.blocks[0]
            _fill_block(body, rng, _Scope(scope), depth - 1)
            create_op(body, len(body.ops), "scf.yield")
        return
    arity = rng.randrange(1, 3)
    bounds = []
    for _ in range(arity):
        bounds.append(_const(block, rng, scope, "index"))
    ubs = [_const(block, rng, scope, "index") for _ in range(arity)]
    steps = []
    for _ in range(arity):
        op = create_op(block, block.insertion_index(), "arith.constant",
                       attributes={"value": int_attr(rng.randrange(1, 3))},
                       result_types=[INDEX])
        steps.append(op.results[0])
    loop = create_op(block, block.insertion_index(), "scf.parallel",
                     operands=[*bounds, *ubs, *steps], region_count=1)
    body = loop.body()
    inner = _Scope(scope)
    for _ in range(arity):
        inner.add(body.add_arg(INDEX))
    _fill_block(body, rng, inner, depth - 1)
    create_op(body, len(body.ops), "scf.yield")


def _fill_block(block, rng, scope, depth):
    for _ in range(rng.randrange(1, 5)):
        if depth > 0 and rng.random() < 0.4:
            _emit_region_op(block, rng, scope, depth)
        else:
            _emit_flat(block, rng, scope)


def random_module(seed: int, ctx=None):
    rng = random.Random(seed)
    ctx = ctx or create_context()
    module = create_module(ctx)
    n_params = rng.randrange(0, 3)
    params = []
    for _ in range(n_params):
        shape = tuple(rng.randrange(2, 7) for _ in range(rng.randrange(1, 3)))
        params.append(memref_type(shape, F64))
    func = build_func(module, f"gen{seed % 1000}", params)
    body = func.body()
    scope = _Scope()
    for arg in body.args:
        scope.add(arg)
    _fill_block(body, rng, scope, depth=rng.randrange(1, 4))
    verify_or_raise(module)
    return module
