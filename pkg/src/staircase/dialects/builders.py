"""Typed convenience builders over create_op for the built-in dialects.

Builders insert just before the block's trailing terminator (if any),
auto-insert required terminators into fresh loop/branch bodies, and raise
the specific error types their contracts name before the generic schema
checks would.
"""
from __future__ import annotations

from typing import Iterable, Sequence

from staircase.errors import (
    ArityMismatch,
    DuplicateSymbol,
    InvalidBound,
    RankMismatch,
    SignatureMismatch,
    TypeMismatch,
    UnknownSymbol,
)
from staircase.ir.core import (
    F64,
    I1,
    I64,
    INDEX,
    Attribute,
    Block,
    IRType,
    Location,
    Operation,
    Value,
    array_attr,
    create_op,
    float_attr,
    int_attr,
    str_attr,
    symbol_attr,
    type_attr,
    unit_attr,
)


def _insert(block: Block, name: str, **kw) -> Operation:
    return create_op(block, block.insertion_index(), name, **kw)


def append_terminator(block: Block, name: str, operands=(), location=None) -> Operation:
    return create_op(block, len(block.ops), name, operands=list(operands),
                     location=location)


def top_module(block: Block) -> Operation:
    """The builtin.module transitively containing `block`."""
    op = block.parent_op
    while op.parent is not None:
        op = op.parent.parent_op
    return op


def symbol_table(module: Operation) -> dict:
    """Map of sym_name -> op for symbol-defining ops in the module body."""
    table = {}
    for op in module.body().ops:
        sym = op.attributes.get("sym_name")
        if isinstance(sym, Attribute) and sym.kind == "str":
            table[sym.value] = op
    return table


# ---------------------------------------------------------------------------
# arith


def build_constant(block: Block, value, ty: IRType | None = None,
                   location: Location | None = None) -> Value:
    if ty is None:
        ty = F64 if isinstance(value, float) else I64
    attr = float_attr(value) if ty.is_float else int_attr(value)
    op = _insert(block, "arith.constant", attributes={"value": attr},
                 result_types=[ty], location=location)
    return op.results[0]


def build_index_constant(block: Block, value: int,
                         location: Location | None = None) -> Value:
    return build_constant(block, int(value), INDEX, location)


def build_arith_binop(block: Block, name: str, a: Value, b: Value,
                      location: Location | None = None) -> Value:
    op = _insert(block, name, operands=[a, b], result_types=[a.type],
                 location=location)
    return op.results[0]


def build_cmp(block: Block, operator: str, a: Value, b: Value,
              location: Location | None = None) -> Value:
    from staircase.dialects.schemas import PREDICATE_FOR_OPERATOR

    if operator not in PREDICATE_FOR_OPERATOR:
        raise TypeMismatch(f"unsupported comparison operator {operator!r}")
    fpred, ipred = PREDICATE_FOR_OPERATOR[operator]
    if a.type.is_float:
        name, pred = "arith.cmpf", fpred
    else:
        name, pred = "arith.cmpi", ipred
    op = _insert(block, name, operands=[a, b],
                 attributes={"predicate": str_attr(pred)},
                 result_types=[I1], location=location)
    return op.results[0]


def build_index_cast(block: Block, v: Value, to: IRType,
                     location: Location | None = None) -> Value:
    op = _insert(block, "arith.index_cast", operands=[v], result_types=[to],
                 location=location)
    return op.results[0]


# ---------------------------------------------------------------------------
# scf / affine loops and branches


def build_scf_for(block: Block, lb: Value, ub: Value, step: Value,
                  location: Location | None = None) -> Operation:
    op = _insert(block, "scf.for", operands=[lb, ub, step], region_count=1,
                 location=location)
    op.body().add_arg(INDEX)
    append_terminator(op.body(), "scf.yield", location=location)
    return op


def build_affine_for(block: Block, lb: int, ub: int, step: int = 1,
                     location: Location | None = None) -> Operation:
    if not (isinstance(lb, int) and isinstance(ub, int) and isinstance(step, int)):
        raise InvalidBound("affine loop bounds must be integer literals")
    if ub < lb:
        raise InvalidBound(f"upper bound {ub} is below lower bound {lb}")
    if step < 1:
        raise InvalidBound(f"step must be >= 1, got {step}")
    op = _insert(block, "affine.for",
                 attributes={"lower_bound": int_attr(lb),
                             "upper_bound": int_attr(ub),
                             "step": int_attr(step)},
                 region_count=1, location=location)
    op.body().add_arg(INDEX)
    append_terminator(op.body(), "scf.yield", location=location)
    return op


def build_scf_if(block: Block, cond: Value, with_else: bool = False,
                 location: Location | None = None) -> Operation:
    op = _insert(block, "scf.if", operands=[cond],
                 region_count=2 if with_else else 1, location=location)
    for region in op.regions:
        append_terminator(region.blocks[0], "scf.yield", location=location)
    return op


def build_scf_parallel(block: Block, lbs: Sequence[Value], ubs: Sequence[Value],
                       steps: Sequence[Value],
                       location: Location | None = None) -> Operation:
    if not (len(lbs) == len(ubs) == len(steps)):
        raise ArityMismatch(
            f"bounds arities differ: {len(lbs)} lower, {len(ubs)} upper, "
            f"{len(steps)} steps"
        )
    if len(lbs) == 0:
        raise ArityMismatch("parallel loop needs at least one dimension")
    op = _insert(block, "scf.parallel",
                 operands=list(lbs) + list(ubs) + list(steps),
                 region_count=1, location=location)
    for _ in lbs:
        op.body().add_arg(INDEX)
    append_terminator(op.body(), "scf.yield", location=location)
    return op


# ---------------------------------------------------------------------------
# memref


def build_memref_alloc(block: Block, ty: IRType, stack: bool = False,
                       location: Location | None = None) -> Value:
    name = "memref.alloca" if stack else "memref.alloc"
    op = _insert(block, name, result_types=[ty], location=location)
    return op.results[0]


def build_memref_dealloc(block: Block, buffer: Value,
                         location: Location | None = None) -> Operation:
    return _insert(block, "memref.dealloc", operands=[buffer], location=location)


def build_memref_access(block: Block, kind: str, buffer: Value,
                        indices: Sequence[Value], stored: Value | None = None,
                        location: Location | None = None):
    """kind is 'load' or 'store'; returns the loaded Value or the store op."""
    if buffer.type.kind != "memref":
        raise TypeMismatch(f"expected a memref, got {buffer.type}")
    if len(indices) != buffer.type.rank:
        raise RankMismatch(
            f"{buffer.type} has rank {buffer.type.rank}, got {len(indices)} indices"
        )
    if kind == "load":
        op = _insert(block, "memref.load", operands=[buffer, *indices],
                     result_types=[buffer.type.element], location=location)
        return op.results[0]
    if kind == "store":
        if stored is None:
            raise TypeMismatch("store requires a value")
        if stored.type != buffer.type.element:
            raise TypeMismatch(
                f"cannot store {stored.type} into {buffer.type}"
            )
        return _insert(block, "memref.store", operands=[stored, buffer, *indices],
                       location=location)
    raise ValueError(f"kind must be 'load' or 'store', got {kind!r}")


# ---------------------------------------------------------------------------
# func


def build_func(module: Operation, name: str, param_types: Iterable[IRType],
               result_types: Iterable[IRType] = (),
               location: Location | None = None) -> Operation:
    if name in symbol_table(module):
        raise DuplicateSymbol(f"symbol @{name} already defined in this module")
    result_types = list(result_types)
    op = create_op(module.body(), len(module.body().ops), "func.func",
                   attributes={"sym_name": str_attr(name),
                               "results": array_attr(type_attr(t) for t in result_types)},
                   region_count=1, location=location)
    for t in param_types:
        op.body().add_arg(t)
    if not result_types:
        append_terminator(op.body(), "func.return", location=location)
    return op


def build_call(block: Block, callee: Operation, args: Sequence[Value],
               location: Location | None = None) -> Operation:
    results = [a.value for a in callee.attributes["results"].value]
    return _insert(block, "func.call", operands=list(args),
                   attributes={"callee": symbol_attr(callee.attributes["sym_name"].value)},
                   result_types=results, location=location)


# ---------------------------------------------------------------------------
# gpu


def build_gpu_module(module: Operation, name: str,
                     location: Location | None = None) -> Operation:
    if name in symbol_table(module):
        raise DuplicateSymbol(f"symbol @{name} already defined in this module")
    op = create_op(module.body(), 0, "gpu.module",
                   attributes={"sym_name": str_attr(name)}, region_count=1,
                   location=location)
    module.attributes.setdefault("gpu.container_module", unit_attr())
    return op


def build_gpu_func(gpu_module: Operation, name: str,
                   param_types: Iterable[IRType],
                   func_attributes: dict | None = None,
                   location: Location | None = None) -> Operation:
    if name in {o.attributes.get("sym_name") and o.attributes["sym_name"].value
                for o in gpu_module.body().ops}:
        raise DuplicateSymbol(f"kernel @{name} already defined in this gpu.module")
    attrs = {"sym_name": str_attr(name), "kernel": unit_attr()}
    if func_attributes:
        attrs.update(func_attributes)
    op = create_op(gpu_module.body(), len(gpu_module.body().ops), "gpu.func",
                   attributes=attrs, region_count=1, location=location)
    for t in param_types:
        op.body().add_arg(t)
    append_terminator(op.body(), "gpu.return", location=location)
    return op


def build_gpu_id(block: Block, which: str, dim: str,
                 location: Location | None = None) -> Value:
    op = _insert(block, f"gpu.{which}", attributes={"dimension": str_attr(dim)},
                 result_types=[INDEX], location=location)
    return op.results[0]


def resolve_kernel(module: Operation, module_sym: str, kernel_sym: str) -> Operation:
    gpu_mod = symbol_table(module).get(module_sym)
    if gpu_mod is None or gpu_mod.name != "gpu.module":
        raise UnknownSymbol(f"no gpu.module @{module_sym} in this module")
    for op in gpu_mod.body().ops:
        if op.name == "gpu.func" and op.attributes["sym_name"].value == kernel_sym:
            return op
    raise UnknownSymbol(f"no kernel @{kernel_sym} in gpu.module @{module_sym}")


def build_gpu_launch(block: Block, module_sym: str, kernel_sym: str,
                     grid: Sequence[Value], blocks: Sequence[Value],
                     args: Sequence[Value],
                     location: Location | None = None) -> Operation:
    kernel = resolve_kernel(top_module(block), module_sym, kernel_sym)
    if len(grid) != 3 or len(blocks) != 3:
        raise ArityMismatch("grid and block sizes are three index values each")
    expected = [a.type for a in kernel.body().args]
    got = [a.type for a in args]
    if expected != got:
        raise SignatureMismatch(
            f"kernel @{kernel_sym} takes {expected}, launch passes {got}"
        )
    return _insert(block, "gpu.launch_func",
                   operands=[*grid, *blocks, *args],
                   attributes={"kernel": symbol_attr(module_sym, kernel_sym)},
                   location=location)
