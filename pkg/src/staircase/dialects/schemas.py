"""Op schemas for the built-in dialects.

Each schema carries a creation-time check (operands, attributes, results)
and optionally a structure check that runs during verification once
regions are populated.
"""
from __future__ import annotations

from staircase.ir.core import (
    I1,
    INDEX,
    Attribute,
    DialectDef,
    DialectRegistry,
    OpSchema,
    Operation,
)

FLOAT_PREDICATES = ("oeq", "one", "olt", "ole", "ogt", "oge")
INT_PREDICATES = ("eq", "ne", "slt", "sle", "sgt", "sge")

# host comparison operator -> (float predicate, signed-int predicate)
PREDICATE_FOR_OPERATOR = {
    "<": ("olt", "slt"),
    "<=": ("ole", "sle"),
    ">": ("ogt", "sgt"),
    ">=": ("oge", "sge"),
    "==": ("oeq", "eq"),
    "!=": ("one", "ne"),
}


def _attr(op: Operation, name: str, kind: str) -> Attribute | None:
    a = op.attributes.get(name)
    if isinstance(a, Attribute) and a.kind == kind:
        return a
    return None


def _check_constant(op: Operation) -> list:
    problems = []
    if op.operands:
        problems.append("takes no operands")
    if len(op.results) != 1:
        return problems + ["produces exactly one result"]
    value = op.attributes.get("value")
    rt = op.results[0].type
    if not isinstance(value, Attribute) or value.kind not in ("int", "float"):
        problems.append("requires an int or float 'value' attribute")
    elif rt.is_float and value.kind != "float":
        problems.append(f"float result {rt} requires a float value")
    elif rt.is_int and value.kind != "int":
        problems.append(f"integer result {rt} requires an integer value")
    elif rt.kind == "memref":
        problems.append("result must be scalar")
    elif rt == I1 and value.value not in (0, 1):
        problems.append("i1 constant must be 0 or 1")
    return problems


def _float_binop(op: Operation) -> list:
    if len(op.operands) != 2 or len(op.results) != 1:
        return ["expects two operands and one result"]
    a, b = (v.type for v in op.operands)
    if a != b:
        return [f"operand types differ: {a} vs {b}"]
    if not a.is_float:
        return [f"expects float operands, got {a}"]
    if op.results[0].type != a:
        return [f"result type {op.results[0].type} must match operands {a}"]
    return []


def _int_binop(op: Operation) -> list:
    if len(op.operands) != 2 or len(op.results) != 1:
        return ["expects two operands and one result"]
    a, b = (v.type for v in op.operands)
    if a != b:
        return [f"operand types differ: {a} vs {b}"]
    if not a.is_int or a == I1:
        return [f"expects integer or index operands, got {a}"]
    if op.results[0].type != a:
        return [f"result type {op.results[0].type} must match operands {a}"]
    return []


def _check_cmpf(op: Operation) -> list:
    problems = []
    if len(op.operands) != 2 or len(op.results) != 1:
        return ["expects two operands and one result"]
    a, b = (v.type for v in op.operands)
    if a != b or not a.is_float:
        problems.append(f"expects two identical float operands, got {a}, {b}")
    pred = _attr(op, "predicate", "str")
    if pred is None or pred.value not in FLOAT_PREDICATES:
        problems.append("requires a 'predicate' attribute in " + str(FLOAT_PREDICATES))
    if op.results[0].type != I1:
        problems.append("result must be i1")
    return problems


def _check_cmpi(op: Operation) -> list:
    problems = []
    if len(op.operands) != 2 or len(op.results) != 1:
        return ["expects two operands and one result"]
    a, b = (v.type for v in op.operands)
    if a != b or not a.is_int:
        problems.append(f"expects two identical integer operands, got {a}, {b}")
    pred = _attr(op, "predicate", "str")
    if pred is None or pred.value not in INT_PREDICATES:
        problems.append("requires a 'predicate' attribute in " + str(INT_PREDICATES))
    if op.results[0].type != I1:
        problems.append("result must be i1")
    return problems


def _check_index_cast(op: Operation) -> list:
    if len(op.operands) != 1 or len(op.results) != 1:
        return ["expects one operand and one result"]
    src, dst = op.operands[0].type, op.results[0].type
    ok = (src == INDEX and dst.kind in ("i32", "i64")) or (
        dst == INDEX and src.kind in ("i32", "i64")
    )
    return [] if ok else [f"casts between index and i32/i64 only, got {src} to {dst}"]


def _check_scf_for(op: Operation) -> list:
    problems = []
    if len(op.operands) != 3:
        problems.append("expects lower bound, upper bound, step operands")
    else:
        for role, v in zip(("lower bound", "upper bound", "step"), op.operands):
            if v.type != INDEX:
                problems.append(f"{role} must be index, got {v.type}")
    if op.results:
        problems.append("carries no results (loop-carried values unsupported)")
    return problems


def _structure_scf_for(op: Operation) -> list:
    args = op.body().args
    if len(args) != 1 or args[0].type != INDEX:
        return ["body must have exactly one index argument"]
    return []


def _check_scf_if(op: Operation) -> list:
    problems = []
    if len(op.operands) != 1 or op.operands[0].type != I1:
        problems.append("condition must be a single i1 value")
    if len(op.regions) not in (1, 2):
        problems.append("takes a then region and an optional else region")
    if op.results:
        problems.append("carries no results")
    return problems


def _structure_scf_if(op: Operation) -> list:
    problems = []
    for region in op.regions:
        if region.blocks[0].args:
            problems.append("branch regions take no arguments")
    return problems


def _check_scf_parallel(op: Operation) -> list:
    problems = []
    if len(op.operands) == 0 or len(op.operands) % 3 != 0:
        problems.append("expects equal-arity lower bounds, upper bounds, steps")
    for v in op.operands:
        if v.type != INDEX:
            problems.append(f"bounds and steps must be index, got {v.type}")
            break
    if op.results:
        problems.append("carries no results (reductions unsupported)")
    return problems


def _structure_scf_parallel(op: Operation) -> list:
    args = op.body().args
    if 3 * len(args) != len(op.operands):
        return ["one body argument per parallel dimension"]
    if any(a.type != INDEX for a in args):
        return ["body arguments must be index"]
    return []


def _check_affine_for(op: Operation) -> list:
    problems = []
    if op.operands:
        problems.append("bounds are attributes, not operands")
    lb = _attr(op, "lower_bound", "int")
    ub = _attr(op, "upper_bound", "int")
    step = _attr(op, "step", "int")
    if lb is None or ub is None or step is None:
        problems.append("requires integer lower_bound, upper_bound, step attributes")
    else:
        if step.value < 1:
            problems.append("step must be >= 1")
        if ub.value < lb.value:
            problems.append("upper bound must be >= lower bound")
    if op.results:
        problems.append("carries no results")
    return problems


def _check_yield(op: Operation) -> list:
    problems = []
    if op.operands:
        problems.append("yields no values in this kit")
    if op.results:
        problems.append("produces no results")
    return problems


def _check_alloc(op: Operation) -> list:
    if op.operands:
        return ["static shapes only: takes no operands"]
    if len(op.results) != 1 or op.results[0].type.kind != "memref":
        return ["produces exactly one memref result"]
    return []


def _check_dealloc(op: Operation) -> list:
    if len(op.operands) != 1 or op.operands[0].type.kind != "memref":
        return ["expects one memref operand"]
    if op.results:
        return ["produces no results"]
    return []


def _check_load(op: Operation) -> list:
    if len(op.operands) < 1 or op.operands[0].type.kind != "memref":
        return ["first operand must be a memref"]
    mt = op.operands[0].type
    problems = []
    if len(op.operands) - 1 != mt.rank:
        problems.append(f"expects {mt.rank} indices for {mt}, got {len(op.operands) - 1}")
    if any(v.type != INDEX for v in op.operands[1:]):
        problems.append("indices must be index-typed")
    if len(op.results) != 1 or (not problems and op.results[0].type != mt.element):
        problems.append(f"result must be the element type {mt.element}")
    return problems


def _check_store(op: Operation) -> list:
    if len(op.operands) < 2 or op.operands[1].type.kind != "memref":
        return ["expects a value then a memref operand"]
    mt = op.operands[1].type
    problems = []
    if op.operands[0].type != mt.element:
        problems.append(
            f"stored value is {op.operands[0].type}, buffer elements are {mt.element}"
        )
    if len(op.operands) - 2 != mt.rank:
        problems.append(f"expects {mt.rank} indices for {mt}, got {len(op.operands) - 2}")
    if any(v.type != INDEX for v in op.operands[2:]):
        problems.append("indices must be index-typed")
    if op.results:
        problems.append("produces no results")
    return problems


def _check_symbol_op(op: Operation) -> list:
    if _attr(op, "sym_name", "str") is None:
        return ["requires a string 'sym_name' attribute"]
    return []


def _check_func(op: Operation) -> list:
    problems = _check_symbol_op(op)
    if op.operands or op.results:
        problems.append("takes no operands and produces no results")
    res = op.attributes.get("results")
    if not isinstance(res, Attribute) or res.kind != "array" or any(
        a.kind != "type" for a in res.value
    ):
        problems.append("requires a 'results' array-of-types attribute")
    return problems


def _structure_func_return(op: Operation) -> list:
    parent = op.parent.parent_op if op.parent is not None else None
    if parent is None or parent.name != "func.func":
        return ["must terminate a func.func body"]
    expected = [a.value for a in parent.attributes["results"].value]
    got = [v.type for v in op.operands]
    if expected != got:
        return [f"returns {got}, function declares {expected}"]
    return []


def _check_call(op: Operation) -> list:
    callee = _attr(op, "callee", "symbol")
    if callee is None or len(callee.value) != 1:
        return ["requires a flat 'callee' symbol attribute"]
    return []


def _check_gpu_func(op: Operation) -> list:
    problems = _check_symbol_op(op)
    if "kernel" not in op.attributes or op.attributes["kernel"].kind != "unit":
        problems.append("requires the 'kernel' unit attribute")
    if op.operands or op.results:
        problems.append("takes no operands and produces no results")
    return problems


def _check_launch(op: Operation) -> list:
    problems = []
    kernel = _attr(op, "kernel", "symbol")
    if kernel is None or len(kernel.value) != 2:
        problems.append("requires a 'kernel' attribute of the form @module::@func")
    if len(op.operands) < 6 or any(v.type != INDEX for v in op.operands[:6]):
        problems.append("first six operands are grid and block sizes (index)")
    if op.results:
        problems.append("produces no results")
    return problems


def _check_id_op(op: Operation) -> list:
    problems = []
    dim = _attr(op, "dimension", "str")
    if dim is None or dim.value not in ("x", "y", "z"):
        problems.append("requires a 'dimension' attribute of x, y, or z")
    if op.operands or len(op.results) != 1 or op.results[0].type != INDEX:
        problems.append("takes no operands and produces one index result")
    return problems


def _check_module(op: Operation) -> list:
    if op.operands or op.results:
        return ["takes no operands and produces no results"]
    return []


def build_dialects() -> list[DialectDef]:
    arith = DialectDef("arith")
    arith.add_op(OpSchema("arith.constant", check_creation=_check_constant))
    for n in ("addf", "subf", "mulf", "divf"):
        arith.add_op(OpSchema(f"arith.{n}", check_creation=_float_binop))
    for n in ("addi", "subi", "muli"):
        arith.add_op(OpSchema(f"arith.{n}", check_creation=_int_binop))
    arith.add_op(OpSchema("arith.cmpf", check_creation=_check_cmpf))
    arith.add_op(OpSchema("arith.cmpi", check_creation=_check_cmpi))
    arith.add_op(OpSchema("arith.index_cast", check_creation=_check_index_cast))

    scf = DialectDef("scf")
    scf.add_op(
        OpSchema(
            "scf.for",
            num_regions=1,
            terminator="scf.yield",
            check_creation=_check_scf_for,
            check_structure=_structure_scf_for,
        )
    )
    scf.add_op(
        OpSchema(
            "scf.if",
            num_regions=1,
            variadic_regions=True,
            terminator="scf.yield",
            check_creation=_check_scf_if,
            check_structure=_structure_scf_if,
        )
    )
    scf.add_op(
        OpSchema(
            "scf.parallel",
            num_regions=1,
            terminator="scf.yield",
            check_creation=_check_scf_parallel,
            check_structure=_structure_scf_parallel,
        )
    )
    scf.add_op(OpSchema("scf.yield", is_terminator=True, check_creation=_check_yield))

    affine = DialectDef("affine")
    affine.add_op(
        OpSchema(
            "affine.for",
            num_regions=1,
            terminator="scf.yield",
            check_creation=_check_affine_for,
            check_structure=_structure_scf_for,
        )
    )

    memref = DialectDef("memref")
    memref.add_op(OpSchema("memref.alloc", check_creation=_check_alloc))
    memref.add_op(OpSchema("memref.alloca", check_creation=_check_alloc))
    memref.add_op(OpSchema("memref.dealloc", check_creation=_check_dealloc))
    memref.add_op(OpSchema("memref.load", check_creation=_check_load))
    memref.add_op(OpSchema("memref.store", check_creation=_check_store))

    func = DialectDef("func")
    func.add_op(
        OpSchema(
            "func.func",
            num_regions=1,
            terminator="func.return",
            check_creation=_check_func,
        )
    )
    func.add_op(
        OpSchema(
            "func.return",
            is_terminator=True,
            check_structure=_structure_func_return,
        )
    )
    func.add_op(OpSchema("func.call", check_creation=_check_call))

    gpu = DialectDef("gpu")
    gpu.add_op(OpSchema("gpu.module", num_regions=1, check_creation=_check_symbol_op))
    gpu.add_op(
        OpSchema(
            "gpu.func",
            num_regions=1,
            terminator="gpu.return",
            check_creation=_check_gpu_func,
        )
    )
    gpu.add_op(OpSchema("gpu.return", is_terminator=True, check_creation=_check_yield))
    gpu.add_op(OpSchema("gpu.launch_func", check_creation=_check_launch))
    gpu.add_op(OpSchema("gpu.block_id", check_creation=_check_id_op))
    gpu.add_op(OpSchema("gpu.thread_id", check_creation=_check_id_op))

    builtin = DialectDef("builtin")
    builtin.add_op(OpSchema("builtin.module", num_regions=1, check_creation=_check_module))

    return [arith, scf, affine, memref, func, gpu, builtin]


def register_builtin_dialects(registry: DialectRegistry) -> None:
    for d in build_dialects():
        registry.register(d)
