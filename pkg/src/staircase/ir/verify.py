"""Structural and SSA verification.

verify() never raises; it walks the tree and returns every problem it can
find as a Diagnostic. Callers that want an exception wrap the result in
VerificationFailed themselves.
"""
from __future__ import annotations

from dataclasses import dataclass, field

from staircase.ir.core import (
    Attribute,
    Location,
    Operation,
    value_dominates_op,
    walk,
)


@dataclass
class Diagnostic:
    message: str
    op_name: str = ""
    location: Location | None = None
    severity: str = "error"

    def __str__(self) -> str:
        loc = ""
        if self.location is not None:
            loc = f" at {self.location}"
        return f"{self.severity}: '{self.op_name}'{loc}: {self.message}"


def _symbol_of(op: Operation) -> str | None:
    attr = op.attributes.get("sym_name")
    if isinstance(attr, Attribute) and attr.kind == "str":
        return attr.value
    return None


def _check_symbols(module: Operation, out: list[Diagnostic]) -> dict:
    table: dict[str, Operation] = {}
    for op in module.body().ops:
        sym = _symbol_of(op)
        if sym is None:
            continue
        if sym in table:
            out.append(Diagnostic(f"duplicate symbol @{sym}", op.name, op.location))
        else:
            table[sym] = op
    return table


def _enclosing(op: Operation, name: str) -> Operation | None:
    cur = op.parent.parent_op if op.parent else None
    while cur is not None:
        if cur.name == name:
            return cur
        cur = cur.parent.parent_op if cur.parent else None
    return cur


def _check_call(op: Operation, table: dict, out: list[Diagnostic]) -> None:
    callee = op.attributes.get("callee")
    if not isinstance(callee, Attribute) or callee.kind != "symbol":
        return  # creation check already flagged it
    target = table.get(callee.value[0])
    if target is None or target.name != "func.func":
        out.append(Diagnostic(f"call to unknown function @{callee.value[0]}",
                              op.name, op.location))
        return
    params = [a.type for a in target.body().args]
    if params != [v.type for v in op.operands]:
        out.append(Diagnostic(
            f"call operand types do not match @{callee.value[0]} parameters",
            op.name, op.location))
    results = [a.value for a in target.attributes["results"].value]
    if results != [r.type for r in op.results]:
        out.append(Diagnostic(
            f"call result types do not match @{callee.value[0]} results",
            op.name, op.location))


def _check_launch(op: Operation, table: dict, out: list[Diagnostic]) -> None:
    kernel = op.attributes.get("kernel")
    if not isinstance(kernel, Attribute) or kernel.kind != "symbol" \
            or len(kernel.value) != 2:
        return
    mod_sym, kern_sym = kernel.value
    gpu_mod = table.get(mod_sym)
    if gpu_mod is None or gpu_mod.name != "gpu.module":
        out.append(Diagnostic(f"launch names unknown gpu.module @{mod_sym}",
                              op.name, op.location))
        return
    target = None
    for cand in gpu_mod.body().ops:
        if cand.name == "gpu.func" and _symbol_of(cand) == kern_sym:
            target = cand
            break
    if target is None:
        out.append(Diagnostic(
            f"launch names unknown kernel @{mod_sym}::@{kern_sym}",
            op.name, op.location))
        return
    params = [a.type for a in target.body().args]
    if params != [v.type for v in op.operands[6:]]:
        out.append(Diagnostic(
            f"launch argument types do not match kernel @{kern_sym}",
            op.name, op.location))


def verify(root: Operation) -> list[Diagnostic]:
    out: list[Diagnostic] = []
    registry = root.ctx.registry

    table = {}
    if root.name == "builtin.module":
        table = _check_symbols(root, out)

    def visit(op: Operation) -> None:
        schema = registry.lookup_op(op.name)
        if schema is None:
            out.append(Diagnostic("unknown operation", op.name, op.location))
            return

        if schema.check_creation is not None:
            for problem in schema.check_creation(op):
                out.append(Diagnostic(problem, op.name, op.location))

        if not schema.variadic_regions and len(op.regions) != schema.num_regions:
            out.append(Diagnostic(
                f"expected {schema.num_regions} regions, found {len(op.regions)}",
                op.name, op.location))

        for region in op.regions:
            if len(region.blocks) != 1:
                out.append(Diagnostic("regions hold exactly one block",
                                      op.name, op.location))
                continue
            block = region.blocks[0]
            if schema.terminator is not None:
                term = block.terminator
                if term is None or term.name != schema.terminator:
                    out.append(Diagnostic(
                        f"region must end with {schema.terminator}",
                        op.name, op.location))
            for i, inner in enumerate(block.ops):
                inner_schema = registry.lookup_op(inner.name)
                if inner_schema and inner_schema.is_terminator \
                        and i != len(block.ops) - 1:
                    out.append(Diagnostic(
                        "terminator is not the last operation in its block",
                        inner.name, inner.location))

        if schema.check_structure is not None:
            for problem in schema.check_structure(op):
                out.append(Diagnostic(problem, op.name, op.location))

        for i, operand in enumerate(op.operands):
            if op not in [use[0] for use in operand.uses]:
                out.append(Diagnostic(
                    f"operand {i} use-list does not record this use",
                    op.name, op.location))
            if not value_dominates_op(operand, op):
                out.append(Diagnostic(
                    f"operand {i} is not visible at this point",
                    op.name, op.location))

        if op.name == "func.call":
            _check_call(op, table, out)
        elif op.name == "gpu.launch_func":
            _check_launch(op, table, out)
        elif op.name in ("gpu.block_id", "gpu.thread_id"):
            if _enclosing(op, "gpu.func") is None:
                out.append(Diagnostic(
                    "only valid inside a gpu.func body", op.name, op.location))

    walk(root, visit)
    return out


def verify_or_raise(root: Operation) -> None:
    from staircase.errors import VerificationFailed

    diags = verify(root)
    if diags:
        raise VerificationFailed(diags)
