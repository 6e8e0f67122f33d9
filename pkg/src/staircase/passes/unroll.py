"""Unroll innermost counted loops by an integer factor."""
from __future__ import annotations

from staircase.errors import InvalidFactor
from staircase.ir.core import Operation, clone_op, create_op

from .rewrite import PassOutcome, const_int, index_const, matching_ops, trip_count

_LOOPS = ("scf.for", "affine.for", "scf.parallel")


def _innermost(loop: Operation) -> bool:
    return not any(op.name in _LOOPS for op in loop.walk_nested())


def loop_unroll(root: Operation, factor: int) -> PassOutcome:
    """Unroll innermost scf.for loops with constant bounds by `factor`.

    When the factor divides the trip count, the step is multiplied by the
    factor and the body is cloned factor times with the induction variable
    substituted i, i+step, ..., i+(factor-1)*step. Loops it cannot prove
    divisible (or whose bounds are not constants) are left untouched and
    counted as skipped; no epilogue is generated. Factor 1 is the
    identity.
    """
    if not isinstance(factor, int) or isinstance(factor, bool) or factor < 1:
        raise InvalidFactor(f"unroll factor must be an integer >= 1, got {factor!r}")
    out = PassOutcome()
    if factor == 1:
        return out
    for loop in matching_ops(root, ("scf.for",)):
        if not _innermost(loop):
            continue
        lb, ub, step = (const_int(v) for v in loop.operands)
        if lb is None or ub is None or step is None or step < 1:
            out.skipped += 1
            continue
        if trip_count(lb, ub, step) % factor:
            out.skipped += 1
            continue
        loc = loop.location
        widened = index_const(loop.parent, loop.block_index(), step * factor, loc)
        loop.set_operand(2, widened)
        body = loop.body()
        induction = body.args[0]
        originals = list(body.ops)[:-1]  # everything but the terminator
        induction_used = bool(induction.uses)
        for k in range(1, factor):
            remap: dict = {}
            if induction_used:
                offset = index_const(body, len(body.ops) - 1, k * step, loc)
                shifted = create_op(body, len(body.ops) - 1, "arith.addi",
                                    [induction, offset], {}, [induction.type], 0, loc)
                remap[induction] = shifted.results[0]
            for op in originals:
                clone_op(op, body, len(body.ops) - 1, remap)
        out.rewrites += 1
    return out
