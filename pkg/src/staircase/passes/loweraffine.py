"""Rewrite affine.for loops into scf.for with explicit bound values."""
from __future__ import annotations

from staircase.ir.core import (
    Operation,
    create_op,
    erase_op,
    move_op,
    replace_all_uses_with,
)

from .rewrite import PassOutcome, index_const, matching_ops


def lower_affine(root: Operation) -> PassOutcome:
    """Replace every affine.for under `root` with an scf.for.

    The attribute bounds become arith.constant index values right before
    the new loop, the body moves over intact, and every use of the old
    induction variable is redirected to the new one. Total: any verified
    input lowers without errors.
    """
    done = 0
    for loop in matching_ops(root, ("affine.for",)):
        block = loop.parent
        at = loop.block_index()
        loc = loop.location
        lb = index_const(block, at, loop.attributes["lower_bound"].value, loc)
        ub = index_const(block, at + 1, loop.attributes["upper_bound"].value, loc)
        step = index_const(block, at + 2, loop.attributes["step"].value, loc)
        lowered = create_op(block, at + 3, "scf.for", [lb, ub, step], {}, [], 1, loc)
        body = lowered.body()
        induction = body.add_arg(lb.type)
        old_body = loop.body()
        for op in list(old_body.ops):
            move_op(op, body, len(body.ops))
        replace_all_uses_with(old_body.args[0], induction)
        erase_op(loop)
        done += 1
    return PassOutcome(rewrites=done)
