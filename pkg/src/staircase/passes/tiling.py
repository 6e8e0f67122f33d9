"""Tile parallel loops into tile-origin/intra-tile-offset nests."""
from __future__ import annotations

from staircase.errors import ArityMismatch, InvalidFactor
from staircase.ir.core import (
    Operation,
    create_op,
    erase_op,
    move_op,
    replace_all_uses_with,
)

from .rewrite import PassOutcome, const_int, index_const, matching_ops, trip_count


def scf_parallel_loop_tiling(root: Operation, sizes) -> PassOutcome:
    """Split each scf.parallel under `root` into an outer loop over tile
    origins and an inner loop over offsets within a tile.

    Fewer sizes than loop dimensions pad on the left with 1s, so (8, 8)
    tiles the two innermost dimensions of a 4-D loop; more sizes than
    dimensions is an ArityMismatch. Loops with non-constant bounds, or
    where a size does not divide the dimension's trip count, are skipped
    whole (no partial tiles). The body index is rebuilt as origin + offset
    and a mapping attribute, if present, stays on the outer loop.
    """
    sizes = list(sizes)
    if not sizes:
        raise InvalidFactor("need at least one tile size")
    for size in sizes:
        if not isinstance(size, int) or isinstance(size, bool) or size < 1:
            raise InvalidFactor(f"tile sizes must be integers >= 1, got {size!r}")
    out = PassOutcome()
    for loop in matching_ops(root, ("scf.parallel",)):
        arity = len(loop.body().args)
        if len(sizes) > arity:
            raise ArityMismatch(
                f"{len(sizes)} tile sizes for a {arity}-dimensional parallel loop"
            )
        tile = [1] * (arity - len(sizes)) + sizes
        lbs = loop.operands[:arity]
        ubs = loop.operands[arity:2 * arity]
        steps = loop.operands[2 * arity:]
        lo = [const_int(v) for v in lbs]
        hi = [const_int(v) for v in ubs]
        st = [const_int(v) for v in steps]
        if any(v is None for v in lo + hi + st) or any(s < 1 for s in st):
            out.skipped += 1
            continue
        trips = [trip_count(*b) for b in zip(lo, hi, st)]
        if any(t % z for t, z in zip(trips, tile)):
            out.skipped += 1
            continue
        block, loc = loop.parent, loop.location
        at = loop.block_index()
        zero = index_const(block, at, 0, loc)
        at += 1
        spans = []  # tile size in index units; outer step and inner bound
        for z, s in zip(tile, st):
            spans.append(index_const(block, at, z * s, loc))
            at += 1
        outer = create_op(block, at, "scf.parallel",
                          [*lbs, *ubs, *spans], dict(loop.attributes), [], 1, loc)
        outer_body = outer.body()
        origins = [outer_body.add_arg(zero.type) for _ in range(arity)]
        inner = create_op(outer_body, 0, "scf.parallel",
                          [*[zero] * arity, *spans, *steps], {}, [], 1, loc)
        create_op(outer_body, 1, "scf.yield", [], {}, [], 0, loc)
        inner_body = inner.body()
        offsets = [inner_body.add_arg(zero.type) for _ in range(arity)]
        combined = []
        for d in range(arity):
            add = create_op(inner_body, d, "arith.addi",
                            [origins[d], offsets[d]], {}, [zero.type], 0, loc)
            combined.append(add.results[0])
        old_body = loop.body()
        at_inner = arity
        for op in list(old_body.ops):
            move_op(op, inner_body, at_inner)
            at_inner += 1
        for d in range(arity):
            replace_all_uses_with(old_body.args[d], combined[d])
        erase_op(loop)
        out.rewrites += 1
    return out
