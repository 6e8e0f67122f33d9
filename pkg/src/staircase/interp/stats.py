"""Execution statistics and the desk-scale cost model.

The weights make loop restructuring observable (memory traffic is worth
a few arithmetic ops, loop bookkeeping is worth many); they are not
calibrated to any hardware.
"""
from __future__ import annotations

from dataclasses import dataclass, field

from staircase.interp.tape import (
    ARITH_OPCODES,
    LOAD,
    N_OPCODES,
    OPCODE_PREFIX,
    STORE,
)

DEFAULT_WEIGHTS = {"arith": 1.0, "memory": 4.0, "bookkeeping": 50.0}


@dataclass
class ExecStats:
    """Dynamic counts from one run: exact and repeatable in sequential mode."""

    total: int = 0
    per_prefix: dict = field(default_factory=dict)
    arith_ops: int = 0
    loads: int = 0
    stores: int = 0
    bookkeeping: int = 0
    wall_time: float = 0.0
    mode: str = "sequential"
    workers: int = 1

    def merge_counts(self, other: "ExecStats") -> None:
        self.total += other.total
        self.arith_ops += other.arith_ops
        self.loads += other.loads
        self.stores += other.stores
        self.bookkeeping += other.bookkeeping
        for k, v in other.per_prefix.items():
            self.per_prefix[k] = self.per_prefix.get(k, 0) + v


def new_tally() -> list:
    """Per-opcode execution counters plus a bookkeeping slot at the end."""
    return [0] * (N_OPCODES + 1)


def fold_tally(tally, wall_time: float, mode: str, workers: int) -> ExecStats:
    stats = ExecStats(wall_time=wall_time, mode=mode, workers=workers)
    for opcode in range(N_OPCODES):
        n = tally[opcode]
        if n == 0:
            continue
        prefix = OPCODE_PREFIX[opcode]
        if prefix is None:
            continue
        stats.total += n
        stats.per_prefix[prefix] = stats.per_prefix.get(prefix, 0) + n
        if opcode in ARITH_OPCODES:
            stats.arith_ops += n
    stats.loads = tally[LOAD]
    stats.stores = tally[STORE]
    stats.bookkeeping = tally[N_OPCODES]
    return stats


def cost(stats: ExecStats, model: dict | None = None) -> float:
    w = DEFAULT_WEIGHTS if model is None else model
    return (
        w.get("arith", 0.0) * stats.arith_ops
        + w.get("memory", 0.0) * (stats.loads + stats.stores)
        + w.get("bookkeeping", 0.0) * stats.bookkeeping
    )
