"""Run entry points: argument checking, engine selection, stats assembly.

The compiled evaluator is used when its extension imported cleanly;
setting STAIRCASE_PURE=1 forces the pure-Python one. Both implement the
same tape semantics.
"""
from __future__ import annotations

import os
import time
from dataclasses import dataclass

from staircase.errors import (
    ArityMismatch,
    MissingMain,
    ModeUnsupported,
    TypeMismatch,
)
from staircase.interp import _evalpy
from staircase.interp.buffer import Buffer, wrap_int
from staircase.interp.stats import ExecStats, cost, fold_tally, new_tally
from staircase.interp.tape import FuncTape, compile_module
from staircase.ir.core import Operation
from staircase.ir.verify import verify_or_raise

if os.environ.get("STAIRCASE_PURE", "") == "1":
    _engine = _evalpy
else:
    try:
        from staircase.interp import _evalcy as _engine
    except ImportError:
        _engine = _evalpy

ENGINE_NAME = "compiled" if _engine is not _evalpy else "pure"

_MODES = ("sequential", "worksharing", "gpu_emulated")


@dataclass(frozen=True)
class ExecMode:
    kind: str = "sequential"
    workers: int = 1


def _normalize_mode(mode, workers: int) -> tuple:
    if isinstance(mode, ExecMode):
        mode, workers = mode.kind, mode.workers
    if mode not in _MODES:
        raise ModeUnsupported(
            f"unknown mode {mode!r}; expected one of {_MODES}"
        )
    if workers < 1:
        raise ModeUnsupported(f"workers must be at least 1, got {workers}")
    return mode, workers


def _check_args(tape: FuncTape, args) -> list:
    if len(args) != len(tape.param_types):
        raise ArityMismatch(
            f"@{tape.name} takes {len(tape.param_types)} arguments, "
            f"got {len(args)}"
        )
    values = []
    for i, (ty, arg) in enumerate(zip(tape.param_types, args)):
        if ty.kind == "memref":
            if not isinstance(arg, Buffer):
                raise TypeMismatch(
                    f"argument {i} of @{tape.name} is {ty}, needs a Buffer"
                )
            if arg.shape != ty.shape or arg.dtype != ty.element.kind:
                raise TypeMismatch(
                    f"argument {i} of @{tape.name} is {ty}, got {arg!r}"
                )
            values.append(arg)
        elif ty.kind in ("f32", "f64"):
            if isinstance(arg, bool) or not isinstance(arg, (int, float)):
                raise TypeMismatch(
                    f"argument {i} of @{tape.name} is {ty}, needs a number"
                )
            v = float(arg)
            values.append(_evalpy.to_f32(v) if ty.kind == "f32" else v)
        elif ty.kind == "i1":
            values.append(1 if arg else 0)
        else:  # i32/i64/index
            if isinstance(arg, bool) or not isinstance(arg, int):
                raise TypeMismatch(
                    f"argument {i} of @{tape.name} is {ty}, needs an integer"
                )
            width = "i32" if ty.kind == "i32" else "i64"
            values.append(wrap_int(arg, width))
    return values


def run(module: Operation, func_name: str, args, mode="sequential",
        workers: int = 1, engine=None):
    """Execute @func_name over args; returns (results, ExecStats)."""
    mode, workers = _normalize_mode(mode, workers)
    verify_or_raise(module)
    program = compile_module(module)
    if func_name not in program or program[func_name].is_kernel:
        raise MissingMain(f"no function @{func_name} in this module")
    tape = program[func_name]
    values = _check_args(tape, args)

    eng = engine or _engine
    regs = [None] * tape.n_regs
    for reg, v in zip(tape.arg_regs, values):
        regs[reg] = v
    tally = new_tally()
    ctx = eng.ExecContext(mode, workers)
    start = time.perf_counter()
    rets = eng.run_tape(program, tape.code, regs, tally, ctx)
    wall = time.perf_counter() - start
    stats = fold_tally(tally, wall, mode, workers)
    return tuple(rets or ()), stats


def run_worksharing(module: Operation, func_name: str, args,
                    workers: int = 2):
    return run(module, func_name, args, mode="worksharing", workers=workers)


__all__ = [
    "ExecMode",
    "ENGINE_NAME",
    "run",
    "run_worksharing",
    "cost",
    "ExecStats",
]
