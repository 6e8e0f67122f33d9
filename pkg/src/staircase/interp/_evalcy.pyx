# cython: language_level=3, boundscheck=True, wraparound=False
"""Compiled tape evaluator: a transliteration of _evalpy.

Semantics must stay identical to the pure evaluator; the speedup comes
from C-level dispatch, typed program counters, and native f32/f64
arithmetic. Integer arithmetic stays on Python objects so two's-
complement wrapping matches the pure path bit for bit.
"""
import math
from concurrent.futures import ThreadPoolExecutor
from itertools import islice, product

cimport cython

from staircase.errors import InvalidBound, ModeUnsupported, OutOfBounds
from staircase.interp.buffer import Buffer, wrap_int
from staircase.interp import tape as _t

cdef int CONST = _t.CONST
cdef int BINF = _t.BINF
cdef int BINI = _t.BINI
cdef int CMPF = _t.CMPF
cdef int CMPI = _t.CMPI
cdef int CAST = _t.CAST
cdef int LOAD = _t.LOAD
cdef int STORE = _t.STORE
cdef int ALLOC = _t.ALLOC
cdef int DEALLOC = _t.DEALLOC
cdef int LOOP_INIT_S = _t.LOOP_INIT_S
cdef int LOOP_INIT_A = _t.LOOP_INIT_A
cdef int LOOP_TEST_R = _t.LOOP_TEST_R
cdef int LOOP_TEST_I = _t.LOOP_TEST_I
cdef int LOOP_NEXT_R = _t.LOOP_NEXT_R
cdef int LOOP_NEXT_I = _t.LOOP_NEXT_I
cdef int JUMP = _t.JUMP
cdef int IF_FALSE = _t.IF_FALSE
cdef int PARALLEL = _t.PARALLEL
cdef int CALL = _t.CALL
cdef int RETURN = _t.RETURN
cdef int LAUNCH = _t.LAUNCH
cdef int GPUID = _t.GPUID
cdef int RETURN_GPU = _t.RETURN_GPU


def to_f32(double x):
    return <double><float>x


@cython.cdivision(True)
cdef double _fdiv(double a, double b):
    # C division carries IEEE semantics: inf/nan instead of exceptions
    return a / b


class ExecContext:
    """Per-run execution knobs shared down the call tree."""

    __slots__ = ("mode", "workers", "recorder", "gpu_ids", "depth")

    def __init__(self, mode="sequential", workers=1, recorder=None):
        self.mode = mode
        self.workers = workers
        self.recorder = recorder
        self.gpu_ids = None
        self.depth = 0


cdef void _oob(idx, extent, buf, location) except *:
    where = f" at {location.file}:{location.line}" if location else ""
    raise OutOfBounds(
        f"index {idx} out of bounds for extent {extent} of {buf!r}{where}"
    )


def run_tape(program, tuple code, list regs, list tally, ctx):
    """Execute one tape; returns the RETURN operands (or None for bodies)."""
    rec = ctx.recorder
    cdef int pc = 0
    cdef int n = len(code)
    cdef int op, f, p, k, m
    cdef double fa, fb, fr
    cdef long long off, i
    cdef bint is_f32
    cdef tuple ins, idx
    while pc < n:
        ins = <tuple>code[pc]
        op = <int>ins[0]
        tally[op] = <object>tally[op] + 1
        if op == LOAD:
            buf = regs[<int>ins[2]]
            idx = <tuple>ins[3]
            shape = buf.shape
            strides = buf.strides
            m = len(idx)
            off = 0
            for k in range(m):
                i = regs[<int>idx[k]]
                if i < 0 or i >= <long long>shape[k]:
                    _oob(i, shape[k], buf, ins[4])
                off += i * <long long>strides[k]
            regs[<int>ins[1]] = buf.data[off]
            if rec is not None:
                rec.on_read(buf, off)
        elif op == STORE:
            buf = regs[<int>ins[2]]
            idx = <tuple>ins[3]
            shape = buf.shape
            strides = buf.strides
            m = len(idx)
            off = 0
            for k in range(m):
                i = regs[<int>idx[k]]
                if i < 0 or i >= <long long>shape[k]:
                    _oob(i, shape[k], buf, ins[4])
                off += i * <long long>strides[k]
            v = regs[<int>ins[1]]
            if buf.dtype[0] == "i":
                v = wrap_int(v, buf.dtype)
            buf.data[off] = v
            if rec is not None:
                rec.on_write(buf, off)
        elif op == BINF:
            fa = regs[<int>ins[3]]
            fb = regs[<int>ins[4]]
            f = <int>ins[2]
            if f == 0:
                fr = fa + fb
            elif f == 1:
                fr = fa - fb
            elif f == 2:
                fr = fa * fb
            else:
                fr = _fdiv(fa, fb)
            if <bint>ins[5]:
                fr = <double><float>fr
            regs[<int>ins[1]] = fr
        elif op == BINI:
            a = regs[<int>ins[3]]
            b = regs[<int>ins[4]]
            f = <int>ins[2]
            if f == 0:
                r = a + b
            elif f == 1:
                r = a - b
            else:
                r = a * b
            regs[<int>ins[1]] = wrap_int(r, ins[5])
        elif op == LOOP_TEST_R:
            if regs[<int>ins[1]] >= regs[<int>ins[2]]:
                pc = <int>ins[3]
                continue
            tally[-1] = <object>tally[-1] + 1
        elif op == LOOP_TEST_I:
            if regs[<int>ins[1]] >= ins[2]:
                pc = <int>ins[3]
                continue
            tally[-1] = <object>tally[-1] + 1
        elif op == LOOP_NEXT_R:
            step = regs[<int>ins[2]]
            if step <= 0:
                raise InvalidBound("loop step must be positive at runtime")
            regs[<int>ins[1]] = regs[<int>ins[1]] + step
            pc = <int>ins[3]
            continue
        elif op == LOOP_NEXT_I:
            regs[<int>ins[1]] = regs[<int>ins[1]] + ins[2]
            pc = <int>ins[3]
            continue
        elif op == LOOP_INIT_S:
            regs[<int>ins[1]] = regs[<int>ins[2]]
        elif op == LOOP_INIT_A:
            regs[<int>ins[1]] = ins[2]
        elif op == CONST:
            regs[<int>ins[1]] = ins[2]
        elif op == CMPF:
            fa = regs[<int>ins[3]]
            fb = regs[<int>ins[4]]
            p = <int>ins[2]
            if p == 0:
                r = fa == fb
            elif p == 1:
                r = fa == fa and fb == fb and fa != fb
            elif p == 2:
                r = fa < fb
            elif p == 3:
                r = fa <= fb
            elif p == 4:
                r = fa > fb
            else:
                r = fa >= fb
            regs[<int>ins[1]] = r
        elif op == CMPI:
            a = regs[<int>ins[3]]
            b = regs[<int>ins[4]]
            p = <int>ins[2]
            if p == 0:
                r = a == b
            elif p == 1:
                r = a != b
            elif p == 2:
                r = a < b
            elif p == 3:
                r = a <= b
            elif p == 4:
                r = a > b
            else:
                r = a >= b
            regs[<int>ins[1]] = r
        elif op == CAST:
            v = regs[<int>ins[2]]
            regs[<int>ins[1]] = wrap_int(v, "i32") if ins[3] == "i32" else v
        elif op == IF_FALSE:
            if not regs[<int>ins[1]]:
                pc = <int>ins[2]
                continue
        elif op == JUMP:
            pc = <int>ins[1]
            continue
        elif op == ALLOC:
            regs[<int>ins[1]] = Buffer(ins[2], ins[3])
        elif op == DEALLOC:
            pass
        elif op == PARALLEL:
            _run_parallel(program, ins, regs, tally, ctx)
        elif op == CALL:
            callee = program.funcs[ins[2]]
            sub_regs = [None] * callee.n_regs
            for dst, src in zip(callee.arg_regs, ins[3]):
                sub_regs[dst] = regs[src]
            rets = run_tape(program, callee.code, sub_regs, tally, ctx)
            for dst, v in zip(ins[1], rets or ()):
                regs[dst] = v
        elif op == RETURN or op == RETURN_GPU:
            return tuple([regs[r] for r in ins[1]])
        elif op == LAUNCH:
            _run_launch(program, ins, regs, tally, ctx)
        elif op == GPUID:
            ids = ctx.gpu_ids
            regs[<int>ins[1]] = ids[<int>ins[2] + 3] if <bint>ins[3] \
                else ids[<int>ins[2]]
        pc += 1
    return None


def _spaces(ins, regs):
    lbs = [regs[r] for r in ins[2]]
    ubs = [regs[r] for r in ins[3]]
    steps = [regs[r] for r in ins[4]]
    if any(s <= 0 for s in steps):
        raise InvalidBound("scf.parallel steps must be positive at runtime")
    return [range(l, u, s) for l, u, s in zip(lbs, ubs, steps)]


def _run_parallel(program, ins, regs, list tally, ctx):
    cdef int k
    cdef tuple point
    sub = ins[1]
    spaces = _spaces(ins, regs)
    base = [None] * sub.n_regs
    for outer, inner in sub.captures:
        base[inner] = regs[outer]
    index_regs = sub.index_regs
    total = math.prod(len(s) for s in spaces)

    if ctx.mode == "worksharing" and ctx.workers > 1 and ctx.depth == 0 \
            and total > 1:
        _run_parallel_shared(program, sub, spaces, base, tally, ctx, total)
        return

    rec = ctx.recorder
    outermost = ctx.depth == 0
    ctx.depth += 1
    try:
        sub_regs = list(base)
        sub_code = sub.code
        for point in product(*spaces):
            for k in range(len(index_regs)):
                sub_regs[<int>index_regs[k]] = point[k]
            tally[-1] = <object>tally[-1] + 1
            if rec is not None and outermost:
                rec.begin_point(point)
            run_tape(program, sub_code, sub_regs, tally, ctx)
    finally:
        ctx.depth -= 1
        if rec is not None and outermost:
            rec.end_parallel()


def _run_parallel_shared(program, sub, spaces, base, list tally, ctx, total):
    """Partition the linearized index space into contiguous worker chunks."""
    workers = min(ctx.workers, total)
    bounds = [total * k // workers for k in range(workers + 1)]
    index_regs = sub.index_regs
    tallies = [[0] * len(tally) for _ in range(workers)]

    def chunk(w):
        sub_ctx = ExecContext(ctx.mode, ctx.workers, ctx.recorder)
        sub_ctx.depth = 1
        t = tallies[w]
        sub_regs = list(base)
        for point in islice(product(*spaces), bounds[w], bounds[w + 1]):
            for k, r in enumerate(index_regs):
                sub_regs[r] = point[k]
            t[-1] += 1
            run_tape(program, sub.code, sub_regs, t, sub_ctx)

    with ThreadPoolExecutor(max_workers=workers) as pool:
        futures = [pool.submit(chunk, w) for w in range(workers)]
        for f in futures:
            f.result()
    for t in tallies:
        for i, v in enumerate(t):
            tally[i] += v


def _run_launch(program, ins, regs, list tally, ctx):
    if ctx.mode != "gpu_emulated":
        loc = ins[5]
        where = f" at {loc.file}:{loc.line}" if loc else ""
        raise ModeUnsupported(
            f"gpu.launch_func needs gpu_emulated mode, not "
            f"{ctx.mode!r}{where}"
        )
    kernel = program.funcs[ins[1]]
    grid = [regs[r] for r in ins[2]]
    blocks = [regs[r] for r in ins[3]]
    args = [regs[r] for r in ins[4]]
    saved = ctx.gpu_ids
    try:
        for bx in range(grid[0]):
            for by in range(grid[1]):
                for bz in range(grid[2]):
                    for tx in range(blocks[0]):
                        for ty in range(blocks[1]):
                            for tz in range(blocks[2]):
                                ctx.gpu_ids = (bx, by, bz, tx, ty, tz)
                                tally[-1] = <object>tally[-1] + 1
                                k_regs = [None] * kernel.n_regs
                                for dst, v in zip(kernel.arg_regs, args):
                                    k_regs[dst] = v
                                run_tape(program, kernel.code, k_regs,
                                         tally, ctx)
    finally:
        ctx.gpu_ids = saved
