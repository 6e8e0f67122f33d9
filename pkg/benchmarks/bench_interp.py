"""Compare the compiled evaluator against the pure-Python fallback.

Runs a few captured kernels through both tape evaluators and reports
dynamic events per second plus the speedup. Wall times come from the
interpreter's own ExecStats, so module verification and tape compilation
stay out of the measurement.

    python3 benchmarks/bench_interp.py [--repeat N] [--scale small|full]
"""
import argparse
import random
import statistics
import sys

from staircase import F64, MemRef, parallel, staged
from staircase.interp import Buffer
from staircase.interp import _evalpy
from staircase.interp.machine import run

try:
    from staircase.interp import _evalcy
except ImportError:
    _evalcy = None


@staged(range_ctor="affine_for")
def matmul(a: MemRef[(32, 32), F64], b: MemRef[(32, 32), F64],
           c: MemRef[(32, 32), F64]):
    for i in range(0, 32, 1):
        for j in range(0, 32, 1):
            for k in range(0, 32, 1):
                c[i, j] = c[i, j] + a[i, k] * b[k, j]


@staged
def conv(src: MemRef[(1, 1, 34, 34), F64], flt: MemRef[(1, 2, 3, 3), F64],
         dst: MemRef[(1, 2, 32, 32), F64]):
    for n, co, ho, wo in parallel((0, 0, 0, 0), (1, 2, 32, 32)):
        for ci in range(0, 1, 1):
            for ki in range(0, 3, 1):
                for kj in range(0, 3, 1):
                    dst[n, co, ho, wo] = dst[n, co, ho, wo] + \
                        src[n, ci, ho + ki, wo + kj] * flt[ci, co, ki, kj]


@staged
def saxpy(x: MemRef[(256, 256), F64], y: MemRef[(256, 256), F64]):
    for i, j in parallel((0, 0), (256, 256)):
        y[i, j] = y[i, j] + x[i, j] * 2.0


def _buffers(func_op, rng):
    out = []
    for arg in func_op.body().args:
        ty = arg.type
        data = [rng.uniform(-1.0, 1.0) for _ in range(_size(ty.shape))]
        out.append(Buffer(ty.shape, ty.element.kind, data))
    return out


def _size(shape):
    n = 1
    for s in shape:
        n *= s
    return n


def _bench(staged_fn, engine, repeat, rng):
    times = []
    events = 0
    for _ in range(repeat):
        args = _buffers(staged_fn.func_op, rng)
        _, stats = run(staged_fn.module, staged_fn.__name__, args,
                       engine=engine)
        times.append(stats.wall_time)
        events = stats.total
    return events, statistics.median(times)


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeat", type=int, default=3,
                        help="runs per kernel per engine (median reported)")
    args = parser.parse_args(argv)

    engines = [("pure", _evalpy)]
    if _evalcy is not None:
        engines.append(("compiled", _evalcy))
    else:
        print("compiled evaluator not built; timing the fallback only",
              file=sys.stderr)

    kernels = [matmul, conv, saxpy]
    rng = random.Random(7)
    print(f"{'kernel':<8} {'engine':<9} {'events':>10} {'median s':>10} "
          f"{'events/s':>12}   speedup")
    for fn in kernels:
        base = None
        for name, engine in engines:
            events, wall = _bench(fn, engine, args.repeat, rng)
            rate = events / wall if wall > 0 else float("inf")
            if name == "pure":
                base = wall
                speed = ""
            else:
                speed = f"{base / wall:.1f}x" if wall > 0 else "inf"
            print(f"{fn.__name__:<8} {name:<9} {events:>10} {wall:>10.4f} "
                  f"{rate:>12.0f}   {speed}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
