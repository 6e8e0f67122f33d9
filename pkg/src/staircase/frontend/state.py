"""Capture-local state: the insertion stack and the active capture handle.

One capture runs at a time (captures never nest; a GPU kernel materialized
mid-capture shares the active capture's stack as an extra frame). Markers
and proxy operators reach the active capture through module-level
functions here.
"""
from __future__ import annotations

import sys
from dataclasses import dataclass, field

from staircase.errors import CaptureError, CaptureLeak, UnbalancedMarkers
from staircase.ir.core import (
    Block,
    Context,
    Location,
    Operation,
    Value,
    create_op,
    value_visible_at,
)


@dataclass
class Frame:
    """One insertion scope: the function/kernel body or an open region."""

    kind: str          # "func" | "kernel" | "for" | "parallel" | "if"
    op: Operation
    block: Block
    filename: str = ""
    arm: str = "then"          # for "if" frames
    arm_ended: bool = False    # set by the branch-end marker


class Capture:
    def __init__(self, ctx: Context, module: Operation, filename: str):
        self.ctx = ctx
        self.module = module
        self.filename = filename
        self.stack: list[Frame] = []

    # -- insertion stack ----------------------------------------------------

    def push(self, frame: Frame) -> None:
        if not frame.filename:
            frame.filename = self.stack[-1].filename if self.stack \
                else self.filename
        self.stack.append(frame)

    def pop(self, kinds: tuple[str, ...]) -> Frame:
        if not self.stack or self.stack[-1].kind not in kinds:
            found = self.stack[-1].kind if self.stack else "nothing"
            raise UnbalancedMarkers(
                f"expected an open {' or '.join(kinds)} region, found {found}"
            )
        return self.stack.pop()

    def top(self) -> Frame:
        if not self.stack:
            raise UnbalancedMarkers("no open region")
        return self.stack[-1]

    @property
    def depth(self) -> int:
        return len(self.stack)

    def in_kernel(self) -> bool:
        return any(f.kind == "kernel" for f in self.stack)

    # -- emission -------------------------------------------------------------

    def location(self) -> Location:
        filename = self.stack[-1].filename if self.stack else self.filename
        frame = sys._getframe(1)
        while frame is not None:
            if frame.f_code.co_filename == filename:
                return Location(filename, frame.f_lineno)
            frame = frame.f_back
        return Location(filename, 1)

    def emit(self, name: str, operands=(), attributes=None, result_types=(),
             region_count: int = 0, location: Location | None = None) -> Operation:
        block = self.top().block
        index = block.insertion_index()
        for v in operands:
            if isinstance(v, Value) and not value_visible_at(v, block, index):
                raise CaptureLeak(
                    f"a value defined in an already-closed region is used "
                    f"at {location or self.location()}"
                )
        return create_op(block, index, name, operands=list(operands),
                         attributes=attributes, result_types=list(result_types),
                         region_count=region_count,
                         location=location or self.location())

    def emit_terminator(self, block: Block, name: str,
                        location: Location | None = None) -> Operation:
        return create_op(block, len(block.ops), name, location=location)


_ACTIVE: Capture | None = None


def active() -> Capture:
    if _ACTIVE is None:
        raise CaptureError(
            "staged constructs are only usable inside a capture"
        )
    return _ACTIVE


def begin(capture: Capture) -> None:
    global _ACTIVE
    if _ACTIVE is not None:
        raise CaptureError("captures do not nest")
    if capture.ctx.active_capture is not None:
        raise CaptureError("this Context already has an active capture")
    capture.ctx.active_capture = capture
    _ACTIVE = capture


def end(capture: Capture) -> None:
    global _ACTIVE
    capture.ctx.active_capture = None
    if _ACTIVE is capture:
        _ACTIVE = None
