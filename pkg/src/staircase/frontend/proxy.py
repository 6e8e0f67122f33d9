"""Operator-overloaded handles on SSA values during capture.

Arithmetic between proxies emits one arith op. Mixing a proxy with a host
number materializes an arith.constant typed after the proxy operand.
Subscripting a memref proxy emits loads and stores; integer subscripts
materialize index constants.
"""
from __future__ import annotations

from staircase.errors import RankMismatch, TypeMismatch, UnsupportedConstruct
from staircase.frontend import state
from staircase.ir.core import (
    F64,
    I1,
    I64,
    INDEX,
    IRType,
    Value,
    float_attr,
    int_attr,
    str_attr,
)
from staircase.dialects.schemas import PREDICATE_FOR_OPERATOR

_FLOAT_OPS = {"+": "arith.addf", "-": "arith.subf",
              "*": "arith.mulf", "/": "arith.divf"}
_INT_OPS = {"+": "arith.addi", "-": "arith.subi", "*": "arith.muli"}


def materialize_constant(value, ty: IRType) -> Value:
    cap = state.active()
    if ty.is_float:
        attr = float_attr(float(value))
    else:
        if isinstance(value, float) and not value.is_integer():
            raise TypeMismatch(
                f"cannot use {value!r} where a {ty} value is expected"
            )
        attr = int_attr(int(value))
    op = cap.emit("arith.constant", attributes={"value": attr},
                  result_types=[ty])
    return op.results[0]


def constant(value, ty: IRType | None = None) -> "ValueProxy":
    """Stage a host number as an arith.constant (f64/i64 by default)."""
    if ty is None:
        ty = F64 if isinstance(value, float) else I64
    return ValueProxy(materialize_constant(value, ty))


class ValueProxy:
    __slots__ = ("value",)

    def __init__(self, value: Value):
        self.value = value

    @property
    def type(self) -> IRType:
        return self.value.type

    def __repr__(self) -> str:
        return f"<staged {self.type} value>"

    def __bool__(self):
        raise UnsupportedConstruct(
            "a staged value has no host truth value; conditions must go "
            "through the if rewrite"
        )

    # -- arithmetic -----------------------------------------------------------

    def _coerce(self, other) -> Value:
        if isinstance(other, ValueProxy):
            return other.value
        if isinstance(other, (int, float)) and not isinstance(other, bool):
            return materialize_constant(other, self.type)
        raise TypeMismatch(f"cannot stage operand {other!r}")

    def _binop(self, other, symbol: str, reflected: bool) -> "ValueProxy":
        rhs = self._coerce(other)
        lhs = self.value
        if reflected:
            lhs, rhs = rhs, lhs
        if lhs.type != rhs.type:
            raise TypeMismatch(
                f"operand types differ: {lhs.type} vs {rhs.type}"
            )
        if lhs.type.is_float:
            name = _FLOAT_OPS[symbol]
        elif symbol in _INT_OPS and lhs.type != I1:
            name = _INT_OPS[symbol]
        else:
            raise TypeMismatch(f"no {symbol!r} operation on {lhs.type}")
        op = state.active().emit(name, operands=[lhs, rhs],
                                 result_types=[lhs.type])
        return ValueProxy(op.results[0])

    def __add__(self, other):
        return self._binop(other, "+", False)

    def __radd__(self, other):
        return self._binop(other, "+", True)

    def __sub__(self, other):
        return self._binop(other, "-", False)

    def __rsub__(self, other):
        return self._binop(other, "-", True)

    def __mul__(self, other):
        return self._binop(other, "*", False)

    def __rmul__(self, other):
        return self._binop(other, "*", True)

    def __truediv__(self, other):
        return self._binop(other, "/", False)

    def __rtruediv__(self, other):
        return self._binop(other, "/", True)

    # -- comparison -----------------------------------------------------------

    def _cmp(self, other, operator: str, reflected: bool) -> "ValueProxy":
        rhs = self._coerce(other)
        lhs = self.value
        if reflected:
            lhs, rhs = rhs, lhs
        if lhs.type != rhs.type:
            raise TypeMismatch(
                f"comparison operand types differ: {lhs.type} vs {rhs.type}"
            )
        fpred, ipred = PREDICATE_FOR_OPERATOR[operator]
        if lhs.type.is_float:
            name, pred = "arith.cmpf", fpred
        else:
            name, pred = "arith.cmpi", ipred
        op = state.active().emit(name, operands=[lhs, rhs],
                                 attributes={"predicate": str_attr(pred)},
                                 result_types=[I1])
        return ValueProxy(op.results[0])

    def __lt__(self, other):
        return self._cmp(other, "<", False)

    def __le__(self, other):
        return self._cmp(other, "<=", False)

    def __gt__(self, other):
        return self._cmp(other, ">", False)

    def __ge__(self, other):
        return self._cmp(other, ">=", False)

    def __eq__(self, other):
        return self._cmp(other, "==", False)

    def __ne__(self, other):
        return self._cmp(other, "!=", False)

    __hash__ = None

    # -- memref subscripts ------------------------------------------------------

    def _indices(self, key) -> list[Value]:
        if self.type.kind != "memref":
            raise TypeMismatch(f"{self.type} values are not subscriptable")
        if not isinstance(key, tuple):
            key = (key,)
        if len(key) != self.type.rank:
            raise RankMismatch(
                f"{self.type} has rank {self.type.rank}, got {len(key)} "
                f"index(es)"
            )
        out = []
        for k in key:
            if isinstance(k, ValueProxy):
                if k.type != INDEX:
                    raise TypeMismatch(
                        f"memref subscripts must be index values, got {k.type}"
                    )
                out.append(k.value)
            elif isinstance(k, int) and not isinstance(k, bool):
                out.append(materialize_constant(k, INDEX))
            else:
                raise TypeMismatch(f"cannot index a memref with {k!r}")
        return out

    def __getitem__(self, key) -> "ValueProxy":
        indices = self._indices(key)
        op = state.active().emit("memref.load",
                                 operands=[self.value, *indices],
                                 result_types=[self.type.element])
        return ValueProxy(op.results[0])

    def __setitem__(self, key, item) -> None:
        indices = self._indices(key)
        if isinstance(item, ValueProxy):
            stored = item.value
        elif isinstance(item, (int, float)) and not isinstance(item, bool):
            stored = materialize_constant(item, self.type.element)
        else:
            raise TypeMismatch(f"cannot store {item!r} into {self.type}")
        if stored.type != self.type.element:
            raise TypeMismatch(
                f"cannot store {stored.type} into {self.type}"
            )
        state.active().emit("memref.store",
                            operands=[stored, self.value, *indices])
