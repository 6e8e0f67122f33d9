"""SSA region-based IR: contexts, dialects, types, values, operations.

Structure mirrors the usual region-based IR nesting: operations contain
regions, regions contain blocks, blocks contain argument values and
operations. Only structured control flow is supported, so every region
holds exactly one block.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Iterable, Iterator, Union

from staircase.errors import (
    DominanceViolation,
    DuplicateDialect,
    HasUses,
    TypeMismatch,
    UnknownOperation,
)

# ---------------------------------------------------------------------------
# Types


_SCALAR_KINDS = ("index", "i1", "i32", "i64", "f32", "f64")
_KINDS = _SCALAR_KINDS + ("memref",)


@dataclass(frozen=True)
class IRType:
    """Structural type: a scalar kind or a static-shaped memref of one.

    Equality is structural. Memref extents must be static and >= 1; the
    element must be a scalar kind (no nested memrefs).
    """

    kind: str
    shape: tuple = ()
    element: "IRType | None" = None

    def __post_init__(self):
        if self.kind not in _KINDS:
            raise TypeMismatch(f"unknown type kind {self.kind!r}")
        if self.kind == "memref":
            if self.element is None or self.element.kind == "memref":
                raise TypeMismatch("memref element must be a scalar type")
            if len(self.shape) < 1:
                raise TypeMismatch("memref requires at least one extent")
            for d in self.shape:
                if not isinstance(d, int) or d < 1:
                    raise TypeMismatch(
                        f"memref extents must be static integers >= 1, got {d!r}"
                    )
        elif self.shape or self.element is not None:
            raise TypeMismatch(f"scalar type {self.kind} takes no shape/element")

    @property
    def is_float(self) -> bool:
        return self.kind in ("f32", "f64")

    @property
    def is_int(self) -> bool:
        return self.kind in ("i1", "i32", "i64", "index")

    @property
    def rank(self) -> int:
        return len(self.shape)

    def __str__(self) -> str:
        if self.kind == "memref":
            dims = "x".join(str(d) for d in self.shape)
            return f"memref<{dims}x{self.element}>"
        return self.kind


INDEX = IRType("index")
I1 = IRType("i1")
I32 = IRType("i32")
I64 = IRType("i64")
F32 = IRType("f32")
F64 = IRType("f64")


def memref_type(shape: Iterable[int], element: IRType) -> IRType:
    return IRType("memref", tuple(shape), element)


def scalar_type(kind: str) -> IRType:
    if kind not in _SCALAR_KINDS:
        raise TypeMismatch(f"not a scalar type kind: {kind!r}")
    return IRType(kind)


# ---------------------------------------------------------------------------
# Attributes


_ATTR_KINDS = ("int", "float", "str", "type", "array", "dict", "symbol", "unit")


@dataclass(frozen=True)
class Attribute:
    """Immutable tagged union attached to operations by name.

    kinds: int, float, str, type (IRType), array (tuple of Attribute),
    dict (tuple of sorted (key, Attribute) pairs), symbol (tuple of path
    components, e.g. ("Mod", "kern") prints @Mod::@kern), unit.
    """

    kind: str
    value: object = None

    def __post_init__(self):
        if self.kind not in _ATTR_KINDS:
            raise ValueError(f"unknown attribute kind {self.kind!r}")

    def as_dict(self) -> dict:
        assert self.kind == "dict"
        return dict(self.value)


def int_attr(v: int) -> Attribute:
    return Attribute("int", int(v))


def float_attr(v: float) -> Attribute:
    return Attribute("float", float(v))


def str_attr(v: str) -> Attribute:
    return Attribute("str", str(v))


def type_attr(t: IRType) -> Attribute:
    return Attribute("type", t)


def array_attr(items: Iterable[Attribute]) -> Attribute:
    return Attribute("array", tuple(items))


def dict_attr(entries: dict) -> Attribute:
    return Attribute("dict", tuple(sorted(entries.items())))


def symbol_attr(*parts: str) -> Attribute:
    return Attribute("symbol", tuple(parts))


def unit_attr() -> Attribute:
    return Attribute("unit")


def attr_from(obj) -> Attribute:
    """Convert a plain host value (int/float/str/list/dict/IRType) into an
    Attribute; used for opaque user-supplied attribute dictionaries."""
    if isinstance(obj, Attribute):
        return obj
    if isinstance(obj, bool):
        return int_attr(int(obj))
    if isinstance(obj, int):
        return int_attr(obj)
    if isinstance(obj, float):
        return float_attr(obj)
    if isinstance(obj, str):
        return str_attr(obj)
    if isinstance(obj, IRType):
        return type_attr(obj)
    if isinstance(obj, (list, tuple)):
        return array_attr(attr_from(x) for x in obj)
    if isinstance(obj, dict):
        return dict_attr({k: attr_from(v) for k, v in obj.items()})
    if obj is None:
        return unit_attr()
    raise TypeError(f"cannot convert {obj!r} to an attribute")


# ---------------------------------------------------------------------------
# Locations


@dataclass(frozen=True)
class Location:
    file: str
    line: int = 1
    column: int = 0

    def __post_init__(self):
        if self.line < 1 or self.column < 0:
            raise ValueError("location line must be >= 1 and column >= 0")

    def __str__(self) -> str:
        return f"{self.file}:{self.line}"


# ---------------------------------------------------------------------------
# Values


class Value:
    """An SSA value: the result of an operation or a block argument."""

    __slots__ = ("id", "type", "owner", "index", "uses")

    def __init__(self, vid: int, ty: IRType, owner: Union["Operation", "Block"], index: int):
        self.id = vid
        self.type = ty
        self.owner = owner
        self.index = index
        # (user operation, operand slot) pairs, kept consistent by Operation
        self.uses: list = []

    @property
    def is_block_arg(self) -> bool:
        return isinstance(self.owner, Block)

    @property
    def defining_op(self) -> "Operation | None":
        return self.owner if isinstance(self.owner, Operation) else None

    @property
    def num_uses(self) -> int:
        return len(self.uses)

    def __repr__(self) -> str:
        where = "arg" if self.is_block_arg else "result"
        return f"<Value %{self.id} {self.type} ({where})>"


# ---------------------------------------------------------------------------
# Operations / regions / blocks


class Operation:
    """A named operation with ordered operands, results, regions."""

    def __init__(
        self,
        ctx: "Context",
        name: str,
        operands: list,
        attributes: dict,
        result_types: list,
        region_count: int,
        location: Location | None,
    ):
        self.ctx = ctx
        self.name = name
        self._operands: list[Value] = []
        self.attributes: dict[str, Attribute] = dict(attributes)
        self.location = location
        self.parent: Block | None = None
        self.erased = False
        self.results = [
            Value(ctx.new_value_id(), t, self, i) for i, t in enumerate(result_types)
        ]
        self.regions = [Region(self) for _ in range(region_count)]
        for v in operands:
            self._append_operand(v)

    # -- operand bookkeeping; all mutation goes through these so use lists
    #    stay consistent

    @property
    def operands(self) -> tuple:
        return tuple(self._operands)

    def _append_operand(self, v: Value) -> None:
        if not isinstance(v, Value):
            raise TypeMismatch(f"operand of {self.name} is not a Value: {v!r}")
        self._operands.append(v)
        v.uses.append((self, len(self._operands) - 1))

    def set_operand(self, i: int, v: Value) -> None:
        old = self._operands[i]
        old.uses.remove((self, i))
        self._operands[i] = v
        v.uses.append((self, i))

    def drop_operand_uses(self) -> None:
        for i, v in enumerate(self._operands):
            v.uses.remove((self, i))
        self._operands = []

    # -- structure helpers

    @property
    def dialect(self) -> str:
        return self.name.split(".", 1)[0]

    def body(self, region_index: int = 0) -> "Block":
        return self.regions[region_index].blocks[0]

    def block_index(self) -> int:
        assert self.parent is not None
        return self.parent.ops.index(self)

    def walk_nested(self) -> Iterator["Operation"]:
        """Pre-order over the ops nested inside this op (excludes self)."""
        for region in self.regions:
            for block in region.blocks:
                for op in block.ops:
                    yield op
                    yield from op.walk_nested()

    def __repr__(self) -> str:
        return f"<Operation {self.name} at {self.location}>"


class Region:
    """Ordered blocks owned by an operation; always one block here."""

    def __init__(self, parent_op: Operation):
        self.parent_op = parent_op
        self.blocks: list[Block] = [Block(self)]


class Block:
    """Ordered argument values followed by ordered operations."""

    def __init__(self, parent_region: Region):
        self.parent_region = parent_region
        self.args: list[Value] = []
        self.ops: list[Operation] = []

    @property
    def parent_op(self) -> Operation:
        return self.parent_region.parent_op

    @property
    def ctx(self) -> "Context":
        return self.parent_op.ctx

    def add_arg(self, ty: IRType) -> Value:
        v = Value(self.ctx.new_value_id(), ty, self, len(self.args))
        self.args.append(v)
        return v

    @property
    def terminator(self) -> Operation | None:
        if self.ops:
            last = self.ops[-1]
            schema = last.ctx.registry.lookup_op(last.name)
            if schema is not None and schema.is_terminator:
                return last
        return None

    def insertion_index(self) -> int:
        """Index just before the trailing terminator, if one is present."""
        return len(self.ops) - (1 if self.terminator is not None else 0)


# ---------------------------------------------------------------------------
# Dialect registry


@dataclass
class OpSchema:
    """Static shape of one operation kind.

    check_creation validates operands/attributes/result types at creation
    time and returns a list of problem strings. check_structure runs at
    verification time with regions fully populated.
    """

    name: str
    num_regions: int = 0
    variadic_regions: bool = False
    terminator: str | None = None
    is_terminator: bool = False
    check_creation: Callable[["Operation"], list] | None = None
    check_structure: Callable[["Operation"], list] | None = None


class DialectDef:
    def __init__(self, name: str, ops: Iterable[OpSchema] = ()):
        self.name = name
        self.ops: dict[str, OpSchema] = {}
        for schema in ops:
            self.add_op(schema)

    def add_op(self, schema: OpSchema) -> None:
        assert schema.name.startswith(self.name + "."), schema.name
        self.ops[schema.name] = schema


class DialectRegistry:
    def __init__(self):
        self.dialects: dict[str, DialectDef] = {}

    def register(self, d: DialectDef) -> None:
        if d.name in self.dialects:
            raise DuplicateDialect(f"dialect {d.name!r} is already registered")
        self.dialects[d.name] = d

    def has_dialect(self, name: str) -> bool:
        return name in self.dialects

    def lookup_op(self, op_name: str) -> OpSchema | None:
        dialect = op_name.split(".", 1)[0]
        d = self.dialects.get(dialect)
        if d is None:
            return None
        return d.ops.get(op_name)


# ---------------------------------------------------------------------------
# Context


class Context:
    """Owns dialect registrations, top-level modules, and value ids."""

    def __init__(self):
        self.registry = DialectRegistry()
        self.modules: list[Operation] = []
        self._next_value_id = 0
        # set by the capture machinery while a capture is running
        self.active_capture = None
        from staircase.dialects.schemas import register_builtin_dialects

        register_builtin_dialects(self.registry)

    def new_value_id(self) -> int:
        vid = self._next_value_id
        self._next_value_id += 1
        return vid


def create_context() -> Context:
    return Context()


def register_dialect(ctx: Context, dialect: DialectDef) -> None:
    ctx.registry.register(dialect)


def create_module(ctx: Context, location: Location | None = None) -> Operation:
    module = Operation(ctx, "builtin.module", [], {}, [], 1, location)
    ctx.modules.append(module)
    return module


# ---------------------------------------------------------------------------
# Dominance

def _enclosing_chain(block: Block, index: int):
    """Yield (block, index) frames from the given insertion point outward."""
    b, i = block, index
    while True:
        yield b, i
        parent_op = b.parent_op
        if parent_op.parent is None:
            return
        b = parent_op.parent
        i = b.ops.index(parent_op)


def value_visible_at(value: Value, block: Block, index: int) -> bool:
    """True if `value` dominates the insertion point (block, index)."""
    if value.is_block_arg:
        target = value.owner
        return any(b is target for b, _ in _enclosing_chain(block, index))
    op = value.owner
    if op.erased:
        return False
    for b, i in _enclosing_chain(block, index):
        if op.parent is b:
            return b.ops.index(op) < i
    return False


def value_dominates_op(value: Value, user: Operation) -> bool:
    if user.parent is None:
        return False
    return value_visible_at(value, user.parent, user.block_index())


# ---------------------------------------------------------------------------
# Core mutation operations


def create_op(
    block: Block,
    insert_index: int,
    name: str,
    operands: list = (),
    attributes: dict | None = None,
    result_types: list = (),
    region_count: int = 0,
    location: Location | None = None,
) -> Operation:
    """Create an operation and insert it at `insert_index` in `block`.

    The schema's creation checks run after construction; on failure the
    half-built op is detached so the IR is unchanged.
    """
    ctx = block.ctx
    schema = ctx.registry.lookup_op(name)
    if schema is None:
        raise UnknownOperation(f"no registered schema for {name!r}")
    if not schema.variadic_regions and region_count != schema.num_regions:
        raise TypeMismatch(
            f"{name} takes {schema.num_regions} region(s), got {region_count}"
        )
    operands = list(operands)
    for v in operands:
        if not isinstance(v, Value):
            raise TypeMismatch(f"operand of {name} is not a Value: {v!r}")
        if not value_visible_at(v, block, insert_index):
            raise DominanceViolation(
                f"operand {v!r} of {name} does not dominate the insertion point"
            )
    op = Operation(ctx, name, operands, attributes or {}, list(result_types),
                   region_count, location)
    if schema.check_creation is not None:
        problems = schema.check_creation(op)
        if problems:
            op.drop_operand_uses()
            op.erased = True
            raise TypeMismatch(f"{name}: " + "; ".join(problems))
    block.ops.insert(insert_index, op)
    op.parent = block
    return op


def walk(root: Operation, visitor, order: str = "pre") -> None:
    """Invoke `visitor` once per op in the subtree rooted at `root` (root
    included). `visitor` is either a callable or a mapping from dialect
    name to handler with an optional `None` key as the generic fallback.
    """
    if order not in ("pre", "post"):
        raise ValueError(f"walk order must be 'pre' or 'post', got {order!r}")

    if callable(visitor):
        dispatch = visitor
    else:
        def dispatch(op, _table=visitor):
            handler = _table.get(op.dialect, _table.get(None))
            if handler is not None:
                handler(op)

    def go(op: Operation) -> None:
        if order == "pre":
            dispatch(op)
        for region in op.regions:
            for block in region.blocks:
                # snapshot so visitors may mutate the block they are in
                for child in list(block.ops):
                    if not child.erased:
                        go(child)
        if order == "post":
            dispatch(op)

    go(root)


def count_ops(root: Operation) -> int:
    n = 0

    def bump(_op):
        nonlocal n
        n += 1

    walk(root, bump)
    return n


def replace_all_uses_with(old: Value, new: Value) -> int:
    """Redirect every use of `old` to `new`; returns the number of uses
    redirected. `new` must have the same type and dominate every use."""
    if old.type != new.type:
        raise TypeMismatch(
            f"cannot replace uses of {old.type} value with {new.type} value"
        )
    if old is new:
        return len(old.uses)
    for user, _ in old.uses:
        if not value_dominates_op(new, user):
            raise DominanceViolation(
                f"replacement value does not dominate user {user.name}"
            )
    count = 0
    for user, slot in list(old.uses):
        user.set_operand(slot, new)
        count += 1
    assert not old.uses
    return count


def _detach_tree(op: Operation) -> None:
    for nested in list(op.walk_nested()):
        nested.drop_operand_uses()
        nested.erased = True
    op.drop_operand_uses()
    op.erased = True


def erase_op(op: Operation) -> None:
    """Remove `op` from its block. All results must be unused; values
    produced by the op (and anything nested in it) become invalid."""
    for r in op.results:
        if r.uses:
            raise HasUses(
                f"cannot erase {op.name}: result %{r.id} still has {len(r.uses)} use(s)"
            )
    parent = op.parent
    _detach_tree(op)
    if parent is not None:
        parent.ops.remove(op)
        op.parent = None


def move_op(op: Operation, block: Block, index: int) -> None:
    """Reparent `op` (with everything nested) to `block` at `index`."""
    if op.parent is not None:
        op.parent.ops.remove(op)
    block.ops.insert(index, op)
    op.parent = block


def clone_op(
    op: Operation,
    block: Block,
    index: int,
    value_map: dict | None = None,
) -> Operation:
    """Deep-copy `op` into `block` at `index`.

    `value_map` maps old values to replacements; operands not in the map
    are used as-is (values defined outside the cloned subtree). The map is
    extended with the clone's results and block args.
    """
    vmap = value_map if value_map is not None else {}
    new = create_op(
        block,
        index,
        op.name,
        [vmap.get(v, v) for v in op._operands],
        dict(op.attributes),
        [r.type for r in op.results],
        len(op.regions),
        op.location,
    )
    for old_r, new_r in zip(op.results, new.results):
        vmap[old_r] = new_r
    for old_region, new_region in zip(op.regions, new.regions):
        for old_block, new_block in zip(old_region.blocks, new_region.blocks):
            for arg in old_block.args:
                vmap[arg] = new_block.add_arg(arg.type)
            for child in old_block.ops:
                clone_op(child, new_block, len(new_block.ops), vmap)
    return new


def clone_module(module: Operation) -> Operation:
    """Deep-copy a top-level module within its context."""
    clone = create_module(module.ctx, module.location)
    clone.attributes = dict(module.attributes)
    vmap: dict = {}
    body = clone.body()
    for op in module.body().ops:
        clone_op(op, body, len(body.ops), vmap)
    return clone
