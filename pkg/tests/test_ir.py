"""Core IR: types, SSA bookkeeping, mutation helpers, verifier."""
import pytest

from staircase.dialects.builders import (
    build_arith_binop,
    build_constant,
    build_func,
    build_index_constant,
    build_scf_for,
    build_scf_if,
)
from staircase.errors import (
    DominanceViolation,
    DuplicateDialect,
    DuplicateSymbol,
    HasUses,
    TypeMismatch,
    UnknownOperation,
    VerificationFailed,
)
from staircase.ir.core import (
    F64,
    I1,
    INDEX,
    DialectDef,
    IRType,
    OpSchema,
    array_attr,
    attr_from,
    clone_module,
    clone_op,
    count_ops,
    create_context,
    create_module,
    create_op,
    dict_attr,
    erase_op,
    float_attr,
    int_attr,
    memref_type,
    move_op,
    register_dialect,
    replace_all_uses_with,
    str_attr,
    symbol_attr,
    type_attr,
    unit_attr,
    walk,
)
from staircase.ir.verify import verify, verify_or_raise
from staircase.textio import print_module


def _func(ctx, params=(), name="f"):
    module = create_module(ctx)
    func = build_func(module, name, params)
    return module, func, func.body()


class TestTypes:
    def test_scalar_identity(self):
        assert F64.kind == "f64" and F64.is_float and not F64.is_int
        assert INDEX.is_int and str(INDEX) == "index"
        assert IRType("f64") == F64

    def test_memref_structure(self):
        ty = memref_type((4, 8), F64)
        assert ty.rank == 2 and ty.shape == (4, 8) and ty.element == F64
        assert str(ty) == "memref<4x8xf64>"

    def test_memref_validation(self):
        with pytest.raises(TypeMismatch):
            memref_type((4,), memref_type((2,), F64))
        with pytest.raises(TypeMismatch):
            memref_type((), F64)
        with pytest.raises(TypeMismatch):
            memref_type((0,), F64)
        with pytest.raises(TypeMismatch):
            IRType("f64", shape=(2,))
        with pytest.raises(TypeMismatch):
            IRType("quaternion")


class TestAttributes:
    def test_kinds(self):
        assert int_attr(3).kind == "int" and int_attr(3).value == 3
        assert float_attr(2.5).kind == "float"
        assert str_attr("x").kind == "str"
        assert type_attr(F64).kind == "type"
        assert array_attr([int_attr(1)]).kind == "array"
        assert dict_attr({"a": int_attr(1)}).kind == "dict"
        assert symbol_attr("m", "k").kind == "symbol"
        assert unit_attr().kind == "unit"

    def test_attr_from_coercion(self):
        assert attr_from(3) == int_attr(3)
        assert attr_from(2.5) == float_attr(2.5)
        assert attr_from("s") == str_attr("s")


class TestSSA:
    def test_results_and_uses(self, ctx):
        _, _, body = _func(ctx)
        a = build_constant(body, 1.0)
        b = build_constant(body, 2.0)
        add = build_arith_binop(body, "arith.addf", a, b)
        op = add.defining_op
        assert op.operands == (a, b)
        assert a.defining_op.name == "arith.constant"
        assert not a.is_block_arg
        assert [user for user, _ in a.uses] == [op]

    def test_block_args(self, ctx):
        _, func, body = _func(ctx, [memref_type((4,), F64)])
        arg = body.args[0]
        assert arg.is_block_arg and arg.defining_op is None
        assert arg.owner is body

    def test_set_operand_moves_use(self, ctx):
        _, _, body = _func(ctx)
        a = build_constant(body, 1.0)
        b = build_constant(body, 2.0)
        add = build_arith_binop(body, "arith.addf", a, a).defining_op
        add.set_operand(1, b)
        assert len(a.uses) == 1
        assert len(b.uses) == 1
        assert add.operands == (a, b)

    def test_dominance_checked_at_creation(self, ctx):
        _, _, body = _func(ctx)
        a = build_constant(body, 1.0)
        with pytest.raises(DominanceViolation):
            create_op(body, 0, "arith.addf", operands=[a, a],
                      result_types=[F64])

    def test_value_from_closed_region_rejected(self, ctx):
        _, _, body = _func(ctx)
        lb = build_index_constant(body, 0)
        ub = build_index_constant(body, 4)
        st = build_index_constant(body, 1)
        loop = build_scf_for(body, lb, ub, st)
        inner = build_constant(loop.body(), 1.0)
        with pytest.raises(DominanceViolation):
            create_op(body, body.insertion_index(), "arith.addf",
                      operands=[inner, inner], result_types=[F64])


class TestMutation:
    def test_erase_requires_no_uses(self, ctx):
        _, _, body = _func(ctx)
        a = build_constant(body, 1.0)
        add = build_arith_binop(body, "arith.addf", a, a).defining_op
        with pytest.raises(HasUses):
            erase_op(a.defining_op)
        const = a.defining_op
        erase_op(add)
        erase_op(const)
        assert const.erased and add.erased
        assert [op.name for op in body.ops] == ["func.return"]

    def test_erase_detaches_regions(self, ctx):
        _, _, body = _func(ctx)
        lb = build_index_constant(body, 0)
        ub = build_index_constant(body, 4)
        st = build_index_constant(body, 1)
        loop = build_scf_for(body, lb, ub, st)
        inner = build_constant(loop.body(), 1.0).defining_op
        erase_op(loop)
        assert loop.erased and inner.erased

    def test_replace_all_uses(self, ctx):
        _, _, body = _func(ctx)
        a = build_constant(body, 1.0)
        b = build_constant(body, 2.0)
        add = build_arith_binop(body, "arith.addf", a, a).defining_op
        n = replace_all_uses_with(a, b)
        assert n == 2
        assert add.operands == (b, b)
        assert not a.uses

    def test_replace_type_checked(self, ctx):
        _, _, body = _func(ctx)
        a = build_constant(body, 1.0)
        i = build_index_constant(body, 2)
        build_arith_binop(body, "arith.addf", a, a)
        with pytest.raises(TypeMismatch):
            replace_all_uses_with(a, i)

    def test_replace_dominance_checked(self, ctx):
        _, _, body = _func(ctx)
        a = build_constant(body, 1.0)
        build_arith_binop(body, "arith.addf", a, a)
        late = build_constant(body, 3.0)
        with pytest.raises(DominanceViolation):
            replace_all_uses_with(a, late)

    def test_move_op(self, ctx):
        _, _, body = _func(ctx)
        lb = build_index_constant(body, 0)
        ub = build_index_constant(body, 4)
        st = build_index_constant(body, 1)
        loop = build_scf_for(body, lb, ub, st)
        c = build_constant(body, 1.0).defining_op
        move_op(c, loop.body(), 0)
        assert c.parent is loop.body()
        assert loop.body().ops[0] is c
        assert c not in body.ops

    def test_clone_op_remaps_operands(self, ctx):
        _, _, body = _func(ctx)
        a = build_constant(body, 1.0)
        b = build_constant(body, 2.0)
        add = build_arith_binop(body, "arith.addf", a, a).defining_op
        twin = clone_op(add, body, body.insertion_index(), value_map={a: b})
        assert twin.operands == (b, b)
        assert twin.results[0] is not add.results[0]

    def test_clone_module_is_independent(self, ctx):
        module, _, body = _func(ctx)
        a = build_constant(body, 1.0)
        build_arith_binop(body, "arith.addf", a, a)
        before = print_module(module)
        twin = clone_module(module)
        assert print_module(twin) == before
        erase_op(twin.body().ops[0].body().ops[-2])
        assert print_module(module) == before
        assert twin in ctx.modules


class TestWalk:
    def _nested(self, ctx):
        module, func, body = _func(ctx)
        lb = build_index_constant(body, 0)
        ub = build_index_constant(body, 4)
        st = build_index_constant(body, 1)
        loop = build_scf_for(body, lb, ub, st)
        build_constant(loop.body(), 1.0)
        return module, func, loop

    def test_pre_and_post_order(self, ctx):
        module, func, loop = self._nested(ctx)
        pre, post = [], []
        walk(module, lambda op: pre.append(op.name), order="pre")
        walk(module, lambda op: post.append(op.name), order="post")
        assert pre[0] == "builtin.module" and post[-1] == "builtin.module"
        i = pre.index("scf.for")
        assert "arith.constant" in pre[i:]
        assert set(pre) == set(post)

    def test_dialect_keyed_visitor(self, ctx):
        module, _, _ = self._nested(ctx)
        seen = {"arith": 0, "scf": 0}
        walk(module, {
            "arith": lambda op: seen.__setitem__("arith", seen["arith"] + 1),
            "scf": lambda op: seen.__setitem__("scf", seen["scf"] + 1),
        })
        assert seen["arith"] == 4
        assert seen["scf"] == 2  # the loop and its yield

    def test_count_ops(self, ctx):
        module, _, _ = self._nested(ctx)
        names = []
        walk(module, lambda op: names.append(op.name))
        assert count_ops(module) == len(names)


class TestDialectRegistry:
    def test_unknown_op_rejected(self, ctx):
        _, _, body = _func(ctx)
        with pytest.raises(UnknownOperation):
            create_op(body, 0, "nosuch.op")

    def test_duplicate_dialect_rejected(self, ctx):
        register_dialect(ctx, DialectDef("ext", [OpSchema("ext.thing")]))
        with pytest.raises(DuplicateDialect):
            register_dialect(ctx, DialectDef("ext"))

    def test_registered_op_usable(self, ctx):
        register_dialect(ctx, DialectDef("ext", [OpSchema("ext.mark")]))
        _, _, body = _func(ctx)
        op = create_op(body, 0, "ext.mark", result_types=[F64])
        assert op.dialect == "ext"

    def test_duplicate_symbol_rejected(self, ctx):
        module = create_module(ctx)
        build_func(module, "twice", [])
        with pytest.raises(DuplicateSymbol):
            build_func(module, "twice", [])


class TestVerifier:
    def test_clean_module_verifies(self, ctx):
        module, _, body = _func(ctx)
        build_constant(body, 1.0)
        assert verify(module) == []
        verify_or_raise(module)

    def test_wrong_terminator_reported(self, ctx):
        module, func, body = _func(ctx)
        erase_op(body.ops[-1])
        create_op(body, len(body.ops), "scf.yield")
        diags = verify(module)
        assert len(diags) == 1
        assert "func.return" in diags[0].message
        with pytest.raises(VerificationFailed):
            verify_or_raise(module)

    def test_missing_terminator_reported(self, ctx):
        module, func, body = _func(ctx)
        erase_op(body.ops[-1])
        diags = verify(module)
        assert diags and any("termin" in d.message or "func.return" in d.message
                             for d in diags)

    def test_condition_type_checked_in_if(self, ctx):
        _, _, body = _func(ctx)
        a = build_constant(body, 1.0)
        with pytest.raises(TypeMismatch):
            build_scf_if(body, a)

    def test_i1_condition_accepted(self, ctx):
        _, _, body = _func(ctx)
        c = create_op(body, body.insertion_index(), "arith.constant",
                      attributes={"value": int_attr(1)}, result_types=[I1])
        branch = build_scf_if(body, c.results[0], with_else=True)
        assert len(branch.regions) == 2
