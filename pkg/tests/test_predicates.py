import random
from fractions import Fraction

import pytest

from preloss.contexts import VarContext
from preloss.exprs import Bin, Lit, Name, indicator, predicate_of
from preloss.parsing import parse_expr_text
from preloss.predicates import Predicate
from preloss.scalars import INF

from conftest import gen_predicate

Z4B = VarContext.of(("n", range(4)), ("b", range(2)))


def test_conj_idempotent_on_indicators():
    ctx = VarContext.of(("b", (0, 1)))
    e = indicator(ctx, Bin("=", Name("b"), Lit(0)))
    assert e.conj(e) == e


def test_add_of_disjoint_indicators():
    ctx = VarContext.of(("n", range(4)))
    e = Predicate.unit(ctx, (0,)) + Predicate.unit(ctx, (2,))
    assert e.entries == (Fraction(1), Fraction(0), Fraction(1), Fraction(0))


def test_scale_by_zero_kills_infinities():
    ctx = VarContext.of(("x", (0, 1)))
    e = Predicate(ctx, (INF, Fraction(3)))
    assert e.scale(0).is_zero


def test_indicator_parity_example():
    e = indicator(Z4B, parse_expr_text("(n + b) mod 2 = 0"))
    expected = {(0, 0), (1, 1), (2, 0), (3, 1)}
    for s in Z4B.states():
        assert e.at(s) == (1 if s in expected else 0)


def test_indicator_true_and_disjunction():
    ctx = VarContext.of(("n", range(4)))
    assert indicator(ctx, parse_expr_text("true")) == Predicate.ones(ctx)
    e = indicator(ctx, parse_expr_text("n = 0 || n = 3"))
    assert [e.at((i,)) for i in range(4)] == [1, 0, 0, 1]


def test_indicator_errors():
    ctx = VarContext.of(("n", range(4)))
    from preloss.exprs import EvalError

    with pytest.raises(EvalError, match="unbound"):
        indicator(ctx, Name("m"))
    with pytest.raises(EvalError):
        indicator(ctx, parse_expr_text("n + 1"))  # not boolean-valued
    with pytest.raises(EvalError):
        predicate_of(ctx, parse_expr_text("n - 2"))  # negative


def test_complement():
    ctx = VarContext.of(("b", (0, 1)))
    b0 = indicator(ctx, parse_expr_text("b = 0"))
    assert b0.complement() == indicator(ctx, parse_expr_text("b = 1"))
    assert Predicate.ones(ctx).complement().is_zero
    third = Predicate.constant(ctx, Fraction(1, 3))
    assert third.complement() == Predicate.constant(ctx, Fraction(2, 3))
    with pytest.raises(ValueError):
        Predicate.constant(ctx, 2).complement()
    assert (third + third.complement()) == Predicate.ones(ctx)


def test_extension_is_independent_of_new_vars():
    ctx = VarContext.of(("n", range(4)))
    extra = VarContext.of(("b", (0, 1)))
    even = indicator(ctx, parse_expr_text("n mod 2 = 0"))
    ext = even.extend(extra)
    assert ext.ctx == ctx.merge(extra)
    for n in range(4):
        for b in range(2):
            assert ext.at((n, b)) == even.at((n,))
    assert Predicate.zero(ctx).extend(extra).is_zero
    c = Predicate.constant(ctx, Fraction(2, 5)).extend(extra)
    assert c == Predicate.constant(ctx.merge(extra), Fraction(2, 5))


def test_extend_to_arbitrary_position():
    small = VarContext.of(("b", (0, 1)))
    big = VarContext.of(("n", range(3)), ("b", (0, 1)), ("z", (0, 1)))
    e = indicator(small, parse_expr_text("b = 1")).extend_to(big)
    for s in big.states():
        assert e.at(s) == (1 if s[1] == 1 else 0)


def test_expectation_with_inf():
    ctx = VarContext.of(("x", (0, 1)))
    e = Predicate(ctx, (INF, Fraction(1, 2)))
    assert e.expectation((Fraction(0), Fraction(1))) == Fraction(1, 2)
    assert e.expectation((Fraction(1, 2), Fraction(1, 2))) is INF


def test_cone_monotonicity_sampled():
    rng = random.Random(11)
    ctx = VarContext.of(("u", range(3)), ("v", (0, 1)))
    for _ in range(100):
        a, b, c = (gen_predicate(rng, ctx) for _ in range(3))
        if a.le(b):
            assert (a + c).le(b + c)
            assert a.scale(Fraction(3, 2)).le(b.scale(Fraction(3, 2)))
        assert Predicate.zero(ctx).le(a)
