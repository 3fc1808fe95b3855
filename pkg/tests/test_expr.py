from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from tetrad_forge.expr import (DomainError, ExprSyntaxError, SymbolTable,
                               UndeclaredSymbolError, compile_many, differentiate,
                               evaluate, parse, to_text)

SYMS = SymbolTable(("t", "r", "th", "ph"), ("M",))
COORDS = SYMS.coordinates


def ev(e, **env):
    return evaluate(e, env)


class TestParse:
    def test_schwarzschild_factor(self):
        e = parse("1 - 2*M/r", SYMS)
        assert e.free_symbols() == frozenset({"M", "r"})

    def test_function_call(self):
        e = parse("r*sin(th)", SYMS)
        assert ev(e, r=4.0, th=math.pi / 2) == pytest.approx(4.0)

    def test_syntax_error_offset(self):
        with pytest.raises(ExprSyntaxError) as info:
            parse("2*x +", SymbolTable(("x", "y", "z", "w")))
        assert info.value.offset == 6

    def test_undeclared_symbol(self):
        with pytest.raises(UndeclaredSymbolError) as info:
            parse("q + r", SYMS)
        assert info.value.name == "q"

    def test_precedence(self):
        # pow binds tighter than unary minus, which binds tighter than mul
        assert ev(parse("-r^2", SYMS), r=3.0) == pytest.approx(-9.0)
        assert ev(parse("2*-r", SYMS), r=3.0) == pytest.approx(-6.0)
        assert ev(parse("1 - r/2*4", SYMS), r=3.0) == pytest.approx(-5.0)

    def test_round_trip(self):
        rng = np.random.default_rng(3)
        for text in ("1 - 2*M/r", "r*sin(th)", "exp(-t^2)/(1+r^2)", "sqrt(r)*cos(ph - th)",
                     "-(r - 1)^3", "ln(1 + r^2)^0.5"):
            e = parse(text, SYMS)
            back = parse(to_text(e), SYMS)
            for _ in range(5):
                env = dict(zip(COORDS, rng.uniform(0.5, 2.0, 4)), M=1.3)
                assert evaluate(back, env) == pytest.approx(evaluate(e, env), rel=1e-14)


class TestDifferentiate:
    def test_examples(self):
        d = differentiate(parse("1 - 2*M/r", SYMS), "r")
        assert ev(d, M=1.0, r=2.0) == pytest.approx(2 * 1.0 / 4.0)
        d = differentiate(parse("r*sin(th)", SYMS), "th")
        assert ev(d, r=3.0, th=0.4) == pytest.approx(3.0 * math.cos(0.4))
        assert ev(differentiate(parse("7.5", SYMS), "t")) == 0.0

    def test_linearity(self):
        rng = np.random.default_rng(0)
        e1, e2 = parse("r^3*sin(th)", SYMS), parse("exp(t)*cos(r*ph)", SYMS)
        a = 2.7
        combo = parse(f"{a}*({to_text(e1)}) + {to_text(e2)}", SYMS)
        for _ in range(10):
            env = dict(zip(COORDS, rng.uniform(-1, 1, 4)))
            lhs = evaluate(differentiate(combo, "r"), env)
            rhs = a * evaluate(differentiate(e1, "r"), env) + evaluate(differentiate(e2, "r"), env)
            assert lhs == pytest.approx(rhs, rel=1e-12, abs=1e-12)

    def test_third_order(self):
        d3 = differentiate(differentiate(differentiate(parse("sin(r)*r", SYMS), "r"), "r"), "r")
        r = 0.7
        exact = -3 * math.sin(r) - r * math.cos(r)
        assert ev(d3, r=r) == pytest.approx(exact, rel=1e-13)


_LEAVES = st.sampled_from(["r", "th", "ph", "t", "1.5", "0.3", "M"])


def _expr_text(depth: int):
    if depth == 0:
        return _LEAVES
    sub = _expr_text(depth - 1)
    return st.one_of(
        _LEAVES,
        st.tuples(sub, st.sampled_from(["+", "-", "*"]), sub).map(lambda p: f"({p[0]} {p[1]} {p[2]})"),
        st.tuples(st.sampled_from(["sin", "cos"]), sub).map(lambda p: f"{p[0]}({p[1]})"),
        st.tuples(sub, st.integers(2, 3)).map(lambda p: f"({p[0]})^{p[1]}"),
    )


class TestCentralDifference:
    @settings(max_examples=100, deadline=None)
    @given(text=_expr_text(3), point=st.lists(st.floats(-1.0, 1.0), min_size=4, max_size=4),
           coord=st.sampled_from(COORDS))
    def test_derivative_matches_central_difference(self, text, point, coord):
        e = parse(text, SYMS)
        env = dict(zip(COORDS, point), M=0.8)
        h = 1e-5
        hi, lo = dict(env), dict(env)
        hi[coord] += h
        lo[coord] -= h
        fd = (evaluate(e, hi) - evaluate(e, lo)) / (2 * h)
        exact = evaluate(differentiate(e, coord), env)
        assert abs(exact - fd) <= 1e-6 * (1 + abs(exact))


class TestEvaluate:
    def test_values(self):
        assert ev(parse("1 - 2*M/r", SYMS), M=1.0, r=4.0) == pytest.approx(0.5)

    def test_sqrt_negative(self):
        with pytest.raises(DomainError) as info:
            ev(parse("sqrt(r)", SYMS), r=-1.0)
        assert "sqrt" in str(info.value)

    @pytest.mark.parametrize("text,env", [("ln(r - 1)", {"r": 0.5}), ("1/(r - 2)", {"r": 2.0}),
                                          ("r^0.5", {"r": -2.0})])
    def test_domain_errors(self, text, env):
        with pytest.raises(DomainError):
            evaluate(parse(text, SYMS), env)

    def test_compiled_agrees_with_walk(self):
        exprs = [parse(s, SYMS) for s in ("1 - 2*M/r", "r*sin(th)", "exp(-t)*cos(ph)^2")]
        fn = compile_many(exprs, list(COORDS) + ["M"])
        args = [0.3, 3.0, 1.1, -0.4, 1.0]
        env = dict(zip(list(COORDS) + ["M"], args))
        np.testing.assert_allclose(fn(*args), [evaluate(e, env) for e in exprs], rtol=1e-15)
