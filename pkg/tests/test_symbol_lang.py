import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from SymbolCode.audit import audit_order
from SymbolCode.catalog import NAMED_SYMBOLS, named_symbol, resolve_symbol
from SymbolCode.parser import parse_symbol, print_symbol
from SymbolCode.polynomial import (MAX_DEGREE, PolynomialSymbol, derivative, diffop_to_symbol, eval_symbol,
                                   parse_diffop, real_part, sup_abs_on_ball, to_polynomial)
from Utils.errors import DimensionMismatchError, NonPolynomialError, SymbolSyntaxError, UnknownIdentifierError

PI2 = 4 * math.pi ** 2

EXPRESSIONS = [
    "-(1 + 4*pi^2*xi^2)",
    "2*pi*i*xi",
    "-16*pi^4*xi^4",
    "xi^2^3",
    "2^(-1)*xi - 3",
    "1 - (xi - 2)",
    "(1 + i)*xi^3/4",
    "-xi^2",
    "(xi - 1)*(xi + 1) - xi^2",
]


def test_heat_coefficients(heat):
    assert heat.coefficient(0) == -1
    assert heat.coefficient(2) == pytest.approx(-PI2, rel=1e-15)
    assert heat.order == 2
    assert set(heat.coeffs) == {(0,), (2,)}


def test_heat_values(heat):
    assert eval_symbol(heat, 0.0) == -1
    assert eval_symbol(heat, 1 / (2 * math.pi)) == pytest.approx(-2.0, rel=1e-14)


def test_constant_and_zero_symbols():
    const = to_polynomial(parse_symbol("3"))
    assert const.order == 0
    assert const.coefficient(0) == 3
    zero = to_polynomial(parse_symbol("xi - xi"))
    assert zero.is_zero
    assert zero.order == 0
    assert eval_symbol(zero, 2.5) == 0


def test_expansion_cancels():
    symbol = to_polynomial(parse_symbol("(xi - 1)*(xi + 1) - xi^2"))
    assert symbol.coeffs == {(0,): -1 + 0j}


@pytest.mark.parametrize("text, offset", [
    ("xi^(1/2)", 3),
    ("xi/xi", 3),
    ("1 + * 2", 4),
    ("2 xi", 2),
    ("(1 + xi", 7),
    ("", 0),
    ("1 + $", 4),
    ("\u3000$", 3),
])
def test_syntax_errors(text, offset):
    with pytest.raises(SymbolSyntaxError) as info:
        parse_symbol(text)
    assert info.value.offset == offset


@pytest.mark.parametrize("text, offset", [
    ("xi^(1/0)", 6),
    ("0^(-1)*xi", 2),
    ("xi/(2 - 2)", 3),
    ("(1 - 1)^(-2) + xi", 8),
    ("xi^100000000", 3),
])
def test_degenerate_constants(text, offset):
    with pytest.raises(NonPolynomialError) as info:
        parse_symbol(text)
    assert info.value.offset == offset
    assert f"(at byte {offset})" in str(info.value)


def test_degree_limit():
    assert to_polynomial(parse_symbol(f"xi^{MAX_DEGREE}")).order == MAX_DEGREE
    for text in ("(1 + xi)^65", "(xi^8)^8 * xi", "xi^1000"):
        with pytest.raises(NonPolynomialError):
            to_polynomial(parse_symbol(text))
    with pytest.raises(NonPolynomialError):
        to_polynomial(parse_symbol("10^400 * xi"))


@pytest.mark.parametrize("text, n", [("foo", 1), ("xi2", 1), ("xi", 2), ("xi3", 2)])
def test_unknown_identifiers(text, n):
    with pytest.raises(UnknownIdentifierError):
        parse_symbol(text, n)


@pytest.mark.parametrize("text", EXPRESSIONS)
def test_printer_fixpoint(text):
    printed = print_symbol(parse_symbol(text))
    assert print_symbol(parse_symbol(printed)) == printed


def test_printer_keeps_grouping():
    assert print_symbol(parse_symbol("1 - (xi - 2)")) == "1 - (xi - 2)"
    assert print_symbol(parse_symbol("-xi^2")) == "-xi^2"
    assert print_symbol(parse_symbol("(xi1 + xi2)^2", 2)) == "(xi1 + xi2)^2"


@settings(max_examples=100, deadline=None)
@given(st.sampled_from(EXPRESSIONS), st.floats(min_value=-3.0, max_value=3.0))
def test_expansion_agrees_with_tree(text, x):
    expr = parse_symbol(text)
    tree_value = complex(expr(x))
    poly_value = eval_symbol(to_polynomial(expr), x)
    scale = 1.0 + sum(abs(c) for c in to_polynomial(expr).coeffs.values()) * (1 + abs(x)) ** 8
    assert abs(tree_value - poly_value) <= 1e-12 * scale


def test_two_dimensional_symbol():
    heat2 = named_symbol("heat", 2)
    assert heat2.coefficient((2, 0)) == pytest.approx(-PI2)
    assert heat2.coefficient((0, 2)) == pytest.approx(-PI2)
    assert eval_symbol(heat2, [0.0, 0.0]) == -1
    with pytest.raises(DimensionMismatchError):
        eval_symbol(heat2, [1.0])
    with pytest.raises(DimensionMismatchError):
        eval_symbol(named_symbol("heat"), [1.0, 2.0])


def test_diffop_conventions():
    ddx = diffop_to_symbol({1: 1.0}, 'partial')
    assert ddx.coefficient(1) == pytest.approx(2j * math.pi, rel=1e-15)
    fourth = diffop_to_symbol({4: -1.0}, 'partial')
    assert fourth.coefficient(4) == pytest.approx(-16 * math.pi ** 4, rel=1e-15)
    assert fourth.coefficient(4).imag == 0
    assert diffop_to_symbol({2: 5.0}, 'D').coefficient(2) == 5
    with pytest.raises(ValueError):
        diffop_to_symbol({1: 1.0}, 'nabla')


def test_parse_diffop():
    assert parse_diffop("1:1,0;4:-1") == {(1,): 1 + 0j, (4,): -1 + 0j}
    assert parse_diffop("2.0:1;0.2:1", 2) == {(2, 0): 1 + 0j, (0, 2): 1 + 0j}
    with pytest.raises(ValueError):
        parse_diffop("2:1", 2)
    with pytest.raises(ValueError):
        parse_diffop("x:1")


def test_resolve_symbol():
    assert resolve_symbol("heat") == named_symbol("heat")
    assert resolve_symbol("2*pi*i*xi") == named_symbol("ddx")
    laplacian = resolve_symbol(diffop="2:1", convention='partial')
    assert set(laplacian.coeffs) == {(2,)}
    assert laplacian.coefficient(2) == pytest.approx(named_symbol("laplacian").coefficient(2), rel=1e-15)
    with pytest.raises(ValueError):
        resolve_symbol()


def test_named_symbols_parse():
    for name, texts in NAMED_SYMBOLS.items():
        for n in texts:
            assert named_symbol(name, n).n == n
    with pytest.raises(KeyError):
        named_symbol("ddx", 2)


def test_exact_calculus(heat):
    assert derivative(heat, 2).coeffs == pytest.approx({(0,): -2 * PI2})
    assert derivative(heat, 3).is_zero
    np.testing.assert_allclose(real_part(heat), [-1.0, 0.0, -PI2])
    np.testing.assert_array_equal(real_part(named_symbol("ddx")), [0.0])
    assert sup_abs_on_ball(heat, 2) == pytest.approx(1 + 4 * PI2, rel=1e-12)
    assert sup_abs_on_ball(PolynomialSymbol(1), 3) == 0.0


def test_order_audit(heat):
    assert audit_order(heat, 2).passed
    assert not audit_order(heat, 1).passed
    const = named_symbol("const")
    report = audit_order(const, 0)
    assert report.passed
    assert report.constants[(0,)] == pytest.approx(math.sqrt(34), rel=1e-14)
    assert set(report.to_frame().columns) == {"alpha", "c_hat", "c_hat_doubled", "pass"}
