import math

import numpy as np
import pandas as pd
import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st

from Invariance.corpus import CORPUS_SIZE, check_symbol, random_corpus, run_corpus
from Invariance.eprime import (CONSTANT_CAVEAT, INVARIANT, NOT_INVARIANT, TOLERANCE_ZERO, ZERO_SYMBOL, decide_eprime,
                               find_growth_witness, witness_search)
from Invariance.l2 import ONE_SIDED_GROWTH, UNDETERMINED, decide_l2, l2_blowup_construction, sampled_verdict
from SymbolCode.catalog import named_symbol, resolve_symbol
from SymbolCode.polynomial import PolynomialSymbol
from Utils.errors import PreconditionError

DECISIONS = [
    # name, E' verdict, L2 verdict
    ("heat", NOT_INVARIANT, INVARIANT),
    ("backward-heat", NOT_INVARIANT, NOT_INVARIANT),
    ("ddx", INVARIANT, INVARIANT),
    ("i-ddx", NOT_INVARIANT, NOT_INVARIANT),
    ("bilaplacian", INVARIANT, INVARIANT),
    ("laplacian", NOT_INVARIANT, INVARIANT),
]


@pytest.mark.parametrize("name, eprime, l2", DECISIONS)
def test_decision_table(name, eprime, l2):
    symbol = named_symbol(name)
    assert decide_eprime(symbol).verdict == eprime
    assert decide_l2(symbol).verdict == l2


@pytest.mark.parametrize("text, verdict, rule", [
    ("-xi^8", INVARIANT, "m4k-negative"),
    ("16*pi^4*xi^4", NOT_INVARIANT, "otherwise"),
    ("-xi^6", NOT_INVARIANT, "otherwise"),
    ("i*xi^4 - xi^3", NOT_INVARIANT, "otherwise"),
    ("3*i*xi + xi^0", INVARIANT, "m1-imaginary"),
])
def test_eprime_rules(text, verdict, rule):
    decision = decide_eprime(resolve_symbol(text))
    assert decision.verdict == verdict
    assert decision.rule == rule


def test_eprime_constants_carry_a_caveat():
    const = decide_eprime(named_symbol("const"))
    assert const.verdict == NOT_INVARIANT
    assert CONSTANT_CAVEAT in const.flags
    zero = decide_eprime(PolynomialSymbol(1))
    assert zero.verdict == NOT_INVARIANT
    assert ZERO_SYMBOL in zero.flags
    assert CONSTANT_CAVEAT in zero.flags
    assert "flags=" in zero.line()


def test_eprime_tolerance():
    symbol = PolynomialSymbol(1, {(1,): complex(1e-14, 1.0)})
    decision = decide_eprime(symbol)
    assert decision.verdict == INVARIANT
    assert TOLERANCE_ZERO in decision.flags
    assert decide_eprime(symbol, tau=1e-16).verdict == NOT_INVARIANT


# exact zeros or parts far from the default tolerance, so scaling cannot cross it
parts = st.one_of(st.just(0.0), st.floats(min_value=1e-3, max_value=1e3), st.floats(min_value=-1e3, max_value=-1e-3))
coefficients = st.builds(complex, parts, parts)


@settings(max_examples=200, deadline=None)
@given(st.lists(coefficients, min_size=1, max_size=7), st.floats(min_value=1e-3, max_value=1e3))
def test_eprime_ignores_positive_scaling(coeffs, scale):
    symbol = PolynomialSymbol(1, dict(enumerate(coeffs)))
    scaled = PolynomialSymbol(1, {alpha: scale * c for alpha, c in symbol.coeffs.items()})
    before, after = decide_eprime(symbol), decide_eprime(scaled)
    assert (after.verdict, after.rule, after.m) == (before.verdict, before.rule, before.m)


@settings(max_examples=200, deadline=None)
@given(coefficients, parts, parts)
def test_eprime_rotation_of_first_order_symbols(a0, re1, im1):
    assume(re1 != 0.0 or im1 != 0.0)
    symbol = PolynomialSymbol(1, {0: a0, 1: complex(re1, im1)})
    rotated = PolynomialSymbol(1, {alpha: 1j * c for alpha, c in symbol.coeffs.items()})
    flips = (re1 == 0.0) != (im1 == 0.0)
    assert (decide_eprime(rotated).verdict != decide_eprime(symbol).verdict) == flips


def test_eprime_is_one_dimensional():
    with pytest.raises(PreconditionError):
        decide_eprime(named_symbol("heat", 2))


def test_witness_search():
    ddx = witness_search(named_symbol("ddx"), 10.0)
    assert ddx.best is None
    assert ddx.status == "consistent-not-proven"

    laplacian = named_symbol("laplacian")
    search = witness_search(laplacian, 10.0)
    assert search.status == "witness-found"
    assert search.best.holds(laplacian)
    assert search.best.margin > 0

    backward = witness_search(named_symbol("backward-heat"), 1.0)
    assert backward.witnesses["real-axis"] is not None
    assert set(backward.points.columns) == {"xi", "eta", "re_a", "c_abs_eta", "witness"}

    with pytest.raises(PreconditionError):
        witness_search(laplacian, 0.0)


def test_find_growth_witness():
    laplacian = named_symbol("laplacian")
    witness = find_growth_witness(laplacian, 10.0)
    assert witness is not None
    assert witness.holds(laplacian)
    assert witness.half_plane in ("upper", "lower", "real-axis")
    assert find_growth_witness(named_symbol("ddx"), 10.0) is None


def test_l2_heat_supremum(heat):
    decision = decide_l2(heat)
    assert decision.method == "exact-1d"
    assert decision.sup_re_a == pytest.approx(-1.0)
    assert decision.eventually_nonpositive
    assert len(decision.maxima) == 21


def test_l2_one_sided_growth():
    decision = decide_l2(named_symbol("i-ddx"))
    assert decision.verdict == NOT_INVARIANT
    assert ONE_SIDED_GROWTH in decision.flags
    assert decision.notes


def test_l2_time_zero_and_negative(heat):
    assert decide_l2(named_symbol("backward-heat"), 0.0).verdict == INVARIANT
    with pytest.raises(PreconditionError):
        decide_l2(heat, -1.0)


def test_l2_sampled_in_two_dimensions():
    heat2 = decide_l2(named_symbol("heat", 2))
    assert heat2.method == "sampled"
    assert heat2.verdict == INVARIANT
    assert decide_l2(named_symbol("backward-heat", 2)).verdict == NOT_INVARIANT
    assert decide_l2(resolve_symbol("xi1^2 - xi2^2", 2)).verdict == NOT_INVARIANT
    assert decide_l2(named_symbol("const", 2)).verdict == INVARIANT


def test_sampled_verdict_trends():
    assert sampled_verdict(pd.DataFrame({"max_re_a": [0.0, 1.0, 2.0, 3.0, 4.0]})) == NOT_INVARIANT
    assert sampled_verdict(pd.DataFrame({"max_re_a": [4.0, 3.0, 3.0, 1.0, 0.0]})) == INVARIANT
    assert sampled_verdict(pd.DataFrame({"max_re_a": [0.0, 1.0, 0.0, 1.0, 0.0]})) == UNDETERMINED


def test_blowup_construction():
    result = l2_blowup_construction(named_symbol("backward-heat"), 0.5, 8)
    assert result.weighted_partials[-1] > 1.359
    assert result.weighted_partials[-1] > 2.0
    assert all(w >= b for w, b in zip(result.weighted_partials, result.lower_bounds))
    assert result.lower_bounds[-1] == pytest.approx(0.5 * sum(1.0 / N for N in range(1, 9)))
    assert all(norm < 1.0 for norm in result.norm_partials)
    assert result.norm_partials[-1] == pytest.approx(1.0 - 2.0 ** -8)
    assert np.all(np.diff([c[0] for c in result.centers]) > 0)
    assert len(result.to_frame()) == 8


def test_blowup_follows_the_growing_side():
    result = l2_blowup_construction(named_symbol("i-ddx"), 1.0, 4)
    assert all(c[0] <= 0 for c in result.centers)
    assert all(w >= b for w, b in zip(result.weighted_partials, result.lower_bounds))


def test_blowup_needs_growth(heat):
    with pytest.raises(PreconditionError):
        l2_blowup_construction(heat, 1.0, 4)


def test_random_corpus_is_reproducible():
    first, second = random_corpus(), random_corpus()
    assert len(first) == CORPUS_SIZE
    assert first == second
    assert random_corpus(seed=1) != first


def test_corpus_cross_check():
    frame = run_corpus()
    assert len(frame) == CORPUS_SIZE
    assert frame["agrees"].all(), frame[~frame["agrees"]]


def test_check_symbol_growth():
    row = check_symbol(named_symbol("backward-heat"))
    assert row.exact == NOT_INVARIANT
    assert row.grows
    row = check_symbol(named_symbol("heat"))
    assert not row.grows
    assert math.isfinite(row.growth_ratio)
