import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from FlowEngine.field import delta_field, ones_field, random_field, seminorm
from FlowEngine.grid import make_grid
from FlowEngine.operators import (CallbackOperator, argmax_node, check_strong_compatibility, continuum_seminorm,
                                  identity_operator, multiplier, operator_seminorm, operator_seminorms,
                                  reflection_operator, verify_power_bound)
from SymbolCode.polynomial import PolynomialSymbol
from Utils.errors import GridError

PI2 = 4 * math.pi ** 2
SMALL = make_grid(n=1, J=4, inv_h=8)
small_coefficients = st.complex_numbers(max_magnitude=10.0, allow_nan=False, allow_infinity=False)
symbols = st.lists(small_coefficients, min_size=1, max_size=4).map(lambda cs: PolynomialSymbol(1, dict(enumerate(cs))))


def test_multiplier_seminorm_is_node_max(grid, heat):
    op = multiplier(heat, grid)
    assert operator_seminorm(op, 1) == pytest.approx(1 + PI2, rel=1e-14)
    assert operator_seminorm(op, grid.J) == pytest.approx(1 + PI2 * grid.J ** 2, rel=1e-14)
    for j in (1, 4, grid.J):
        assert continuum_seminorm(op, j) == pytest.approx(operator_seminorm(op, j), rel=1e-12)


def test_seminorms_are_nondecreasing(grid, heat):
    values = operator_seminorms(multiplier(heat, grid)).values
    assert all(a <= b for a, b in zip(values, values[1:]))


def test_delta_attains_the_seminorm(grid, heat):
    op = multiplier(heat, grid)
    for j in range(1, grid.J + 1):
        delta = delta_field(grid, index=argmax_node(op, j))
        ratio = seminorm(op.apply(delta), j) / seminorm(delta, j)
        assert ratio == pytest.approx(operator_seminorm(op, j), rel=1e-12)


def test_power_bound_on_random_fields(small_grid, heat, rng):
    op = multiplier(heat, small_grid)
    for n in (2, 3):
        power = op.power(n)
        for _ in range(1000):
            u = random_field(small_grid, rng)
            for j in range(1, small_grid.J + 1):
                assert seminorm(power.apply(u), j) <= operator_seminorm(op, j) ** n * seminorm(u, j) * (1 + 1e-12)


def test_power_bound_is_sharp_for_multipliers(grid, heat):
    op = multiplier(heat, grid)
    for j in (1, 3, grid.J):
        lhs, rhs = verify_power_bound(op, 3, j)
        assert lhs == pytest.approx(rhs, rel=1e-12)
    with pytest.raises(ValueError):
        verify_power_bound(op, 0, 1)


@settings(max_examples=100, deadline=None)
@given(symbols, symbols, st.integers(min_value=0, max_value=2 ** 16))
def test_multipliers_commute(a, b, seed):
    A, B = multiplier(a, SMALL), multiplier(b, SMALL)
    np.testing.assert_allclose(A.compose(B).node_values, B.compose(A).node_values, rtol=1e-15, atol=0)
    u = random_field(SMALL, np.random.default_rng(seed))
    ab, ba = A.apply(B.apply(u)), B.apply(A.apply(u))
    assert seminorm(ab - ba, SMALL.J) <= 1e-12 * (1.0 + seminorm(ab, SMALL.J))


def test_power_and_compose(grid, heat):
    op = multiplier(heat, grid)
    np.testing.assert_array_equal(op.power(2).node_values, op.node_values ** 2)
    np.testing.assert_array_equal(op.compose(op).node_values, op.node_values * op.node_values)
    with pytest.raises(ValueError):
        op.power(0)


def test_callback_sweep_matches_exact_seminorm(small_grid, heat):
    op = multiplier(heat, small_grid)
    wrapped = CallbackOperator(small_grid, op.apply, "wrapped heat")
    for j in range(1, small_grid.J + 1):
        assert operator_seminorm(wrapped, j) == pytest.approx(operator_seminorm(op, j), rel=1e-14)
    generic_cube = wrapped.power(3)
    u = ones_field(small_grid)
    np.testing.assert_allclose(generic_cube.apply(u).values, op.power(3).apply(u).values, rtol=1e-14)


def test_identity_operator(grid):
    assert operator_seminorms(identity_operator(grid)).values == [1.0] * grid.J


def test_heat_is_strongly_compatible(grid, heat, rng):
    report = check_strong_compatibility(multiplier(heat, grid), rng=rng)
    assert report.passed
    assert report.exact_seminorms
    assert report.samples_checked == grid.num_nodes + 20
    assert report.to_frame()["pass_kernel"].all()


def test_reflection_is_not_strongly_compatible(small_grid, rng):
    report = check_strong_compatibility(reflection_operator(small_grid), rng=rng)
    assert not report.passed
    failure = report.failures()[0]
    assert failure.witness is not None
    assert failure.witness.kind == 'kernel'
    assert failure.witness.lhs > 0
    assert not report.exact_seminorms


def test_reflection_moves_mass(small_grid):
    u = delta_field(small_grid, [2.0])
    image = reflection_operator(small_grid).apply(u)
    assert image.values[small_grid.index_of([-1.0])] == 1.0
    assert seminorm(u, 1) == 0.0
    assert seminorm(image, 1) > 0.0


def test_grid_mismatch(grid, small_grid, heat):
    with pytest.raises(GridError):
        multiplier(heat, grid).apply(ones_field(small_grid))
    with pytest.raises(GridError):
        multiplier(heat, grid).compose(multiplier(heat, small_grid))
