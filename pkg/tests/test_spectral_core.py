import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from FlowEngine.field import (SATURATION, SpectralField, delta_field, gaussian_hat_field, make_field, metric, ones_field,
                              overflow_levels, physical_preview, profile, project, random_field, restrict, seminorm,
                              zero_field)
from FlowEngine.grid import make_grid
from FlowEngine.utils.field_io import HEADER, field_to_frame, read_field_binary, write_field_binary
from Utils.errors import FieldError, FieldFormatError, GridError

SMALL = make_grid(n=1, J=4, inv_h=8)

samples = arrays(np.float64, (2, SMALL.num_nodes), elements=st.floats(min_value=-1e3, max_value=1e3))


def as_field(parts: np.ndarray) -> SpectralField:
    return SpectralField(SMALL, parts[0] + 1j * parts[1])


def test_make_grid_from_spacing():
    grid = make_grid(n=1, J=8, h=1 / 32)
    assert grid.inv_h == 32
    assert grid.num_nodes == 513
    assert grid.h == 1 / 32


@pytest.mark.parametrize("kwargs", [
    {"n": 3},
    {"J": 0},
    {"h": 0.3},
    {"h": -0.5},
    {"h": 0.5, "inv_h": 2},
    {"n": 2, "J": 64, "inv_h": 32},
])
def test_make_grid_rejects_bad_input(kwargs):
    with pytest.raises(GridError):
        make_grid(**kwargs)


def test_ball_mask_counts_nodes(grid):
    assert grid.ball_mask(1).sum() == 65
    assert grid.ball_mask(grid.J).sum() == grid.num_nodes


def test_check_level(grid):
    with pytest.raises(GridError):
        grid.check_level(0)
    with pytest.raises(GridError):
        grid.check_level(grid.J + 1)


def test_ones_seminorm_is_ball_measure(grid):
    u = ones_field(grid)
    for j in range(1, grid.J + 1):
        assert seminorm(u, j) ** 2 == pytest.approx(2 * j + grid.h, rel=1e-12)


def test_quadrature_error_halves_with_h():
    errors = {}
    for inv_h in (16, 32, 64):
        u = ones_field(make_grid(n=1, J=8, inv_h=inv_h))
        errors[inv_h] = np.array([abs(seminorm(u, j) ** 2 - 2 * j) for j in range(1, 9)])
    np.testing.assert_allclose(errors[16] / errors[32], 2.0, rtol=1e-6)
    np.testing.assert_allclose(errors[32] / errors[64], 2.0, rtol=1e-6)


def test_delta_seminorm(grid):
    u = delta_field(grid, [2.0])
    assert seminorm(u, 1) == 0.0
    assert seminorm(u, 2) == pytest.approx(math.sqrt(grid.h), rel=1e-14)
    assert seminorm(u, grid.J) == pytest.approx(math.sqrt(grid.h), rel=1e-14)


def test_delta_off_lattice_is_rejected(grid):
    with pytest.raises(GridError):
        delta_field(grid, [0.01])


@settings(max_examples=50, deadline=None)
@given(samples, st.complex_numbers(max_magnitude=1e3, allow_nan=False, allow_infinity=False))
def test_absolute_homogeneity(parts, scalar):
    u = as_field(parts)
    for j in range(1, SMALL.J + 1):
        assert seminorm(u * scalar, j) == pytest.approx(abs(scalar) * seminorm(u, j), rel=1e-12, abs=1e-300)


@settings(max_examples=50, deadline=None)
@given(samples, samples)
def test_triangle_inequality(a, b):
    u, v = as_field(a), as_field(b)
    for j in range(1, SMALL.J + 1):
        assert seminorm(u + v, j) <= (seminorm(u, j) + seminorm(v, j)) * (1 + 1e-12)


@settings(max_examples=50, deadline=None)
@given(samples)
def test_profile_is_nondecreasing(parts):
    assert profile(as_field(parts)).is_nondecreasing()


def test_metric(fields, grid):
    u, v = fields[0], fields[1]
    assert metric(u, u) == 0.0
    assert metric(u, v) == pytest.approx(metric(v, u), rel=1e-15)
    assert 0.0 < metric(u, v) < 1 - 0.5 ** grid.J


@settings(max_examples=30, deadline=None)
@given(st.integers(min_value=1, max_value=8), st.sampled_from([4, 8, 16, 32]))
def test_metric_of_unit_seminorms(J, inv_h):
    grid = make_grid(n=1, J=J, inv_h=inv_h)
    # a scaled delta at the origin has p_j = 1 on every ball
    u = delta_field(grid) * (1.0 / math.sqrt(grid.h))
    assert seminorm(u, 1) == pytest.approx(1.0, rel=1e-12)
    assert metric(zero_field(grid), u) == pytest.approx(0.5 * (1 - 0.5 ** J), rel=1e-12)


def test_project_and_restrict(fields):
    u = fields[0]
    q = project(u, 5)
    assert q.norm == pytest.approx(seminorm(u, 5), rel=1e-15)
    np.testing.assert_array_equal(restrict(q, 3).values, project(u, 3).values)
    with pytest.raises(GridError):
        restrict(project(u, 3), 5)


def test_quotient_zero_extension(fields):
    q = project(fields[0], 2)
    extended = q.to_field()
    assert seminorm(extended, 2) == pytest.approx(q.norm, rel=1e-15)
    assert seminorm(extended - fields[0], 2) == 0.0


def test_fields_are_read_only(grid):
    u = ones_field(grid)
    with pytest.raises(ValueError):
        u.values[0] = 2.0


def test_incompatible_grids(grid, small_grid):
    with pytest.raises(GridError):
        ones_field(grid) + ones_field(small_grid)


def test_make_field_names(grid):
    assert seminorm(make_field(grid, "zero"), grid.J) == 0.0
    assert make_field(grid, "gaussian-hat").values[grid.index_of([0.0])] == 1.0
    assert make_field(grid, "delta@0.5").values[grid.index_of([0.5])] == 1.0
    with pytest.raises(GridError):
        make_field(grid, "bump")


def test_overflow_levels(grid):
    saturated = np.zeros(grid.shape, dtype=bool)
    saturated[grid.index_of([3.0])] = True
    u = SpectralField(grid, np.ones(grid.shape), overflow=True, saturated=saturated)
    assert overflow_levels(u) == list(range(3, grid.J + 1))
    assert profile(u).overflow_levels == list(range(3, grid.J + 1))


def test_physical_preview_of_gaussian(grid):
    x, values = physical_preview(gaussian_hat_field(grid))
    center = int(np.argmin(np.abs(x)))
    assert x[center] == 0.0
    assert values[center] == pytest.approx(1.0, abs=1e-12)


def test_binary_dump(tmp_path, fields):
    path = str(tmp_path / "u.bin")
    write_field_binary(path, fields[0])
    u = read_field_binary(path)
    assert u.grid.compatible(fields[0].grid)
    np.testing.assert_array_equal(u.values, fields[0].values)


def test_binary_dump_errors(tmp_path, grid):
    bad_magic = tmp_path / "magic.bin"
    bad_magic.write_bytes(HEADER.pack(b"XXXX", 1, 1, 8, 32) + bytes(16 * grid.num_nodes))
    with pytest.raises(FieldFormatError):
        read_field_binary(str(bad_magic))
    truncated = tmp_path / "short.bin"
    truncated.write_bytes(HEADER.pack(b"FL2L", 1, 1, 8, 32) + bytes(16))
    with pytest.raises(FieldFormatError):
        read_field_binary(str(truncated))
    poisoned = tmp_path / "nan.bin"
    samples = np.ones(grid.num_nodes, dtype='<c16')
    samples[3] = complex(math.nan, 0.0)
    poisoned.write_bytes(HEADER.pack(b"FL2L", 1, 1, 8, 32) + samples.tobytes())
    with pytest.raises(FieldFormatError):
        read_field_binary(str(poisoned))


@pytest.mark.parametrize("bad", [math.nan, math.inf, complex(0.0, -math.inf)])
def test_non_finite_samples_are_rejected(bad):
    values = np.ones(SMALL.shape, dtype=np.complex128)
    values[2] = bad
    with pytest.raises(FieldError):
        SpectralField(SMALL, values)


def test_clamped_fields_carry_the_flag():
    values = np.ones(SMALL.shape, dtype=np.complex128)
    values[0] = complex(math.inf, math.inf)
    u = SpectralField.clamped(SMALL, values)
    assert u.overflow
    assert u.saturated_count == 1
    assert u.values[0] == pytest.approx(SATURATION * np.exp(0.25j * math.pi))
    assert SpectralField.clamped(SMALL, np.ones(SMALL.shape)).saturated is None


def test_overflowing_arithmetic_saturates():
    big = SpectralField(SMALL, np.full(SMALL.shape, 1e308 - 1e308j))
    for result in (2.0 * big, big + big):
        assert result.overflow
        assert result.saturated_count == SMALL.num_nodes
        assert np.all(np.isfinite(result.values))
        np.testing.assert_allclose(np.angle(result.values), -0.25 * math.pi, rtol=1e-12)
        np.testing.assert_allclose(np.abs(result.values), SATURATION, rtol=1e-12)


def test_field_frame(grid, rng):
    frame = field_to_frame(random_field(grid, rng))
    assert list(frame.columns) == ["xi_1", "re", "im"]
    assert len(frame) == grid.num_nodes
    assert frame["xi_1"].min() == -grid.J


def test_zero_field_on_two_dimensional_grid():
    grid = make_grid(n=2, J=2, inv_h=4)
    u = zero_field(grid)
    assert u.values.shape == (17, 17)
    assert seminorm(ones_field(grid), 2) ** 2 == pytest.approx(grid.ball_mask(2).sum() * grid.h ** 2)
