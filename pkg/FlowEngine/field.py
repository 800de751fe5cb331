"""
Spectral fields on a FrequencyGrid and the seminorm calculus on them.

A SpectralField holds samples of the Fourier transform of an element of the locally
square-integrable Fourier space. Level-j seminorms integrate |u|^2 over the ball |xi| <= j with
the rectangle rule (weight h^n per node), so every seminorm is a weighted discrete l2 norm.
"""
import logging
import math
from contextlib import contextmanager
from dataclasses import dataclass, field
from typing import List

import numpy as np
import pandas as pd

from FlowEngine.grid import FrequencyGrid
from Utils.errors import FieldError, GridError

logger = logging.getLogger(__name__)

# exponents above this overflow double precision when combined with O(1) samples
SAT_EXPONENT = 709.0
SATURATION = math.exp(SAT_EXPONENT)


def saturate(values: np.ndarray, mask: np.ndarray | None = None,
             angle: np.ndarray | None = None) -> tuple[np.ndarray, np.ndarray]:
    """
    Clamp non-finite or too-large entries, and those selected by `mask`, to magnitude SATURATION.

    The clamped entry keeps the phase `angle` when given, else the phase of the entry itself;
    entries without a defined phase (NaN) get phase 0. Returns the clamped values and the mask
    of clamped entries.
    """
    values = np.asarray(values, dtype=np.complex128)
    with np.errstate(invalid='ignore', over='ignore'):
        bad = ~np.isfinite(values) | (np.abs(values) > SATURATION)
    if mask is not None:
        bad = bad | np.asarray(mask, dtype=bool).reshape(values.shape)
    if not bad.any():
        return values, bad
    out = values.copy()
    with np.errstate(invalid='ignore'):
        if angle is None:
            theta = np.angle(values[bad])
        else:
            theta = np.broadcast_to(np.asarray(angle, dtype=np.float64), values.shape)[bad]
    theta = np.where(np.isfinite(theta), theta, 0.0)
    out[bad] = SATURATION * np.exp(1j * theta)
    return out, bad

# self-test hook: scales the quadrature weight; 1.0 outside of fault injection
_quadrature_weight_scale = 1.0


@contextmanager
def perturbed_quadrature(factor: float):
    """Temporarily scale the quadrature weight. Used by `verify --inject-fault` only."""
    global _quadrature_weight_scale
    previous = _quadrature_weight_scale
    _quadrature_weight_scale = factor
    try:
        yield
    finally:
        _quadrature_weight_scale = previous


def _quadrature(values: np.ndarray, grid: FrequencyGrid) -> float:
    weight = grid.cell_volume * _quadrature_weight_scale
    magnitudes = np.abs(values)
    largest = float(np.max(magnitudes)) if magnitudes.size else 0.0
    if largest == 0.0 or not np.isfinite(largest):
        return largest
    # scaled so that squares of large samples do not overflow
    return float(np.sqrt(weight) * largest * np.sqrt(np.sum((magnitudes / largest) ** 2)))


@dataclass(frozen=True, eq=False)
class SpectralField:
    grid: FrequencyGrid
    values: np.ndarray
    overflow: bool = False
    saturated: np.ndarray | None = None

    def __post_init__(self):
        values = np.asarray(self.values, dtype=np.complex128)
        if values.shape != self.grid.shape:
            values = values.reshape(self.grid.shape)
        finite = np.isfinite(values)
        if not finite.all():
            raise FieldError(f"Field on {self.grid} has {int(np.count_nonzero(~finite))} non-finite sample(s)")
        values = values.copy()
        values.flags.writeable = False
        object.__setattr__(self, 'values', values)
        if self.saturated is not None:
            mask = np.asarray(self.saturated, dtype=bool).reshape(self.grid.shape).copy()
            mask.flags.writeable = False
            object.__setattr__(self, 'saturated', mask)

    @classmethod
    def clamped(cls, grid: FrequencyGrid, values: np.ndarray, overflow: bool = False,
                saturated: np.ndarray | None = None, angle: np.ndarray | None = None) -> "SpectralField":
        """Build a field from raw arithmetic results, saturating what did not stay finite."""
        values = np.asarray(values, dtype=np.complex128).reshape(grid.shape)
        if angle is not None:
            angle = np.broadcast_to(np.asarray(angle, dtype=np.float64), grid.shape)
        values, bad = saturate(values, angle=angle)
        if bad.any():
            overflow = True
            saturated = bad if saturated is None else bad | np.asarray(saturated, dtype=bool).reshape(grid.shape)
        return cls(grid, values, overflow, saturated)

    def _check(self, other: "SpectralField"):
        if not self.grid.compatible(other.grid):
            raise GridError(f"Incompatible grids {self.grid} and {other.grid}")

    def _combine_flags(self, other: "SpectralField"):
        overflow = self.overflow or other.overflow
        if self.saturated is None and other.saturated is None:
            return overflow, None
        mask = np.zeros(self.grid.shape, dtype=bool)
        for m in (self.saturated, other.saturated):
            if m is not None:
                mask |= m
        return overflow, mask

    def __add__(self, other: "SpectralField") -> "SpectralField":
        self._check(other)
        overflow, mask = self._combine_flags(other)
        with np.errstate(over='ignore', invalid='ignore'):
            values = self.values + other.values
        return SpectralField.clamped(self.grid, values, overflow, mask)

    def __sub__(self, other: "SpectralField") -> "SpectralField":
        self._check(other)
        overflow, mask = self._combine_flags(other)
        with np.errstate(over='ignore', invalid='ignore'):
            values = self.values - other.values
        return SpectralField.clamped(self.grid, values, overflow, mask)

    def __mul__(self, scalar) -> "SpectralField":
        scalar = complex(scalar)
        with np.errstate(over='ignore', invalid='ignore'):
            values = self.values * scalar
        return SpectralField.clamped(self.grid, values, self.overflow, self.saturated,
                                     angle=np.angle(self.values) + np.angle(scalar))

    __rmul__ = __mul__

    def __neg__(self) -> "SpectralField":
        return self * -1.0

    def with_values(self, values: np.ndarray) -> "SpectralField":
        return SpectralField.clamped(self.grid, values, self.overflow, self.saturated)

    @property
    def saturated_count(self) -> int:
        return 0 if self.saturated is None else int(np.count_nonzero(self.saturated))


@dataclass
class SeminormProfile:
    """Values p_1, ..., p_J. Levels whose ball holds saturated nodes are listed in overflow_levels."""
    values: List[float]
    overflow_levels: List[int] = field(default_factory=list)

    def __getitem__(self, j: int) -> float:
        return self.values[j - 1]

    def __len__(self):
        return len(self.values)

    def is_nondecreasing(self) -> bool:
        return all(a <= b for a, b in zip(self.values, self.values[1:]))

    def to_frame(self, column: str = "seminorm") -> pd.DataFrame:
        return pd.DataFrame({
            "j": list(range(1, len(self.values) + 1)),
            column: self.values,
            "overflow": [j in self.overflow_levels for j in range(1, len(self.values) + 1)],
        })


@dataclass(frozen=True, eq=False)
class QuotientElement:
    """The class of a field in X_j = L^2(B[0, j]); values are the ball samples in row-major order."""
    grid: FrequencyGrid
    j: int
    values: np.ndarray
    norm: float

    def to_field(self) -> SpectralField:
        """Zero extension back to the whole grid."""
        full = np.zeros(self.grid.shape, dtype=np.complex128)
        full[self.grid.ball_mask(self.j)] = self.values
        return SpectralField(self.grid, full)


def seminorm(u: SpectralField, j: int) -> float:
    return _quadrature(u.values[u.grid.ball_mask(j)], u.grid)


def profile(u: SpectralField) -> SeminormProfile:
    values = [seminorm(u, j) for j in range(1, u.grid.J + 1)]
    return SeminormProfile(values, overflow_levels(u))


def overflow_levels(u: SpectralField) -> List[int]:
    if u.saturated is None or not u.saturated.any():
        return []
    return [j for j in range(1, u.grid.J + 1) if np.any(u.saturated[u.grid.ball_mask(j)])]


def metric(u: SpectralField, v: SpectralField) -> float:
    """
    Translation-invariant metric sum_j 2^-j p_j(u-v)/(1+p_j(u-v)), truncated at j = J.
    The omitted tail is at most 2^-J.
    """
    diff = u - v
    total = 0.0
    for j in range(1, u.grid.J + 1):
        p = seminorm(diff, j)
        total += 0.5 ** j * p / (1.0 + p)
    return total


def project(u: SpectralField, j: int) -> QuotientElement:
    values = u.values[u.grid.ball_mask(j)].copy()
    values.flags.writeable = False
    return QuotientElement(u.grid, int(j), values, _quadrature(values, u.grid))


def restrict(q: QuotientElement, j: int) -> QuotientElement:
    """The map X_{q.j} -> X_j for j <= q.j."""
    q.grid.check_level(j)
    if j > q.j:
        raise GridError(f"Cannot restrict a level-{q.j} element to the larger level {j}")
    sub = q.grid.ball_mask(j)[q.grid.ball_mask(q.j)]
    values = q.values[sub].copy()
    values.flags.writeable = False
    return QuotientElement(q.grid, int(j), values, _quadrature(values, q.grid))


# built-in fields

def zero_field(grid: FrequencyGrid) -> SpectralField:
    return SpectralField(grid, np.zeros(grid.shape, dtype=np.complex128))


def ones_field(grid: FrequencyGrid) -> SpectralField:
    return SpectralField(grid, np.ones(grid.shape, dtype=np.complex128))


def gaussian_hat_field(grid: FrequencyGrid) -> SpectralField:
    return SpectralField(grid, np.exp(-np.pi * grid.radius ** 2))


def slow_tail_field(grid: FrequencyGrid) -> SpectralField:
    return SpectralField(grid, 1.0 / (1.0 + grid.radius ** 2))


def delta_field(grid: FrequencyGrid, point=None, index: tuple[int, ...] | None = None) -> SpectralField:
    values = np.zeros(grid.shape, dtype=np.complex128)
    if index is None:
        index = grid.index_of(point if point is not None else [0.0] * grid.n)
    values[index] = 1.0
    return SpectralField(grid, values)


def random_field(grid: FrequencyGrid, rng: np.random.Generator, scale: float = 1.0) -> SpectralField:
    values = rng.standard_normal(grid.shape) + 1j * rng.standard_normal(grid.shape)
    return SpectralField(grid, scale * values)


def make_field(grid: FrequencyGrid, text: str) -> SpectralField:
    """
    Named initial fields: `ones`, `zero`, `gaussian-hat`, `slow-tail`, `delta@x` (1-D)
    or `delta@x1,x2` (2-D).
    """
    text = text.strip()
    if text == "ones":
        return ones_field(grid)
    if text == "zero":
        return zero_field(grid)
    if text == "gaussian-hat":
        return gaussian_hat_field(grid)
    if text == "slow-tail":
        return slow_tail_field(grid)
    if text.startswith("delta@"):
        try:
            point = [float(v) for v in text[len("delta@"):].split(",")]
        except ValueError:
            raise GridError(f"Malformed delta location in {text!r}")
        return delta_field(grid, point)
    raise GridError(f"Unknown built-in field {text!r}")


def physical_preview(u: SpectralField) -> tuple[np.ndarray, np.ndarray]:
    """
    Inverse-DFT preview of a 1-D field: samples of sum_k u(xi_k) e^{2 pi i x xi_k} h on one
    period 1/h. Plumbing only; nothing in the library depends on it.
    """
    grid = u.grid
    if grid.n != 1:
        raise GridError("physical_preview supports n=1 only")
    side = grid.side
    spatial = np.fft.ifft(np.fft.ifftshift(u.values)) * side * grid.h
    x = np.arange(side) / (side * grid.h)
    # shift so that the sample nearest zero sits in the middle
    x = np.fft.fftshift(np.where(x >= 0.5 / grid.h, x - 1.0 / grid.h, x))
    return x, np.fft.fftshift(spatial)
