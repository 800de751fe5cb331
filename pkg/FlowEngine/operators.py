"""
Operators on spectral fields.

A MultiplierOperator is a(D) acting as pointwise multiplication by a(xi); its node values are
computed once, at construction. Other operators go through CallbackOperator, whose seminorms
can only be audited on sample fields.
"""
import logging
from dataclasses import dataclass, field
from typing import Callable, Iterable, List

import numpy as np
import pandas as pd

from FlowEngine.field import SpectralField, delta_field, random_field, seminorm
from FlowEngine.grid import FrequencyGrid
from SymbolCode.polynomial import PolynomialSymbol, sup_abs_on_ball
from Utils.errors import GridError

logger = logging.getLogger(__name__)

# relative slack for the p_j(Au) <= p_j^X(A) p_j(u) check
BOUND_SLACK = 1e-12
# above this many nodes the delta-field sweep is strided
DELTA_SWEEP_LIMIT = 4096


class FieldOperator:
    grid: FrequencyGrid
    label: str = ""
    is_multiplier = False

    def apply(self, u: SpectralField) -> SpectralField:
        raise NotImplementedError

    def __call__(self, u: SpectralField) -> SpectralField:
        return self.apply(u)

    def _check(self, u: SpectralField):
        if not self.grid.compatible(u.grid):
            raise GridError(f"Operator grid {self.grid} does not match field grid {u.grid}")

    def power(self, k: int) -> "FieldOperator":
        if k < 1:
            raise ValueError("power requires k >= 1")
        ops = [self] * k
        return CallbackOperator(self.grid, lambda u: _chain(ops, u), f"({self.label})^{k}")


def _chain(ops, u):
    for op in ops:
        u = op.apply(u)
    return u


class MultiplierOperator(FieldOperator):
    is_multiplier = True

    def __init__(self, symbol: PolynomialSymbol | None, grid: FrequencyGrid,
                 node_values: np.ndarray | None = None, label: str = ""):
        self.symbol = symbol
        self.grid = grid
        if node_values is None:
            node_values = symbol(grid.xi if grid.n > 1 else grid.xi[0])
        values = np.asarray(node_values, dtype=np.complex128).reshape(grid.shape).copy()
        values.flags.writeable = False
        self.node_values = values
        self.label = label or (str(symbol) if symbol is not None else "multiplier")

    def apply(self, u: SpectralField) -> SpectralField:
        self._check(u)
        with np.errstate(over='ignore', invalid='ignore'):
            values = self.node_values * u.values
        return SpectralField.clamped(self.grid, values, u.overflow, u.saturated,
                                     angle=np.angle(self.node_values) + np.angle(u.values))

    def power(self, k: int) -> "MultiplierOperator":
        if k < 1:
            raise ValueError("power requires k >= 1")
        return MultiplierOperator(None, self.grid, self.node_values ** k, f"({self.label})^{k}")

    def compose(self, other: "MultiplierOperator") -> "MultiplierOperator":
        if not self.grid.compatible(other.grid):
            raise GridError("Cannot compose operators on different grids")
        return MultiplierOperator(None, self.grid, self.node_values * other.node_values,
                                  f"{self.label} o {other.label}")


class CallbackOperator(FieldOperator):
    def __init__(self, grid: FrequencyGrid, fn: Callable[[SpectralField], SpectralField], label: str = "callback"):
        self.grid = grid
        self.fn = fn
        self.label = label

    def apply(self, u: SpectralField) -> SpectralField:
        self._check(u)
        return self.fn(u)


def multiplier(symbol: PolynomialSymbol, grid: FrequencyGrid) -> MultiplierOperator:
    return MultiplierOperator(symbol, grid)


def identity_operator(grid: FrequencyGrid) -> MultiplierOperator:
    return MultiplierOperator(PolynomialSymbol(grid.n, {(0,) * grid.n: 1.0}), grid, label="identity")


def reflection_operator(grid: FrequencyGrid) -> CallbackOperator:
    """(Ru)(xi) = u(-2 xi), zero where -2 xi falls off the grid. Not local: it pulls mass into balls."""
    K = grid.radius_index
    axis = np.arange(-K, K + 1)
    source = -2 * axis
    valid = np.abs(source) <= K
    source_index = np.where(valid, source + K, 0)

    def reflect(u: SpectralField) -> SpectralField:
        out = u.values
        for ax in range(grid.n):
            out = np.take(out, source_index, axis=ax)
            shape = [1] * grid.n
            shape[ax] = grid.side
            out = out * valid.reshape(shape)
        return SpectralField(grid, out)

    return CallbackOperator(grid, reflect, "reflection xi -> -2 xi")


# operator seminorms

@dataclass
class OperatorSeminorms:
    values: List[float]
    exact: bool = True

    def __getitem__(self, j: int) -> float:
        return self.values[j - 1]


def _sweep_indices(grid: FrequencyGrid, mask: np.ndarray | None = None) -> List[tuple]:
    indices = np.argwhere(mask) if mask is not None else np.argwhere(np.ones(grid.shape, dtype=bool))
    if len(indices) > DELTA_SWEEP_LIMIT:
        stride = int(np.ceil(len(indices) / DELTA_SWEEP_LIMIT))
        indices = indices[::stride]
    return [tuple(int(v) for v in idx) for idx in indices]


def operator_seminorm(op: FieldOperator, j: int) -> float:
    """
    p_j^X(A). For multipliers this is max |a| over the nodes of the ball, which the unit delta at
    the argmax attains. Other operators are audited over delta fields in the ball (a lower estimate).
    """
    mask = op.grid.ball_mask(j)
    if op.is_multiplier:
        return float(np.max(np.abs(op.node_values[mask])))
    best = 0.0
    for idx in _sweep_indices(op.grid, mask):
        delta = delta_field(op.grid, index=idx)
        best = max(best, seminorm(op.apply(delta), j) / seminorm(delta, j))
    return best


def operator_seminorms(op: FieldOperator) -> OperatorSeminorms:
    return OperatorSeminorms([operator_seminorm(op, j) for j in range(1, op.grid.J + 1)], op.is_multiplier)


def argmax_node(op: MultiplierOperator, j: int) -> tuple:
    """Index of the node where |a| attains p_j^X on ball j."""
    mask = op.grid.ball_mask(j)
    masked = np.where(mask, np.abs(op.node_values), -np.inf)
    return tuple(int(v) for v in np.unravel_index(np.argmax(masked), op.grid.shape))


def continuum_seminorm(op: MultiplierOperator, j: int) -> float:
    """||a||_{L^inf(B(0,j))} for comparison with the discrete node-max."""
    return sup_abs_on_ball(op.symbol, j)


def verify_power_bound(op: FieldOperator, n: int, j: int) -> tuple[float, float]:
    if n < 1:
        raise ValueError("power requires n >= 1")
    lhs = operator_seminorm(op.power(n), j)
    rhs = operator_seminorm(op, j) ** n
    return lhs, rhs


# strong compatibility

@dataclass
class CompatibilityWitness:
    j: int
    kind: str  # 'kernel' or 'bound'
    field: SpectralField
    lhs: float
    rhs: float
    node: tuple | None = None

    def describe(self) -> str:
        where = f" (delta at xi={list(self.node)})" if self.node is not None else ""
        if self.kind == 'kernel':
            return f"level {self.j}: field vanishing on the ball maps to p_j = {self.lhs:.6g}{where}"
        return f"level {self.j}: p_j(Au) = {self.lhs:.6g} > p_j^X p_j(u) = {self.rhs:.6g}{where}"


@dataclass
class LevelCompatibility:
    j: int
    pjX: float
    pass_kernel: bool = True
    pass_bound: bool = True
    witness: CompatibilityWitness | None = None


@dataclass
class CompatibilityReport:
    label: str
    levels: List[LevelCompatibility] = field(default_factory=list)
    exact_seminorms: bool = True
    samples_checked: int = 0

    @property
    def passed(self) -> bool:
        return all(level.pass_kernel and level.pass_bound for level in self.levels)

    def failures(self) -> List[LevelCompatibility]:
        return [level for level in self.levels if not (level.pass_kernel and level.pass_bound)]

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame([
            {"j": level.j, "pjX": level.pjX, "pass_kernel": level.pass_kernel, "pass_bound": level.pass_bound,
             "witness": level.witness.describe() if level.witness else ""}
            for level in self.levels
        ])


def check_strong_compatibility(op: FieldOperator, samples: Iterable[SpectralField] | None = None,
                               rng: np.random.Generator | None = None, n_random: int = 20) -> CompatibilityReport:
    """
    Audit (i) kernel preservation: fields vanishing on ball j map to p_j = 0 exactly, and
    (ii) p_j(Au) <= p_j^X(A) p_j(u), over delta fields at every node plus random fields.
    """
    grid = op.grid
    rng = rng if rng is not None else np.random.default_rng(0)
    seminorms = operator_seminorms(op)
    report = CompatibilityReport(op.label, [LevelCompatibility(j, seminorms[j]) for j in range(1, grid.J + 1)],
                                 exact_seminorms=op.is_multiplier)
    levels = report.levels
    k_squared = grid.k_squared

    def record(level: LevelCompatibility, kind: str, u: SpectralField, lhs: float, rhs: float, node=None):
        if kind == 'kernel':
            level.pass_kernel = False
        else:
            level.pass_bound = False
        if level.witness is None:
            point = None if node is None else tuple(float(v) for v in grid.xi[(slice(None),) + node])
            level.witness = CompatibilityWitness(level.j, kind, u, lhs, rhs, point)

    def check_bound(level: LevelCompatibility, u: SpectralField, image: SpectralField, node=None):
        lhs = seminorm(image, level.j)
        rhs = level.pjX * seminorm(u, level.j)
        if lhs > rhs * (1 + BOUND_SLACK) + 1e-300:
            record(level, 'bound', u, lhs, rhs, node)

    # delta fields: one application each, checked at every level
    for idx in _sweep_indices(grid):
        delta = delta_field(grid, index=idx)
        image = op.apply(delta)
        report.samples_checked += 1
        for level in levels:
            if k_squared[idx] > (level.j * grid.inv_h) ** 2:
                lhs = seminorm(image, level.j)
                if lhs != 0.0:
                    record(level, 'kernel', delta, lhs, 0.0, idx)
            else:
                check_bound(level, delta, image)

    # random fields: whole-grid for the bound, ball-zeroed for the kernel
    extra = list(samples) if samples is not None else []
    extra += [random_field(grid, rng) for _ in range(n_random)]
    for u in extra:
        image = op.apply(u)
        report.samples_checked += 1
        for level in levels:
            check_bound(level, u, image)
            outside = u.with_values(np.where(grid.ball_mask(level.j), 0.0, u.values))
            lhs = seminorm(op.apply(outside), level.j)
            if lhs != 0.0:
                record(level, 'kernel', outside, lhs, 0.0)

    if report.passed:
        logger.info(f"Operator {op.label} is strongly compatible on all {grid.J} levels")
    else:
        logger.info(f"Operator {op.label} fails strong compatibility at levels "
                    f"{[level.j for level in report.failures()]}")
    return report
