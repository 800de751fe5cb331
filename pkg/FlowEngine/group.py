"""
The group e^{tA} generated by a strongly compatible operator.

Two constructions are provided: the power series (`exp_series`) and, for multipliers, the
closed form e^{t a(xi)} (`exp_multiplier`). Agreement between them is the uniqueness check.

The series runs on tau = t / 2^s, with s the smallest integer making |tau| p_J^X(A) <= 1,
and the step is then applied 2^s times. The truncation index N is picked from the scalar tail
at rate |tau| p_J^X(A) at the worst level J. With scaling disabled the plain series is summed
and SeriesCapError reports the number of terms the rate would need.
"""
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, List

import numpy as np
import pandas as pd

from FlowEngine.field import (SAT_EXPONENT, QuotientElement, SeminormProfile, SpectralField, overflow_levels,
                              profile, project, restrict, saturate, seminorm)
from FlowEngine.operators import FieldOperator, MultiplierOperator, operator_seminorm
from FlowEngine.utils.run_logger import RunLogger
from SymbolCode.polynomial import PolynomialSymbol
from Utils.env import get_thread_cap
from Utils.errors import PreconditionError, SeriesCapError

logger = logging.getLogger(__name__)

EPS = float(np.finfo(float).eps)
DEFAULT_TOL = 1e-8
DEFAULT_MAX_TERMS = 200
# cap on step applications (terms times repetitions) per series evaluation
MAX_APPLICATIONS = 2_000_000
# roundoff allowance multiplier in the certified bound
ROUNDOFF_FACTOR = 16.0


def as_operator(a, grid) -> FieldOperator:
    if isinstance(a, FieldOperator):
        return a
    if isinstance(a, PolynomialSymbol):
        return MultiplierOperator(a, grid)
    raise TypeError(f"Expected an operator or a polynomial symbol, got {type(a).__name__}")


def complex_expm1(z: np.ndarray) -> np.ndarray:
    """e^z - 1 without cancellation for small |z|."""
    z = np.asarray(z, dtype=np.complex128)
    x, y = z.real, z.imag
    with np.errstate(over='ignore', invalid='ignore'):
        real = np.expm1(x) * np.cos(y) - 2.0 * np.sin(y / 2.0) ** 2
        imag = np.exp(x) * np.sin(y)
    return real + 1j * imag


def scalar_tail(x: float, N: int) -> float:
    """sum_{n > N} x^n / n! for x >= 0; inf when it overflows."""
    if x <= 0.0:
        return 0.0
    try:
        term = math.exp((N + 1) * math.log(x) - math.lgamma(N + 2))
    except OverflowError:
        return math.inf
    total = 0.0
    n = N + 1
    while term > 0.0:
        total += term
        n += 1
        term *= x / n
        if n > x and term < EPS * total * 1e-3:
            break
        if not math.isfinite(total):
            return math.inf
    return total


def required_terms(rate: float, target: float, repetitions: int = 1, limit: int = 1_000_000) -> int:
    """Smallest N with repetitions * tail(rate, N) <= target."""
    N = 0
    while repetitions * scalar_tail(rate, N) > target:
        N += 1
        if N > limit:
            break
    return N


def _merge_saturated(u: SpectralField, mask: np.ndarray) -> np.ndarray | None:
    if u.saturated is not None:
        mask = mask | u.saturated
    return mask if mask.any() else None


# closed form

def exp_multiplier(symbol, t: float, u: SpectralField) -> SpectralField:
    """
    e^{t a(xi)} u(xi) nodewise. Nodes with t Re a > 709 (or whose product overflows) saturate to
    SATURATION with the correct phase and the result carries the overflow flag.
    """
    op = as_operator(symbol, u.grid)
    if not isinstance(op, MultiplierOperator):
        raise TypeError("exp_multiplier needs a multiplier")
    if t == 0:
        return u
    z = t * op.node_values
    big = z.real > SAT_EXPONENT
    too_big = big & (u.values != 0)
    with np.errstate(over='ignore', invalid='ignore'):
        factor = np.exp(np.where(big, 1j * z.imag, z))
        values = factor * u.values
    # saturated nodes keep the phase of e^{i t Im a} u
    values, bad = saturate(values, too_big, angle=z.imag + np.angle(u.values))
    mask = _merge_saturated(u, bad)
    return SpectralField(u.grid, values, u.overflow or mask is not None, mask)


# power series

@dataclass
class SeriesDiagnostics:
    t: float
    tol: float
    terms: int
    squarings: int
    rate: float
    omegas: List[float]
    truncation_tails: List[float]
    certified_bounds: List[float]
    scaled: bool = True
    overflow: bool = False
    exact_seminorms: bool = True

    @property
    def repetitions(self) -> int:
        return 2 ** self.squarings

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame({
            "j": list(range(1, len(self.omegas) + 1)),
            "pjX": self.omegas,
            "truncation_tail": self.truncation_tails,
            "certified_bound": self.certified_bounds,
        })

    def summary(self) -> dict:
        return {"t": self.t, "terms": self.terms, "squarings": self.squarings, "rate": self.rate,
                "tol": self.tol, "max_truncation_tail": max(self.truncation_tails, default=0.0),
                "overflow": self.overflow}


def _safe_exp(log_value: float) -> float:
    if log_value == -math.inf:
        return 0.0
    return math.exp(log_value) if log_value < SAT_EXPONENT else math.inf


def _log(x: float) -> float:
    return math.log(x) if x > 0 else -math.inf


def _series_step_multiplier(op: MultiplierOperator, tau: float, N: int) -> np.ndarray:
    """Node values of S_N(tau a) = sum_{n<=N} (tau a)^n / n!, summed by the term recurrence."""
    term = np.ones(op.grid.shape, dtype=np.complex128)
    total = term.copy()
    for n in range(1, N + 1):
        term = term * (tau / n) * op.node_values
        total = total + term
    return total


def _series_step_generic(op: FieldOperator, tau: float, N: int, v: SpectralField) -> SpectralField:
    term = v
    total = v.values
    for n in range(1, N + 1):
        term = (tau / n) * op.apply(term)
        with np.errstate(over='ignore', invalid='ignore'):
            total = total + term.values
    return v.with_values(total)


def exp_series(op, t: float, u: SpectralField, tol: float = DEFAULT_TOL, max_terms: int = DEFAULT_MAX_TERMS,
               scaling: bool = True, run_logger: RunLogger | None = None) -> tuple[SpectralField, SeriesDiagnostics]:
    """
    Partial sums of sum_n (tA)^n / n! applied to u, with per-level certified bounds.

    Each level bound is q * tail(|tau| w_j, N) * G_j^(q-1) * p_j(u) plus a roundoff allowance,
    where q = 2^s, w_j = p_j^X(A) and G_j bounds the step and the exact exponential on ball j.
    With q = 1 this is the plain scalar tail estimate.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    op = as_operator(op, u.grid)
    grid = u.grid
    J = grid.J
    omegas = [operator_seminorm(op, j) for j in range(1, J + 1)]
    u_norms = [seminorm(u, j) for j in range(1, J + 1)]

    if t == 0:
        diagnostics = SeriesDiagnostics(t, tol, 0, 0, 0.0, omegas, [0.0] * J, [0.0] * J, scaling,
                                        exact_seminorms=op.is_multiplier)
        if run_logger:
            run_logger.series(t, 0, 0, 0.0, 0.0)
        return u, diagnostics

    omega_J = omegas[-1]
    rate = abs(t) * omega_J
    if not math.isfinite(rate):
        raise SeriesCapError(f"Operator seminorm p_J^X is not finite", required_terms=-1)
    squarings = max(0, math.ceil(math.log2(rate))) if scaling and rate > 1 else 0
    q = 2 ** squarings
    tau = t / q
    target = tol / (1.0 + u_norms[-1])
    N = required_terms(abs(tau) * omega_J, target, q)
    if N > max_terms or q * (N + 1) > MAX_APPLICATIONS:
        raise SeriesCapError(f"Series at rate {rate:.6g} and tol {tol:g} exceeds the cap of {max_terms} terms",
                             required_terms=N * q if scaling else N)

    if op.is_multiplier:
        step = _series_step_multiplier(op, tau, N)
        step, bad = saturate(step)
        log_step = np.log(np.maximum(np.abs(step), 1e-300))
        with np.errstate(over='ignore', invalid='ignore'):
            for _ in range(squarings):
                step, newly = saturate(step * step, angle=2 * np.angle(step))
                bad |= newly
            values, bad_product = saturate(step * u.values, bad & (u.values != 0),
                                           angle=np.angle(step) + np.angle(u.values))
        mask = _merge_saturated(u, bad_product)
        result = SpectralField(grid, values, u.overflow or mask is not None, mask)
        log_exact = (tau * op.node_values).real
        log_G_nodes = np.maximum(log_step, log_exact)
        log_G = [float(np.max(log_G_nodes[grid.ball_mask(j)])) for j in range(1, J + 1)]
    else:
        v = u
        for _ in range(q):
            v = _series_step_generic(op, tau, N, v)
        # with_values clamps each step and carries the mask forward
        mask = _merge_saturated(u, v.saturated) if v.saturated is not None else u.saturated
        result = SpectralField(grid, v.values, u.overflow or mask is not None, mask)
        log_G = [abs(tau) * w for w in omegas]

    truncation_tails, certified = [], []
    for j in range(1, J + 1):
        tail = scalar_tail(abs(tau) * omegas[j - 1], N)
        p = u_norms[j - 1]
        truncation_tails.append(q * tail * p)
        log_truncation = _log(q * tail) + (q - 1) * log_G[j - 1] + _log(p)
        log_roundoff = (math.log(ROUNDOFF_FACTOR * EPS * q) + _log(p) +
                        float(np.logaddexp((q - 1) * log_G[j - 1] + math.log(N + 1) + abs(tau) * omegas[j - 1],
                                           q * log_G[j - 1])))
        certified.append(_safe_exp(float(np.logaddexp(log_truncation, log_roundoff))))

    diagnostics = SeriesDiagnostics(t, tol, N, squarings, rate, omegas, truncation_tails, certified, scaling,
                                    overflow=result.overflow, exact_seminorms=op.is_multiplier)
    if run_logger:
        run_logger.series(t, N, squarings, rate, max(truncation_tails))
        if result.overflow:
            run_logger.overflow(t, result.saturated_count)
    logger.debug(f"exp_series t={t:g}: N={N}, squarings={squarings}, rate={rate:.4g}")
    return result, diagnostics


# oracle comparison

def _oracle_allowance(op: MultiplierOperator, t: float, u: SpectralField, j: int) -> float:
    """Roundoff in e^{t a} itself: relative error about eps (1 + |t a|)."""
    mask = u.grid.ball_mask(j)
    log_mag = float(np.max((t * op.node_values[mask]).real))
    growth = 1.0 + abs(t) * float(np.max(np.abs(op.node_values[mask])))
    return _safe_exp(log_mag + math.log(4 * EPS * growth)) * seminorm(u, j)


@dataclass
class OracleComparison:
    t: float
    residuals: List[float]
    bounds: List[float]
    statuses: List[str]
    diagnostics: SeriesDiagnostics

    @property
    def passed(self) -> bool:
        return all(status != 'fail' for status in self.statuses)

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame({
            "t": [self.t] * len(self.residuals),
            "j": list(range(1, len(self.residuals) + 1)),
            "residual": self.residuals,
            "bound": self.bounds,
            "status": self.statuses,
        })


def compare_series_to_multiplier(op, t: float, u: SpectralField, tol: float = DEFAULT_TOL,
                                 run_logger: RunLogger | None = None) -> OracleComparison:
    """p_j(series - closed form) against the series' certified bound. Saturated levels are skipped."""
    op = as_operator(op, u.grid)
    series, diagnostics = exp_series(op, t, u, tol, run_logger=run_logger)
    closed = exp_multiplier(op, t, u)
    skipped = set(overflow_levels(series)) | set(overflow_levels(closed))
    diff = series - closed
    residuals, bounds, statuses = [], [], []
    for j in range(1, u.grid.J + 1):
        if j in skipped:
            residuals.append(math.nan)
            bounds.append(math.inf)
            statuses.append('overflow')
            continue
        r = seminorm(diff, j)
        b = diagnostics.certified_bounds[j - 1] + _oracle_allowance(op, t, u, j)
        residuals.append(r)
        bounds.append(b)
        statuses.append('ok' if r <= b else 'fail')
    return OracleComparison(t, residuals, bounds, statuses, diagnostics)


# trajectories

@dataclass
class GroupTrajectory:
    times: List[float]
    fields: List[SpectralField]
    method: str
    diagnostics: List[SeriesDiagnostics] = field(default_factory=list)

    @property
    def overflow(self) -> bool:
        return any(f.overflow for f in self.fields)

    def profiles(self) -> List[SeminormProfile]:
        return [profile(f) for f in self.fields]

    def to_frame(self) -> pd.DataFrame:
        rows = []
        for t, prof in zip(self.times, self.profiles()):
            for j, value in enumerate(prof.values, start=1):
                rows.append({"t": t, "j": j, "seminorm": value, "overflow": j in prof.overflow_levels})
        return pd.DataFrame(rows, columns=["t", "j", "seminorm", "overflow"])


def evolve(op, times, u: SpectralField, method: str = 'multiplier', tol: float = DEFAULT_TOL,
           run_logger: RunLogger | None = None) -> GroupTrajectory:
    """e^{tA}u at each time (sorted, duplicates dropped); time samples run in a thread pool."""
    if method not in ('series', 'multiplier'):
        raise ValueError(f"Unknown method {method!r}")
    op = as_operator(op, u.grid)
    times = sorted(set(float(t) for t in times))

    def one(t):
        if run_logger:
            run_logger.step()
        if method == 'multiplier':
            return exp_multiplier(op, t, u), None
        return exp_series(op, t, u, tol, run_logger=run_logger)

    with ThreadPoolExecutor(max_workers=get_thread_cap(len(times))) as executor:
        results = list(executor.map(one, times))
    trajectory = GroupTrajectory(times, [r[0] for r in results], method,
                                 [r[1] for r in results if r[1] is not None])
    if run_logger:
        for t, f in zip(times, trajectory.fields):
            if method == 'multiplier' and f.overflow:
                run_logger.overflow(t, f.saturated_count)
    return trajectory


# checks of the group properties

def verify_group_law(op, s: float, t: float, u: SpectralField) -> SeminormProfile:
    """Profile of p_j(e^{sA} e^{tA} u - e^{(s+t)A} u) by the closed form."""
    op = as_operator(op, u.grid)
    nested = exp_multiplier(op, s, exp_multiplier(op, t, u))
    direct = exp_multiplier(op, s + t, u)
    residual = nested - direct
    result = profile(residual)
    result.overflow_levels = sorted(set(overflow_levels(nested)) | set(overflow_levels(direct)))
    return result


def group_law_holds(residual: SeminormProfile, *fields: SpectralField, rel: float = 1e-10) -> bool:
    """residual_j <= rel (1 + sum of p_j over the given fields), skipping overflow levels."""
    for j, value in enumerate(residual.values, start=1):
        if j in residual.overflow_levels:
            continue
        scale = 1.0 + sum(seminorm(f, j) for f in fields)
        if not value <= rel * scale:
            return False
    return True


def uniform_continuity_gap(op, t: float, j: int, grid=None) -> tuple[float, float]:
    """(max over ball j of |e^{t a} - 1|, e^{t p_j^X(A)} - 1)."""
    if t < 0:
        raise PreconditionError("uniform_continuity_gap needs t >= 0")
    op = as_operator(op, grid)
    mask = op.grid.ball_mask(j)
    lhs = float(np.max(np.abs(complex_expm1(t * op.node_values[mask]))))
    rhs = float(np.expm1(t * operator_seminorm(op, j)))
    return lhs, rhs


def generator_residual(op, t: float, u: SpectralField, j: int) -> float:
    """p_j((e^{tA}u - u)/t - Au)."""
    if t == 0:
        raise PreconditionError("generator_residual needs t != 0")
    op = as_operator(op, u.grid)
    a = op.node_values
    values = (complex_expm1(t * a) / t - a) * u.values
    return seminorm(u.with_values(values), j)


def generator_bound(op, t: float, u: SpectralField, j: int) -> float:
    """((e^{|t| w_j} - 1)/|t| - w_j) p_j(u)."""
    op = as_operator(op, u.grid)
    w = operator_seminorm(op, j)
    return float((np.expm1(abs(t) * w) / abs(t) - w) * seminorm(u, j))


def recover_generator(group: Callable[[float], Callable[[SpectralField], SpectralField]], t: float,
                      u: SpectralField) -> SpectralField:
    """(T(t)u - u)/t for a group known only through its action."""
    if t == 0:
        raise PreconditionError("recover_generator needs t != 0")
    return (group(t)(u) - u) * (1.0 / t)


def multiplier_group(op: MultiplierOperator) -> Callable[[float], Callable[[SpectralField], SpectralField]]:
    return lambda t: (lambda u: exp_multiplier(op, t, u))


def growth_bound_check(op, times, grid=None) -> pd.DataFrame:
    """Rows (t, j, lhs = p_j^X(e^{tA}), rhs = e^{w_j |t|}); compared in log space."""
    op = as_operator(op, grid)
    rows = []
    for t in times:
        log_mag = (t * op.node_values).real
        for j in range(1, op.grid.J + 1):
            w = operator_seminorm(op, j)
            lhs_log = float(np.max(log_mag[op.grid.ball_mask(j)]))
            rhs_log = w * abs(t)
            rows.append({"t": t, "j": j, "lhs": _safe_exp(lhs_log), "rhs": _safe_exp(rhs_log),
                         "pass": lhs_log <= rhs_log * (1 + 1e-15) + 1e-15})
    return pd.DataFrame(rows)


@dataclass
class DerivativeCheck:
    h: float
    errors_h: tuple[float, float]
    errors_h10: tuple[float, float]

    @property
    def ratio(self) -> float:
        return max(self.errors_h) / max(self.errors_h10)


def derivative_check(op, t: float, u: SpectralField, h: float = 1e-2, j: int | None = None) -> DerivativeCheck:
    """
    Centered difference (e^{(t+h)A}u - e^{(t-h)A}u)/(2h) against A e^{tA}u and e^{tA}Au,
    at h and h/10. Second order means the error ratio is close to 100.
    """
    op = as_operator(op, u.grid)
    j = j or u.grid.J
    target_left = op.apply(exp_multiplier(op, t, u))
    target_right = exp_multiplier(op, t, op.apply(u))

    def errors(step):
        centered = (exp_multiplier(op, t + step, u) - exp_multiplier(op, t - step, u)) * (0.5 / step)
        return seminorm(centered - target_left, j), seminorm(centered - target_right, j)

    return DerivativeCheck(h, errors(h), errors(h / 10))


# quotient diagrams

def level_operator(op: FieldOperator, q: QuotientElement) -> QuotientElement:
    """A_j on X_j: apply A to the zero extension and project back to level j."""
    return project(op.apply(q.to_field()), q.j)


@dataclass
class DiagramReport:
    j: int
    d1_pass: bool
    d2_pass: bool
    witness: tuple | None = None
    witness_diagram: str | None = None

    @property
    def passed(self) -> bool:
        return self.d1_pass and self.d2_pass


def _first_difference(grid, j: int, left: np.ndarray, right: np.ndarray) -> tuple | None:
    differs = np.flatnonzero(left != right)
    if len(differs) == 0:
        return None
    ball_nodes = np.argwhere(grid.ball_mask(j))
    idx = tuple(int(v) for v in ball_nodes[differs[0]])
    return tuple(float(v) for v in grid.xi[(slice(None),) + idx])


def verify_quotient_diagrams(op, u: SpectralField, j: int) -> DiagramReport:
    """
    D1: sigma_j(Au) = A_j sigma_j(u). D2: pi_j(A_{j+1} sigma_{j+1}(u)) = A_j sigma_j(u).
    Samples are compared bitwise.
    """
    if not (1 <= j < u.grid.J):
        raise PreconditionError(f"verify_quotient_diagrams needs 1 <= j < J, got j={j}")
    op = as_operator(op, u.grid)
    reduced = level_operator(op, project(u, j))
    direct = project(op.apply(u), j)
    upper = restrict(level_operator(op, project(u, j + 1)), j)
    d1 = bool(np.array_equal(direct.values, reduced.values))
    d2 = bool(np.array_equal(upper.values, reduced.values))
    report = DiagramReport(j, d1, d2)
    if not d1:
        report.witness = _first_difference(u.grid, j, direct.values, reduced.values)
        report.witness_diagram = 'D1'
    elif not d2:
        report.witness = _first_difference(u.grid, j, upper.values, reduced.values)
        report.witness_diagram = 'D2'
    return report
