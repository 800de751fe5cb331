import logging
import math
from dataclasses import dataclass, field
from typing import List

import numpy as np
import pandas as pd
from numpy.polynomial import polynomial as P

from Invariance.eprime import INVARIANT, NOT_INVARIANT
from SymbolCode.polynomial import PolynomialSymbol, real_part
from Utils.errors import PreconditionError

logger = logging.getLogger(__name__)

UNDETERMINED = "Undetermined"
ONE_SIDED_GROWTH = "one-sided-growth"
ONE_SIDED_NOTE = ("Re a has odd degree: it is bounded above on one half-line only, so the "
                  "whole-line criterion rejects it even though a half-line reading would not")

SPHERE_EXPONENTS = range(0, 21)
SPHERE_DIRECTIONS = 64
TREND_WINDOW = 5


@dataclass
class L2Decision:
    verdict: str
    method: str  # 'exact-1d', 'sampled' or 'trivial'
    sup_re_a: float
    t: float
    eventually_nonpositive: bool
    flags: List[str] = field(default_factory=list)
    notes: List[str] = field(default_factory=list)
    maxima: pd.DataFrame | None = None

    @property
    def invariant(self) -> bool:
        return self.verdict == INVARIANT

    def line(self) -> str:
        flags = f" flags={','.join(self.flags)}" if self.flags else ""
        return (f"L2 {self.verdict} at t={self.t:g} (method {self.method}, sup Re a ~ {self.sup_re_a:.6g}, "
                f"Re a <= 0 at large |xi|: {self.eventually_nonpositive}){flags}")


def _sphere_points(n: int, radius: float) -> np.ndarray:
    if n == 1:
        return np.array([[-radius, radius]])
    angles = np.linspace(0.0, 2 * np.pi, SPHERE_DIRECTIONS, endpoint=False)
    return np.stack([radius * np.cos(angles), radius * np.sin(angles)])


def sphere_maxima(symbol: PolynomialSymbol) -> pd.DataFrame:
    """max Re a over spheres of radius 2^k, k = 0..20, plus the argmax direction."""
    rows = []
    for k in SPHERE_EXPONENTS:
        radius = 2.0 ** k
        points = _sphere_points(symbol.n, radius)
        values = np.real(symbol(points if symbol.n > 1 else points[0]))
        best = int(np.argmax(values))
        rows.append({"radius": radius, "max_re_a": float(values[best]),
                     **{f"dir_{i + 1}": float(points[i, best] / radius) for i in range(symbol.n)}})
    return pd.DataFrame(rows)


def sampled_verdict(maxima: pd.DataFrame) -> str:
    """Strictly increasing over the last radii -> NotInvariant, nonincreasing -> Invariant."""
    tail = maxima["max_re_a"].to_numpy()[-TREND_WINDOW:]
    steps = np.diff(tail)
    if np.all(steps > 0):
        return NOT_INVARIANT
    if np.all(steps <= 0):
        return INVARIANT
    return UNDETERMINED


def _exact_1d(symbol: PolynomialSymbol, t: float) -> L2Decision:
    r = real_part(symbol)
    degree = len(r) - 1
    leading = float(r[-1])
    flags, notes = [], []
    if degree == 0:
        return L2Decision(INVARIANT, "exact-1d", leading, t, leading <= 0)
    if degree % 2 == 0 and leading < 0:
        candidates = [0.0]
        crit = P.polyder(r)
        if len(P.polytrim(crit)) > 1:
            candidates += [z.real for z in P.polyroots(P.polytrim(crit)) if abs(z.imag) < 1e-9]
        sup = float(np.max(P.polyval(np.asarray(candidates), r)))
        return L2Decision(INVARIANT, "exact-1d", sup, t, True)
    if degree % 2 == 1:
        flags.append(ONE_SIDED_GROWTH)
        notes.append(ONE_SIDED_NOTE)
    return L2Decision(NOT_INVARIANT, "exact-1d", math.inf, t, False, flags, notes)


def decide_l2(symbol: PolynomialSymbol, t: float = 1.0) -> L2Decision:
    """
    Whether e^{t a(D)} maps L^2 into itself: sup e^{t Re a} must be finite. Exact in 1-D from the
    real polynomial Re a(xi); sampled on spheres for n >= 2, with Undetermined when the trend
    of the sphere maxima is not monotone.
    """
    if t < 0:
        raise PreconditionError("decide_l2 needs t >= 0")
    maxima = sphere_maxima(symbol)
    if t == 0:
        decision = L2Decision(INVARIANT, "trivial", 0.0, t, True, maxima=maxima)
    elif symbol.n == 1:
        decision = _exact_1d(symbol, t)
        decision.maxima = maxima
    else:
        verdict = sampled_verdict(maxima)
        tail = maxima["max_re_a"].to_numpy()[-TREND_WINDOW:]
        sup = float(maxima["max_re_a"].max()) if verdict == INVARIANT else math.inf
        eventually_nonpositive = bool(np.all(tail <= 0))
        decision = L2Decision(verdict, "sampled", sup, t, eventually_nonpositive, maxima=maxima)
    logger.debug(decision.line())
    return decision


# blow-up construction for NotInvariant symbols

@dataclass
class BlowupResult:
    """
    Disjoint lattice balls B_N along a ray where e^{2t Re a} is large, with f_N supported on B_N
    and ||f_N||^2 = 2^-N. The weighted sums grow past every harmonic lower bound.
    """
    t: float
    centers: List[np.ndarray]
    node_counts: List[int]
    weighted_partials: List[float]
    norm_partials: List[float]
    lower_bounds: List[float]

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame({
            "N": list(range(1, len(self.centers) + 1)),
            "center": [",".join(f"{c:.6g}" for c in center) for center in self.centers],
            "nodes": self.node_counts,
            "weighted_partial": self.weighted_partials,
            "norm_partial": self.norm_partials,
            "lower_bound": self.lower_bounds,
        })


def _growth_direction(symbol: PolynomialSymbol) -> np.ndarray:
    if symbol.n == 1:
        r = real_part(symbol)
        degree, leading = len(r) - 1, r[-1]
        if degree % 2 == 1:
            return np.array([1.0 if leading > 0 else -1.0])
        return np.array([1.0])
    maxima = sphere_maxima(symbol)
    last = maxima.iloc[-1]
    return np.array([last[f"dir_{i + 1}"] for i in range(symbol.n)])


def _ball_offsets(n: int, nodes_radius: int) -> np.ndarray:
    axis = np.arange(-nodes_radius, nodes_radius + 1)
    lattice = np.stack(np.meshgrid(*([axis] * n), indexing='ij')).reshape(n, -1)
    return lattice[:, np.sum(lattice ** 2, axis=0) <= nodes_radius ** 2]


def l2_blowup_construction(symbol: PolynomialSymbol, t: float, budget: int, h: float = 1.0 / 32,
                           ball_nodes_radius: int = 2, max_steps: int = 10_000_000,
                           chunk: int = 4096) -> BlowupResult:
    decision = decide_l2(symbol, t)
    if decision.verdict != NOT_INVARIANT:
        raise PreconditionError(f"Blow-up construction needs an L2 NotInvariant symbol (got {decision.verdict})")
    n = symbol.n
    direction = _growth_direction(symbol)
    offsets = _ball_offsets(n, ball_nodes_radius) * h
    separation = 2 * ball_nodes_radius + 1

    def log_weight(points):
        return 2.0 * t * np.real(symbol(points if n > 1 else points[0]))

    centers, counts, weighted, norms, lower = [], [], [], [], []
    log_total = -math.inf
    norm_total = 0.0
    step = 0
    for N in range(1, budget + 1):
        center_threshold = N * math.log(2) - math.log(N)
        ball_threshold = center_threshold - math.log(2)
        found = None
        while found is None:
            if step > max_steps:
                raise PreconditionError(f"No ball for N={N} within {max_steps} lattice steps along the ray")
            s = (step + np.arange(chunk)) * h
            center_points = direction[:, None] * s[None, :]
            ok = log_weight(center_points) >= center_threshold
            for k in np.flatnonzero(ok):
                ball = center_points[:, k:k + 1] + offsets
                if np.all(log_weight(ball) >= ball_threshold):
                    found = (step + int(k), ball)
                    break
            if found is None:
                step += chunk
        index, ball = found
        values = log_weight(ball)
        # log of 2^-N * mean(e^{2t Re a}) over the ball
        log_term = -N * math.log(2) + float(np.logaddexp.reduce(values)) - math.log(ball.shape[1])
        log_total = float(np.logaddexp(log_total, log_term))
        count = ball.shape[1]
        measure = count * h ** n
        amplitude_sq = 2.0 ** -N / measure
        norm_total += measure * amplitude_sq
        centers.append(direction * index * h)
        counts.append(count)
        weighted.append(math.exp(log_total) if log_total < 709 else math.inf)
        norms.append(norm_total)
        lower.append((lower[-1] if lower else 0.0) + 1.0 / (2 * N))
        step = index + separation
    logger.info(f"Blow-up construction for {symbol} at t={t:g}: weighted partial sum "
                f"{weighted[-1]:.6g} after {budget} balls (norm {norms[-1]:.6g})")
    return BlowupResult(t, centers, counts, weighted, norms, lower)
