"""
The heat equation regularity story as data.

For t < 0 the weighted integrals int_{|xi|<=R} e^{-2t(1+4 pi^2 xi^2)} (1+|xi|)^{2M} dxi grow
without bound in R; at t = 0 the group is the identity; for t > 0 the integrals converge and
seminorm profiles decay in t. Membership in a function space is not decidable from finite data,
so only these two surrogates are reported.
"""
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass
from typing import List

import numpy as np
import pandas as pd
from tqdm import tqdm

from FlowEngine.field import SAT_EXPONENT, SATURATION, make_field, profile, seminorm
from FlowEngine.grid import make_grid
from FlowEngine.group import evolve, exp_multiplier
from FlowEngine.operators import multiplier
from SymbolCode.catalog import named_symbol
from Utils.env import get_thread_cap
from Utils.errors import PreconditionError

logger = logging.getLogger(__name__)

DEFAULT_TIMES = [-0.1, 0.1]
DEFAULT_MS = [0, 1, 2]
DEFAULT_RS = [1, 2, 4, 8, 16, 32, 64]
DEFAULT_H = 1.0 / 64
PROFILE_TIMES = [0.0, 0.1, 1.0]


@dataclass
class HeatScanRow:
    t: float
    M: int
    R: float
    value: float
    log_value: float
    overflow: bool = False


def weighted_integral_log(t: float, M: int, R: float, h: float = DEFAULT_H) -> float:
    """log of the rectangle-rule value of the weighted heat integral on [-R, R]."""
    K = int(math.floor(R / h + 1e-9))
    xi = h * np.arange(-K, K + 1)
    log_integrand = -2.0 * t * (1.0 + 4.0 * math.pi ** 2 * xi ** 2) + 2.0 * M * np.log1p(np.abs(xi))
    return float(np.logaddexp.reduce(log_integrand) + math.log(h))


def _row(t: float, M: int, R: float, h: float) -> HeatScanRow:
    log_value = weighted_integral_log(t, M, R, h)
    if log_value > SAT_EXPONENT:
        return HeatScanRow(t, M, R, SATURATION, log_value, True)
    return HeatScanRow(t, M, R, math.exp(log_value), log_value)


def heat_scan(ts=DEFAULT_TIMES, Ms=DEFAULT_MS, Rs=DEFAULT_RS, h: float = DEFAULT_H,
              progress: bool = False) -> pd.DataFrame:
    """One row per (t, M, R). Values above e^709 saturate; log_value stays exact."""
    Rs = list(Rs)
    if any(b <= a for a, b in zip(Rs, Rs[1:])):
        raise PreconditionError("heat_scan needs R increasing")
    cells = [(float(t), int(M), float(R)) for t in ts for M in Ms for R in Rs]
    with ThreadPoolExecutor(max_workers=get_thread_cap(len(cells))) as executor:
        rows = list(tqdm(executor.map(lambda c: _row(*c, h), cells), total=len(cells),
                         desc="heat scan", disable=not progress))
    return pd.DataFrame([asdict(r) for r in rows])


def scan_trends(scan: pd.DataFrame) -> pd.DataFrame:
    """Per (t, M): relative change over the last R doubling and the last/first growth factor."""
    rows = []
    for (t, M), group in scan.groupby(["t", "M"], sort=True):
        logs = group.sort_values("R")["log_value"].to_numpy()
        last_change = float(np.expm1(logs[-1] - logs[-2])) if len(logs) > 1 else 0.0
        rows.append({
            "t": t, "M": M,
            "last_relative_change": last_change,
            "log_growth": float(logs[-1] - logs[0]),
            "converges": abs(last_change) < 1e-8,
            "overflow": bool(group["overflow"].any()),
        })
    return pd.DataFrame(rows)


def heat_profiles(times: List[float] = PROFILE_TIMES, J: int = 8, inv_h: int = 32,
                  init: str = "ones") -> pd.DataFrame:
    grid = make_grid(n=1, J=J, inv_h=inv_h)
    trajectory = evolve(multiplier(named_symbol("heat"), grid), times, make_field(grid, init))
    return trajectory.to_frame()


def profiles_decay(frame: pd.DataFrame) -> bool:
    """Seminorms strictly decrease in t at every level (ignoring t <= 0)."""
    positive = frame[frame["t"] >= 0]
    for _, group in positive.groupby("j"):
        values = group.sort_values("t")["seminorm"].to_numpy()
        if not np.all(np.diff(values) < 0):
            return False
    return True


def identity_gap(J: int = 8, inv_h: int = 32, init: str = "gaussian-hat") -> float:
    """max_j p_j(e^{0 A}u - u)."""
    grid = make_grid(n=1, J=J, inv_h=inv_h)
    u = make_field(grid, init)
    same = exp_multiplier(multiplier(named_symbol("heat"), grid), 0.0, u)
    return max(seminorm(same - u, j) for j in range(1, J + 1))


def heat_demo(ts=DEFAULT_TIMES, Ms=DEFAULT_MS, Rs=DEFAULT_RS, h: float = DEFAULT_H,
              progress: bool = False) -> dict:
    """The three stages as frames: `scan`, `trends`, `profiles` and the `stages` summary."""
    scan = heat_scan(ts, Ms, Rs, h, progress)
    trends = scan_trends(scan)
    profiles = heat_profiles()
    backward = trends[trends["t"] < 0]
    forward = trends[trends["t"] > 0]
    stages = pd.DataFrame([
        {"stage": "t<0", "check": "weighted integrals grow by more than 1e6 over the R range",
         "passed": bool((backward["log_growth"] > math.log(1e6)).all()) if len(backward) else True},
        {"stage": "t=0", "check": "group is the identity",
         "passed": identity_gap() == 0.0},
        {"stage": "t>0", "check": "weighted integrals converge in R",
         "passed": bool(forward["converges"].all()) if len(forward) else True},
        {"stage": "t>0", "check": "seminorm profiles decay in t",
         "passed": profiles_decay(profiles)},
    ])
    for row in stages.itertuples():
        logger.info(f"heat demo {row.stage}: {row.check}: {'ok' if row.passed else 'FAILED'}")
    return {"scan": scan, "trends": trends, "profiles": profiles, "stages": stages}
