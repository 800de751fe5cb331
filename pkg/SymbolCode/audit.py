import logging
from dataclasses import dataclass, field
from typing import Dict

import numpy as np
import pandas as pd

from SymbolCode.polynomial import MultiIndex, PolynomialSymbol, derivative, multi_indices

logger = logging.getLogger(__name__)

# growth allowed between the sample set and its doubled copy
DOUBLING_SLACK = 0.25


@dataclass
class SymbolOrderReport:
    """Sampled audit of |d^alpha a| <= c_alpha (1+|xi|)^(m-|alpha|). Not a proof."""
    claimed_order: int
    constants: Dict[MultiIndex, float] = field(default_factory=dict)
    doubled_constants: Dict[MultiIndex, float] = field(default_factory=dict)
    passes: Dict[MultiIndex, bool] = field(default_factory=dict)
    note: str = "sampled audit, not a proof"

    @property
    def passed(self) -> bool:
        return all(self.passes.values())

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame([
            {"alpha": ".".join(map(str, alpha)), "c_hat": self.constants[alpha],
             "c_hat_doubled": self.doubled_constants[alpha], "pass": self.passes[alpha]}
            for alpha in self.constants
        ])


def default_samples(n: int) -> np.ndarray:
    """Log-spaced radii 1e-2..1e4 (plus the origin) in both directions (1-D) or 16 directions (2-D)."""
    radii = np.concatenate([[0.0], np.logspace(-2, 4, 61)])
    if n == 1:
        return np.concatenate([-radii[::-1], radii]).reshape(1, -1)
    angles = np.linspace(0.0, 2 * np.pi, 16, endpoint=False)
    rr, aa = np.meshgrid(radii, angles, indexing='ij')
    return np.stack([(rr * np.cos(aa)).ravel(), (rr * np.sin(aa)).ravel()])


def _sup_ratio(d: PolynomialSymbol, points: np.ndarray, exponent: int) -> float:
    if d.is_zero:
        return 0.0
    radius = np.sqrt(np.sum(points ** 2, axis=0))
    values = np.abs(d(points if d.n > 1 else points[0]))
    ratio = values / (1.0 + radius) ** exponent
    return float(np.max(ratio)) if np.all(np.isfinite(ratio)) else float('inf')


def audit_order(symbol: PolynomialSymbol, m: int, samples: np.ndarray | None = None) -> SymbolOrderReport:
    """
    For every |alpha| <= max(m, deg a): the sup of |d^alpha a(xi)| / (1+|xi|)^(m-|alpha|) over the
    samples. An index passes when the sup is finite and grows by at most 25% when the sample
    radius doubles.
    """
    points = default_samples(symbol.n) if samples is None else np.asarray(samples, dtype=float).reshape(symbol.n, -1)
    report = SymbolOrderReport(claimed_order=m)
    for alpha in multi_indices(symbol.n, max(m, symbol.order)):
        d = derivative(symbol, alpha)
        exponent = m - sum(alpha)
        c = _sup_ratio(d, points, exponent)
        c2 = _sup_ratio(d, 2.0 * points, exponent)
        report.constants[alpha] = c
        report.doubled_constants[alpha] = c2
        report.passes[alpha] = bool(np.isfinite(c) and np.isfinite(c2) and c2 <= (1 + DOUBLING_SLACK) * c)
    logger.debug(f"Order audit m={m} for {symbol}: {'pass' if report.passed else 'fail'}")
    return report
