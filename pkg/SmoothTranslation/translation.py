import logging
import math
from dataclasses import dataclass

import numpy as np
import pandas as pd

from FlowEngine.group import scalar_tail
from SmoothTranslation.functions import SmoothExpFunction
from Utils.errors import PreconditionError, UncertifiedFunctionError

logger = logging.getLogger(__name__)

DEFAULT_DELTA = 1e-3
DEFAULT_N_MAX = 40
RATIO_THRESHOLD = 10.0
MAX_M = 2 ** 20
# growth-rate increase (per order, in log) that marks super-exponential derivatives
TREND_THRESHOLD = 0.15


def sample_points(j: float, delta: float = DEFAULT_DELTA) -> np.ndarray:
    if delta <= 0:
        raise ValueError("delta must be positive")
    return np.linspace(-j, j, int(round(2 * j / delta)) + 1)


def cinf_seminorm(phi: SmoothExpFunction, m: int, j: float, delta: float = DEFAULT_DELTA) -> float:
    """max |phi^(m)| over the delta-grid on [-j, j]."""
    return float(np.max(np.abs(phi.derivative(m, sample_points(j, delta)))))


@dataclass
class ExpCertificate:
    """
    Window audit of sup_n M^-n p_(m,j)(phi^(n)) / p_(m,j)(phi) for n <= n_max. Not a proof.
    `seminorms` holds p_(m,j)(phi^(n)) for n = 0..n_max.
    """
    label: str
    m: int
    j: float
    n_max: int
    estimated_M: float | None
    observed_ratio: float
    claimed_M: float
    claimed_M_ratio: float
    superexponential: bool
    seminorms: np.ndarray

    @property
    def usable(self) -> bool:
        return self.estimated_M is not None

    @property
    def bound_constant(self) -> float:
        """C with p_(m,j)(phi^(n)) <= C M^n over the window."""
        scale = float(self.seminorms[0]) if self.seminorms[0] > 0 else 1.0
        return max(self.observed_ratio, 1.0) * scale

    @property
    def claimed_M_passes(self) -> bool:
        return self.claimed_M_ratio <= RATIO_THRESHOLD

    @property
    def status(self) -> str:
        if not self.usable:
            return "failed"
        return "window-only" if self.superexponential else "certified"

    def summary(self) -> dict:
        return {"function": self.label, "m": self.m, "j": self.j, "n_max": self.n_max,
                "estimated_M": self.estimated_M, "observed_ratio": self.observed_ratio,
                "M_2j": self.claimed_M, "M_2j_ratio": self.claimed_M_ratio, "M_2j_passes": self.claimed_M_passes,
                "superexponential": self.superexponential, "status": self.status}


def _window_ratio(log_s: np.ndarray, M: float) -> float:
    orders = np.arange(len(log_s))
    with np.errstate(invalid='ignore'):
        logs = log_s - orders * math.log(M)
    peak = float(np.max(logs))
    if not math.isfinite(peak):
        return math.inf if peak > 0 or math.isnan(peak) else 0.0
    return math.exp(peak) if peak < 709 else math.inf


def _superexponential(log_s: np.ndarray) -> bool:
    """Compare the average log-growth per order over the second and the last quarter of the window."""
    finite = np.isfinite(log_s)
    n = len(log_s) - 1
    if n < 8 or not finite.all():
        return bool(n >= 8 and np.any(np.isposinf(log_s)))
    q = n // 4
    early = (log_s[2 * q] - log_s[q]) / q
    late = (log_s[n] - log_s[n - q]) / q
    return bool(late - early > TREND_THRESHOLD)


def certify_membership(phi: SmoothExpFunction, m: int, j: float, n_max: int = DEFAULT_N_MAX,
                       delta: float = DEFAULT_DELTA) -> ExpCertificate:
    """
    Smallest M in 1, 2, 4, ..., 2^20 with sup_{n <= n_max} M^-n p_(m,j)(phi^(n)) <= 10 p_(m,j)(phi), the same
    ratio at M = 2j, and a flag for derivative growth that is faster than geometric.
    """
    if n_max < 1:
        raise ValueError("n_max must be at least 1")
    x = sample_points(j, delta)
    with np.errstate(over='ignore', invalid='ignore'):
        table = phi.table(n_max + m, x)
        s = np.max(np.abs(table[m:]), axis=1)
    s = np.where(np.isnan(s), np.inf, s)
    log_s = np.full(s.shape, -np.inf)
    log_s[s > 0] = np.log(s[s > 0])
    # growth is measured relative to the order-0 seminorm
    if np.isfinite(log_s[0]):
        log_s = log_s - log_s[0]
    estimated = None
    observed = _window_ratio(log_s, MAX_M)
    M = 1
    while M <= MAX_M:
        ratio = _window_ratio(log_s, M)
        if ratio <= RATIO_THRESHOLD:
            estimated, observed = float(M), ratio
            break
        M *= 2
    claimed_M = 2.0 * j
    certificate = ExpCertificate(phi.label, m, j, n_max, estimated, observed, claimed_M,
                                 _window_ratio(log_s, claimed_M), _superexponential(log_s), s)
    logger.info(f"Certificate for {phi.label} (m={m}, j={j:g}, n_max={n_max}): {certificate.status}, "
                f"M={estimated}, M=2j passes: {certificate.claimed_M_passes}")
    return certificate


@dataclass
class TranslationResult:
    t: float
    s: float
    value: float
    terms: int
    tail_bound: float
    exact: float

    @property
    def error(self) -> float:
        return abs(self.value - self.exact)


def translate(phi: SmoothExpFunction, t: float, s: float, tol: float = 1e-8,
              certificate: ExpCertificate | None = None, max_terms: int = 1000) -> TranslationResult:
    """
    sum_n t^n/n! phi^(n)(s), stopped once the last term and the certified tail
    C * sum_{n > N} (|t| M)^n / n! are both below tol. Polynomials stop after degree + 1 terms.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    exact = float(phi.derivative(0, [s + t])[0])
    if t == 0:
        return TranslationResult(t, s, float(phi.derivative(0, [s])[0]), 1, 0.0, exact)
    if certificate is None:
        certificate = certify_membership(phi, 0, max(1.0, float(math.ceil(abs(s)))))
    if not certificate.usable:
        raise UncertifiedFunctionError(f"{phi.label} has no growth certificate (status {certificate.status})")
    if abs(s) > certificate.j:
        raise PreconditionError(f"Certificate covers |x| <= {certificate.j:g}, not s={s:g}")
    C = certificate.bound_constant
    rate = abs(t) * certificate.estimated_M

    n_hi = 64
    table = phi.table(n_hi, [s])[:, 0]
    total = 0.0
    coefficient = 1.0
    n = 0
    tail = math.inf
    while True:
        if n > n_hi:
            n_hi *= 2
            table = phi.table(n_hi, [s])[:, 0]
        term = coefficient * table[n]
        total += term
        if phi.degree is not None and n >= phi.degree:
            tail = 0.0
            break
        tail = C * scalar_tail(rate, n)
        if abs(term) < tol and tail < tol:
            break
        if n >= max_terms:
            raise UncertifiedFunctionError(f"Translation of {phi.label} did not converge in {max_terms} terms")
        n += 1
        coefficient *= t / n
    result = TranslationResult(t, s, total, n + 1, tail, exact)
    logger.debug(f"translate {phi.label} t={t:g} s={s:g}: {result.terms} terms, error {result.error:.3e}")
    return result


def translation_table(phi: SmoothExpFunction, t: float, samples: np.ndarray, tol: float = 1e-8) -> pd.DataFrame:
    """Rows (s, series value, phi(s+t), error) for the CLI."""
    j = max(1.0, float(math.ceil(np.max(np.abs(samples)))))
    certificate = certify_membership(phi, 0, j)
    rows = []
    for s in samples:
        result = translate(phi, t, float(s), tol, certificate)
        rows.append({"s": float(s), "series": result.value, "exact": result.exact, "error": result.error,
                     "terms": result.terms})
    return pd.DataFrame(rows)
