"""
Invariance of compactly supported distributions (n = 1) under e^{t a(D)}, t >= 0.

The decision reads only the order m and the leading coefficient a_m: Invariant when m = 1 with
Re a_m = 0, or m = 4k with Re a_m < 0. The witness search looks for complex points z with
Re a(z) > c |Im z|, in each half-plane separately.
"""
import logging
from dataclasses import dataclass, field
from typing import List

import numpy as np
import pandas as pd
from numpy.polynomial import polynomial as P

from SymbolCode.polynomial import PolynomialSymbol
from Utils.errors import PreconditionError

logger = logging.getLogger(__name__)

DEFAULT_TAU = 1e-12

INVARIANT = "Invariant"
NOT_INVARIANT = "NotInvariant"

ZERO_SYMBOL = "zero-symbol"
CONSTANT_CAVEAT = "constant-caveat"
TOLERANCE_ZERO = "re-leading-below-tolerance"


@dataclass
class EprimeDecision:
    verdict: str
    rule: str  # 'm1-imaginary', 'm4k-negative' or 'otherwise'
    m: int
    leading: complex
    flags: List[str] = field(default_factory=list)

    @property
    def invariant(self) -> bool:
        return self.verdict == INVARIANT

    def line(self) -> str:
        flags = f" flags={','.join(self.flags)}" if self.flags else ""
        return (f"E' {self.verdict} (rule {self.rule}, m={self.m}, "
                f"a_m={self.leading.real:.6g}{self.leading.imag:+.6g}i){flags}")


def decide_eprime(symbol: PolynomialSymbol, tau: float = DEFAULT_TAU) -> EprimeDecision:
    if symbol.n != 1:
        raise PreconditionError("The compact-support decision is only available for n = 1")
    m = symbol.order
    leading = symbol.coefficient(m)
    flags = []
    if symbol.is_zero:
        flags.append(ZERO_SYMBOL)
    re_leading = leading.real
    # exact zeros skip the tolerance
    re_zero = re_leading == 0.0 or abs(re_leading) < tau
    if re_leading != 0.0 and re_zero:
        flags.append(TOLERANCE_ZERO)

    if m == 1 and re_zero:
        verdict, rule = INVARIANT, "m1-imaginary"
    elif m % 4 == 0 and not re_zero and re_leading < 0:
        verdict, rule = INVARIANT, "m4k-negative"
    else:
        verdict, rule = NOT_INVARIANT, "otherwise"
    if m == 0:
        # constants only rescale the transform and keep supports whatever the sign
        flags.append(CONSTANT_CAVEAT)
    decision = EprimeDecision(verdict, rule, m, leading, flags)
    logger.debug(decision.line())
    return decision


# growth witnesses

@dataclass
class GrowthWitness:
    z: complex
    re_a: float
    c: float

    @property
    def c_abs_eta(self) -> float:
        return self.c * abs(self.z.imag)

    @property
    def margin(self) -> float:
        return self.re_a - self.c_abs_eta

    @property
    def half_plane(self) -> str:
        if self.z.imag > 0:
            return "upper"
        if self.z.imag < 0:
            return "lower"
        return "real-axis"

    def holds(self, symbol: PolynomialSymbol) -> bool:
        """Recompute Re a(z) > c |Im z| from the coefficients."""
        value = complex(P.polyval(self.z, symbol.dense))
        return value.real > self.c * abs(self.z.imag)


@dataclass
class WitnessSearch:
    decision: EprimeDecision
    c: float
    r_max: float
    witnesses: dict  # half-plane -> GrowthWitness or None
    points: pd.DataFrame

    @property
    def best(self) -> GrowthWitness | None:
        found = [w for w in self.witnesses.values() if w is not None]
        return max(found, key=lambda w: w.margin) if found else None

    @property
    def status(self) -> str:
        found = self.best is not None
        if self.decision.invariant:
            return "conflicts-with-decision" if found else "consistent-not-proven"
        return "witness-found" if found else "no-witness-up-to-rmax"


def _complex_grid(r_max: float, n_radii: int, n_angles: int) -> np.ndarray:
    radii = np.concatenate([[0.0], np.logspace(-2, np.log10(r_max), n_radii)])
    angles = np.linspace(0.0, 2 * np.pi, n_angles, endpoint=False)
    rr, aa = np.meshgrid(radii, angles, indexing='ij')
    xi, eta = rr * np.cos(aa), rr * np.sin(aa)
    # exact zeros on the axes
    xi = np.where(np.abs(xi) < 1e-12 * np.maximum(rr, 1.0), 0.0, xi)
    eta = np.where(np.abs(eta) < 1e-12 * np.maximum(rr, 1.0), 0.0, eta)
    return (xi + 1j * eta).ravel()


def witness_search(symbol: PolynomialSymbol, c: float, r_max: float = 1e4, n_radii: int = 121,
                   n_angles: int = 720) -> WitnessSearch:
    """
    Max-margin point of Re a(z) - c|Im z| on a log-polar grid, per half-plane and on the real axis.
    The status compares the outcome with decide_eprime.
    """
    if c <= 0:
        raise PreconditionError("The witness threshold c must be positive")
    decision = decide_eprime(symbol)
    z = _complex_grid(r_max, n_radii, n_angles)
    re_a = np.real(P.polyval(z, symbol.dense)) if not symbol.is_zero else np.zeros(z.shape)
    margin = re_a - c * np.abs(z.imag)
    witnesses = {}
    for name, mask in (("upper", z.imag > 0), ("lower", z.imag < 0), ("real-axis", z.imag == 0)):
        candidates = np.flatnonzero(mask & (margin > 0))
        if len(candidates) == 0:
            witnesses[name] = None
            continue
        best = candidates[np.argmax(margin[candidates])]
        witnesses[name] = GrowthWitness(complex(z[best]), float(re_a[best]), c)
    points = pd.DataFrame({"xi": z.real, "eta": z.imag, "re_a": re_a, "c_abs_eta": c * np.abs(z.imag),
                           "witness": margin > 0})
    search = WitnessSearch(decision, c, r_max, witnesses, points)
    logger.debug(f"Witness search c={c} for {symbol}: {search.status}")
    return search


def find_growth_witness(symbol: PolynomialSymbol, c: float, r_max: float = 1e4) -> GrowthWitness | None:
    return witness_search(symbol, c, r_max).best
