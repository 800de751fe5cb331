"""
Smooth functions given by exact derivative oracles.

Every function exposes `table(n_max, x)`: the derivatives of orders 0..n_max at the points x,
shape (n_max + 1, len(x)). Built-ins use recurrences rather than symbolic differentiation.
"""
import logging
import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
from numpy.polynomial import polynomial as P

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class SmoothExpFunction:
    label: str
    table_fn: Callable[[int, np.ndarray], np.ndarray]
    # polynomial degree when finite; derivatives above it vanish
    degree: int | None = None

    def table(self, n_max: int, x) -> np.ndarray:
        x = np.atleast_1d(np.asarray(x, dtype=float))
        return self.table_fn(int(n_max), x)

    def derivative(self, n: int, x) -> np.ndarray:
        return self.table(n, x)[n]

    def __call__(self, x):
        value = self.derivative(0, x)
        return float(value[0]) if np.ndim(x) == 0 else value


def _hermite_table(n_max: int, x: np.ndarray, sign: float) -> np.ndarray:
    """
    Derivatives of e^{sign x^2}: f' = 2 sign x f and
    f^(k+1) = 2 sign (x f^(k) + k f^(k-1)).
    """
    out = np.empty((n_max + 1, x.size))
    out[0] = np.exp(sign * x ** 2)
    if n_max >= 1:
        out[1] = 2 * sign * x * out[0]
    for k in range(1, n_max):
        out[k + 1] = 2 * sign * (x * out[k] + k * out[k - 1])
    return out


def gaussian() -> SmoothExpFunction:
    """e^{-x^2}; derivatives follow f^(k+1) = -2x f^(k) - 2k f^(k-1)."""
    return SmoothExpFunction("gaussian", lambda n, x: _hermite_table(n, x, -1.0))


def exp_square() -> SmoothExpFunction:
    """e^{x^2}, the fast-growing counterpart of the Gaussian."""
    return SmoothExpFunction("exp-square", lambda n, x: _hermite_table(n, x, 1.0))


def polynomial(coeffs) -> SmoothExpFunction:
    """Polynomial with ascending coefficients."""
    c = P.polytrim(np.asarray(coeffs, dtype=float))
    degree = len(c) - 1 if np.any(c) else 0

    def table(n_max, x):
        out = np.zeros((n_max + 1, x.size))
        d = c
        for k in range(n_max + 1):
            if not np.any(d):
                break
            out[k] = P.polyval(x, d)
            d = P.polyder(d) if len(d) > 1 else np.zeros(1)
        return out

    terms = " + ".join(f"{v:g}*x^{i}" for i, v in enumerate(c) if v) or "0"
    return SmoothExpFunction(f"poly[{terms}]", table, degree)


def poly_gaussian(coeffs) -> SmoothExpFunction:
    """p(x) e^{-x^2} by the Leibniz rule."""
    p = polynomial(coeffs)
    g = gaussian()

    def table(n_max, x):
        pt = p.table(n_max, x)
        gt = g.table(n_max, x)
        out = np.zeros((n_max + 1, x.size))
        for n in range(n_max + 1):
            for k in range(min(n, p.degree) + 1):
                out[n] += math.comb(n, k) * pt[k] * gt[n - k]
        return out

    return SmoothExpFunction(f"{p.label}*gaussian", table)


def lorentzian(eps: float = 1e-6) -> SmoothExpFunction:
    """
    eps / (x^2 + eps^2) = Im 1/(x - i eps). Derivatives grow like n! / eps^(n+1) near 0, so no
    geometric rate M <= 2^20 controls them when eps is small.
    """
    def table(n_max, x):
        w = 1.0 / (x - 1j * eps)
        out = np.empty((n_max + 1, x.size))
        power = w.copy()
        factor = 1.0
        for n in range(n_max + 1):
            out[n] = (factor * power).imag
            factor *= -(n + 1)
            power = power * w
        return out

    return SmoothExpFunction(f"lorentzian[{eps:g}]", table)


def shifted(phi: SmoothExpFunction, t: float) -> SmoothExpFunction:
    """x -> phi(x + t), with the exact shifted oracle."""
    return SmoothExpFunction(f"{phi.label}(x{t:+g})", lambda n, x: phi.table_fn(n, x + t), phi.degree)


BUILTIN_FUNCTIONS = {
    "gaussian": gaussian,
    "exp-square": exp_square,
    "lorentzian": lorentzian,
}


def named_function(name: str) -> SmoothExpFunction:
    """A built-in by name, or `poly:c0,c1,...` / `polygauss:c0,c1,...`."""
    if name in BUILTIN_FUNCTIONS:
        return BUILTIN_FUNCTIONS[name]()
    if name.startswith("poly:"):
        return polynomial([float(v) for v in name[len("poly:"):].split(",")])
    if name.startswith("polygauss:"):
        return poly_gaussian([float(v) for v in name[len("polygauss:"):].split(",")])
    raise KeyError(f"Unknown function {name!r}")
