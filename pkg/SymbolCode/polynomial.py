import cmath
import logging
import math
from dataclasses import dataclass, field
from functools import cached_property
from itertools import product
from typing import Dict, Tuple

import numpy as np
from numpy.polynomial import polynomial as P

from SymbolCode.parser import BinOp, Const, Neg, Node, Num, Pow, SymbolExpr, Var, is_constant
from Utils.errors import DimensionMismatchError, NonPolynomialError

logger = logging.getLogger(__name__)

MultiIndex = Tuple[int, ...]


@dataclass(frozen=True, eq=False)
class PolynomialSymbol:
    """
    a(xi) = sum_alpha a_alpha xi^alpha. Exact zeros are dropped from `coeffs`;
    the order m is the largest |alpha| with a nonzero coefficient (0 for the zero symbol).
    """
    n: int
    coeffs: Dict[MultiIndex, complex] = field(default_factory=dict)
    label: str = ""

    def __post_init__(self):
        clean = {}
        for alpha, c in self.coeffs.items():
            alpha = (alpha,) if isinstance(alpha, int) else tuple(int(a) for a in alpha)
            if len(alpha) != self.n or any(a < 0 for a in alpha):
                raise DimensionMismatchError(f"Multi-index {alpha} does not fit dimension {self.n}")
            c = complex(c)
            if c != 0:
                clean[alpha] = clean.get(alpha, 0j) + c
        object.__setattr__(self, 'coeffs', {a: c for a, c in clean.items() if c != 0})

    @property
    def order(self) -> int:
        return max((sum(a) for a in self.coeffs), default=0)

    m = order

    @property
    def is_zero(self) -> bool:
        return not self.coeffs

    def coefficient(self, alpha) -> complex:
        alpha = (alpha,) if isinstance(alpha, int) else tuple(alpha)
        return self.coeffs.get(alpha, 0j)

    @cached_property
    def dense(self) -> np.ndarray:
        """Coefficient array indexed by alpha, as numpy.polynomial expects."""
        degrees = [max((a[k] for a in self.coeffs), default=0) for k in range(self.n)]
        c = np.zeros([d + 1 for d in degrees], dtype=np.complex128)
        for alpha, value in self.coeffs.items():
            c[alpha] = value
        return c

    def __call__(self, xi):
        arr = np.asarray(xi, dtype=float)
        if self.n == 1:
            if arr.ndim > 0 and arr.shape[0] == 1:
                arr = arr[0]
            return P.polyval(arr, self.dense) if self.coeffs else np.zeros_like(arr, dtype=np.complex128)
        if arr.ndim == 0 or arr.shape[0] != self.n:
            raise DimensionMismatchError(f"Point of shape {arr.shape} does not match dimension {self.n}")
        if not self.coeffs:
            return np.zeros(arr.shape[1:], dtype=np.complex128)
        return P.polyval2d(arr[0], arr[1], self.dense)

    def __eq__(self, other):
        if not isinstance(other, PolynomialSymbol):
            return NotImplemented
        return self.n == other.n and self.coeffs == other.coeffs

    def __hash__(self):
        return hash((self.n, tuple(sorted(self.coeffs.items(), key=lambda kv: kv[0]))))

    def scaled(self, factor: complex) -> "PolynomialSymbol":
        return PolynomialSymbol(self.n, {a: c * factor for a, c in self.coeffs.items()}, self.label)

    def __str__(self):
        if self.label:
            return self.label
        terms = []
        for alpha, c in sorted(self.coeffs.items()):
            monomial = "*".join(
                (f"xi^{a}" if self.n == 1 else f"xi{k + 1}^{a}") for k, a in enumerate(alpha) if a)
            terms.append(f"({c.real:.6g}{c.imag:+.6g}*i)" + (f"*{monomial}" if monomial else ""))
        return " + ".join(terms) or "0"


def eval_symbol(symbol, xi) -> complex:
    """Evaluate a PolynomialSymbol or SymbolExpr at a single point."""
    arr = np.atleast_1d(np.asarray(xi, dtype=float))
    if arr.shape != (symbol.n,):
        raise DimensionMismatchError(f"Point {arr.tolist()} does not match dimension {symbol.n}")
    return complex(np.asarray(symbol(arr)).reshape(-1)[0])


# expansion of expression trees

# largest total degree an expanded symbol may reach
MAX_DEGREE = 64


def _degree(p: dict) -> int:
    return max((sum(a) for a in p), default=0)


def _check_degree(p: dict) -> dict:
    if _degree(p) > MAX_DEGREE:
        raise NonPolynomialError(f"Expanded symbol has degree {_degree(p)}, above the limit of {MAX_DEGREE}")
    return p


def _add(p: dict, q: dict, sign: float = 1.0) -> dict:
    out = dict(p)
    for a, c in q.items():
        out[a] = out.get(a, 0j) + sign * c
    return out


def _mul(p: dict, q: dict) -> dict:
    out: dict = {}
    for a, c in p.items():
        for b, d in q.items():
            key = tuple(x + y for x, y in zip(a, b))
            out[key] = out.get(key, 0j) + c * d
    return out


def _expand(node: Node, n: int) -> dict:
    zero = (0,) * n
    if isinstance(node, Num):
        return {zero: complex(node.value)}
    if isinstance(node, Const):
        return {zero: complex(math.pi) if node.name == 'pi' else 1j}
    if isinstance(node, Var):
        return {tuple(1 if k == node.index else 0 for k in range(n)): 1 + 0j}
    if isinstance(node, Neg):
        return {a: -c for a, c in _expand(node.operand, n).items()}
    if isinstance(node, Pow):
        base = _expand(node.base, n)
        if node.exponent < 0:
            if not is_constant(node.base):
                raise NonPolynomialError("Negative power of a non-constant expression")
            value = base.get(zero, 0j)
            if value == 0:
                raise NonPolynomialError("Negative power of zero")
            try:
                return {zero: value ** node.exponent}
            except OverflowError:
                raise NonPolynomialError(f"Constant power {value} ^ {node.exponent} overflows")
        degree = _degree(base) * node.exponent
        if degree > MAX_DEGREE:
            raise NonPolynomialError(f"Power of degree {degree} is above the limit of {MAX_DEGREE}")
        result = {zero: 1 + 0j}
        for _ in range(node.exponent):
            result = _mul(result, base)
        return result
    left = _expand(node.left, n)
    right = _expand(node.right, n)
    if node.op == '+':
        return _add(left, right)
    if node.op == '-':
        return _add(left, right, -1.0)
    if node.op == '*':
        return _check_degree(_mul(left, right))
    if not is_constant(node.right):
        raise NonPolynomialError("Division by an expression involving xi")
    divisor = right.get(zero, 0j)
    if divisor == 0:
        raise NonPolynomialError("Division by zero")
    return {a: c / divisor for a, c in left.items()}


def to_polynomial(expr: SymbolExpr, label: str = "") -> PolynomialSymbol:
    coeffs = _expand(expr.root, expr.n)
    if not all(cmath.isfinite(c) for c in coeffs.values()):
        raise NonPolynomialError(f"Coefficients of {expr.text or 'the symbol'} overflow double precision")
    return PolynomialSymbol(expr.n, coeffs, label or expr.text)


# differential operators

_I_POWERS = (1, 1j, -1, -1j)


def two_pi_i_power(k: int) -> complex:
    """(2 pi i)^k with the power of i taken exactly."""
    return (2 * math.pi) ** k * _I_POWERS[k % 4]


def diffop_to_symbol(coeffs: Dict, convention: str = 'partial', n: int | None = None) -> PolynomialSymbol:
    """
    Symbol of sum_alpha c_alpha op^alpha. With convention 'D' (D = (2 pi i)^-1 d/dx) the
    coefficients pass through; with 'partial' each c_alpha is multiplied by (2 pi i)^|alpha|.
    """
    if convention not in ('D', 'partial'):
        raise ValueError(f"Unknown convention {convention!r} (use 'D' or 'partial')")
    normalized = {}
    for alpha, c in coeffs.items():
        alpha = (alpha,) if isinstance(alpha, int) else tuple(alpha)
        normalized[alpha] = complex(c)
    if n is None:
        n = len(next(iter(normalized))) if normalized else 1
    if convention == 'D':
        return PolynomialSymbol(n, normalized)
    return PolynomialSymbol(n, {a: c * two_pi_i_power(sum(a)) for a, c in normalized.items()})


def parse_diffop(text: str, n: int = 1) -> Dict[MultiIndex, complex]:
    """
    Parse `alpha:re,im;alpha:re,im;...`. In 2-D alpha is written with a dot, e.g. `2.0` for (2, 0).
    """
    coeffs: Dict[MultiIndex, complex] = {}
    for item in filter(None, (part.strip() for part in text.split(';'))):
        try:
            alpha_text, value_text = item.split(':')
            alpha = tuple(int(a) for a in alpha_text.strip().split('.'))
            parts = [float(v) for v in value_text.split(',')]
        except ValueError:
            raise ValueError(f"Malformed diffop entry {item!r} (expected alpha:re,im)")
        if len(alpha) != n or len(parts) not in (1, 2):
            raise ValueError(f"Malformed diffop entry {item!r} for dimension {n}")
        re_part, im_part = parts[0], parts[1] if len(parts) == 2 else 0.0
        coeffs[alpha] = coeffs.get(alpha, 0j) + complex(re_part, im_part)
    return coeffs


# exact calculus on coefficients

def derivative(symbol: PolynomialSymbol, alpha) -> PolynomialSymbol:
    alpha = (alpha,) if isinstance(alpha, int) else tuple(alpha)
    out = {}
    for beta, c in symbol.coeffs.items():
        if all(b >= a for a, b in zip(alpha, beta)):
            factor = 1
            for a, b in zip(alpha, beta):
                factor *= math.perm(b, a)
            out[tuple(b - a for a, b in zip(alpha, beta))] = c * factor
    return PolynomialSymbol(symbol.n, out)


def multi_indices(n: int, max_order: int):
    for alpha in product(range(max_order + 1), repeat=n):
        if sum(alpha) <= max_order:
            yield alpha


def real_part(symbol: PolynomialSymbol) -> np.ndarray:
    """Coefficients (ascending) of Re a(xi) for real xi, trailing zeros stripped. 1-D only."""
    if symbol.n != 1:
        raise DimensionMismatchError("real_part is defined for n=1 symbols")
    c = np.real(symbol.dense).astype(float)
    return P.polytrim(c) if np.any(c) else np.zeros(1)


def sup_abs_on_ball(symbol: PolynomialSymbol, j: float) -> float:
    """
    sup of |a| over |xi| <= j. In 1-D from the critical points of |a|^2 (exact up to root
    finding); in 2-D by dense polar sampling.
    """
    if symbol.is_zero:
        return 0.0
    if symbol.n == 1:
        c = symbol.dense
        modulus_sq = np.real(P.polymul(c, np.conj(c)))
        candidates = [-float(j), float(j)]
        crit = P.polytrim(P.polyder(modulus_sq))
        if len(crit) > 1:
            roots = P.polyroots(crit)
            candidates += [r.real for r in roots if abs(r.imag) < 1e-9 and abs(r.real) <= j]
        return float(np.max(np.abs(symbol(np.asarray(candidates)))))
    radii = np.linspace(0.0, j, 401)
    angles = np.linspace(0.0, 2 * np.pi, 721)
    rr, aa = np.meshgrid(radii, angles, indexing='ij')
    points = np.stack([rr * np.cos(aa), rr * np.sin(aa)])
    return float(np.max(np.abs(symbol(points))))
