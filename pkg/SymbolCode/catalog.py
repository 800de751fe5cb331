import logging

from SymbolCode.parser import parse_symbol
from SymbolCode.polynomial import PolynomialSymbol, diffop_to_symbol, parse_diffop, to_polynomial

logger = logging.getLogger(__name__)

# named worked examples, as mini-language text per dimension
NAMED_SYMBOLS = {
    "heat": {1: "-(1 + 4*pi^2*xi^2)", 2: "-(1 + 4*pi^2*(xi1^2 + xi2^2))"},
    "backward-heat": {1: "1 + 4*pi^2*xi^2", 2: "1 + 4*pi^2*(xi1^2 + xi2^2)"},
    "ddx": {1: "2*pi*i*xi"},
    "i-ddx": {1: "-2*pi*xi"},
    "bilaplacian": {1: "-16*pi^4*xi^4"},
    "laplacian": {1: "-4*pi^2*xi^2", 2: "-4*pi^2*(xi1^2 + xi2^2)"},
    "const": {1: "5 + 3*i", 2: "5 + 3*i"},
}


def named_symbol(name: str, n: int = 1) -> PolynomialSymbol:
    try:
        text = NAMED_SYMBOLS[name][n]
    except KeyError:
        raise KeyError(f"No named symbol {name!r} in dimension {n}")
    return to_polynomial(parse_symbol(text, n), label=name)


def resolve_symbol(text: str | None = None, n: int = 1, diffop: str | None = None,
                   convention: str = 'partial') -> PolynomialSymbol:
    """A named symbol, mini-language text, or a diffop coefficient list."""
    if diffop:
        symbol = diffop_to_symbol(parse_diffop(diffop, n), convention, n)
        return PolynomialSymbol(symbol.n, symbol.coeffs, label=f"diffop[{diffop}]")
    if text is None:
        raise ValueError("Either a symbol text or a diffop list is required")
    if text in NAMED_SYMBOLS:
        return named_symbol(text, n)
    return to_polynomial(parse_symbol(text, n), label=text)
