import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import List

import numpy as np
import pandas as pd
from tqdm import tqdm

from FlowEngine.field import seminorm, slow_tail_field
from FlowEngine.grid import make_grid
from FlowEngine.group import exp_multiplier
from Invariance.eprime import NOT_INVARIANT
from Invariance.l2 import decide_l2, sampled_verdict, sphere_maxima
from SymbolCode.polynomial import PolynomialSymbol
from Utils.env import get_thread_cap

logger = logging.getLogger(__name__)

CORPUS_SIZE = 50
CORPUS_SEED = 20240601
GROWTH_THRESHOLD = 1e6


def random_corpus(size: int = CORPUS_SIZE, seed: int = CORPUS_SEED, max_degree: int = 6) -> List[PolynomialSymbol]:
    """
    Random 1-D symbols of degree <= max_degree. The real part has a leading coefficient of
    magnitude in [0.5, 1] and lower coefficients in [-0.1, 0.1]; imaginary parts are uniform
    in [-1, 1] and may reach a higher degree than the real part.
    """
    rng = np.random.default_rng(seed)
    corpus = []
    for k in range(size):
        degree = int(rng.integers(0, max_degree + 1))
        re_degree = int(rng.integers(0, degree + 1))
        re = np.zeros(degree + 1)
        re[:re_degree] = rng.uniform(-0.1, 0.1, re_degree)
        re[re_degree] = rng.choice([-1.0, 1.0]) * rng.uniform(0.5, 1.0)
        im = rng.uniform(-1.0, 1.0, degree + 1)
        if re_degree < degree:
            im[degree] = rng.choice([-1.0, 1.0]) * rng.uniform(0.5, 1.0)
        coeffs = {(i,): complex(re[i], im[i]) for i in range(degree + 1)}
        corpus.append(PolynomialSymbol(1, coeffs, label=f"corpus-{k}"))
    return corpus


@dataclass
class CorpusRow:
    label: str
    degree: int
    exact: str
    sampled: str
    growth_ratio: float
    overflow: bool

    @property
    def grows(self) -> bool:
        return self.overflow or self.growth_ratio > GROWTH_THRESHOLD

    @property
    def agrees(self) -> bool:
        return self.exact == self.sampled and (self.exact == NOT_INVARIANT) == self.grows


def evolution_growth(symbol: PolynomialSymbol, t: float = 1.0, J: int = 64, inv_h: int = 4) -> tuple[float, bool]:
    """p_J(e^{tA}u)/p_J(u) for the slowly decaying field (1+|xi|^2)^-1 on a wide grid."""
    grid = make_grid(n=1, J=J, inv_h=inv_h)
    u = slow_tail_field(grid)
    evolved = exp_multiplier(symbol, t, u)
    return seminorm(evolved, J) / seminorm(u, J), evolved.overflow


def check_symbol(symbol: PolynomialSymbol, t: float = 1.0) -> CorpusRow:
    exact = decide_l2(symbol, t).verdict
    sampled = sampled_verdict(sphere_maxima(symbol))
    ratio, overflow = evolution_growth(symbol, t)
    return CorpusRow(symbol.label, symbol.order, exact, sampled, ratio, overflow)


def run_corpus(corpus: List[PolynomialSymbol] | None = None, t: float = 1.0, progress: bool = False) -> pd.DataFrame:
    """Exact verdict, sampled verdict and evolution growth for every corpus symbol, in a thread pool."""
    corpus = corpus if corpus is not None else random_corpus()
    with ThreadPoolExecutor(max_workers=get_thread_cap(len(corpus))) as executor:
        results = executor.map(lambda s: check_symbol(s, t), corpus)
        rows = list(tqdm(results, total=len(corpus), desc="corpus", disable=not progress))
    frame = pd.DataFrame([{**vars(row), "grows": row.grows, "agrees": row.agrees} for row in rows])
    disagreements = int((~frame["agrees"]).sum())
    logger.info(f"Corpus of {len(frame)} symbols: {disagreements} disagreement(s)")
    return frame

