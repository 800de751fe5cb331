"""
Self-check suites, one per package area, run by `frechet_flow.py verify`.

Each suite returns a list of CheckResult. Suites are independent and run in a thread pool;
with an injected fault they run one after the other, since the fault hook is process-wide.
"""
import logging
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, Dict, List

import numpy as np
import pandas as pd
from tqdm import tqdm

from FlowApp.heat_demo import heat_demo
from FlowEngine.field import (delta_field, make_field, metric, ones_field, perturbed_quadrature, profile,
                              project, random_field, restrict, seminorm)
from FlowEngine.grid import make_grid
from FlowEngine.group import (compare_series_to_multiplier, exp_multiplier, generator_bound, generator_residual,
                              group_law_holds, growth_bound_check, uniform_continuity_gap, verify_group_law,
                              verify_quotient_diagrams)
from FlowEngine.operators import (argmax_node, check_strong_compatibility, multiplier, operator_seminorm,
                                  reflection_operator, verify_power_bound)
from FlowEngine.utils.run_logger import RunLogger
from Invariance.corpus import run_corpus
from Invariance.eprime import INVARIANT, NOT_INVARIANT, decide_eprime
from Invariance.l2 import ONE_SIDED_GROWTH, decide_l2, l2_blowup_construction
from SmoothTranslation.functions import gaussian, polynomial
from SmoothTranslation.translation import certify_membership, translate
from SymbolCode.audit import audit_order
from SymbolCode.catalog import NAMED_SYMBOLS, named_symbol
from SymbolCode.parser import parse_symbol, print_symbol
from SymbolCode.polynomial import diffop_to_symbol, to_polynomial
from Utils.config import RunConfig, parse_config
from Utils.env import get_thread_cap

logger = logging.getLogger(__name__)

VERIFY_SEED = 20240601
# weight scale used by the injected fault
FAULT_FACTOR = 1.5
ORACLE_TIMES = [-0.5, -0.1, -0.01, 0.01, 0.1, 0.5]


@dataclass
class CheckResult:
    name: str
    passed: bool
    detail: str = ""


def _check(name: str, passed, detail: str = "") -> CheckResult:
    return CheckResult(name, bool(passed), detail)


def _default_grid():
    return make_grid(n=1, J=8, inv_h=32)


def spectral_core_suite(rng: np.random.Generator) -> List[CheckResult]:
    results = []
    errors = {}
    for inv_h in (32, 64):
        grid = make_grid(n=1, J=8, inv_h=inv_h)
        u = ones_field(grid)
        errors[inv_h] = [abs(seminorm(u, j) ** 2 - 2 * j) for j in range(1, 9)]
    ratios = [a / b for a, b in zip(errors[32], errors[64])]
    results.append(_check("quadrature error halves with h", all(abs(r - 2.0) < 1e-6 for r in ratios),
                          f"ratios {min(ratios):.6g}..{max(ratios):.6g}"))

    grid = _default_grid()
    fields = [random_field(grid, rng) for _ in range(20)]
    results.append(_check("profiles are nondecreasing in j", all(profile(u).is_nondecreasing() for u in fields)))
    triangle = all(seminorm(u + v, j) <= (seminorm(u, j) + seminorm(v, j)) * (1 + 1e-12)
                   for u, v in zip(fields, fields[1:]) for j in range(1, grid.J + 1))
    results.append(_check("triangle inequality", triangle))
    homogeneous = all(math.isclose(seminorm(u * complex(2, -3), j), abs(complex(2, -3)) * seminorm(u, j), rel_tol=1e-12)
                      for u in fields for j in range(1, grid.J + 1))
    results.append(_check("absolute homogeneity", homogeneous))
    results.append(_check("truncated metric stays below 1 - 2^-J",
                          all(metric(u, v) < 1 - 0.5 ** grid.J for u, v in zip(fields, fields[1:]))))
    nested = all(np.array_equal(restrict(project(u, j + 1), j).values, project(u, j).values)
                 for u in fields[:5] for j in range(1, grid.J))
    results.append(_check("restriction of projections", nested))
    return results


def symbol_lang_suite(rng: np.random.Generator) -> List[CheckResult]:
    results = []
    fixpoint = True
    for name, texts in NAMED_SYMBOLS.items():
        for n, text in texts.items():
            printed = print_symbol(parse_symbol(text, n))
            fixpoint &= print_symbol(parse_symbol(printed, n)) == printed
    results.append(_check("parse/print fixpoint on the named symbols", fixpoint))
    heat = named_symbol("heat")
    results.append(_check("heat symbol audits as order 2", audit_order(heat, 2).passed))
    ddx = diffop_to_symbol({(1,): 1.0}, 'partial', 1)
    results.append(_check("d/dx has symbol 2 pi i xi", abs(ddx.coefficient(1) - 2j * math.pi) < 1e-12 and ddx.order == 1))
    expanded = to_polynomial(parse_symbol("(xi + 1)^2 - xi^2 - 2*xi"))
    results.append(_check("expansion cancels to a constant", expanded.order == 0))
    return results


def operator_calculus_suite(rng: np.random.Generator) -> List[CheckResult]:
    grid = _default_grid()
    op = multiplier(named_symbol("heat"), grid)
    report = check_strong_compatibility(op, rng=rng, n_random=10)
    results = [_check("heat multiplier is strongly compatible", report.passed)]
    reflection = check_strong_compatibility(reflection_operator(grid), rng=rng, n_random=2)
    results.append(_check("reflection is not strongly compatible", not reflection.passed,
                          reflection.failures()[0].witness.describe() if reflection.failures() else ""))
    powers = True
    for n in (2, 3):
        for j in range(1, grid.J + 1):
            lhs, rhs = verify_power_bound(op, n, j)
            powers &= lhs <= rhs * (1 + 1e-12)
    results.append(_check("p_j^X(A^n) <= p_j^X(A)^n", powers))
    sharp = True
    for j in range(1, grid.J + 1):
        delta = delta_field(grid, index=argmax_node(op, j))
        ratio = seminorm(op.apply(delta), j) / seminorm(delta, j)
        sharp &= math.isclose(ratio, operator_seminorm(op, j), rel_tol=1e-12)
    results.append(_check("delta at the argmax attains p_j^X", sharp))
    return results


def group_engine_suite(rng: np.random.Generator) -> List[CheckResult]:
    grid = _default_grid()
    op = multiplier(named_symbol("heat"), grid)
    fields = [random_field(grid, rng) for _ in range(10)]
    oracle = all(compare_series_to_multiplier(op, t, u).passed for u in fields for t in ORACLE_TIMES)
    results = [_check("series matches the closed form within the certified bound", oracle)]

    law = True
    for _ in range(25):
        s, t = rng.uniform(-1.0, 1.0, 2)
        u = fields[0]
        law &= group_law_holds(verify_group_law(op, s, t, u), u, exp_multiplier(op, s + t, u))
    results.append(_check("group law e^{sA} e^{tA} = e^{(s+t)A}", law))
    u = fields[1]
    back = exp_multiplier(op, -0.1, exp_multiplier(op, 0.1, u))
    results.append(_check("e^{-tA} e^{tA} recovers u",
                          all(seminorm(back - u, j) <= 1e-9 * seminorm(u, j) for j in range(1, grid.J + 1))))

    gaps = all(lhs <= rhs for t in (0.001, 0.01, 0.1) for j in range(1, grid.J + 1)
               for lhs, rhs in [uniform_continuity_gap(op, t, j)])
    results.append(_check("uniform continuity gap", gaps))

    residuals = [generator_residual(op, t, u, 1) for t in (1e-2, 1e-3, 1e-4)]
    orders = [math.log10(a / b) for a, b in zip(residuals, residuals[1:])]
    bounded = all(generator_residual(op, t, u, 1) <= generator_bound(op, t, u, 1) for t in (1e-2, 1e-3, 1e-4))
    results.append(_check("generator residual is first order", all(abs(o - 1.0) <= 0.2 for o in orders),
                          f"orders {', '.join(f'{o:.3f}' for o in orders)}"))
    results.append(_check("generator residual respects its bound", bounded))
    results.append(_check("growth bound p_j^X(e^{tA}) <= e^{w_j |t|}",
                          bool(growth_bound_check(op, [-0.1, 0.01, 0.1]).loc[:, "pass"].all())))

    diagrams = all(verify_quotient_diagrams(op, v, j).passed for v in fields for j in range(1, grid.J))
    results.append(_check("quotient diagrams commute for multipliers", diagrams))
    witness = verify_quotient_diagrams(reflection_operator(grid), fields[0], 1)
    results.append(_check("reflection breaks a quotient diagram", not witness.passed,
                          f"{witness.witness_diagram} at xi={witness.witness}"))
    return results


def invariance_suite(rng: np.random.Generator, corpus: bool = False) -> List[CheckResult]:
    eprime = {"ddx": INVARIANT, "bilaplacian": INVARIANT, "laplacian": NOT_INVARIANT}
    l2 = {"heat": INVARIANT, "backward-heat": NOT_INVARIANT, "const": INVARIANT}
    results = [_check(f"E' decision for {name}", decide_eprime(named_symbol(name)).verdict == verdict)
               for name, verdict in eprime.items()]
    results += [_check(f"L2 decision for {name}", decide_l2(named_symbol(name)).verdict == verdict)
                for name, verdict in l2.items()]
    one_sided = decide_l2(named_symbol("i-ddx"))
    results.append(_check("i d/dx is flagged as one-sided growth",
                          one_sided.verdict == NOT_INVARIANT and ONE_SIDED_GROWTH in one_sided.flags))
    blowup = l2_blowup_construction(named_symbol("backward-heat"), 0.5, 8)
    results.append(_check("blow-up sums pass the harmonic bound",
                          blowup.weighted_partials[-1] > blowup.lower_bounds[-1] and blowup.norm_partials[-1] < 1,
                          f"weighted {blowup.weighted_partials[-1]:.6g}"))
    if corpus:
        frame = run_corpus()
        results.append(_check(f"corpus of {len(frame)} symbols agrees", bool(frame["agrees"].all()),
                              f"{int((~frame['agrees']).sum())} disagreement(s)"))
    return results


def smooth_translation_suite(rng: np.random.Generator) -> List[CheckResult]:
    phi = gaussian()
    certificate = certify_membership(phi, 0, 2.0)
    worst = 0.0
    for t in (-1.0, -0.5, 0.5, 1.0):
        for s in (-2.0, -1.0, 0.0, 1.0, 2.0):
            worst = max(worst, translate(phi, t, s, 1e-8, certificate).error)
    results = [_check("Gaussian translation within 1e-7", worst <= 1e-7, f"worst error {worst:.3e}"),
               _check("Gaussian certificate audit completes", certificate.usable, certificate.status)]
    cubic = translate(polynomial([1.0, -2.0, 0.5, 3.0]), 0.7, 1.3)
    results.append(_check("cubic translation is exact after 4 terms",
                          cubic.terms == 4 and cubic.error <= 1e-12 * max(1.0, abs(cubic.exact))))
    return results


def cli_app_suite(rng: np.random.Generator) -> List[CheckResult]:
    demo = heat_demo()
    results = [_check(f"heat demo {row.stage}: {row.check}", row.passed) for row in demo["stages"].itertuples()]
    config = RunConfig()
    results.append(_check("config round trip", parse_config(config.to_yaml()) == config))
    grid = _default_grid()
    u = make_field(grid, "gaussian-hat")
    results.append(_check("t=0 returns the input",
                          np.array_equal(exp_multiplier(named_symbol("heat"), 0.0, u).values, u.values)))
    return results


SUITES: Dict[str, Callable[..., List[CheckResult]]] = {
    "spectral_core": spectral_core_suite,
    "symbol_lang": symbol_lang_suite,
    "operator_calculus": operator_calculus_suite,
    "group_engine": group_engine_suite,
    "invariance": invariance_suite,
    "smooth_translation": smooth_translation_suite,
    "cli_app": cli_app_suite,
}


@dataclass
class VerifyReport:
    frame: pd.DataFrame
    timings: Dict[str, float]

    @property
    def passed(self) -> bool:
        return bool(self.frame["passed"].all()) if len(self.frame) else True

    def failures(self) -> pd.DataFrame:
        return self.frame[~self.frame["passed"]]


def _run_suite(name: str, corpus: bool, seed: int) -> tuple[str, List[CheckResult], float]:
    start = time.perf_counter()
    rng = np.random.default_rng(seed)
    try:
        if name == "invariance":
            results = invariance_suite(rng, corpus)
        else:
            results = SUITES[name](rng)
    except Exception as e:
        logger.exception(f"Suite {name} raised")
        results = [CheckResult("suite raised", False, f"{type(e).__name__}: {e}")]
    return name, results, time.perf_counter() - start


def run_verify(scope: List[str] | None = None, corpus: bool = False, inject_fault: bool = False,
               progress: bool = False, run_logger: RunLogger | None = None) -> VerifyReport:
    """Run the selected suites (all by default); `corpus` adds the random-symbol cross-check."""
    names = list(scope) if scope else list(SUITES)
    unknown = [n for n in names if n not in SUITES]
    if unknown:
        raise ValueError(f"Unknown suite(s) {unknown}; choose from {list(SUITES)}")
    run_logger = run_logger or RunLogger()

    if inject_fault:
        # the quadrature convergence check is the one that sees the fault
        if "spectral_core" not in names:
            names.insert(0, "spectral_core")
        logger.warning(f"Injecting a fault: quadrature weight scaled by {FAULT_FACTOR}")
        with perturbed_quadrature(FAULT_FACTOR):
            outcomes = [_run_suite(n, corpus, VERIFY_SEED) for n in tqdm(names, desc="verify", disable=not progress)]
    else:
        with ThreadPoolExecutor(max_workers=get_thread_cap(len(names))) as executor:
            futures = executor.map(lambda n: _run_suite(n, corpus, VERIFY_SEED), names)
            outcomes = list(tqdm(futures, total=len(names), desc="verify", disable=not progress))

    rows, timings = [], {}
    for name, results, seconds in outcomes:
        timings[name] = seconds
        failed = sum(not r.passed for r in results)
        run_logger.suite(name, len(results) - failed, failed, seconds)
        for r in results:
            rows.append({"suite": name, "check": r.name, "passed": r.passed, "detail": r.detail})
            if not r.passed:
                logger.warning(f"[{name}] FAILED {r.name} {r.detail}")
    frame = pd.DataFrame(rows, columns=["suite", "check", "passed", "detail"])
    return VerifyReport(frame, timings)
