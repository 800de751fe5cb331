import argparse
import logging
import os
import sys

import numpy as np

from FlowApp.heat_demo import heat_demo
from FlowApp.outputs import write_csv, write_sidecar
from FlowApp.run_solve import run_solve
from FlowApp.run_verify import SUITES, run_verify
from FlowEngine.field import make_field, metric, profile, zero_field
from FlowEngine.grid import make_grid
from FlowEngine.utils.field_io import read_field_binary
from FlowEngine.utils.run_logger import RunLogger
from Invariance.eprime import decide_eprime, witness_search
from Invariance.l2 import decide_l2, l2_blowup_construction
from SmoothTranslation.functions import named_function
from SmoothTranslation.translation import certify_membership, translation_table
from SymbolCode.catalog import resolve_symbol
from Utils.config import load_config
from Utils.errors import ConfigError, FrechetFlowError, SymbolSyntaxError
from Utils.logging_setup import setup_logging

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_OVERFLOW = 3
EXIT_VERIFY = 4

# options whose free-text value may begin with '-'
FREE_TEXT_OPTIONS = ('--samples', '--symbol', '--diffop')


def parse_samples(text: str) -> np.ndarray:
    """`a:b:step`, inclusive of b when it lies on the step grid."""
    try:
        start, stop, step = (float(v) for v in text.split(":"))
    except ValueError:
        raise ConfigError(f"--samples expects a:b:step, got {text!r}")
    if step <= 0 or stop < start:
        raise ConfigError(f"--samples {text!r} needs step > 0 and a <= b")
    count = int(np.floor((stop - start) / step + 1e-9)) + 1
    return start + step * np.arange(count)


def join_free_text_values(argv) -> list:
    """Rewrite `--samples -2:2:0.1` as `--samples=-2:2:0.1`; argparse reads a bare leading '-' as a flag."""
    out = []
    tokens = iter(argv)
    for token in tokens:
        if token not in FREE_TEXT_OPTIONS:
            out.append(token)
            continue
        value = next(tokens, None)
        if value is None or value.startswith('--'):
            out.append(token)
            if value is not None:
                out.append(value)
        else:
            out.append(f"{token}={value}")
    return out


def _symbol(args):
    convention = 'D' if args.convention.lower() == 'd' else args.convention
    return resolve_symbol(args.symbol, args.n, args.diffop, convention)


def cmd_solve(args) -> int:
    config = load_config(args.configs, args.set)
    os.makedirs(config.output.directory, exist_ok=True)
    setup_logging(config.output.log_file_path)
    result = run_solve(config)
    logging.info(f"Solve finished; {len(result.files)} file(s) in {config.output.directory}")
    if result.overflow:
        logging.warning("Result carries saturated nodes")
        return EXIT_OVERFLOW
    if not result.residuals_pass:
        logging.error("Series residual exceeded its certified bound")
        return EXIT_VERIFY
    return EXIT_OK


def cmd_heat_demo(args) -> int:
    frames = heat_demo(progress=args.progress)
    for name in ("scan", "trends", "profiles", "stages"):
        write_csv(frames[name], args.output, f"heat_{name}.csv")
    stages = frames["stages"]
    write_sidecar(args.output, "heat_metadata.yaml",
                  {"stages": [f"{r.stage}: {r.check}: {'ok' if r.passed else 'FAILED'}" for r in stages.itertuples()],
                   "overflow": bool(frames["scan"]["overflow"].any())})
    return EXIT_OK if stages["passed"].all() else EXIT_VERIFY


def cmd_check_l2(args) -> int:
    symbol = _symbol(args)
    decision = decide_l2(symbol, args.t)
    run_logger = RunLogger()
    run_logger.verdict("L2", str(symbol), decision.verdict, f"method {decision.method}")
    print(decision.line())
    for note in decision.notes:
        print(f"  note: {note}")
    if args.output:
        write_sidecar(args.output, "l2_metadata.yaml", {"t": args.t, **run_logger.metadata()})
        write_csv(decision.maxima, args.output, "l2_sphere_maxima.csv")
        if args.blowup:
            blowup = l2_blowup_construction(symbol, args.t, args.blowup)
            write_csv(blowup.to_frame(), args.output, "l2_blowup.csv")
    return EXIT_OK


def cmd_check_eprime(args) -> int:
    symbol = _symbol(args)
    decision = decide_eprime(symbol)
    run_logger = RunLogger()
    run_logger.verdict("E'", str(symbol), decision.verdict, f"rule {decision.rule}")
    print(decision.line())
    if args.output:
        write_sidecar(args.output, "eprime_metadata.yaml", {"flags": list(decision.flags), **run_logger.metadata()})
    if args.witness_c is not None:
        search = witness_search(symbol, args.witness_c, args.r_max)
        best = search.best
        where = f" at z={best.z.real:.6g}{best.z.imag:+.6g}i (margin {best.margin:.6g})" if best else ""
        print(f"  witness search c={args.witness_c:g} up to |z|={args.r_max:g}: {search.status}{where}")
        if args.output:
            write_csv(search.points[search.points["witness"]], args.output, "eprime_witnesses.csv")
    return EXIT_OK


def cmd_translate(args) -> int:
    phi = named_function(args.function)
    samples = parse_samples(args.samples)
    table = translation_table(phi, args.t, samples, args.tol)
    if args.certificate:
        j = max(1.0, float(np.ceil(np.max(np.abs(samples)))))
        certificate = certify_membership(phi, 0, j)
        print(" ".join(f"{k}={v}" for k, v in certificate.summary().items()))
    if args.output:
        write_csv(table, args.output, f"translate_{phi.label}.csv")
    else:
        table.to_csv(sys.stdout, index=False)
    return EXIT_OK


def cmd_seminorms(args) -> int:
    if args.field.endswith(".bin"):
        u = read_field_binary(args.field)
    else:
        u = make_field(make_grid(n=args.n, J=args.J, inv_h=args.inv_h), args.field)
    reference = zero_field(u.grid)
    if args.reference:
        reference = read_field_binary(args.reference) if args.reference.endswith(".bin") \
            else make_field(u.grid, args.reference)
    frame = profile(u).to_frame()
    frame.to_csv(sys.stdout, index=False)
    print(f"metric to reference (truncated at J={u.grid.J}, tail <= 2^-{u.grid.J}): {metric(u, reference):.12g}")
    return EXIT_OVERFLOW if u.overflow else EXIT_OK


def cmd_verify(args) -> int:
    run_logger = RunLogger({'verbose': args.progress})
    report = run_verify(args.scope, corpus=args.corpus, inject_fault=args.inject_fault,
                        progress=args.progress, run_logger=run_logger)
    for suite, seconds in report.timings.items():
        failed = int((~report.frame[report.frame["suite"] == suite]["passed"]).sum())
        print(f"{suite}: {'FAIL' if failed else 'ok'} ({seconds:.2f}s)")
    if args.output:
        write_csv(report.frame, args.output, "verify.csv")
        write_sidecar(args.output, "verify_metadata.yaml",
                      {"passed": report.passed, "timings": report.timings, "inject_fault": args.inject_fault})
    return EXIT_OK if report.passed else EXIT_VERIFY


def _add_symbol_args(p):
    p.add_argument('--symbol', type=str, default=None, help='Named symbol or expression in xi')
    p.add_argument('--diffop', type=str, default=None, help='Operator coefficients alpha:re,im;...')
    p.add_argument('--convention', choices=['partial', 'D', 'd'], default='partial')
    p.add_argument('--n', type=int, default=1)
    p.add_argument('--output', type=str, default=None,
                   help='Directory for the metadata sidecar and CSV tables; without it only the verdict is printed')


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(description='Groups e^{t a(D)} on the locally square-integrable Fourier space.')
    parser.add_argument('--log_file', type=str, default=None, help='Also log to this file')
    parser.add_argument('--debug', action='store_true', help='Debug-level logging')
    sub = parser.add_subparsers(dest='command', required=True)

    p = sub.add_parser('solve', help='Evolve an initial field as configured')
    p.add_argument('--configs', type=str, required=True, help='Path to the YAML run configuration')
    p.add_argument('--set', action='append', default=[], help='Override, e.g. --set evolve.method=both')
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser('heat-demo', help='Weighted integral scan and profile decay for the heat symbol')
    p.add_argument('--output', type=str, default='heat_demo_output')
    p.add_argument('--progress', action='store_true')
    p.set_defaults(func=cmd_heat_demo)

    p = sub.add_parser('check-l2', help='Decide whether e^{t a(D)} preserves L2')
    _add_symbol_args(p)
    p.add_argument('--t', type=float, default=1.0)
    p.add_argument('--blowup', type=int, default=0,
                   help='Blow-up construction budget; runs and writes l2_blowup.csv only together with --output')
    p.set_defaults(func=cmd_check_l2)

    p = sub.add_parser('check-eprime', help='Decide whether e^{t a(D)} preserves compact support')
    _add_symbol_args(p)
    p.add_argument('--witness_c', type=float, default=None,
                   help='Also search Re a(z) > c |Im z| and print the best point; '
                        'writes eprime_witnesses.csv only together with --output')
    p.add_argument('--r_max', type=float, default=1e4)
    p.set_defaults(func=cmd_check_eprime)

    p = sub.add_parser('translate', help='Taylor series of e^{t d/dx} against phi(s + t)')
    p.add_argument('--function', type=str, default='gaussian')
    p.add_argument('--t', type=float, required=True)
    p.add_argument('--samples', type=str, default='-2:2:0.5', help='a:b:step')
    p.add_argument('--tol', type=float, default=1e-8)
    p.add_argument('--certificate', action='store_true', help='Print the growth certificate summary')
    p.add_argument('--output', type=str, default=None)
    p.set_defaults(func=cmd_translate)

    p = sub.add_parser('seminorms', help='Print p_j for j = 1..J and the metric to a reference field')
    p.add_argument('--field', type=str, default='ones', help='Built-in field name or a .bin dump')
    p.add_argument('--reference', type=str, default=None)
    p.add_argument('--n', type=int, default=1)
    p.add_argument('--J', type=int, default=8)
    p.add_argument('--inv_h', type=int, default=32)
    p.set_defaults(func=cmd_seminorms)

    p = sub.add_parser('verify', help='Run the self-check suites')
    p.add_argument('--scope', nargs='*', choices=list(SUITES), default=None)
    p.add_argument('--corpus', action='store_true', help='Include the random-symbol corpus cross-check')
    p.add_argument('--inject_fault', action='store_true', help='Scale the quadrature weight; verify must fail')
    p.add_argument('--progress', action='store_true')
    p.add_argument('--output', type=str, default=None)
    p.set_defaults(func=cmd_verify)
    return parser


def main(argv=None) -> int:
    argv = join_free_text_values(sys.argv[1:] if argv is None else argv)
    args = build_parser().parse_args(argv)
    setup_logging(args.log_file, logging.DEBUG if args.debug else logging.INFO)
    if getattr(args, 'symbol', None) is None and getattr(args, 'diffop', None) is None \
            and args.command in ('check-l2', 'check-eprime'):
        logging.error("--symbol or --diffop is required")
        return EXIT_CONFIG
    try:
        return args.func(args)
    except (ConfigError, SymbolSyntaxError) as e:
        logging.error(str(e))
        return EXIT_CONFIG
    except (FrechetFlowError, ArithmeticError, KeyError, ValueError) as e:
        logging.error(f"{type(e).__name__}: {e}")
        return EXIT_CONFIG


if __name__ == '__main__':
    sys.exit(main())
