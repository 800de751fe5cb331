"""
Config-driven evolution runs: build the grid, symbol and initial field of a RunConfig, evolve,
and write the trajectory CSV plus a metadata sidecar into the output directory.
"""
import logging
import os
from dataclasses import dataclass, field
from typing import List

import pandas as pd

from FlowApp.outputs import ensure_dir, write_csv, write_sidecar
from FlowEngine.field import SpectralField, make_field
from FlowEngine.grid import FrequencyGrid, make_grid
from FlowEngine.group import GroupTrajectory, OracleComparison, compare_series_to_multiplier, evolve
from FlowEngine.operators import MultiplierOperator, multiplier
from FlowEngine.utils.field_io import read_field_binary, write_field_binary, write_field_csv
from FlowEngine.utils.run_logger import RunLogger
from SymbolCode.catalog import resolve_symbol
from SymbolCode.polynomial import PolynomialSymbol
from Utils.config import RunConfig
from Utils.errors import ConfigError, FrechetFlowError

logger = logging.getLogger(__name__)

TRAJECTORY_FILE = "trajectory.csv"
RESIDUAL_FILE = "residuals.csv"
SIDECAR_FILE = "metadata.yaml"
RUN_LOG_FILE = "run.log"


@dataclass
class SolveResult:
    trajectory: GroupTrajectory
    comparisons: List[OracleComparison] = field(default_factory=list)
    files: List[str] = field(default_factory=list)
    metadata: dict = field(default_factory=dict)

    @property
    def overflow(self) -> bool:
        return self.trajectory.overflow or any(c.diagnostics.overflow for c in self.comparisons)

    @property
    def residuals_pass(self) -> bool:
        return all(c.passed for c in self.comparisons)

    def residual_frame(self) -> pd.DataFrame:
        if not self.comparisons:
            return pd.DataFrame(columns=["t", "j", "residual", "bound", "status"])
        return pd.concat([c.to_frame() for c in self.comparisons], ignore_index=True)


def build_symbol(config: RunConfig) -> PolynomialSymbol:
    section = config.symbol
    try:
        return resolve_symbol(section.text, config.grid.n, section.diffop, section.convention)
    except (FrechetFlowError, KeyError, ValueError) as e:
        raise ConfigError(f"symbol: {e}")


def build_grid(config: RunConfig) -> FrequencyGrid:
    try:
        return make_grid(n=config.grid.n, J=config.grid.J, inv_h=config.grid.inv_h)
    except FrechetFlowError as e:
        raise ConfigError(f"grid: {e}")


def build_initial_field(config: RunConfig, grid: FrequencyGrid) -> SpectralField:
    if config.init.kind == "file":
        u = read_field_binary(config.init.path)
        if not u.grid.compatible(grid):
            raise ConfigError(f"init.path {config.init.path} holds a field on {u.grid}, the run uses {grid}")
        return u
    try:
        return make_field(grid, config.init.kind)
    except FrechetFlowError as e:
        raise ConfigError(f"init: {e}")


def run_solve(config: RunConfig, write: bool = True, run_logger: RunLogger | None = None) -> SolveResult:
    """
    Evolve the configured initial field. With method=both the multiplier trajectory is kept and
    every time is also run through the series; the per-level residuals go to residuals.csv.
    """
    grid = build_grid(config)
    symbol = build_symbol(config)
    u = build_initial_field(config, grid)
    op: MultiplierOperator = multiplier(symbol, grid)
    method = config.evolve.method
    tol = config.evolve.tol

    if run_logger is None:
        log_path = None
        if write:
            ensure_dir(config.output.directory)
            log_path = os.path.join(config.output.directory, RUN_LOG_FILE)
        run_logger = RunLogger({'log_path': log_path})
    run_logger.info(f"solve {symbol} on {grid} with method={method}", stage="solve")

    base_method = 'multiplier' if method == 'both' else method
    trajectory = evolve(op, config.evolve.times, u, base_method, tol, run_logger)
    comparisons = []
    if method == 'both':
        comparisons = [compare_series_to_multiplier(op, t, u, tol, run_logger) for t in trajectory.times]
    result = SolveResult(trajectory, comparisons)

    result.metadata = {
        "symbol": str(symbol),
        "order": symbol.order,
        "times": trajectory.times,
        "method": method,
        "overflow": result.overflow,
        **run_logger.metadata(),
    }
    if method == 'both':
        result.metadata["residuals_pass"] = result.residuals_pass
    if result.overflow:
        logger.warning(f"Saturated nodes in the solution of {symbol}; results are flagged")
    if write:
        result.files = _write_outputs(config, result)
    return result


def _write_outputs(config: RunConfig, result: SolveResult) -> List[str]:
    directory = config.output.directory
    files = []
    if 'csv' in config.output.formats:
        files.append(write_csv(result.trajectory.to_frame(), directory, TRAJECTORY_FILE))
        if result.comparisons:
            files.append(write_csv(result.residual_frame(), directory, RESIDUAL_FILE))
        for i, u in enumerate(result.trajectory.fields):
            path = os.path.join(directory, f"field_{i:03d}.csv")
            write_field_csv(path, u)
            files.append(path)
    if 'bin' in config.output.formats:
        for i, u in enumerate(result.trajectory.fields):
            path = os.path.join(directory, f"field_{i:03d}.bin")
            write_field_binary(path, u)
            files.append(path)
    files.append(write_sidecar(directory, SIDECAR_FILE, result.metadata, config))
    return files
