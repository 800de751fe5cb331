"""
Run configuration: YAML files with the sections grid, symbol, evolve, init and output.

Values named `default` resolve relative to the config file, as the output directory and the
log file of a batch run do. A `run` block (written into metadata sidecars) is ignored on load,
so a sidecar re-parses to the configuration that produced it.
"""
import logging
import math
import os
from typing import List, Literal

import yaml
from pydantic import BaseModel, ConfigDict, ValidationError, field_validator, model_validator

from Utils.errors import ConfigError

logger = logging.getLogger(__name__)

SECTIONS = ("grid", "symbol", "evolve", "init", "output")
METADATA_KEY = "run"


class GridSection(BaseModel):
    model_config = ConfigDict(extra='forbid')
    n: int = 1
    J: int = 8
    inv_h: int = 32

    @field_validator('n', 'J', 'inv_h')
    @classmethod
    def positive(cls, value: int) -> int:
        if value < 1:
            raise ValueError("must be a positive integer")
        return value


class SymbolSection(BaseModel):
    model_config = ConfigDict(extra='forbid')
    # a named symbol (heat, ddx, ...) or an expression in xi
    text: str | None = None
    # coefficients "alpha:re,im;..." of a constant-coefficient operator
    diffop: str | None = None
    convention: Literal['partial', 'D'] = 'partial'

    @model_validator(mode='after')
    def one_source(self):
        if (self.text is None) == (self.diffop is None):
            raise ValueError("exactly one of symbol.text and symbol.diffop must be given")
        return self


class EvolveSection(BaseModel):
    model_config = ConfigDict(extra='forbid')
    times: List[float] = [0.0, 0.1, 1.0]
    method: Literal['series', 'multiplier', 'both'] = 'multiplier'
    tol: float = 1e-8

    @field_validator('times')
    @classmethod
    def finite_times(cls, value: List[float]) -> List[float]:
        if not value:
            raise ValueError("at least one time is required")
        if not all(math.isfinite(t) for t in value):
            raise ValueError("times must be finite")
        return value

    @field_validator('tol')
    @classmethod
    def positive_tol(cls, value: float) -> float:
        if not value > 0:
            raise ValueError("tol must be positive")
        return value


class InitSection(BaseModel):
    model_config = ConfigDict(extra='forbid')
    # built-in name (ones, gaussian-hat, slow-tail, delta@x) or `file`
    kind: str = "ones"
    path: str | None = None

    @model_validator(mode='after')
    def file_needs_path(self):
        if self.kind == "file" and not self.path:
            raise ValueError("init.kind=file needs init.path")
        return self


class OutputSection(BaseModel):
    model_config = ConfigDict(extra='forbid')
    directory: str = "default"
    formats: List[Literal['csv', 'bin']] = ['csv']
    log_file_path: str = "default"


class RunConfig(BaseModel):
    model_config = ConfigDict(extra='forbid')
    grid: GridSection = GridSection()
    symbol: SymbolSection = SymbolSection(text="heat")
    evolve: EvolveSection = EvolveSection()
    init: InitSection = InitSection()
    output: OutputSection = OutputSection()

    def resolve_paths(self, base_dir: str, stem: str = "run") -> "RunConfig":
        """Replace `default` paths and make the init file path absolute."""
        output = self.output.model_copy()
        if output.directory == "default":
            output.directory = os.path.join(base_dir, "output", stem)
        if output.log_file_path == "default":
            output.log_file_path = os.path.join(output.directory, "process.log")
        init = self.init.model_copy()
        if init.kind == "file" and init.path and not os.path.isabs(init.path):
            init.path = os.path.normpath(os.path.join(base_dir, init.path))
        return self.model_copy(update={"output": output, "init": init})

    def to_dict(self) -> dict:
        return self.model_dump(mode='json')

    def to_yaml(self) -> str:
        return yaml.safe_dump(self.to_dict(), sort_keys=False)


def _key_lines(text: str) -> dict:
    """Map 'section' and 'section.key' to the 1-based line where they appear."""
    lines = {}
    try:
        root = yaml.compose(text)
    except yaml.YAMLError:
        return lines
    if not isinstance(root, yaml.MappingNode):
        return lines
    for key_node, value_node in root.value:
        section = key_node.value
        lines[section] = key_node.start_mark.line + 1
        if isinstance(value_node, yaml.MappingNode):
            for sub_key, _ in value_node.value:
                lines[f"{section}.{sub_key.value}"] = sub_key.start_mark.line + 1
    return lines


def apply_overrides(data: dict, overrides: List[str] | None) -> dict:
    """Apply `section.key=value` strings; values are read as YAML scalars."""
    for item in overrides or []:
        if "=" not in item:
            raise ConfigError(f"Override {item!r} is not of the form section.key=value")
        path, raw = item.split("=", 1)
        parts = path.strip().split(".")
        if len(parts) != 2 or parts[0] not in SECTIONS:
            raise ConfigError(f"Override {item!r} must name one of the sections {', '.join(SECTIONS)}")
        try:
            value = yaml.safe_load(raw) if raw.strip() else None
        except yaml.YAMLError as e:
            raise ConfigError(f"Override {item!r} has an unreadable value: {e}")
        section = data.setdefault(parts[0], {}) or {}
        section[parts[1]] = value
        data[parts[0]] = section
    return data


def parse_config(text: str, overrides: List[str] | None = None) -> RunConfig:
    try:
        data = yaml.safe_load(text) or {}
    except yaml.YAMLError as e:
        mark = getattr(e, 'problem_mark', None)
        raise ConfigError(f"Malformed YAML: {getattr(e, 'problem', e)}",
                          line=mark.line + 1 if mark is not None else None)
    if not isinstance(data, dict):
        raise ConfigError("The configuration must be a mapping of sections", line=1)
    data.pop(METADATA_KEY, None)
    lines = _key_lines(text)
    data = apply_overrides(data, overrides)
    try:
        return RunConfig.model_validate(data)
    except ValidationError as e:
        first = e.errors()[0]
        loc = [str(part) for part in first['loc']]
        key = ".".join(loc[:2])
        line = lines.get(key, lines.get(loc[0]) if loc else None)
        raise ConfigError(f"{key or 'config'}: {first['msg']}", line=line)


def load_config(path: str, overrides: List[str] | None = None) -> RunConfig:
    """Read, validate and resolve a YAML run configuration."""
    if not os.path.exists(path):
        raise ConfigError(f"Config file {path} does not exist")
    with open(path, 'r', encoding='utf-8') as f:
        text = f.read()
    config = parse_config(text, overrides)
    stem = os.path.splitext(os.path.basename(path))[0]
    config = config.resolve_paths(os.path.dirname(os.path.abspath(path)), stem)
    if config.init.kind == "file" and not os.path.exists(config.init.path):
        raise ConfigError(f"init.path {config.init.path} does not exist", line=_key_lines(text).get("init.path"))
    logger.info(f"Loaded config {path}")
    return config
