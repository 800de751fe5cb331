import logging
import os

import numpy as np
import pandas as pd
import yaml

from Utils.config import METADATA_KEY, RunConfig

logger = logging.getLogger(__name__)


def ensure_dir(directory: str) -> str:
    if not os.path.exists(directory):
        os.makedirs(directory)
    return directory


def write_csv(frame: pd.DataFrame, directory: str, name: str) -> str:
    path = os.path.join(ensure_dir(directory), name)
    frame.to_csv(path, index=False)
    logger.info(f"Wrote {len(frame)} rows to {path}")
    return path


def plain(value):
    """numpy scalars and containers as built-in types, for yaml.safe_dump."""
    if isinstance(value, dict):
        return {str(k): plain(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [plain(v) for v in value]
    if isinstance(value, np.generic):
        return value.item()
    return value


def write_sidecar(directory: str, name: str, metadata: dict, config: RunConfig | None = None) -> str:
    """
    Plain-text `key: value` metadata. With a config, its sections come first and the run
    summary sits under `run`, so the file loads back as the same configuration.
    """
    document = config.to_dict() if config is not None else {}
    document[METADATA_KEY] = plain(metadata)
    path = os.path.join(ensure_dir(directory), name)
    with open(path, 'w', encoding='utf-8') as f:
        yaml.safe_dump(document, f, sort_keys=False)
    return path
