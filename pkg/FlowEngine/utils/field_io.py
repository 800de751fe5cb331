import logging
import struct

import numpy as np
import pandas as pd

from FlowEngine.field import SpectralField
from FlowEngine.grid import make_grid
from Utils.errors import FieldFormatError, GridError

logger = logging.getLogger(__name__)

MAGIC = b"FL2L"
VERSION = 1
# magic, version u32, n u8, J u32, inv_h u32 (little-endian, unpadded)
HEADER = struct.Struct('<4sIBII')


def write_field_binary(path: str, u: SpectralField):
    grid = u.grid
    with open(path, 'wb') as f:
        f.write(HEADER.pack(MAGIC, VERSION, grid.n, grid.J, grid.inv_h))
        f.write(np.ascontiguousarray(u.values, dtype='<c16').tobytes())
    logger.info(f"Wrote binary field dump to {path}")


def read_field_binary(path: str) -> SpectralField:
    with open(path, 'rb') as f:
        data = f.read()
    if len(data) < HEADER.size:
        raise FieldFormatError(f"{path}: truncated header")
    magic, version, n, J, inv_h = HEADER.unpack_from(data)
    if magic != MAGIC:
        raise FieldFormatError(f"{path}: bad magic {magic!r}")
    if version != VERSION:
        raise FieldFormatError(f"{path}: unsupported version {version}")
    try:
        grid = make_grid(n=n, J=J, inv_h=inv_h)
    except GridError as e:
        raise FieldFormatError(f"{path}: {e}")
    payload = data[HEADER.size:]
    expected = grid.num_nodes * 16
    if len(payload) != expected:
        raise FieldFormatError(f"{path}: expected {expected} sample bytes, found {len(payload)}")
    values = np.frombuffer(payload, dtype='<c16').reshape(grid.shape)
    if not np.isfinite(values).all():
        raise FieldFormatError(f"{path}: {int(np.count_nonzero(~np.isfinite(values)))} non-finite sample(s)")
    return SpectralField(grid, values)


def field_to_frame(u: SpectralField) -> pd.DataFrame:
    nodes = u.grid.nodes()
    flat = u.values.reshape(-1)
    columns = {f"xi_{i + 1}": nodes[:, i] for i in range(u.grid.n)}
    columns["re"] = flat.real
    columns["im"] = flat.imag
    return pd.DataFrame(columns)


def write_field_csv(path: str, u: SpectralField):
    field_to_frame(u).to_csv(path, index=False)
    logger.info(f"Wrote field CSV to {path}")
