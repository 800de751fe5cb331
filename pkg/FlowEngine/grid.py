import logging
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from Utils.errors import GridError

logger = logging.getLogger(__name__)

# upper bound on the number of nodes a grid may hold
MAX_NODES = 2_000_000

DEFAULT_N = 1
DEFAULT_J = 8
DEFAULT_INV_H = 32


@dataclass(frozen=True)
class FrequencyGrid:
    """
    Uniform Cartesian sampling of [-J, J]^n with spacing h = 1/inv_h.

    Node k (an integer vector with |k_i| <= J*inv_h) sits at xi = h*k. Nodes are stored in
    row-major order over meshgrid(..., indexing='ij'). Ball membership |xi| <= j is decided on
    the integer lattice, so boundary nodes are included exactly.
    """
    n: int
    J: int
    inv_h: int

    @property
    def h(self) -> float:
        return 1.0 / self.inv_h

    @property
    def radius_index(self) -> int:
        return self.J * self.inv_h

    @property
    def side(self) -> int:
        return 2 * self.radius_index + 1

    @property
    def shape(self) -> tuple[int, ...]:
        return (self.side,) * self.n

    @property
    def num_nodes(self) -> int:
        return self.side ** self.n

    @property
    def cell_volume(self) -> float:
        return self.h ** self.n

    @cached_property
    def lattice(self) -> np.ndarray:
        """Integer node indices, shape (n, *shape)."""
        axis = np.arange(-self.radius_index, self.radius_index + 1, dtype=np.int64)
        return np.stack(np.meshgrid(*([axis] * self.n), indexing='ij'))

    @cached_property
    def k_squared(self) -> np.ndarray:
        return np.sum(self.lattice ** 2, axis=0)

    @cached_property
    def xi(self) -> np.ndarray:
        """Node coordinates, shape (n, *shape)."""
        return self.lattice * self.h

    @cached_property
    def radius(self) -> np.ndarray:
        return np.sqrt(self.k_squared) * self.h

    def nodes(self) -> np.ndarray:
        """Node coordinates flattened to shape (num_nodes, n), row-major."""
        return self.xi.reshape(self.n, -1).T

    def check_level(self, j: int):
        if isinstance(j, bool) or int(j) != j or not (1 <= j <= self.J):
            raise GridError(f"Ball index j={j} out of range 1..{self.J}")

    def ball_mask(self, j: int) -> np.ndarray:
        self.check_level(j)
        return self.k_squared <= (int(j) * self.inv_h) ** 2

    def index_of(self, point) -> tuple[int, ...]:
        """Array index of the node at `point`; raises GridError when it is not a node."""
        point = np.atleast_1d(np.asarray(point, dtype=float))
        if point.shape != (self.n,):
            raise GridError(f"Point {point.tolist()} does not have dimension {self.n}")
        k = point * self.inv_h
        k_int = np.rint(k).astype(np.int64)
        if np.any(np.abs(k - k_int) > 1e-9) or np.any(np.abs(k_int) > self.radius_index):
            raise GridError(f"Point {point.tolist()} is not a node of {self}")
        return tuple(int(v) + self.radius_index for v in k_int)

    def compatible(self, other: "FrequencyGrid") -> bool:
        return (self.n, self.J, self.inv_h) == (other.n, other.J, other.inv_h)


def make_grid(n: int = DEFAULT_N, J: int = DEFAULT_J, h: float | None = None,
              inv_h: int | None = None) -> FrequencyGrid:
    """
    Build a FrequencyGrid. Exactly one of h or inv_h may be given; the default spacing is 1/32.
    """
    if n not in (1, 2):
        raise GridError(f"Dimension n={n} not supported (use 1 or 2)")
    if isinstance(J, bool) or int(J) != J or J < 1:
        raise GridError(f"Radius J={J} must be a positive integer")
    if h is not None and inv_h is not None:
        raise GridError("Give either h or inv_h, not both")
    if h is not None:
        if h <= 0:
            raise GridError(f"Spacing h={h} must be positive")
        inv = 1.0 / h
        inv_h = int(round(inv))
        if inv_h < 1 or abs(inv - inv_h) > 1e-9 * max(1.0, inv):
            raise GridError(f"Spacing h={h} does not divide 1 (1/h={inv} is not an integer)")
    elif inv_h is None:
        inv_h = DEFAULT_INV_H
    if isinstance(inv_h, bool) or int(inv_h) != inv_h or inv_h < 1:
        raise GridError(f"inv_h={inv_h} must be a positive integer")

    grid = FrequencyGrid(n=int(n), J=int(J), inv_h=int(inv_h))
    if grid.num_nodes > MAX_NODES:
        raise GridError(f"Grid with {grid.num_nodes} nodes exceeds the cap of {MAX_NODES}")
    logger.debug(f"Built grid n={grid.n} J={grid.J} h=1/{grid.inv_h} with {grid.num_nodes} nodes")
    return grid
