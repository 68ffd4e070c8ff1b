"""8-connected pixel grid with typed edges."""
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Dict, List, Tuple

import numpy as np

from ...core.constants import SEG_EDGE_TYPES

# (row, column) offset from an edge's source pixel to its target
EDGE_OFFSETS: Dict[str, Tuple[int, int]] = {
    'horizontal': (0, 1),
    'vertical': (1, 0),
    'diagonal_down': (1, 1),
    'diagonal_up': (-1, 1),
}

MAX_DEGREE = 8


@dataclass(frozen=True)
class GridGraph:
    """
    Pixel grid under the 8-neighbourhood.

    Pixels are numbered row-major. Every undirected edge appears once,
    under exactly one of the four edge types.
    """
    height: int
    width: int
    edges: Dict[str, Tuple[np.ndarray, np.ndarray]] = field(init=False, repr=False, compare=False)
    neighbor_index: np.ndarray = field(init=False, repr=False, compare=False)
    neighbor_type: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if self.height < 1 or self.width < 1:
            raise ValueError("grid dimensions must be positive")
        rows, cols = np.indices((self.height, self.width))
        edges = {}
        for t in SEG_EDGE_TYPES:
            di, dj = EDGE_OFFSETS[t]
            ti, tj = rows + di, cols + dj
            valid = (ti >= 0) & (ti < self.height) & (tj >= 0) & (tj < self.width)
            src = (rows * self.width + cols)[valid]
            dst = (ti * self.width + tj)[valid]
            edges[t] = (src.astype(np.int64), dst.astype(np.int64))
        object.__setattr__(self, 'edges', edges)

        # Padded adjacency: -1 marks a missing neighbour
        n = self.size
        index = np.full((n, MAX_DEGREE), -1, dtype=np.int64)
        types = np.full((n, MAX_DEGREE), -1, dtype=np.int64)
        fill = np.zeros(n, dtype=np.int64)
        for t_id, t in enumerate(SEG_EDGE_TYPES):
            src, dst = edges[t]
            for a, b in ((src, dst), (dst, src)):
                index[a, fill[a]] = b
                types[a, fill[a]] = t_id
                fill[a] += 1
        object.__setattr__(self, 'neighbor_index', index)
        object.__setattr__(self, 'neighbor_type', types)

    @property
    def size(self) -> int:
        return self.height * self.width

    @property
    def num_edges(self) -> int:
        return sum(src.size for src, _ in self.edges.values())

    def degree(self) -> np.ndarray:
        return (self.neighbor_index >= 0).sum(axis=1)

    def neighbors(self, pixel: int) -> List[Tuple[int, str]]:
        """(neighbour, edge type) pairs of a pixel."""
        mask = self.neighbor_index[pixel] >= 0
        return [
            (int(j), SEG_EDGE_TYPES[int(t)])
            for j, t in zip(self.neighbor_index[pixel][mask], self.neighbor_type[pixel][mask])
        ]

    def colour_classes(self) -> List[np.ndarray]:
        """
        Four independent sets of the 8-neighbourhood, keyed by (row mod 2, col mod 2).

        Pixels of one class share no edge, so a class can be resampled at once.
        """
        rows, cols = np.indices((self.height, self.width))
        key = ((rows % 2) * 2 + (cols % 2)).ravel()
        return [np.flatnonzero(key == k) for k in range(4) if np.any(key == k)]

    def scan_order(self, scan: str) -> List[np.ndarray]:
        """Site groups visited by one sweep: single pixels for 'raster', colour classes for 'blocked'."""
        if scan == 'raster':
            return [np.array([i]) for i in range(self.size)]
        if scan == 'blocked':
            return self.colour_classes()
        raise ValueError(f"unknown scan order: {scan!r}")


@lru_cache(maxsize=32)
def grid_for(height: int, width: int) -> GridGraph:
    """Shared graph per image shape."""
    return GridGraph(height, width)
