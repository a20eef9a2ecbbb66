"""Cultural grid: rows x cols cells, each an F-vector of trait values in [0, q).

Adjacency is the von Neumann 4-neighborhood without wraparound; a cell on an
edge simply has fewer neighbors. Cells are stored as one int32 array of shape
(rows*cols, f) with row-major cell indexing (idx = r*cols + c), which is the
layout the interaction kernels operate on directly.
"""
from __future__ import annotations

import numpy as np

from ..rngkit import DetStream


class CulturalGrid:
    def __init__(self, rows: int, cols: int, f: int, q: int, cells: np.ndarray | None = None):
        if rows < 1 or cols < 1 or f < 1 or q < 1:
            raise ValueError("rows, cols, f, q must all be >= 1")
        self.rows = rows
        self.cols = cols
        self.f = f
        self.q = q
        if cells is None:
            cells = np.zeros((rows * cols, f), dtype=np.int32)
        else:
            cells = np.ascontiguousarray(cells, dtype=np.int32)
            if cells.shape != (rows * cols, f):
                raise ValueError(f"cells must have shape ({rows * cols}, {f})")
            if cells.size and (cells.min() < 0 or cells.max() >= q):
                raise ValueError("trait values must lie in [0, q)")
        self.cells = cells

    @classmethod
    def random(cls, rows: int, cols: int, f: int, q: int, stream: DetStream) -> "CulturalGrid":
        """Fill deterministically: cells in row-major order, features in order."""
        cells = np.empty((rows * cols, f), dtype=np.int32)
        for idx in range(rows * cols):
            for k in range(f):
                cells[idx, k] = stream.randrange(q)
        return cls(rows, cols, f, q, cells)

    @property
    def n_agents(self) -> int:
        return self.rows * self.cols

    @property
    def edge_count(self) -> int:
        return self.rows * (self.cols - 1) + (self.rows - 1) * self.cols

    def neighbor_indices(self, idx: int) -> list[int]:
        """Neighbors in fixed north, south, west, east order (absent ones skipped)."""
        r, c = divmod(idx, self.cols)
        out = []
        if r > 0:
            out.append(idx - self.cols)
        if r < self.rows - 1:
            out.append(idx + self.cols)
        if c > 0:
            out.append(idx - 1)
        if c < self.cols - 1:
            out.append(idx + 1)
        return out

    def vector(self, idx: int) -> tuple[int, ...]:
        return tuple(int(v) for v in self.cells[idx])

    def copy(self) -> "CulturalGrid":
        return CulturalGrid(self.rows, self.cols, self.f, self.q, self.cells.copy())

    def to_lists(self) -> list[list[int]]:
        return [[int(v) for v in row] for row in self.cells]

    @classmethod
    def from_lists(cls, rows: int, cols: int, f: int, q: int,
                   data: list[list[int]]) -> "CulturalGrid":
        return cls(rows, cols, f, q, np.asarray(data, dtype=np.int32))

    def __eq__(self, other) -> bool:
        if not isinstance(other, CulturalGrid):
            return NotImplemented
        return (self.rows, self.cols, self.f, self.q) == (other.rows, other.cols, other.f, other.q) \
            and bool(np.array_equal(self.cells, other.cells))

    def __repr__(self) -> str:
        return f"CulturalGrid({self.rows}x{self.cols}, f={self.f}, q={self.q})"
