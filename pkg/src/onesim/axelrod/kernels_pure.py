"""Pure-Python interaction and metric kernels.

Fallback twin of the compiled module ``_fast``: same functions, same
signatures, and bit-identical results (both consume the same splitmix64
draw sequence). Selected at import time by the package ``__init__`` when the
extension is unavailable or ONESIM_PURE_KERNELS=1.
"""
from __future__ import annotations

import numpy as np

from ..rngkit import DetStream


def sweep(cells: np.ndarray, rows: int, cols: int,
          order: np.ndarray, seeds: np.ndarray) -> int:
    """One interaction sweep, mutating ``cells`` in place.

    Visits cells in ``order``; each visited cell draws from its own stream
    seeded by ``seeds[cell]``: uniform neighbor, interaction roll against
    similarity (skipped when similarity is 0 or 1), then one differing
    feature to copy from the neighbor. Returns the number of copies applied.
    """
    f = cells.shape[1]
    copies = 0
    for t in range(order.shape[0]):
        idx = int(order[t])
        r, c = divmod(idx, cols)
        nbs = []
        if r > 0:
            nbs.append(idx - cols)
        if r < rows - 1:
            nbs.append(idx + cols)
        if c > 0:
            nbs.append(idx - 1)
        if c < cols - 1:
            nbs.append(idx + 1)
        if not nbs:
            continue
        stream = DetStream(int(seeds[idx]))
        nb = nbs[stream.randrange(len(nbs))]
        same = 0
        for k in range(f):
            if cells[idx, k] == cells[nb, k]:
                same += 1
        if same == 0 or same == f:
            continue
        if stream.random() < same / f:
            diffs = [k for k in range(f) if cells[idx, k] != cells[nb, k]]
            pick = diffs[stream.randrange(len(diffs))]
            cells[idx, pick] = cells[nb, pick]
            copies += 1
    return copies


def local_convergence(cells: np.ndarray, rows: int, cols: int) -> float:
    """Mean per-edge similarity over the undirected adjacency (each edge once)."""
    f = cells.shape[1]
    total = 0.0
    edges = 0
    for r in range(rows):
        for c in range(cols):
            idx = r * cols + c
            if c + 1 < cols:
                same = int(np.count_nonzero(cells[idx] == cells[idx + 1]))
                total += same / f
                edges += 1
            if r + 1 < rows:
                same = int(np.count_nonzero(cells[idx] == cells[idx + cols]))
                total += same / f
                edges += 1
    if edges == 0:
        raise ZeroDivisionError("grid has no adjacency edges")
    return total / edges


def component_count(cells: np.ndarray, rows: int, cols: int) -> int:
    """Connected regions of identical full culture vectors (4-neighborhood)."""
    n = rows * cols
    visited = np.zeros(n, dtype=np.int8)
    count = 0
    for start in range(n):
        if visited[start]:
            continue
        count += 1
        visited[start] = 1
        stack = [start]
        while stack:
            idx = stack.pop()
            r, c = divmod(idx, cols)
            for nb in ((idx - cols) if r > 0 else -1,
                       (idx + cols) if r < rows - 1 else -1,
                       (idx - 1) if c > 0 else -1,
                       (idx + 1) if c < cols - 1 else -1):
                if nb >= 0 and not visited[nb] and bool((cells[idx] == cells[nb]).all()):
                    visited[nb] = 1
                    stack.append(nb)
    return count
