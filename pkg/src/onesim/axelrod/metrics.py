"""Local convergence and global polarization.

LC: mean cultural similarity over all adjacent cell pairs, each undirected
edge counted once. GP: number of connected regions of identical culture
vectors divided by the number of cells. Both live in [0, 1]; GP is at least
1/(rows*cols).
"""
from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path

from ..errors import DegenerateGridError, LengthMismatchError
from .grid import CulturalGrid


def _kernels():
    # Resolved lazily so ONESIM_PURE_KERNELS and test monkeypatching act on
    # the package attribute, not an import-time copy.
    from . import kernels
    return kernels


def similarity(a, b) -> float:
    """Fraction of positions where the two culture vectors agree."""
    if len(a) != len(b):
        raise LengthMismatchError(f"vectors differ in length: {len(a)} vs {len(b)}")
    if not len(a):
        raise LengthMismatchError("empty culture vectors")
    same = sum(1 for x, y in zip(a, b) if int(x) == int(y))
    return same / len(a)


def local_convergence(grid: CulturalGrid) -> float:
    if grid.edge_count == 0:
        raise DegenerateGridError(
            f"{grid.rows}x{grid.cols} grid has no adjacent cell pairs")
    return float(_kernels().local_convergence(grid.cells, grid.rows, grid.cols))


def global_polarization(grid: CulturalGrid) -> float:
    regions = _kernels().component_count(grid.cells, grid.rows, grid.cols)
    return regions / grid.n_agents


@dataclass
class MetricSeries:
    """Per-round LC/GP trajectory; row 0 is the initial state."""

    rounds: list[int] = field(default_factory=list)
    lc: list[float] = field(default_factory=list)
    gp: list[float] = field(default_factory=list)

    def append(self, round_stamp: int, lc: float, gp: float) -> None:
        if not (0.0 <= lc <= 1.0 and 0.0 < gp <= 1.0):
            raise ValueError(f"metric out of bounds: lc={lc}, gp={gp}")
        self.rounds.append(round_stamp)
        self.lc.append(lc)
        self.gp.append(gp)

    def __len__(self) -> int:
        return len(self.rounds)

    def to_csv(self, path: str | Path) -> None:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow(["round", "lc", "gp"])
            for r, l, g in zip(self.rounds, self.lc, self.gp):
                writer.writerow([r, repr(l), repr(g)])

    @classmethod
    def from_csv(cls, path: str | Path) -> "MetricSeries":
        series = cls()
        with open(path, newline="", encoding="utf-8") as fh:
            reader = csv.reader(fh)
            header = next(reader)
            if header != ["round", "lc", "gp"]:
                raise ValueError(f"unexpected metrics header: {header}")
            for row in reader:
                series.append(int(row[0]), float(row[1]), float(row[2]))
        return series
