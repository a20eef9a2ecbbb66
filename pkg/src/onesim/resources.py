"""Locations of packaged data files (scenario graphs, planning templates)."""
from __future__ import annotations

from pathlib import Path

ASSETS = Path(__file__).parent / "assets"


def graph_asset(name: str) -> Path:
    return ASSETS / "graphs" / f"{name}.json"


def planning_asset(name: str) -> Path:
    return ASSETS / "planning" / f"{name}.txt"
