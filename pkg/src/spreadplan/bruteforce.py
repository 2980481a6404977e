"""Exhaustive ground truth for small instances.

Enumerates every shortest path between two cells by walking the BFS-distance
DAG, then minimizes conflict objectives over the enumeration.  Used by tests
to check that the guided searches return exactly the paths they promise.
"""

from __future__ import annotations

from dataclasses import dataclass

from .grid import Cell, GridMap, distance_field
from .metrics import pairwise_overlap, peak_vertex_overlap
from .usage import Path, UsageTable


class TooManyPathsError(RuntimeError):
    """Enumeration would exceed the configured cap."""


@dataclass
class PathEnumeration:
    start: Cell
    goal: Cell
    paths: list[Path]


def enumerate_shortest_paths(grid: GridMap, start: Cell, goal: Cell,
                             cap: int = 100_000) -> PathEnumeration:
    """All shortest start-to-goal paths, depth-first over the distance DAG."""
    if cap < 1:
        raise ValueError("cap must be >= 1")
    dfield = distance_field(grid, goal)
    if start not in dfield:
        raise ValueError(f"goal {goal} unreachable from {start}")
    paths: list[Path] = []
    prefix: Path = [start]

    def walk(v: Cell) -> None:
        if v == goal:
            if len(paths) >= cap:
                raise TooManyPathsError(f"more than {cap} shortest paths")
            paths.append(list(prefix))
            return
        d = dfield[v]
        for nxt in grid.neighbors(v):
            if dfield.get(nxt) == d - 1:
                prefix.append(nxt)
                walk(nxt)
                prefix.pop()

    walk(start)
    return PathEnumeration(start, goal, paths)


def min_objective(enumeration: PathEnumeration, table: UsageTable,
                  objective: str) -> tuple[int, Path]:
    """Exact minimum of a conflict objective over every enumerated path.

    objective "peak": worst usage count over interior cells.
    objective "total": summed usage count over the whole path image.
    """
    best_value = None
    best_path = None
    for path in enumeration.paths:
        if objective == "peak":
            value = peak_vertex_overlap(path, table)
        elif objective == "total":
            value = sum(table.vertex_use.get(v, 0) for v in set(path))
        else:
            raise ValueError(f"unknown objective {objective!r}")
        if best_value is None or value < best_value:
            best_value = value
            best_path = path
    if best_path is None:
        raise ValueError("empty enumeration")
    return best_value, best_path


def min_peak_overlap(enumeration: PathEnumeration, table: UsageTable) -> int:
    return min_objective(enumeration, table, "peak")[0]


def min_total_overlap(enumeration: PathEnumeration, prior_paths: list[Path]) -> int:
    """Minimum pairwise image overlap against explicit prior paths."""
    return min(pairwise_overlap(p, prior_paths) for p in enumeration.paths)
