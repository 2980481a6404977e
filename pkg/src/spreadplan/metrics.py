"""Conflict, cost, and throughput metrics shared by solvers, tests, and CLI.

A path's *image* is the set of distinct cells it visits, so waiting in place
never double-counts.  Peak metrics look at how crowded the worst cell is;
pairwise metrics sum image intersections; timed metrics require simultaneous
occupancy and mirror the solution validator's semantics (robots rest at their
final cell after their path ends).
"""

from __future__ import annotations

from .usage import Path, UsageTable

Cell = tuple[int, int]


def path_length(path: Path) -> int:
    """Index of the first step at which the final cell is reached and held."""
    if len(path) <= 1:
        return 0
    last = path[-1]
    t = len(path) - 1
    while t > 0 and path[t - 1] == last:
        t -= 1
    return t


def makespan(paths: list[Path]) -> int:
    return max((path_length(p) for p in paths), default=0)


def sum_of_cost(paths: list[Path]) -> int:
    return sum(path_length(p) for p in paths)


def throughput(goals_reached: int, elapsed_steps: int) -> float:
    return goals_reached / elapsed_steps if elapsed_steps > 0 else 0.0


def peak_vertex_overlap(path: Path, table: UsageTable) -> int:
    """Worst usage count over the path's interior cells (endpoints excluded).

    The table should be built from the *other* robots' paths; temporal tables
    are read at the step each cell is visited.
    """
    if len(path) <= 1:
        return 0
    worst = 0
    if table.params.temporal:
        for t in range(1, len(path) - 1):
            x, y = path[t]
            worst = max(worst, table.vertex_use.get((x, y, t), 0))
    else:
        for v in path[1:-1]:
            worst = max(worst, table.vertex_use.get(v, 0))
    return worst


def max_vertex_overlap(paths: list[Path]) -> int:
    """Largest number of path images sharing one cell."""
    counts: dict[Cell, int] = {}
    for p in paths:
        for v in set(p):
            counts[v] = counts.get(v, 0) + 1
    return max(counts.values(), default=0)


def max_edge_headon(paths: list[Path]) -> int:
    """Largest number of opposing traversal pairs on one undirected edge."""
    directed: dict[tuple[Cell, Cell], int] = {}
    for p in paths:
        for a, b in set(zip(p, p[1:])):
            if a != b:
                directed[(a, b)] = directed.get((a, b), 0) + 1
    worst = 0
    for (a, b), cnt in directed.items():
        opposite = directed.get((b, a), 0)
        worst = max(worst, cnt * opposite)
    return worst


def max_vertex_overlap_timed(paths: list[Path]) -> int:
    """Largest number of robots on one cell at the same step (no rest padding)."""
    counts: dict[tuple[Cell, int], int] = {}
    for p in paths:
        for t, v in enumerate(p):
            counts[(v, t)] = counts.get((v, t), 0) + 1
    return max(counts.values(), default=0)


def max_edge_headon_timed(paths: list[Path]) -> int:
    """Largest number of simultaneous opposing traversals of one edge."""
    directed: dict[tuple[Cell, Cell, int], int] = {}
    for p in paths:
        for t in range(1, len(p)):
            a, b = p[t - 1], p[t]
            if a != b:
                key = (a, b, t)
                directed[key] = directed.get(key, 0) + 1
    worst = 0
    for (a, b, t), cnt in directed.items():
        opposite = directed.get((b, a, t), 0)
        worst = max(worst, cnt * opposite)
    return worst


def pairwise_overlap(path: Path, others: list[Path]) -> int:
    """Total image intersection size between one path and every other path."""
    image = set(path)
    return sum(len(image & set(o)) for o in others)


def total_pairwise_overlap(paths: list[Path]) -> int:
    """Sum of pairwise image intersections over all ordered robot pairs (even)."""
    images = [set(p) for p in paths]
    total = 0
    for i in range(len(images)):
        for j in range(i + 1, len(images)):
            total += len(images[i] & images[j])
    return 2 * total


def _position(path: Path, t: int) -> Cell:
    return path[t] if t < len(path) else path[-1]


def timed_conflicts(paths: list[Path]) -> tuple[int, int]:
    """Counts of (i, j, t) same-cell events and edge-swap events.

    Robots are padded to rest at their final cell, matching the validator.
    """
    horizon = max((len(p) for p in paths), default=0)
    vertex_count = 0
    swap_count = 0
    n = len(paths)
    for i in range(n):
        for j in range(i + 1, n):
            pi, pj = paths[i], paths[j]
            for t in range(horizon):
                a, b = _position(pi, t), _position(pj, t)
                if a == b:
                    vertex_count += 1
                if t > 0:
                    pa, pb = _position(pi, t - 1), _position(pj, t - 1)
                    if a == pb and b == pa and a != b:
                        swap_count += 1
    return vertex_count, swap_count


def normalize_series(values: list[float]) -> list[float]:
    """Divide a metric series by its first entry; identically zero stays zero."""
    if not values or values[0] == 0:
        return [0.0 for _ in values]
    first = values[0]
    return [v / first for v in values]
