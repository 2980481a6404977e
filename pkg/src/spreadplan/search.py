"""Single-robot search with usage-aware guidance, plus the multi-robot pass loop.

Two integrations of the usage penalty into A*:

* cost_to_go: the penalty is added to the distance heuristic.  Because it
  stays below 1 it can only break ties between equal-length paths, and the
  returned path is a shortest path whose worst interior cell is as lightly
  claimed as possible.

* cost_to_come: the penalty is folded into the transition cost, scaled by
  1 / (max start-goal distance + 1) so the surcharge accumulated along a
  whole path stays below one step.  The returned path is a shortest path
  whose total overlap with other paths is minimal.

`plan_independent_paths` runs these searches for every robot over several
passes, keeping one usage table updated incrementally.
"""

from __future__ import annotations

import heapq
import random
from dataclasses import dataclass

from .grid import Cell, DistanceField, GridMap, distance_field
from .usage import Path, UsageParams, UsageTable

MASK64 = (1 << 64) - 1


class NoPathError(RuntimeError):
    pass


class InstanceError(ValueError):
    pass


def _mix(seed: int, *parts: int) -> int:
    """Deterministic 64-bit hash for seeded tie-breaking (splitmix-style)."""
    h = (seed * 0x9E3779B97F4A7C15) & MASK64
    for p in parts:
        h = (h ^ (p & MASK64)) * 0xBF58476D1CE4E5B9 & MASK64
        h = (h ^ (h >> 27)) * 0x94D049BB133111EB & MASK64
        h ^= h >> 31
    return h


@dataclass
class SearchConfig:
    mode: str = "cost_to_go"  # or "cost_to_come"
    tie_break_seed: int = 0
    max_time: int | None = None  # horizon bound for temporal search


@dataclass
class SearchStats:
    expansions: int = 0
    generated: int = 0
    penalty_bound_violations: int = 0


def _reconstruct(parents: dict, state) -> Path:
    path = []
    while state is not None:
        path.append(state[0] if isinstance(state[0], tuple) else state)
        state = parents[state]
    path.reverse()
    return path


def find_path_cost_to_go(grid: GridMap, start: Cell, goal: Cell,
                         table: UsageTable, dfield: DistanceField,
                         cfg: SearchConfig | None = None,
                         stats: SearchStats | None = None,
                         stop_depth: int | None = None) -> Path:
    """Shortest path with the usage penalty as a heuristic tie-breaker.

    Aggregate tables are searched over plain vertices (waiting never helps at
    unit cost); temporal tables are searched over (vertex, time) states with
    wait moves, bounded by max_time.  With stop_depth set, the search instead
    returns the best shortest-path prefix of that many steps, which keeps the
    cost bounded when only the first stretch of a long route matters.
    """
    cfg = cfg or SearchConfig()
    if stats is None:
        stats = SearchStats()
    if start not in dfield:
        raise NoPathError(f"no path from {start} to {goal}")
    params = table.params
    temporal = params.temporal
    seed = cfg.tie_break_seed
    base = dfield[start]
    max_time = cfg.max_time
    if temporal and max_time is None:
        max_time = base + 2 * (params.window_before + params.window_after) + 10

    counter = 0
    if temporal:
        start_state = (start, 0)
    else:
        start_state = start
    parents = {start_state: None}
    best_f = {start_state: float(base)}
    heap = [(float(base), 0, _mix(seed, start[0], start[1]), counter, start_state)]
    while heap:
        f, neg_g, _, _, state = heapq.heappop(heap)
        if f > best_f.get(state, float("inf")):
            continue  # stale queue entry
        best_f[state] = -1.0  # closed marker: nothing beats a negative f
        stats.expansions += 1
        v = state[0] if temporal else state
        g = -neg_g
        if v == goal or (stop_depth is not None and g >= stop_depth):
            return _reconstruct(parents, state)
        t_next = (state[1] + 1) if temporal else 0
        if temporal and t_next > max_time:
            continue
        moves = grid.neighbors(v)
        if temporal:
            moves = moves + [v]
        for nxt in moves:
            h_dist = dfield.get(nxt)
            if h_dist is None:
                continue
            pen = table.penalty(v, nxt, t_next)
            if not 0.0 <= pen < 1.0:
                stats.penalty_bound_violations += 1
            nf = (g + 1) + h_dist + pen
            nstate = (nxt, t_next) if temporal else nxt
            if nf < best_f.get(nstate, float("inf")):
                best_f[nstate] = nf
                parents[nstate] = state
                counter += 1
                stats.generated += 1
                tie = _mix(seed, nxt[0], nxt[1], t_next)
                heapq.heappush(heap, (nf, -(g + 1), tie, counter, nstate))
    raise NoPathError(f"no path from {start} to {goal}")


def find_path_cost_to_come(grid: GridMap, start: Cell, goal: Cell,
                           table: UsageTable, dfield: DistanceField,
                           max_pair_dist: int,
                           cfg: SearchConfig | None = None,
                           stats: SearchStats | None = None) -> Path:
    """Shortest path minimizing the summed usage surcharge along it.

    Each transition costs 1 + penalty / (max_pair_dist + 1); since a shortest
    path has at most max_pair_dist steps and every penalty is below 1, the
    total surcharge stays below one step and length is never traded away.
    The surcharge unit is far above float rounding for any supported map
    size, so plain float comparisons are exact here.
    """
    cfg = cfg or SearchConfig()
    if stats is None:
        stats = SearchStats()
    if start not in dfield:
        raise NoPathError(f"no path from {start} to {goal}")
    params = table.params
    temporal = params.temporal
    seed = cfg.tie_break_seed
    scale = 1.0 / (max_pair_dist + 1)
    base = dfield[start]
    max_time = cfg.max_time
    if temporal and max_time is None:
        max_time = base + 2 * (params.window_before + params.window_after) + 10

    counter = 0
    start_state = (start, 0) if temporal else start
    parents = {start_state: None}
    best_g = {start_state: 0.0}
    heap = [(float(base), 0.0, _mix(seed, start[0], start[1]), counter, start_state)]
    closed = set()
    while heap:
        f, neg_g, _, _, state = heapq.heappop(heap)
        g = -neg_g
        if state in closed:
            continue
        if g > best_g.get(state, float("inf")):
            continue
        closed.add(state)
        stats.expansions += 1
        v = state[0] if temporal else state
        if v == goal:
            return _reconstruct(parents, state)
        t_next = (state[1] + 1) if temporal else 0
        if temporal and t_next > max_time:
            continue
        moves = grid.neighbors(v)
        if temporal:
            moves = moves + [v]
        for nxt in moves:
            h_dist = dfield.get(nxt)
            if h_dist is None:
                continue
            pen = table.penalty(v, nxt, t_next)
            if not 0.0 <= pen < 1.0:
                stats.penalty_bound_violations += 1
            ng = g + 1.0 + pen * scale
            nstate = (nxt, t_next) if temporal else nxt
            if ng < best_g.get(nstate, float("inf")):
                best_g[nstate] = ng
                parents[nstate] = state
                counter += 1
                stats.generated += 1
                tie = _mix(seed, nxt[0], nxt[1], t_next)
                heapq.heappush(heap, (ng + h_dist, -ng, tie, counter, nstate))
    raise NoPathError(f"no path from {start} to {goal}")


def order_robots(distances: list[int]) -> list[int]:
    """Robot indices sorted by start-goal distance, longest first, stable ties."""
    return sorted(range(len(distances)), key=lambda i: (-distances[i], i))


def plan_independent_paths(grid: GridMap, tasks: list[tuple[Cell, Cell]],
                           params: UsageParams, iterations: int,
                           cfg: SearchConfig | None = None,
                           order: str = "desc",
                           fields: dict[Cell, DistanceField] | None = None,
                           on_iteration=None,
                           stats: SearchStats | None = None) -> list[Path]:
    """Plan one individually-shortest path per robot, spreading usage.

    Robots are processed longest-distance-first so the table fills with the
    most informative paths early; each of the `iterations` passes re-plans
    every robot against all other robots' current paths, updating one shared
    table incrementally.  iterations == 0 plans plain shortest paths with
    seeded random tie-breaking and no table.  Paths return in input order.
    """
    cfg = cfg or SearchConfig()
    n = len(tasks)
    if params.num_robots != n:
        params = UsageParams(params.vertex_weight, params.edge_weight,
                             params.window_before, params.window_after,
                             params.temporal, max(n, 1))
    if fields is None:
        fields = {}
    dists = []
    for i, (s, g) in enumerate(tasks):
        if g not in fields:
            fields[g] = distance_field(grid, g)
        if s not in fields[g]:
            raise InstanceError(f"robot {i}: goal {g} unreachable from {s}")
        dists.append(fields[g][s])

    if order == "desc":
        sequence = order_robots(dists)
    elif order == "asc":
        sequence = sorted(range(n), key=lambda i: (dists[i], i))
    elif order == "random":
        sequence = list(range(n))
        random.Random(cfg.tie_break_seed).shuffle(sequence)
    else:
        raise ValueError(f"unknown order {order!r}")

    def search(i: int, table: UsageTable) -> Path:
        s, g = tasks[i]
        robot_cfg = SearchConfig(cfg.mode, _mix(cfg.tie_break_seed, i),
                                 cfg.max_time)
        if cfg.mode == "cost_to_come":
            return find_path_cost_to_come(grid, s, g, table, fields[g],
                                          max(dists), robot_cfg, stats)
        return find_path_cost_to_go(grid, s, g, table, fields[g], robot_cfg, stats)

    paths: list[Path | None] = [None] * n
    if iterations == 0:
        empty = UsageTable(params=UsageParams(
            params.vertex_weight, params.edge_weight, 0, 0, False, max(n, 1)))
        for i in sequence:
            paths[i] = search(i, empty)
        return paths  # type: ignore[return-value]

    table = UsageTable(params=params)
    for it in range(iterations):
        for i in sequence:
            if paths[i] is not None:
                table.remove_path(paths[i])
            paths[i] = search(i, table)
            table.add_path(paths[i])
        if on_iteration is not None:
            on_iteration(it + 1, [list(p) for p in paths])  # type: ignore[arg-type]
    return paths  # type: ignore[return-value]
