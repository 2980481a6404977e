"""Rolling-horizon planning for streams of goals, and one-shot solving via it.

Each cycle: shorten every robot's goal list to roughly one horizon of travel,
optionally replace the last kept goal by a vertex just past the horizon on a
shortest leg (the *horizon cut*, which stops the windowed solver from planning
steps that would be thrown away), optionally pick that leg with the usage
penalty so robots' beyond-horizon targets spread out, then call a windowed
solver for an h-step collision-free segment and execute it.
"""

from __future__ import annotations

import heapq
import random
import time
from collections import deque
from dataclasses import dataclass, field

from .grid import Cell, DistanceField, GridMap, distance_field
from .metrics import path_length
from .search import NoPathError, SearchConfig, _mix, find_path_cost_to_go
from .usage import Path, UsageParams, UsageTable


class WindowedSolverError(RuntimeError):
    """No collision-free window found for some robot after all retries."""

    def __init__(self, robot: int, message: str):
        super().__init__(message)
        self.robot = robot


class LivelockError(RuntimeError):
    """One-shot horizon solving stopped making progress."""


@dataclass
class HorizonConfig:
    h: int = 5
    use_horizon_cut: bool = True
    use_usage_targets: bool = False
    params: UsageParams = field(default_factory=UsageParams)
    seed: int = 0
    commit: int | None = None  # steps executed per cycle; defaults to h
    retries: int = 10
    max_expansions: int = 200_000

    def __post_init__(self) -> None:
        if self.h < 1:
            raise ValueError("horizon must be >= 1")
        if self.commit is not None and not (1 <= self.commit <= self.h):
            raise ValueError("commit must be in [1, h]")


VARIANTS = ("baseline", "cut", "cut+usage", "cut+usage+temporal")


def config_for_variant(variant: str, h: int, seed: int = 0,
                       window_before: int = 1, window_after: int = 5) -> HorizonConfig:
    """Benchmark presets: no cut, plain cut, usage-picked targets, temporal.

    The temporal windows default to a short smear around each leg step; target
    legs are only loosely synchronized with execution, and a batch calibration
    on warehouse runs showed a small forward window works best there.
    """
    if variant not in VARIANTS:
        raise ValueError(f"unknown variant {variant!r}")
    cut = variant != "baseline"
    usage_targets = variant.startswith("cut+usage")
    temporal = variant == "cut+usage+temporal"
    params = UsageParams(0.5, 0.5,
                         window_before if temporal else 0,
                         window_after if temporal else 0,
                         temporal, 1)
    return HorizonConfig(h=h, use_horizon_cut=cut,
                         use_usage_targets=usage_targets,
                         params=params, seed=seed)


class GoalStream:
    """Per-robot queue of goal cells, replenished by a seeded generator.

    Consecutive goals are always distinct so every leg has positive length.
    A stream built from a fixed list never replenishes.
    """

    def __init__(self, grid: GridMap, seed: int | None = None,
                 initial: list[Cell] | None = None):
        self._pending: deque[Cell] = deque(initial or [])
        self._last: Cell | None = self._pending[-1] if self._pending else None
        self._rng = random.Random(seed) if seed is not None else None
        self._cells = list(grid.vertices()) if self._rng is not None else []

    def ensure(self, count: int) -> None:
        if self._rng is None:
            return
        while len(self._pending) < count:
            g = self._rng.choice(self._cells)
            while g == self._last and len(self._cells) > 1:
                g = self._rng.choice(self._cells)
            self._pending.append(g)
            self._last = g

    def upcoming(self, count: int) -> list[Cell]:
        self.ensure(count)
        return [self._pending[i] for i in range(min(count, len(self._pending)))]

    def peek(self) -> Cell | None:
        return self._pending[0] if self._pending else None

    def pop(self) -> Cell:
        return self._pending.popleft()

    def __len__(self) -> int:
        return len(self._pending)


@dataclass
class CycleRecord:
    cycle: int
    goals_cumulative: int
    solver_ms: float
    expansions: int
    target_conflicts: int


@dataclass
class LifelongStats:
    goals_reached: int = 0
    elapsed_steps: int = 0
    cycles: list[CycleRecord] = field(default_factory=list)

    @property
    def throughput(self) -> float:
        return self.goals_reached / self.elapsed_steps if self.elapsed_steps else 0.0

    @property
    def total_expansions(self) -> int:
        return sum(c.expansions for c in self.cycles)


class _FieldCache:
    """BFS distance fields keyed by goal cell, shared across cycles."""

    def __init__(self, grid: GridMap):
        self.grid = grid
        self.fields: dict[Cell, DistanceField] = {}

    def __call__(self, goal: Cell) -> DistanceField:
        f = self.fields.get(goal)
        if f is None:
            f = distance_field(self.grid, goal)
            self.fields[goal] = f
        return f

    def dist(self, a: Cell, b: Cell) -> int:
        return self(b)[a]


def truncate_goal_list(position: Cell, goals: list[Cell], h: int,
                       dist) -> tuple[list[Cell], int]:
    """Keep goals until their chained travel distance first reaches h.

    Returns the kept chain with the current position prepended, plus the
    accumulated distance.  `dist(a, b)` must be an exact distance oracle.
    """
    chain = [position]
    d = 0
    for g in goals:
        d += dist(chain[-1], g)
        chain.append(g)
        if d >= h:
            break
    return chain, d


def horizon_cut_index(leg_len: int, total_dist: int, h: int) -> int:
    """Index along the final leg of the vertex one step past the horizon."""
    return min(leg_len, h - (total_dist - leg_len) + 1)


def horizon_cut_target(leg_path: Path, total_dist: int, h: int) -> Cell:
    """Replacement final goal: the leg vertex just beyond the h-step boundary."""
    idx = horizon_cut_index(len(leg_path) - 1, total_dist, h)
    return leg_path[max(0, idx)]


def _shortest_leg_path(grid: GridMap, start: Cell, dfield: DistanceField) -> Path:
    """Deterministic greedy walk down the distance field."""
    path = [start]
    v = start
    d = dfield[v]
    while d > 0:
        for nxt in grid.neighbors(v):
            nd = dfield.get(nxt)
            if nd is not None and nd == d - 1:
                v = nxt
                d = nd
                path.append(v)
                break
        else:
            raise NoPathError(f"distance field has no descent from {v}")
    return path


def apply_horizon_cut(grid: GridMap, chains: list[tuple[list[Cell], int]],
                      cfg: HorizonConfig, fields: _FieldCache,
                      cycle_seed: int = 0) -> list[list[Cell]]:
    """Replace each chain's final goal by a vertex just past the horizon.

    With usage-guided targets the leg path is chosen against a table of the
    legs already picked this cycle, so beyond-horizon targets spread out.
    Chains that end inside the horizon are returned unchanged (the index
    clamps to the leg end).
    """
    n = len(chains)
    params = cfg.params
    if params.num_robots != n and n > 0:
        params = UsageParams(params.vertex_weight, params.edge_weight,
                             params.window_before, params.window_after,
                             params.temporal, n)
    table = UsageTable(params=params) if cfg.use_usage_targets else None
    targets: list[list[Cell]] = []
    for i, (chain, d) in enumerate(chains):
        if len(chain) < 2:
            targets.append(chain[1:])
            continue
        leg_start, leg_end = chain[-2], chain[-1]
        dfield = fields(leg_end)
        idx = horizon_cut_index(dfield[leg_start], d, cfg.h)
        if table is not None:
            # only the prefix up to the cut matters, and bounding the search
            # depth keeps long legs on large maps cheap
            scfg = SearchConfig("cost_to_go", _mix(cfg.seed, cycle_seed, i))
            leg_path = find_path_cost_to_go(grid, leg_start, leg_end, table,
                                            dfield, scfg, stop_depth=idx)
            table.add_path(leg_path)
            new_last = leg_path[-1]
        else:
            leg_path = _shortest_leg_path(grid, leg_start, dfield)
            new_last = horizon_cut_target(leg_path, d, cfg.h)
        targets.append(chain[1:-1] + [new_last])
    return targets


def windowed_solver(grid: GridMap, states: list[Cell],
                    target_lists: list[list[Cell]], h: int,
                    fields: _FieldCache | None = None, seed: int = 0,
                    retries: int = 10,
                    max_expansions: int = 200_000) -> tuple[list[Path], int]:
    """Prioritized h-step collision-free planning toward chained targets.

    Each robot plans a space-time path through its targets in order;
    reservations are enforced only inside the window, so planning beyond it
    is unconstrained (and the horizon cut exists to avoid it).  Robots plan
    longest-remaining-distance first; on failure the priority order is
    reshuffled, up to `retries` times.  Returns paths of exactly h steps and
    the total number of node expansions.
    """
    n = len(states)
    if len(set(states)) != n:
        raise ValueError("robot states must be pairwise distinct")
    if fields is None:
        fields = _FieldCache(grid)
    remaining0 = []
    for i in range(n):
        rem = 0
        prev = states[i]
        for g in target_lists[i]:
            rem += fields.dist(prev, g)
            prev = g
        remaining0.append(rem)
    base_order = sorted(range(n), key=lambda i: (-remaining0[i], i))
    expansions_total = 0
    last_error: WindowedSolverError | None = None
    promoted: list[int] = []  # robots that got boxed in plan first next time
    for attempt in range(retries + 1):
        rest = [i for i in base_order if i not in promoted]
        if attempt > len(promoted) + 1:
            random.Random(_mix(seed, attempt)).shuffle(rest)
        order = promoted + rest
        vertex_res: set[tuple[Cell, int]] = set()
        edge_res: set[tuple[Cell, Cell, int]] = set()
        # robots that end the window standing still are treated as parked a
        # while beyond it, so "wait, then walk through" never looks cheaper
        # than an actual detour around them
        rest_block: dict[Cell, int] = {}
        paths: list[Path | None] = [None] * n
        failed = False
        for i in order:
            path, exp = _plan_window(grid, states[i], target_lists[i], h,
                                     fields, vertex_res, edge_res, rest_block,
                                     _mix(seed, attempt, i), max_expansions)
            expansions_total += exp
            if path is None:
                last_error = WindowedSolverError(
                    i, f"robot {i}: no safe {h}-step window (attempt {attempt})")
                promoted = [i] + [r for r in promoted if r != i]
                failed = True
                break
            paths[i] = path[:h + 1]
            for t, v in enumerate(paths[i]):
                vertex_res.add((v, t))
            for t in range(1, len(paths[i])):
                if paths[i][t - 1] != paths[i][t]:
                    edge_res.add((paths[i][t - 1], paths[i][t], t))
            if paths[i][h] == paths[i][h - 1]:
                rest_block[paths[i][h]] = 2 * h
        if not failed:
            return paths, expansions_total  # type: ignore[return-value]
    raise last_error  # type: ignore[misc]


def _plan_window(grid: GridMap, start: Cell, targets: list[Cell], h: int,
                 fields: _FieldCache, vertex_res, edge_res, rest_block,
                 seed: int, max_expansions: int) -> tuple[Path | None, int]:
    """Space-time A* through the target chain; constrained only up to step h.

    Finishes when the whole chain is done and at least h steps have passed;
    if the chain cannot be finished within the bound, falls back to the safe
    h-step prefix that gets closest to the next target.
    """
    K = len(targets)
    suffix = [0] * (K + 1)
    for k in range(K - 2, -1, -1):
        suffix[k] = suffix[k + 1] + fields.dist(targets[k], targets[k + 1])

    def remaining(v: Cell, k: int) -> int | None:
        if k >= K:
            return 0
        d = fields(targets[k]).get(v)
        return None if d is None else d + suffix[k]

    rem0 = remaining(start, 0)
    if rem0 is None:
        return None, 0
    max_t = h + rem0 + grid.width + grid.height

    def wait_safe(v: Cell, t_from: int) -> bool:
        return all((v, t) not in vertex_res for t in range(t_from + 1, h + 1))

    counter = 0
    start_state = (start, 0, 0)
    parents: dict = {start_state: None}
    closed = set()
    heap = [(rem0, 0, _mix(seed, start[0], start[1], 0), counter, start_state)]
    best_fallback = None  # (remaining, tie, state) among t == h pops
    expansions = 0
    while heap and expansions < max_expansions:
        f, neg_t, tie, _, state = heapq.heappop(heap)
        if state in closed:
            continue
        closed.add(state)
        expansions += 1
        v, t, k = state
        if k == K and (t >= h or wait_safe(v, t)):
            path = _unwind(parents, state)
            path.extend([v] * (h - t))
            return path, expansions
        if t == h:
            rem = f - t
            if best_fallback is None or (rem, tie) < best_fallback[:2]:
                best_fallback = (rem, tie, state)
        if t >= max_t:
            continue
        nt = t + 1
        for nxt in grid.neighbors(v) + [v]:
            if nt <= h:
                if (nxt, nt) in vertex_res:
                    continue
                if nxt != v and (nxt, v, nt) in edge_res:
                    continue
            elif nt <= rest_block.get(nxt, 0):
                continue
            nk = k
            if nk < K and nxt == targets[nk]:
                nk += 1
            nstate = (nxt, nt, nk)
            if nstate in closed or nstate in parents:
                continue
            rem = remaining(nxt, nk)
            if rem is None:
                continue
            parents[nstate] = state
            counter += 1
            heapq.heappush(heap, (nt + rem, -nt,
                                  _mix(seed, nxt[0], nxt[1], nt, nk), counter,
                                  nstate))
    if best_fallback is not None:
        return _unwind(parents, best_fallback[2]), expansions
    return None, expansions


def _unwind(parents: dict, state) -> Path:
    path = []
    while state is not None:
        path.append(state[0])
        state = parents[state]
    path.reverse()
    return path


def run_lifelong(grid: GridMap, streams: list[GoalStream], cfg: HorizonConfig,
                 stop_goals: int,
                 positions: list[Cell] | None = None) -> LifelongStats:
    """Plan-execute loop until stop_goals goals have been reached.

    Deterministic for a given configuration, seed, and stream seeds.
    """
    n = len(streams)
    stats = LifelongStats()
    if n == 0 or stop_goals <= 0:
        return stats
    if positions is None:
        cells = list(grid.vertices())
        positions = random.Random(cfg.seed).sample(cells, n)
    fields = _FieldCache(grid)
    h = cfg.h
    commit = cfg.commit or h

    # a goal reached where a robot already stands counts immediately
    for i in range(n):
        streams[i].ensure(h + 2)
        if streams[i].peek() == positions[i]:
            streams[i].pop()
            stats.goals_reached += 1

    cycle = 0
    while stats.goals_reached < stop_goals:
        chains = []
        for i in range(n):
            streams[i].ensure(h + 2)
            chain, d = truncate_goal_list(positions[i],
                                          streams[i].upcoming(h + 2), h,
                                          fields.dist)
            chains.append((chain, d))
        if cfg.use_horizon_cut:
            targets = apply_horizon_cut(grid, chains, cfg, fields, cycle)
        else:
            targets = [chain[1:] for chain, _ in chains]

        t0 = time.perf_counter()
        paths, expansions = windowed_solver(grid, positions, targets, h,
                                            fields, _mix(cfg.seed, cycle),
                                            cfg.retries, cfg.max_expansions)
        solver_ms = (time.perf_counter() - t0) * 1000.0

        finals: dict[Cell, int] = {}
        for ts in targets:
            if ts:
                finals[ts[-1]] = finals.get(ts[-1], 0) + 1
        target_conflicts = sum(c * (c - 1) // 2 for c in finals.values())

        for t in range(1, commit + 1):
            for i in range(n):
                pos = paths[i][t]
                if streams[i].peek() == pos:
                    streams[i].pop()
                    stats.goals_reached += 1
        positions = [paths[i][commit] for i in range(n)]
        stats.elapsed_steps += commit
        cycle += 1
        stats.cycles.append(CycleRecord(cycle, stats.goals_reached, solver_ms,
                                        expansions, target_conflicts))
    return stats


@dataclass
class HorizonSolveResult:
    paths: list[Path]
    makespan: int
    sum_of_cost: int
    makespan_ratio: float
    cost_ratio: float
    cycles: int
    expansions: int


def solve_mpp_via_horizon(grid: GridMap, tasks: list[tuple[Cell, Cell]],
                          cfg: HorizonConfig,
                          stall_cycles: int = 20) -> HorizonSolveResult:
    """One-shot solving as a horizon loop with single-goal target lists.

    Cycles until every robot rests on its goal at a cycle boundary; raises
    LivelockError when `stall_cycles` consecutive cycles pass with no robot
    newly settled.
    """
    n = len(tasks)
    starts = [s for s, _ in tasks]
    goals = [g for _, g in tasks]
    if len(set(starts)) != n or len(set(goals)) != n:
        raise ValueError("starts and goals must be pairwise distinct")
    fields = _FieldCache(grid)
    lb_dists = [fields.dist(s, g) for (s, g) in tasks]

    positions = list(starts)
    trajectories: list[Path] = [[s] for s in starts]
    expansions_total = 0
    cycle = 0
    best_settled = -1
    stalled = 0
    while True:
        if all(positions[i] == goals[i] for i in range(n)):
            break
        chains = []
        for i in range(n):
            if positions[i] == goals[i]:
                chains.append(([positions[i], goals[i]], 0))
            else:
                chains.append((
                    [positions[i], goals[i]], fields.dist(positions[i], goals[i])))
        if cfg.use_horizon_cut:
            targets = apply_horizon_cut(grid, chains, cfg, fields, cycle)
        else:
            targets = [chain[1:] for chain, _ in chains]
        paths, expansions = windowed_solver(grid, positions, targets, cfg.h,
                                            fields, _mix(cfg.seed, cycle),
                                            cfg.retries, cfg.max_expansions)
        expansions_total += expansions
        for i in range(n):
            trajectories[i].extend(paths[i][1:])
        positions = [p[-1] for p in paths]
        cycle += 1
        settled = sum(1 for i in range(n) if positions[i] == goals[i])
        if settled > best_settled:
            best_settled = settled
            stalled = 0
        else:
            stalled += 1
            if stalled >= stall_cycles:
                raise LivelockError(
                    f"no progress for {stall_cycles} cycles ({settled}/{n} settled)")

    lengths = [path_length(tr) for tr in trajectories]
    mk = max(lengths, default=0)
    sc = sum(lengths)
    lb_mk = max(lb_dists, default=0)
    lb_sc = sum(lb_dists)
    return HorizonSolveResult(
        paths=trajectories, makespan=mk, sum_of_cost=sc,
        makespan_ratio=mk / lb_mk if lb_mk else 1.0,
        cost_ratio=sc / lb_sc if lb_sc else 1.0,
        cycles=cycle, expansions=expansions_total)
