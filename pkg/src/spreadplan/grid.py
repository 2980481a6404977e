"""Grid maps, map file parsing, procedural generators, and BFS distance fields.

Cells are (x, y) tuples, indexed row-major from the top-left, so (0, 0) is the
upper-left corner and y grows downward.  A map is a 4-connected grid with a set
of blocked cells.
"""

from __future__ import annotations

import json
import random
from collections import deque
from dataclasses import dataclass, field

Cell = tuple[int, int]

NEIGHBOR_STEPS = ((1, 0), (-1, 0), (0, 1), (0, -1))

PASSABLE_CHARS = frozenset(".G")
BLOCKED_CHARS = frozenset("@OT")


class MapParseError(ValueError):
    """Raised for malformed map or scenario files; message names the line."""


class GenerationError(RuntimeError):
    """Raised when a procedural generator cannot satisfy its constraints."""


@dataclass(frozen=True)
class GridMap:
    width: int
    height: int
    blocked: frozenset[Cell] = field(default_factory=frozenset)

    def __post_init__(self) -> None:
        if self.width <= 0 or self.height <= 0:
            raise ValueError("grid dimensions must be positive")
        for (x, y) in self.blocked:
            if not (0 <= x < self.width and 0 <= y < self.height):
                raise ValueError(f"blocked cell {(x, y)} out of bounds")

    @property
    def num_vertices(self) -> int:
        return self.width * self.height - len(self.blocked)

    def in_bounds(self, cell: Cell) -> bool:
        x, y = cell
        return 0 <= x < self.width and 0 <= y < self.height

    def passable(self, cell: Cell) -> bool:
        return self.in_bounds(cell) and cell not in self.blocked

    def neighbors(self, cell: Cell) -> list[Cell]:
        x, y = cell
        out = []
        for dx, dy in NEIGHBOR_STEPS:
            nxt = (x + dx, y + dy)
            if self.passable(nxt):
                out.append(nxt)
        return out

    def vertices(self):
        for y in range(self.height):
            for x in range(self.width):
                if (x, y) not in self.blocked:
                    yield (x, y)

    def is_connected(self) -> bool:
        """True when all passable cells form a single 4-connected component."""
        start = next(self.vertices(), None)
        if start is None:
            return True
        seen = {start}
        queue = deque([start])
        while queue:
            cur = queue.popleft()
            for nxt in self.neighbors(cur):
                if nxt not in seen:
                    seen.add(nxt)
                    queue.append(nxt)
        return len(seen) == self.num_vertices


@dataclass(frozen=True)
class DistanceField:
    """Exact shortest grid distances to a fixed goal; unreachable cells absent."""

    goal: Cell
    dist: dict[Cell, int]

    def __contains__(self, cell: Cell) -> bool:
        return cell in self.dist

    def __getitem__(self, cell: Cell) -> int:
        return self.dist[cell]

    def get(self, cell: Cell, default=None):
        return self.dist.get(cell, default)


@dataclass(frozen=True)
class ScenEntry:
    bucket: int
    map_name: str
    map_width: int
    map_height: int
    start: Cell
    goal: Cell
    optimal_length: float


def parse_movingai_map(text: str) -> GridMap:
    """Parse the standard grid map format: type/height/width header then rows.

    `.` and `G` are passable; `@`, `O`, `T` are blocked; anything else is an
    error naming the offending line.
    """
    lines = text.splitlines()
    if len(lines) < 4:
        raise MapParseError("line 1: truncated header")
    if not lines[0].startswith("type"):
        raise MapParseError("line 1: expected 'type' header")
    try:
        height = int(lines[1].split()[1])
        width = int(lines[2].split()[1])
    except (IndexError, ValueError) as exc:
        raise MapParseError("line 2-3: malformed height/width header") from exc
    if lines[3].strip() != "map":
        raise MapParseError("line 4: expected 'map' separator")
    rows = lines[4:4 + height]
    if len(rows) < height:
        raise MapParseError(f"line {4 + len(rows) + 1}: expected {height} map rows")
    blocked = set()
    for y, row in enumerate(rows):
        row = row.rstrip("\r\n")
        if len(row) != width:
            raise MapParseError(
                f"line {5 + y}: row length {len(row)} does not match width {width}")
        for x, ch in enumerate(row):
            if ch in BLOCKED_CHARS:
                blocked.add((x, y))
            elif ch not in PASSABLE_CHARS:
                raise MapParseError(f"line {5 + y}: unknown cell character {ch!r}")
    return GridMap(width, height, frozenset(blocked))


def grid_to_movingai(grid: GridMap) -> str:
    """Serialize a GridMap back to the map file format (parse round-trips)."""
    lines = ["type octile", f"height {grid.height}", f"width {grid.width}", "map"]
    for y in range(grid.height):
        lines.append("".join(
            "@" if (x, y) in grid.blocked else "." for x in range(grid.width)))
    return "\n".join(lines) + "\n"


def parse_movingai_scen(text: str) -> list[ScenEntry]:
    """Parse a .scen instance file (bucket, map, dims, start, goal, length)."""
    entries = []
    lines = text.splitlines()
    start_idx = 1 if lines and lines[0].startswith("version") else 0
    for i, line in enumerate(lines[start_idx:], start=start_idx + 1):
        if not line.strip():
            continue
        parts = line.split("\t")
        if len(parts) < 9:
            raise MapParseError(f"line {i}: expected 9 tab-separated columns")
        try:
            entries.append(ScenEntry(
                bucket=int(parts[0]),
                map_name=parts[1],
                map_width=int(parts[2]),
                map_height=int(parts[3]),
                start=(int(parts[4]), int(parts[5])),
                goal=(int(parts[6]), int(parts[7])),
                optimal_length=float(parts[8]),
            ))
        except ValueError as exc:
            raise MapParseError(f"line {i}: malformed scenario entry") from exc
    return entries


def generate_random_grid(width: int, height: int, obstacle_ratio: float,
                         seed: int, max_attempts: int = 100) -> GridMap:
    """Random connected grid with floor(width*height*ratio) blocked cells.

    Deterministic per seed; retries with fresh draws from the same stream
    until the passable region is connected.
    """
    if not 0 <= obstacle_ratio < 1:
        raise ValueError("obstacle_ratio must be in [0, 1)")
    rng = random.Random(seed)
    n_blocked = int(width * height * obstacle_ratio)
    cells = [(x, y) for y in range(height) for x in range(width)]
    for _ in range(max_attempts):
        blocked = frozenset(rng.sample(cells, n_blocked))
        grid = GridMap(width, height, blocked)
        if grid.is_connected():
            return grid
    raise GenerationError(
        f"no connected {width}x{height} map at ratio {obstacle_ratio} "
        f"within {max_attempts} attempts")


def generate_warehouse(width: int, height: int, shelf_block: tuple[int, int],
                       aisle: int, seed: int = 0) -> GridMap:
    """Warehouse layout: rectangular shelf blocks separated by aisles.

    A passable boundary ring is kept on all four sides.  The layout is
    deterministic; the seed argument is accepted for interface uniformity.
    """
    del seed
    shelf_w, shelf_h = shelf_block
    if aisle < 1:
        raise GenerationError("aisle width must be >= 1")
    if shelf_w < 1 or shelf_h < 1:
        raise GenerationError("shelf block dimensions must be >= 1")
    if shelf_w + 2 > width or shelf_h + 2 > height:
        raise GenerationError("no shelf block fits inside the boundary ring")
    blocked = set()
    x = 1
    while x + shelf_w <= width - 1:
        y = 1
        while y + shelf_h <= height - 1:
            for sx in range(x, x + shelf_w):
                for sy in range(y, y + shelf_h):
                    blocked.add((sx, sy))
            y += shelf_h + aisle
        x += shelf_w + aisle
    grid = GridMap(width, height, frozenset(blocked))
    if not grid.is_connected():
        raise GenerationError("warehouse layout is not connected")
    return grid


def largest_component_grid(grid: GridMap) -> GridMap:
    """Copy of the map with everything outside the largest component blocked.

    Large sparse random maps almost always contain small isolated pockets;
    this turns them into a usable connected planning domain.
    """
    remaining = set(grid.vertices())
    best: set[Cell] = set()
    while remaining:
        seed_cell = next(iter(remaining))
        component = {seed_cell}
        queue = deque([seed_cell])
        while queue:
            cur = queue.popleft()
            for nxt in grid.neighbors(cur):
                if nxt in remaining and nxt not in component:
                    component.add(nxt)
                    queue.append(nxt)
        remaining -= component
        if len(component) > len(best):
            best = component
    blocked = {(x, y) for y in range(grid.height) for x in range(grid.width)
               if (x, y) not in best}
    return GridMap(grid.width, grid.height, frozenset(blocked))


def distance_field(grid: GridMap, goal: Cell) -> DistanceField:
    """Breadth-first exact shortest distances from every cell to the goal."""
    if not grid.passable(goal):
        raise ValueError(f"goal {goal} is blocked or out of bounds")
    dist = {goal: 0}
    queue = deque([goal])
    blocked = grid.blocked
    width, height = grid.width, grid.height
    while queue:
        x, y = queue.popleft()
        d = dist[(x, y)] + 1
        for dx, dy in NEIGHBOR_STEPS:
            nxt = (x + dx, y + dy)
            if (0 <= nxt[0] < width and 0 <= nxt[1] < height
                    and nxt not in blocked and nxt not in dist):
                dist[nxt] = d
                queue.append(nxt)
    return DistanceField(goal, dist)


def generate_instance(grid: GridMap, n: int, seed: int,
                      goals_per_robot: int = 1) -> list[tuple[Cell, list[Cell]]]:
    """Sample n robots: distinct starts, and per-robot goal chains.

    With goals_per_robot == 1 the goals are pairwise distinct across robots
    (one-shot instances need that); longer chains draw goals independently
    per robot, only avoiding zero-length legs.  Deterministic per seed.
    """
    cells = list(grid.vertices())
    if n > len(cells):
        raise ValueError(f"cannot place {n} robots on {len(cells)} vertices")
    rng = random.Random(seed)
    starts = rng.sample(cells, n)
    robots: list[tuple[Cell, list[Cell]]] = []
    if goals_per_robot == 1:
        available = set(cells)
        for s in starts:
            pool = [c for c in cells if c in available and c != s]
            if not pool:  # forced on a map too small to avoid start == goal
                pool = [c for c in cells if c in available]
            g = rng.choice(pool)
            available.discard(g)
            robots.append((s, [g]))
    else:
        for s in starts:
            chain = []
            prev = s
            for _ in range(goals_per_robot):
                g = rng.choice(cells)
                while g == prev and len(cells) > 1:
                    g = rng.choice(cells)
                chain.append(g)
                prev = g
            robots.append((s, chain))
    return robots


def instance_to_json(grid: GridMap, robots: list[tuple[Cell, list[Cell]]],
                     seed: int | None = None, map_path: str | None = None) -> str:
    """Native instance format: map (path or inline) plus robot start/goal lists."""
    map_obj: object
    if map_path is not None:
        map_obj = map_path
    else:
        map_obj = {
            "width": grid.width,
            "height": grid.height,
            "blocked": sorted([list(c) for c in grid.blocked]),
        }
    payload = {
        "map": map_obj,
        "robots": [
            {"start": list(s), "goals": [list(g) for g in gs]} for s, gs in robots
        ],
        "seed": seed,
    }
    return json.dumps(payload, indent=2, sort_keys=True)


def instance_from_json(text: str, map_loader=None) -> tuple[GridMap, list[tuple[Cell, list[Cell]]], int | None]:
    """Parse the native instance format.

    `map_loader` resolves a map path string to file text; defaults to reading
    from the filesystem.
    """
    payload = json.loads(text)
    map_obj = payload["map"]
    if isinstance(map_obj, str):
        if map_loader is None:
            with open(map_obj, encoding="utf-8") as fh:
                map_text = fh.read()
        else:
            map_text = map_loader(map_obj)
        grid = parse_movingai_map(map_text)
    else:
        grid = GridMap(map_obj["width"], map_obj["height"],
                       frozenset(tuple(c) for c in map_obj["blocked"]))
    robots = [(tuple(r["start"]), [tuple(g) for g in r["goals"]])
              for r in payload["robots"]]
    return grid, robots, payload.get("seed")
