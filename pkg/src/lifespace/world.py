"""Tiled world model: named scene areas and shortest-path navigation.

The map is a rectangular grid of walkable/blocked tiles partitioned into
named scene areas (dining, leisure, culture, social). Movement is
4-neighbour with unit cost, so shortest paths are found with A* under the
Manhattan heuristic. All tie-breaking is fixed so that pathfinding is a
pure, reproducible function of its inputs.

Map document format (UTF-8, LF):

    W H
    <H rows of W characters: '.' walkable, '#' blocked>
    scene <id> <category> <x1,y1> <x2,y2> ...
"""

from __future__ import annotations

from dataclasses import dataclass
from heapq import heappush, heappop

from .errors import (
    MapParseError,
    MapValidationError,
    NoRouteError,
    OutOfBoundsError,
    PreconditionError,
    UnknownSceneError,
)

SCENE_CATEGORIES = ("dining", "leisure", "culture", "social")


@dataclass(frozen=True, order=True)
class Position:
    x: int
    y: int

    def manhattan(self, other: "Position") -> int:
        return abs(self.x - other.x) + abs(self.y - other.y)


@dataclass(frozen=True)
class SceneArea:
    id: str
    category: str
    tiles: frozenset[Position]
    label: str


@dataclass(frozen=True)
class Path:
    """Stepwise route. Each step is the tile entered; empty means already there."""

    steps: tuple[Position, ...]

    def __len__(self) -> int:
        return len(self.steps)


@dataclass(frozen=True)
class WorldMap:
    width: int
    height: int
    walkable: tuple[tuple[bool, ...], ...]  # walkable[y][x]
    scenes: tuple[SceneArea, ...]

    def in_bounds(self, pos: Position) -> bool:
        return 0 <= pos.x < self.width and 0 <= pos.y < self.height

    def is_walkable(self, pos: Position) -> bool:
        return self.in_bounds(pos) and self.walkable[pos.y][pos.x]

    def scene_ids(self) -> list[str]:
        return [scene.id for scene in self.scenes]

    def scene(self, scene_id: str) -> SceneArea:
        for scene in self.scenes:
            if scene.id == scene_id:
                return scene
        raise UnknownSceneError(f"unknown scene '{scene_id}'")

    @classmethod
    def from_rows(cls, rows: list[str], scenes: tuple[SceneArea, ...] = ()) -> "WorldMap":
        """Build a map directly from '.'/'#' rows, skipping load-time validation.

        Intended for tests and generated grids that are not necessarily
        connected; `load_map` is the validating entry point.
        """
        walkable = tuple(tuple(ch == "." for ch in row) for row in rows)
        return cls(width=len(rows[0]), height=len(rows), walkable=walkable, scenes=scenes)


# Fixed neighbour expansion order: up, down, left, right.
_NEIGHBOUR_OFFSETS = ((0, -1), (0, 1), (-1, 0), (1, 0))


def _neighbours(world: WorldMap, pos: Position):
    for dx, dy in _NEIGHBOUR_OFFSETS:
        nxt = Position(pos.x + dx, pos.y + dy)
        if world.is_walkable(nxt):
            yield nxt


def find_path(world: WorldMap, start: Position, goal: Position) -> Path:
    """Shortest 4-neighbour path from start to goal via A*.

    Deterministic: equal-f frontier nodes are popped in (y, x) order and
    neighbours expand up/down/left/right, so the returned path is a pure
    function of the grid and endpoints.

    Raises NoRouteError when the goal is unreachable.
    """
    for name, pos in (("start", start), ("goal", goal)):
        if not world.in_bounds(pos):
            raise OutOfBoundsError(f"{name} {pos} outside {world.width}x{world.height} map")
        if not world.is_walkable(pos):
            raise PreconditionError(f"{name} {pos} is not walkable")
    if start == goal:
        return Path(())

    frontier: list[tuple[int, int, int]] = [(start.manhattan(goal), start.y, start.x)]
    g_cost: dict[Position, int] = {start: 0}
    parent: dict[Position, Position] = {}
    closed: set[Position] = set()

    while frontier:
        _, y, x = heappop(frontier)
        current = Position(x, y)
        if current in closed:
            continue
        closed.add(current)
        if current == goal:
            steps: list[Position] = []
            node = goal
            while node != start:
                steps.append(node)
                node = parent[node]
            steps.reverse()
            return Path(tuple(steps))
        next_g = g_cost[current] + 1
        for nxt in _neighbours(world, current):
            if next_g < g_cost.get(nxt, 1 << 30):
                g_cost[nxt] = next_g
                parent[nxt] = current
                heappush(frontier, (next_g + nxt.manhattan(goal), nxt.y, nxt.x))

    raise NoRouteError(f"no route from {start} to {goal}")


def scene_at(world: WorldMap, pos: Position) -> str | None:
    """Scene id containing pos, or None for corridor tiles."""
    if not world.in_bounds(pos):
        raise OutOfBoundsError(f"{pos} outside {world.width}x{world.height} map")
    for scene in world.scenes:
        if pos in scene.tiles:
            return scene.id
    return None


def scene_anchor(world: WorldMap, scene_id: str) -> Position:
    """Canonical destination tile for "move to scene X": smallest (y, x) tile."""
    scene = world.scene(scene_id)
    return min(scene.tiles, key=lambda p: (p.y, p.x))


def load_map(text: str) -> WorldMap:
    """Parse and validate a map document.

    Validation: grid shape, scene tiles in bounds and walkable, scenes
    disjoint, at least one walkable tile, and the whole walkable area
    (scene tiles plus corridors) connected. Errors name the offending
    scene or tile.
    """
    lines = [line.rstrip("\n") for line in text.split("\n")]
    lines = [line for line in lines if line.strip() != ""]
    if not lines:
        raise MapParseError("empty map document")

    header = lines[0].split()
    if len(header) != 2:
        raise MapParseError(f"header must be 'W H', got {lines[0]!r}")
    try:
        width, height = int(header[0]), int(header[1])
    except ValueError:
        raise MapParseError(f"header must be two integers, got {lines[0]!r}") from None
    if width < 1 or height < 1:
        raise MapParseError(f"map dimensions must be positive, got {width}x{height}")
    if len(lines) < 1 + height:
        raise MapParseError(f"expected {height} grid rows, found {len(lines) - 1}")

    rows = lines[1 : 1 + height]
    for y, row in enumerate(rows):
        if len(row) != width:
            raise MapParseError(f"row {y} has {len(row)} tiles, expected {width}")
        bad = set(row) - {".", "#"}
        if bad:
            raise MapParseError(f"row {y} contains invalid tile characters {sorted(bad)}")
    walkable = tuple(tuple(ch == "." for ch in row) for row in rows)

    scenes: list[SceneArea] = []
    seen_ids: set[str] = set()
    for line in lines[1 + height :]:
        parts = line.split()
        if not parts or parts[0] != "scene":
            raise MapParseError(f"expected scene line, got {line!r}")
        if len(parts) < 4:
            raise MapParseError(f"scene line needs id, category and tiles: {line!r}")
        scene_id, category = parts[1], parts[2]
        if scene_id in seen_ids:
            raise MapParseError(f"duplicate scene id '{scene_id}'")
        seen_ids.add(scene_id)
        if category not in SCENE_CATEGORIES:
            raise MapParseError(
                f"scene '{scene_id}' has unknown category '{category}' "
                f"(expected one of {', '.join(SCENE_CATEGORIES)})"
            )
        tiles = set()
        for token in parts[3:]:
            try:
                x_str, y_str = token.split(",")
                tiles.add(Position(int(x_str), int(y_str)))
            except ValueError:
                raise MapParseError(f"scene '{scene_id}' has malformed tile '{token}'") from None
        scenes.append(SceneArea(id=scene_id, category=category, tiles=frozenset(tiles), label=scene_id))

    world = WorldMap(width=width, height=height, walkable=walkable, scenes=tuple(scenes))
    _validate(world)
    return world


def serialize_map(world: WorldMap) -> str:
    """Canonical text form of a map; load_map(serialize_map(m)) == m."""
    out = [f"{world.width} {world.height}"]
    for y in range(world.height):
        out.append("".join("." if world.walkable[y][x] else "#" for x in range(world.width)))
    for scene in world.scenes:
        tiles = " ".join(f"{p.x},{p.y}" for p in sorted(scene.tiles, key=lambda p: (p.y, p.x)))
        out.append(f"scene {scene.id} {scene.category} {tiles}")
    return "\n".join(out) + "\n"


def _validate(world: WorldMap) -> None:
    claimed: dict[Position, str] = {}
    for scene in world.scenes:
        if not scene.tiles:
            raise MapValidationError(f"scene '{scene.id}' has no tiles")
        for tile in scene.tiles:
            if not world.in_bounds(tile):
                raise MapValidationError(f"scene '{scene.id}' tile {tile} is out of bounds")
            if not world.walkable[tile.y][tile.x]:
                raise MapValidationError(f"scene '{scene.id}' tile {tile} is not walkable")
            if tile in claimed:
                raise MapValidationError(
                    f"scenes '{claimed[tile]}' and '{scene.id}' overlap at tile {tile}"
                )
            claimed[tile] = scene.id

    all_walkable = [
        Position(x, y)
        for y in range(world.height)
        for x in range(world.width)
        if world.walkable[y][x]
    ]
    if not all_walkable:
        raise MapValidationError("map has no walkable tiles")

    # Scene tiles plus corridors must form a single connected component.
    reached = {all_walkable[0]}
    queue = [all_walkable[0]]
    while queue:
        current = queue.pop()
        for nxt in _neighbours(world, current):
            if nxt not in reached:
                reached.add(nxt)
                queue.append(nxt)
    unreachable = [p for p in all_walkable if p not in reached]
    if unreachable:
        tile = min(unreachable, key=lambda p: (p.y, p.x))
        owner = claimed.get(tile)
        where = f"scene '{owner}'" if owner else "corridor"
        raise MapValidationError(f"unreachable walkable area ({where} tile {tile})")


def _rect(x0: int, y0: int, x1: int, y1: int) -> list[str]:
    return [f"{x},{y}" for y in range(y0, y1 + 1) for x in range(x0, x1 + 1)]


def default_map_text() -> str:
    """The shipped 24x24 layout: six scenes covering all four categories.

    Two dining rooms (restaurant, cafe), one leisure (garden), one culture
    (library) and two social spots (plaza, lounge), joined by open
    corridors around four small obstacles.
    """
    width = height = 24
    blocked = set()
    for x in range(width):
        blocked.add((x, 0))
        blocked.add((x, height - 1))
    for y in range(height):
        blocked.add((0, y))
        blocked.add((width - 1, y))
    for bx, by in ((8, 8), (14, 8), (8, 14), (14, 14)):
        for dx in range(2):
            for dy in range(2):
                blocked.add((bx + dx, by + dy))

    rows = [
        "".join("#" if (x, y) in blocked else "." for x in range(width))
        for y in range(height)
    ]
    scene_lines = [
        "scene restaurant dining " + " ".join(_rect(2, 2, 6, 5)),
        "scene cafe dining " + " ".join(_rect(17, 2, 21, 5)),
        "scene garden leisure " + " ".join(_rect(17, 18, 21, 21)),
        "scene library culture " + " ".join(_rect(2, 18, 6, 21)),
        "scene plaza social " + " ".join(_rect(10, 11, 13, 12)),
        "scene lounge social " + " ".join(_rect(2, 10, 6, 13)),
    ]
    return "\n".join([f"{width} {height}"] + rows + scene_lines) + "\n"


def default_map() -> WorldMap:
    return load_map(default_map_text())
