"""Tile-based track model: map parsing, lane geometry, and lane queries.

A map is a rectangular grid of unit tiles described by a plain-text file,
one character per tile:

    S   straight road running east-west
    s   straight road running north-south
    a   curve, arc center at the tile's NW corner (connects N and W edges)
    b   curve, arc center at the NE corner (connects N and E edges)
    c   curve, arc center at the SE corner (connects S and E edges)
    d   curve, arc center at the SW corner (connects S and W edges)
    .   grass

World coordinates: x grows east (text columns), y grows north, so the top
text row is the northern edge of the map. Tile (row r, col c) spans
x in [c, c+1], y in [rows-1-r, rows-r]. Roads carry two lanes of
right-hand traffic; lane centerlines sit 0.25 units either side of the
road center. Curve lanes are quarter-circle arcs concentric with the
tile corner, so centerlines join neighbors with matching tangents.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from importlib import resources

import numpy as np

TILE_SIZE = 1.0
LANE_HALF_WIDTH = 0.25
# Distance from road center to each lane's centerline.
LANE_OFFSET = 0.25

# Tile kind codes (also used by the renderer's vectorized material lookup).
GRASS = 0
STRAIGHT_H = 1
STRAIGHT_V = 2
CURVE_NW = 3
CURVE_NE = 4
CURVE_SE = 5
CURVE_SW = 6

_CHAR_TO_KIND = {
    ".": GRASS,
    "S": STRAIGHT_H,
    "s": STRAIGHT_V,
    "a": CURVE_NW,
    "b": CURVE_NE,
    "c": CURVE_SE,
    "d": CURVE_SW,
}

# Edges a tile's road connects, as (drow, dcol) neighbor offsets.
_NORTH, _SOUTH, _EAST, _WEST = (-1, 0), (1, 0), (0, 1), (0, -1)
_CONNECTED_EDGES = {
    STRAIGHT_H: (_WEST, _EAST),
    STRAIGHT_V: (_NORTH, _SOUTH),
    CURVE_NW: (_NORTH, _WEST),
    CURVE_NE: (_NORTH, _EAST),
    CURVE_SE: (_SOUTH, _EAST),
    CURVE_SW: (_SOUTH, _WEST),
}


class MapError(ValueError):
    """Raised for malformed or inconsistent map descriptions."""


@dataclass(frozen=True)
class LaneInfo:
    """Result of a lane query at a single pose.

    dist is the signed lateral offset from the chosen lane's centerline,
    positive to the left of the travel direction. dot_dir is the dot
    product of the heading unit vector with the centerline tangent.
    """

    dist: float
    dot_dir: float
    in_right_lane: bool
    on_track: bool
    tangent: tuple[float, float]
    nearest_point: tuple[float, float]


class _Segment:
    """Directed straight lane centerline from p0 to p1 (unit direction)."""

    __slots__ = ("p0", "p1", "direction", "length")

    def __init__(self, p0: tuple[float, float], p1: tuple[float, float]):
        self.p0 = p0
        self.p1 = p1
        dx, dy = p1[0] - p0[0], p1[1] - p0[1]
        self.length = math.hypot(dx, dy)
        self.direction = (dx / self.length, dy / self.length)

    def nearest(self, x: float, y: float):
        dx, dy = self.direction
        t = (x - self.p0[0]) * dx + (y - self.p0[1]) * dy
        t = min(max(t, 0.0), self.length)
        nx, ny = self.p0[0] + t * dx, self.p0[1] + t * dy
        return (nx, ny), (dx, dy)

    def start(self):
        return self.p0, self.direction

    def end(self):
        return self.p1, self.direction

    def point_at(self, u: float):
        """Point and tangent at normalized arclength u in [0, 1]."""
        x = self.p0[0] + u * (self.p1[0] - self.p0[0])
        y = self.p0[1] + u * (self.p1[1] - self.p0[1])
        return (x, y), self.direction


class _Arc:
    """Directed quarter-circle lane centerline.

    Spans polar angles [ang_lo, ang_hi] about `center`; travel runs from
    ang_lo to ang_hi when ccw, else the reverse.
    """

    __slots__ = ("center", "radius", "ang_lo", "ang_hi", "ccw")

    def __init__(self, center, radius, ang_lo, ang_hi, ccw):
        self.center = center
        self.radius = radius
        self.ang_lo = ang_lo
        self.ang_hi = ang_hi
        self.ccw = ccw

    def _tangent(self, ang: float) -> tuple[float, float]:
        if self.ccw:
            return (-math.sin(ang), math.cos(ang))
        return (math.sin(ang), -math.cos(ang))

    def _point(self, ang: float) -> tuple[float, float]:
        return (
            self.center[0] + self.radius * math.cos(ang),
            self.center[1] + self.radius * math.sin(ang),
        )

    def nearest(self, x: float, y: float):
        ang = math.atan2(y - self.center[1], x - self.center[0])
        ang = min(max(ang, self.ang_lo), self.ang_hi)
        return self._point(ang), self._tangent(ang)

    def start(self):
        ang = self.ang_lo if self.ccw else self.ang_hi
        return self._point(ang), self._tangent(ang)

    def end(self):
        ang = self.ang_hi if self.ccw else self.ang_lo
        return self._point(ang), self._tangent(ang)

    def point_at(self, u: float):
        """Point and tangent at normalized arclength u in [0, 1]."""
        span = self.ang_hi - self.ang_lo
        ang = self.ang_lo + (u if self.ccw else 1.0 - u) * span
        return self._point(ang), self._tangent(ang)


# Quadrant angle ranges for each curve kind: the tile interior seen from
# the arc-center corner.
_CURVE_ANGLES = {
    CURVE_NW: (-math.pi / 2, 0.0),
    CURVE_NE: (-math.pi, -math.pi / 2),
    CURVE_SE: (math.pi / 2, math.pi),
    CURVE_SW: (0.0, math.pi / 2),
}


def _corner_of(kind: int, x0: float, y0: float) -> tuple[float, float]:
    """Arc-center corner of a curve tile whose SW corner is (x0, y0)."""
    if kind == CURVE_NW:
        return (x0, y0 + 1.0)
    if kind == CURVE_NE:
        return (x0 + 1.0, y0 + 1.0)
    if kind == CURVE_SE:
        return (x0 + 1.0, y0)
    return (x0, y0)


def _tile_lanes(kind: int, x0: float, y0: float):
    """The two directed right-lane centerlines of a drivable tile.

    (x0, y0) is the tile's SW corner. Right-hand traffic: on straights the
    lane sits LANE_OFFSET right of road center for its travel direction;
    on curves the counterclockwise lane is the outer arc (radius 0.75) and
    the clockwise lane the inner arc (radius 0.25).
    """
    cx, cy = x0 + 0.5, y0 + 0.5
    q = LANE_OFFSET
    if kind == STRAIGHT_H:
        return (
            _Segment((x0, cy - q), (x0 + 1.0, cy - q)),  # eastbound
            _Segment((x0 + 1.0, cy + q), (x0, cy + q)),  # westbound
        )
    if kind == STRAIGHT_V:
        return (
            _Segment((cx + q, y0), (cx + q, y0 + 1.0)),  # northbound
            _Segment((cx - q, y0 + 1.0), (cx - q, y0)),  # southbound
        )
    corner = _corner_of(kind, x0, y0)
    lo, hi = _CURVE_ANGLES[kind]
    return (
        _Arc(corner, 0.5 + q, lo, hi, ccw=True),
        _Arc(corner, 0.5 - q, lo, hi, ccw=False),
    )


class TrackMap:
    """Validated tile map with per-tile lane centerlines."""

    tile_size = TILE_SIZE
    lane_half_width = LANE_HALF_WIDTH

    def __init__(self, grid_text: str):
        lines = [ln for ln in grid_text.splitlines() if ln.strip() != ""]
        if not lines:
            raise MapError("empty map text")
        width = len(lines[0])
        if any(len(ln) != width for ln in lines):
            raise MapError("malformed grid text: rows have unequal length")
        for ln in lines:
            for ch in ln:
                if ch not in _CHAR_TO_KIND:
                    raise MapError(f"malformed grid text: unknown tile {ch!r}")
        self.rows = len(lines)
        self.cols = width
        self.kind_codes = np.array(
            [[_CHAR_TO_KIND[ch] for ch in ln] for ln in lines], dtype=np.int8
        )
        self.drivable_tiles: list[tuple[int, int]] = [
            (r, c)
            for r in range(self.rows)
            for c in range(self.cols)
            if self.kind_codes[r, c] != GRASS
        ]
        if not self.drivable_tiles:
            raise MapError("map has no drivable tiles")
        self._lanes = {
            (r, c): _tile_lanes(int(self.kind_codes[r, c]), *self._sw_corner(r, c))
            for (r, c) in self.drivable_tiles
        }
        self._validate()

    # -- construction helpers -------------------------------------------------

    def _sw_corner(self, r: int, c: int) -> tuple[float, float]:
        return (float(c), float(self.rows - 1 - r))

    def _validate(self) -> None:
        for r, c in self.drivable_tiles:
            kind = int(self.kind_codes[r, c])
            for dr, dc in _CONNECTED_EDGES[kind]:
                nr, nc = r + dr, c + dc
                if not (0 <= nr < self.rows and 0 <= nc < self.cols):
                    raise MapError(f"dangling road tile at row {r}, col {c}")
                nkind = int(self.kind_codes[nr, nc])
                if nkind == GRASS or (-dr, -dc) not in _CONNECTED_EDGES[nkind]:
                    raise MapError(f"dangling road tile at row {r}, col {c}")
        # Every tile links exactly two neighbors, so the drivable set is a
        # union of simple loops; require a single loop.
        seen = {self.drivable_tiles[0]}
        frontier = [self.drivable_tiles[0]]
        while frontier:
            r, c = frontier.pop()
            for dr, dc in _CONNECTED_EDGES[int(self.kind_codes[r, c])]:
                nxt = (r + dr, c + dc)
                if nxt not in seen:
                    seen.add(nxt)
                    frontier.append(nxt)
        if len(seen) != len(self.drivable_tiles):
            raise MapError("disconnected circuits: drivable tiles form more than one loop")

    # -- geometry queries ------------------------------------------------------

    def tile_index(self, x: float, y: float) -> tuple[int, int] | None:
        c = math.floor(x)
        r = self.rows - 1 - math.floor(y)
        if 0 <= r < self.rows and 0 <= c < self.cols:
            return (r, c)
        return None

    def is_drivable(self, r: int, c: int) -> bool:
        return bool(self.kind_codes[r, c] != GRASS)

    def tile_lanes(self, r: int, c: int):
        return self._lanes[(r, c)]

    def on_track(self, x: float, y: float) -> bool:
        idx = self.tile_index(x, y)
        if idx is None:
            return False
        kind = int(self.kind_codes[idx])
        if kind == GRASS:
            return False
        if kind in (STRAIGHT_H, STRAIGHT_V):
            return True
        corner = _corner_of(kind, *self._sw_corner(*idx))
        return math.hypot(x - corner[0], y - corner[1]) <= 1.0

    def boundary_distance(self, x: float, y: float) -> float:
        """Signed clearance to the road boundary (negative when off road)."""
        idx = self.tile_index(x, y)
        if idx is None:
            return -math.inf
        kind = int(self.kind_codes[idx])
        x0, y0 = self._sw_corner(*idx)
        if kind == GRASS:
            return -math.inf
        if kind == STRAIGHT_H:
            return 0.5 - abs(y - (y0 + 0.5))
        if kind == STRAIGHT_V:
            return 0.5 - abs(x - (x0 + 0.5))
        corner = _corner_of(kind, x0, y0)
        return 1.0 - math.hypot(x - corner[0], y - corner[1])

    def lane_query(self, x: float, y: float, heading: float) -> LaneInfo:
        """Locate the pose relative to the direction-matched right lane.

        The two directed lanes of the current tile are candidates; the one
        whose tangent best aligns with the heading wins. Off the drivable
        grid, the globally nearest tile's lanes are used instead.
        """
        hx, hy = math.cos(heading), math.sin(heading)
        idx = self.tile_index(x, y)
        if idx is not None and self.is_drivable(*idx):
            lanes = self._lanes[idx]
        else:
            best_tile = min(
                self.drivable_tiles,
                key=lambda rc: min(
                    (x - p[0][0]) ** 2 + (y - p[0][1]) ** 2
                    for p in (lane.nearest(x, y) for lane in self._lanes[rc])
                ),
            )
            lanes = self._lanes[best_tile]
        best = None
        for lane in lanes:
            (nx, ny), (tx, ty) = lane.nearest(x, y)
            dot = hx * tx + hy * ty
            if best is None or dot > best[0]:
                best = (dot, nx, ny, tx, ty)
        dot, nx, ny, tx, ty = best
        dist = tx * (y - ny) - ty * (x - nx)
        on = self.on_track(x, y)
        return LaneInfo(
            dist=dist,
            dot_dir=min(max(dot, -1.0), 1.0),
            in_right_lane=on and abs(dist) <= self.lane_half_width,
            on_track=on,
            tangent=(tx, ty),
            nearest_point=(nx, ny),
        )


def build_map(grid_text: str) -> TrackMap:
    return TrackMap(grid_text)


def load_map_file(path) -> TrackMap:
    with open(path, "r", encoding="utf-8") as fh:
        return TrackMap(fh.read())


BUILTIN_MAPS = ("small_loop", "map_a", "map_b", "map_c")


def load_builtin_map(name: str) -> TrackMap:
    if name not in BUILTIN_MAPS:
        raise MapError(f"unknown builtin map {name!r}; choose from {BUILTIN_MAPS}")
    text = resources.files("lanetown.maps").joinpath(f"{name}.txt").read_text()
    return TrackMap(text)


def resolve_map(spec: str) -> TrackMap:
    """Accept either a builtin map name or a path to a map text file."""
    if spec in BUILTIN_MAPS:
        return load_builtin_map(spec)
    return load_map_file(spec)
