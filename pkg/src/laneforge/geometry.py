"""Tile-based track geometry: map parsing, lane centerlines, lane pose.

A map is a grid of square tiles. Drivable tiles carry two directed lane
centerlines, one per travel direction, each being the *right* lane for
that direction (right-hand traffic). Straight lanes sit a quarter tile
from the road edge; curve lanes are quarter-circle arcs around the tile
corner at radii tile_size/4 (inner) and 3*tile_size/4 (outer).

World frame: x east, y north, tile (0, 0) at the south-west corner of
the grid. Map text rows are listed north to south.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from importlib import resources
from pathlib import Path

import numpy as np

from .errors import DisconnectedTrack, OffRoad, ParseError

TWO_PI = 2.0 * math.pi
QUARTER = math.pi / 2.0


class TileKind(Enum):
    STRAIGHT_NS = "straight_ns"
    STRAIGHT_EW = "straight_ew"
    CURVE_NE = "curve_ne"
    CURVE_NW = "curve_nw"
    CURVE_SE = "curve_se"
    CURVE_SW = "curve_sw"
    GRASS = "grass"

    @property
    def drivable(self) -> bool:
        return self is not TileKind.GRASS

    @property
    def is_curve(self) -> bool:
        return self in (TileKind.CURVE_NE, TileKind.CURVE_NW,
                        TileKind.CURVE_SE, TileKind.CURVE_SW)


_TOKEN_ALIASES = {".": "grass"}

# Arc corner offset (units of tile_size) and lower angle of the quarter span.
_CURVE_GEOM = {
    TileKind.CURVE_NE: ((1.0, 1.0), math.pi),
    TileKind.CURVE_NW: ((0.0, 1.0), 1.5 * math.pi),
    TileKind.CURVE_SE: ((1.0, 0.0), 0.5 * math.pi),
    TileKind.CURVE_SW: ((0.0, 0.0), 0.0),
}


def wrap_angle(a):
    """Normalize an angle (or array) to (-pi, pi]."""
    return math.pi - (math.pi - np.asarray(a)) % TWO_PI


@dataclass(frozen=True)
class LanePose:
    """Robot pose expressed relative to the right-lane centerline.

    d is the signed lateral offset in meters, positive toward the road
    center (i.e. to the left of the lane direction). phi is the heading
    error in radians. curvature is signed, positive for left-hand arcs.
    """

    d: float
    phi: float
    curvature: float
    in_right_lane: bool
    on_drivable: bool
    segment: int = field(default=-1, compare=False)
    s: float = field(default=0.0, compare=False)


class _Segment:
    """One directed lane centerline piece (a tile-length line or arc)."""

    __slots__ = ("index", "tile", "is_arc", "A", "U", "C", "R",
                 "ang_start", "sign", "length", "successor")

    def __init__(self, index, tile, *, A=None, U=None, C=None, R=None,
                 ang_start=None, sign=0, length=0.0):
        self.index = index
        self.tile = tile
        self.is_arc = C is not None
        self.A = A
        self.U = U
        self.C = C
        self.R = R
        self.ang_start = ang_start
        self.sign = sign
        self.length = length
        self.successor = -1

    def point_at(self, s: float) -> np.ndarray:
        if self.is_arc:
            th = self.ang_start + self.sign * s / self.R
            return self.C + self.R * np.array([math.cos(th), math.sin(th)])
        return self.A + s * self.U

    def tangent_at(self, s: float) -> np.ndarray:
        if self.is_arc:
            th = self.ang_start + self.sign * s / self.R
            return self.sign * np.array([-math.sin(th), math.cos(th)])
        return self.U

    @property
    def curvature(self) -> float:
        return self.sign / self.R if self.is_arc else 0.0


class TrackMap:
    """Immutable tile grid plus precomputed directed lane segments."""

    def __init__(self, rows: list[list[TileKind]], tile_size: float,
                 name: str = "unnamed"):
        if tile_size <= 0:
            raise ParseError("tile_size must be > 0")
        if not rows or not rows[0]:
            raise ParseError("map grid is empty")
        if any(len(r) != len(rows[0]) for r in rows):
            raise ParseError("map rows have unequal lengths")
        self.name = name
        self.tile_size = float(tile_size)
        self.height = len(rows)
        self.width = len(rows[0])
        # kind_grid[iy][ix] with iy counted from the south (bottom).
        self.kind_grid = [list(r) for r in reversed(rows)]
        self.lane_half_width = self.tile_size / 4.0
        self.segments: list[_Segment] = []
        self._build_segments()
        self._link_segments()
        self._pack()

    # -- construction ---------------------------------------------------

    def kind_at(self, ix: int, iy: int) -> TileKind:
        if 0 <= ix < self.width and 0 <= iy < self.height:
            return self.kind_grid[iy][ix]
        return TileKind.GRASS

    def _build_segments(self):
        ts = self.tile_size
        for iy in range(self.height):
            for ix in range(self.width):
                kind = self.kind_at(ix, iy)
                if not kind.drivable:
                    continue
                x0, y0 = ix * ts, iy * ts
                add = self.segments.append
                n = len(self.segments)
                if kind is TileKind.STRAIGHT_NS:
                    add(_Segment(n, (ix, iy),
                                 A=np.array([x0 + 0.75 * ts, y0]),
                                 U=np.array([0.0, 1.0]), length=ts))
                    add(_Segment(n + 1, (ix, iy),
                                 A=np.array([x0 + 0.25 * ts, y0 + ts]),
                                 U=np.array([0.0, -1.0]), length=ts))
                elif kind is TileKind.STRAIGHT_EW:
                    add(_Segment(n, (ix, iy),
                                 A=np.array([x0, y0 + 0.25 * ts]),
                                 U=np.array([1.0, 0.0]), length=ts))
                    add(_Segment(n + 1, (ix, iy),
                                 A=np.array([x0 + ts, y0 + 0.75 * ts]),
                                 U=np.array([-1.0, 0.0]), length=ts))
                else:
                    (cx, cy), a_lo = _CURVE_GEOM[kind]
                    C = np.array([x0 + cx * ts, y0 + cy * ts])
                    r_out, r_in = 0.75 * ts, 0.25 * ts
                    # CCW traversal (left turn) keeps right on the outer arc.
                    add(_Segment(n, (ix, iy), C=C, R=r_out,
                                 ang_start=a_lo, sign=1,
                                 length=r_out * QUARTER))
                    add(_Segment(n + 1, (ix, iy), C=C, R=r_in,
                                 ang_start=a_lo + QUARTER, sign=-1,
                                 length=r_in * QUARTER))
        if not self.segments:
            raise DisconnectedTrack("map has no drivable tiles")

    def _link_segments(self):
        def key(p):
            return (round(p[0], 6), round(p[1], 6))

        entries = {}
        for seg in self.segments:
            k = key(seg.point_at(0.0))
            if k in entries:
                raise DisconnectedTrack(f"overlapping lane entries at {k}")
            entries[k] = seg
        for seg in self.segments:
            exit_p = seg.point_at(seg.length)
            nxt = entries.get(key(exit_p))
            if nxt is None:
                raise DisconnectedTrack(
                    f"lane on tile {seg.tile} dead-ends at "
                    f"({exit_p[0]:.3f}, {exit_p[1]:.3f})")
            if float(seg.tangent_at(seg.length) @ nxt.tangent_at(0.0)) < 0.99:
                raise DisconnectedTrack(
                    f"lane direction breaks between tiles {seg.tile} "
                    f"and {nxt.tile}")
            seg.successor = nxt.index

    def _pack(self):
        """Flatten segment data into arrays for vectorized projection."""
        segs = self.segments
        n = len(segs)
        self._is_arc = np.array([s.is_arc for s in segs])
        self._A = np.array([s.A if not s.is_arc else (0, 0) for s in segs],
                           dtype=float)
        self._U = np.array([s.U if not s.is_arc else (0, 0) for s in segs],
                           dtype=float)
        self._C = np.array([s.C if s.is_arc else (0, 0) for s in segs],
                           dtype=float)
        self._R = np.array([s.R if s.is_arc else 1.0 for s in segs])
        self._a0 = np.array([s.ang_start if s.is_arc else 0.0 for s in segs])
        self._sign = np.array([s.sign for s in segs], dtype=float)
        self._len = np.array([s.length for s in segs])
        self._curv = np.array([s.curvature for s in segs])
        self._succ = np.array([s.successor for s in segs])
        self._ntot = n

    # -- queries ----------------------------------------------------------

    @property
    def drivable_tile_count(self) -> int:
        return sum(k.drivable for row in self.kind_grid for k in row)

    def tile_under(self, x: float, y: float) -> TileKind:
        ts = self.tile_size
        return self.kind_at(math.floor(x / ts), math.floor(y / ts))

    def on_drivable(self, x: float, y: float) -> bool:
        """True when (x, y) lies on the road surface of a drivable tile."""
        ts = self.tile_size
        ix, iy = math.floor(x / ts), math.floor(y / ts)
        kind = self.kind_at(ix, iy)
        if not kind.drivable:
            return False
        if kind.is_curve:
            (cx, cy), _ = _CURVE_GEOM[kind]
            dx = x - (ix + cx) * ts
            dy = y - (iy + cy) * ts
            return dx * dx + dy * dy <= ts * ts
        return True

    def _project_all(self, x: float, y: float):
        """Nearest point on every directed segment.

        Returns (dist2, qx, qy, tx, ty, s) arrays over all segments.
        """
        arc = self._is_arc
        px = np.full(self._ntot, x)
        py = np.full(self._ntot, y)

        qx = np.empty(self._ntot)
        qy = np.empty(self._ntot)
        tx = np.empty(self._ntot)
        ty = np.empty(self._ntot)
        s = np.empty(self._ntot)

        # Lines: clamp the projection parameter to the segment.
        lin = ~arc
        apx = px[lin] - self._A[lin, 0]
        apy = py[lin] - self._A[lin, 1]
        t = np.clip(apx * self._U[lin, 0] + apy * self._U[lin, 1],
                    0.0, self._len[lin])
        qx[lin] = self._A[lin, 0] + t * self._U[lin, 0]
        qy[lin] = self._A[lin, 1] + t * self._U[lin, 1]
        tx[lin] = self._U[lin, 0]
        ty[lin] = self._U[lin, 1]
        s[lin] = t

        # Arcs: clamp the angular parameter to the quarter span.
        vx = px[arc] - self._C[arc, 0]
        vy = py[arc] - self._C[arc, 1]
        ang = np.arctan2(vy, vx)
        rel = ((ang - self._a0[arc]) * self._sign[arc]) % TWO_PI
        over = rel > QUARTER
        # Past the span: snap to whichever endpoint is angularly closer.
        rel = np.where(over, np.where(rel - QUARTER < TWO_PI - rel,
                                      QUARTER, 0.0), rel)
        th = self._a0[arc] + self._sign[arc] * rel
        cth, sth = np.cos(th), np.sin(th)
        qx[arc] = self._C[arc, 0] + self._R[arc] * cth
        qy[arc] = self._C[arc, 1] + self._R[arc] * sth
        tx[arc] = -self._sign[arc] * sth
        ty[arc] = self._sign[arc] * cth
        s[arc] = self._R[arc] * rel

        dx, dy = px - qx, py - qy
        return dx * dx + dy * dy, qx, qy, tx, ty, s

    def lane_pose(self, x: float, y: float, heading: float) -> LanePose:
        """Lane-relative pose against the best direction-aligned lane."""
        dist2, qx, qy, tx, ty, s = self._project_all(x, y)
        phi = wrap_angle(heading - np.arctan2(ty, tx))
        aligned = np.abs(phi) < QUARTER
        if aligned.any():
            cost = np.where(aligned, dist2, np.inf)
        else:
            cost = dist2
        i = int(np.argmin(cost))
        d = float(tx[i] * (y - qy[i]) - ty[i] * (x - qx[i]))
        drivable = self.on_drivable(x, y)
        return LanePose(
            d=d,
            phi=float(phi[i]),
            curvature=float(self._curv[i]),
            in_right_lane=bool(drivable and abs(d) < self.lane_half_width),
            on_drivable=drivable,
            segment=i,
            s=float(s[i]),
        )

    def advance(self, segment: int, s: float, dist: float):
        """Walk `dist` meters of centerline forward from (segment, s)."""
        seg = self.segments[segment]
        s = s + dist
        hops = 0
        while s > seg.length:
            s -= seg.length
            seg = self.segments[seg.successor]
            hops += 1
            if hops > 4 * self._ntot:
                raise DisconnectedTrack("centerline walk did not close")
        return seg.index, s

    def lookahead_point(self, x: float, y: float, heading: float,
                        lookahead: float) -> np.ndarray:
        """World point `lookahead` meters ahead along the right lane."""
        if not self.on_drivable(x, y):
            raise OffRoad(f"pose ({x:.3f}, {y:.3f}) is not on the road")
        pose = self.lane_pose(x, y, heading)
        idx, s = self.advance(pose.segment, pose.s, lookahead)
        return self.segments[idx].point_at(s)


def parse_map(text: str, name: str = "unnamed") -> TrackMap:
    """Parse the line-oriented map format into a validated TrackMap."""
    tile_size = 0.585
    rows: list[list[TileKind]] = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.lower().startswith("tile_size"):
            _, _, val = line.partition(":")
            try:
                tile_size = float(val)
            except ValueError:
                raise ParseError(f"line {lineno}: bad tile_size {val!r}")
            continue
        row = []
        for tok in line.split(","):
            tok = tok.strip().lower()
            tok = _TOKEN_ALIASES.get(tok, tok)
            try:
                row.append(TileKind(tok))
            except ValueError:
                raise ParseError(f"line {lineno}: unknown tile kind {tok!r}")
        rows.append(row)
    return TrackMap(rows, tile_size, name=name)


def load_map(source: str | Path) -> TrackMap:
    """Load a map from a file path or from raw map text."""
    if isinstance(source, Path) or "\n" not in str(source):
        path = Path(source)
        return parse_map(path.read_text(), name=path.stem)
    return parse_map(str(source))


BUNDLED_MAPS = ("small_loop", "loop_obstacles_free", "eval_loop")
TRAINING_MAPS = ("small_loop", "loop_obstacles_free")
HELD_OUT_MAP = "eval_loop"


def load_bundled(name: str) -> TrackMap:
    if name not in BUNDLED_MAPS:
        raise ParseError(f"no bundled map named {name!r}; "
                         f"available: {', '.join(BUNDLED_MAPS)}")
    text = resources.files("laneforge").joinpath(f"maps/{name}.map").read_text()
    return parse_map(text, name=name)
