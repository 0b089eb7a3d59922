"""Analytic camera: per-pixel inverse projection onto the ground plane.

Every pixel ray either hits the ground (classified as road surface,
edge line, center line, or grass from the tile geometry) or the sky.
No textures, no shading beyond a global light intensity. The render is
a pure function of (state, track, params).
"""

from __future__ import annotations

import math

import numpy as np

from .errors import DimensionMismatch
from .geometry import TileKind, TrackMap, _CURVE_GEOM
from .sim import RobotState, SimParams

RAW_H, RAW_W = 480, 640
OBS_H, OBS_W = 60, 80
BLOCK = 8

EDGE_LINE_WIDTH = 0.04          # meters, white line at the road border
CENTER_LINE_HALF = 0.012        # meters, half-width of the yellow line
DASH_PERIOD = 0.2               # meters along the lane arc
DASH_PAINTED = 0.12             # painted fraction of each period (60%)

_KIND_CODE = {
    TileKind.GRASS: 0,
    TileKind.STRAIGHT_NS: 1,
    TileKind.STRAIGHT_EW: 2,
    TileKind.CURVE_NE: 3,
    TileKind.CURVE_NW: 4,
    TileKind.CURVE_SE: 5,
    TileKind.CURVE_SW: 6,
}
_CURVE_CORNER = {_KIND_CODE[k]: off for k, off in
                 ((k, v[0]) for k, v in _CURVE_GEOM.items())}

_dir_cache: dict = {}


def _pixel_dirs(pitch: float, fov: float):
    """Camera-frame ray directions for every pixel (yaw applied later)."""
    key = (round(pitch, 9), round(fov, 9))
    hit = _dir_cache.get(key)
    if hit is not None:
        return hit
    f = (RAW_W / 2.0) / math.tan(fov / 2.0)
    u = (np.arange(RAW_W) + 0.5 - RAW_W / 2.0) / f
    v = (np.arange(RAW_H) + 0.5 - RAW_H / 2.0) / f
    a = np.broadcast_to(u, (RAW_H, RAW_W))
    b = np.broadcast_to(-v[:, None], (RAW_H, RAW_W))
    # Yaw-zero frame: forward (cos p, 0, -sin p), right (0, -1, 0),
    # up (sin p, 0, cos p).
    cp, sp = math.cos(pitch), math.sin(pitch)
    dx = cp + b * sp
    dy = -a
    dz = -sp + b * cp
    out = (np.ascontiguousarray(dx), np.ascontiguousarray(dy),
           np.ascontiguousarray(dz))
    if len(_dir_cache) > 64:
        _dir_cache.clear()
    _dir_cache[key] = out
    return out


def classify_ground(track: TrackMap, gx: np.ndarray, gy: np.ndarray) -> np.ndarray:
    """Surface class per ground point: 0 grass, 1 road, 2 white, 3 yellow."""
    ts = track.tile_size
    gx = np.asarray(gx, float)
    gy = np.asarray(gy, float)
    ix = np.floor(gx / ts).astype(np.int64)
    iy = np.floor(gy / ts).astype(np.int64)
    kind_grid = np.zeros((track.height + 2, track.width + 2), dtype=np.int8)
    for ty in range(track.height):
        for tx in range(track.width):
            kind_grid[ty + 1, tx + 1] = _KIND_CODE[track.kind_at(tx, ty)]
    cx = np.clip(ix + 1, 0, track.width + 1)
    cy = np.clip(iy + 1, 0, track.height + 1)
    inside = (ix >= 0) & (ix < track.width) & (iy >= 0) & (iy < track.height)
    kind = np.where(inside, kind_grid[cy, cx], 0)

    lx = gx - ix * ts
    ly = gy - iy * ts
    cls = np.zeros(gx.shape, dtype=np.uint8)

    for straight_code, lat, lon in ((1, lx, gy), (2, ly, gx)):
        m = kind == straight_code
        if not m.any():
            continue
        latm, lonm = lat[m], lon[m]
        c = np.ones(latm.shape, dtype=np.uint8)
        c[(latm < EDGE_LINE_WIDTH) | (latm > ts - EDGE_LINE_WIDTH)] = 2
        dash = (lonm % DASH_PERIOD) < DASH_PAINTED
        c[(np.abs(latm - ts / 2.0) < CENTER_LINE_HALF) & dash] = 3
        cls[m] = c

    for code in (3, 4, 5, 6):
        m = kind == code
        if not m.any():
            continue
        ox, oy = _CURVE_CORNER[code]
        dx = lx[m] - ox * ts
        dy = ly[m] - oy * ts
        rho = np.hypot(dx, dy)
        c = np.ones(rho.shape, dtype=np.uint8)
        c[rho > ts] = 0
        c[(rho > ts - EDGE_LINE_WIDTH) & (rho <= ts)] = 2
        c[rho < EDGE_LINE_WIDTH] = 2
        theta = np.arctan2(dy, dx) % (2.0 * math.pi)
        dash = ((theta * (ts / 2.0)) % DASH_PERIOD) < DASH_PAINTED
        c[(np.abs(rho - ts / 2.0) < CENTER_LINE_HALF) & dash] = 3
        cls[m] = c
    return cls


def render(state: RobotState, track: TrackMap, params: SimParams) -> np.ndarray:
    """480x640x3 uint8 forward-camera view from the robot pose."""
    dx0, dy0, dz0 = _pixel_dirs(params.cam_pitch, params.cam_fov)
    cy, sy = math.cos(state.heading), math.sin(state.heading)

    ground = dz0 < -1e-9
    gdx0 = dx0[ground]
    gdy0 = dy0[ground]
    gdz = dz0[ground]
    wdx = cy * gdx0 - sy * gdy0
    wdy = sy * gdx0 + cy * gdy0
    t = params.cam_height / -gdz
    gx = state.x + t * wdx
    gy = state.y + t * wdy
    cls = classify_ground(track, gx, gy)

    light = params.light_intensity
    palette = np.array([params.grass_color, params.road_color,
                        params.lane_white, params.lane_yellow], dtype=np.float32)
    palette = np.clip(palette * light, 0.0, 1.0)
    sky = np.clip(np.asarray(params.sky_color, np.float32) * light, 0.0, 1.0)

    img = np.empty((RAW_H, RAW_W, 3), dtype=np.uint8)
    img[~ground] = np.round(sky * 255.0).astype(np.uint8)
    img[ground] = np.round(palette[cls] * 255.0).astype(np.uint8)
    return img


def preprocess(img: np.ndarray) -> np.ndarray:
    """8x8 block-average downscale to 60x80 and rescale to [0, 1]."""
    img = np.asarray(img)
    if img.shape != (RAW_H, RAW_W, 3):
        raise DimensionMismatch(f"expected ({RAW_H}, {RAW_W}, 3), "
                                f"got {img.shape}")
    blocks = img.reshape(OBS_H, BLOCK, OBS_W, BLOCK, 3).astype(np.float32)
    means = blocks.sum(axis=(1, 3)) / float(BLOCK * BLOCK)
    return means / np.float32(255.0)


def observe(state: RobotState, track: TrackMap, params: SimParams) -> np.ndarray:
    """Full camera pipeline: render then preprocess."""
    return preprocess(render(state, track, params))


def write_ppm(img: np.ndarray, path) -> None:
    """Write an RGB uint8 image as binary PPM (P6)."""
    h, w, _ = img.shape
    with open(path, "wb") as fh:
        fh.write(f"P6\n{w} {h}\n255\n".encode())
        fh.write(np.ascontiguousarray(img, dtype=np.uint8).tobytes())
