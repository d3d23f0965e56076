"""Deterministic synthetic pour scenes with exact ground truth.

A scene is two rotated chutes over a flat background.  Each chute carries a
granular value-noise texture; when a side pours, its texture slides along
the chute's downhill axis at a fixed speed and a stream column extends below
the bottom edge.  Optional artifacts reproduce the two field failure modes:
a drifting shadow band on the right chute, and a contrast collapse for
very-high-slump (smooth-flow) batches.  Rendering is a pure function of
(spec, frame index): texture lattices come from an integer hash, so frames
are bit-identical across runs and platforms.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .detect import Side
from .geometry import RotatedBox, corners, deg_to_rad, enclosing_upright
from .optflow import Frame, gray8_to_luma
from .slump import SlumpBin

BACKGROUND_LUMA = 0.42
CHUTE_BASE_LUMA = 0.5
STREAM_HALF_WIDTH_FRACTION = 0.25   # of the chute width
SHADOW_DEPTH = 0.6
SHADOW_EDGE_SOFTNESS = 4.0

# Bin midpoint (mm) -> flow speed (px/frame), linear over [1.0, 3.5].
_SPEED_MM_LO, _SPEED_MM_HI = 135.0, 255.0
_SPEED_LO, _SPEED_HI = 1.0, 3.5


def flow_speed_for_bin(b: SlumpBin) -> float:
    mid = b.midpoint_mm
    frac = (mid - _SPEED_MM_LO) / (_SPEED_MM_HI - _SPEED_MM_LO)
    return _SPEED_LO + frac * (_SPEED_HI - _SPEED_LO)


@dataclass(frozen=True)
class PourSpec:
    start_frame: int
    flow_speed: float
    slump_bin: SlumpBin | None = None

    def __post_init__(self):
        if self.flow_speed <= 0:
            raise ValueError("flow_speed must be positive")
        if self.start_frame < 0:
            raise ValueError("start_frame must be non-negative")


@dataclass(frozen=True)
class ShadowSpec:
    enabled: bool = False
    onset_frame: int = 0
    drift: float = 1.5     # px/frame along the chute axis


@dataclass(frozen=True)
class TextureSpec:
    contrast: float = 0.8
    seed: int = 0
    scale: float = 5.0     # granule size, px

    def __post_init__(self):
        if not 0.0 <= self.contrast <= 1.0:
            raise ValueError("contrast must be in [0, 1]")


@dataclass(frozen=True)
class PhotometricSpec:
    brightness: float = 0.0
    contrast_gain: float = 1.0
    gamma: float = 1.0


@dataclass(frozen=True)
class SceneSpec:
    frame_w: int
    frame_h: int
    left_box: RotatedBox
    right_box: RotatedBox
    duration: int
    left_pour: PourSpec | None = None
    right_pour: PourSpec | None = None
    texture: TextureSpec = field(default_factory=TextureSpec)
    shadow: ShadowSpec = field(default_factory=ShadowSpec)
    smooth_flow: float = 1.0            # texture-contrast multiplier (artifact)
    photometric: PhotometricSpec = field(default_factory=PhotometricSpec)
    nominal_bin: SlumpBin | None = None  # batch bin for no-pour scenes

    def __post_init__(self):
        if self.duration < 1:
            raise ValueError("duration must be at least 1 frame")
        for name, box in (("left_box", self.left_box), ("right_box", self.right_box)):
            enclosing_upright(box, self.frame_w, self.frame_h)  # raises if outside

    def pour_for(self, side: Side) -> PourSpec | None:
        return self.left_pour if side is Side.LEFT else self.right_pour

    def box_for(self, side: Side) -> RotatedBox:
        return self.left_box if side is Side.LEFT else self.right_box

    def to_json_dict(self) -> dict:
        def box_d(b):
            return {"cx": b.cx, "cy": b.cy, "w": b.w, "h": b.h, "theta_deg": b.theta_deg}

        def pour_d(p):
            if p is None:
                return None
            return {"start_frame": p.start_frame, "flow_speed": p.flow_speed,
                    "slump_bin": p.slump_bin.label if p.slump_bin else None}

        return {
            "frame_w": self.frame_w, "frame_h": self.frame_h,
            "left_box": box_d(self.left_box), "right_box": box_d(self.right_box),
            "duration": self.duration,
            "left_pour": pour_d(self.left_pour), "right_pour": pour_d(self.right_pour),
            "texture": {"contrast": self.texture.contrast, "seed": self.texture.seed,
                        "scale": self.texture.scale},
            "shadow": {"enabled": self.shadow.enabled, "onset_frame": self.shadow.onset_frame,
                       "drift": self.shadow.drift},
            "smooth_flow": self.smooth_flow,
            "photometric": {"brightness": self.photometric.brightness,
                            "contrast_gain": self.photometric.contrast_gain,
                            "gamma": self.photometric.gamma},
            "nominal_bin": self.nominal_bin.label if self.nominal_bin else None,
        }

    @staticmethod
    def from_json_dict(d: dict) -> "SceneSpec":
        def box_f(v):
            return RotatedBox(v["cx"], v["cy"], v["w"], v["h"], v["theta_deg"])

        def pour_f(v):
            if v is None:
                return None
            b = v.get("slump_bin")
            return PourSpec(v["start_frame"], v["flow_speed"],
                            SlumpBin.from_label(b) if b else None)

        return SceneSpec(
            frame_w=d["frame_w"], frame_h=d["frame_h"],
            left_box=box_f(d["left_box"]), right_box=box_f(d["right_box"]),
            duration=d["duration"],
            left_pour=pour_f(d.get("left_pour")), right_pour=pour_f(d.get("right_pour")),
            texture=TextureSpec(**d.get("texture", {})),
            shadow=ShadowSpec(**d.get("shadow", {})),
            smooth_flow=d.get("smooth_flow", 1.0),
            photometric=PhotometricSpec(**d.get("photometric", {})),
            nominal_bin=(SlumpBin.from_label(d["nominal_bin"])
                         if d.get("nominal_bin") else None),
        )


@dataclass(frozen=True)
class SceneTruth:
    """Ground truth mirrored from the generative parameters."""

    frame_w: int
    frame_h: int
    duration: int
    boxes: dict                  # Side -> RotatedBox (constant per scene)
    upright_boxes: dict          # Side -> RotatedBox with theta 0
    pour_starts: dict            # Side -> int | None
    slump_bins: dict             # Side -> SlumpBin | None
    flow_speeds: dict            # Side -> float | None
    nominal_bin: SlumpBin | None = None  # batch bin, defined even with no pour

    @property
    def pouring_sides(self) -> list[Side]:
        return [s for s in (Side.LEFT, Side.RIGHT) if self.pour_starts[s] is not None]

    def boxes_at(self, t: int) -> list[tuple[RotatedBox, str]]:
        out = []
        for side in (Side.LEFT, Side.RIGHT):
            out.append((self.boxes[side], "chute"))
            out.append((self.upright_boxes[side], "urchute"))
        return out

    def to_json_dict(self) -> dict:
        def box_d(b):
            return {"cx": b.cx, "cy": b.cy, "w": b.w, "h": b.h, "theta_deg": b.theta_deg}

        return {
            "frame_w": self.frame_w, "frame_h": self.frame_h, "duration": self.duration,
            "boxes": {s.value: box_d(self.boxes[s]) for s in self.boxes},
            "upright_boxes": {s.value: box_d(self.upright_boxes[s]) for s in self.upright_boxes},
            "pour_starts": {s.value: self.pour_starts[s] for s in self.pour_starts},
            "slump_bins": {s.value: (self.slump_bins[s].label if self.slump_bins[s] else None)
                           for s in self.slump_bins},
            "flow_speeds": {s.value: self.flow_speeds[s] for s in self.flow_speeds},
            "nominal_bin": self.nominal_bin.label if self.nominal_bin else None,
        }

    @staticmethod
    def from_json_dict(d: dict) -> "SceneTruth":
        def box_f(v):
            return RotatedBox(v["cx"], v["cy"], v["w"], v["h"], v["theta_deg"])

        sides = {"left": Side.LEFT, "right": Side.RIGHT}
        return SceneTruth(
            frame_w=d["frame_w"], frame_h=d["frame_h"], duration=d["duration"],
            boxes={sides[k]: box_f(v) for k, v in d["boxes"].items()},
            upright_boxes={sides[k]: box_f(v) for k, v in d["upright_boxes"].items()},
            pour_starts={sides[k]: v for k, v in d["pour_starts"].items()},
            slump_bins={sides[k]: (SlumpBin.from_label(v) if v else None)
                        for k, v in d["slump_bins"].items()},
            flow_speeds={sides[k]: v for k, v in d["flow_speeds"].items()},
            nominal_bin=(SlumpBin.from_label(d["nominal_bin"])
                         if d.get("nominal_bin") else None),
        )


def truth(spec: SceneSpec) -> SceneTruth:
    """Exact ground truth for a scene: the generative parameters echoed back."""
    boxes, uprights, starts, bins, speeds = {}, {}, {}, {}, {}
    for side in (Side.LEFT, Side.RIGHT):
        box = spec.box_for(side)
        boxes[side] = box
        rect = enclosing_upright(box, spec.frame_w, spec.frame_h)
        uprights[side] = RotatedBox((rect.x0 + rect.x1) / 2.0, (rect.y0 + rect.y1) / 2.0,
                                    rect.width, rect.height, 0.0)
        pour = spec.pour_for(side)
        starts[side] = pour.start_frame if pour else None
        bins[side] = pour.slump_bin if pour else None
        speeds[side] = pour.flow_speed if pour else None
    nominal = next((b for b in bins.values() if b is not None), spec.nominal_bin)
    return SceneTruth(spec.frame_w, spec.frame_h, spec.duration,
                      boxes, uprights, starts, bins, speeds, nominal)


# --- texture -----------------------------------------------------------------

_M1 = np.uint64(0x9E3779B97F4A7C15)
_M2 = np.uint64(0xC2B2AE3D27D4EB4F)
_M3 = np.uint64(0xFF51AFD7ED558CCD)


def _hash_unit(ix: np.ndarray, iy: np.ndarray, seed: int) -> np.ndarray:
    """Lattice hash -> uniform values in [0, 1); integer arithmetic only."""
    salt = np.uint64((seed * 0xFF51AFD7ED558CCD) & 0xFFFFFFFFFFFFFFFF)
    h = (ix.astype(np.int64).astype(np.uint64) * _M1
         ^ iy.astype(np.int64).astype(np.uint64) * _M2
         ^ salt)
    h ^= h >> np.uint64(33)
    h *= _M3
    h ^= h >> np.uint64(33)
    return (h >> np.uint64(11)).astype(np.float64) * (1.0 / (1 << 53))


def _value_noise(x: np.ndarray, y: np.ndarray, seed: int, scale: float) -> np.ndarray:
    fx = x / scale
    fy = y / scale
    x0 = np.floor(fx)
    y0 = np.floor(fy)
    tx = fx - x0
    ty = fy - y0
    sx = tx * tx * (3.0 - 2.0 * tx)
    sy = ty * ty * (3.0 - 2.0 * ty)
    ix = x0.astype(np.int64)
    iy = y0.astype(np.int64)
    v00 = _hash_unit(ix, iy, seed)
    v10 = _hash_unit(ix + 1, iy, seed)
    v01 = _hash_unit(ix, iy + 1, seed)
    v11 = _hash_unit(ix + 1, iy + 1, seed)
    return (v00 * (1 - sx) * (1 - sy) + v10 * sx * (1 - sy)
            + v01 * (1 - sx) * sy + v11 * sx * sy)


def _granular(x: np.ndarray, y: np.ndarray, seed: int, scale: float) -> np.ndarray:
    """Two-octave value noise: granules around ``scale`` and ``scale/2`` px."""
    coarse = _value_noise(x, y, seed, scale)
    fine = _value_noise(x, y, seed + 0x51AB, scale / 2.0)
    return 0.65 * coarse + 0.35 * fine


# --- rendering ---------------------------------------------------------------

def _downhill_normal(theta_deg: float) -> tuple[float, float]:
    th = deg_to_rad(theta_deg)
    nx, ny = -math.sin(th), math.cos(th)
    if ny < 0:
        nx, ny = -nx, -ny
    return nx, ny


def _render_chute(luma: np.ndarray, spec: SceneSpec, side: Side, t: int) -> None:
    box = spec.box_for(side)
    pour = spec.pour_for(side)
    th = deg_to_rad(box.theta_deg)
    ct, st = math.cos(th), math.sin(th)
    nx, ny = _downhill_normal(box.theta_deg)
    shift = 0.0
    if pour is not None and t > pour.start_frame:
        shift = pour.flow_speed * (t - pour.start_frame)
    spill = min(shift, float(box.h)) if shift > 0 else 0.0

    # Pixel bounds covering the chute and any stream extension.
    pts = corners(box)
    xs = [p.x for p in pts]
    ys = [p.y for p in pts]
    if spill > 0:
        xs += [x + nx * spill for x in xs]
        ys += [y + ny * spill for y in ys]
    x0 = max(0, int(math.floor(min(xs))))
    y0 = max(0, int(math.floor(min(ys))))
    x1 = min(spec.frame_w, int(math.ceil(max(xs))) + 1)
    y1 = min(spec.frame_h, int(math.ceil(max(ys))) + 1)
    if x0 >= x1 or y0 >= y1:
        return

    yy, xx = np.mgrid[y0:y1, x0:x1].astype(np.float64)
    dx = xx - box.cx
    dy = yy - box.cy
    a = dx * ct + dy * st              # along the width axis
    b = dx * nx + dy * ny              # along the downhill normal

    in_chute = (np.abs(a) <= box.w / 2.0) & (np.abs(b) <= box.h / 2.0)
    region = in_chute
    if spill > 0:
        stream = ((np.abs(a) <= box.w * STREAM_HALF_WIDTH_FRACTION)
                  & (b > box.h / 2.0) & (b <= box.h / 2.0 + spill))
        region = in_chute | stream
    if not region.any():
        return

    contrast = spec.texture.contrast * spec.smooth_flow
    side_salt = 0 if side is Side.LEFT else 7919
    tex = _granular(a[region] + side_salt * 17.0, b[region] - shift,
                    spec.texture.seed, spec.texture.scale)
    values = CHUTE_BASE_LUMA + (tex - 0.5) * contrast

    if spec.shadow.enabled and side is Side.RIGHT and t >= spec.shadow.onset_frame:
        band_w = box.h / 3.0
        span = box.h + 2.0 * band_w
        travel = (spec.shadow.drift * (t - spec.shadow.onset_frame)) % span
        b_c = -box.h / 2.0 - band_w / 2.0 + travel
        soft = SHADOW_EDGE_SOFTNESS
        rel = b[region]
        rise = np.clip((rel - (b_c - band_w / 2.0 - soft)) / soft, 0.0, 1.0)
        fall = np.clip(((b_c + band_w / 2.0 + soft) - rel) / soft, 0.0, 1.0)
        profile = (rise * rise * (3 - 2 * rise)) * (fall * fall * (3 - 2 * fall))
        values = values * (1.0 - SHADOW_DEPTH * profile)

    sub = luma[y0:y1, x0:x1]
    sub[region] = values


def render(spec: SceneSpec, t: int) -> Frame:
    """Render frame ``t`` of the scene; deterministic in (spec, t)."""
    if not 0 <= t < spec.duration:
        raise ValueError(f"frame index {t} outside scene duration {spec.duration}")
    luma = np.full((spec.frame_h, spec.frame_w), BACKGROUND_LUMA, dtype=np.float64)
    for side in (Side.LEFT, Side.RIGHT):
        _render_chute(luma, spec, side, t)

    ph = spec.photometric
    if ph.contrast_gain != 1.0 or ph.brightness != 0.0:
        luma = luma * ph.contrast_gain + ph.brightness
    np.clip(luma, 0.0, 1.0, out=luma)
    if ph.gamma != 1.0:
        luma = luma ** ph.gamma
    # Quantize to the 8-bit grid so file round-trips are lossless.
    levels = np.floor(luma * 255.0 + 0.5).astype(np.uint8)
    return Frame(spec.frame_w, spec.frame_h, gray8_to_luma(levels), t)


def render_stereo(spec: SceneSpec, t: int) -> Frame:
    """Side-by-side stereo composite (duplicated content, 2x width)."""
    mono = render(spec, t)
    return Frame(spec.frame_w * 2, spec.frame_h,
                 np.hstack([mono.luma, mono.luma]), t)


def frames(spec: SceneSpec):
    """Iterate all frames of a scene in order."""
    for t in range(spec.duration):
        yield render(spec, t)


# --- scenario grids ----------------------------------------------------------

@dataclass(frozen=True)
class GridConfig:
    sides: tuple = (Side.LEFT, Side.RIGHT, None)     # None = no pour
    bins: tuple = tuple(SlumpBin)
    seeds: tuple = tuple(range(4))
    frame_w: int = 320
    frame_h: int = 180
    shadow: bool = False
    shadow_onset: int = 20
    shadow_drift: float = 1.5
    smooth_flow_multiplier: float = 0.25   # applied to OVER_240 scenes
    base_start_frame: int = 50


def _grid_boxes(cfg: GridConfig, seed: int) -> tuple[RotatedBox, RotatedBox]:
    rng = np.random.default_rng(seed * 7919 + 13)
    jx, jy, jt = rng.uniform(-3, 3), rng.uniform(-3, 3), rng.uniform(-3, 3)
    left = RotatedBox(cfg.frame_w * 0.26 + jx, cfg.frame_h * 0.48 + jy, 92, 40, (8 + jt) % 180)
    right = RotatedBox(cfg.frame_w * 0.74 - jx, cfg.frame_h * 0.48 + jy, 92, 40, (172 - jt) % 180)
    return left, right


def scenario_grid(cfg: GridConfig | None = None) -> list[tuple[SceneSpec, Side | None, SlumpBin]]:
    """Cartesian product of sides x bins x seeds as renderable scenes.

    Returns (spec, pouring side or None, slump bin) triples in a
    reproducible order; flow speed is mapped from the bin midpoint and
    very-high-slump scenes carry the smooth-flow contrast collapse.
    """
    cfg = cfg or GridConfig()
    out = []
    for side in cfg.sides:
        for b in cfg.bins:
            for seed in cfg.seeds:
                left, right = _grid_boxes(cfg, seed)
                start = cfg.base_start_frame + (seed % 4) * 8
                pour = PourSpec(start, flow_speed_for_bin(b), b)
                duration = start + 110
                shadow = ShadowSpec(enabled=cfg.shadow, onset_frame=cfg.shadow_onset,
                                    drift=cfg.shadow_drift)
                spec = SceneSpec(
                    frame_w=cfg.frame_w, frame_h=cfg.frame_h,
                    left_box=left, right_box=right, duration=duration,
                    left_pour=pour if side is Side.LEFT else None,
                    right_pour=pour if side is Side.RIGHT else None,
                    texture=TextureSpec(seed=seed * 104729 + b.index),
                    shadow=shadow,
                    smooth_flow=(cfg.smooth_flow_multiplier if b is SlumpBin.OVER_240 else 1.0),
                    nominal_bin=b,
                )
                out.append((spec, side, b))
    return out
