"""Sparse Lucas-Kanade optical flow, built from scratch on numpy.

Flow at a point is estimated by solving the windowed normal equations
G [u v]^T = -b over a (2*half_window+1)^2 patch, where G accumulates squared
spatial gradients and b the spatial-temporal products.  The solve is refined
iteratively by bilinear-warping the current frame's window with the running
estimate; an optional coarse-to-fine pyramid extends the capture range.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .geometry import Point2

DEFAULT_HALF_WINDOW = 10

# Rec.601 luma weights for RGB ingest.
_LUMA_WEIGHTS = (0.299, 0.587, 0.114)

# Canonical 8-bit -> [0, 1] float32 mapping; every ingest path shares it so
# file round-trips are bit-exact.
GRAY8_LUT = (np.arange(256, dtype=np.float64) / 255.0).astype(np.float32)


def gray8_to_luma(arr: np.ndarray) -> np.ndarray:
    return GRAY8_LUT[arr]


class DimensionMismatchError(ValueError):
    """Frames of different shapes were combined."""


class OutOfBoundsError(ValueError):
    """The flow window around the requested point exits the frame."""


@dataclass(frozen=True)
class Frame:
    """Single luma frame; values in [0, 1], row-major (height, width)."""

    width: int
    height: int
    luma: np.ndarray
    index: int

    def __post_init__(self):
        if self.width <= 0 or self.height <= 0:
            raise ValueError("frame dimensions must be positive")
        if self.index < 0:
            raise ValueError("frame index must be non-negative")
        if self.luma.shape != (self.height, self.width):
            raise DimensionMismatchError(
                f"luma shape {self.luma.shape} != ({self.height}, {self.width})")

    @staticmethod
    def from_gray8(data, width: int, height: int, index: int) -> "Frame":
        """Build a frame from row-major 8-bit grayscale bytes or array."""
        arr = np.frombuffer(data, dtype=np.uint8) if isinstance(data, (bytes, bytearray)) else np.asarray(data, dtype=np.uint8)
        arr = arr.reshape(height, width)
        return Frame(width, height, gray8_to_luma(arr), index)

    @staticmethod
    def from_rgb8(rgb: np.ndarray, index: int) -> "Frame":
        """Build a luma frame from an (h, w, 3) 8-bit RGB array (Rec.601)."""
        r, g, b = (rgb[..., k].astype(np.float32) for k in range(3))
        luma = (_LUMA_WEIGHTS[0] * r + _LUMA_WEIGHTS[1] * g + _LUMA_WEIGHTS[2] * b) * np.float32(1 / 255.0)
        return Frame(rgb.shape[1], rgb.shape[0], luma, index)

    def to_gray8(self) -> np.ndarray:
        return np.clip(np.rint(self.luma * 255.0), 0, 255).astype(np.uint8)


class FlowStatus(enum.Enum):
    OK = "ok"
    LOST = "lost"


@dataclass(frozen=True)
class FlowVector:
    u: float
    v: float

    @property
    def magnitude(self) -> float:
        return math.hypot(self.u, self.v)


@dataclass(frozen=True)
class FlowResult:
    status: FlowStatus
    flow: FlowVector
    residual: float
    eig_min: float

    @property
    def ok(self) -> bool:
        return self.status is FlowStatus.OK


@dataclass(frozen=True)
class FlowConfig:
    half_window: int = DEFAULT_HALF_WINDOW
    max_iterations: int = 10
    update_epsilon: float = 0.01          # stop when the step falls below this
    min_eigenvalue: float = 1e-4          # aperture-problem guard on eig_min(G)
    use_pyramid: bool = False
    pyramid_levels: int = 3


_LOST = FlowResult(FlowStatus.LOST, FlowVector(0.0, 0.0), float("inf"), 0.0)


def spatial_gradients(f: Frame) -> tuple[np.ndarray, np.ndarray]:
    """Per-pixel (d/dx, d/dy): central differences inside, one-sided at borders."""
    gy, gx = np.gradient(f.luma.astype(np.float64))
    return gx, gy


def temporal_gradient(f_prev: Frame, f_curr: Frame) -> np.ndarray:
    """Per-pixel intensity change between two equally sized frames."""
    if (f_prev.width, f_prev.height) != (f_curr.width, f_curr.height):
        raise DimensionMismatchError(
            f"{f_prev.width}x{f_prev.height} vs {f_curr.width}x{f_curr.height}")
    return f_curr.luma.astype(np.float64) - f_prev.luma.astype(np.float64)


def _sample_patch(img: np.ndarray, cx: float, cy: float, half: int) -> np.ndarray | None:
    """Bilinear (2*half+1)^2 patch centered at a float position.

    Returns None when any sample would fall outside the image.
    """
    offs = np.arange(-half, half + 1, dtype=np.float64)
    xs = cx + offs
    ys = cy + offs
    x0 = np.floor(xs).astype(np.int64)
    y0 = np.floor(ys).astype(np.int64)
    h, w = img.shape
    if x0[0] < 0 or y0[0] < 0 or x0[-1] + 1 > w - 1 or y0[-1] + 1 > h - 1:
        return None
    fx = (xs - x0)[None, :]
    fy = (ys - y0)[:, None]
    r0 = y0[:, None]
    c0 = x0[None, :]
    a = img[r0, c0]
    b = img[r0, c0 + 1]
    c = img[r0 + 1, c0]
    d = img[r0 + 1, c0 + 1]
    return (a * (1 - fx) * (1 - fy) + b * fx * (1 - fy)
            + c * (1 - fx) * fy + d * fx * fy)


def _lk_at(prev: np.ndarray, curr: np.ndarray, x: float, y: float,
           cfg: FlowConfig, guess: tuple[float, float] = (0.0, 0.0),
           strict_bounds: bool = True) -> FlowResult:
    hw = cfg.half_window
    padded = _sample_patch(prev, x, y, hw + 1)
    if padded is None:
        if strict_bounds:
            raise OutOfBoundsError(
                f"window of half-size {hw} around ({x:.1f}, {y:.1f}) exits the frame")
        return _LOST
    padded = padded.astype(np.float64, copy=False)

    template = padded[1:-1, 1:-1]
    gx = (padded[1:-1, 2:] - padded[1:-1, :-2]) * 0.5
    gy = (padded[2:, 1:-1] - padded[:-2, 1:-1]) * 0.5

    gxx = float((gx * gx).sum())
    gxy = float((gx * gy).sum())
    gyy = float((gy * gy).sum())
    trace = gxx + gyy
    eig_min = (trace - math.sqrt((gxx - gyy) ** 2 + 4.0 * gxy * gxy)) / 2.0
    det = gxx * gyy - gxy * gxy
    if eig_min < cfg.min_eigenvalue or det <= 0:
        return FlowResult(FlowStatus.LOST, FlowVector(0.0, 0.0), float("inf"), eig_min)

    u, v = guess
    it_grid = None
    for _ in range(cfg.max_iterations):
        warped = _sample_patch(curr, x + u, y + v, hw)
        if warped is None:
            return FlowResult(FlowStatus.LOST, FlowVector(0.0, 0.0), float("inf"), eig_min)
        it_grid = warped.astype(np.float64, copy=False) - template
        bx = float((gx * it_grid).sum())
        by = float((gy * it_grid).sum())
        du = -(gyy * bx - gxy * by) / det
        dv = -(gxx * by - gxy * bx) / det
        u += du
        v += dv
        if math.hypot(u, v) > hw:  # diverged
            return FlowResult(FlowStatus.LOST, FlowVector(0.0, 0.0), float("inf"), eig_min)
        if math.hypot(du, dv) < cfg.update_epsilon:
            break

    warped = _sample_patch(curr, x + u, y + v, hw)
    if warped is None:
        return FlowResult(FlowStatus.LOST, FlowVector(0.0, 0.0), float("inf"), eig_min)
    it_grid = warped.astype(np.float64, copy=False) - template
    residual = float(np.abs(gx * u + gy * v + it_grid).mean())
    return FlowResult(FlowStatus.OK, FlowVector(u, v), residual, eig_min)


def _binomial_decimate(img: np.ndarray) -> np.ndarray:
    """5-tap binomial blur followed by 2x decimation."""
    k = np.array([1.0, 4.0, 6.0, 4.0, 1.0], dtype=np.float64) / 16.0
    p = np.pad(img, ((0, 0), (2, 2)), mode="edge")
    hx = sum(k[i] * p[:, i:i + img.shape[1]] for i in range(5))
    p = np.pad(hx, ((2, 2), (0, 0)), mode="edge")
    out = sum(k[i] * p[i:i + img.shape[0], :] for i in range(5))
    return out[::2, ::2]


def lk_flow_at(f_prev: Frame, f_curr: Frame, p: Point2,
               half_window: int = DEFAULT_HALF_WINDOW,
               cfg: FlowConfig | None = None) -> FlowResult:
    """Lucas-Kanade flow at one point between two consecutive frames.

    Raises OutOfBoundsError when the window around ``p`` exits the frame;
    returns a LOST result for untextured windows or diverging solves.
    """
    if (f_prev.width, f_prev.height) != (f_curr.width, f_curr.height):
        raise DimensionMismatchError("frames differ in shape")
    if cfg is None:
        cfg = FlowConfig(half_window=half_window)
    if not cfg.use_pyramid:
        return _lk_at(f_prev.luma, f_curr.luma, p.x, p.y, cfg)

    levels = [(f_prev.luma.astype(np.float64), f_curr.luma.astype(np.float64))]
    for _ in range(cfg.pyramid_levels - 1):
        a, b = levels[-1]
        if min(a.shape) // 2 <= 2 * (cfg.half_window + 2):
            break
        levels.append((_binomial_decimate(a), _binomial_decimate(b)))

    guess = (0.0, 0.0)
    result = _LOST
    for lvl in range(len(levels) - 1, -1, -1):
        a, b = levels[lvl]
        scale = 2.0 ** lvl
        result = _lk_at(a, b, p.x / scale, p.y / scale, cfg, guess=guess,
                        strict_bounds=(lvl == 0))
        if not result.ok:
            if lvl == 0:
                return result
            guess = (guess[0] * 2.0, guess[1] * 2.0)
            continue
        if lvl > 0:
            guess = (result.flow.u * 2.0, result.flow.v * 2.0)
    return result


def track(f_prev: Frame, f_curr: Frame, p: Point2,
          cfg: FlowConfig | None = None) -> tuple[FlowResult, Point2]:
    """Advance a tracked point by its estimated flow.

    On OK the new point is (x + u, y + v); on LOST the point is returned
    unchanged with the status propagated.
    """
    cfg = cfg or FlowConfig()
    result = lk_flow_at(f_prev, f_curr, p, half_window=cfg.half_window, cfg=cfg)
    if result.ok:
        return result, Point2(p.x + result.flow.u, p.y + result.flow.v)
    return result, p
