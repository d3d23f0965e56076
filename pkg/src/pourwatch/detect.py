"""Chute detector interface, left/right assignment and RoI locking.

Detectors are pluggable: an oracle that echoes simulator ground truth, a
reader for precomputed detection files, and an adapter speaking the wire
protocol to an external model process.  The stabilizer watches per-side
detection runs and freezes the region of interest once the same region has
been seen for more than ``lock_after`` consecutive frames, after which
detection input for that side is ignored.
"""

from __future__ import annotations

import enum
import json
import math
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Protocol

from .geometry import (
    EmptyCropError,
    RotatedBox,
    UprightRect,
    deg_to_rad,
    enclosing_upright,
    rotated_iou,
)
from .optflow import Frame

DEFAULT_TAU_SAME = 0.9
DEFAULT_LOCK_AFTER = 8          # lock when a run exceeds this many frames
DEFAULT_MIN_CONFIDENCE = 0.25
AMBIGUOUS_CX_GAP = 5.0


class NoChuteError(ValueError):
    """No chute-class detection in the frame."""


class AmbiguousSidesError(ValueError):
    """Two chute detections too close in cx to order left/right."""


class DetectionClass(enum.Enum):
    CHUTE = "chute"
    URCHUTE = "urchute"


class Side(enum.Enum):
    LEFT = "left"
    RIGHT = "right"


@dataclass(frozen=True)
class Detection:
    box: RotatedBox
    cls: DetectionClass
    confidence: float
    frame_index: int

    def __post_init__(self):
        if not 0.0 <= self.confidence <= 1.0:
            raise ValueError(f"confidence must be in [0, 1], got {self.confidence}")


@dataclass(frozen=True)
class RoiLock:
    side: Side
    box: RotatedBox
    crop: UprightRect
    locked_at: int
    contributing: int


class DetectorHandle(Protocol):
    def detect(self, frame: Frame) -> list[Detection]: ...


def assign_sides(dets: Iterable[Detection], frame_width: int) -> dict[Side, Detection]:
    """Order one or two chute detections into left/right slots.

    With two detections the smaller cx goes left; a single detection is
    assigned by the frame midline.  Raises NoChuteError with zero chutes and
    AmbiguousSidesError when two candidates sit within AMBIGUOUS_CX_GAP px.
    """
    chutes = sorted((d for d in dets if d.cls is DetectionClass.CHUTE),
                    key=lambda d: d.box.cx)
    if not chutes:
        raise NoChuteError("no chute detections")
    if len(chutes) == 1:
        side = Side.LEFT if chutes[0].box.cx < frame_width / 2.0 else Side.RIGHT
        return {side: chutes[0]}
    if len(chutes) > 2:
        raise ValueError(f"expected at most two chutes, got {len(chutes)}")
    if abs(chutes[1].box.cx - chutes[0].box.cx) < AMBIGUOUS_CX_GAP:
        raise AmbiguousSidesError(
            f"chutes at cx={chutes[0].box.cx:.1f} and cx={chutes[1].box.cx:.1f}")
    return {Side.LEFT: chutes[0], Side.RIGHT: chutes[1]}


def _mean_box(boxes: list[RotatedBox]) -> RotatedBox:
    """Arithmetic mean of (cx, cy, w, h) and circular mean of the axial angle."""
    n = len(boxes)
    cx = sum(b.cx for b in boxes) / n
    cy = sum(b.cy for b in boxes) / n
    w = sum(b.w for b in boxes) / n
    h = sum(b.h for b in boxes) / n
    s = sum(math.sin(2 * deg_to_rad(b.theta_deg)) for b in boxes)
    c = sum(math.cos(2 * deg_to_rad(b.theta_deg)) for b in boxes)
    theta = math.degrees(0.5 * math.atan2(s, c)) % 180.0
    return RotatedBox(cx, cy, w, h, theta)


@dataclass
class _SideRun:
    chutes: list[RotatedBox] = field(default_factory=list)
    urchutes: list[RotatedBox] = field(default_factory=list)

    def reset(self):
        self.chutes.clear()
        self.urchutes.clear()


class RoiStabilizer:
    """Per-side detection-run tracker that emits RoI locks.

    Feed detections frame by frame through :meth:`step`; a side locks once
    its run of same-region detections (rotated IoU vs the running mean box
    at least tau_same) exceeds ``lock_after`` frames.  Locked sides ignore
    further detections.
    """

    def __init__(self, frame_w: int, frame_h: int, tau_same: float = DEFAULT_TAU_SAME,
                 lock_after: int = DEFAULT_LOCK_AFTER,
                 min_confidence: float = DEFAULT_MIN_CONFIDENCE):
        self.frame_w = frame_w
        self.frame_h = frame_h
        self.tau_same = tau_same
        self.lock_after = lock_after
        self.min_confidence = min_confidence
        self.locks: dict[Side, RoiLock] = {}
        self.resets = 0
        self.ambiguous_frames = 0
        self._runs: dict[Side, _SideRun] = {Side.LEFT: _SideRun(), Side.RIGHT: _SideRun()}

    def step(self, frame_index: int, dets: Iterable[Detection]) -> dict[Side, RoiLock]:
        """Consume one frame's detections; returns sides newly locked."""
        usable = [d for d in dets if d.confidence >= self.min_confidence]
        urchutes = [d for d in usable if d.cls is DetectionClass.URCHUTE]
        try:
            assigned = assign_sides(usable, self.frame_w)
        except NoChuteError:
            assigned = {}
        except AmbiguousSidesError:
            self.ambiguous_frames += 1
            assigned = {}

        new_locks: dict[Side, RoiLock] = {}
        for side, run in self._runs.items():
            if side in self.locks:
                continue
            det = assigned.get(side)
            if det is None:
                if run.chutes:
                    self.resets += 1
                run.reset()
                continue
            if run.chutes and rotated_iou(det.box, _mean_box(run.chutes)) < self.tau_same:
                self.resets += 1
                run.reset()
            run.chutes.append(det.box)
            paired = self._pair_urchute(det.box, urchutes)
            if paired is not None:
                run.urchutes.append(paired)
            if len(run.chutes) > self.lock_after:
                lock = self._lock(side, run, frame_index)
                self.locks[side] = lock
                new_locks[side] = lock
                run.reset()
        return new_locks

    @staticmethod
    def _pair_urchute(chute: RotatedBox, urchutes: list[Detection]) -> RotatedBox | None:
        best, best_iou = None, 0.0
        for d in urchutes:
            v = rotated_iou(chute, d.box)
            if v > best_iou:
                best, best_iou = d.box, v
        return best

    def _lock(self, side: Side, run: _SideRun, frame_index: int) -> RoiLock:
        box = _mean_box(run.chutes)
        upright_src = _mean_box(run.urchutes) if run.urchutes else box
        crop = enclosing_upright(upright_src, self.frame_w, self.frame_h)
        return RoiLock(side=side, box=box, crop=crop, locked_at=frame_index,
                       contributing=len(run.chutes))


def crop_chute(frame: Frame, lock: RoiLock) -> Frame:
    """Cut the locked upright region out of a frame, preserving the index."""
    c = lock.crop
    if c.x1 > frame.width or c.y1 > frame.height:
        raise EmptyCropError(
            f"crop ({c.x0},{c.y0},{c.x1},{c.y1}) exceeds {frame.width}x{frame.height} frame")
    return Frame(c.width, c.height, frame.luma[c.y0:c.y1, c.x0:c.x1].copy(), frame.index)


class OracleDetector:
    """Detector backed by simulator ground truth.

    Emits the exact chute boxes plus their derived upright (URChute)
    companions; ``jitter`` adds seeded gaussian noise to centers for
    stabilizer stress tests.
    """

    def __init__(self, boxes: Mapping[Side, RotatedBox], frame_w: int, frame_h: int,
                 confidence: float = 0.99, jitter: float = 0.0, seed: int = 0):
        self.boxes = dict(boxes)
        self.frame_w = frame_w
        self.frame_h = frame_h
        self.confidence = confidence
        self.jitter = jitter
        import numpy as _np
        self._rng = _np.random.default_rng(seed)

    def detect(self, frame: Frame) -> list[Detection]:
        out = []
        for _side, box in sorted(self.boxes.items(), key=lambda kv: kv[0].value):
            if self.jitter > 0:
                box = RotatedBox(box.cx + float(self._rng.normal(0, self.jitter)),
                                 box.cy + float(self._rng.normal(0, self.jitter)),
                                 box.w, box.h, box.theta_deg)
            out.append(Detection(box, DetectionClass.CHUTE, self.confidence, frame.index))
            rect = enclosing_upright(box, self.frame_w, self.frame_h)
            ur = RotatedBox((rect.x0 + rect.x1) / 2.0, (rect.y0 + rect.y1) / 2.0,
                            rect.width, rect.height, 0.0)
            out.append(Detection(ur, DetectionClass.URCHUTE, self.confidence, frame.index))
        return out


class FileDetector:
    """Detections from a JSON-Lines file, one object per detection.

    Fields: frame, cls ("chute"|"urchute"), cx, cy, w, h, theta_deg, conf.
    Frame numbers must be non-decreasing.
    """

    def __init__(self, path):
        self.by_frame: dict[int, list[Detection]] = {}
        last = -1
        with open(path, "r", encoding="utf-8") as fh:
            for lineno, line in enumerate(fh, 1):
                line = line.strip()
                if not line:
                    continue
                try:
                    rec = json.loads(line)
                    det = Detection(
                        RotatedBox(rec["cx"], rec["cy"], rec["w"], rec["h"], rec["theta_deg"]),
                        DetectionClass(rec["cls"]),
                        rec["conf"],
                        rec["frame"],
                    )
                except (KeyError, ValueError, TypeError) as exc:
                    raise ValueError(f"{path}:{lineno}: bad detection record: {exc}") from exc
                if det.frame_index < last:
                    raise ValueError(f"{path}:{lineno}: frame numbers must be non-decreasing")
                last = det.frame_index
                self.by_frame.setdefault(det.frame_index, []).append(det)

    def detect(self, frame: Frame) -> list[Detection]:
        return list(self.by_frame.get(frame.index, []))
