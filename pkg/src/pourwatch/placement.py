"""Pour-start detection: track each locked chute's center with sparse flow
and report the frame at which it crosses the chute's bottom edge.

A tracker is seeded at the lock center with the signed distance to the
(fixed) bottom-edge line; every frame pair advances the point by its
estimated flow and re-evaluates the distance.  A sign change (or touch of
zero) is the crossing; the crossing step must also carry at least
``min_motion`` px/frame of flow so a zero-distance seed cannot fire on
numeric jitter.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Iterable, Mapping

from .detect import RoiLock, Side
from .geometry import EdgeLine, Point2, bottom_edge, crossed, crossed_points, signed_distance
from .optflow import FlowConfig, FlowResult, Frame, OutOfBoundsError, track


class Phase(enum.Enum):
    ARMED = "armed"
    DROPPED = "dropped"
    LOST = "lost"


@dataclass(frozen=True)
class DropEvent:
    side: Side
    frame: int
    d_t: float
    d_prev: float
    point: Point2


@dataclass(frozen=True)
class PlacementConfig:
    offset_bottom_edge: bool = True   # measure against the geometrically lowest edge
    min_motion: float = 0.2           # px/frame of flow required to honor a crossing
    reseed_cooldown: int = 5          # frames to wait after a lost track
    reseed_period: int = 150          # re-seed cadence while armed, bounds drift
    flow: FlowConfig = field(default_factory=FlowConfig)


@dataclass
class TrackerState:
    side: Side
    point: Point2
    d_prev: float
    phase: Phase
    seeded_at: int
    edge: EdgeLine
    flow_diag: FlowResult | None = None


def seed(lock: RoiLock, frame_index: int, offset_bottom_edge: bool = False) -> TrackerState:
    """Fresh tracker at the lock center, armed against the lock's bottom edge."""
    edge = bottom_edge(lock.box, offset_to_bottom=offset_bottom_edge)
    point = Point2(lock.box.cx, lock.box.cy)
    return TrackerState(side=lock.side, point=point,
                        d_prev=signed_distance(point, edge),
                        phase=Phase.ARMED, seeded_at=frame_index, edge=edge)


def advance(state: TrackerState, f_prev: Frame, f_curr: Frame, lock: RoiLock,
            cfg: PlacementConfig | None = None) -> DropEvent | None:
    """One tracking step; mutates ``state`` and returns a DropEvent on crossing.

    Flow failures and out-of-frame excursions put the tracker into LOST.
    """
    cfg = cfg or PlacementConfig()
    if state.phase is not Phase.ARMED:
        raise ValueError(f"advance requires an armed tracker, got {state.phase}")
    try:
        result, new_point = track(f_prev, f_curr, state.point, cfg.flow)
    except OutOfBoundsError:
        state.phase = Phase.LOST
        state.flow_diag = None
        return None
    state.flow_diag = result
    if not result.ok:
        state.phase = Phase.LOST
        return None

    d_t = signed_distance(new_point, state.edge)
    if state.edge.is_degenerate:
        hit = crossed_points(state.edge, state.point, new_point)
    else:
        hit = crossed(d_t, state.d_prev)
    d_prev_old = state.d_prev
    state.point = new_point
    if hit and result.flow.magnitude >= cfg.min_motion:
        state.phase = Phase.DROPPED
        return DropEvent(side=state.side, frame=f_curr.index, d_t=d_t,
                         d_prev=d_prev_old, point=new_point)
    state.d_prev = d_t
    return None


class SideTracker:
    """Tracker plus the re-seed policy for one chute side.

    Re-seeds at the lock center after ``reseed_cooldown`` frames once lost,
    and every ``reseed_period`` frames while armed to bound slow drift.
    Stops for the episode after a drop.
    """

    def __init__(self, lock: RoiLock, cfg: PlacementConfig | None = None):
        self.lock = lock
        self.cfg = cfg or PlacementConfig()
        self.state = seed(lock, lock.locked_at, self.cfg.offset_bottom_edge)
        self._lost_since: int | None = None

    @property
    def done(self) -> bool:
        return self.state.phase is Phase.DROPPED

    def step(self, f_prev: Frame, f_curr: Frame) -> DropEvent | None:
        if self.state.phase is Phase.DROPPED:
            return None
        if self.state.phase is Phase.LOST:
            if self._lost_since is None:
                self._lost_since = f_prev.index
            if f_curr.index - self._lost_since < self.cfg.reseed_cooldown:
                return None
            self.state = seed(self.lock, f_curr.index, self.cfg.offset_bottom_edge)
            self._lost_since = None
            return None
        if f_prev.index - self.state.seeded_at >= self.cfg.reseed_period:
            self.state = seed(self.lock, f_prev.index, self.cfg.offset_bottom_edge)
        event = advance(self.state, f_prev, f_curr, self.lock, self.cfg)
        if self.state.phase is Phase.LOST and self._lost_since is None:
            self._lost_since = f_curr.index
        return event


def run_placement(streams: Mapping[Side, Iterable[Frame]],
                  locks: Mapping[Side, RoiLock],
                  cfg: PlacementConfig | None = None) -> list[DropEvent]:
    """Run independent trackers over per-side frame sequences.

    Frames before a side's lock are skipped; events are returned ordered by
    frame (side breaks ties).  At most one event per side per episode.
    """
    cfg = cfg or PlacementConfig()
    events: list[DropEvent] = []
    for side, lock in locks.items():
        tracker = SideTracker(lock, cfg)
        prev: Frame | None = None
        for frame in streams[side]:
            if frame.index < lock.locked_at:
                continue
            if prev is not None:
                event = tracker.step(prev, frame)
                if event is not None:
                    events.append(event)
                    break
            prev = frame
    events.sort(key=lambda e: (e.frame, e.side.value))
    return events
