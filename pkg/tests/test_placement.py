import math

import numpy as np
import pytest

import pourwatch.placement as placement
from pourwatch.detect import RoiLock, Side
from pourwatch.geometry import Point2, RotatedBox, UprightRect
from pourwatch.optflow import FlowResult, FlowStatus, FlowVector, Frame
from pourwatch.placement import (
    DropEvent,
    Phase,
    PlacementConfig,
    SideTracker,
    advance,
    run_placement,
    seed,
)

from test_optflow import frame_of, smooth_noise


def make_lock(cx=48, cy=38, w=40, h=20, theta=0.0, side=Side.LEFT, locked_at=0):
    return RoiLock(side=side, box=RotatedBox(cx, cy, w, h, theta),
                   crop=UprightRect(int(cx - w / 2), int(cy - h / 2),
                                    int(cx + w / 2), int(cy + h / 2)),
                   locked_at=locked_at, contributing=9)


def rolling_frames(seed_val: int, vy: int, n: int, size: int = 96) -> list[Frame]:
    tex = smooth_noise(size, seed_val)
    return [frame_of(np.roll(tex, vy * t, axis=0), t) for t in range(n)]


class TestSeed:
    def test_center_line_distance_zero(self):
        st = seed(make_lock(100, 50, 40, 20, 0), 0)
        assert (st.point.x, st.point.y) == (100, 50)
        assert st.d_prev == 0.0
        assert st.phase is Phase.ARMED

    def test_offset_flag_distance(self):
        st = seed(make_lock(100, 50, 40, 20, 0), 0, offset_bottom_edge=True)
        assert st.d_prev == pytest.approx(-10.0)

    def test_reseed_equals_fresh_seed(self):
        lock = make_lock()
        a = seed(lock, 5, offset_bottom_edge=True)
        b = seed(lock, 5, offset_bottom_edge=True)
        assert a == b


class TestAdvanceExactFlow:
    def test_event_when_cumulative_motion_reaches_seed_distance(self, monkeypatch):
        # Pure arithmetic: v = +2 px/frame from d_prev = -10 crosses when the
        # integrated motion reaches 10 px (d_t = 0 counts as crossed).
        monkeypatch.setattr(placement, "track",
                            lambda fp, fc, p, cfg: (FlowResult(FlowStatus.OK, FlowVector(0.0, 2.0), 0.0, 1.0),
                                                    Point2(p.x, p.y + 2.0)))
        lock = make_lock(100, 50, 40, 20, 0)
        cfg = PlacementConfig(offset_bottom_edge=True)
        st = seed(lock, 0, offset_bottom_edge=True)
        frames = [Frame(200, 200, np.zeros((200, 200), np.float32), t) for t in range(10)]
        event = None
        advances = 0
        while event is None:
            event = advance(st, frames[advances], frames[advances + 1], lock, cfg)
            advances += 1
        assert advances == 5
        assert event.frame == 5
        assert event.d_t == pytest.approx(0.0)
        assert event.d_prev == pytest.approx(-2.0)
        assert st.phase is Phase.DROPPED

    def test_upward_motion_never_fires(self, monkeypatch):
        monkeypatch.setattr(placement, "track",
                            lambda fp, fc, p, cfg: (FlowResult(FlowStatus.OK, FlowVector(0.0, -1.5), 0.0, 1.0),
                                                    Point2(p.x, p.y - 1.5)))
        lock = make_lock(100, 50, 40, 20, 0)
        cfg = PlacementConfig(offset_bottom_edge=True)
        st = seed(lock, 0, offset_bottom_edge=True)
        frames = [Frame(200, 200, np.zeros((200, 200), np.float32), t) for t in range(21)]
        for t in range(20):
            assert advance(st, frames[t], frames[t + 1], lock, cfg) is None
        assert st.d_prev < -10.0

    def test_minimum_motion_gate_blocks_jitter_crossing(self, monkeypatch):
        # Zero-distance seed (verbatim center-line edge) with sub-gate flow
        # must not fire.
        monkeypatch.setattr(placement, "track",
                            lambda fp, fc, p, cfg: (FlowResult(FlowStatus.OK, FlowVector(0.0, 0.05), 0.0, 1.0),
                                                    Point2(p.x, p.y + 0.05)))
        lock = make_lock(100, 50, 40, 20, 0)
        cfg = PlacementConfig(offset_bottom_edge=False, min_motion=0.2)
        st = seed(lock, 0)
        assert st.d_prev == 0.0
        frames = [Frame(200, 200, np.zeros((200, 200), np.float32), t) for t in range(4)]
        assert advance(st, frames[0], frames[1], lock, cfg) is None
        assert st.phase is Phase.ARMED


class TestAdvanceRealFlow:
    def test_downward_texture_crosses_on_schedule(self):
        frames = rolling_frames(21, 2, 12)
        lock = make_lock(48, 38, 40, 20, 0)
        cfg = PlacementConfig(offset_bottom_edge=True)
        st = seed(lock, 0, offset_bottom_edge=True)
        assert st.d_prev == pytest.approx(-10.0)
        event = None
        for t in range(11):
            event = advance(st, frames[t], frames[t + 1], lock, cfg)
            if event:
                break
        assert event is not None
        # Analytic crossing at ceil(10/2) = 5 advances; flow-estimation lag
        # may add up to the documented 2 frames.
        assert 5 <= event.frame <= 7
        assert placement.crossed(event.d_t, event.d_prev)

    def test_zero_motion_scene_never_fires(self):
        tex = smooth_noise(96, 22)
        frames = [frame_of(tex, t) for t in range(30)]
        lock = make_lock(48, 38, 40, 20, 0)
        st = seed(lock, 0)  # verbatim edge: d_prev = 0, still must not fire
        cfg = PlacementConfig(offset_bottom_edge=False)
        for t in range(29):
            assert advance(st, frames[t], frames[t + 1], lock, cfg) is None
            assert st.d_prev == 0.0
        assert st.phase is Phase.ARMED

    def test_flat_texture_goes_lost(self):
        flat = frame_of(np.full((96, 96), 0.5, np.float32))
        frames = [Frame(96, 96, flat.luma, t) for t in range(3)]
        st = seed(make_lock(), 0)
        assert advance(st, frames[0], frames[1], make_lock()) is None
        assert st.phase is Phase.LOST

    def test_static_scene_guarantee(self):
        # No event while all flow magnitudes stay below 0.05 px/frame.
        cfg = PlacementConfig(offset_bottom_edge=False)
        for k in range(1000):
            tex = smooth_noise(48, 1000 + k, contrast=0.3 + (k % 7) * 0.1)
            frames = [frame_of(tex, t) for t in range(4)]
            lock = make_lock(24, 20, 20, 12, float(k % 30))
            st = seed(lock, 0)
            for t in range(3):
                event = advance(st, frames[t], frames[t + 1], lock, cfg)
                assert event is None
                if st.phase is not Phase.ARMED:
                    break
                assert st.flow_diag.flow.magnitude < 0.05


class TestSideTrackerAndRun:
    def test_reseed_after_cooldown(self):
        flat = np.full((96, 96), 0.5, np.float32)
        frames = [Frame(96, 96, flat, t) for t in range(20)]
        tracker = SideTracker(make_lock(), PlacementConfig())
        assert tracker.step(frames[0], frames[1]) is None
        assert tracker.state.phase is Phase.LOST
        reseeded_at = None
        for t in range(1, 19):
            tracker.step(frames[t], frames[t + 1])
            if tracker.state.phase is Phase.ARMED:
                reseeded_at = t + 1
                break
        assert reseeded_at is not None
        assert reseeded_at >= 1 + tracker.cfg.reseed_cooldown

    def test_periodic_reseed_bounds_drift(self):
        frames = rolling_frames(23, 1, 30)
        cfg = PlacementConfig(offset_bottom_edge=True, reseed_period=10, min_motion=10.0)
        # min_motion sentinel keeps crossings from firing so the reseed shows.
        tracker = SideTracker(make_lock(48, 38, 40, 20, 0), cfg)
        for t in range(29):
            tracker.step(frames[t], frames[t + 1])
        assert tracker.state.seeded_at >= 20

    def test_run_placement_orders_events(self):
        frames = rolling_frames(25, 2, 14)
        locks = {
            Side.LEFT: make_lock(30, 38, 40, 20, 0, side=Side.LEFT),
            Side.RIGHT: make_lock(66, 38, 40, 20, 0, side=Side.RIGHT),
        }
        events = run_placement({Side.LEFT: frames, Side.RIGHT: frames}, locks,
                               PlacementConfig(offset_bottom_edge=True))
        assert len(events) == 2
        assert {e.side for e in events} == {Side.LEFT, Side.RIGHT}
        assert events == sorted(events, key=lambda e: (e.frame, e.side.value))

    def test_run_placement_static_no_events(self):
        tex = smooth_noise(96, 26)
        frames = [frame_of(tex, t) for t in range(20)]
        locks = {Side.LEFT: make_lock()}
        assert run_placement({Side.LEFT: frames}, locks) == []

    def test_determinism(self):
        frames = rolling_frames(27, 2, 12)
        locks = {Side.LEFT: make_lock()}
        cfg = PlacementConfig(offset_bottom_edge=True)
        a = run_placement({Side.LEFT: frames}, locks, cfg)
        b = run_placement({Side.LEFT: frames}, locks, cfg)
        assert a == b
