"""Pipeline orchestration: configuration, the frame loop, and exit status.

The run proceeds in three stages: (1) detect chutes and lock per-side
regions of interest, (2) track each locked chute's
center with sparse flow until it crosses the bottom edge (the drop), and
(3) classify clips from the drop time, majority-vote the slump bin and
compare it against the ordered range.  Everything is single-threaded and
deterministic: identical inputs and configuration produce identical event
logs up to wall-clock timestamps.
"""

from __future__ import annotations

import json
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Iterator

from . import frameio, sim
from .adapter import AdapterClassifier, AdapterDetector, AdapterProcess
from .detect import (
    DetectorHandle,
    FileDetector,
    OracleDetector,
    RoiStabilizer,
    Side,
    crop_chute,
)
from .events import EventLogWriter
from .optflow import FlowConfig, Frame
from .placement import PlacementConfig, SideTracker
from .slump import (
    InsufficientFramesError,
    SlumpBin,
    SlumpConfig,
    SlumpOrder,
    StubClassifier,
    Verdict,
    classify_at_drop,
    verdict as make_verdict,
)


class ConfigError(ValueError):
    """Invalid pipeline configuration."""


class InputError(ValueError):
    """Unreadable or inconsistent frame input."""


@dataclass(frozen=True)
class InputConfig:
    path: str
    format: str = frameio.FORMAT_SLGF      # "y4m-mono" | "raw-luma" | "scene"
    stereo_split: bool = False


@dataclass(frozen=True)
class DetectorConfig:
    oracle: str | None = None          # scene-spec or truth JSON path
    file: str | None = None            # precomputed detections JSONL
    adapter: tuple[str, ...] | None = None

    def __post_init__(self):
        if sum(x is not None for x in (self.oracle, self.file, self.adapter)) != 1:
            raise ConfigError("exactly one detector source (oracle | file | adapter) required")


@dataclass(frozen=True)
class ClassifierConfig:
    stub: dict | None = None           # {"bin": label} or {"probs": [5 floats]}
    adapter: tuple[str, ...] | None = None

    def __post_init__(self):
        if sum(x is not None for x in (self.stub, self.adapter)) != 1:
            raise ConfigError("exactly one classifier source (stub | adapter) required")


@dataclass(frozen=True)
class RoiConfig:
    tau_same: float = 0.9
    lock_after: int = 8
    min_confidence: float = 0.25


@dataclass(frozen=True)
class PipelineConfig:
    input: InputConfig
    detector: DetectorConfig
    classifier: ClassifierConfig
    ordered_bin: SlumpBin
    flow: FlowConfig = field(default_factory=FlowConfig)
    roi: RoiConfig = field(default_factory=RoiConfig)
    placement: PlacementConfig = field(default_factory=PlacementConfig)
    slump: SlumpConfig = field(default_factory=SlumpConfig)
    output_log: str | None = None
    monitor: tuple[Side, ...] = (Side.LEFT, Side.RIGHT)


def config_from_dict(d: dict) -> PipelineConfig:
    """Build and validate a PipelineConfig from a parsed JSON document."""
    try:
        inp = d["input"]
        input_cfg = InputConfig(path=inp["path"],
                                format=inp.get("format", frameio.FORMAT_SLGF),
                                stereo_split=bool(inp.get("stereo_split", False)))
        if input_cfg.format not in (frameio.FORMAT_Y4M, frameio.FORMAT_SLGF, "scene"):
            raise ConfigError(f"unknown input format {input_cfg.format!r}")

        det = d["detector"]
        det_cfg = DetectorConfig(oracle=det.get("oracle"), file=det.get("file"),
                                 adapter=tuple(det["adapter"]) if det.get("adapter") else None)
        cls = d["classifier"]
        cls_cfg = ClassifierConfig(stub=cls.get("stub"),
                                   adapter=tuple(cls["adapter"]) if cls.get("adapter") else None)

        flow_d = d.get("flow", {})
        flow = FlowConfig(half_window=int(flow_d.get("half_window", 10)),
                          use_pyramid=bool(flow_d.get("pyramid", False)))
        if not 1 <= flow.half_window <= 100:
            raise ConfigError("flow.half_window out of range [1, 100]")

        roi_d = d.get("roi", {})
        roi = RoiConfig(tau_same=float(roi_d.get("tau_same", 0.9)),
                        lock_after=int(roi_d.get("lock_after", 8)),
                        min_confidence=float(roi_d.get("min_confidence", 0.25)))
        if not 0 < roi.tau_same <= 1:
            raise ConfigError("roi.tau_same must be in (0, 1]")

        pl_d = d.get("placement", {})
        placement = PlacementConfig(
            offset_bottom_edge=bool(pl_d.get("offset_bottom_edge", True)),
            min_motion=float(pl_d.get("min_motion", 0.2)),
            reseed_cooldown=int(pl_d.get("reseed_cooldown", 5)),
            reseed_period=int(pl_d.get("reseed_period", 150)),
            flow=flow)

        sl_d = d.get("slump", {})
        slump_cfg = SlumpConfig(n=int(sl_d.get("n", 16)), stride=int(sl_d.get("stride", 2)),
                                votes=int(sl_d.get("votes", 5)), hop=int(sl_d.get("hop", 8)))
        if min(slump_cfg.n, slump_cfg.stride, slump_cfg.votes, slump_cfg.hop) < 1:
            raise ConfigError("slump parameters must be positive")

        ordered = SlumpBin.from_label(sl_d.get("ordered_bin", d.get("ordered_bin", "180-210")))

        monitor = tuple(Side(s) for s in d.get("monitor", ["left", "right"]))
        if not monitor:
            raise ConfigError("monitor must name at least one side")

        return PipelineConfig(input=input_cfg, detector=det_cfg, classifier=cls_cfg,
                              ordered_bin=ordered, flow=flow, roi=roi, placement=placement,
                              slump=slump_cfg, output_log=d.get("output", {}).get("log"),
                              monitor=monitor)
    except ConfigError:
        raise
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"bad pipeline config: {exc}") from exc


def load_config(path, overrides: Iterable[str] = ()) -> PipelineConfig:
    """Read a JSON config file, apply dotted key=value overrides, validate."""
    try:
        with open(path, "r", encoding="utf-8") as fh:
            doc = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config {path} is not valid JSON: {exc}") from exc
    for item in overrides:
        if "=" not in item:
            raise ConfigError(f"override {item!r} is not key.path=value")
        key, _, raw = item.partition("=")
        try:
            value = json.loads(raw)
        except json.JSONDecodeError:
            value = raw
        node = doc
        parts = key.split(".")
        for part in parts[:-1]:
            node = node.setdefault(part, {})
            if not isinstance(node, dict):
                raise ConfigError(f"override {key!r} descends through a non-object")
        node[parts[-1]] = value
    return config_from_dict(doc)


# --- sources and handles ------------------------------------------------------


def open_frame_source(cfg: InputConfig) -> Iterator[Frame]:
    if cfg.format == "scene":
        try:
            with open(cfg.path, "r", encoding="utf-8") as fh:
                spec = sim.SceneSpec.from_json_dict(json.load(fh))
        except OSError as exc:
            raise InputError(f"cannot read scene {cfg.path}: {exc}") from exc
        except (json.JSONDecodeError, KeyError, ValueError) as exc:
            raise InputError(f"bad scene spec {cfg.path}: {exc}") from exc
        return sim.frames(spec)
    if not Path(cfg.path).exists():
        raise InputError(f"input file not found: {cfg.path}")
    return frameio.read_frames(cfg.path, cfg.format)


def _load_truth_boxes(path) -> tuple[dict, int, int]:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            doc = json.load(fh)
    except OSError as exc:
        raise InputError(f"cannot read oracle source {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise InputError(f"oracle source {path} is not valid JSON: {exc}") from exc
    try:
        if "left_box" in doc:
            truth = sim.truth(sim.SceneSpec.from_json_dict(doc))
        else:
            truth = sim.SceneTruth.from_json_dict(doc)
    except (KeyError, TypeError, ValueError) as exc:
        raise InputError(f"oracle source {path} is neither a scene spec nor a truth file: {exc}") from exc
    return truth.boxes, truth.frame_w, truth.frame_h


class _TimedHandle:
    """Wraps an adapter-backed handle, accumulating wait time to subtract."""

    def __init__(self, inner, clock=time.perf_counter):
        self.inner = inner
        self.clock = clock
        self.elapsed = 0.0

    def _call(self, fn, *args):
        t0 = self.clock()
        try:
            return fn(*args)
        finally:
            self.elapsed += self.clock() - t0

    def detect(self, frame):
        return self._call(self.inner.detect, frame)

    def classify(self, clip):
        return self._call(self.inner.classify, clip)


@dataclass
class RunResult:
    exit_code: int
    events: list
    verdicts: dict
    frame_ms: list
    locks: dict
    drops: dict

    @property
    def median_frame_ms(self) -> float:
        if not self.frame_ms:
            return 0.0
        s = sorted(self.frame_ms)
        mid = len(s) // 2
        return s[mid] if len(s) % 2 else (s[mid - 1] + s[mid]) / 2.0


def build_detector(cfg: PipelineConfig) -> tuple[DetectorHandle, AdapterProcess | None]:
    if cfg.detector.oracle is not None:
        boxes, fw, fh = _load_truth_boxes(cfg.detector.oracle)
        return OracleDetector(boxes, fw, fh), None
    if cfg.detector.file is not None:
        try:
            return FileDetector(cfg.detector.file), None
        except OSError as exc:
            raise InputError(f"cannot read detections file: {exc}") from exc
    proc = AdapterProcess(list(cfg.detector.adapter))
    proc.start()
    return AdapterDetector(proc), proc


def build_classifier(cfg: PipelineConfig) -> tuple[object, AdapterProcess | None]:
    if cfg.classifier.stub is not None:
        stub = cfg.classifier.stub
        if "bin" in stub:
            return StubClassifier.for_bin(SlumpBin.from_label(stub["bin"])), None
        if "probs" in stub:
            return StubClassifier(stub["probs"]), None
        raise ConfigError("classifier.stub needs 'bin' or 'probs'")
    proc = AdapterProcess(list(cfg.classifier.adapter))
    proc.start()
    return AdapterClassifier(proc), proc


def run_pipeline(cfg: PipelineConfig, frames: Iterable[Frame] | None = None,
                 detector: DetectorHandle | None = None,
                 classifier=None,
                 sink=None) -> RunResult:
    """Execute the three-stage pipeline over a frame stream.

    ``frames``, ``detector``, ``classifier`` and ``sink`` default from the
    configuration but can be passed directly for in-process runs.  Exit code
    0 means every resolved side was acceptable; 3 at least one abnormal
    verdict; 4 a monitored side never locked, a drop was never classified,
    or nothing resolved at all.
    """
    own_procs: list[AdapterProcess] = []
    own_sink = None
    try:
        if frames is None:
            frames = open_frame_source(cfg.input)
        if detector is None:
            detector, proc = build_detector(cfg)
            if proc is not None:
                own_procs.append(proc)
        if classifier is None:
            classifier, proc = build_classifier(cfg)
            if proc is not None:
                own_procs.append(proc)
        if sink is None and cfg.output_log:
            own_sink = open(cfg.output_log, "w", encoding="utf-8")
            sink = own_sink

        timed_detector = _TimedHandle(detector)
        timed_classifier = _TimedHandle(classifier)
        log = EventLogWriter(sink)
        order = SlumpOrder(cfg.ordered_bin)

        stab: RoiStabilizer | None = None
        trackers: dict[Side, SideTracker] = {}
        crops: dict[Side, list[Frame]] = {}
        drop_frames: dict[Side, int] = {}
        verdicts: dict[Side, Verdict] = {}
        frame_ms: list[float] = []
        prev: Frame | None = None
        clip_tail = (cfg.slump.votes - 1) * cfg.slump.hop + (cfg.slump.n - 1) * cfg.slump.stride

        for frame in frames:
            t0 = time.perf_counter()
            timed_detector.elapsed = 0.0
            timed_classifier.elapsed = 0.0
            if cfg.input.stereo_split:
                frame, _right_view = frameio.stereo_split(frame)
            if stab is None:
                stab = RoiStabilizer(frame.width, frame.height,
                                     tau_same=cfg.roi.tau_same,
                                     lock_after=cfg.roi.lock_after,
                                     min_confidence=cfg.roi.min_confidence)

            # Stage 1: detection and RoI locking until every monitored side locks.
            if any(side not in stab.locks for side in cfg.monitor):
                dets = timed_detector.detect(frame)
                log.emit("detections", frame.index, items=[
                    {"cls": d.cls.value, "cx": d.box.cx, "cy": d.box.cy, "w": d.box.w,
                     "h": d.box.h, "theta_deg": d.box.theta_deg, "conf": d.confidence}
                    for d in dets])
                for side, lock in stab.step(frame.index, dets).items():
                    if side not in cfg.monitor:
                        continue
                    log.emit("roi_locked", frame.index, side=side.value,
                             box={"cx": lock.box.cx, "cy": lock.box.cy, "w": lock.box.w,
                                  "h": lock.box.h, "theta_deg": lock.box.theta_deg},
                             crop=[lock.crop.x0, lock.crop.y0, lock.crop.x1, lock.crop.y1],
                             contributing=lock.contributing)
                    trackers[side] = SideTracker(lock, cfg.placement)

            # Stage 2: flow tracking toward the bottom-edge crossing.
            if prev is not None:
                for side in cfg.monitor:
                    tracker = trackers.get(side)
                    if tracker is None or tracker.done:
                        continue
                    event = tracker.step(prev, frame)
                    diag = tracker.state.flow_diag
                    log.emit("flow_sample", frame.index, side=side.value,
                             u=(diag.flow.u if diag and diag.ok else 0.0),
                             v=(diag.flow.v if diag and diag.ok else 0.0),
                             point=[tracker.state.point.x, tracker.state.point.y],
                             d=tracker.state.d_prev,
                             status=tracker.state.phase.value)
                    if event is not None:
                        log.emit("drop", event.frame, side=side.value, d_t=event.d_t,
                                 d_prev=event.d_prev, point=[event.point.x, event.point.y])
                        drop_frames[side] = event.frame
                        crops[side] = []

            # Stage 3: collect cropped frames after a drop, then classify.
            for side, buffer in list(crops.items()):
                if side in verdicts:
                    continue
                buffer.append(crop_chute(frame, trackers[side].lock))
                if frame.index >= drop_frames[side] + clip_tail:
                    t_drop = drop_frames[side]
                    try:
                        predicted, votes, dists = classify_at_drop(
                            timed_classifier, buffer, t_drop, cfg.slump, side=side.value)
                    except InsufficientFramesError:
                        continue
                    for k, dist in enumerate(dists):
                        log.emit("prediction", frame.index, side=side.value,
                                 clip_start=t_drop + k * cfg.slump.hop,
                                 probs=list(dist.p))
                    v = make_verdict(predicted, order, t_drop, votes)
                    verdicts[side] = v
                    log.emit("verdict", frame.index, side=side.value, status=v.status,
                             predicted=v.predicted.label, ordered=order.ordered_bin.label,
                             votes=list(v.votes), t_drop=t_drop)
                    crops[side] = []

            adapter_wait = timed_detector.elapsed + timed_classifier.elapsed
            frame_ms.append((time.perf_counter() - t0 - adapter_wait) * 1000.0)
            prev = frame

        locked = dict(stab.locks) if stab is not None else {}
        exit_code = 0
        if any(side not in locked for side in cfg.monitor):
            exit_code = 4
        elif not verdicts:
            exit_code = 4
        elif any(side not in verdicts for side in drop_frames):
            exit_code = 4
        elif any(v.status == "abnormal" for v in verdicts.values()):
            exit_code = 3
        return RunResult(exit_code=exit_code, events=log.events, verdicts=verdicts,
                         frame_ms=frame_ms, locks=locked, drops=dict(drop_frames))
    finally:
        for proc in own_procs:
            proc.close()
        if own_sink is not None:
            own_sink.close()
