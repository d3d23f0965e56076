"""Scoring recorded event logs against simulator ground truth.

A prediction/truth pair is one scene: the JSONL event log the pipeline wrote
and the truth JSON the simulator wrote.  Detection events are scored with
rotated mAP and precision, drop events with the placement-location grid, and
verdicts with accuracy / macro F1.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

from .detect import Side
from .events import read_event_log
from .geometry import RotatedBox
from .metrics import (
    EvalReport,
    LocationGrid,
    SceneOutcome,
    ScoredDetection,
    accuracy_f1,
    location_grid,
    map_50_95,
    precision as precision_metric,
)
from .sim import SceneTruth
from .slump import SlumpBin

_SIDES = {"left": Side.LEFT, "right": Side.RIGHT}


class EvalInputError(ValueError):
    """Prediction/truth pairing failed."""


@dataclass
class SceneScore:
    outcome: SceneOutcome | None
    preds: dict             # cls -> list[ScoredDetection] (frame keys unique per scene)
    gts: dict               # cls -> dict frame_key -> [RotatedBox]
    predicted_bin: SlumpBin | None
    true_bin: SlumpBin | None
    drop_frame: int | None
    true_start: int | None


def pair_inputs(pred_path: str, truth_path: str) -> list[tuple[Path, Path]]:
    """Pair prediction logs with truth files.

    File + file is a single pair; directory + directory matches
    ``<stem>.events.jsonl`` with ``<stem>.truth.json``.
    """
    pred, tr = Path(pred_path), Path(truth_path)
    if pred.is_file() and tr.is_file():
        return [(pred, tr)]
    if pred.is_dir() and tr.is_dir():
        pairs = []
        for log in sorted(pred.glob("*.events.jsonl")):
            stem = log.name[:-len(".events.jsonl")]
            truth_file = tr / f"{stem}.truth.json"
            if not truth_file.exists():
                raise EvalInputError(f"no truth file for {log.name}: expected {truth_file}")
            pairs.append((log, truth_file))
        if not pairs:
            raise EvalInputError(f"no *.events.jsonl files under {pred}")
        return pairs
    raise EvalInputError("pred and truth must both be files or both be directories")


def score_scene(events: list[dict], truth: SceneTruth, scene_key: object = 0) -> SceneScore:
    preds: dict[str, list] = {"chute": [], "urchute": []}
    gts: dict[str, dict] = {"chute": {}, "urchute": {}}
    drop_side: Side | None = None
    drop_frame: int | None = None
    predicted_bin: SlumpBin | None = None

    for e in events:
        if e["type"] == "detections":
            key = (scene_key, e["frame"])
            for cls in ("chute", "urchute"):
                gts[cls][key] = []
            for side in (Side.LEFT, Side.RIGHT):
                gts["chute"][key].append(truth.boxes[side])
                gts["urchute"][key].append(truth.upright_boxes[side])
            for item in e["items"]:
                box = RotatedBox(item["cx"], item["cy"], item["w"], item["h"], item["theta_deg"])
                preds[item["cls"]].append(ScoredDetection(key, box, item["conf"]))
        elif e["type"] == "drop" and drop_side is None:
            drop_side = _SIDES[e["side"]]
            drop_frame = e["frame"]
        elif e["type"] == "verdict" and predicted_bin is None:
            predicted_bin = SlumpBin.from_label(e["predicted"])

    pouring = truth.pouring_sides
    outcome = None
    if len(pouring) <= 1 and truth.nominal_bin is not None:
        outcome = SceneOutcome(true_side=pouring[0] if pouring else None,
                               detected_side=drop_side, bin=truth.nominal_bin)
    true_bin = truth.slump_bins[pouring[0]] if len(pouring) == 1 else None
    true_start = truth.pour_starts[pouring[0]] if len(pouring) == 1 else None
    return SceneScore(outcome=outcome, preds=preds, gts=gts,
                      predicted_bin=predicted_bin, true_bin=true_bin,
                      drop_frame=drop_frame, true_start=true_start)


def evaluate(pairs: list[tuple[Path, Path]]) -> tuple[EvalReport, LocationGrid]:
    """Aggregate scene scores into one report plus the location grid."""
    all_preds: dict[str, list] = {"chute": [], "urchute": []}
    all_gts: dict[str, dict] = {"chute": {}, "urchute": {}}
    outcomes: list[SceneOutcome] = []
    bin_pairs: list[tuple[SlumpBin, SlumpBin]] = []

    for idx, (log_path, truth_path) in enumerate(pairs):
        events = read_event_log(log_path)
        with open(truth_path, "r", encoding="utf-8") as fh:
            truth = SceneTruth.from_json_dict(json.load(fh))
        score = score_scene(events, truth, scene_key=idx)
        for cls in ("chute", "urchute"):
            all_preds[cls].extend(score.preds[cls])
            all_gts[cls].update(score.gts[cls])
        if score.outcome is not None:
            outcomes.append(score.outcome)
        if score.predicted_bin is not None and score.true_bin is not None:
            bin_pairs.append((score.predicted_bin, score.true_bin))

    report = EvalReport()
    classes = [c for c in ("chute", "urchute") if any(len(v) for v in all_gts[c].values())]
    if classes:
        maps, tps, totals = [], 0, 0
        for c in classes:
            maps.append(map_50_95(all_preds[c], all_gts[c]))
            try:
                p = precision_metric(all_preds[c], all_gts[c], 0.5)
                kept = [x for x in all_preds[c] if x.confidence >= 0.25]
                tps += round(p * len(kept))
                totals += len(kept)
            except ValueError:
                pass
        report.map_50_95 = sum(maps) / len(maps)
        report.precision = tps / totals if totals else None
    if bin_pairs:
        acc, f1 = accuracy_f1([p for p, _ in bin_pairs], [t for _, t in bin_pairs])
        report.accuracy = acc
        report.f1_macro = f1

    grid = location_grid(outcomes)
    if outcomes:
        report.location_table = grid.as_table()
    return report, grid
