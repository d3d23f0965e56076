"""Primary pipeline driven end to end through the reference adapter.

These tests exercise the real wire protocol against the TypeScript adapter
package and are skipped when it has not been built (`npm run build` under
adapter/); the rest of the suite never depends on it.
"""

import json
import shutil
from pathlib import Path

import pytest

from pourwatch.detect import Side
from pourwatch.pipeline import config_from_dict, run_pipeline
from pourwatch.sim import truth

from test_pipeline import scene, write_scene_files

ADAPTER_MAIN = Path(__file__).parent.parent / "adapter" / "dist" / "src" / "main.js"

pytestmark = pytest.mark.skipif(
    shutil.which("node") is None or not ADAPTER_MAIN.exists(),
    reason="reference adapter not built (run `npm run build` in adapter/)")


def adapter_cmd(*args):
    return ["node", str(ADAPTER_MAIN), *args]


def wire_boxes(spec):
    tr = truth(spec)
    out = []
    for side in (Side.LEFT, Side.RIGHT):
        b = tr.boxes[side]
        out.append({"cls": "chute", "cx": b.cx, "cy": b.cy, "w": b.w, "h": b.h,
                    "theta_deg": b.theta_deg, "conf": 0.97})
        u = tr.upright_boxes[side]
        out.append({"cls": "urchute", "cx": u.cx, "cy": u.cy, "w": u.w, "h": u.h,
                    "theta_deg": 0.0, "conf": 0.97})
    return out


def test_pipeline_over_wire_protocol(tmp_path):
    spec = scene(seed=43)
    scene_path, _truth_path = write_scene_files(spec, tmp_path)
    cfg = config_from_dict({
        "input": {"path": str(scene_path), "format": "scene"},
        "detector": {"adapter": adapter_cmd("--boxes", json.dumps(wire_boxes(spec)))},
        "classifier": {"adapter": adapter_cmd("--classify", "fixed:2")},
        "slump": {"ordered_bin": "180-210"},
    })
    result = run_pipeline(cfg)
    assert result.exit_code == 0
    assert result.verdicts[Side.LEFT].status == "acceptable"
    assert result.verdicts[Side.LEFT].votes == (0, 0, 5, 0, 0)


def test_abnormal_verdict_over_wire(tmp_path):
    spec = scene(seed=43)
    scene_path, _ = write_scene_files(spec, tmp_path)
    cfg = config_from_dict({
        "input": {"path": str(scene_path), "format": "scene"},
        "detector": {"adapter": adapter_cmd("--boxes", json.dumps(wire_boxes(spec)))},
        "classifier": {"adapter": adapter_cmd("--classify", "fixed:4")},
        "slump": {"ordered_bin": "180-210"},
    })
    result = run_pipeline(cfg)
    assert result.exit_code == 3
    assert result.verdicts[Side.LEFT].predicted.label == "over240"
