#!/usr/bin/env python3
"""One synthetic delivery, end to end: lock, drop, vote, verdict.

Renders a scene where the left chute starts pouring at frame 40, runs the
full pipeline in process with the ground-truth oracle detector and a stub
classifier, and prints the event stream milestones.
"""

import json
import tempfile
from pathlib import Path

from pourwatch import (
    PourSpec,
    RotatedBox,
    SceneSpec,
    SlumpBin,
    TextureSpec,
    config_from_dict,
    run_pipeline,
    truth,
)

spec = SceneSpec(
    frame_w=320, frame_h=180,
    left_box=RotatedBox(84, 86, 92, 40, 8),
    right_box=RotatedBox(236, 86, 92, 40, 172),
    duration=150,
    left_pour=PourSpec(start_frame=40, flow_speed=2.25, slump_bin=SlumpBin.S180_210),
    texture=TextureSpec(seed=7),
    nominal_bin=SlumpBin.S180_210,
)

with tempfile.TemporaryDirectory() as tmp:
    scene_path = Path(tmp) / "scene.json"
    truth_path = Path(tmp) / "truth.json"
    scene_path.write_text(json.dumps(spec.to_json_dict()))
    truth_path.write_text(json.dumps(truth(spec).to_json_dict()))

    cfg = config_from_dict({
        "input": {"path": str(scene_path), "format": "scene"},
        "detector": {"oracle": str(truth_path)},
        "classifier": {"stub": {"bin": "180-210"}},
        "slump": {"ordered_bin": "180-210"},
    })
    result = run_pipeline(cfg)

print(f"scene: left chute pours from frame 40 at 2.25 px/frame; {spec.duration} frames\n")
for e in result.events:
    if e["type"] == "roi_locked":
        b = e["box"]
        print(f"frame {e['frame']:3d}  RoI locked   side={e['side']:5s} "
              f"box=({b['cx']:.1f}, {b['cy']:.1f}, {b['w']:.1f}, {b['h']:.1f}, {b['theta_deg']:.1f} deg)")
    elif e["type"] == "drop":
        print(f"frame {e['frame']:3d}  DROP         side={e['side']:5s} "
              f"d: {e['d_prev']:+.2f} -> {e['d_t']:+.2f}")
    elif e["type"] == "prediction":
        print(f"frame {e['frame']:3d}  prediction   side={e['side']:5s} "
              f"clip@{e['clip_start']} probs={e['probs']}")
    elif e["type"] == "verdict":
        print(f"frame {e['frame']:3d}  VERDICT      side={e['side']:5s} "
              f"{e['status'].upper()}: predicted {e['predicted']}, ordered {e['ordered']}, "
              f"votes {e['votes']}")

print(f"\nexit code: {result.exit_code} (0 = all verdicts acceptable)")
print(f"median per-frame overhead: {result.median_frame_ms:.2f} ms "
      f"over {len(result.frame_ms)} frames")
