"""Command-line interface: ``run``, ``simulate`` and ``eval`` subcommands.

Exit codes: 0 all verdicts acceptable, 3 an abnormal verdict, 4 unresolved
(no lock or no verdict), 1 usage or configuration error, 2 input, format or
adapter error.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import frameio, sim
from .evaluate import EvalInputError, evaluate, pair_inputs
from .frameio import FormatError
from .pipeline import ConfigError, InputError, load_config, run_pipeline
from .slump import AdapterError

EXIT_USAGE = 1
EXIT_INPUT = 2


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # usage problems exit 1, not argparse's 2
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def build_parser() -> _Parser:
    parser = _Parser(prog="pourwatch",
                     description="Concrete pour monitoring: chute lock, drop timing, slump verdict.")
    sub = parser.add_subparsers(dest="command", required=True)

    run_p = sub.add_parser("run", help="run the pipeline on a frame source")
    run_p.add_argument("--config", required=True, help="pipeline config JSON")
    run_p.add_argument("--input", help="override input.path")
    run_p.add_argument("--ordered-bin", dest="ordered_bin",
                       help="override slump.ordered_bin (e.g. 180-210)")
    run_p.add_argument("--log", help="override output.log path")
    run_p.add_argument("--set", dest="overrides", action="append", default=[],
                       metavar="KEY.PATH=VALUE", help="override any config key")

    sim_p = sub.add_parser("simulate", help="render a synthetic scene plus its truth")
    sim_p.add_argument("--scenario", required=True, help="scene spec JSON")
    sim_p.add_argument("--out", required=True, help="output directory")
    sim_p.add_argument("--format", choices=["y4m", "slgf"], default="y4m")
    sim_p.add_argument("--stereo", action="store_true",
                       help="write the side-by-side composite (2x width)")

    eval_p = sub.add_parser("eval", help="score event logs against truth files")
    eval_p.add_argument("--pred", required=True, help="event log file or directory")
    eval_p.add_argument("--truth", required=True, help="truth JSON file or directory")
    eval_p.add_argument("--report", required=True, help="where to write the report JSON")
    eval_p.add_argument("--print-grid", action="store_true",
                        help="print the placement-location table")
    return parser


def _cmd_run(args) -> int:
    overrides = list(args.overrides)
    if args.input:
        overrides.append(f"input.path={args.input}")
    if args.ordered_bin:
        overrides.append(f"slump.ordered_bin={args.ordered_bin}")
    if args.log:
        overrides.append(f"output.log={args.log}")
    cfg = load_config(args.config, overrides)
    result = run_pipeline(cfg)
    for side, v in sorted(result.verdicts.items(), key=lambda kv: kv[0].value):
        print(f"{side.value}: {v.status} (predicted {v.predicted.label}, "
              f"ordered {v.order.ordered_bin.label}, drop frame {v.t_drop})")
    if not result.verdicts:
        print("no verdicts (nothing poured or nothing resolved)")
    return result.exit_code


def _cmd_simulate(args) -> int:
    try:
        with open(args.scenario, "r", encoding="utf-8") as fh:
            spec = sim.SceneSpec.from_json_dict(json.load(fh))
    except OSError as exc:
        raise InputError(f"cannot read scenario: {exc}") from exc
    except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
        raise InputError(f"bad scenario spec: {exc}") from exc
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    render = sim.render_stereo if args.stereo else sim.render
    frames = (render(spec, t) for t in range(spec.duration))
    if args.format == "y4m":
        video_path = out / "scene.y4m"
        frameio.write_y4m(video_path, frames)
    else:
        video_path = out / "scene.slgf"
        frameio.write_slgf(video_path, frames)
    with open(out / "truth.json", "w", encoding="utf-8") as fh:
        json.dump(sim.truth(spec).to_json_dict(), fh, indent=2)
    with open(out / "scene.json", "w", encoding="utf-8") as fh:
        json.dump(spec.to_json_dict(), fh, indent=2)
    print(f"wrote {video_path}, truth.json, scene.json ({spec.duration} frames)")
    return 0


def _cmd_eval(args) -> int:
    try:
        pairs = pair_inputs(args.pred, args.truth)
    except EvalInputError as exc:
        raise InputError(str(exc)) from exc
    report, grid = evaluate(pairs)
    with open(args.report, "w", encoding="utf-8") as fh:
        json.dump(report.to_json_dict(), fh, indent=2)
    print(f"scored {len(pairs)} scene(s) -> {args.report}")
    if args.print_grid:
        print(grid.render())
    return 0


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "run":
            return _cmd_run(args)
        if args.command == "simulate":
            return _cmd_simulate(args)
        return _cmd_eval(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (InputError, FormatError, ValueError) as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except AdapterError as exc:
        print(f"adapter error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
