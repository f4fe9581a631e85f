"""Benchmark command line: run suites, generate scenes, render reports."""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .bench import ABLATION_VARIANTS, render_report, run_suite, write_suite_outputs
from .config import ConfigError, PipelineConfig, load_config
from .scene import generate_scene, save_scene


def _build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="pmsgp", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run grasping trials and write reports")
    run.add_argument("--config", help="JSON config file (defaults apply if omitted)")
    run.add_argument("--objects", type=int, default=20, help="objects per scene")
    run.add_argument("--trials", type=int, default=5, help="trial count when --seeds is omitted")
    run.add_argument("--seeds", help="comma-separated trial seeds, e.g. 1,2,3")
    run.add_argument("--no-tva", action="store_true", help="disable top view alignment")
    run.add_argument("--no-cps", action="store_true", help="disable cross-prompted segmentation")
    run.add_argument("--no-msp", action="store_true", help="bypass the sampling funnel")
    run.add_argument("--ablation", action="store_true",
                     help="run full/no_tva/no_cps/no_msp side by side on identical seeds")
    run.add_argument("--workers", type=int, default=None, help="trial process pool size")
    run.add_argument("--out", required=True, help="output directory")

    gen = sub.add_parser("gen-scenes", help="generate scene files")
    gen.add_argument("--seed", type=int, required=True, help="first scene seed")
    gen.add_argument("--count", type=int, required=True, help="number of scenes")
    gen.add_argument("--objects", type=int, required=True, help="objects per scene")
    gen.add_argument("--config", help="JSON config file for workspace/dims")
    gen.add_argument("--out", required=True, help="output directory")

    rep = sub.add_parser("report", help="print a suite or trial report")
    rep.add_argument("file", help="suite.json or trial_<seed>.json")
    rep.add_argument("--figures-dir", help="re-render suite figures into this directory")
    return p


def _load(args) -> PipelineConfig:
    cfg = load_config(args.config) if args.config else PipelineConfig()
    return cfg


def _cmd_run(args) -> int:
    cfg = _load(args)
    if args.no_tva or args.no_cps or args.no_msp:
        cfg = cfg.with_ablation(no_tva=args.no_tva, no_cps=args.no_cps, no_msp=args.no_msp)
    if args.seeds:
        seeds = [int(s) for s in args.seeds.split(",") if s.strip()]
        if args.trials and args.trials != len(seeds):
            print(f"note: --seeds lists {len(seeds)} seeds; ignoring --trials", file=sys.stderr)
    else:
        seeds = [cfg.seed + i + 1 for i in range(args.trials)]
    variants = list(ABLATION_VARIANTS) if args.ablation else None
    suite = run_suite(cfg, seeds, args.objects, variants=variants, workers=args.workers)
    write_suite_outputs(suite, args.out)
    print(render_report({k: v for k, v in suite.items() if not k.startswith("_")}))
    print(f"wrote {args.out}/suite.csv, suite.json, trial reports, figures "
          f"({suite['_timing']['total_s']:.1f}s)", file=sys.stderr)
    return 0


def _cmd_gen_scenes(args) -> int:
    cfg = _load(args)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    for i in range(args.count):
        seed = args.seed + i
        scene = generate_scene(
            seed, args.objects, cfg.scene_mix,
            workspace=cfg.workspace, ground_height=cfg.ground_height,
            dims_cfg=cfg.scene_dims,
        )
        save_scene(out / f"scene_{seed}.json", scene)
    print(f"wrote {args.count} scenes to {out}")
    return 0


def _cmd_report(args) -> int:
    try:
        with open(args.file) as f:
            data = json.load(f)
    except json.JSONDecodeError as e:
        print(f"error: {args.file}: line {e.lineno} col {e.colno}: {e.msg}", file=sys.stderr)
        return 2
    print(render_report(data))
    if args.figures_dir:
        if "variants" not in data:
            print("error: --figures-dir needs a suite.json", file=sys.stderr)
            return 2
        from .figures import save_suite_figures

        for p in save_suite_figures(data, args.figures_dir):
            print(f"wrote {p}", file=sys.stderr)
    return 0


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        if args.command == "run":
            return _cmd_run(args)
        if args.command == "gen-scenes":
            return _cmd_gen_scenes(args)
        return _cmd_report(args)
    except (ConfigError, FileNotFoundError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
