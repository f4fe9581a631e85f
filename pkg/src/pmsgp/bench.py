"""Trial and suite orchestration for the grasping policy.

A trial runs the full perception-to-execution loop on one simulated
scene until it is empty: isolate the topmost object, sample and refine
a grasp inside its mask, convert to the robot frame, execute.  A failed
attempt charges the targeted object; an object that reaches the failure
cap is removed by "manual assist" with its attempts kept on the books
as failures, so trials always terminate.

Reports are JSON-native dicts with a fixed layout; identical configs
and seeds reproduce byte-identical CSV/JSON outputs (wall-clock timing
goes to a separate sidecar file for that reason).
"""

from __future__ import annotations

import csv
import json
import math
import time
from dataclasses import dataclass
from multiprocessing import get_context
from pathlib import Path

import numpy as np

from .config import PipelineConfig
from .grasp import GraspBox, RobotGrasp, camera_to_robot, pixel_to_camera, project_grasp_params
from .msp import CandidateGenerator, MspResult, NoGraspError, make_generator, run_msp
from .psp import (
    NoValidDepthError,
    PspResult,
    SegmentationFailureError,
    make_segmenter,
    run_psp,
)
from .scene import Scene, _resettle, execute_grasp, generate_scene, scene_hash

__all__ = [
    "TrialReport",
    "run_trial",
    "run_suite",
    "render_report",
    "report_to_dict",
    "report_from_dict",
    "write_suite_outputs",
    "ABLATION_VARIANTS",
]

ABLATION_VARIANTS = ("full", "no_tva", "no_cps", "no_msp")


class ReportFormatError(ValueError):
    pass


@dataclass
class TrialReport:
    """Outcome of one trial: ordered attempt records plus totals."""

    scene_seed: int
    n_objects: int
    attempts: list
    successes: int
    failures: int
    capped_objects: list
    initial_scene_hash: str

    @property
    def total_attempts(self) -> int:
        return len(self.attempts)

    @property
    def gsr(self) -> float | None:
        if not self.attempts:
            return None
        return self.successes / len(self.attempts)


def report_to_dict(rep: TrialReport) -> dict:
    """JSON layout of a trial; wall-clock timings are deliberately
    excluded so identical runs serialize byte-identically."""
    attempts = [{k: v for k, v in a.items() if k != "wall_ms"} for a in rep.attempts]
    return {
        "scene_seed": rep.scene_seed,
        "n_objects": rep.n_objects,
        "attempts": attempts,
        "successes": rep.successes,
        "failures": rep.failures,
        "capped_objects": rep.capped_objects,
        "initial_scene_hash": rep.initial_scene_hash,
        "gsr": rep.gsr,
    }


def report_from_dict(d: dict) -> TrialReport:
    try:
        rep = TrialReport(
            scene_seed=d["scene_seed"],
            n_objects=d["n_objects"],
            attempts=list(d["attempts"]),
            successes=d["successes"],
            failures=d["failures"],
            capped_objects=list(d["capped_objects"]),
            initial_scene_hash=d["initial_scene_hash"],
        )
    except KeyError as e:
        raise ReportFormatError(f"report is missing field {e.args[0]!r}") from e
    if rep.successes + rep.failures != len(rep.attempts):
        raise ReportFormatError("attempts must equal successes + failures")
    return rep


# ---------------------------------------------------------------------------
# Single trial
# ---------------------------------------------------------------------------

def _analytic_topmost(scene: Scene) -> int:
    return max(scene.objects, key=lambda o: (o.top_z, -o.id)).id


def _grasp_center_depth(g: GraspBox, fallback: GraspBox, depth) -> float | None:
    for box in (g, fallback):
        r, c = int(np.rint(box.y)), int(np.rint(box.x))
        if 0 <= r < depth.height and 0 <= c < depth.width:
            d = float(depth.values[r, c])
            if d > 0:
                return d
    return None


def _to_robot_grasp(g: GraspBox, d: float, psp: PspResult, cfg: PipelineConfig) -> RobotGrasp:
    """Image grasp -> camera frame -> end-effector offset -> world pose.

    The simulated end effector carries the camera with axes aligned to
    the world's, so the calibrated offset composes with the camera's
    world position; in-plane camera rotation is honored for generality
    though trials keep it at zero.
    """
    cam = psp.aligned.camera
    k = cfg.intrinsics()
    r_off, c_off = psp.aligned.crop_origin
    u_full = g.x + c_off
    v_full = g.y + r_off
    p_c = pixel_to_camera((u_full, v_full), d, k)
    p_r = camera_to_robot(p_c, cfg.hand_eye())
    ox, oy = cam.image_dir_to_world(p_r[0], p_r[1])
    w_r, theta_r = project_grasp_params(g.w, g.theta, cfg.projection(), d, k)
    return RobotGrasp(
        x_r=cam.x + ox,
        y_r=cam.y + oy,
        z_r=cam.z(cfg.ground_height) + p_r[2],
        w_r=w_r,
        theta_r=theta_r + cam.view_rot,
    )


def _psp_summary(psp: PspResult) -> dict:
    return {
        "prompt": list(psp.prompt),
        "cross_prompts": [list(p) for p in psp.cross_prompts] if psp.cross_prompts else None,
        "area_first": psp.area_first,
        "area_cross": psp.area_cross,
        "area_grown": psp.area_grown,
        "area_refined": psp.mask.area(),
        "degenerate_cross": psp.degenerate_cross,
        "center_min_gap": psp.aligned.center_min_gap,
        "align_moves": [
            {"pixel": list(s.pixel), "depth": s.depth,
             "move": list(s.move), "clamped": s.clamped}
            for s in psp.aligned.trace
        ],
        "camera": [psp.aligned.camera.x, psp.aligned.camera.y],
    }


def _box_dict(g: GraspBox) -> dict:
    return {"x": g.x, "y": g.y, "w": g.w, "h": g.h, "theta": g.theta}


def _pyramid_audit(scene: Scene, target_id: int) -> tuple[bool | None, float | None, float]:
    max_top = scene.max_top()
    if target_id == 0:
        return None, None, max_top
    top = scene.object_by_id(target_id).top_z
    return top == max_top, top, max_top


def run_trial(cfg: PipelineConfig, scene_seed: int, n_objects: int) -> TrialReport:
    """Grasp a seeded scene empty and account every attempt."""
    scene = generate_scene(
        scene_seed,
        n_objects,
        cfg.scene_mix,
        workspace=cfg.workspace,
        ground_height=cfg.ground_height,
        dims_cfg=cfg.scene_dims,
    )
    return run_trial_on_scene(cfg, scene)


def run_trial_on_scene(cfg: PipelineConfig, scene: Scene) -> TrialReport:
    rng = np.random.default_rng([cfg.seed, scene.seed])
    seg = make_segmenter(cfg, rng)
    gen = make_generator(cfg)
    cam = cfg.home_camera()
    gripper = cfg.gripper()

    n_objects = len(scene.objects)
    seed = scene.seed
    first_hash = scene_hash(scene)
    attempts: list[dict] = []
    successes = failures = 0
    fail_count: dict[int, int] = {}
    capped: list[int] = []
    budget = n_objects * (cfg.failure_cap + 1) + 1

    while scene.objects:
        if len(attempts) >= budget:
            raise RuntimeError("trial exceeded its attempt budget; accounting bug")
        t0 = time.perf_counter()
        before = scene  # the state this attempt perceives and is audited against
        rec: dict = {"index": len(attempts), "scene_hash": scene_hash(before)}
        target_id = 0
        succeeded = False

        try:
            psp = run_psp(before, cam, seg, cfg, rng)
            r_prompt, c_prompt = int(psp.prompt[1]), int(psp.prompt[0])
            target_id = int(psp.aligned.labels.values[r_prompt, c_prompt])
            rec["psp"] = _psp_summary(psp)
            if target_id == 0:
                rec.update(kind="no-target", success=False, failure_reason="no-target")
            else:
                msp = run_msp(psp.aligned.depth, psp.mask, gen, cfg)
                d = _grasp_center_depth(msp.grasp, msp.selected, psp.aligned.depth)
                if d is None:
                    raise NoGraspError("grasp center has no valid depth")
                robot = _to_robot_grasp(msp.grasp, d, psp, cfg)
                outcome, after = execute_grasp(before, robot, target_id, gripper)
                rec.update(
                    kind="executed",
                    success=outcome.success,
                    failure_reason=outcome.reason,
                    grasp=_box_dict(msp.grasp),
                    selected=_box_dict(msp.selected),
                    robot={"x_r": robot.x_r, "y_r": robot.y_r, "z_r": robot.z_r,
                           "w_r": robot.w_r, "theta_r": robot.theta_r},
                    rotation_deg=msp.rotation_deg,
                    funnel=list(msp.funnel),
                    posthoc_eq7=msp.posthoc_eq7,
                    posthoc_eq8=msp.posthoc_eq8,
                    refined_eq7=msp.refined_eq7,
                    refined_eq8=msp.refined_eq8,
                    refine_degenerate=msp.refine_degenerate,
                )
                succeeded = outcome.success
                if succeeded:
                    scene = after
        except (NoValidDepthError, SegmentationFailureError) as e:
            rec.update(kind="segmentation-failure", success=False,
                       failure_reason="segmentation-failure", detail=str(e))
        except NoGraspError as e:
            rec.update(kind="no-grasp", success=False,
                       failure_reason="no-grasp", detail=str(e))

        pyramid_ok, target_top, max_top = _pyramid_audit(before, target_id)
        rec.update(target_id=target_id, pyramid_ok=pyramid_ok,
                   target_top=target_top, scene_max_top=max_top)

        if succeeded:
            successes += 1
        else:
            failures += 1
            charged = target_id if target_id else _analytic_topmost(before)
            fail_count[charged] = fail_count.get(charged, 0) + 1
            rec["charged_object"] = charged
            if fail_count[charged] >= cfg.failure_cap:
                # manual assist: remove the stuck object, keep its failures
                capped.append(charged)
                rec["capped"] = True
                remaining = tuple(o for o in before.objects if o.id != charged)
                scene = Scene(_resettle(remaining), before.ground_height,
                              before.workspace, before.seed)
        rec["wall_ms"] = (time.perf_counter() - t0) * 1000.0
        attempts.append(rec)

    return TrialReport(
        scene_seed=seed,
        n_objects=n_objects,
        attempts=attempts,
        successes=successes,
        failures=failures,
        capped_objects=capped,
        initial_scene_hash=first_hash,
    )


# ---------------------------------------------------------------------------
# Suites
# ---------------------------------------------------------------------------

def _trial_job(args):
    cfg, seed, n_objects = args
    return seed, run_trial(cfg, seed, n_objects)


def _variant_config(cfg: PipelineConfig, variant: str) -> PipelineConfig:
    if variant == "full":
        return cfg.with_ablation(no_tva=False, no_cps=False, no_msp=False)
    if variant in ("no_tva", "no_cps", "no_msp"):
        return cfg.with_ablation(**{variant: True})
    raise ValueError(f"unknown variant {variant!r}")


def _variant_label(cfg: PipelineConfig) -> str:
    flags = [n for n in ("no_tva", "no_cps", "no_msp") if getattr(cfg, n)]
    return "+".join(flags) if flags else "full"


def run_suite(
    cfg: PipelineConfig,
    seeds,
    n_objects: int,
    variants=None,
    workers: int | None = None,
) -> dict:
    """Run trials for each (variant, seed) pair and aggregate.

    ``variants=None`` runs the configuration as-is under a label derived
    from its ablation flags; passing a list (e.g. ABLATION_VARIANTS)
    runs the named ablations side by side on identical seeds.  Trials
    are independent and run in a process pool; results are keyed by
    seed so worker scheduling cannot affect the output.
    """
    seeds = [int(s) for s in seeds]
    if not seeds:
        raise ValueError("need at least one trial seed")
    if variants is None:
        jobs = {(_variant_label(cfg), s): (cfg, s, n_objects) for s in seeds}
        variant_names = [_variant_label(cfg)]
    else:
        variant_names = list(variants)
        jobs = {}
        for v in variant_names:
            vcfg = _variant_config(cfg, v)
            for s in seeds:
                jobs[(v, s)] = (vcfg, s, n_objects)

    t0 = time.perf_counter()
    results: dict[tuple, TrialReport] = {}
    if workers is None:
        import os
        workers = max(1, min(os.cpu_count() or 1, len(jobs)))
    if workers <= 1:
        for key, job in jobs.items():
            results[key] = _trial_job(job)[1]
    else:
        ctx = get_context("fork")
        keys = list(jobs)
        with ctx.Pool(workers) as pool:
            for key, (_, rep) in zip(keys, pool.map(_trial_job, [jobs[k] for k in keys])):
                results[key] = rep

    suite = {
        "config": cfg.to_dict(),
        "n_objects": n_objects,
        "seeds": seeds,
        "variants": {},
    }
    timing = {"total_s": time.perf_counter() - t0, "trials": {}}
    for v in variant_names:
        reps = [results[(v, s)] for s in seeds]
        attempts = sum(r.total_attempts for r in reps)
        successes = sum(r.successes for r in reps)
        suite["variants"][v] = {
            "trials": [
                {
                    "seed": r.scene_seed,
                    "attempts": r.total_attempts,
                    "successes": r.successes,
                    "failures": r.failures,
                    "gsr": r.gsr,
                }
                for r in reps
            ],
            "attempts": attempts,
            "successes": successes,
            "failures": attempts - successes,
            "gsr": (successes / attempts) if attempts else None,
        }
        for r in reps:
            timing["trials"][f"{v}/{r.scene_seed}"] = sum(a["wall_ms"] for a in r.attempts) / 1000.0
    suite["_reports"] = results     # in-memory only; stripped before writing
    suite["_timing"] = timing
    return suite


def _dump_json(path: Path, data) -> None:
    path.write_text(json.dumps(data, indent=2, sort_keys=True) + "\n")


def write_suite_outputs(suite: dict, out_dir) -> None:
    """Write suite.csv, suite.json, per-trial reports, and figures.

    Every written file is a pure function of (config, seeds): timing
    lives only in the in-memory ``_timing`` entry so reruns are
    byte-identical.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    reports = suite["_reports"]
    public = {k: v for k, v in suite.items() if not k.startswith("_")}
    seeds = public["seeds"]
    single = len(public["variants"]) == 1

    rows = []
    for v, agg in public["variants"].items():
        row = {"variant": v}
        for i, t in enumerate(agg["trials"], start=1):
            row[f"T{i}"] = t["failures"]
        row["attempts"] = agg["attempts"]
        row["successes"] = agg["successes"]
        row["gsr"] = f"{agg['gsr']:.4f}" if agg["gsr"] is not None else "n/a"
        rows.append(row)
    fieldnames = ["variant"] + [f"T{i}" for i in range(1, len(seeds) + 1)] + [
        "attempts", "successes", "gsr"]
    with open(out / "suite.csv", "w", newline="") as f:
        writer = csv.DictWriter(f, fieldnames=fieldnames)
        writer.writeheader()
        writer.writerows(rows)

    _dump_json(out / "suite.json", public)

    for (v, s), rep in sorted(reports.items()):
        if single:
            path = out / f"trial_{s}.json"
        else:
            vdir = out / v
            vdir.mkdir(exist_ok=True)
            path = vdir / f"trial_{s}.json"
        _dump_json(path, report_to_dict(rep))

    from .figures import save_suite_figures

    save_suite_figures(public, out)


# ---------------------------------------------------------------------------
# Report rendering
# ---------------------------------------------------------------------------

def render_report(data: dict) -> str:
    """Human-readable text for a trial report or suite summary dict."""
    if "variants" in data:
        return _render_suite_text(data)
    rep = report_from_dict(data)
    lines = [
        f"trial seed={rep.scene_seed} objects={rep.n_objects} "
        f"attempts={rep.total_attempts} successes={rep.successes} "
        f"failures={rep.failures} gsr={_fmt_gsr(rep.gsr)}",
        f"initial scene hash {rep.initial_scene_hash}; "
        f"capped objects: {rep.capped_objects or 'none'}",
    ]
    for a in rep.attempts:
        lines.append(_render_attempt(a))
    return "\n".join(lines)


def _fmt_gsr(g) -> str:
    return "n/a" if g is None else f"{g:.4f}"


def _render_attempt(a: dict) -> str:
    bits = [f"  #{a['index']:>3} {a['kind']:<20}"]
    bits.append("ok " if a["success"] else f"FAIL({a.get('failure_reason')}) ")
    bits.append(f"target={a.get('target_id')}")
    if a.get("pyramid_ok") is not None:
        bits.append(f" pyramid={'y' if a['pyramid_ok'] else 'N'}")
    if "grasp" in a:
        g = a["grasp"]
        bits.append(
            f" grasp=({g['x']:.1f},{g['y']:.1f}) w={g['w']:.1f}px "
            f"theta={math.degrees(g['theta']):.1f}deg rot={a.get('rotation_deg', 0):.0f}"
        )
    if a.get("capped"):
        bits.append(" [capped]")
    return " ".join(bits)


def _render_suite_text(suite: dict) -> str:
    lines = [f"suite: {len(suite['seeds'])} trials x {suite['n_objects']} objects, "
             f"seeds {suite['seeds']}"]
    for v, agg in suite["variants"].items():
        ts = " ".join(f"T{i}={t['failures']}" for i, t in enumerate(agg["trials"], 1))
        lines.append(f"  {v:<8} {ts}  attempts={agg['attempts']} "
                     f"successes={agg['successes']} GSR={_fmt_gsr(agg['gsr'])}")
    return "\n".join(lines)
