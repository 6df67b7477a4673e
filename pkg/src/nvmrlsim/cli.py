"""Command-line front end.

Subcommands: shapes, plan, cost, compare, sweep, envelope, calibrate,
train-toy, check-reference. Delimited output goes to stdout or --out; when
writing to a file, plot-bearing reports also render a PNG next to it (disable
with --no-figures). Exit codes: 0 success, 2 usage, 3 config error, 4 module
error, each with a one-line `error:` diagnostic on stderr.
"""

from __future__ import annotations

import argparse
import sys

import numpy as np

from . import config as cfgmod
from . import report
from .costmodel import compare_policies, fps_sweep, iteration_cost, phase_costs
from .envelope import frame_distance, max_velocity
from .errors import ConfigError, NvmRlSimError
from .mapper import conv_active_pe_conflict_note, plan_phase
from .netspec import (TrainingPolicy, assign_placement, infer_shapes,
                      weight_footprint)
from .reference import LABEL_TRANSPOSITION_NOTE, compare_from_reference, load_reference_table


def _build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="run config file (or set $" + cfgmod.CONFIG_ENV_VAR + ")")
    common.add_argument("--format", choices=("csv", "json"), help="output format")
    common.add_argument("--out", help="write the report here instead of stdout")
    common.add_argument("--seed", type=int, help="seed override for stochastic subcommands")
    common.add_argument("--policies", help="comma-separated policy list, e.g. e2e,l2,l3,l4")
    common.add_argument("--batch", help="batch size or range, e.g. 4 or 1..32")
    common.add_argument("--reference", help="reference table path (default: shipped table)")
    common.add_argument("--no-figures", action="store_true",
                        help="skip PNG rendering next to --out")
    parser = argparse.ArgumentParser(
        prog="nvmrlsim", parents=[common],
        description="Analytical cost model and RL testbed for an NVM-backed CNN-training accelerator",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name, fn, desc in (
        ("shapes", cmd_shapes, "per-layer shapes, MACs, weights, footprints, placement"),
        ("plan", cmd_plan, "PE-array mapping plans per layer and phase"),
        ("cost", cmd_cost, "modelled per-layer latency/energy tables"),
        ("compare", cmd_compare, "policy training-cost reductions vs the E2E baseline"),
        ("sweep", cmd_sweep, "fps vs batch size per policy"),
        ("envelope", cmd_envelope, "velocity envelope from fps and clearance settings"),
        ("calibrate", cmd_calibrate, "fit free parameters against the reference table"),
        ("train-toy", cmd_train_toy, "desk-scale transfer + online RL experiment"),
        ("check-reference", cmd_check_reference, "validate a reference table"),
    ):
        p = sub.add_parser(name, help=desc, parents=[common])
        p.set_defaults(func=fn)
    return parser


class _Context:
    def __init__(self, args):
        self.args = args
        self.run = cfgmod.RunConfig.load(args.config)
        self.net = cfgmod.load_network(self.run.network_path)
        self.hw = cfgmod.load_hardware(self.run.hardware_path)
        if args.policies:
            self.policies = cfgmod.parse_policies(args.policies)
        else:
            self.policies = [TrainingPolicy.parse(p) for p in self.run.policies]
        self.batches = cfgmod.parse_batch_range(args.batch) if args.batch else self.run.batches
        self.fmt = args.format or self.run.out_format

    @property
    def budget(self) -> int:
        return self.hw.budget_for(self.net)

    def placements(self):
        return {p.label: assign_placement(self.net, p, self.budget, self.hw.scratch_bytes)
                for p in self.policies}

    def reference_path(self):
        return self.args.reference or cfgmod.data_path("fig12_reference.csv")

    def emit(self, records, columns, figure_name=None):
        report.emit_report(records, columns, self.fmt, self.args.out, allow_empty=True)
        if self.args.out and figure_name and not self.args.no_figures:
            from . import figures  # matplotlib import deferred to the render path
            png = str(self.args.out)
            png = png[:png.rfind(".")] + ".png" if "." in png else png + ".png"
            getattr(figures, figure_name)(records, png)


def _shape_str(shape) -> str:
    return "x".join(str(v) for v in shape)


def cmd_shapes(ctx: _Context) -> int:
    policy = ctx.policies[0]
    placement = assign_placement(ctx.net, policy, ctx.budget, ctx.hw.scratch_bytes)
    footprints = weight_footprint(ctx.net)
    records = []
    for s in infer_shapes(ctx.net):
        records.append({
            "layer": s.name, "kind": s.kind,
            "input_shape": _shape_str(s.input_shape),
            "output_shape": _shape_str(s.output_shape),
            "macs": s.macs, "weights": s.weight_count,
            "footprint_mb": footprints[s.name] / 1e6,
            "placement": placement.location[s.name],
        })
    ctx.emit(records, report.SHAPES_COLUMNS)
    return 0


def cmd_plan(ctx: _Context) -> int:
    policy = ctx.policies[0]
    placement = assign_placement(ctx.net, policy, ctx.budget, ctx.hw.scratch_bytes)
    nvm = {n for n, loc in placement.location.items() if loc == "nvm"}
    records, notes = [], []
    for phase in ("forward", "backward"):
        for plan in plan_phase(ctx.net, policy, phase, ctx.hw.pe, nvm, ctx.hw.scratch_bytes):
            t = plan.traffic
            records.append({
                "layer": plan.layer, "phase": plan.phase,
                "mapping_type": plan.mapping_type, "sets": plan.sets,
                "segments": plan.segments_per_set,
                "segment_dims": f"{plan.segment_rows}x{plan.segment_cols}",
                "active_pes": plan.active_pes, "passes": plan.passes,
                "input_rows_per_pass": plan.input_rows_per_pass,
                "channel_splits": plan.channel_splits,
                "traffic_bits": t.gbuf_to_rf + t.rf_to_gbuf + t.inter_pe + t.nvm_to_gbuf,
            })
            note = conv_active_pe_conflict_note(plan)
            if note:
                notes.append(note)
    ctx.emit(records, report.PLAN_COLUMNS)
    for note in notes:
        print(note, file=sys.stderr)
    return 0


def _cost_records(ctx: _Context, policy: TrainingPolicy):
    placement = assign_placement(ctx.net, policy, ctx.budget, ctx.hw.scratch_bytes)
    records = []
    for phase in ("forward", "backward"):
        reports = phase_costs(ctx.net, policy, phase, placement, ctx.hw.mem,
                              ctx.hw.comp, ctx.hw.pe)
        for rep in reports:
            trainable = phase == "backward"
            nvm_write = "yes" if trainable and placement.is_nvm(rep.layer) else "no"
            records.append({
                "layer": rep.layer, "phase": phase,
                "latency_ms": rep.latency_s * 1e3, "active_pe": rep.active_pes,
                "power_mw": rep.avg_power_w * 1e3, "energy_mj": rep.energy_j * 1e3,
                "nvm_write": nvm_write,
            })
        lat = sum(r.latency_s for r in reports) * 1e3
        e = sum(r.energy_j for r in reports) * 1e3
        records.append({
            "layer": "total", "phase": phase, "latency_ms": lat,
            "active_pe": int(round(sum(r.active_pes for r in reports) / len(reports))),
            "power_mw": sum(r.avg_power_w for r in reports) * 1e3 / len(reports),
            "energy_mj": e, "nvm_write": "",
        })
    return records


def cmd_cost(ctx: _Context) -> int:
    ctx.emit(_cost_records(ctx, ctx.policies[0]), report.COST_COLUMNS, "cost_figure")
    return 0


def cmd_compare(ctx: _Context) -> int:
    if not _model_compare_requested(ctx):
        table = load_reference_table(ctx.reference_path())
        comps = compare_from_reference(table, [p.label for p in ctx.policies])
        records = [{
            "policy": c.policy,
            "latency_reduction_pct": c.latency_reduction * 100,
            "energy_reduction_pct": c.energy_reduction * 100,
            "per_image_latency_ms": c.per_image_latency_ms,
            "per_image_energy_mj": c.per_image_energy_mj,
        } for c in comps]
        print(LABEL_TRANSPOSITION_NOTE, file=sys.stderr)
    else:
        comps = compare_policies(ctx.net, ctx.policies, ctx.batches[0],
                                 ctx.placements(), ctx.hw.mem, ctx.hw.comp, ctx.hw.pe)
        records = [{
            "policy": c.policy.label,
            "latency_reduction_pct": c.latency_reduction * 100,
            "energy_reduction_pct": c.energy_reduction * 100,
            "per_image_latency_ms": c.per_image_latency_s * 1e3,
            "per_image_energy_mj": c.per_image_energy_j * 1e3,
        } for c in comps]
    ctx.emit(records, report.COMPARE_COLUMNS)
    return 0


def _model_compare_requested(ctx: _Context) -> bool:
    # `compare` defaults to the shipped reference table; `--reference model`
    # compares calibrated-model training costs instead.
    return ctx.args.reference == "model"


def cmd_sweep(ctx: _Context) -> int:
    records = fps_sweep(ctx.net, ctx.policies, ctx.batches, ctx.placements(),
                        ctx.hw.mem, ctx.hw.comp, ctx.hw.pe)
    ctx.emit(records, report.SWEEP_COLUMNS, "sweep_figure")
    return 0


def cmd_envelope(ctx: _Context) -> int:
    env_settings = ctx.run.envelope
    records = []
    for policy in ctx.policies:
        placement = assign_placement(ctx.net, policy, ctx.budget, ctx.hw.scratch_bytes)
        for n in ctx.batches:
            cost = iteration_cost(ctx.net, policy, n, placement, ctx.hw.mem,
                                  ctx.hw.comp, ctx.hw.pe)
            for name, d_min in env_settings.environments:
                v = max_velocity(cost.fps, d_min, env_settings.frames_to_react)
                records.append({
                    "environment": name, "policy": policy.label, "batch": n,
                    "fps": cost.fps, "d_min_m": d_min,
                    "max_velocity_m_s": v,
                    "frame_distance_m": frame_distance(v, cost.fps) if cost.fps > 0 else 0.0,
                })
    ctx.emit(records, report.ENVELOPE_COLUMNS, "envelope_figure")
    return 0


def cmd_calibrate(ctx: _Context) -> int:
    from .calibrate import calibrate  # scipy import deferred
    table = load_reference_table(ctx.reference_path())
    result = calibrate(table, ctx.net, ctx.hw.pe, ctx.hw.mem, ctx.hw.comp)
    print(f"clock_hz={result.mem.clock_hz:.6g}", file=sys.stderr)
    print(f"mac_energy_j={result.comp.mac_energy_j:.6g}", file=sys.stderr)
    print(f"sram_energy_j_per_bit={result.mem.sram_read_energy_j_per_bit:.6g}", file=sys.stderr)
    print(f"pe_static_power_w={result.comp.pe_static_power_w:.6g}", file=sys.stderr)
    if result.warning:
        print(f"warning: {result.warning}", file=sys.stderr)
    records = [{
        "layer": r.layer, "phase": r.phase, "anchor": "yes" if r.anchor else "no",
        "ref_latency_ms": r.ref_latency_ms, "model_latency_ms": r.model_latency_ms,
        "latency_error_pct": r.latency_error_pct,
        "ref_energy_mj": r.ref_energy_mj, "model_energy_mj": r.model_energy_mj,
        "energy_error_pct": r.energy_error_pct,
    } for r in result.residuals]
    ctx.emit(records, report.RESIDUAL_COLUMNS, "residual_figure")
    return 0


def cmd_train_toy(ctx: _Context) -> int:
    from .rl.experiment import meta_train, run_experiment
    rl_cfg = ctx.run.rl
    if ctx.args.seed is not None:
        from dataclasses import replace
        rl_cfg = replace(rl_cfg, seed=ctx.args.seed)
    labels = [p.label for p in ctx.policies] if ctx.args.policies else ["E2E", "L2"]
    meta = meta_train(rl_cfg)
    records = []
    for label in labels:
        result = run_experiment(label, rl_cfg, meta)
        records.extend(_train_records(label, result, rl_cfg))
    ctx.emit(records, report.TRAIN_COLUMNS, "train_figure")
    return 0


def _train_records(label, result, rl_cfg):
    log = result.log
    cum = result.cumulative_reward
    if cum.size == 0:
        return []
    window = log.smoothing_window
    # running per-episode return and SFD, aligned to steps
    step_return, step_sfd = [], []
    ep_idx, dist_sum, ret = 0, 0.0, 0.0
    boundaries = np.cumsum([len(ep) for ep in log.episode_rewards])
    for i in range(len(log.rewards)):
        while ep_idx < len(boundaries) and i + 1 > boundaries[ep_idx]:
            dist_sum += log.episode_distances[ep_idx]
            ret = float(np.mean(log.episode_rewards[ep_idx]))
            ep_idx += 1
        step_return.append(ret)
        step_sfd.append(dist_sum / ep_idx if ep_idx else 0.0)
    stride = max(1, len(cum) // 400)
    records = []
    for j in range(0, len(cum), stride):
        step = j + window - 1
        records.append({
            "iteration": step, "policy": label,
            "cumulative_reward": float(cum[j]),
            "episode_return": step_return[step],
            "safe_flight_distance_m": step_sfd[step],
        })
    return records


def cmd_check_reference(ctx: _Context) -> int:
    path = ctx.args.reference or ctx.reference_path()
    table = load_reference_table(path)
    fwd, bwd = table.total("forward"), table.total("backward")
    print(f"ok: {path}")
    print(f"forward totals validated: {fwd.latency_ms} ms / {fwd.energy_mj} mJ")
    print(f"backward totals validated: {bwd.latency_ms} ms / {bwd.energy_mj} mJ")
    return 0


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if exc.code is not None else 2
    try:
        ctx = _Context(args)
        return args.func(ctx)
    except ConfigError as exc:
        print(f"error: config: {exc}", file=sys.stderr)
        return 3
    except NvmRlSimError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 4


if __name__ == "__main__":
    sys.exit(main())
