"""Command-line interface: encode position files, render similarity
heatmaps, run the verification suites, and run the desk-scale training
benchmarks.

Every command honors ``--seed`` and is bit-deterministic given it. Exit
status is 0 on success, 1 when a verification check or training run fails,
and 2 for usage or parse errors.
"""

from __future__ import annotations

import argparse
import os
import sys

import numpy as np

from . import serialization
from .attention import RetrievalTask, generate_retrieval_task, train_and_eval, write_split_csv
from .encoders import Encoder, EncoderSpec, FourierConfig, UnseenPositionError, encode, fourier_features, init_fourier_params
from .kernels import (
    anisotropy_ratio,
    expected_feature_dot,
    gaussian_kernel,
    mean_heatmap,
    probe_anchors,
    shift_fn,
    similarity_heatmap,
    write_pgm,
)
from .numerics import SeededRng
from .presets import PRESETS, get_preset
from .training import TrainingDiverged, backward_encode, finite_diff_grad, fit_kernel_target, smooth_trace

__all__ = ["main"]

EXIT_OK = 0
EXIT_CHECK_FAILED = 1
EXIT_USAGE = 2


def _add_common(parser: argparse.ArgumentParser, out_default=None):
    parser.add_argument("--seed", type=int, default=0, help="global RNG seed (default 0)")
    parser.add_argument("--preset", help="named encoder preset (see `fourierpe presets`)")
    parser.add_argument("--config", help="path to a key=value encoder config file")
    if out_default is not None:
        parser.add_argument("--out", default=out_default, help="output path or directory")


def _resolve_spec(args) -> EncoderSpec:
    if getattr(args, "preset", None) and getattr(args, "config", None):
        raise ValueError("give either --preset or --config, not both")
    if getattr(args, "preset", None):
        return get_preset(args.preset).spec
    if getattr(args, "config", None):
        return serialization.load_spec(args.config)
    raise ValueError("an encoder is required: pass --preset NAME or --config FILE")


# ---------------------------------------------------------------------------
# encode
# ---------------------------------------------------------------------------


def cmd_encode(args) -> int:
    if args.checkpoint:
        spec, tensors = serialization.load_checkpoint(args.checkpoint)
        if args.preset or args.config:
            declared = _resolve_spec(args)
            if declared != spec:
                raise ValueError("checkpoint spec disagrees with --preset/--config")
        encoder = Encoder.from_tensors(spec, tensors)
    else:
        spec = _resolve_spec(args)
        encoder = Encoder(spec, rng=SeededRng(args.seed))
    width = spec.position_width()
    positions = serialization.load_positions_csv(args.positions, expected_columns=width)
    encodings = encoder.encode(positions)
    header = [f"d{i}" for i in range(spec.output_dim)]
    serialization.write_matrix_csv(args.out, encodings, header)
    print(f"wrote {encodings.shape[0]} encodings of width {encodings.shape[1]} to {args.out}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# heatmap
# ---------------------------------------------------------------------------


def _parse_anchor(text: str) -> tuple[int, int]:
    parts = text.split(",")
    if len(parts) != 2:
        raise ValueError(f"anchor must be 'row,col', got {text!r}")
    return int(parts[0]), int(parts[1])


def cmd_heatmap(args) -> int:
    spec = _resolve_spec(args)
    rng = SeededRng(args.seed)
    if args.anchor:
        anchors = {f"r{r}c{c}": (r, c) for r, c in (_parse_anchor(a) for a in args.anchor)}
    else:
        anchors = probe_anchors(args.height, args.width)
    os.makedirs(os.path.dirname(os.path.abspath(args.out_prefix)), exist_ok=True)
    for name, anchor in anchors.items():
        if args.seeds > 1:
            grid = mean_heatmap(spec, args.height, args.width, anchor, args.stage,
                                args.seeds, rng)
        else:
            grid = similarity_heatmap(Encoder(spec, rng=rng) if spec.has_params else Encoder(spec),
                                      args.height, args.width, anchor, args.stage)
        base = f"{args.out_prefix}_{name}"
        vmin, vmax = write_pgm(base + ".pgm", grid.values)
        serialization.write_matrix_csv(base + ".csv", grid.values)
        meta = [
            f"height={grid.height}",
            f"width={grid.width}",
            f"anchor_row={anchor[0]}",
            f"anchor_col={anchor[1]}",
            f"stage={args.stage}",
            f"seeds={args.seeds}",
            f"min={vmin:.17g}",
            f"max={vmax:.17g}",
            "scale=pixel = round(255 * (value - min) / (max - min))",
        ]
        try:
            ratio = anisotropy_ratio(grid, args.radius)
            meta.append(f"anisotropy_ratio_r{args.radius}={ratio:.6f}")
        except ValueError:
            pass
        with open(base + ".meta", "w", encoding="utf-8") as fh:
            fh.write("\n".join(meta) + "\n")
        print(f"wrote {base}.pgm/.csv/.meta")
    return EXIT_OK


# ---------------------------------------------------------------------------
# verify
# ---------------------------------------------------------------------------


def _verify_shift(seed: int, lines: list[str]) -> bool:
    rng = SeededRng(seed)
    n = 1000
    worst_shift = 0.0
    worst_closed = 0.0
    worst_self = 0.0
    for i in range(n):
        m = (1, 2, 4)[i % 3]
        w_r = rng.normal(0.0, 1.0, (8, m))
        x = rng.uniform(-5.0, 5.0, m)
        y = rng.uniform(-5.0, 5.0, m)
        c = rng.uniform(-5.0, 5.0, m)
        batch = np.stack([x, y, x + c, y + c])[:, None, :]
        feats = fourier_features(batch, w_r)[:, 0, :]
        d_xy = float(feats[0] @ feats[1])
        d_shifted = float(feats[2] @ feats[3])
        worst_shift = max(worst_shift, abs(d_xy - d_shifted))
        worst_closed = max(worst_closed, abs(d_xy - shift_fn(x - y, w_r)))
        worst_self = max(worst_self, abs(float(feats[0] @ feats[0]) - 0.5))
    ok = True
    for name, value, tol in (
        ("shift_invariance", worst_shift, 1e-9),
        ("closed_form_match", worst_closed, 1e-11),
        ("self_similarity", worst_self, 1e-12),
    ):
        passed = value < tol
        ok &= passed
        lines.append(
            f"suite=shift check={name} n={n} max_abs_delta={value:.3e} "
            f"tol={tol:.0e} status={'PASS' if passed else 'FAIL'}"
        )
    return ok


def _verify_kernel(seed: int, lines: list[str]) -> bool:
    rng = SeededRng(seed)
    lines.append(
        "suite=kernel note=oracle is 0.5*exp(-|d|^2/(2*gamma^2)); the 1/sqrt(F) "
        "feature scaling and Gaussian sampling make the expected dot product "
        "half of, and wider than, the reference kernel exp(-|d|^2/gamma^2)"
    )
    f_dim = 4096
    n_seeds = 100
    direction = np.array([1.0, 1.0]) / np.sqrt(2.0)
    ok = True
    for gamma in (1.0, 4.0, 100.0):
        for scale in (0.0, 0.5, 1.0, 2.0):
            delta = direction * (gamma * scale)
            x = rng.uniform(-1.0, 1.0, 2)
            y = x - delta
            dots = np.zeros(n_seeds)
            for s, child in enumerate(rng.split(n_seeds)):
                w_r = child.normal(0.0, 1.0 / gamma, (f_dim // 2, 2))
                batch = np.stack([x, y])[:, None, :]
                feats = fourier_features(batch, w_r)[:, 0, :]
                dots[s] = feats[0] @ feats[1]
            expect = float(expected_feature_dot(np.linalg.norm(delta), gamma))
            se = float(dots.std(ddof=1) / np.sqrt(n_seeds))
            err = abs(float(dots.mean()) - expect)
            passed = err <= 3.0 * se + 1e-12
            ok &= passed
            lines.append(
                f"suite=kernel check=gamma={gamma:g}_delta={gamma * scale:g} "
                f"mean={dots.mean():.6e} expected={expect:.6e} se={se:.3e} "
                f"status={'PASS' if passed else 'FAIL'}"
            )
    return ok


def _grad_configs(rng: SeededRng, count: int = 20):
    for i in range(count):
        f = int((4, 8, 16)[int(rng.integers(0, 3))])
        h = int((3, 5)[int(rng.integers(0, 2))])
        g = int((1, 2)[int(rng.integers(0, 2))])
        m = int((1, 2, 4)[int(rng.integers(0, 3))])
        dg = int((2, 4)[int(rng.integers(0, 2))])
        yield FourierConfig(
            fourier_dim=f, hidden_dim=h, output_dim=g * dg, n_groups=g,
            coords_per_group=m, gamma=1.0, layer_norm=(i % 2 == 1),
        )


def _verify_grad(seed: int, lines: list[str]) -> bool:
    rng = SeededRng(seed)
    ok = True
    worst = 0.0
    for i, config in enumerate(_grad_configs(rng)):
        params = init_fourier_params(config, rng)
        x = rng.uniform(-2.0, 2.0, (3, config.n_groups, config.coords_per_group))
        upstream = rng.normal(0.0, 1.0, (3, config.output_dim))
        analytic = backward_encode(x, params, config, upstream)

        def loss_fn(p):
            return float(np.sum(upstream * encode(x, params, config)))

        numeric = finite_diff_grad(loss_fn, params.to_dict(), step=1e-5)
        rel = max(
            float(np.max(np.abs(analytic[name] - numeric[name]))
                  / (np.max(np.abs(numeric[name])) + 1e-12))
            for name in analytic
        )
        worst = max(worst, rel)
        passed = rel < 1e-5
        ok &= passed
        lines.append(
            f"suite=grad check=config_{i:02d} F={config.fourier_dim} H={config.hidden_dim} "
            f"G={config.n_groups} M={config.coords_per_group} ln={int(config.layer_norm)} "
            f"rel_err={rel:.3e} tol=1e-05 status={'PASS' if passed else 'FAIL'}"
        )
    lines.append(f"suite=grad check=worst_case rel_err={worst:.3e} tol=1e-05 "
                 f"status={'PASS' if worst < 1e-5 else 'FAIL'}")
    return ok


def cmd_verify(args) -> int:
    suites = {"shift": _verify_shift, "kernel": _verify_kernel, "grad": _verify_grad}
    if args.suite == "all":
        selected = list(suites.items())
    elif args.suite in suites:
        selected = [(args.suite, suites[args.suite])]
    else:
        raise ValueError(f"unknown suite {args.suite!r}; choose from shift, kernel, grad, all")
    lines: list[str] = []
    all_ok = True
    for _, fn in selected:
        all_ok &= fn(args.seed, lines)
    failures = sum(1 for ln in lines if ln.endswith("status=FAIL"))
    checks = sum(1 for ln in lines if "status=" in ln)
    lines.append(f"overall status={'PASS' if all_ok else 'FAIL'} checks={checks} failures={failures}")
    report = "\n".join(lines) + "\n"
    sys.stdout.write(report)
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(report)
    return EXIT_OK if all_ok else EXIT_CHECK_FAILED


# ---------------------------------------------------------------------------
# train
# ---------------------------------------------------------------------------


def _train_kernel_fit(args, spec: EncoderSpec, out_dir: str) -> int:
    if spec.variant not in ("learnable_fourier", "fixed_fourier"):
        raise ValueError("kernel-fit requires a learnable_fourier or fixed_fourier encoder")
    config = spec.fourier_config()
    rng = SeededRng(args.seed)
    span = 2.0 * config.gamma
    xa = rng.uniform(0.0, span, (args.pairs, config.n_groups, config.coords_per_group))
    xb = rng.uniform(0.0, span, (args.pairs, config.n_groups, config.coords_per_group))
    bandwidth = args.target_bandwidth if args.target_bandwidth else 2.0 * config.gamma

    def target(a, b):
        return gaussian_kernel(a, b, bandwidth)

    result = fit_kernel_target(
        config, target, xa, xb, args.steps, rng, lr=args.lr,
        kl_alpha=args.kl_alpha, wr_mean_offset=args.wr_mean_offset,
    )
    trace_path = os.path.join(out_dir, "trace.csv")
    with open(trace_path, "w", encoding="utf-8") as fh:
        fh.write("step,model_loss,kl_loss,total_loss\n")
        for row in result.trace_rows:
            fh.write(f"{row[0]},{row[1]:.17g},{row[2]:.17g},{row[3]:.17g}\n")
    serialization.save_checkpoint(os.path.join(out_dir, "checkpoint.fpe"), spec,
                                  result.params.to_dict())
    smoothed = smooth_trace(result.model_loss, window=25)
    initial, final = float(smoothed[0]), float(smoothed[-1])
    with open(os.path.join(out_dir, "metrics.csv"), "w", encoding="utf-8") as fh:
        fh.write("initial_loss,final_loss,ratio\n")
        fh.write(f"{initial:.17g},{final:.17g},{final / max(initial, 1e-300):.17g}\n")
    print(f"kernel-fit: initial={initial:.6e} final={final:.6e} "
          f"(x{final / max(initial, 1e-300):.3f}), outputs in {out_dir}")
    return EXIT_OK


def _train_retrieval(args, spec: EncoderSpec, out_dir: str) -> int:
    task = RetrievalTask(
        height=args.height, width=args.width,
        holdout_rows=(args.holdout_start, args.height),
        n_items=args.items, n_train=args.instances, n_eval=args.eval_instances,
        content_dim=spec.output_dim, seed=args.seed,
    )
    if args.dump_data:
        data = generate_retrieval_task(task, SeededRng(args.seed))
        for name, split in (("train", data.train), ("eval_seen", data.eval_seen),
                            ("eval_unseen", data.eval_unseen)):
            write_split_csv(os.path.join(out_dir, f"data_{name}.csv"), split)
    runs = [(args.preset or "config", spec)]
    if args.baseline:
        runs.append((args.baseline, get_preset(args.baseline).spec))
    rows = []
    traces = {}
    for name, run_spec in runs:
        result = train_and_eval(run_spec, task, args.steps, SeededRng(args.seed), lr=args.lr)
        rows.append((name, args.seed, result.seen_accuracy, result.unseen_accuracy))
        traces[name] = result.loss_trace
        print(f"retrieval[{name}]: seen={result.seen_accuracy:.3f} unseen={result.unseen_accuracy:.3f}")
    with open(os.path.join(out_dir, "metrics.csv"), "w", encoding="utf-8") as fh:
        fh.write("encoder,seed,seen_acc,unseen_acc\n")
        for name, seed, seen, unseen in rows:
            fh.write(f"{name},{seed},{seen:.6f},{unseen:.6f}\n")
    for name, trace in traces.items():
        with open(os.path.join(out_dir, f"trace_{name}.csv"), "w", encoding="utf-8") as fh:
            fh.write("step,loss\n")
            for i, v in enumerate(trace):
                fh.write(f"{i},{v:.17g}\n")
    print(f"retrieval outputs in {out_dir}")
    return EXIT_OK


def cmd_train(args) -> int:
    spec = _resolve_spec(args)
    out_dir = args.out
    os.makedirs(out_dir, exist_ok=True)
    if args.steps is None:
        args.steps = 2000 if args.task == "kernel-fit" else 2500
    if args.lr is None:
        args.lr = 1e-2 if args.task == "kernel-fit" else 5e-3
    if args.task == "kernel-fit":
        return _train_kernel_fit(args, spec, out_dir)
    if args.task == "retrieval":
        return _train_retrieval(args, spec, out_dir)
    raise ValueError(f"unknown task {args.task!r}; choose kernel-fit or retrieval")


# ---------------------------------------------------------------------------
# presets
# ---------------------------------------------------------------------------


def cmd_presets(args) -> int:
    for preset in PRESETS.values():
        spec = preset.spec
        dims = f"D={spec.output_dim}"
        if spec.variant in ("learnable_fourier", "fixed_fourier"):
            dims += f" F={spec.fourier_dim} H={spec.hidden_dim} G={spec.n_groups} gamma={spec.gamma:g}"
        elif spec.variant == "embed_nd":
            dims += f" vocab={list(spec.vocab_sizes)}"
        print(f"{preset.name:18s} {spec.variant:18s} {dims}")
        print(f"{'':18s} {preset.provenance}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# entry point
# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="fourierpe",
        description="Learnable Fourier-feature positional encodings: encode, visualize, verify, train.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_enc = sub.add_parser("encode", help="encode a CSV of positions")
    _add_common(p_enc, out_default="encodings.csv")
    p_enc.add_argument("--positions", required=True, help="input positions CSV")
    p_enc.add_argument("--checkpoint", help="load parameters from a checkpoint instead of seeding")
    p_enc.set_defaults(fn=cmd_encode)

    p_hm = sub.add_parser("heatmap", help="similarity heatmaps (PGM + CSV + meta)")
    _add_common(p_hm)
    p_hm.add_argument("--height", type=int, default=64)
    p_hm.add_argument("--width", type=int, default=64)
    p_hm.add_argument("--anchor", action="append",
                      help="anchor as 'row,col' (repeatable; default: five probe positions)")
    p_hm.add_argument("--stage", choices=("fourier", "full"), default="fourier")
    p_hm.add_argument("--seeds", type=int, default=1, help="average over this many seeds")
    p_hm.add_argument("--radius", type=int, default=8, help="radius for the anisotropy metric")
    p_hm.add_argument("--out-prefix", default="heatmap", help="output file prefix")
    p_hm.set_defaults(fn=cmd_heatmap)

    p_ver = sub.add_parser("verify", help="run the invariant suites")
    p_ver.add_argument("suite", nargs="?", default="all",
                       choices=("shift", "kernel", "grad", "all"))
    p_ver.add_argument("--seed", type=int, default=0)
    p_ver.add_argument("--out", help="also write the report to this file")
    p_ver.set_defaults(fn=cmd_verify)

    p_tr = sub.add_parser("train", help="kernel-fit or retrieval training")
    _add_common(p_tr, out_default="train_out")
    p_tr.add_argument("--task", choices=("kernel-fit", "retrieval"), required=True)
    p_tr.add_argument("--steps", type=int, default=None,
                      help="training steps (default: 2000 kernel-fit, 2500 retrieval)")
    p_tr.add_argument("--lr", type=float, default=None,
                      help="Adam learning rate (default: 1e-2 kernel-fit, 5e-3 retrieval)")
    p_tr.add_argument("--pairs", type=int, default=256, help="kernel-fit: number of position pairs")
    p_tr.add_argument("--target-bandwidth", type=float, default=None,
                      help="kernel-fit: Gaussian target bandwidth (default 2*gamma)")
    p_tr.add_argument("--kl-alpha", type=float, default=0.0,
                      help="kernel-fit: weight of the Gaussian-shape regularizer")
    p_tr.add_argument("--wr-mean-offset", type=float, default=0.0,
                      help="kernel-fit: shift added to the initial Fourier weights")
    p_tr.add_argument("--baseline", help="retrieval: second preset to compare against")
    p_tr.add_argument("--height", type=int, default=16)
    p_tr.add_argument("--width", type=int, default=16)
    p_tr.add_argument("--holdout-start", type=int, default=12,
                      help="retrieval: first grid row of the held-out band")
    p_tr.add_argument("--items", type=int, default=4)
    p_tr.add_argument("--instances", type=int, default=2048)
    p_tr.add_argument("--eval-instances", type=int, default=256)
    p_tr.add_argument("--dump-data", action="store_true",
                      help="retrieval: also write the task splits as CSV")
    p_tr.set_defaults(fn=cmd_train)

    p_pre = sub.add_parser("presets", help="list named encoder presets")
    p_pre.set_defaults(fn=cmd_presets)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # argparse exits with 2 on usage errors and 0 on --help
        return int(exc.code or 0)
    try:
        return args.fn(args)
    except TrainingDiverged as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CHECK_FAILED
    except (ValueError, UnseenPositionError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
