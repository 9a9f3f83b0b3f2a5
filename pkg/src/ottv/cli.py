"""Command-line interface: compress, synth, stats, verify.

Exit codes: 0 success, 1 invalid flags or configuration, 2 I/O or
container errors, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .compressor import PipelineConfig, run
from .container import (
    PROFILES,
    TokenVideo,
    load_container,
    save_container,
    synthesize_video,
    with_uniform_saliency,
)
from .errors import ContainerError, NumericalError, ValidationError

EXIT_INVALID = 1
EXIT_IO = 2
EXIT_NUMERICAL = 3


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        print(f"error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_INVALID)


def _build_parser() -> _Parser:
    parser = _Parser(prog="ottv", description=__doc__)
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    comp = sub.add_parser("compress", parents=[], help="compress a token container")
    comp.add_argument("--input", required=True)
    comp.add_argument("--out", required=True)
    comp.add_argument("--report", help="write the JSON run report here")
    comp.add_argument("--ratio", type=float, default=0.25)
    comp.add_argument("--gamma", type=float, default=0.3)
    comp.add_argument("--tau-m", type=float, default=0.3)
    comp.add_argument("--tau-b", type=float, default=0.3)
    comp.add_argument("--tau-c", type=float, default=0.3)
    comp.add_argument("--epsilon", type=float, default=0.01)
    comp.add_argument("--max-iters", type=int, default=200)
    comp.add_argument("--tol", type=float, default=1e-5)
    comp.add_argument("--strategy", default="ours")
    comp.add_argument("--alpha-mode", default="position_aligned")
    comp.add_argument("--alpha-fixed", type=float, default=1.0)
    comp.add_argument("--workers", type=int, default=None,
                      help="pair/frame parallelism; falls back to $OTT_WORKERS")
    comp.add_argument("--seed", type=int, default=0)
    comp.add_argument("--uniform-saliency", action="store_true",
                      help="ignore stored saliency, use 1/N_v everywhere")
    comp.add_argument("--timings", action="store_true",
                      help="include (non-deterministic) wall times in the report")

    synth = sub.add_parser("synth", help="generate a synthetic container")
    synth.add_argument("--profile", required=True, choices=PROFILES)
    synth.add_argument("--frames", type=int, required=True)
    synth.add_argument("--tokens", type=int, required=True)
    synth.add_argument("--dim", type=int, required=True)
    synth.add_argument("--seed", type=int, default=0)
    synth.add_argument("--grid-rows", type=int)
    synth.add_argument("--grid-cols", type=int)
    synth.add_argument("--out", required=True)

    stats = sub.add_parser("stats", help="pretty-print or export a run report")
    stats.add_argument("--report", required=True)
    stats.add_argument("--csv", help="write per-pair rows as CSV to this path")

    sub.add_parser("verify", help="run the small-instance oracle checks")
    return parser


def _workers(args) -> int:
    if args.workers is not None:
        return args.workers
    env = os.environ.get("OTT_WORKERS")
    return int(env) if env else 1


def _cmd_compress(args) -> int:
    config = PipelineConfig(
        ratio=args.ratio,
        gamma=args.gamma,
        tau_m=args.tau_m,
        tau_b=args.tau_b,
        tau_c=args.tau_c,
        epsilon=args.epsilon,
        max_iters=args.max_iters,
        tol=args.tol,
        strategy=args.strategy,
        alpha_mode=args.alpha_mode,
        alpha_fixed=args.alpha_fixed,
        workers=_workers(args),
        seed=args.seed,
    )
    video = load_container(args.input)
    if args.uniform_saliency:
        video = with_uniform_saliency(video)
    sequence, report = run(config, video)

    survivors = len(sequence.token_ids)
    out_video = TokenVideo(
        frame_count=1,
        tokens_per_frame=survivors,
        dim=video.dim,
        grid_rows=1,
        grid_cols=survivors,
        features=sequence.features[None, :, :],
        saliency=np.full((1, survivors), 1.0 / survivors),
    )
    save_container(out_video, args.out)
    component_map = {
        f"{t}:{i}": [f"{mt}:{mi}" for mt, mi in members]
        for (t, i), members in sequence.components.items()
    }
    Path(args.out).with_suffix(".components.json").write_text(
        json.dumps(component_map, sort_keys=True, indent=2) + "\n"
    )
    if args.report:
        Path(args.report).write_text(
            json.dumps(report.to_json_dict(include_timings=args.timings),
                       sort_keys=True, indent=2) + "\n"
        )
    print(
        f"retained {survivors}/{video.frame_count * video.tokens_per_frame} tokens "
        f"(achieved retention {report.achieved_retention:.4f})"
    )
    return 0


def _cmd_synth(args) -> int:
    video = synthesize_video(
        args.profile, args.frames, args.tokens, args.dim, args.seed,
        grid_rows=args.grid_rows, grid_cols=args.grid_cols,
    )
    save_container(
        video, args.out,
        manifest={"generator": "ottv synth", "profile": args.profile, "seed": args.seed},
    )
    print(f"wrote {args.out}")
    return 0


def _cmd_stats(args) -> int:
    try:
        report = json.loads(Path(args.report).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        print(f"error: cannot read report: {exc}", file=sys.stderr)
        return EXIT_IO
    buf = io.StringIO()
    writer = csv.writer(buf)
    writer.writerow(
        ["pair", "difficulty", "alpha", "budget", "ratio", "converged", "iterations"]
    )
    for row in report.get("pairs", []):
        writer.writerow(
            [row["pair"], row["difficulty"], row["alpha"], row["budget"],
             row["ratio"], row["converged"], row["iterations"]]
        )
    if args.csv:
        Path(args.csv).write_text(buf.getvalue())
        print(f"wrote {args.csv}")
    else:
        print(f"frames: {report['frame_count']}  tokens/frame: {report['tokens_per_frame']}")
        print(f"retained/frame: {report['retained_per_frame']}  "
              f"budget total: {report['budget_total']}")
        print(f"cv: {report['cv']:.4f}  overflow rate: {report['overflow_rate']:.4f}")
        print(f"achieved retention: {report['achieved_retention']:.4f}")
        print(buf.getvalue(), end="")
    return 0


def _cmd_verify(args) -> int:
    from . import oracle, spatial, transport

    rng = np.random.default_rng(0)
    failures = 0
    for trial in range(20):
        k = int(rng.integers(2, 7))
        a = rng.random(k) + 0.1
        a /= a.sum()
        b = rng.random(k) + 0.1
        b /= b.sum()
        cost = rng.random((k, k)) * 2
        plan, converged, _, _ = transport.sinkhorn(a, b, cost, 0.01, 2000, 1e-8)
        approx = float((plan * cost).sum())
        exact = oracle.exact_ot(a, b, cost).objective
        ok = approx <= exact + max(0.02 * abs(exact), 1e-3)
        failures += not ok
    print(f"sinkhorn vs exact LP: {20 - failures}/20 within tolerance")

    greedy_fail = 0
    for trial in range(20):
        n, k = 8, 3
        feats = rng.standard_normal((n, 4))
        sal = rng.dirichlet(np.ones(n))
        sel = spatial.select_ours(feats, sal, k)
        achieved = spatial.facility_location_value(feats, sal, sel)
        _, best = oracle.brute_force_selection(feats, sal, k)
        greedy_fail += achieved < (1 - 1 / np.e) * best - 1e-12
    print(f"greedy vs brute force: {20 - greedy_fail}/20 meet the (1-1/e) bound")
    return 0 if failures == 0 and greedy_fail == 0 else EXIT_INVALID


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
        if args.command == "compress":
            return _cmd_compress(args)
        if args.command == "synth":
            return _cmd_synth(args)
        if args.command == "stats":
            return _cmd_stats(args)
        return _cmd_verify(args)
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except (ContainerError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except NumericalError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
