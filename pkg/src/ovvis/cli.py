"""Command line entry point.

Exit status: 0 on success, 1 for invalid input, 2 for I/O failures.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from .errors import InputError
from .evaluator import evaluate
from .matcher import Strategy
from .pipeline.ablate import ablate, discover_bundles, strategy_grid, write_csv
from .pipeline.formats import (apply_novel_file, load_groundtruth, load_predictions, predictions_doc,
                               write_json)
from .pipeline.report import plot_ablation, plot_ap_thresholds
from .pipeline.run import run_videos
from .pipeline.synth import KINDS, ScenarioSpec, synth_generate

log = logging.getLogger("ovvis")

EXIT_OK, EXIT_INPUT, EXIT_IO = 0, 1, 2


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise InputError(message)


def _strategy(args) -> Strategy:
    if args.strategy == "topk":
        return Strategy.topk(args.T, args.K)
    return Strategy(args.strategy)


def cmd_run(args) -> int:
    bundles = discover_bundles(args.bundle)
    runs = run_videos(bundles, _strategy(args), workers=args.workers,
                      use_obj=not args.no_obj, use_iou=not args.no_iou)
    write_json(args.out, predictions_doc([r.to_json() for r in runs]))
    log.info("wrote %d video(s) to %s", len(runs), args.out)
    return EXIT_OK


def cmd_eval(args) -> int:
    preds = load_predictions(args.pred)
    categories, gts = load_groundtruth(args.gt)
    if args.novel:
        categories = apply_novel_file(categories, args.novel)
    result = evaluate(preds, gts, categories)
    doc = result.to_json()
    if args.out:
        write_json(args.out, doc)
        if args.figure:
            plot_ap_thresholds(result, Path(args.out).with_suffix(".png"))
    print(json.dumps(doc, indent=2, sort_keys=True))
    return EXIT_OK


def cmd_synth(args) -> int:
    out = Path(args.out)
    for i in range(args.count):
        seed = args.seed + i
        spec = ScenarioSpec(kind=args.kind, seed=seed, num_queries=args.queries, num_instances=args.instances,
                            frames=args.frames, embed_dim=args.embed_dim, noise=args.noise, window=args.window,
                            shuffle=args.shuffle)
        target = out if args.count == 1 else out / f"{args.kind}_{seed:06d}"
        synth_generate(spec, target)
        log.info("wrote %s", target)
    return EXIT_OK


def cmd_ablate(args) -> int:
    bundles = discover_bundles(args.bundles)
    rows = ablate(bundles, strategy_grid(args.grid), workers=args.workers)
    write_csv(rows, args.out)
    if args.figure:
        plot_ablation(rows, Path(args.out).with_suffix(".png"))
    for r in rows:
        rec = r.as_record()
        print(",".join(str(rec[c]) for c in ("strategy", "T", "K", "AP", "AP_n", "id_switches")))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="ovvis", description=__doc__.splitlines()[0])
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    r = sub.add_parser("run", help="track and classify one bundle (or a directory of bundles)")
    r.add_argument("--bundle", required=True)
    r.add_argument("--strategy", choices=("adjacent", "longterm", "topk"), default="topk")
    r.add_argument("--T", type=int, default=9)
    r.add_argument("--K", type=int, default=5)
    r.add_argument("--out", required=True)
    r.add_argument("--workers", type=int, default=1)
    r.add_argument("--no-obj", action="store_true", help="do not weight class scores by object score")
    r.add_argument("--no-iou", action="store_true", help="do not weight class scores by mask-IoU score")
    r.set_defaults(func=cmd_run)

    e = sub.add_parser("eval", help="AP / AP_n of predictions against ground truth")
    e.add_argument("--pred", required=True)
    e.add_argument("--gt", required=True)
    e.add_argument("--novel", help="JSON list of novel category ids or names (overrides GT flags)")
    e.add_argument("--out", help="write the result JSON here")
    e.add_argument("--no-figure", dest="figure", action="store_false",
                   help="skip the per-threshold plot written next to --out")
    e.set_defaults(func=cmd_eval)

    s = sub.add_parser("synth", help="generate seeded synthetic bundles")
    s.add_argument("--kind", choices=KINDS, required=True)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--out", required=True)
    s.add_argument("--count", type=int, default=1, help="number of bundles (consecutive seeds)")
    s.add_argument("--queries", type=int, default=8)
    s.add_argument("--instances", type=int)
    s.add_argument("--frames", type=int, default=15)
    s.add_argument("--embed-dim", type=int, default=256)
    s.add_argument("--noise", type=float, default=0.0)
    s.add_argument("--window", type=int, default=2)
    s.add_argument("--shuffle", action="store_true", help="permute query order in every frame")
    s.set_defaults(func=cmd_synth)

    a = sub.add_parser("ablate", help="compare association strategies on a set of bundles")
    a.add_argument("--bundles", required=True)
    a.add_argument("--grid", choices=("default", "full"), default="default")
    a.add_argument("--out", required=True)
    a.add_argument("--workers", type=int, default=1)
    a.add_argument("--no-figure", dest="figure", action="store_false")
    a.set_defaults(func=cmd_ablate)
    return p


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
        logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                            format="%(levelname)s %(message)s")
        return args.func(args)
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
