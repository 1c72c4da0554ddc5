"""Command line entry points: run, compare-runtime, plot, gen-data."""

from __future__ import annotations

import argparse
import os
import sys

from .datagen import gen_logistic, write_csv
from .harness import ExperimentConfig, compare_runtime, plot_metrics, run_experiment


def _add_config_arg(parser):
    parser.add_argument("--config", required=True, help="YAML experiment config")


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="itercv",
                                     description="Leave-one-out tracking experiments")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run an experiment and write CSV outputs")
    _add_config_arg(p_run)
    p_run.add_argument("--out-dir", default=None,
                       help="output directory (default: runs/<config name>)")

    p_rt = sub.add_parser("compare-runtime", help="time exact rows vs the tracker")
    _add_config_arg(p_rt)

    p_plot = sub.add_parser("plot", help="render median curves from a metrics.csv")
    p_plot.add_argument("--input", required=True, help="metrics.csv from a run")
    p_plot.add_argument("--out", required=True, help="output SVG path")
    p_plot.add_argument("--metric", default="err_approx",
                        choices=["err_approx", "err_cv", "rel_err_cv"])

    p_gen = sub.add_parser("gen-data", help="write a synthetic logistic dataset")
    p_gen.add_argument("--n", type=int, required=True)
    p_gen.add_argument("--p", type=int, required=True)
    p_gen.add_argument("--s", type=int, required=True, help="number of nonzero signal coords")
    p_gen.add_argument("--seed", type=int, required=True)
    p_gen.add_argument("--out", required=True, help="output CSV path")

    args = parser.parse_args(argv)

    if args.command == "run":
        cfg = ExperimentConfig.load(args.config)
        out_dir = args.out_dir
        if out_dir is None:
            stem = os.path.splitext(os.path.basename(args.config))[0]
            out_dir = os.path.join("runs", stem)
        result = run_experiment(cfg, out_dir=out_dir)
        from .harness import summary_text

        sys.stdout.write(summary_text(result))
        sys.stdout.write(f"outputs in {out_dir}\n")
        return 0

    if args.command == "compare-runtime":
        cfg = ExperimentConfig.load(args.config)
        report = compare_runtime(cfg)
        sys.stdout.write(report.text())
        return 0

    if args.command == "plot":
        plot_metrics(args.input, args.out, metric=args.metric)
        sys.stdout.write(f"wrote {args.out}\n")
        return 0

    if args.command == "gen-data":
        data, _ = gen_logistic(args.n, args.p, args.s, args.seed)
        write_csv(data, args.out)
        sys.stdout.write(f"wrote {args.out} ({data.n} rows, {data.p} features)\n")
        return 0

    raise AssertionError("unreachable")


if __name__ == "__main__":
    sys.exit(main())
