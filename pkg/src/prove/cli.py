"""Command-line front end.

Exit codes: 0 success, 1 usage error, 2 data error, 3 backend error.
"""

import argparse
import json
import sys
from pathlib import Path

from prove.errors import BackendError, DataError, LaunchError, ProveError
from prove.pipeline import (
    config_from_dict,
    confusion_matrix,
    emit_report,
    render_summary,
    report_document,
    run_pipeline,
)

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_BACKEND = 3


class _Parser(argparse.ArgumentParser):
    # argparse exits 2 on bad flags; this tool reserves 2 for data errors.
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _parse_ns(text: str) -> list:
    try:
        values = [int(part) for part in text.split(",") if part.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a comma-separated int list: {text!r}")
    if not values:
        raise argparse.ArgumentTypeError("sweep size list is empty")
    return values


def build_parser() -> _Parser:
    parser = _Parser(prog="prove", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    run = sub.add_parser("run", help="run one evaluation")
    run.add_argument("--config", required=True, type=Path)
    run.add_argument("--method", choices=("greedy", "maj", "prove"))
    run.add_argument("--n", type=int, dest="n_samples")
    run.add_argument("--dataset")
    run.add_argument("--replay", type=Path, metavar="CACHE")
    run.add_argument("--report", type=Path)

    sweep = sub.add_parser("sweep", help="run with a sample-count ablation")
    sweep.add_argument("--config", required=True, type=Path)
    sweep.add_argument("--ns", required=True, type=_parse_ns,
                       help="comma-separated sample counts, e.g. 4,8,16")
    sweep.add_argument("--dataset")
    sweep.add_argument("--replay", type=Path, metavar="CACHE")
    sweep.add_argument("--report", type=Path)

    show = sub.add_parser("score", help="print accuracy from a report file")
    show.add_argument("--report", required=True, type=Path)

    conf = sub.add_parser("confusion", help="tabulate verification pairs")
    conf.add_argument("--pairs", required=True, type=Path,
                      help="lines of json with solution_correct/program_match")
    return parser


def _load_config(args) -> "RunConfig":
    try:
        raw = json.loads(args.config.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise DataError(f"config {args.config}: {exc}") from exc
    if getattr(args, "method", None):
        raw["method"] = args.method
    if getattr(args, "n_samples", None):
        raw["n_samples"] = args.n_samples
    if getattr(args, "ns", None):
        raw["sample_sweep"] = args.ns
    if getattr(args, "dataset", None):
        old = raw.get("dataset") or {}
        raw["dataset"] = {"name": args.dataset,
                          "data_root": old.get("data_root", ".")}
    if getattr(args, "replay", None):
        raw["cache_path"] = str(args.replay)
        raw["base_url"] = None
    if getattr(args, "report", None):
        # keep --report paths relative to the caller, not the config file
        raw["report_path"] = str(Path(args.report).resolve())
    try:
        return config_from_dict(raw, base_dir=args.config.parent)
    except (KeyError, TypeError, ValueError) as exc:
        raise DataError(f"config {args.config}: {exc}") from exc


def _cmd_run(args) -> int:
    config = _load_config(args)
    report = run_pipeline(config)
    if config.report_path is not None:
        summary = emit_report(report, config.report_path)
        sys.stdout.write(summary)
    else:
        doc = report_document(report)
        sys.stdout.write(json.dumps(doc, indent=2, sort_keys=True,
                                    ensure_ascii=False) + "\n")
        sys.stderr.write(render_summary(report))
    return EXIT_OK


def _cmd_score(args) -> int:
    try:
        doc = json.loads(args.report.read_text(encoding="utf-8"))
        acc = doc["accuracy"]
        line = (f"dataset {doc['dataset']}  method {doc['method']}  "
                f"accuracy {acc['correct']}/{acc['total']} ({acc['percent']}%)\n")
    except (OSError, ValueError, KeyError, TypeError) as exc:
        raise DataError(f"report {args.report}: {exc}") from exc
    sys.stdout.write(line)
    return EXIT_OK


def _cmd_confusion(args) -> int:
    pairs = []
    try:
        with args.pairs.open(encoding="utf-8") as fh:
            for line in fh:
                if not line.strip():
                    continue
                obj = json.loads(line)
                pairs.append((bool(obj["solution_correct"]),
                              bool(obj["program_match"])))
    except (OSError, ValueError, KeyError, TypeError) as exc:
        raise DataError(f"pairs {args.pairs}: {exc}") from exc
    matrix = confusion_matrix(pairs)

    def cell(rate):
        return (f"{rate.numerator}/{rate.denominator}"
                if rate is not None else "n/a")

    sys.stdout.write(
        f"tp {matrix.tp}  fn {matrix.fn}  fp {matrix.fp}  tn {matrix.tn}\n"
        f"tpr {cell(matrix.tpr)}  fnr {cell(matrix.fnr)}  "
        f"fpr {cell(matrix.fpr)}  tnr {cell(matrix.tnr)}\n")
    return EXIT_OK


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command in ("run", "sweep"):
            return _cmd_run(args)
        if args.command == "score":
            return _cmd_score(args)
        if args.command == "confusion":
            return _cmd_confusion(args)
        parser.error(f"unknown command {args.command!r}")
    except FileNotFoundError as exc:
        sys.stderr.write(f"prove: data error: {exc}\n")
        return EXIT_DATA
    except DataError as exc:
        sys.stderr.write(f"prove: data error: {exc}\n")
        return EXIT_DATA
    except LaunchError as exc:
        sys.stderr.write(f"prove: backend error: {exc}\n")
        return EXIT_BACKEND
    except BackendError as exc:
        sys.stderr.write(f"prove: backend error: {exc}\n")
        return EXIT_BACKEND
    except ProveError as exc:
        sys.stderr.write(f"prove: error: {exc}\n")
        return EXIT_DATA
    return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
