"""Command-line client.

All experiment logic lives in :mod:`diws.handlers`; this module only parses
arguments, dispatches (in-process by default, or to a running service with
``--server``), and writes the result documents to files. Exit codes: 0 on
success, 1 on configuration or usage errors, 2 on numerical failures, 3 when
a `check` assertion fails.
"""

from __future__ import annotations

import argparse
import os
import sys

from . import handlers
from .config import ExperimentConfig, load_config_file
from .errors import ConfigError, DiwsError, NumericalError
from .serialize import canonical_json, ktau_csv, pd_matrix_csv, write_text

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_NUMERICAL = 2
EXIT_CHECK_FAILED = 3

_SUBCOMMANDS = ("train", "compare-pd", "ktau", "gt-tau", "check", "gen-data")


class _UsageExit(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    """argparse that reports usage problems on stderr and exits 1."""

    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise _UsageExit(message)


def _build_parser() -> _Parser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", metavar="PATH", help="JSON experiment config")
    common.add_argument("--seed", type=int, help="override the experiment seed")
    common.add_argument("--out", metavar="DIR", default="out", help="output directory")
    common.add_argument("--mode", choices=["di", "standard"], help="update rule override")
    common.add_argument("--server", metavar="URL", help="run on a diws service instead of in-process")

    parser = _Parser(prog="diws", description=__doc__)
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)
    sub.add_parser("train", parents=[common], help="full alternating training run")
    sub.add_parser("compare-pd", parents=[common], help="paired disturbance matrices, di vs standard")
    sub.add_parser("ktau", parents=[common], help="interval rank-correlation series over epochs")
    sub.add_parser("gt-tau", parents=[common], help="correlation against from-scratch retraining")
    sub.add_parser("check", parents=[common], help="run the numerical validation suites")
    sub.add_parser("gen-data", parents=[common], help="export the synthetic dataset as CSV")
    serve = sub.add_parser("serve", help="start the HTTP service")
    serve.add_argument("--host", default="127.0.0.1")
    serve.add_argument("--port", type=int, default=8000)
    return parser


def _resolve_config(args) -> ExperimentConfig:
    cfg = load_config_file(args.config) if args.config else ExperimentConfig()
    if args.seed is not None:
        if args.command == "gen-data":
            synthetic = cfg.dataset.resolved_synthetic()
            if synthetic is None:
                raise ConfigError("gen-data with --seed requires a synthetic dataset spec")
            synthetic.seed = args.seed
            cfg.dataset.synthetic = synthetic
            cfg.dataset.csv_path = None
        else:
            cfg.train.seed = args.seed
    if args.mode is not None:
        cfg.train.mode = args.mode
    return cfg


def _fetch_document(args) -> dict:
    if args.server:
        return _fetch_remote(args)
    cfg = _resolve_config(args)
    handler = {
        "train": handlers.handle_train,
        "compare-pd": handlers.handle_compare_pd,
        "ktau": handlers.handle_ktau,
        "gt-tau": handlers.handle_gt_tau,
        "check": handlers.handle_check,
        "gen-data": handlers.handle_gen_data,
    }[args.command]
    return handler(cfg)


def _fetch_remote(args) -> dict:
    import httpx

    payload = {
        "config": load_config_file(args.config).doc() if args.config else None,
        "seed": args.seed,
        "mode": args.mode,
        "seed_applies_to_dataset": args.command == "gen-data",
    }
    url = args.server.rstrip("/") + "/" + args.command
    response = httpx.post(url, json=payload, timeout=600.0)
    if response.status_code == 400:
        raise ConfigError(response.json().get("detail", "request rejected"))
    if response.status_code != 200:
        raise NumericalError(f"service returned {response.status_code}: {response.text}")
    return response.json()["document"]


def _write_outputs(command: str, doc: dict, out_dir: str) -> list[str]:
    paths = []

    def emit(name: str, text: str) -> None:
        path = os.path.join(out_dir, name)
        write_text(path, text)
        paths.append(path)

    if command == "train":
        emit("run_record.json", canonical_json(doc))
    elif command == "compare-pd":
        for mode in ("di", "standard"):
            matrix = doc[f"matrix_{mode}"]
            emit(f"pd_matrix_{mode}.csv", pd_matrix_csv(matrix["archs"], matrix["cells"]))
        summary = {k: doc[k] for k in ("format", "config", "summary")}
        emit("compare_pd_summary.json", canonical_json(summary))
    elif command == "ktau":
        rows = [(int(epoch), float(tau)) for epoch, tau in doc["rows"]]
        emit(f"ktau_{doc['mode']}.csv", ktau_csv(rows))
    elif command == "gt-tau":
        emit("gt_tau.json", canonical_json(doc))
    elif command == "check":
        emit("check_report.json", canonical_json(doc))
    elif command == "gen-data":
        emit("data.csv", doc["csv"])
    return paths


def _print_check_lines(doc: dict) -> None:
    bound = doc["output_change_bound"]
    rate = doc["convergence_rate"]
    lines = [
        ("output-change bound", bound["all_hold"], f"{bound['instances']} instances"),
        (
            "small-lambda output change",
            bound["small_lambda"]["all_below_threshold"],
            f"{bound['small_lambda']['instances']} instances",
        ),
        ("convergence rate", rate["rate_holds"], f"{rate['instances']} quadratics"),
        ("monotone descent under PSD projection", rate["descent_holds"], f"{rate['instances']} quadratics"),
    ]
    for name, ok, detail in lines:
        print(f"[{'PASS' if ok else 'FAIL'}] {name} ({detail})")


def main(argv: list[str] | None = None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except _UsageExit:
        return EXIT_CONFIG
    if args.command is None:
        parser.print_usage(sys.stderr)
        return EXIT_CONFIG
    if args.command == "serve":
        import uvicorn

        uvicorn.run("diws.service.app:app", host=args.host, port=args.port)
        return EXIT_OK
    try:
        doc = _fetch_document(args)
        paths = _write_outputs(args.command, doc, args.out)
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except DiwsError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    for path in paths:
        print(f"wrote {path}")
    if args.command == "check":
        _print_check_lines(doc)
        if not doc["passed"]:
            return EXIT_CHECK_FAILED
    return EXIT_OK


def entrypoint() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entrypoint()
