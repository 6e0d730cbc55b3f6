"""Command-line entry point.

Thin client over the pipeline layer: parses arguments, assembles the
effective configuration (file values overridden by repeated
``--set section.key=value`` flags), runs one stage, and maps errors to
distinct exit codes:

    0 success, 1 gradient-check failure, 2 usage,
    3 I/O error, 4 validation error, 5 training divergence.

Diagnostics go to stderr; stdout carries only ``evaluate`` report
blocks.
"""

from __future__ import annotations

import argparse
import logging
import sys

from . import pipeline
from .diagnostics import kv_line
from .errors import DivergenceError, ValidationError
from .gradcheck import run_all

EXIT_OK = 0
EXIT_CHECK_FAILED = 1
EXIT_USAGE = 2
EXIT_IO = 3
EXIT_VALIDATION = 4
EXIT_DIVERGENCE = 5


def _add_config_args(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", required=True, help="pipeline config file")
    parser.add_argument(
        "--set",
        dest="overrides",
        action="append",
        default=[],
        metavar="KEY=VALUE",
        help="override a config value (repeatable)",
    )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="semspec", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true", help="debug logging")
    sub = parser.add_subparsers(dest="command", required=True)

    for name, help_text in (
        ("specialize", "run initial specialization, write the seen-word subspace"),
        ("postspec", "train the global mapping network, write its checkpoint"),
        ("map", "apply the mapping network to the full vocabulary"),
        ("pipeline", "run all stages in order"),
    ):
        _add_config_args(sub.add_parser(name, help=help_text))

    ev = sub.add_parser("evaluate", help="similarity report for a vectors file")
    ev.add_argument("--vectors", required=True)
    ev.add_argument(
        "--dataset",
        dest="datasets",
        action="append",
        required=True,
        metavar="FORMAT:PATH[:COLUMN]",
        help="evaluation dataset (repeatable)",
    )
    ev.add_argument("--header-policy", default="auto", choices=("auto", "require", "forbid"))

    gc = sub.add_parser("gradcheck", help="run the finite-difference suites")
    gc.add_argument(
        "--inject-fault",
        action="store_true",
        help="deliberately corrupt one gradient to exercise failure detection",
    )

    sy = sub.add_parser("synth", help="write synthetic fixture files")
    sy.add_argument("--kind", required=True, choices=("cluster", "linear"))
    sy.add_argument("--out", required=True, help="output directory")
    sy.add_argument("--seed", type=int, default=7)
    sy.add_argument("--clusters", type=int, default=4)
    sy.add_argument("--words-per-cluster", type=int, default=5)
    sy.add_argument("--dim", type=int, default=16)
    sy.add_argument("--noise", type=float, default=0.1)
    sy.add_argument("--words", type=int, default=500)
    return parser


def _effective_config(args) -> tuple[pipeline.PipelineConfig, str]:
    kv = pipeline.load_config_file(args.config)
    for item in args.overrides:
        if "=" not in item:
            raise ValidationError(f"--set expects KEY=VALUE, got {item!r}")
        key, value = item.split("=", 1)
        kv[key.strip()] = value.strip()
    return pipeline.build_pipeline_config(kv), pipeline.config_hash(kv)


def _run(args) -> int:
    if args.command in ("specialize", "postspec", "map", "pipeline"):
        cfg, cfg_hash = _effective_config(args)
        stage = {
            "specialize": pipeline.stage_specialize,
            "postspec": pipeline.stage_postspec,
            "map": pipeline.stage_map,
            "pipeline": pipeline.run_pipeline,
        }[args.command]
        summary = stage(cfg, cfg_hash)
        if args.command == "pipeline" and "evaluate" in summary:
            for report in summary["evaluate"]:
                print(kv_line(**report))
        return EXIT_OK

    if args.command == "evaluate":
        specs = [pipeline._parse_dataset_spec(s) for s in args.datasets]
        for report in pipeline.evaluate_space_file(args.vectors, specs, args.header_policy):
            print(kv_line(**report))
        return EXIT_OK

    if args.command == "gradcheck":
        reports = run_all(corrupt=args.inject_fault)
        ok = True
        for report in reports:
            ok = ok and report["pass"]
            print(
                kv_line(
                    check=report["name"],
                    max_rel_err=report["max_rel_err"],
                    tol=report["tol"],
                    status="pass" if report["pass"] else "FAIL",
                ),
                file=sys.stderr,
            )
        return EXIT_OK if ok else EXIT_CHECK_FAILED

    if args.command == "synth":
        written = pipeline.write_synth_fixture(
            args.kind,
            args.out,
            args.seed,
            clusters=args.clusters,
            words_per_cluster=args.words_per_cluster,
            dim=args.dim,
            noise=args.noise,
            words=args.words,
        )
        for key, path in written.items():
            print(kv_line(file=key, path=path), file=sys.stderr)
        return EXIT_OK

    raise ValidationError(f"unknown command {args.command!r}")


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.INFO,
        stream=sys.stderr,
        format="%(levelname)s %(name)s %(message)s",
    )
    try:
        return _run(args)
    except DivergenceError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DIVERGENCE
    except (ValidationError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
