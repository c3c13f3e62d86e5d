"""``mlrsa`` command line.

Each mode is a subcommand whose flags mirror the keys of its config schema
(``--tau-max`` sets ``tau_max``).  ``mlrsa run --config FILE`` takes the same
keys from a ``key = value`` file or from the header of a previous artifact.

Exit status: 0 on success with every requested gate passing, 1 when a
comparison gate fails, 2 for invalid configuration, 3 for solver errors.
"""

from __future__ import annotations

import argparse
import logging
import os
import sys
from pathlib import Path

from .config import SCHEMAS, ConfigError, ExperimentConfig, load_config

EXIT_OK, EXIT_GATE, EXIT_CONFIG, EXIT_SOLVER = 0, 1, 2, 3
OUTPUT_DIR_ENV = "MLRSA_OUTPUT_DIR"

log = logging.getLogger("mlrsa")


def _add_io_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("-o", "--output", help=f"output file (default: ${OUTPUT_DIR_ENV} or cwd)")
    p.add_argument("--format", choices=("csv", "json"), default=None)
    p.add_argument("--jobs", type=int, default=1, help="parallel replications (threads)")
    p.add_argument("--plot", action="store_true", help="also render a PNG next to the output")
    p.add_argument("-v", "--verbose", action="store_true")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="mlrsa", description="Multilayer RSA simulators and solvers")
    sub = parser.add_subparsers(dest="command", required=True)
    for mode, schema in SCHEMAS.items():
        p = sub.add_parser(mode, help=f"run the {mode} experiment")
        for key, spec in schema.items():
            if mode == "figure" and key == "id":
                p.add_argument("id", metavar="ID", help="figure number: 4, 5, 6, 7, 8 or 9")
                continue
            extra = f" (choices: {', '.join(map(str, spec.choices))})" if spec.choices else ""
            p.add_argument(f"--{key.replace('_', '-')}", dest=key, default=None,
                           metavar=spec.kind.__name__.upper(),
                           help=f"{spec.help}{extra} [default: {spec.default!r}]")
        _add_io_flags(p)
    p = sub.add_parser("run", help="run from a config file or an artifact header")
    p.add_argument("--config", required=True, help="key = value file, CSV artifact or JSON artifact")
    _add_io_flags(p)
    return parser


def _default_output(config: ExperimentConfig) -> Path:
    base = Path(os.environ.get(OUTPUT_DIR_ENV, "."))
    stem = f"figure{config.params['id']}" if config.mode == "figure" else config.mode
    return base / f"{stem}.{config.format}"


def _config_from_args(args) -> ExperimentConfig:
    if args.command == "run":
        return load_config(args.config, output=args.output, fmt=args.format, jobs=args.jobs)
    mapping = {"mode": args.command}
    for key in SCHEMAS[args.command]:
        value = getattr(args, key, None)
        if value is not None:
            mapping[key] = value
    return ExperimentConfig.from_mapping(mapping, output=args.output, fmt=args.format,
                                         jobs=args.jobs)


def run(config: ExperimentConfig, plot: bool = False) -> int:
    """Execute one experiment, write its artifacts and return the exit status."""
    from .experiments import execute
    from .report import write_artifact

    try:
        art = execute(config)
    except (ValueError, RuntimeError, ArithmeticError, MemoryError) as exc:
        module = getattr(type(exc), "__module__", "mlrsa")
        print(f"error in {config.mode} ({module}.{type(exc).__name__}): {exc}", file=sys.stderr)
        return EXIT_SOLVER
    path = config.output or _default_output(config)
    items = config.header_items()
    written = write_artifact(path, config.format, items, art)
    if plot:
        from .plotting import render

        title = f"figure {config.params['id']}" if config.mode == "figure" else config.mode
        written.append(render(art, path.with_suffix(".png"), title=title))
    for p in written:
        print(p)
    for key, value in art.results.items():
        log.info("%s = %s", key, value)
    if art.passed is False:
        failed = [k for k, v in art.results.items() if v == "fail" and k != "gate"]
        print(f"gate failed: {', '.join(failed)}", file=sys.stderr)
        return EXIT_GATE
    return EXIT_OK


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        config = _config_from_args(args)
    except ConfigError as exc:
        print(f"invalid configuration: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"cannot read config: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    return run(config, plot=args.plot)


if __name__ == "__main__":
    sys.exit(main())
