"""CLI entry point for the associated Lamé SUSY toolkit.

Usage::

    python main.py band-edges --m 1 --ell 1 --k2 0.99
    python main.py bloch --m 2 --ell 1 --k2 0.95 --energy 4.5 -o bloch.csv
    python main.py partner --m 1 --ell 1 --k2 0.99 --epsilon 2.4 --lambda 1.5
    python main.py verify [--suite elliptic|solver|susy|spectral|all] [--inject-bug]
    python main.py figure figure1 [--format json] [-o fig1.json] [-v]
"""

import argparse
import logging
import sys
from pathlib import Path
from typing import Optional

from core import __version__
from core.commands import (
    SUITES,
    cmd_band_edges,
    cmd_bloch,
    cmd_figure,
    cmd_partner,
    cmd_verify,
    report_lines,
)
from core.config import Settings
from core.errors import (
    DomainError,
    LameSusyError,
    SingularTransformationError,
    UnsupportedModelError,
)
from core.models import RunConfig
from core.output import render_report_json, write_curve

logger = logging.getLogger("lame-susy")

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_UNSUPPORTED = 2
EXIT_SINGULAR = 3
EXIT_VERIFY_FAILED = 4


class _Parser(argparse.ArgumentParser):
    """Argument parser whose usage errors exit with ``EXIT_USAGE``."""

    def error(self, message: str) -> None:  # type: ignore[override]
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        sys.exit(EXIT_USAGE)


def _common_options() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument(
        "-v", "--verbose",
        action="store_true",
        default=False,
        help="Enable verbose (DEBUG) logging output.",
    )
    common.add_argument(
        "--config",
        default=None,
        help="YAML overlay merged on top of config/defaults.yaml.",
    )
    common.add_argument(
        "--format",
        dest="fmt",
        choices=("csv", "json"),
        default="csv",
        help="Output format (default: csv).",
    )
    common.add_argument(
        "-o", "--output",
        default=None,
        help="Output file. Defaults to stdout.",
    )
    common.add_argument(
        "--log-file",
        default=None,
        help="Log file path (default taken from the configuration).",
    )
    return common


def _model_options(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--m", type=int, default=1, help="Index m of the k^2 sn^2 term.")
    parser.add_argument("--ell", type=int, default=1, help="Index l of the k^2 cd^2 term.")
    parser.add_argument("--k2", type=float, default=0.99, help="Squared modulus in (0, 1).")


def _grid_options(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--x-min", type=float, default=None, help="Left end (default -4K).")
    parser.add_argument("--x-max", type=float, default=None, help="Right end (default 4K).")
    parser.add_argument("--samples", type=int, default=None,
                        help="Number of x samples (default from the configuration).")


def _build_argument_parser() -> argparse.ArgumentParser:
    """Create and return the CLI argument parser."""
    parser = _Parser(
        prog="lame-susy",
        description="Bloch solutions and SUSY partners of associated Lamé potentials.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    common = _common_options()
    sub = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")

    edges = sub.add_parser("band-edges", parents=[common],
                           help="Analytic band edges against the Hill discriminant.")
    _model_options(edges)

    bloch = sub.add_parser("bloch", parents=[common],
                           help="Sample both Bloch solutions at one energy.")
    _model_options(bloch)
    bloch.add_argument("--energy", type=float, required=True, help="Energy E.")
    _grid_options(bloch)

    partner = sub.add_parser("partner", parents=[common],
                             help="SUSY partner of the seed psi1 + lambda psi2.")
    _model_options(partner)
    partner.add_argument("--epsilon", type=float, required=True,
                         help="Factorization energy (at most E0).")
    partner.add_argument("--lambda", dest="lambda_mix", type=float, default=0.0,
                         help='Mixing constant; "inf" selects psi2 alone.')
    partner.add_argument("--allow-unsafe", action="store_true", default=False,
                         help="Accept epsilon above E0 (the partner may be singular).")
    _grid_options(partner)

    verify = sub.add_parser("verify", parents=[common], help="Run the verification suites.")
    _model_options(verify)
    verify.add_argument("--suite", choices=(*SUITES, "all"), default="all",
                        help="Suite to run (default: all).")
    verify.add_argument("--inject-bug", action="store_true", default=False,
                        help="Perturb the ansatz coefficients to exercise the residual check.")

    figure = sub.add_parser("figure", parents=[common],
                            help="Curves of a published figure.")
    figure.add_argument("name", choices=("figure1", "figure2"), help="Figure to reproduce.")
    _grid_options(figure)

    return parser


def _setup_logging(verbose: bool, log_file: Path) -> None:
    """Configure the root logger for the application."""
    level = logging.DEBUG if verbose else logging.INFO

    log_file.parent.mkdir(parents=True, exist_ok=True)

    handlers: list[logging.Handler] = [
        logging.StreamHandler(sys.stderr),
        logging.FileHandler(log_file, encoding="utf-8"),
    ]

    logging.basicConfig(
        level=level,
        format="%(asctime)s [%(levelname)s] %(name)s: %(message)s",
        handlers=handlers,
        force=True,
    )


def _run_config(args: argparse.Namespace, settings: Settings) -> RunConfig:
    samples = getattr(args, "samples", None)
    config = RunConfig(
        command=args.command,
        m=getattr(args, "m", 1),
        ell=getattr(args, "ell", 1),
        k2=getattr(args, "k2", 0.99),
        energy=getattr(args, "energy", None),
        epsilon=getattr(args, "epsilon", None),
        lambda_mix=getattr(args, "lambda_mix", 0.0),
        x_min=getattr(args, "x_min", None),
        x_max=getattr(args, "x_max", None),
        samples=samples if samples is not None else settings.grid("samples"),
        output_path=args.output,
        fmt=args.fmt,
        allow_unsafe=getattr(args, "allow_unsafe", False),
    )
    config.validate()
    return config


def _fail(code: int, message: str) -> None:
    print(f"Error: {message}", file=sys.stderr)
    sys.exit(code)


def main(argv: Optional[list[str]] = None) -> None:
    """Dispatch one command and map library errors to exit codes."""
    parser = _build_argument_parser()
    args = parser.parse_args(argv)

    try:
        settings = Settings(overlay_path=args.config)
    except (FileNotFoundError, ValueError) as exc:
        _fail(EXIT_USAGE, str(exc))

    # -- Logging -----------------------------------------------------------
    _setup_logging(args.verbose, Path(args.log_file) if args.log_file else settings.log_file)
    logger.info("lame-susy %s: %s", __version__, args.command)

    try:
        config = _run_config(args, settings)

        if args.command == "verify":
            report = cmd_verify(config, settings, suite=args.suite, inject_bug=args.inject_bug)
            if args.fmt == "json":
                text = render_report_json(report)
                if args.output:
                    Path(args.output).write_text(text, encoding="utf-8")
                else:
                    print(text)
            else:
                print("\n".join(report_lines(report)))
            failed = len(report.failed())
            if failed:
                logger.error("%d verification check(s) failed", failed)
                sys.exit(EXIT_VERIFY_FAILED)
            return

        if args.command == "band-edges":
            curve = cmd_band_edges(config, settings)
        elif args.command == "bloch":
            curve = cmd_bloch(config, settings)
        elif args.command == "partner":
            curve = cmd_partner(config, settings)
        else:
            curve = cmd_figure(args.name, config, settings)

        write_curve(curve, args.output, args.fmt)
        logger.info("%s complete", args.command)

    except UnsupportedModelError as exc:
        logger.error("Unsupported model: %s", exc)
        _fail(EXIT_UNSUPPORTED, str(exc))
    except SingularTransformationError as exc:
        logger.error("Singular transformation: %s", exc)
        where = f" (first node at x={exc.node:.12g})" if exc.node is not None else ""
        _fail(EXIT_SINGULAR, f"{exc}{where}")
    except DomainError as exc:
        logger.error("Invalid input: %s", exc)
        _fail(EXIT_USAGE, str(exc))
    except LameSusyError as exc:
        logger.error("Computation failed: %s", exc)
        _fail(EXIT_USAGE, str(exc))
    except FileNotFoundError as exc:
        logger.error("File not found: %s", exc)
        _fail(EXIT_USAGE, str(exc))
    except Exception as exc:
        logger.exception("Unexpected error.")
        _fail(
            EXIT_USAGE,
            f"An unexpected error occurred: {exc}\nRun with -v for detailed debug output.",
        )


if __name__ == "__main__":
    main()
