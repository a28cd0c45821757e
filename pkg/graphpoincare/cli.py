"""graphpoincare CLI - discrete Poincare inequalities on graphs and trees."""

import argparse
import logging
import sys
from collections.abc import Callable
from pathlib import Path

from pydantic import BaseModel, ValidationError
from rich.console import Console
from rich.logging import RichHandler

from graphpoincare import __version__
from graphpoincare.config import DEFAULT_GRIDS, RunConfig, build_run_config
from graphpoincare.errors import BudgetError, InputError, PoincareError, WindowError

console = Console(stderr=True)

EXIT_PASS = 0
EXIT_FAIL = 1
EXIT_USAGE = 2
EXIT_BUDGET = 3

FAMILIES = ("ex31", "ex32", "prop34", "thm35", "flow")

# Registered commands: (label, command_name, command_func)
COMMANDS: list[tuple[str, str, Callable[[list[str]], int]]] = []


def register_command(label: str, command: str):
    """Decorator to register a command for help and dispatch.

    Args:
        label: One-line description shown by --help
        command: CLI command name
    """
    def decorator(func):
        COMMANDS.append((label, command, func))
        return func
    return decorator


def show_help():
    """Display help message."""
    console.print()
    console.print(f"[bold cyan]graphpoincare[/bold cyan] {__version__} - Poincare inequalities on graphs and trees")
    console.print()
    console.print("Usage: python -m graphpoincare <command> [options]")
    console.print()
    console.print("Commands:")
    for label, command, _ in COMMANDS:
        console.print(f"  {command:12} {label}")
    console.print()
    console.print("Run <command> --help for its options.")
    console.print("Exit codes: 0 pass, 1 verdict failure, 2 usage, 3 budget exceeded or window too small.")
    return EXIT_PASS


def emit(payload: BaseModel) -> None:
    """Machine-readable result on stdout, progress stays on stderr."""
    sys.stdout.write(payload.model_dump_json(indent=2) + "\n")
    sys.stdout.flush()


def _common_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--seed", type=int, help="Master seed")
    parser.add_argument("--out", type=Path, help="Output directory")
    parser.add_argument("--config", type=Path, help="JSON config file with defaults")
    parser.add_argument("--verbose", action="store_true", default=None, help="Print the merged settings and debug logs")


def _run_config(command: str, args: argparse.Namespace, **flags) -> RunConfig:
    flags.update(seed=args.seed, out=args.out, verbose=args.verbose)
    cfg = build_run_config(command, flags, args.config)
    if cfg.verbose:
        logging.basicConfig(level=logging.DEBUG, format="%(message)s", handlers=[RichHandler(console=console)])
        console.print(f"[dim]{cfg.model_dump_json()}[/dim]")
    return cfg


def _with_grid(cfg: RunConfig, family: str) -> RunConfig:
    """Fill sweep parameters the flags and config file left empty."""
    grid = DEFAULT_GRIDS.get(family, {})
    update = {}
    if not cfg.p_list and "p" in grid:
        update["p_list"] = list(grid["p"])
    if not cfg.k_values and "k" in grid:
        update["k_values"] = list(grid["k"])
    if not cfg.r_values and "r" in grid:
        update["r_values"] = list(grid["r"])
    return cfg.model_copy(update=update)


def _split(text: str | None) -> list[str] | None:
    if text is None:
        return None
    return [part.strip() for part in text.split(",") if part.strip()]


def _ints(text: str | None, geometric: bool = False) -> list[int] | None:
    from graphpoincare.services.utils import parse_int_list

    return None if text is None else parse_int_list(text, geometric)


@register_command("Run a seeded property suite (thm21, cor23, thm41, doubling)", "verify")
def verify(argv: list[str]) -> int:
    """Run one property suite and print the summary JSON."""
    from graphpoincare.services.suites import SUITES, run_suite

    parser = argparse.ArgumentParser(prog="graphpoincare verify")
    parser.add_argument("--suite", required=True, choices=SUITES)
    parser.add_argument("--trials", type=int)
    parser.add_argument("--tolerance", type=float)
    parser.add_argument("--workers", type=int)
    _common_flags(parser)
    args = parser.parse_args(argv)

    cfg = _run_config("verify", args, trials=args.trials, tolerance=args.tolerance, workers=args.workers)
    console.print(f"[cyan]Step 1:[/cyan] Running suite {args.suite} ({cfg.trials} trials, seed {cfg.seed})...")
    summary = run_suite(args.suite, cfg.trials, cfg.seed, cfg.workers, tolerance=cfg.tolerance)
    emit(summary)

    if not summary.passed:
        console.print(f"[red]{summary.failures} of {summary.trials} trials failed[/red]")
        return EXIT_FAIL
    console.print(f"[bold green]Suite {args.suite} complete![/bold green] {summary.skipped} skipped")
    return EXIT_PASS


@register_command("Reproduce an experiment family (ex31, ex32, prop34, thm35, flow)", "reproduce")
def reproduce(argv: list[str]) -> int:
    """Write {family}.csv and {family}.verdict.json and print the verdict."""
    parser = argparse.ArgumentParser(prog="graphpoincare reproduce")
    parser.add_argument("family", choices=FAMILIES)
    parser.add_argument("--p", help="Comma-separated exponents, e.g. 1,2,inf")
    parser.add_argument("--k", help="k values: 8,16,32 or a..b")
    parser.add_argument("--r", help="Radii: 4,5,6 or a..b")
    parser.add_argument("--geometric", action="store_true", help="Ranges double instead of stepping by one")
    parser.add_argument("--tree", help="Tree family for prop34/thm35: homogeneous_tree:b or random_tree:b[,branching]")
    parser.add_argument("--measure", choices=("counting", "uniform"), help="Measure for prop34/thm35")
    parser.add_argument("--trials", type=int)
    parser.add_argument("--tolerance", type=float)
    parser.add_argument("--workers", type=int)
    _common_flags(parser)
    args = parser.parse_args(argv)

    cfg = _run_config(
        "reproduce",
        args,
        p_list=_split(args.p),
        k_values=_ints(args.k, args.geometric),
        r_values=_ints(args.r, args.geometric),
        trials=args.trials,
        tolerance=args.tolerance,
        workers=args.workers,
    )
    cfg = _with_grid(cfg, args.family)

    if args.family == "ex31":
        from graphpoincare.services.grid_chords import reproduce as run
    elif args.family == "ex32":
        from graphpoincare.services.harmonic_line import reproduce as run
    elif args.family == "flow":
        from graphpoincare.services.flows import reproduce as run
    elif args.family == "prop34":
        from graphpoincare.services.extremal import reproduce_prop34

        def run(c):
            return reproduce_prop34(c, args.tree, args.measure)
    else:
        from graphpoincare.services.extremal import reproduce_thm35

        def run(c):
            return reproduce_thm35(c, args.tree, args.measure)

    verdict = run(cfg)
    emit(verdict)
    return EXIT_PASS if verdict.passed else EXIT_FAIL


def _graph_flags(parser: argparse.ArgumentParser) -> None:
    source = parser.add_mutually_exclusive_group(required=True)
    source.add_argument("--graph", help="Edge-list file")
    source.add_argument("--family", help="Generated family, e.g. homogeneous_tree:2,6")
    parser.add_argument("--measure", default="counting", help="counting, inverse:<vertex> or a measure JSON file")
    parser.add_argument("--restarts", type=int)
    parser.add_argument("--iterations", type=int)


@register_command("Estimate or certify the optimal constant of one region", "estimate")
def estimate(argv: list[str]) -> int:
    """Print a ConstantEstimate; p = 2 is certified when the region is small enough."""
    from graphpoincare.calculus import Exponent
    from graphpoincare.services import constants

    parser = argparse.ArgumentParser(prog="graphpoincare estimate")
    _graph_flags(parser)
    region = parser.add_mutually_exclusive_group(required=True)
    region.add_argument("--ball", help="center:radius")
    region.add_argument("--region", help="Comma-separated vertex ids")
    parser.add_argument("--p", default="2", help="Exponent, e.g. 2 or inf")
    _common_flags(parser)
    args = parser.parse_args(argv)

    cfg = _run_config("estimate", args, restarts=args.restarts, iterations=args.iterations)
    g = constants.load_graph(args.graph, args.family, cfg.seed)
    m = constants.load_measure(args.measure, g)
    e = constants.parse_region(g, args.ball, args.region)
    console.print(f"[cyan]Step 1:[/cyan] Estimating on {len(e)} vertices (diam {e.diam}, p={args.p})...")
    result = constants.estimate(
        g,
        e,
        m,
        Exponent.parse(args.p),
        seed=cfg.seed,
        restarts=cfg.restarts,
        iterations=cfg.iterations,
    )
    emit(result)
    return EXIT_PASS


@register_command("Estimate constants on growing balls around a center", "sweep")
def sweep(argv: list[str]) -> int:
    """Write sweep.csv and sweep.verdict.json and print the verdict."""
    from graphpoincare.services import constants

    parser = argparse.ArgumentParser(prog="graphpoincare sweep")
    _graph_flags(parser)
    parser.add_argument("--center", type=int, required=True)
    parser.add_argument("--r", required=True, help="Radii: 1,2,3 or a..b")
    parser.add_argument("--p", help="Comma-separated exponents")
    _common_flags(parser)
    args = parser.parse_args(argv)

    cfg = _run_config(
        "sweep",
        args,
        p_list=_split(args.p),
        r_values=_ints(args.r),
        restarts=args.restarts,
        iterations=args.iterations,
    )
    if not cfg.p_list:
        cfg = cfg.model_copy(update={"p_list": ["2"]})
    g = constants.load_graph(args.graph, args.family, cfg.seed)
    if args.center not in g.index:
        raise InputError(f"Center {args.center} is not a vertex")
    verdict = constants.run_sweep(cfg, g, args.center, constants.load_measure(args.measure, g))
    emit(verdict)
    return EXIT_PASS if verdict.passed else EXIT_FAIL


def run_command(cmd: str, argv: list[str]) -> int:
    """Dispatch one command and map errors to exit codes."""
    commands = {command: func for _, command, func in COMMANDS}
    if cmd not in commands:
        console.print(f"[red]Unknown command:[/red] {cmd}")
        console.print("Run with --help for usage.")
        return EXIT_USAGE

    try:
        return commands[cmd](argv)
    except SystemExit as e:
        return EXIT_USAGE if e.code else EXIT_PASS
    except (InputError, ValidationError) as e:
        console.print(f"[red]Invalid input:[/red] {e}")
        return EXIT_USAGE
    except BudgetError as e:
        console.print(f"[red]Budget exceeded ({e.budget}):[/red] {e}")
        return EXIT_BUDGET
    except WindowError as e:
        console.print(f"[red]Window too small:[/red] {e}")
        return EXIT_BUDGET
    except PoincareError as e:
        console.print(f"[red]Error:[/red] {e}")
        return EXIT_FAIL


def main():
    """Main entry point."""
    if len(sys.argv) < 2 or sys.argv[1] in ("--help", "-h", "help"):
        sys.exit(show_help())

    if sys.argv[1] == "--version":
        print(__version__)
        sys.exit(EXIT_PASS)

    sys.exit(run_command(sys.argv[1], sys.argv[2:]))


if __name__ == "__main__":
    main()
