"""Command-line entry point: ``noma-harq <command> [options]``."""

from __future__ import annotations

import argparse
import os
import sys

from . import __version__
from .allocation import (
    InfeasibleError,
    PowerMethod,
    Scheme,
    solve_power_slot2_ue1,
    solve_rate_slot1_ue1,
    solve_rate_slot1_ue2,
    solve_rate_slot2_ue1,
)
from .errormodel import CodeParams
from .fading import ChannelDraw, FadingParams, LinkConfig
from .selftest import run_selftest
from .sweeps import DEFAULT_AXES, Experiment, Method, SweepSpec, default_base, emit_csv, render_csv, run_sweep

SEED_ENV = "NOMA_HARQ_SEED"
FIGURES = [e.value for e in Experiment]

# flag name -> (type, help)
COMMON_FLAGS = {
    "l": (int, "codeword length in channel uses"),
    "theta1": (float, "UE1 error budget"),
    "theta2": (float, "UE2 error budget"),
    "p1_db": (float, "UE1 transmit power, dB above noise"),
    "p2_db": (float, "UE2 transmit power, dB above noise"),
    "lambda1": (float, "UE1 exponential gain rate"),
    "lambda2": (float, "UE2 exponential gain rate"),
    "trials": (int, "Monte Carlo trials per point"),
    "seed": (int, "root seed (falls back to $NOMA_HARQ_SEED, then 0)"),
    "out": (str, "output CSV path (stdout when omitted)"),
    "methods": (str, "comma-separated subset of " + ",".join(m.value for m in Method)),
    "workers": (int, "worker processes for Monte Carlo"),
    "rate": (float, "UE1 rate in npcu (fig4/fig5 base rate, solve-power target)"),
    "k_nats": (float, "information nats per codeword (fig6)"),
    "grid": (str, "comma-separated sweep grid overriding the default"),
    "g1": (float, "UE1 channel gain (solve-rate, solve-power)"),
    "g2": (float, "UE2 channel gain (solve-rate, solve-power)"),
    "points": (int, "grid size per selftest check"),
}


class CliError(Exception):
    pass


def read_config_file(path: str) -> dict:
    """Flat ``key=value`` file; ``#`` starts a comment. Keys match the long
    flags with ``-`` or ``_``."""
    values = {}
    try:
        with open(path, encoding="utf-8") as fh:
            lines = fh.readlines()
    except OSError as exc:
        raise CliError(f"cannot read config file {path}: {exc.strerror or exc}") from exc
    for lineno, raw in enumerate(lines, 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise CliError(f"{path}:{lineno}: expected key=value")
        key, value = (part.strip() for part in line.split("=", 1))
        key = key.replace("-", "_")
        if key not in COMMON_FLAGS:
            raise CliError(f"{path}:{lineno}: unknown key {key!r}")
        kind = COMMON_FLAGS[key][0]
        try:
            values[key] = kind(value)
        except ValueError as exc:
            raise CliError(f"{path}:{lineno}: bad value for {key}: {value!r}") from exc
    return values


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="noma-harq",
        description="Error-constrained NOMA-HARQ analysis and simulation.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    commands = FIGURES + ["solve-rate", "solve-power", "selftest"]
    for name in commands:
        p = sub.add_parser(name)
        p.add_argument("--config", help="key=value file mirroring the flags; flags win")
        for flag, (kind, help_text) in COMMON_FLAGS.items():
            p.add_argument("--" + flag.replace("_", "-"), dest=flag, type=kind, default=None,
                           help=help_text)
    return parser


def resolve_options(args: argparse.Namespace) -> dict:
    opts = read_config_file(args.config) if args.config else {}
    for flag in COMMON_FLAGS:
        value = getattr(args, flag)
        if value is not None:
            opts[flag] = value
    if "seed" not in opts:
        env = os.environ.get(SEED_ENV)
        try:
            opts["seed"] = int(env) if env else 0
        except ValueError as exc:
            raise CliError(f"{SEED_ENV} must be an integer, got {env!r}") from exc
    return opts


def link_config(opts: dict, base: LinkConfig | None = None) -> LinkConfig:
    base = base or LinkConfig()
    fading = FadingParams(opts.get("lambda1", base.fading.lambda1),
                          opts.get("lambda2", base.fading.lambda2))
    config = base.replace(
        p1_db=opts.get("p1_db", base.p1_db),
        p2_db=opts.get("p2_db", base.p2_db),
        fading=fading,
        theta1=opts.get("theta1", base.theta1),
        theta2=opts.get("theta2", base.theta2),
    )
    if "l" in opts:
        config = config.with_blocklength(opts["l"])
    return config


def _parse_methods(text: str | None):
    if text is None:
        return tuple(Method)
    names = [t.strip() for t in text.split(",") if t.strip()]
    try:
        return tuple(Method(n.replace("-", "_")) for n in names)
    except ValueError as exc:
        raise CliError(f"unknown method in {text!r}; choose from "
                       + ",".join(m.value for m in Method)) from exc


def _parse_grid(text: str):
    try:
        return tuple(float(t) for t in text.split(",") if t.strip())
    except ValueError as exc:
        raise CliError(f"bad grid {text!r}") from exc


def figure_spec(experiment: Experiment, opts: dict) -> SweepSpec:
    base = default_base(experiment, rate=opts.get("rate"), k_nats=opts.get("k_nats"))
    axis, grid = DEFAULT_AXES[experiment]
    if "grid" in opts:
        grid = _parse_grid(opts["grid"])
    return SweepSpec(
        experiment,
        base=link_config(opts, base),
        axis=axis,
        grid=grid,
        trials=opts.get("trials", 100_000),
        seed=opts["seed"],
        methods=_parse_methods(opts.get("methods")),
        workers=opts.get("workers", 1),
    )


def _draw(opts: dict) -> ChannelDraw:
    return ChannelDraw(opts.get("g1", 1.0), opts.get("g2", 1.0))


def _emit_lines(lines: list[str], opts: dict) -> None:
    text = "\n".join(lines) + "\n"
    if "out" in opts:
        try:
            with open(opts["out"], "w", encoding="utf-8") as fh:
                fh.write(text)
        except OSError as exc:
            raise CliError(f"cannot write {opts['out']}: {exc.strerror or exc}") from exc
    else:
        sys.stdout.write(text)


def cmd_solve_rate(opts: dict) -> int:
    config = link_config(opts)
    draw = _draw(opts)
    lines = [f"g1={draw.g1!r}", f"g2={draw.g2!r}"]
    for name, fn in (("rate_ue1_slot1", lambda: solve_rate_slot1_ue1(config, draw)),
                     ("rate_ue2_slot1", lambda: solve_rate_slot1_ue2(config, draw)),
                     ("rate_ue1_slot2", lambda: solve_rate_slot2_ue1(config, draw))):
        try:
            sol = fn()
            lines.append(f"{name}={sol.rate!r} residual={sol.residual:.3e} method={sol.method.value}")
        except InfeasibleError as exc:
            lines.append(f"{name}=infeasible ({exc})")
    _emit_lines(lines, opts)
    return 0


def cmd_solve_power(opts: dict) -> int:
    rate = opts.get("rate", 1.0)
    config = link_config(opts).replace(code1=CodeParams(opts.get("l", 1000), rate))
    draw = _draw(opts)
    lines = [f"g1={draw.g1!r}", f"g2={draw.g2!r}", f"target_rate={rate!r}"]
    for scheme in Scheme:
        for method in PowerMethod:
            sol = solve_power_slot2_ue1(config, draw, rate, method, scheme)
            lines.append(f"power_{scheme.value}_{method.value}={sol.power!r} "
                         f"residual={sol.residual:.3e}")
    _emit_lines(lines, opts)
    return 0


def cmd_selftest(opts: dict) -> int:
    results = run_selftest(points=opts.get("points", 1000))
    _emit_lines([r.line() for r in results], opts)
    return 0 if all(r.passed for r in results) else 1


def cmd_figure(experiment: Experiment, opts: dict) -> int:
    result = run_sweep(figure_spec(experiment, opts))
    if "out" in opts:
        try:
            emit_csv(result, opts["out"])
        except OSError as exc:
            raise CliError(str(exc)) from exc
    else:
        sys.stdout.write(render_csv(result))
    failed = [row for row in result.rows if row.error]
    for row in failed:
        print(f"warning: {result.spec.axis}={row.axis_value:g}: {row.error}", file=sys.stderr)
    return 0


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        opts = resolve_options(args)
        if args.command == "solve-rate":
            return cmd_solve_rate(opts)
        if args.command == "solve-power":
            return cmd_solve_power(opts)
        if args.command == "selftest":
            return cmd_selftest(opts)
        return cmd_figure(Experiment(args.command), opts)
    except (CliError, ValueError, ArithmeticError, RuntimeError) as exc:
        print(f"noma-harq {args.command}: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
