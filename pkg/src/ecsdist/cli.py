"""Command-line front end: ``sweep``, ``parametric`` and ``validate``.

Exit status is 0 on success, 1 on a usage error and 2 when validation
finds a residual above tolerance.
"""

from __future__ import annotations

import argparse
import configparser
import json
import sys
from contextlib import contextmanager
from pathlib import Path
from typing import Optional, Sequence

from .errors import EcsError
from .schemes import eta_total_from_one_sided
from .sweep import SCHEMES, SweepSpec, csv_text, find_crossover, parametric_rows, sweep_table
from .validation import format_report, run_validation

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_BREACH = 2

DEFAULTS = dict(
    alpha_min=0.1,
    alpha_max=2.5,
    points=500,
    epsilon=0.1,
    eta_total=0.5,
    detector_loss=0.5,
    schemes=",".join(SCHEMES),
    variant="adjudicated",
    workers=1,
)
FLOAT_KEYS = ("alpha_min", "alpha_max", "epsilon", "eta_total", "eta_one_sided", "detector_loss")
INT_KEYS = ("points", "workers")
CONFIG_KEYS = FLOAT_KEYS + INT_KEYS + ("schemes", "variant", "engine", "preset")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def load_config(path: str) -> dict:
    """Read a flat ``key = value`` file; keys may use dashes or underscores."""
    cp = configparser.ConfigParser(interpolation=None)
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise UsageError(f"cannot read config {path}: {exc.strerror}") from exc
    try:
        cp.read_string("[config]\n" + text)
    except configparser.Error as exc:
        raise UsageError(f"malformed config {path}: {exc}") from exc
    out = {}
    for key, value in cp["config"].items():
        name = key.replace("-", "_")
        if name not in CONFIG_KEYS:
            raise UsageError(f"unknown config key {key!r}")
        try:
            if name in FLOAT_KEYS:
                out[name] = float(value)
            elif name in INT_KEYS:
                out[name] = int(value)
            elif name == "engine":
                out[name] = cp["config"].getboolean(key)
            else:
                out[name] = value
        except ValueError as exc:
            raise UsageError(f"bad value for {key}: {value!r}") from exc
    return out


def _add_physics(p: argparse.ArgumentParser) -> None:
    p.add_argument("--alpha-min", type=float, help="smallest amplitude (default 0.1)")
    p.add_argument("--alpha-max", type=float, help="largest amplitude (default 2.5)")
    p.add_argument("--points", type=int, help="grid points (default 500)")
    p.add_argument("--epsilon", type=float, help="tap-off fraction (default 0.1)")
    loss = p.add_mutually_exclusive_group()
    loss.add_argument("--eta-total", type=float, help="loss between the parties (default 0.5)")
    loss.add_argument("--eta-one-sided", type=float, help="loss per half-link")
    p.add_argument("--detector-loss", type=float, help="herald detector loss (default 0.5)")
    p.add_argument("--schemes", help="comma list from even,odd,new (default all)")
    p.add_argument("--variant", choices=("main-text", "appendix", "adjudicated"), help="closed-form variant")
    p.add_argument("--out", help="output CSV path (default stdout)")
    p.add_argument("--config", help="key=value file; flags take precedence")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="ecsdist", description="Entangled coherent state distribution simulator.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    sw = sub.add_parser("sweep", help="fidelity and probability against amplitude")
    _add_physics(sw)
    sw.add_argument("--engine", action="store_true", default=None, help="append engine columns")
    sw.add_argument("--workers", type=int, help="processes for engine rows (default 1)")

    pm = sub.add_parser("parametric", help="(P, F) curves and the matched-probability crossover")
    _add_physics(pm)

    va = sub.add_parser("validate", help="adjudicate formula variants and cross-check all engines")
    va.add_argument("--preset", choices=("smoke", "full"), help="grid size (default smoke)")
    va.add_argument("--out", help="write the JSON report here")
    va.add_argument("--config", help="key=value file; flags take precedence")
    return parser


def resolve_settings(args: argparse.Namespace) -> dict:
    """Merge defaults, config file and explicit flags (in rising precedence)."""
    config = load_config(args.config) if getattr(args, "config", None) else {}
    flags = {k: v for k, v in vars(args).items() if v is not None and k not in ("command", "config", "out")}
    if "eta_total" in config and "eta_one_sided" in config:
        raise UsageError("config sets both eta_total and eta_one_sided")
    if "eta_total" in flags or "eta_one_sided" in flags:
        config.pop("eta_total", None)
        config.pop("eta_one_sided", None)
    settings = {**DEFAULTS, **config, **flags}
    one_sided = settings.pop("eta_one_sided", None)
    if one_sided is not None:
        if not 0 <= one_sided < 1:
            raise UsageError(f"eta_one_sided must lie in [0, 1), got {one_sided}")
        settings["eta_total"] = eta_total_from_one_sided(one_sided)
    return settings


def spec_from_settings(s: dict) -> SweepSpec:
    return SweepSpec(
        alpha_min=s["alpha_min"],
        alpha_max=s["alpha_max"],
        points=s["points"],
        epsilon=s["epsilon"],
        eta_total=s["eta_total"],
        detector_loss=s["detector_loss"],
        schemes=s["schemes"],
        variant=s["variant"],
    )


@contextmanager
def _output(path: Optional[str]):
    if path is None:
        yield sys.stdout
        return
    try:
        fh = open(path, "w", encoding="utf-8", newline="")
    except OSError as exc:
        raise UsageError(f"cannot write {path}: {exc.strerror}") from exc
    with fh:
        yield fh


def cmd_sweep(args, settings) -> int:
    spec = spec_from_settings(settings)
    header, rows = sweep_table(spec, engine=bool(settings.get("engine")), workers=settings["workers"])
    with _output(args.out) as fh:
        fh.write(csv_text(header, rows))
    return EXIT_OK


def cmd_parametric(args, settings) -> int:
    spec = spec_from_settings(settings)
    text = csv_text(["scheme", "alpha", "P", "F"], parametric_rows(spec))
    report = find_crossover(spec)
    with _output(args.out) as fh:
        fh.write(text)
    if report is not None:
        star = "none" if report.alpha_star is None else f"{report.alpha_star:.16e}"
        print(f"crossover alpha_star={star}", file=sys.stderr if args.out is None else sys.stdout)
        if args.out is not None:
            sidecar = Path(args.out).with_suffix(".crossover.json")
            sidecar.write_text(json.dumps(report.as_dict(), indent=2) + "\n", encoding="utf-8")
    return EXIT_OK


def cmd_validate(args, settings) -> int:
    report = run_validation(settings.get("preset") or "smoke")
    print(format_report(report))
    if args.out is not None:
        with _output(args.out) as fh:
            fh.write(json.dumps(report.as_dict(), indent=2) + "\n")
    return EXIT_OK if report.passed else EXIT_BREACH


COMMANDS = {"sweep": cmd_sweep, "parametric": cmd_parametric, "validate": cmd_validate}


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        settings = resolve_settings(args)
        return COMMANDS[args.command](args, settings)
    except (UsageError, EcsError) as exc:
        print(f"ecsdist: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
