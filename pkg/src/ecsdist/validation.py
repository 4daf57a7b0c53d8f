"""Three-way validation: closed forms, coherent-dyadic engine, Fock oracle.

The engine is taken as ground truth for choosing between the two stated
versions of each ambiguous formula. Every combination of choices is scored
by its worst residual against the engine over a parameter grid; exactly one
combination must fall inside tolerance.
"""

from __future__ import annotations

import itertools
import time
from dataclasses import dataclass, field
from typing import Optional

from . import fock
from .schemes import (
    ADJUDICATED,
    AMBIGUOUS_FORMULAS,
    VARIANTS,
    FormulaChoice,
    SchemeParams,
    new_closed_form,
    new_simulate,
    original_closed_form,
    original_simulate,
)

ENGINE_TOL = 1e-9
ORACLE_TOL = 1e-6
SCHEME_KEYS = ("original_even", "original_odd", "new")

FULL_GRID = dict(
    alpha=(0.5, 1.0, 1.5, 2.0),
    epsilon=(0.05, 0.1, 0.2),
    eta_total=(0.2, 0.5, 0.8),
    detector_loss=(0.0, 0.5, 0.9),
)
SMOKE_GRID = dict(
    alpha=(0.5, 1.5),
    epsilon=(0.1,),
    eta_total=(0.2, 0.5),
    detector_loss=(0.0, 0.9),
)

# (scheme key, params) pairs checked against the Fock oracle
ORACLE_POINTS: tuple[tuple[str, SchemeParams], ...] = (
    ("original_even", SchemeParams(1.0, 0.1, 0.5, 0.5)),
    ("original_odd", SchemeParams(1.0, 0.1, 0.5, 0.5)),
    ("original_even", SchemeParams(2.0, 0.2, 0.8, 0.9)),
    ("original_odd", SchemeParams(0.5, 0.05, 0.2, 0.0)),
    ("new", SchemeParams(1.0, 0.1, 0.5, 0.5)),
    ("new", SchemeParams(2.0, 0.2, 0.8, 0.9)),
    ("new", SchemeParams(0.5, 0.05, 0.2, 0.0)),
    ("new", SchemeParams(1.5, 0.1, 0.5, 0.0)),
)
SMOKE_ORACLE_POINTS = (ORACLE_POINTS[0], ORACLE_POINTS[4])


def grid_points(grid: dict) -> list[SchemeParams]:
    keys = ("alpha", "epsilon", "eta_total", "detector_loss")
    return [SchemeParams(*vals) for vals in itertools.product(*(grid[k] for k in keys))]


def engine_values(p: SchemeParams) -> dict[str, tuple[float, float]]:
    out = {}
    for parity in ("even", "odd"):
        r = original_simulate(p, parity)
        out[f"original_{parity}"] = (r.fidelity, r.probability)
    r = new_simulate(p)
    out["new"] = (r.fidelity, r.probability)
    return out


def closed_values(p: SchemeParams, choice: FormulaChoice) -> dict[str, tuple[float, float]]:
    return {
        "original_even": original_closed_form(p, "even", choice),
        "original_odd": original_closed_form(p, "odd", choice),
        "new": new_closed_form(p, choice),
    }


def max_residuals(points, engine, choice: FormulaChoice) -> dict[str, float]:
    worst = dict.fromkeys(SCHEME_KEYS, 0.0)
    for p, eng in zip(points, engine):
        cf = closed_values(p, choice)
        for key in SCHEME_KEYS:
            res = max(abs(cf[key][0] - eng[key][0]), abs(cf[key][1] - eng[key][1]))
            worst[key] = max(worst[key], res)
    return worst


@dataclass
class VariantVerdict:
    formula: str
    winner: Optional[str]
    winner_residual: float
    loser_residual: float

    def as_dict(self) -> dict:
        return {
            "winner": self.winner,
            "winner_residual": self.winner_residual,
            "loser": None if self.winner is None else next(v for v in VARIANTS if v != self.winner),
            "loser_residual": self.loser_residual,
        }


@dataclass
class Adjudication:
    choice: Optional[FormulaChoice]
    verdicts: dict[str, VariantVerdict]
    combination_residuals: dict[tuple[str, ...], float]
    tolerance: float

    @property
    def resolved(self) -> bool:
        return self.choice is not None and all(
            v.winner is not None and v.winner_residual < self.tolerance <= v.loser_residual for v in self.verdicts.values()
        )


def adjudicate(points: list[SchemeParams], engine: list[dict], tol: float = ENGINE_TOL) -> Adjudication:
    """Score all ``2**5`` formula combinations against engine values."""
    scores = {}
    for combo in itertools.product(VARIANTS, repeat=len(AMBIGUOUS_FORMULAS)):
        choice = FormulaChoice(*combo)
        scores[combo] = max(max_residuals(points, engine, choice).values())
    passing = [c for c, s in scores.items() if s < tol]
    if len(passing) != 1:
        verdicts = {name: VariantVerdict(name, None, float("nan"), float("nan")) for name in AMBIGUOUS_FORMULAS}
        return Adjudication(None, verdicts, scores, tol)
    best = FormulaChoice(*passing[0])
    verdicts = {}
    for name in AMBIGUOUS_FORMULAS:
        flipped = best.flipped(name)
        verdicts[name] = VariantVerdict(
            formula=name,
            winner=getattr(best, name),
            winner_residual=scores[passing[0]],
            loser_residual=scores[tuple(flipped.as_dict().values())],
        )
    return Adjudication(best, verdicts, scores, tol)


@dataclass
class OracleCheck:
    scheme: str
    params: SchemeParams
    engine: tuple[float, float]
    oracle: tuple[float, float]
    truncation_bound: float
    tolerance: float
    seconds: float

    @property
    def residual(self) -> float:
        return max(abs(self.engine[0] - self.oracle[0]), abs(self.engine[1] - self.oracle[1]))

    @property
    def passed(self) -> bool:
        return self.residual <= self.tolerance

    def as_dict(self) -> dict:
        p = self.params
        return {
            "scheme": self.scheme,
            "alpha": p.alpha,
            "epsilon": p.epsilon,
            "eta_total": p.eta_total,
            "detector_loss": p.detector_loss,
            "engine": {"fidelity": self.engine[0], "probability": self.engine[1]},
            "oracle": {"fidelity": self.oracle[0], "probability": self.oracle[1]},
            "residual": self.residual,
            "truncation_bound": self.truncation_bound,
            "tolerance": self.tolerance,
            "passed": self.passed,
            "seconds": self.seconds,
        }


def oracle_check(scheme: str, p: SchemeParams, cutoff: int = fock.DEFAULT_CUTOFF) -> OracleCheck:
    start = time.perf_counter()
    if scheme == "new":
        eng = new_simulate(p)
        orc = fock.oracle_run(p, "new", cutoff=cutoff)
    else:
        parity = scheme.split("_", 1)[1]
        eng = original_simulate(p, parity)
        orc = fock.oracle_run(p, "original", parity, cutoff=cutoff)
    return OracleCheck(
        scheme=scheme,
        params=p,
        engine=(eng.fidelity, eng.probability),
        oracle=(orc.fidelity, orc.probability),
        truncation_bound=orc.truncation_bound,
        tolerance=max(ORACLE_TOL, orc.truncation_bound),
        seconds=time.perf_counter() - start,
    )


@dataclass
class ValidationReport:
    preset: str
    adjudication: Adjudication
    engine_residuals: dict[str, float]
    oracle_checks: list[OracleCheck] = field(default_factory=list)
    seconds: float = 0.0

    @property
    def matches_builtin(self) -> bool:
        return self.adjudication.choice == ADJUDICATED

    @property
    def failures(self) -> list[str]:
        out = []
        if not self.adjudication.resolved:
            out.append("adjudication did not single out one variant per formula")
        elif not self.matches_builtin:
            out.append(f"adjudicated choice {self.adjudication.choice} differs from the built-in ADJUDICATED")
        for key, res in self.engine_residuals.items():
            if not res < self.adjudication.tolerance:
                out.append(f"closed form vs engine for {key}: residual {res:.3e}")
        for chk in self.oracle_checks:
            if not chk.passed:
                out.append(f"oracle vs engine for {chk.scheme} at alpha={chk.params.alpha}: residual {chk.residual:.3e}")
        return out

    @property
    def passed(self) -> bool:
        return not self.failures

    def as_dict(self) -> dict:
        adj = self.adjudication
        return {
            "preset": self.preset,
            "tolerance": adj.tolerance,
            "passed": self.passed,
            "failures": self.failures,
            "adjudicated_choice": None if adj.choice is None else adj.choice.as_dict(),
            "matches_builtin": self.matches_builtin,
            "formulas": {name: v.as_dict() for name, v in adj.verdicts.items()},
            "engine_vs_closed_form": self.engine_residuals,
            "oracle": [c.as_dict() for c in self.oracle_checks],
            "seconds": self.seconds,
        }


def run_validation(preset: str = "smoke", oracle_cutoff: int = fock.DEFAULT_CUTOFF) -> ValidationReport:
    if preset not in ("smoke", "full"):
        raise ValueError(f"unknown preset {preset!r}")
    start = time.perf_counter()
    points = grid_points(FULL_GRID if preset == "full" else SMOKE_GRID)
    engine = [engine_values(p) for p in points]
    adj = adjudicate(points, engine)
    residuals = max_residuals(points, engine, adj.choice or ADJUDICATED)
    checks = [oracle_check(s, p, oracle_cutoff) for s, p in (ORACLE_POINTS if preset == "full" else SMOKE_ORACLE_POINTS)]
    return ValidationReport(preset, adj, residuals, checks, time.perf_counter() - start)


def format_report(report: ValidationReport) -> str:
    lines = [f"validation preset: {report.preset}"]
    for name, v in report.adjudication.verdicts.items():
        d = v.as_dict()
        lines.append(
            f"  {name:22s} winner={d['winner']!s:10s} residual={v.winner_residual:.3e}  "
            f"loser={d['loser']!s:10s} residual={v.loser_residual:.3e}"
        )
    for key, res in report.engine_residuals.items():
        lines.append(f"  closed form vs engine  {key:14s} max residual {res:.3e}")
    for chk in report.oracle_checks:
        lines.append(
            f"  oracle vs engine       {chk.scheme:14s} alpha={chk.params.alpha:<4g} residual {chk.residual:.3e} "
            f"(tol {chk.tolerance:.1e}, {chk.seconds:.1f}s)"
        )
    lines.append("PASS" if report.passed else "FAIL: " + "; ".join(report.failures))
    return "\n".join(lines)
