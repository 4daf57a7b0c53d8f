"""Amplitude sweeps and the matched-probability crossover analysis."""

from __future__ import annotations

import csv
import io
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Optional, Sequence, TextIO

import numpy as np
from scipy.optimize import brentq

from .errors import DomainError
from .schemes import (
    SchemeParams,
    VariantLike,
    new_closed_form_arrays,
    new_simulate,
    original_closed_form_arrays,
    original_simulate,
)

SCHEMES: tuple[str, ...] = ("original_even", "original_odd", "new")
SCHEME_ALIASES = {"even": "original_even", "odd": "original_odd", "new": "new"}
COLUMNS = {"original_even": ("F_even", "P_even"), "original_odd": ("F_odd", "P_odd"), "new": ("F_new", "P_new")}
ORIGINALS = ("original_even", "original_odd")

# range searched for the original-scheme amplitude matching a given probability
MATCH_ALPHA_MIN = 1e-4
MATCH_SAMPLES = 4000


def parse_schemes(names: Sequence[str] | str) -> tuple[str, ...]:
    """Normalize a scheme selection into canonical order."""
    if isinstance(names, str):
        names = [n for n in names.replace(" ", "").split(",") if n]
    chosen = set()
    for n in names:
        key = SCHEME_ALIASES.get(n, n)
        if key not in SCHEMES:
            raise DomainError(f"unknown scheme {n!r}; choose from {', '.join(SCHEMES)}")
        chosen.add(key)
    if not chosen:
        raise DomainError("no schemes selected")
    return tuple(s for s in SCHEMES if s in chosen)


@dataclass(frozen=True)
class SweepSpec:
    alpha_min: float = 0.1
    alpha_max: float = 2.5
    points: int = 500
    epsilon: float = 0.1
    eta_total: float = 0.5
    detector_loss: float = 0.5
    schemes: tuple[str, ...] = SCHEMES
    variant: VariantLike = "adjudicated"

    def __post_init__(self):
        if int(self.points) != self.points or self.points < 2:
            raise DomainError(f"need at least 2 grid points, got {self.points}")
        if not (math.isfinite(self.alpha_min) and math.isfinite(self.alpha_max)):
            raise DomainError("alpha bounds must be finite")
        if not 0 < self.alpha_min < self.alpha_max:
            raise DomainError(f"need 0 < alpha_min < alpha_max, got [{self.alpha_min}, {self.alpha_max}]")
        object.__setattr__(self, "points", int(self.points))
        object.__setattr__(self, "schemes", parse_schemes(self.schemes))
        # validates the fixed parameters once
        self.params(self.alpha_min)

    def params(self, alpha: float) -> SchemeParams:
        return SchemeParams(float(alpha), self.epsilon, self.eta_total, self.detector_loss)

    def alpha_grid(self) -> np.ndarray:
        return np.linspace(self.alpha_min, self.alpha_max, self.points)


def closed_form_curves(spec: SweepSpec, alphas=None, schemes=None) -> dict[str, tuple[np.ndarray, np.ndarray]]:
    """``{scheme: (F, P)}`` from the closed forms on ``alphas``."""
    alphas = spec.alpha_grid() if alphas is None else np.asarray(alphas, dtype=float)
    out = {}
    for s in schemes or spec.schemes:
        if s == "new":
            f, p = new_closed_form_arrays(alphas, spec.epsilon, spec.eta_total, spec.detector_loss, spec.variant)
        else:
            parity = s.split("_", 1)[1]
            f, p = original_closed_form_arrays(
                alphas, spec.epsilon, spec.eta_total, spec.detector_loss, parity, spec.variant
            )
        out[s] = (np.broadcast_to(f, alphas.shape).astype(float), np.broadcast_to(p, alphas.shape).astype(float))
    return out


def _engine_row(args) -> tuple[float, ...]:
    params, schemes = args
    row = []
    for s in schemes:
        r = new_simulate(params) if s == "new" else original_simulate(params, s.split("_", 1)[1])
        row.extend((r.fidelity, r.probability))
    return tuple(row)


def engine_curves(spec: SweepSpec, workers: int = 1) -> dict[str, tuple[np.ndarray, np.ndarray]]:
    """Engine values on the sweep grid; rows come back in grid order."""
    tasks = [(spec.params(a), spec.schemes) for a in spec.alpha_grid()]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(_engine_row, tasks, chunksize=max(1, len(tasks) // (4 * workers))))
    else:
        rows = [_engine_row(t) for t in tasks]
    table = np.array(rows, dtype=float).reshape(len(tasks), 2 * len(spec.schemes))
    return {s: (table[:, 2 * k], table[:, 2 * k + 1]) for k, s in enumerate(spec.schemes)}


def fmt(x: float) -> str:
    return f"{x:.16e}"


def sweep_table(spec: SweepSpec, engine: bool = False, workers: int = 1) -> tuple[list[str], np.ndarray]:
    """Header and data matrix of the sweep CSV."""
    alphas = spec.alpha_grid()
    header = ["alpha"]
    cols = [alphas]
    curves = closed_form_curves(spec, alphas)
    for s in spec.schemes:
        header.extend(COLUMNS[s])
        cols.extend(curves[s])
    if engine:
        eng = engine_curves(spec, workers)
        for s in spec.schemes:
            header.extend(f"{c}_engine" for c in COLUMNS[s])
            cols.extend(eng[s])
    return header, np.column_stack(cols)


def write_csv(header: Sequence[str], rows, stream: TextIO) -> None:
    writer = csv.writer(stream, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([v if isinstance(v, str) else fmt(v) for v in row])


def csv_text(header, rows) -> str:
    buf = io.StringIO()
    write_csv(header, rows, buf)
    return buf.getvalue()


# --- parametric comparison ---------------------------------------------------


def parametric_rows(spec: SweepSpec) -> list[tuple[str, float, float, float]]:
    """Long-format ``(scheme, alpha, P, F)`` rows, scheme-major."""
    alphas = spec.alpha_grid()
    curves = closed_form_curves(spec, alphas)
    rows = []
    for s in spec.schemes:
        f, p = curves[s]
        rows.extend((s, float(a), float(pp), float(ff)) for a, pp, ff in zip(alphas, p, f))
    return rows


def _match_alpha(spec: SweepSpec, scheme: str, target: float, grid: np.ndarray, logp: np.ndarray) -> Optional[float]:
    """Smallest amplitude where ``scheme`` reaches herald probability ``target``."""
    if not target > 0:
        return None
    lt = math.log(target)
    diff = logp - lt
    hits = np.flatnonzero(diff == 0.0)
    sign_change = np.flatnonzero(np.sign(diff[:-1]) * np.sign(diff[1:]) < 0)
    candidates = []
    if hits.size:
        candidates.append(grid[hits[0]])
    if sign_change.size:
        k = sign_change[0]

        def g(a):
            return math.log(closed_form_curves(spec, np.array([a]), (scheme,))[scheme][1][0]) - lt

        candidates.append(brentq(g, grid[k], grid[k + 1], xtol=1e-15, rtol=4 * np.finfo(float).eps))
    return min(candidates) if candidates else None


@dataclass
class CrossoverReport:
    """Matched-probability comparison of the new scheme to the best original parity.

    ``advantage[i]`` is ``F_new - max_parity F_orig`` at equal herald
    probability for the new-scheme amplitude ``alphas[i]`` (NaN where no
    original amplitude attains that probability). ``alpha_star`` is the
    first point where the advantage turns from positive to non-positive,
    linearly interpolated; ``None`` if that never happens on the grid.
    """

    alphas: np.ndarray
    advantage: np.ndarray
    matched_alpha: dict[str, np.ndarray] = field(default_factory=dict)
    alpha_star: Optional[float] = None

    def as_dict(self) -> dict:
        finite = self.advantage[np.isfinite(self.advantage)]
        return {
            "alpha_star": self.alpha_star,
            "grid_points": int(self.alphas.size),
            "alpha_min": float(self.alphas[0]),
            "alpha_max": float(self.alphas[-1]),
            "matched_points": int(finite.size),
            "max_advantage": float(finite.max()) if finite.size else None,
            "min_advantage": float(finite.min()) if finite.size else None,
        }


def find_crossover(spec: SweepSpec) -> Optional[CrossoverReport]:
    """Dominance crossover, or ``None`` unless the new scheme and an original parity are selected."""
    if "new" not in spec.schemes or not any(s in spec.schemes for s in ORIGINALS):
        return None
    alphas = spec.alpha_grid()
    f_new, p_new = closed_form_curves(spec, alphas, ("new",))["new"]
    match_grid = np.geomspace(MATCH_ALPHA_MIN, 2.0 * spec.alpha_max, MATCH_SAMPLES)
    best = np.full(alphas.shape, -np.inf)
    matched = {}
    for s in ORIGINALS:
        if s not in spec.schemes:
            continue
        _, p_grid = closed_form_curves(spec, match_grid, (s,))[s]
        with np.errstate(divide="ignore"):
            logp = np.log(p_grid)
        a_match = np.array([_match_alpha(spec, s, t, match_grid, logp) or np.nan for t in p_new])
        matched[s] = a_match
        ok = np.isfinite(a_match)
        if ok.any():
            f_orig = closed_form_curves(spec, a_match[ok], (s,))[s][0]
            best[ok] = np.maximum(best[ok], f_orig)
    advantage = np.where(np.isfinite(best), f_new - best, np.nan)

    alpha_star = None
    for i in range(alphas.size - 1):
        d0, d1 = advantage[i], advantage[i + 1]
        if d0 > 0 and d1 <= 0:
            alpha_star = float(alphas[i] + (alphas[i + 1] - alphas[i]) * d0 / (d0 - d1))
            break
    return CrossoverReport(alphas, advantage, matched, alpha_star)
