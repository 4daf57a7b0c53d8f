"""Exact algebra of multimode coherent states.

A ket is stored as a weighted superposition of coherent *labels*; every
inner product is evaluated from the closed-form coherent overlap, so no
photon-number truncation is involved anywhere in this module.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .errors import DegenerateStateError, DimensionError, DomainError, SingularityError

LABEL_TOL = 1e-15


class NormSign(enum.Enum):
    PLUS = 1
    MINUS = -1

    @property
    def factor(self) -> int:
        return self.value

    @classmethod
    def coerce(cls, value) -> "NormSign":
        if isinstance(value, cls):
            return value
        if value in ("plus", "+", 1):
            return cls.PLUS
        if value in ("minus", "-", -1):
            return cls.MINUS
        raise DomainError(f"not a superposition sign: {value!r}")


@dataclass(frozen=True)
class CoherentLabel:
    """Per-mode complex amplitudes of a product coherent state."""

    amplitudes: tuple

    def __post_init__(self):
        amps = tuple(complex(a) for a in np.atleast_1d(np.asarray(self.amplitudes)).ravel())
        if len(amps) < 1:
            raise DimensionError("a coherent label needs at least one mode")
        if not all(math.isfinite(a.real) and math.isfinite(a.imag) for a in amps):
            raise DomainError("coherent amplitudes must be finite")
        object.__setattr__(self, "amplitudes", amps)

    @property
    def mode_count(self) -> int:
        return len(self.amplitudes)

    def as_array(self) -> np.ndarray:
        return np.array(self.amplitudes, dtype=complex)

    def is_close(self, other: "CoherentLabel", tol: float = LABEL_TOL) -> bool:
        if self.mode_count != other.mode_count:
            return False
        return bool(np.all(np.abs(self.as_array() - other.as_array()) <= tol))


def _as_rows(labels) -> np.ndarray:
    arr = np.asarray(labels, dtype=complex)
    if arr.ndim == 1:
        arr = arr[None, :]
    return arr


def overlap_matrix(left, right) -> np.ndarray:
    """Matrix of overlaps ``<left_i|right_j>`` between two stacks of labels.

    ``left`` and ``right`` are arrays of shape ``(n, modes)`` and
    ``(m, modes)``.
    """
    a = _as_rows(left)
    b = _as_rows(right)
    if a.shape[1] != b.shape[1]:
        raise DimensionError(f"mode count mismatch: {a.shape[1]} vs {b.shape[1]}")
    na = np.sum(np.abs(a) ** 2, axis=1)
    nb = np.sum(np.abs(b) ** 2, axis=1)
    expo = -0.5 * na[:, None] - 0.5 * nb[None, :] + a.conj() @ b.T
    return np.exp(expo)


def pairwise_overlap(left: np.ndarray, right: np.ndarray) -> np.ndarray:
    """Row-wise overlaps ``<left_t|right_t>`` for equally long stacks."""
    expo = np.sum(-0.5 * np.abs(left) ** 2 - 0.5 * np.abs(right) ** 2 + left.conj() * right, axis=-1)
    return np.exp(expo)


def overlap(a, b) -> complex:
    """Inner product ``<a|b>`` of two product coherent states.

    >>> round(overlap(CoherentLabel((1,)), CoherentLabel((-1,))).real, 10)
    0.1353352832
    """
    va = a.as_array() if isinstance(a, CoherentLabel) else np.atleast_1d(np.asarray(a, dtype=complex))
    vb = b.as_array() if isinstance(b, CoherentLabel) else np.atleast_1d(np.asarray(b, dtype=complex))
    if va.shape != vb.shape:
        raise DimensionError(f"mode count mismatch: {va.size} vs {vb.size}")
    return complex(pairwise_overlap(va[None, :], vb[None, :])[0])


def gram_matrix(labels) -> np.ndarray:
    rows = np.array([l.as_array() if isinstance(l, CoherentLabel) else l for l in labels], dtype=complex)
    return overlap_matrix(rows, rows)


class CoherentKet:
    """Superposition ``sum_i c_i |label_i>``; possibly unnormalized.

    Instances are immutable. ``coeffs`` has shape ``(terms,)`` and
    ``labels`` has shape ``(terms, modes)``.
    """

    __slots__ = ("coeffs", "labels")

    def __init__(self, coeffs, labels):
        coeffs = np.array(coeffs, dtype=complex).ravel()
        labels = np.array(labels, dtype=complex)
        if labels.ndim == 1:
            labels = labels[:, None] if coeffs.size == labels.size else labels[None, :]
        if labels.ndim != 2 or labels.shape[0] != coeffs.size:
            raise DimensionError("each coefficient needs exactly one label row")
        if labels.shape[1] < 1:
            raise DimensionError("a ket needs at least one mode")
        if not (np.all(np.isfinite(labels)) and np.all(np.isfinite(coeffs))):
            raise DomainError("coefficients and amplitudes must be finite")
        coeffs.flags.writeable = False
        labels.flags.writeable = False
        object.__setattr__(self, "coeffs", coeffs)
        object.__setattr__(self, "labels", labels)

    def __setattr__(self, name, value):
        raise AttributeError("CoherentKet is immutable")

    @classmethod
    def from_terms(cls, terms: Iterable[tuple[complex, CoherentLabel]]) -> "CoherentKet":
        terms = list(terms)
        if not terms:
            raise DimensionError("empty superposition")
        modes = {label.mode_count for _, label in terms}
        if len(modes) != 1:
            raise DimensionError("all labels must share a mode count")
        return cls([c for c, _ in terms], [label.as_array() for _, label in terms])

    @property
    def mode_count(self) -> int:
        return self.labels.shape[1]

    @property
    def terms(self) -> list[tuple[complex, CoherentLabel]]:
        return [(complex(c), CoherentLabel(tuple(row))) for c, row in zip(self.coeffs, self.labels)]

    def __len__(self) -> int:
        return self.coeffs.size

    def __add__(self, other: "CoherentKet") -> "CoherentKet":
        if self.mode_count != other.mode_count:
            raise DimensionError("mode count mismatch")
        return CoherentKet(np.concatenate([self.coeffs, other.coeffs]), np.vstack([self.labels, other.labels]))

    def scaled(self, factor: complex) -> "CoherentKet":
        return CoherentKet(self.coeffs * factor, self.labels)

    def tensor(self, other: "CoherentKet") -> "CoherentKet":
        """Product state ``self ⊗ other``; the modes of ``other`` come last."""
        n, m = len(self), len(other)
        coeffs = np.outer(self.coeffs, other.coeffs).ravel()
        labels = np.hstack([np.repeat(self.labels, m, axis=0), np.tile(other.labels, (n, 1))])
        return CoherentKet(coeffs, labels)

    def __repr__(self) -> str:
        return f"CoherentKet(terms={len(self)}, modes={self.mode_count})"


def coherent(amplitudes) -> CoherentKet:
    """Single product coherent state with unit coefficient."""
    return CoherentKet([1.0], [np.atleast_1d(np.asarray(amplitudes, dtype=complex))])


def vacuum(modes: int = 1) -> CoherentKet:
    return coherent(np.zeros(modes))


def norm_const(beta: float, sign) -> float:
    """Normalization ``1/sqrt(2(1 ± exp(-2 beta^2)))`` of ``|beta> ± |-beta>``."""
    sign = NormSign.coerce(sign)
    if not math.isfinite(beta) or beta < 0:
        raise DomainError(f"beta must be a finite non-negative real, got {beta}")
    if sign is NormSign.PLUS:
        return 1.0 / math.sqrt(2.0 * (1.0 + math.exp(-2.0 * beta * beta)))
    if beta == 0:
        raise SingularityError("|0> - |0> is the zero vector")
    return 1.0 / math.sqrt(-2.0 * math.expm1(-2.0 * beta * beta))


def make_scs(beta: float, sign="plus", normalized: bool = True) -> CoherentKet:
    """Single-mode cat state ``|beta> ± |-beta>``."""
    sign = NormSign.coerce(sign)
    scale = norm_const(beta, sign) if normalized else 1.0
    if sign is NormSign.MINUS and beta == 0:
        raise SingularityError("|0> - |0> is the zero vector")
    return CoherentKet([scale, sign.factor * scale], [[beta], [-beta]])


def make_ecs(alpha: float, sign="plus", normalized: bool = True) -> CoherentKet:
    """Two-mode entangled coherent state ``|alpha,alpha> ± |-alpha,-alpha>``."""
    sign = NormSign.coerce(sign)
    if not math.isfinite(alpha) or alpha < 0:
        raise DomainError(f"alpha must be a finite non-negative real, got {alpha}")
    scale = norm_const(math.sqrt(2.0) * alpha, sign) if normalized else 1.0
    if sign is NormSign.MINUS and alpha == 0:
        raise SingularityError("|0,0> - |0,0> is the zero vector")
    return CoherentKet([scale, sign.factor * scale], [[alpha, alpha], [-alpha, -alpha]])


def _check_imag(value: complex, what: str) -> float:
    if abs(value.imag) > 1e-12 * max(1.0, abs(value.real)):
        raise ArithmeticError(f"{what} has imaginary part {value.imag:.3e}")
    return float(value.real)


def ket_inner(psi: CoherentKet, phi: CoherentKet) -> complex:
    """``<psi|phi>``."""
    if psi.mode_count != phi.mode_count:
        raise DimensionError(f"mode count mismatch: {psi.mode_count} vs {phi.mode_count}")
    gram = overlap_matrix(psi.labels, phi.labels)
    return complex(psi.coeffs.conj() @ gram @ phi.coeffs)


def ket_norm_sq(psi: CoherentKet) -> float:
    return _check_imag(ket_inner(psi, psi), "norm squared")


def ket_fidelity(psi: CoherentKet, phi: CoherentKet) -> float:
    """``|<psi|phi>|^2 / (||psi||^2 ||phi||^2)``."""
    npsi, nphi = ket_norm_sq(psi), ket_norm_sq(phi)
    if npsi <= 0 or nphi <= 0:
        raise DegenerateStateError("fidelity with a zero-norm state")
    return abs(ket_inner(psi, phi)) ** 2 / (npsi * nphi)


def merge_duplicate_labels(labels: np.ndarray, tol: float = LABEL_TOL) -> tuple[np.ndarray, np.ndarray]:
    """Group rows of ``labels`` that agree entry-wise within ``tol``.

    Returns ``(unique_rows, index)`` where ``index[t]`` is the group of row
    ``t``. Comparison is by explicit tolerance, never by hashing floats.
    """
    unique: list[np.ndarray] = []
    index = np.empty(labels.shape[0], dtype=int)
    for t, row in enumerate(labels):
        for g, u in enumerate(unique):
            if np.all(np.abs(row - u) <= tol):
                index[t] = g
                break
        else:
            index[t] = len(unique)
            unique.append(row)
    return np.array(unique, dtype=complex).reshape(len(unique), labels.shape[1]), index


def canonicalize_ket(psi: CoherentKet, tol: float = LABEL_TOL) -> CoherentKet:
    """Combine terms whose labels coincide."""
    rows, index = merge_duplicate_labels(psi.labels, tol)
    coeffs = np.zeros(rows.shape[0], dtype=complex)
    np.add.at(coeffs, index, psi.coeffs)
    return CoherentKet(coeffs, rows)


def stack_labels(labels: Sequence[CoherentLabel]) -> np.ndarray:
    return np.array([l.as_array() for l in labels], dtype=complex)
