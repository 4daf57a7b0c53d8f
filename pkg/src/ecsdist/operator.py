"""Density operators as finite sums of coherent dyadics.

An operator is ``sum_t c_t |k_t><b_t|`` where ``k_t`` and ``b_t`` are
multimode coherent labels. Passive linear optics maps labels classically,
partial traces and photon-number-diagonal measurements only rescale
coefficients, so the representation is closed and exact under every
operation below. Loss is always an explicit environment mode followed by
``trace_out``.

Beam-splitter convention (used by every network builder in the package)::

    (a_i, a_j) -> (sqrt(t) a_i + sqrt(1-t) a_j,  -sqrt(1-t) a_i + sqrt(t) a_j)

so ``beamsplitter(0.5, 0, 1)`` sends ``(x, x) -> (sqrt(2) x, 0)`` and
``(-x, x) -> (0, sqrt(2) x)``.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Iterable, Optional

import numpy as np
from scipy.special import gammaln

from .coherent import (
    LABEL_TOL,
    CoherentKet,
    merge_duplicate_labels,
    overlap_matrix,
    pairwise_overlap,
)
from .errors import DegenerateStateError, DimensionError, DomainError

_DIRECT_FACTORIAL_MAX = 20


class CoherentOperator:
    """Immutable dyadic expansion ``sum_t coeffs[t] |kets[t]><bras[t]|``.

    Measuring or tracing every mode leaves a zero-mode operator whose
    trace is the sum of its coefficients.
    """

    __slots__ = ("coeffs", "kets", "bras")

    def __init__(self, coeffs, kets, bras):
        coeffs = np.array(coeffs, dtype=complex).ravel()
        kets = np.array(kets, dtype=complex)
        bras = np.array(bras, dtype=complex)
        if kets.ndim != 2 or kets.shape != bras.shape or kets.shape[0] != coeffs.size:
            raise DimensionError("coeffs, kets and bras must describe the same terms")
        for arr in (coeffs, kets, bras):
            arr.flags.writeable = False
        object.__setattr__(self, "coeffs", coeffs)
        object.__setattr__(self, "kets", kets)
        object.__setattr__(self, "bras", bras)

    def __setattr__(self, name, value):
        raise AttributeError("CoherentOperator is immutable")

    @property
    def mode_count(self) -> int:
        return self.kets.shape[1]

    @property
    def terms(self):
        return list(zip(self.coeffs, self.kets, self.bras))

    def __len__(self) -> int:
        return self.coeffs.size

    def _check_modes(self, other: "CoherentOperator"):
        if self.mode_count != other.mode_count:
            raise DimensionError(f"mode count mismatch: {self.mode_count} vs {other.mode_count}")

    def __add__(self, other: "CoherentOperator") -> "CoherentOperator":
        self._check_modes(other)
        return CoherentOperator(
            np.concatenate([self.coeffs, other.coeffs]),
            np.vstack([self.kets, other.kets]),
            np.vstack([self.bras, other.bras]),
        )

    def __neg__(self) -> "CoherentOperator":
        return CoherentOperator(-self.coeffs, self.kets, self.bras)

    def __sub__(self, other: "CoherentOperator") -> "CoherentOperator":
        return self + (-other)

    def __mul__(self, factor) -> "CoherentOperator":
        return CoherentOperator(self.coeffs * complex(factor), self.kets, self.bras)

    __rmul__ = __mul__

    def dagger(self) -> "CoherentOperator":
        return CoherentOperator(self.coeffs.conj(), self.bras, self.kets)

    def with_coeffs(self, coeffs) -> "CoherentOperator":
        return CoherentOperator(coeffs, self.kets, self.bras)

    def normalized(self) -> "CoherentOperator":
        tr = op_trace(self)
        if not tr > 0:
            raise DegenerateStateError("cannot normalize an operator with zero trace")
        return self * (1.0 / tr)

    def __repr__(self) -> str:
        return f"CoherentOperator(terms={len(self)}, modes={self.mode_count})"


def from_ket(psi: CoherentKet) -> CoherentOperator:
    """``|psi><psi|`` with ``len(psi)**2`` dyadic terms."""
    n = len(psi)
    coeffs = np.outer(psi.coeffs, psi.coeffs.conj()).ravel()
    kets = np.repeat(psi.labels, n, axis=0)
    bras = np.tile(psi.labels, (n, 1))
    return CoherentOperator(coeffs, kets, bras)


def tensor(rho: CoherentOperator, sigma: CoherentOperator) -> CoherentOperator:
    """``rho ⊗ sigma`` with the modes of ``sigma`` appended."""
    n, m = len(rho), len(sigma)
    coeffs = np.outer(rho.coeffs, sigma.coeffs).ravel()
    kets = np.hstack([np.repeat(rho.kets, m, axis=0), np.tile(sigma.kets, (n, 1))])
    bras = np.hstack([np.repeat(rho.bras, m, axis=0), np.tile(sigma.bras, (n, 1))])
    return CoherentOperator(coeffs, kets, bras)


def append_vacuum(rho: CoherentOperator, count: int = 1) -> CoherentOperator:
    zeros = np.zeros((len(rho), count), dtype=complex)
    return CoherentOperator(rho.coeffs, np.hstack([rho.kets, zeros]), np.hstack([rho.bras, zeros]))


# --- linear networks -------------------------------------------------------


@dataclass(frozen=True)
class LinearNetwork:
    """Isometry acting on coherent amplitudes; shape ``(out_modes, in_modes)``."""

    matrix: np.ndarray

    def __post_init__(self):
        m = np.array(self.matrix, dtype=complex)
        if m.ndim != 2 or m.shape[0] < m.shape[1]:
            raise DimensionError(f"network matrix must be (out >= in); got {m.shape}")
        if not np.allclose(m.conj().T @ m, np.eye(m.shape[1]), atol=1e-12, rtol=0):
            raise DomainError("network matrix is not an isometry")
        m.flags.writeable = False
        object.__setattr__(self, "matrix", m)

    @property
    def in_modes(self) -> int:
        return self.matrix.shape[1]

    @property
    def out_modes(self) -> int:
        return self.matrix.shape[0]

    def then(self, other: "LinearNetwork") -> "LinearNetwork":
        """Apply ``self`` first, then ``other``."""
        if other.in_modes != self.out_modes:
            raise DimensionError("networks do not compose")
        return LinearNetwork(other.matrix @ self.matrix)

    def inverse(self) -> "LinearNetwork":
        if self.in_modes != self.out_modes:
            raise DimensionError("only square networks are invertible")
        return LinearNetwork(self.matrix.conj().T)


def identity_network(modes: int) -> LinearNetwork:
    return LinearNetwork(np.eye(modes))


def _check_unit_interval(name: str, value: float):
    if not (0.0 <= value <= 1.0) or math.isnan(value):
        raise DomainError(f"{name} must lie in [0, 1], got {value}")


def _check_mode(i: int, modes: int):
    if not (0 <= i < modes):
        raise DimensionError(f"mode index {i} out of range for {modes} modes")


def beamsplitter(t: float, i: int, j: int, modes: int) -> LinearNetwork:
    """Beam splitter of intensity transmissivity ``t`` between modes ``i`` and ``j``."""
    _check_unit_interval("transmissivity", t)
    _check_mode(i, modes)
    _check_mode(j, modes)
    if i == j:
        raise DimensionError("beam splitter needs two distinct modes")
    m = np.eye(modes, dtype=complex)
    ct, st = math.sqrt(t), math.sqrt(1.0 - t)
    m[i, i], m[i, j] = ct, st
    m[j, i], m[j, j] = -st, ct
    return LinearNetwork(m)


def phase_shift(phi: float, i: int, modes: int) -> LinearNetwork:
    if not math.isfinite(phi):
        raise DomainError("phase must be finite")
    _check_mode(i, modes)
    m = np.eye(modes, dtype=complex)
    c, s = math.cos(phi), math.sin(phi)
    # snap rounding dust so that a pi shift maps real labels to real labels
    m[i, i] = complex(0.0 if abs(c) < 1e-15 else c, 0.0 if abs(s) < 1e-15 else s)
    return LinearNetwork(m)


def loss_channel_isometry(eta: float, i: int, modes: int) -> LinearNetwork:
    """Loss ``eta`` on mode ``i``; the lost field goes to a new last mode."""
    _check_unit_interval("loss", eta)
    _check_mode(i, modes)
    m = np.zeros((modes + 1, modes), dtype=complex)
    m[:modes, :modes] = np.eye(modes)
    m[i, i] = math.sqrt(1.0 - eta)
    m[modes, i] = math.sqrt(eta)
    return LinearNetwork(m)


def apply_network(rho: CoherentOperator, net: LinearNetwork) -> CoherentOperator:
    if net.in_modes != rho.mode_count:
        raise DimensionError(f"network expects {net.in_modes} modes, operator has {rho.mode_count}")
    if net.in_modes == net.out_modes and np.array_equal(net.matrix, np.eye(net.in_modes)):
        return rho
    mt = net.matrix.T
    return CoherentOperator(rho.coeffs, _map_labels(rho.kets, mt), _map_labels(rho.bras, mt))


CANCEL_ULPS = 8


def _map_labels(labels: np.ndarray, mt: np.ndarray) -> np.ndarray:
    """Apply the amplitude map; interference that cancels to rounding level becomes exact zero."""
    out = labels @ mt
    scale = np.abs(labels) @ np.abs(mt)
    out[np.abs(out) <= CANCEL_ULPS * np.finfo(float).eps * scale] = 0
    return out


def apply_loss(rho: CoherentOperator, i: int, eta: float) -> CoherentOperator:
    """Loss on mode ``i`` with the environment appended as the last mode."""
    return apply_network(rho, loss_channel_isometry(eta, i, rho.mode_count))


# --- partial traces and measurements ----------------------------------------


def _drop_mode(arr: np.ndarray, i: int) -> np.ndarray:
    return np.delete(arr, i, axis=1)


def _require_modes_left(rho: CoherentOperator, i: int):
    _check_mode(i, rho.mode_count)


def trace_out(rho: CoherentOperator, i: int) -> CoherentOperator:
    """Partial trace over mode ``i``: ``c -> c <b_i|k_i>``."""
    _require_modes_left(rho, i)
    k, b = rho.kets[:, i : i + 1], rho.bras[:, i : i + 1]
    factor = pairwise_overlap(b, k)
    return CoherentOperator(rho.coeffs * factor, _drop_mode(rho.kets, i), _drop_mode(rho.bras, i))


def fock_amplitude(beta, n: int) -> np.ndarray:
    """``<n|beta> = exp(-|beta|^2/2) beta^n / sqrt(n!)`` (log-space above n = 20)."""
    beta = np.asarray(beta, dtype=complex)
    if n < 0:
        raise DomainError("photon number must be non-negative")
    gauss = np.exp(-0.5 * np.abs(beta) ** 2)
    if n <= _DIRECT_FACTORIAL_MAX:
        return gauss * beta**n / math.sqrt(math.factorial(n))
    out = np.zeros_like(beta)
    nz = beta != 0
    out[nz] = np.exp(-0.5 * np.abs(beta[nz]) ** 2 + n * np.log(beta[nz]) - 0.5 * gammaln(n + 1))
    return out


def _fock_weight(k: np.ndarray, b: np.ndarray, ns: Iterable[int]) -> np.ndarray:
    total = np.zeros(k.shape, dtype=complex)
    for n in ns:
        total += fock_amplitude(k, n) * np.conj(fock_amplitude(b, n))
    return total


def project_fock(rho: CoherentOperator, i: int, n: int) -> CoherentOperator:
    """Unnormalized conditional operator for detecting ``n`` photons in mode ``i``."""
    return project_fock_set(rho, i, (n,))


def project_fock_set(rho: CoherentOperator, i: int, photon_numbers: Iterable[int]) -> CoherentOperator:
    """Sum of :func:`project_fock` over several photon numbers.

    The labels of every summand coincide, so the sum is taken on the
    coefficients and the term count is unchanged.
    """
    _require_modes_left(rho, i)
    ns = [int(n) for n in photon_numbers]
    if any(n < 0 for n in ns):
        raise DomainError("photon numbers must be non-negative")
    weight = _fock_weight(rho.kets[:, i], rho.bras[:, i], ns)
    return CoherentOperator(rho.coeffs * weight, _drop_mode(rho.kets, i), _drop_mode(rho.bras, i))


def _after_detector_loss(rho: CoherentOperator, i: int, loss: float) -> CoherentOperator:
    _check_unit_interval("detector loss", loss)
    lossy = apply_loss(rho, i, loss)
    return trace_out(lossy, lossy.mode_count - 1)


def condition_no_click(rho: CoherentOperator, i: int, detector_loss: float = 0.0) -> CoherentOperator:
    """Vacuum outcome of an on/off detector with loss ``detector_loss`` on mode ``i``."""
    return project_fock(_after_detector_loss(rho, i, detector_loss), i, 0)


def condition_click(rho: CoherentOperator, i: int, detector_loss: float = 0.0) -> CoherentOperator:
    """Click outcome (one or more photons) of a lossy on/off detector on mode ``i``.

    Equal to ``trace_out(after) - project_fock(after, i, 0)`` where ``after``
    is ``rho`` with the detector loss applied. Both pieces share labels, so
    they are combined per term as ``exp(-(|k|^2+|b|^2)/2) * expm1(conj(b) k)``,
    which stays accurate when the detected amplitudes are tiny.
    """
    after = _after_detector_loss(rho, i, detector_loss)
    _require_modes_left(after, i)
    k, b = after.kets[:, i], after.bras[:, i]
    factor = np.exp(-0.5 * (np.abs(k) ** 2 + np.abs(b) ** 2)) * _expm1_complex(np.conj(b) * k)
    return CoherentOperator(after.coeffs * factor, _drop_mode(after.kets, i), _drop_mode(after.bras, i))


def _expm1_complex(z: np.ndarray) -> np.ndarray:
    z = np.asarray(z, dtype=complex)
    # expm1(x + iy) = expm1(x) cos y - 2 sin^2(y/2) + i e^x sin y
    x, y = z.real, z.imag
    return np.expm1(x) * np.cos(y) - 2.0 * np.sin(0.5 * y) ** 2 + 1j * np.exp(x) * np.sin(y)


class OutcomeKind(enum.Enum):
    FOCK = "fock"
    CLICK = "click"
    NO_CLICK = "no_click"
    TRACE_OUT = "trace_out"


@dataclass(frozen=True)
class DetectionOutcome:
    mode_index: int
    kind: OutcomeKind
    photons: Optional[int] = None

    def __post_init__(self):
        kind = OutcomeKind(self.kind)
        object.__setattr__(self, "kind", kind)
        if self.mode_index < 0:
            raise DimensionError("mode index must be non-negative")
        if kind is OutcomeKind.FOCK:
            if self.photons is None or self.photons < 0:
                raise DomainError("a Fock outcome needs a non-negative photon number")


def apply_outcome(rho: CoherentOperator, outcome: DetectionOutcome, detector_loss: float = 0.0) -> CoherentOperator:
    """Condition ``rho`` on one measurement outcome; the mode is removed."""
    i = outcome.mode_index
    if outcome.kind is OutcomeKind.TRACE_OUT:
        return trace_out(rho, i)
    if outcome.kind is OutcomeKind.CLICK:
        return condition_click(rho, i, detector_loss)
    if outcome.kind is OutcomeKind.NO_CLICK:
        return condition_no_click(rho, i, detector_loss)
    return project_fock(_after_detector_loss(rho, i, detector_loss), i, outcome.photons)


# --- scalar functionals ------------------------------------------------------


def op_trace(rho: CoherentOperator) -> float:
    return float(np.real(np.sum(rho.coeffs * pairwise_overlap(rho.bras, rho.kets))))


def op_trace_complex(rho: CoherentOperator) -> complex:
    return complex(np.sum(rho.coeffs * pairwise_overlap(rho.bras, rho.kets)))


def expectation(rho: CoherentOperator, psi: CoherentKet) -> complex:
    """``<psi|rho|psi>``."""
    if psi.mode_count != rho.mode_count:
        raise DimensionError(f"mode count mismatch: {psi.mode_count} vs {rho.mode_count}")
    left = psi.coeffs.conj() @ overlap_matrix(psi.labels, rho.kets)
    right = overlap_matrix(rho.bras, psi.labels) @ psi.coeffs
    return complex(np.sum(rho.coeffs * left * right))


def fidelity_with_ket(rho: CoherentOperator, psi: CoherentKet) -> float:
    """``<psi|rho|psi> / (tr(rho) <psi|psi>)``."""
    tr = op_trace(rho)
    if not tr > 0:
        raise DegenerateStateError("operator has zero trace (herald outcome has probability 0)")
    norm = float(np.real(psi.coeffs.conj() @ overlap_matrix(psi.labels, psi.labels) @ psi.coeffs))
    if not norm > 0:
        raise DegenerateStateError("reference ket has zero norm")
    return float(np.real(expectation(rho, psi))) / (tr * norm)


# --- canonical form ----------------------------------------------------------


def canonicalize(rho: CoherentOperator, tol: float = LABEL_TOL, drop_zeros: bool = False) -> CoherentOperator:
    """Merge terms with coinciding (ket, bra) label pairs.

    With ``drop_zeros`` the terms whose merged coefficient is exactly zero
    are removed (at least one term is always kept).
    """
    pairs = np.hstack([rho.kets, rho.bras])
    rows, index = merge_duplicate_labels(pairs, tol)
    coeffs = np.zeros(rows.shape[0], dtype=complex)
    np.add.at(coeffs, index, rho.coeffs)
    if drop_zeros:
        keep = coeffs != 0
        if not keep.any():
            keep[0] = True
        coeffs, rows = coeffs[keep], rows[keep]
    m = rho.mode_count
    return CoherentOperator(coeffs, rows[:, :m], rows[:, m:])


def is_hermitian(rho: CoherentOperator, tol: float = 1e-12) -> bool:
    """Conjugate-term test: ``rho - rho^dagger`` cancels after canonicalization."""
    diff = canonicalize(rho - rho.dagger(), tol=1e-12)
    scale = max(1.0, float(np.max(np.abs(rho.coeffs))))
    return bool(np.all(np.abs(diff.coeffs) <= tol * scale))


def distinct_labels(rho: CoherentOperator, tol: float = 1e-12) -> np.ndarray:
    """Labels appearing in any term with a nonzero coefficient."""
    live = rho.coeffs != 0
    rows = np.vstack([rho.kets[live], rho.bras[live]])
    unique, _ = merge_duplicate_labels(rows, tol)
    return unique


def support_gram_rank(rho: CoherentOperator, tol: float = 1e-10) -> int:
    labels = distinct_labels(rho)
    if labels.shape[0] == 0:
        return 0
    eig = np.linalg.eigvalsh(overlap_matrix(labels, labels))
    return int(np.sum(eig > tol * max(1.0, eig.max())))


def to_matrix_in_label_basis(rho: CoherentOperator, labels: np.ndarray) -> np.ndarray:
    """Coefficient matrix ``R`` with ``rho = sum_ij R_ij |labels_i><labels_j|``.

    Every ket/bra of ``rho`` must coincide with one of ``labels``.
    """
    def locate(rows):
        idx = np.empty(rows.shape[0], dtype=int)
        for t, row in enumerate(rows):
            hit = np.flatnonzero(np.all(np.abs(labels - row) <= 1e-12, axis=1))
            if hit.size == 0:
                raise DimensionError("operator label outside the supplied basis")
            idx[t] = hit[0]
        return idx

    ki, bi = locate(rho.kets), locate(rho.bras)
    out = np.zeros((labels.shape[0], labels.shape[0]), dtype=complex)
    np.add.at(out, (ki, bi), rho.coeffs)
    return out
