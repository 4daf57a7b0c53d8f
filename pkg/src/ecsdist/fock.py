"""Brute-force cross-check in a truncated photon-number basis.

Everything here is dense linear algebra over Fock amplitudes: beam
splitters are exponentiated mode-coupling generators, loss is an explicit
sum over environment photon numbers (Kraus operators), and detector loss
is binomial thinning of the photon-number distribution. None of it calls
the coherent-dyadic engine, so agreement between the two is meaningful.

Modes whose amplitudes are fully determined (the sender and receiver
outputs) are contracted against the target state as soon as they stop
interacting, which keeps every array at two modes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Literal, Optional

import numpy as np
from scipy.linalg import expm
from scipy.special import gammaln
from scipy.stats import poisson

from .errors import DomainError, TruncationError
from .schemes import Parity, SchemeParams

DEFAULT_CUTOFF = 40
DEFAULT_MAX_TAIL = 1e-12
CUTOFF_MARGIN = 10
FLOAT_FLOOR = 1e-12


def poisson_tail(mean: float, cutoff: int) -> float:
    """``P(N > cutoff)`` for ``N ~ Poisson(mean)``."""
    return float(poisson.sf(cutoff, mean))


@dataclass(frozen=True)
class FockState:
    vector: np.ndarray
    cutoffs: tuple[int, ...]
    tail_bound: float

    @property
    def mode_count(self) -> int:
        return len(self.cutoffs)

    def norm_sq(self) -> float:
        return float(np.vdot(self.vector, self.vector).real)


def _coherent_vector(beta: complex, cutoff: int) -> np.ndarray:
    # recurrence c_n = c_{n-1} beta / sqrt(n)
    v = np.empty(cutoff + 1, dtype=complex)
    v[0] = np.exp(-0.5 * abs(beta) ** 2)
    for n in range(1, cutoff + 1):
        v[n] = v[n - 1] * beta / math.sqrt(n)
    return v


def coherent_fock(beta: complex, cutoff: int = DEFAULT_CUTOFF, max_tail: float = DEFAULT_MAX_TAIL) -> FockState:
    """Truncated coherent state; raises if the dropped weight exceeds ``max_tail``."""
    tail = poisson_tail(abs(beta) ** 2, cutoff)
    if tail > max_tail:
        raise TruncationError(f"cutoff {cutoff} drops {tail:.2e} of |{beta}> (allowed {max_tail:.0e})")
    return FockState(_coherent_vector(beta, cutoff), (cutoff,), tail)


def cat_fock(beta: float, sign: int, cutoff: int = DEFAULT_CUTOFF, max_tail: float = DEFAULT_MAX_TAIL) -> FockState:
    """``N (|beta> + sign |-beta>)`` with the exact (untruncated) normalization."""
    plus = coherent_fock(beta, cutoff, max_tail)
    minus = coherent_fock(-beta, cutoff, max_tail)
    norm = 1.0 / math.sqrt(2.0 * (1.0 + sign * math.exp(-2.0 * beta * beta)))
    return FockState(norm * (plus.vector + sign * minus.vector), (cutoff,), plus.tail_bound)


def basis_vector(n: int, cutoff: int) -> np.ndarray:
    v = np.zeros(cutoff + 1, dtype=complex)
    v[n] = 1.0
    return v


def _sector_generator(total: int, lo: int, hi: int) -> np.ndarray:
    """Generator ``a_i^+ a_j - a_j^+ a_i`` on ``|k, total-k>``, ``k`` in ``[lo, hi]``."""
    ks = np.arange(lo, hi + 1)
    g = np.zeros((ks.size, ks.size))
    for col, k in enumerate(ks):
        if col + 1 < ks.size:
            g[col + 1, col] = math.sqrt((k + 1) * (total - k))
        if col > 0:
            g[col - 1, col] = -math.sqrt(k * (total - k + 1))
    return g


@lru_cache(maxsize=16)
def fock_beamsplitter(t: float, cutoff: int = DEFAULT_CUTOFF) -> np.ndarray:
    """Two-mode beam splitter as a dense matrix on ``(cutoff+1)**2`` amplitudes.

    Flat index ``j * (cutoff+1) + k`` holds ``|j>_i |k>_j``. Coherent inputs
    map as ``(b_i, b_j) -> (sqrt(t) b_i + sqrt(1-t) b_j, -sqrt(1-t) b_i + sqrt(t) b_j)``.

    The generator is represented with a per-mode working cutoff of
    ``cutoff + 10`` and exponentiated; it is block diagonal in the total
    photon number, so each block is exponentiated separately. Sectors up to
    the working cutoff are complete and therefore exact; higher sectors only
    matter for states whose photon-number tail is already negligible.
    """
    if not 0 <= t <= 1:
        raise DomainError(f"transmissivity must lie in [0, 1], got {t}")
    theta = math.acos(math.sqrt(t))
    work = cutoff + CUTOFF_MARGIN
    d = cutoff + 1
    u = np.zeros((d * d, d * d))
    for total in range(0, 2 * cutoff + 1):
        lo, hi = max(0, total - work), min(total, work)
        block = expm(theta * _sector_generator(total, lo, hi))
        ks = np.arange(lo, hi + 1)
        keep = (ks <= cutoff) & (total - ks <= cutoff)
        idx = ks[keep] * d + (total - ks[keep])
        u[np.ix_(idx, idx)] = block[np.ix_(keep, keep)]
    u.flags.writeable = False
    return u


def apply_two_mode(u: np.ndarray, state: np.ndarray) -> np.ndarray:
    d = state.shape[0]
    return (u @ state.reshape(-1)).reshape(d, d)


def diagonal_after(u: np.ndarray, rho: np.ndarray) -> np.ndarray:
    """Diagonal of ``u rho u^dagger`` without forming the full product."""
    return np.einsum("ij,ij->i", u @ rho, u.conj()).real


@lru_cache(maxsize=32)
def loss_kraus(eta: float, cutoff: int = DEFAULT_CUTOFF) -> np.ndarray:
    """Kraus operators ``K[a]`` of a loss channel; ``a`` photons go to the environment.

    ``K[a] |n> = sqrt(C(n, a)) (1-eta)^((n-a)/2) eta^(a/2) |n-a>``.
    """
    if not 0 <= eta <= 1:
        raise DomainError(f"loss must lie in [0, 1], got {eta}")
    d = cutoff + 1
    k = np.zeros((d, d, d))
    for a in range(d):
        for n in range(a, d):
            log_binom = gammaln(n + 1) - gammaln(a + 1) - gammaln(n - a + 1)
            k[a, n - a, n] = math.exp(0.5 * log_binom) * (1.0 - eta) ** ((n - a) / 2) * eta ** (a / 2)
    k.flags.writeable = False
    return k


def apply_loss_channel(rho: np.ndarray, eta: float) -> np.ndarray:
    """Single-mode loss, summing the environment photon number explicitly."""
    kraus = loss_kraus(eta, rho.shape[0] - 1)
    out = np.zeros_like(rho, dtype=complex)
    for ka in kraus:
        out += ka @ rho @ ka.T
    return out


@lru_cache(maxsize=32)
def detection_matrix(loss: float, cutoff: int = DEFAULT_CUTOFF) -> np.ndarray:
    """``B[n, k]``: probability that ``k`` incident photons register as ``n``."""
    d = cutoff + 1
    b = np.zeros((d, d))
    for k in range(d):
        for n in range(k + 1):
            log_binom = gammaln(k + 1) - gammaln(n + 1) - gammaln(k - n + 1)
            b[n, k] = math.exp(log_binom) * (1.0 - loss) ** n * loss ** (k - n)
    b.flags.writeable = False
    return b


def click_weights(loss: float, cutoff: int = DEFAULT_CUTOFF) -> np.ndarray:
    """Click probability of a lossy on/off detector given ``k`` incident photons."""
    return 1.0 - detection_matrix(loss, cutoff)[0]


@dataclass(frozen=True)
class OracleResult:
    fidelity: float
    probability: float
    truncation_bound: float


def _bound(means, cutoff: int, probability: float) -> float:
    """Amplitude-level truncation bound, inflated for the fidelity ratio.

    Each truncated coherent component is off by ``sqrt(tail)`` in norm, so a
    bilinear functional moves by at most ``2 sqrt(tail)`` per component.
    """
    amp = sum(2.0 * math.sqrt(poisson_tail(m, cutoff)) for m in means)
    return FLOAT_FLOOR + amp / max(probability, 1e-300) + amp


def _sender_state(alpha_in: float, epsilon: float, cutoff: int, max_tail: float) -> np.ndarray:
    """Cat split on the tap: matrix ``phi[tap, system]``."""
    cat = cat_fock(alpha_in, +1, cutoff, max_tail).vector
    u = fock_beamsplitter(1.0 - epsilon, cutoff)
    return apply_two_mode(u, np.outer(basis_vector(0, cutoff), cat))


def _ecs_components(alpha: float, sign: int):
    norm = 1.0 / math.sqrt(2.0 * (1.0 + sign * math.exp(-4.0 * alpha * alpha)))
    return ((+1, norm), (-1, sign * norm))


def _oracle_original(p: SchemeParams, parity: Parity, cutoff: int, max_tail: float) -> OracleResult:
    a_in = p.alpha / math.sqrt(1.0 - p.epsilon)
    phi = _sender_state(a_in, p.epsilon, cutoff, max_tail)
    eta = p.eta_one_sided
    u_c = fock_beamsplitter(0.5, cutoff)
    thin = detection_matrix(p.detector_loss, cutoff)
    d = cutoff + 1

    def herald_counts(rho_pair: np.ndarray) -> np.ndarray:
        counts = diagonal_after(u_c, rho_pair).reshape(d, d)
        return thin @ counts @ thin.T

    tap = apply_loss_channel(phi @ phi.conj().T, eta)
    q = herald_counts(np.kron(tap, tap))
    ns = list(parity.photon_numbers(cutoff))
    prob = float(q[ns, 0].sum() + q[0, ns].sum())

    sign = 1 if parity is Parity.EVEN_NONZERO else -1
    comps = _ecs_components(p.alpha, sign)
    numerator = 0.0
    # first-output heralds: no correction; second-output heralds: pi shift on A
    for a_flip, select in ((1, lambda m: m[ns, 0]), (-1, lambda m: m[0, ns])):
        f = {s: phi @ _coherent_vector(a_flip * s * p.alpha, cutoff).conj() for s, _ in comps}
        g = {s: phi @ _coherent_vector(s * p.alpha, cutoff).conj() for s, _ in comps}
        sigma = np.zeros((d * d, d * d), dtype=complex)
        for s, cs in comps:
            for s2, cs2 in comps:
                la = apply_loss_channel(np.outer(f[s], f[s2].conj()), eta)
                lb = apply_loss_channel(np.outer(g[s], g[s2].conj()), eta)
                sigma += np.conj(cs) * cs2 * np.kron(la, lb)
        numerator += float(select(herald_counts(sigma)).sum())

    means = [a_in**2, p.alpha**2, 2 * p.alpha**2, p.epsilon * a_in**2, 2 * p.epsilon * a_in**2]
    return OracleResult(numerator / prob, prob, _bound(means, cutoff, prob))


def _oracle_new(p: SchemeParams, cutoff: int, max_tail: float) -> OracleResult:
    a_in = p.alpha / math.sqrt(1.0 - p.epsilon)
    received_sq = p.epsilon * a_in**2 * (1.0 - p.eta_total)
    refl = received_sq / p.alpha**2
    b_amp = math.sqrt(1.0 - refl) * p.alpha
    g_amp = math.sqrt(4.0 * refl * (1.0 - refl)) * p.alpha
    d = cutoff + 1

    phi = _sender_state(a_in, p.epsilon, cutoff, max_tail)
    b_cat = cat_fock(b_amp, +1, cutoff, max_tail).vector
    anc = coherent_fock(g_amp, cutoff, max_tail).vector
    u_b = fock_beamsplitter(1.0 - refl, cutoff)
    u_usd = fock_beamsplitter(0.5, cutoff)
    click = click_weights(p.detector_loss, cutoff)
    both = np.outer(click, click).ravel()

    # probability: trace out A, lose photons, mix with B, trace out B
    received = apply_loss_channel(phi @ phi.conj().T, p.eta_total)
    joint = u_b @ np.kron(np.outer(b_cat, b_cat.conj()), received) @ u_b.conj().T
    det_in = np.einsum("ajak->jk", joint.reshape(d, d, d, d))
    counts = diagonal_after(u_usd, np.kron(det_in, np.outer(anc, anc.conj())))
    prob = float(counts @ both)

    # fidelity numerator: one pure trajectory per lost photon number a
    kraus = loss_kraus(p.eta_total, cutoff)
    numerator = 0.0
    comps = _ecs_components(p.alpha, +1)
    for ka in kraus:
        w = np.zeros(d, dtype=complex)
        for s, cs in comps:
            target = _coherent_vector(s * p.alpha, cutoff).conj()
            h = ka @ (phi @ target)
            mixed = apply_two_mode(u_b, np.outer(b_cat, h))
            w += np.conj(cs) * (target @ mixed)
        out = u_usd @ np.kron(w, anc)
        numerator += float((np.abs(out) ** 2) @ both)

    means = [a_in**2, b_amp**2, g_amp**2, p.alpha**2, 2 * p.alpha**2, a_in**2 + b_amp**2, g_amp**2 + b_amp**2 + a_in**2]
    return OracleResult(numerator / prob, prob, _bound(means, cutoff, prob))


def oracle_run(
    p: SchemeParams,
    scheme: Literal["original", "new"],
    parity: Optional[object] = None,
    cutoff: int = DEFAULT_CUTOFF,
    max_tail: float = DEFAULT_MAX_TAIL,
) -> OracleResult:
    """Fidelity and herald probability computed in the truncated Fock basis.

    ``parity`` is required for the original scheme and ignored for the new
    one.
    """
    if scheme == "original":
        if parity is None:
            raise DomainError("the original scheme needs a herald parity")
        return _oracle_original(p, Parity.coerce(parity), cutoff, max_tail)
    if scheme == "new":
        return _oracle_new(p, cutoff, max_tail)
    raise DomainError(f"unknown scheme {scheme!r}")


def herald_distribution(p: SchemeParams, scheme: Literal["original", "new"], cutoff: int = DEFAULT_CUTOFF,
                        max_tail: float = DEFAULT_MAX_TAIL) -> np.ndarray:
    """Joint outcome distribution of the two herald detectors.

    For the original scheme entry ``[n1, n2]`` is the probability of
    registering ``n1`` and ``n2`` photons; for the new scheme entry
    ``[c1, c2]`` is the probability of the click pattern (0 no click, 1 click).
    """
    if scheme not in ("original", "new"):
        raise DomainError(f"unknown scheme {scheme!r}")
    a_in = p.alpha / math.sqrt(1.0 - p.epsilon)
    phi = _sender_state(a_in, p.epsilon, cutoff, max_tail)
    d = cutoff + 1
    if scheme == "original":
        tap = apply_loss_channel(phi @ phi.conj().T, p.eta_one_sided)
        counts = diagonal_after(fock_beamsplitter(0.5, cutoff), np.kron(tap, tap)).reshape(d, d)
        thin = detection_matrix(p.detector_loss, cutoff)
        return thin @ counts @ thin.T
    refl = p.epsilon * a_in**2 * (1.0 - p.eta_total) / p.alpha**2
    b_cat = cat_fock(math.sqrt(1.0 - refl) * p.alpha, +1, cutoff, max_tail).vector
    anc = coherent_fock(math.sqrt(4.0 * refl * (1.0 - refl)) * p.alpha, cutoff, max_tail).vector
    received = apply_loss_channel(phi @ phi.conj().T, p.eta_total)
    u_b = fock_beamsplitter(1.0 - refl, cutoff)
    joint = u_b @ np.kron(np.outer(b_cat, b_cat.conj()), received) @ u_b.conj().T
    det_in = np.einsum("ajak->jk", joint.reshape(d, d, d, d))
    counts = diagonal_after(fock_beamsplitter(0.5, cutoff), np.kron(det_in, np.outer(anc, anc.conj())))
    click = click_weights(p.detector_loss, cutoff)
    per_det = np.stack([1.0 - click, click])
    return per_det @ counts.reshape(d, d) @ per_det.T
