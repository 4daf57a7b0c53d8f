"""The two entanglement-distribution protocols.

``original_*`` is the symmetric tap-off scheme with a central
photon-number-resolving herald; ``new_*`` is the asymmetric scheme heralded
by a loss-tolerant unambiguous-discrimination measurement at the receiver.

Several closed forms circulate in two flavours, labelled ``"main_text"``
and ``"appendix"``. The engine simulations are built from the optical
networks alone and never consult either; they decide which flavour is
right (see :mod:`ecsdist.validation`).
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, fields, replace
from typing import Literal, Union

import numpy as np
from scipy.stats import poisson

from .coherent import CoherentKet, NormSign, coherent, make_ecs, make_scs
from .errors import DegenerateStateError, DomainError
from .operator import (
    CoherentOperator,
    append_vacuum,
    apply_loss,
    apply_network,
    beamsplitter,
    canonicalize,
    condition_click,
    condition_no_click,
    fidelity_with_ket,
    from_ket,
    op_trace,
    phase_shift,
    project_fock,
    project_fock_set,
    trace_out,
)

Variant = Literal["main_text", "appendix"]
VARIANTS: tuple[str, ...] = ("main_text", "appendix")

HERALD_TAIL = 1e-12


class Parity(enum.Enum):
    EVEN_NONZERO = "even"
    ODD = "odd"

    @classmethod
    def coerce(cls, value) -> "Parity":
        if isinstance(value, cls):
            return value
        if value in ("even", "even_nonzero"):
            return cls.EVEN_NONZERO
        if value == "odd":
            return cls.ODD
        raise DomainError(f"unknown parity {value!r}")

    @property
    def target_sign(self) -> NormSign:
        return NormSign.PLUS if self is Parity.EVEN_NONZERO else NormSign.MINUS

    def photon_numbers(self, cutoff: int) -> range:
        start = 2 if self is Parity.EVEN_NONZERO else 1
        return range(start, cutoff + 1, 2)


def eta_total_from_one_sided(eta: float) -> float:
    return 1.0 - (1.0 - eta) ** 2


def eta_one_sided_from_total(eta_total: float) -> float:
    return 1.0 - math.sqrt(1.0 - eta_total)


@dataclass(frozen=True)
class SchemeParams:
    """Free parameters shared by both protocols.

    ``eta_total`` is the loss between the two parties; the original scheme
    splits it evenly into two one-sided losses.
    """

    alpha: float
    epsilon: float
    eta_total: float
    detector_loss: float

    def __post_init__(self):
        for f in fields(self):
            v = getattr(self, f.name)
            if not isinstance(v, (int, float, np.floating, np.integer)) or not math.isfinite(v):
                raise DomainError(f"{f.name} must be a finite real, got {v!r}")
            object.__setattr__(self, f.name, float(v))
        if not self.alpha > 0:
            raise DomainError(f"alpha must be positive, got {self.alpha}")
        if not 0 < self.epsilon < 1:
            raise DomainError(f"epsilon must lie in (0, 1), got {self.epsilon}")
        if not 0 <= self.eta_total < 1:
            raise DomainError(f"eta_total must lie in [0, 1), got {self.eta_total}")
        if not 0 <= self.detector_loss <= 1:
            raise DomainError(f"detector_loss must lie in [0, 1], got {self.detector_loss}")

    @classmethod
    def from_one_sided(cls, alpha, epsilon, eta, detector_loss) -> "SchemeParams":
        if not 0 <= eta < 1:
            raise DomainError(f"one-sided loss must lie in [0, 1), got {eta}")
        return cls(alpha, epsilon, eta_total_from_one_sided(eta), detector_loss)

    @property
    def eta_one_sided(self) -> float:
        return eta_one_sided_from_total(self.eta_total)

    def with_(self, **changes) -> "SchemeParams":
        return replace(self, **changes)


@dataclass(frozen=True)
class FormulaChoice:
    """Which flavour to use for each formula that is stated two ways."""

    epsilon_prime: Variant = "appendix"
    eta_prime: Variant = "appendix"
    original_probability: Variant = "appendix"
    new_fidelity: Variant = "appendix"
    new_probability: Variant = "appendix"

    def __post_init__(self):
        for f in fields(self):
            if getattr(self, f.name) not in VARIANTS:
                raise DomainError(f"{f.name} must be one of {VARIANTS}")

    @classmethod
    def uniform(cls, variant: Variant) -> "FormulaChoice":
        return cls(*(variant,) * len(fields(cls)))

    def flipped(self, name: str) -> "FormulaChoice":
        other = "main_text" if getattr(self, name) == "appendix" else "appendix"
        return replace(self, **{name: other})

    def as_dict(self) -> dict[str, str]:
        return {f.name: getattr(self, f.name) for f in fields(self)}


AMBIGUOUS_FORMULAS: tuple[str, ...] = tuple(f.name for f in fields(FormulaChoice))

# Result of engine adjudication (re-derived and checked by ``validate``).
ADJUDICATED = FormulaChoice(
    epsilon_prime="appendix",
    eta_prime="appendix",
    original_probability="appendix",
    new_fidelity="appendix",
    new_probability="appendix",
)

VariantLike = Union[str, FormulaChoice]


def resolve_variant(variant: VariantLike) -> FormulaChoice:
    if isinstance(variant, FormulaChoice):
        return variant
    key = str(variant).replace("-", "_")
    if key == "adjudicated":
        return ADJUDICATED
    if key in VARIANTS:
        return FormulaChoice.uniform(key)
    raise DomainError(f"unknown variant {variant!r}")


@dataclass(frozen=True)
class DerivedParams:
    epsilon_prime: float
    alpha_prime: float
    eta_prime: float
    rho: float
    gamma: float
    alpha_dprime: float
    receiver_cat_amplitude: float


def _epsilon_prime(epsilon, variant: Variant):
    return epsilon / (1.0 + epsilon) if variant == "main_text" else epsilon / (1.0 - epsilon)


def _eta_prime(eta_total, loss, variant: Variant):
    if variant == "main_text":
        root = np.sqrt(1.0 - np.sqrt(1.0 - eta_total))  # sqrt of the one-sided loss
        return root + loss - loss * root
    return 1.0 - (1.0 - loss) * np.sqrt(1.0 - eta_total)


def derive_params(p: SchemeParams, variant: VariantLike = "adjudicated") -> DerivedParams:
    """Derived quantities; ``variant`` picks the eps' and eta' definitions.

    ``alpha_dprime`` is the conventional ``sqrt(rho) alpha``.
    The amplitude the receiver's cat actually needs for perfect
    interference is ``sqrt(1 - rho) alpha`` and is returned separately as
    ``receiver_cat_amplitude``.
    """
    choice = resolve_variant(variant)
    ep = float(_epsilon_prime(p.epsilon, choice.epsilon_prime))
    etap = float(_eta_prime(p.eta_total, p.detector_loss, choice.eta_prime))
    rho = ep * (1.0 - p.eta_total)
    if rho > 1:
        raise DomainError(f"derived reflectivity rho={rho} exceeds 1")
    return DerivedParams(
        epsilon_prime=ep,
        alpha_prime=math.sqrt(1.0 + ep) * p.alpha,
        eta_prime=etap,
        rho=rho,
        gamma=4.0 * rho * (1.0 - rho),
        alpha_dprime=math.sqrt(rho) * p.alpha,
        receiver_cat_amplitude=math.sqrt(1.0 - rho) * p.alpha,
    )


# --- closed forms ------------------------------------------------------------


def _one_minus_exp(x):
    """``1 - exp(-x)`` without cancellation."""
    return -np.expm1(-x)


def original_closed_form_arrays(alpha, epsilon, eta_total, detector_loss, parity, variant: VariantLike = "adjudicated"):
    """Vectorized closed forms for the original scheme; returns ``(F, P)``.

    The hyperbolic products are rewritten through the identity
    ``x2 + y = 2 eps' alpha^2`` (with ``x2 = 2 eps'(1-eta')alpha^2`` and
    ``y = 2 eps' eta' alpha^2``) so nothing overflows at large amplitude.
    """
    parity = Parity.coerce(parity)
    choice = resolve_variant(variant)
    a2 = np.asarray(alpha, dtype=float) ** 2
    ep = _epsilon_prime(epsilon, choice.epsilon_prime)
    etap = _eta_prime(eta_total, detector_loss, choice.eta_prime)
    x2 = 2.0 * ep * (1.0 - etap) * a2
    y = 2.0 * ep * etap * a2
    t2 = np.tanh(2.0 * a2)
    if parity is Parity.EVEN_NONZERO:
        fid = 1.0 / (1.0 + np.tanh(y) * t2)
    else:
        fid = 1.0 / (1.0 + np.tanh(y) / t2)

    herald = _one_minus_exp(x2) ** 2 / 2.0 if parity is Parity.EVEN_NONZERO else _one_minus_exp(2.0 * x2) / 2.0
    sgn = 1.0 if parity is Parity.EVEN_NONZERO else -1.0
    if choice.original_probability == "main_text":
        # main_text flavour: overlap e^{-2 a^2}, unsquared input normalization
        coherence = 1.0 + sgn * np.exp(-2.0 * y - 2.0 * a2)
        denom = 1.0 + np.exp(-2.0 * (1.0 + ep) * a2)
    else:
        # trace of the parity-summed conditional operator, both detectors
        coherence = 1.0 + sgn * np.exp(-2.0 * y - 4.0 * a2)
        denom = (1.0 + np.exp(-2.0 * (1.0 + ep) * a2)) ** 2
    prob = herald * coherence / denom
    return fid, prob


def original_closed_form(p: SchemeParams, parity, variant: VariantLike = "adjudicated") -> tuple[float, float]:
    fid, prob = original_closed_form_arrays(p.alpha, p.epsilon, p.eta_total, p.detector_loss, parity, variant)
    return float(fid), float(prob)


def new_closed_form_arrays(alpha, epsilon, eta_total, detector_loss, variant: VariantLike = "adjudicated"):
    """Vectorized closed forms for the new scheme; returns ``(F, P)``."""
    choice = resolve_variant(variant)
    a2 = np.asarray(alpha, dtype=float) ** 2
    ep = _epsilon_prime(epsilon, choice.epsilon_prime)
    rho = ep * (1.0 - eta_total)
    gamma = 4.0 * rho * (1.0 - rho)
    if choice.new_fidelity == "main_text":
        fid = 1.0 / (1.0 + np.tanh(epsilon * eta_total * a2) * np.tanh(2.0 * (1.0 - epsilon) * a2))
    else:
        fid = 1.0 / (1.0 + np.tanh(ep * eta_total * a2) * np.tanh(2.0 * a2))
    if choice.new_probability == "main_text":
        click = _one_minus_exp((1.0 - detector_loss) * gamma**2 / 2.0) ** 2
        # cosh((1-rho)a^2) / cosh((1+rho)a^2) in overflow-free form
        ratio = np.exp(-2.0 * rho * a2) * (1.0 + np.exp(-2.0 * (1.0 - rho) * a2)) / (1.0 + np.exp(-2.0 * (1.0 + rho) * a2))
        prob = click / (2.0 * (1.0 + ratio))
    else:
        click = _one_minus_exp((1.0 - detector_loss) * gamma * a2 / 2.0) ** 2
        coherence = 1.0 + np.exp(-2.0 * ep * eta_total * a2 - 4.0 * a2)
        denom = 2.0 * (1.0 + np.exp(-2.0 * (1.0 + ep) * a2)) * (1.0 + np.exp(-2.0 * (1.0 - rho) * a2))
        prob = click * coherence / denom
    return fid, prob


def new_closed_form(p: SchemeParams, variant: VariantLike = "adjudicated") -> tuple[float, float]:
    fid, prob = new_closed_form_arrays(p.alpha, p.epsilon, p.eta_total, p.detector_loss, variant)
    return float(fid), float(prob)


# --- engine simulations -----------------------------------------------------


@dataclass(frozen=True)
class SchemeResult:
    fidelity: float
    probability: float
    conditional_state: CoherentOperator
    correction_applied: bool


def correct_phase(rho: CoherentOperator, mode: int) -> CoherentOperator:
    """Local pi phase shift; swaps ``|alpha>`` and ``|-alpha>`` on ``mode``."""
    return apply_network(rho, phase_shift(math.pi, mode, rho.mode_count))


def herald_cutoff_for(mean_photons: float, tail: float = HERALD_TAIL) -> int:
    """Smallest ``n`` with ``P(N > n) < tail`` for Poisson ``N``."""
    n = max(2, int(math.ceil(mean_photons)))
    while poisson.sf(n, mean_photons) >= tail:
        n += 1
    return n


def _tapped_input(p: SchemeParams) -> float:
    """SCS amplitude such that a (1 - eps) transmission leaves ``alpha``."""
    return p.alpha / math.sqrt(1.0 - p.epsilon)


def _original_network_state(p: SchemeParams) -> CoherentOperator:
    """Original scheme up to (not including) detection.

    Mode order: A, B, C out 1, C out 2, A-channel loss, B-channel loss,
    C detector-1 loss, C detector-2 loss.
    """
    eps, eta, loss = p.epsilon, p.eta_one_sided, p.detector_loss
    cat = make_scs(_tapped_input(p), NormSign.PLUS, normalized=True)
    rho = append_vacuum(from_ket(cat.tensor(cat)), 2)
    rho = apply_network(rho, beamsplitter(1.0 - eps, 2, 0, 4).then(beamsplitter(1.0 - eps, 3, 1, 4)))
    rho = apply_loss(rho, 2, eta)
    rho = apply_loss(rho, 3, eta)
    rho = apply_network(rho, beamsplitter(0.5, 2, 3, rho.mode_count))
    rho = apply_loss(rho, 2, loss)
    rho = apply_loss(rho, 3, loss)
    return rho


def original_label_map(p: SchemeParams) -> dict[tuple[int, int], np.ndarray]:
    """Output label (all eight modes) for each sign pattern of the two input cats."""
    out = {}
    a_in = _tapped_input(p)
    for sa in (1, -1):
        for sb in (1, -1):
            rho = from_ket(coherent([sa * a_in, sb * a_in]))
            rho = append_vacuum(rho, 2)
            rho = apply_network(rho, beamsplitter(1.0 - p.epsilon, 2, 0, 4).then(beamsplitter(1.0 - p.epsilon, 3, 1, 4)))
            rho = apply_loss(apply_loss(rho, 2, p.eta_one_sided), 3, p.eta_one_sided)
            rho = apply_network(rho, beamsplitter(0.5, 2, 3, 6))
            rho = apply_loss(apply_loss(rho, 2, p.detector_loss), 3, p.detector_loss)
            out[(sa, sb)] = np.array(rho.kets[0])
    return out


def original_simulate(p: SchemeParams, parity, herald_cutoff: int | None = None) -> SchemeResult:
    """Engine simulation of the original scheme for one herald parity.

    Photon counts ``n`` in C's first output (second output empty) and ``m``
    in the second output (first empty) are both accepted; the ``m`` branch
    gets a pi phase shift on A. The residual superposition-sign flip is not
    corrected, so odd heralds are compared with the minus ECS.
    """
    parity = Parity.coerce(parity)
    rho = _original_network_state(p)
    for env in (7, 6, 5, 4):
        rho = trace_out(rho, env)
    mean = float(np.max(np.abs(rho.kets[:, 2:4]) ** 2))
    needed = herald_cutoff_for(mean)
    if herald_cutoff is None:
        herald_cutoff = needed
    elif poisson.sf(herald_cutoff, mean) >= HERALD_TAIL:
        raise DomainError(f"herald_cutoff={herald_cutoff} leaves a Poisson tail above {HERALD_TAIL}; need >= {needed}")
    ns = parity.photon_numbers(herald_cutoff)

    n_branch = project_fock_set(project_fock(rho, 3, 0), 2, ns)
    m_branch = project_fock_set(project_fock(rho, 2, 0), 2, ns)
    m_branch = correct_phase(m_branch, 0)
    total = canonicalize(n_branch + m_branch, tol=1e-12, drop_zeros=True)

    prob = op_trace(total)
    if not prob > 0:
        raise DegenerateStateError("herald has zero probability")
    target = make_ecs(p.alpha, parity.target_sign, normalized=True)
    fid = fidelity_with_ket(total, target)
    return SchemeResult(fidelity=fid, probability=prob, conditional_state=total.normalized(), correction_applied=True)


@dataclass(frozen=True)
class _NewSchemeLayout:
    sender_amplitude: float
    receiver_amplitude: float
    ancilla_amplitude: float
    reflectivity: float


def _new_layout(p: SchemeParams) -> _NewSchemeLayout:
    a_in = _tapped_input(p)
    received_sq = p.epsilon * a_in**2 * (1.0 - p.eta_total)
    # receiver beam splitter reflectivity that nulls the detector port
    refl = received_sq / p.alpha**2
    if refl >= 1:
        raise DomainError("received amplitude exceeds the target amplitude")
    return _NewSchemeLayout(
        sender_amplitude=a_in,
        receiver_amplitude=math.sqrt(1.0 - refl) * p.alpha,
        ancilla_amplitude=math.sqrt(4.0 * refl * (1.0 - refl)) * p.alpha,
        reflectivity=refl,
    )


def _new_network(rho: CoherentOperator, p: SchemeParams, lay: _NewSchemeLayout) -> CoherentOperator:
    """Modes in: A, B, ancilla, tap (vacuum). Out: A, B, ancilla/detector 2, detector 1, channel loss."""
    rho = apply_network(rho, beamsplitter(1.0 - p.epsilon, 3, 0, 4))
    rho = apply_loss(rho, 3, p.eta_total)
    rho = apply_network(rho, beamsplitter(1.0 - lay.reflectivity, 1, 3, 5))
    return apply_network(rho, beamsplitter(0.5, 3, 2, 5))


def new_label_map(p: SchemeParams) -> dict[tuple[int, int], np.ndarray]:
    """Output labels ``(A, B, detector 1, detector 2, channel loss)`` per sign pattern."""
    lay = _new_layout(p)
    out = {}
    for sa in (1, -1):
        for sb in (1, -1):
            rho = from_ket(coherent([sa * lay.sender_amplitude, sb * lay.receiver_amplitude, lay.ancilla_amplitude, 0.0]))
            lab = _new_network(rho, p, lay).kets[0]
            out[(sa, sb)] = np.array([lab[0], lab[1], lab[3], lab[2], lab[4]])
    return out


def new_simulate(p: SchemeParams) -> SchemeResult:
    """Engine simulation of the new scheme (success = both detectors click)."""
    lay = _new_layout(p)
    psi = (
        make_scs(lay.sender_amplitude, NormSign.PLUS)
        .tensor(make_scs(lay.receiver_amplitude, NormSign.PLUS))
        .tensor(coherent([lay.ancilla_amplitude, 0.0]))
    )
    rho = _new_network(from_ket(psi), p, lay)
    rho = trace_out(rho, 4)
    rho = condition_click(rho, 3, p.detector_loss)
    rho = condition_click(rho, 2, p.detector_loss)
    total = canonicalize(rho, tol=1e-12, drop_zeros=True)
    prob = op_trace(total)
    if not prob > 0:
        raise DegenerateStateError("herald has zero probability")
    fid = fidelity_with_ket(total, make_ecs(p.alpha, NormSign.PLUS, normalized=True))
    return SchemeResult(fidelity=fid, probability=prob, conditional_state=total.normalized(), correction_applied=False)


# --- loss-tolerant unambiguous discrimination ---------------------------------


@dataclass(frozen=True)
class USDDistribution:
    detector1_click: float
    detector2_click: float
    failure: float
    input_sign: NormSign

    @property
    def misidentification(self) -> float:
        return self.detector2_click if self.input_sign is NormSign.PLUS else self.detector1_click

    @property
    def success(self) -> float:
        return self.detector1_click + self.detector2_click


def usd_measure(alpha: float, detector_loss: float, input_sign="plus") -> USDDistribution:
    """Discriminate ``|±alpha>`` by interfering with ``|alpha>`` on a 50:50 splitter.

    A click in detector 1 means ``+``, detector 2 means ``-``, no click is
    an inconclusive result.
    """
    sign = NormSign.coerce(input_sign)
    if not alpha > 0:
        raise DomainError("alpha must be positive")
    rho = from_ket(coherent([sign.factor * alpha, alpha]))
    rho = apply_network(rho, beamsplitter(0.5, 0, 1, 2))

    def prob(first, second):
        # condition detector 2 (mode 1) first so mode 0 keeps its index
        return op_trace(first(second(rho, 1, detector_loss), 0, detector_loss))

    return USDDistribution(
        detector1_click=prob(condition_click, condition_no_click),
        detector2_click=prob(condition_no_click, condition_click),
        failure=prob(condition_no_click, condition_no_click),
        input_sign=sign,
    )
