"""Simulation of two protocols for distributing entangled coherent states.

Three independent evaluation routes are provided: closed forms
(:mod:`ecsdist.schemes`), an exact engine over coherent-state dyadics
(:mod:`ecsdist.operator`) and a truncated Fock-space oracle
(:mod:`ecsdist.fock`).
"""

from .coherent import (
    CoherentKet,
    CoherentLabel,
    NormSign,
    coherent,
    ket_fidelity,
    ket_inner,
    ket_norm_sq,
    make_ecs,
    make_scs,
    norm_const,
    overlap,
    vacuum,
)
from .errors import (
    DegenerateStateError,
    DimensionError,
    DomainError,
    EcsError,
    SingularityError,
    TruncationError,
)
from .fock import OracleResult, herald_distribution, oracle_run
from .operator import CoherentOperator, LinearNetwork, beamsplitter, from_ket, loss_channel_isometry, phase_shift
from .schemes import (
    ADJUDICATED,
    DerivedParams,
    FormulaChoice,
    Parity,
    SchemeParams,
    SchemeResult,
    USDDistribution,
    derive_params,
    new_closed_form,
    new_simulate,
    original_closed_form,
    original_simulate,
    usd_measure,
)
from .sweep import CrossoverReport, SweepSpec, find_crossover, sweep_table
from .validation import ValidationReport, run_validation

__version__ = "0.1.0"
