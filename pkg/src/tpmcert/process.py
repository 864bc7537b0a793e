"""Process operators for two-point-measurement experiments.

A process is specified by an initial two-qubit state on A' (x) E and a unitary
interaction U: A (x) E -> B (x) E' (first output factor is the measured system
B).  It is compiled once into an 8x8 operator W on A' (x) A (x) B from which
all observational and interventional statistics follow by contraction.

W is stored in the positive-semidefinite (Choi-like) convention: the
re-preparation state occupies the channel-input slot of W and therefore enters
every contraction transposed.  This is the unique convention under which W is
PSD, Tr_B W = rho_A' (x) id_A, and the contraction reproduces the step-by-step
simulation (measure, collapse, re-prepare, evolve, measure) for arbitrary
complex-valued instruments.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from . import linalg
from .exceptions import ValidationError

PROCESS_ATOL = 1e-9
INPUT_ATOL = 1e-10

QUBIT_TPM_LAYOUT = (2, 2, 2)


@dataclass(frozen=True)
class MpInstrument:
    """Measure-and-prepare instrument for the first time step.

    povm maps each setting label to the pair of effects (outcome 0, outcome 1)
    on A'.  Re-preparations are indexed by outcome only, never by setting; that
    restriction is what makes the later crosstalk analysis meaningful.
    """

    settings: tuple[str, ...]
    povm: Mapping[str, tuple[np.ndarray, np.ndarray]]
    repreparations: tuple[np.ndarray, np.ndarray]

    def __post_init__(self):
        if len(self.settings) != len(set(self.settings)):
            raise ValidationError("duplicate setting labels")
        for x in self.settings:
            if x not in self.povm:
                raise ValidationError(f"no POVM declared for setting {x!r}")
            linalg.assert_povm(self.povm[x], INPUT_ATOL)
        for rho in self.repreparations:
            linalg.assert_density_matrix(rho, INPUT_ATOL)


@dataclass(frozen=True)
class ProcessOperator:
    """Operator W on A' (x) A (x) B together with the marginal state on A'."""

    w: np.ndarray
    marginal_state: np.ndarray
    layout: tuple[int, int, int] = QUBIT_TPM_LAYOUT


@dataclass(frozen=True)
class Behavior:
    """Observational table P(a, b | x) with binary outcomes.

    probs has shape (n_settings, 2, 2) indexed [x, a, b]; shots optionally
    records the per-setting sample size behind the frequencies.
    """

    settings: tuple[str, ...]
    probs: np.ndarray
    shots: Mapping[str, int] | None = None

    def __post_init__(self):
        p = np.asarray(self.probs, dtype=float)
        if p.shape != (len(self.settings), 2, 2):
            raise ValidationError(f"behavior table has shape {p.shape}")
        if p.min() < -PROCESS_ATOL:
            raise ValidationError("negative probability in behavior")
        if np.abs(p.sum(axis=(1, 2)) - 1.0).max() > PROCESS_ATOL:
            raise ValidationError("behavior not normalized per setting")

    def setting_index(self, label: str) -> int:
        return self.settings.index(label)


@dataclass(frozen=True)
class DoTable:
    """Interventional table P(B = b | do(A = a, X = x)).

    probs has shape (2, n_do_settings, 2) indexed [a, x, b].  When the
    re-preparation is setting-independent the x axis collapses to length one
    and do_settings is None; the ACDE of such a table is exactly zero.
    """

    probs: np.ndarray
    do_settings: tuple[str, ...] | None = None
    shots: Mapping[tuple[int, str], int] | None = field(default=None)

    def __post_init__(self):
        p = np.asarray(self.probs, dtype=float)
        k = 1 if self.do_settings is None else len(self.do_settings)
        if p.shape != (2, k, 2):
            raise ValidationError(f"do-table has shape {p.shape}, expected (2,{k},2)")
        if p.min() < -PROCESS_ATOL:
            raise ValidationError("negative probability in do-table")
        if np.abs(p.sum(axis=2) - 1.0).max() > PROCESS_ATOL:
            raise ValidationError("do-table not normalized per (a, x)")


def build_process(rho: np.ndarray, u: np.ndarray) -> ProcessOperator:
    """Compile (initial state, interaction) into a process operator.

    rho lives on A' (x) E, u maps A (x) E to B (x) E'.  The contraction is

        W = Tr_{EE'}[ (rho^{T_E} (x) id_{ABE'}) (id_{A'} (x) |U>><<U|) ]

    on the factor ordering (A', A, E, B, E'), which lands on A' (x) A (x) B.
    """
    rho = np.asarray(rho, dtype=complex)
    u = np.asarray(u, dtype=complex)
    if rho.shape != (4, 4) or u.shape != (4, 4):
        raise ValidationError("expected 4x4 state and 4x4 unitary")
    linalg.assert_density_matrix(rho, INPUT_ATOL)
    linalg.assert_unitary(u, INPUT_ATOL)

    uu = linalg.vectorize(u)                      # on (A,E) (x) (B,E')
    t = np.kron(linalg.ID2, uu @ uu.conj().T)     # A', A, E, B, E'
    rho_pt = linalg.partial_transpose(rho, (2, 2), 1)
    s = np.kron(rho_pt, np.eye(8, dtype=complex))         # A', E, A, B, E'
    s = linalg.permute_factors(s, (2,) * 5, (0, 2, 1, 3, 4))
    w = linalg.partial_trace(s @ t, (2,) * 5, {2, 4})
    w = 0.5 * (w + w.conj().T)

    marginal = linalg.partial_trace(rho, (2, 2), {1})
    op = ProcessOperator(w=w, marginal_state=marginal)
    problems = validate_process(op)
    if problems:
        raise ValidationError(f"constructed process is invalid: {problems}")
    return op


def validate_process(op: ProcessOperator | np.ndarray, atol: float = PROCESS_ATOL) -> list[str]:
    """Diagnostic check of the process-operator invariants; empty list = valid.

    Checks Hermiticity, positivity, Tr W = 2, and the causality marginal
    Tr_B W = rho_A' (x) id_A.  When a declared marginal state is available it
    must agree with the marginal derived from W itself.
    """
    if isinstance(op, ProcessOperator):
        w, declared = op.w, op.marginal_state
    else:
        w, declared = np.asarray(op, dtype=complex), None
    problems: list[str] = []
    if w.shape != (8, 8):
        return [f"wrong shape {w.shape}, expected (8, 8)"]
    if not linalg.is_hermitian(w, atol):
        problems.append("not Hermitian")
        w = 0.5 * (w + w.conj().T)
    if np.linalg.eigvalsh(w).min() < -atol:
        problems.append("positivity violated")
    if abs(np.trace(w).real - 2.0) > atol:
        problems.append(f"trace is {np.trace(w).real:.6g}, expected 2")
    tr_b = linalg.partial_trace(w, QUBIT_TPM_LAYOUT, {2})
    derived_marginal = linalg.partial_trace(w, QUBIT_TPM_LAYOUT, {1, 2}) / 2.0
    if np.abs(tr_b - np.kron(derived_marginal, linalg.ID2)).max() > atol:
        problems.append("marginal violated: Tr_B W is not rho_A' (x) id_A")
    if declared is not None and np.abs(derived_marginal - declared).max() > atol:
        problems.append("declared marginal state disagrees with Tr_{AB} W / 2")
    return problems


def _event_probability(w: np.ndarray, e: np.ndarray, rho_t: np.ndarray, f: np.ndarray) -> float:
    m = np.kron(np.kron(e, rho_t), f)
    return float(np.einsum("ij,ji->", m, w).real)


def born_rule(
    op: ProcessOperator,
    inst: MpInstrument,
    final_povm: Sequence[np.ndarray],
) -> Behavior:
    """Observational statistics P(a, b | x) = Tr[(E_{a|x} (x) rho_a^T (x) F_b) W].

    The transpose on the re-preparation is the stored-W convention (see module
    docstring); the result agrees with sequential state-vector simulation.
    """
    linalg.assert_povm(final_povm, INPUT_ATOL)
    if len(final_povm) != 2:
        raise ValidationError("final measurement must be binary")
    reps_t = [np.asarray(r).T for r in inst.repreparations]
    probs = np.empty((len(inst.settings), 2, 2))
    for xi, x in enumerate(inst.settings):
        effects = inst.povm[x]
        for a in (0, 1):
            for b in (0, 1):
                probs[xi, a, b] = _event_probability(
                    op.w, effects[a], reps_t[a], final_povm[b]
                )
    probs = probs.clip(min=0.0)
    return Behavior(settings=tuple(inst.settings), probs=probs)


def do_probabilities(
    op: ProcessOperator,
    repreparations: Sequence[np.ndarray],
    final_povm: Sequence[np.ndarray],
) -> DoTable:
    """Interventional statistics P(b | do(A = a)) = Tr[(id (x) rho_a^T (x) F_b) W].

    The intervention discards the first measurement outcome entirely, so with
    setting-independent re-preparations the table carries no x index and its
    ACDE is identically zero.
    """
    linalg.assert_povm(final_povm, INPUT_ATOL)
    for rho in repreparations:
        linalg.assert_density_matrix(rho, INPUT_ATOL)
    probs = np.empty((2, 1, 2))
    for a in (0, 1):
        rho_t = np.asarray(repreparations[a]).T
        for b in (0, 1):
            probs[a, 0, b] = _event_probability(op.w, linalg.ID2, rho_t, final_povm[b])
    probs = probs.clip(min=0.0)
    return DoTable(probs=probs, do_settings=None)
