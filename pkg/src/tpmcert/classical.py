"""Brute-force classical-causal oracles.

Deterministic hidden-variable strategies are enumerated exhaustively, so the
classical bounds come out as exact polytope facts rather than optimization
results: the functionals of interest are concave over mixtures, hence their
minima over the classical set are attained at the enumerated vertices.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from . import certify
from .exceptions import ResourceLimitError, ValidationError
from .process import Behavior, DoTable

MAX_STRATEGIES = 1_000_000


@dataclass(frozen=True)
class ClassicalStrategy:
    """One deterministic vertex of the classical polytope.

    a_response maps the setting index to the first outcome; b_response maps
    the first outcome to the second outcome, or (a, x) to b in crosstalk mode
    where the setting may leak directly to the second measurement.
    """

    a_response: tuple[int, ...]
    b_response: tuple[int, ...] | tuple[tuple[int, ...], ...]
    crosstalk: bool

    @property
    def n_settings(self) -> int:
        return len(self.a_response)

    def b_of(self, a: int, x: int) -> int:
        if self.crosstalk:
            return self.b_response[a][x]
        return self.b_response[a]


def enumerate_strategies(
    x_alphabet_size: int, crosstalk: bool = False
) -> list[ClassicalStrategy]:
    """All deterministic strategies: 2^|X| * 4 without crosstalk,
    2^|X| * 2^(2|X|) with it."""
    n = int(x_alphabet_size)
    if n < 1:
        raise ValidationError("need at least one setting")
    total = 2**n * (2 ** (2 * n) if crosstalk else 4)
    if total > MAX_STRATEGIES:
        raise ResourceLimitError(
            f"{total} strategies at |X| = {n} exceeds the desk-scale limit"
        )
    strategies = []
    for a_resp in itertools.product((0, 1), repeat=n):
        if crosstalk:
            for b_flat in itertools.product((0, 1), repeat=2 * n):
                b_resp = (tuple(b_flat[:n]), tuple(b_flat[n:]))
                strategies.append(ClassicalStrategy(a_resp, b_resp, True))
        else:
            for b_resp in itertools.product((0, 1), repeat=2):
                strategies.append(ClassicalStrategy(a_resp, b_resp, False))
    return strategies


def _labels(n: int) -> tuple[str, ...]:
    return tuple(str(i) for i in range(n))


def strategy_behavior(s: ClassicalStrategy) -> tuple[Behavior, DoTable]:
    """Deterministic behavior and do-table of one strategy.

    The intervention severs the dependence of A on X, so the do-table is read
    directly off b_response; without crosstalk it carries no setting index.
    """
    n = s.n_settings
    probs = np.zeros((n, 2, 2))
    for x in range(n):
        a = s.a_response[x]
        probs[x, a, s.b_of(a, x)] = 1.0
    if s.crosstalk:
        do = np.zeros((2, n, 2))
        for a in (0, 1):
            for x in range(n):
                do[a, x, s.b_of(a, x)] = 1.0
        table = DoTable(probs=do, do_settings=_labels(n))
    else:
        do = np.zeros((2, 1, 2))
        for a in (0, 1):
            do[a, 0, s.b_of(a, 0)] = 1.0
        table = DoTable(probs=do, do_settings=None)
    return Behavior(settings=_labels(n), probs=probs), table


def mix_behaviors(
    strategies: list[ClassicalStrategy], weights: np.ndarray
) -> tuple[Behavior, DoTable]:
    """Convex mixture of strategies (all must share mode and alphabet)."""
    if not strategies:
        raise ValidationError("empty mixture")
    if len({(s.crosstalk, s.n_settings) for s in strategies}) != 1:
        raise ValidationError("mixture components must share mode and alphabet")
    w = np.asarray(weights, dtype=float)
    if w.shape != (len(strategies),) or w.min() < 0 or abs(w.sum() - 1.0) > 1e-12:
        raise ValidationError("weights must be a probability vector over strategies")
    behs, dos = zip(*(strategy_behavior(s) for s in strategies))
    probs = sum(wi * b.probs for wi, b in zip(w, behs))
    do = sum(wi * d.probs for wi, d in zip(w, dos))
    return (
        Behavior(settings=behs[0].settings, probs=probs),
        DoTable(probs=do, do_settings=dos[0].do_settings),
    )


def classical_minimum_gamma(x_alphabet_size: int) -> float:
    """Exact minimum of gamma over all no-crosstalk deterministic strategies
    (and hence over their convex hull, by concavity of gamma)."""
    best = np.inf
    for s in enumerate_strategies(x_alphabet_size, crosstalk=False):
        beh, _ = strategy_behavior(s)
        best = min(best, certify.gamma_functional(beh)[0])
    return float(best)


def check_corrected_bound(strategies: list[ClassicalStrategy]) -> float:
    """Worst case of gamma + 2 ACDE over the given (crosstalk) vertices."""
    if not strategies:
        raise ValidationError("no strategies given")
    worst = np.inf
    for s in strategies:
        beh, do = strategy_behavior(s)
        worst = min(worst, certify.corrected_lhs(beh, do))
    return float(worst)


def lemma1_check(
    strategies: ClassicalStrategy | list[ClassicalStrategy],
    mixtures: int = 0,
    seed: int = 20240601,
    atol: float = 1e-12,
) -> bool:
    """Verify the potential-outcome inequalities on vertices or random mixtures.

    Checked per distribution: (1) the interventional probability dominates the
    observed joint, min_x P(b | do(a, x)) >= sup_x P(a, b | x); (2) for
    no-crosstalk mixtures, the joint counterfactual is bounded by the pairwise
    sums, P(b0, b1) <= min_x [P(0, b0 | x) + P(1, b1 | x)].  Crosstalk vertices
    are allowed to fail (1), which is exactly what the corrected bound repairs.
    """
    strategy_list = [strategies] if isinstance(strategies, ClassicalStrategy) else strategies
    if not strategy_list:
        raise ValidationError("no strategies given")

    def eq1_holds(beh: Behavior, do: DoTable) -> bool:
        p_do = do.probs.min(axis=1)  # worst case over the (possibly trivial) x index
        sup_obs = np.asarray(beh.probs).max(axis=0)
        return bool((p_do - sup_obs).min() >= -atol)

    def eq2_holds(beh: Behavior, joint: np.ndarray) -> bool:
        t = np.asarray(beh.probs)[:, 0, :, None] + np.asarray(beh.probs)[:, 1, None, :]
        return bool((t.min(axis=0) - joint).min() >= -atol)

    def joint_counterfactual(weights: np.ndarray) -> np.ndarray:
        joint = np.zeros((2, 2))
        for wi, s in zip(weights, strategy_list):
            joint[s.b_of(0, 0), s.b_of(1, 0)] += wi
        return joint

    crosstalk = any(s.crosstalk for s in strategy_list)
    rng = np.random.default_rng(seed)
    n = len(strategy_list)
    weight_sets = [np.eye(n)[i] for i in range(n)] if mixtures == 0 else [
        rng.dirichlet(np.ones(n)) for _ in range(mixtures)
    ]
    for w in weight_sets:
        beh, do = mix_behaviors(strategy_list, w)
        if not eq1_holds(beh, do):
            return False
        if not crosstalk and not eq2_holds(beh, joint_counterfactual(w)):
            return False
    return True
