"""Bayesian decision layer: ensembles, priors, gain tables, action choice.

Two policies are shipped.  ThresholdFlip is the operational rule used in
all Monte Carlo reproductions: pulse on outcome +1, do nothing on -1.
BayesGainPolicy is the general machinery (posterior update + expected-gain
argmax over discrete ensembles); it reduces to ThresholdFlip for the
simple indicator gain table and is exercised on discrete ensembles.

Continuous (Haar) ensembles use ThresholdFlip only: no posterior update
over a continuum is defined here.
"""

from dataclasses import dataclass, field
from enum import IntEnum
from typing import Callable, Optional, Sequence, Tuple, Union

import numpy as np

from .errors import DegenerateEvidence
from .qmath import SIGMA_X
from .states import (DensityMatrix, PureQubit, QubitHamiltonian, ergotropy,
                     ergotropy_pure, to_density)

#: Bayes denominator underflow threshold
EVIDENCE_FLOOR = 1e-14


class Action(IntEnum):
    """Demon actions, ordered so that argmax ties resolve to the cheaper
    choice (the pulse costs work)."""

    DO_NOTHING = 0
    APPLY_PULSE = 1


@dataclass(frozen=True)
class Ensemble:
    """Source of ancilla states: a discrete weighted set, or Haar-uniform.

    Discrete members are (state, q) pairs with q summing to 1; states may
    be PureQubit or DensityMatrix (the trajectory loop samples pure states
    only, but ensemble averages accept mixed members).
    """

    members: Optional[Tuple[Tuple[object, float], ...]] = None
    continuous: bool = False

    def __post_init__(self):
        if self.continuous:
            if self.members is not None:
                raise ValueError("continuous ensemble carries no member list")
            return
        if not self.members:
            raise ValueError("discrete ensemble needs at least one member")
        qs = np.array([q for _, q in self.members], dtype=float)
        if (qs < 0.0).any():
            raise ValueError("sampling probabilities must be nonnegative")
        if abs(qs.sum() - 1.0) > 1e-12:
            raise ValueError(f"sampling probabilities sum to {qs.sum()}, not 1")

    @classmethod
    def discrete(cls, pairs: Sequence[Tuple[object, float]]) -> "Ensemble":
        return cls(members=tuple(pairs))

    @classmethod
    def haar(cls) -> "Ensemble":
        return cls(members=None, continuous=True)

    @property
    def size(self) -> int:
        if self.continuous:
            raise ValueError("continuous ensemble has no finite size")
        return len(self.members)


@dataclass
class PriorState:
    """Probability vector over the members of a discrete ensemble."""

    probs: np.ndarray

    def __post_init__(self):
        p = np.array(self.probs, dtype=float)
        if (p < 0.0).any():
            raise ValueError("prior probabilities must be nonnegative")
        if abs(p.sum() - 1.0) > 1e-12:
            raise ValueError(f"prior sums to {p.sum()}, not 1")
        self.probs = p

    @classmethod
    def uniform(cls, n: int) -> "PriorState":
        return cls(np.full(n, 1.0 / n))


class GainTable:
    """Nonnegative gain lambda(action | outcome, member_index).

    Wraps a callable; evaluation checks nonnegativity so misbuilt tables
    fail loudly at the point of use.
    """

    def __init__(self, fn: Callable[[Action, object, int], float]):
        self._fn = fn

    def __call__(self, action: Action, outcome: object, member: int) -> float:
        g = float(self._fn(action, outcome, member))
        if g < 0.0:
            raise ValueError(
                f"gain table returned {g} < 0 for "
                f"({action!r}, {outcome!r}, member {member})")
        return g


def threshold_gain_table() -> GainTable:
    """The simple indicator table: doing nothing gains 1 on outcome -1,
    pulsing gains 1 on outcome +1.  Reproduces ThresholdFlip under
    bayes-gain argmax for any prior."""

    def fn(action: Action, outcome: object, member: int) -> float:
        if action == Action.DO_NOTHING:
            return 1.0 if outcome == -1 else 0.0
        return 1.0 if outcome == +1 else 0.0

    return GainTable(fn)


def _default_pulse() -> np.ndarray:
    return SIGMA_X.copy()


@dataclass(frozen=True)
class ThresholdFlip:
    """Pulse if and only if the outcome is +1."""

    pulse: np.ndarray = field(default_factory=_default_pulse)

    needs_likelihoods = False


@dataclass
class BayesGainPolicy:
    """Expected-gain maximizer over a discrete ensemble.

    When ``recycle_prior`` is set the posterior of each decision becomes
    the prior of the next; the instance then carries mutable per-trajectory
    state and must not be shared across trajectories (use
    :meth:`trajectory_instance`).  Recycling is meaningful only in the
    full-reset regime, where successive likelihoods are identically
    distributed.
    """

    table: GainTable
    prior: PriorState
    ensemble: Ensemble
    pulse: np.ndarray = field(default_factory=_default_pulse)
    recycle_prior: bool = False
    actions: Tuple[Action, ...] = (Action.DO_NOTHING, Action.APPLY_PULSE)

    needs_likelihoods = True

    def __post_init__(self):
        if self.ensemble.continuous:
            raise ValueError(
                "Bayes-gain policy requires a discrete ensemble; "
                "continuous ensembles use ThresholdFlip")
        if len(self.prior.probs) != self.ensemble.size:
            raise ValueError("prior length does not match ensemble size")

    def trajectory_instance(self) -> "BayesGainPolicy":
        """Fresh copy with its own prior, for one trajectory worker."""
        return BayesGainPolicy(table=self.table,
                               prior=PriorState(self.prior.probs.copy()),
                               ensemble=self.ensemble,
                               pulse=self.pulse,
                               recycle_prior=self.recycle_prior,
                               actions=self.actions)


DecisionPolicy = Union[ThresholdFlip, BayesGainPolicy]


def posterior(prior: PriorState, likelihoods: np.ndarray) -> PriorState:
    """Bayes update: P(psi_i | x) proportional to P(x | psi_i) P(psi_i)."""
    lk = np.asarray(likelihoods, dtype=float)
    if (lk < 0.0).any():
        raise ValueError("likelihoods must be nonnegative")
    weighted = lk * prior.probs
    z = weighted.sum()
    if z <= EVIDENCE_FLOOR:
        raise DegenerateEvidence(
            f"evidence {z:.3e} underflows; outcome impossible under prior")
    return PriorState(weighted / z)


def bayes_gain(table: GainTable, post: PriorState, x: object,
               actions: Sequence[Action] = (Action.DO_NOTHING,
                                            Action.APPLY_PULSE)) -> np.ndarray:
    """Expected gain G(action | x) = sum_i lambda(action | x, i) P(i | x)."""
    return np.array([
        sum(table(a, x, i) * p for i, p in enumerate(post.probs))
        for a in actions
    ])


def decide(policy: DecisionPolicy, x: object,
           likelihoods: Optional[np.ndarray] = None) -> Action:
    """Select the demon's action for outcome ``x``.

    ThresholdFlip ignores ``likelihoods``.  BayesGainPolicy requires the
    likelihood vector P(x | psi_i) over its ensemble; ties in the gain
    argmax resolve to the lowest action index (DO_NOTHING first).
    """
    if isinstance(policy, ThresholdFlip):
        return Action.APPLY_PULSE if x == +1 else Action.DO_NOTHING
    if likelihoods is None:
        raise ValueError("Bayes-gain decision needs the likelihood vector")
    post = posterior(policy.prior, likelihoods)
    if policy.recycle_prior:
        policy.prior = post
    gains = bayes_gain(policy.table, post, x, policy.actions)
    return policy.actions[int(np.argmax(gains))]


def raw_ensemble_ergotropy(ensemble: Ensemble, omega: float) -> float:
    """Average ergotropy of the source ensemble, before any processing.

    Haar-uniform: the integral of omega*sin^2(theta/2) over the sphere is
    omega/2 exactly.  Discrete: the q-weighted average over members.
    """
    if ensemble.continuous:
        return 0.5 * omega
    h = QubitHamiltonian(omega)
    total = 0.0
    for state, q in ensemble.members:
        if isinstance(state, PureQubit):
            total += q * ergotropy_pure(state, omega)
        elif isinstance(state, DensityMatrix):
            total += q * ergotropy(state, h)
        else:
            raise TypeError(f"unsupported ensemble member {type(state)}")
    return total


class EnsembleSampler:
    """Draws PureQubit members from a discrete ensemble.

    One uniform variate per draw, walked against the cumulative member
    weights (same convention as outcome sampling in the engine).
    """

    def __init__(self, ensemble: Ensemble, rng):
        if ensemble.continuous:
            raise ValueError("use HaarQubitSampler for continuous ensembles")
        for state, _ in ensemble.members:
            if not isinstance(state, PureQubit):
                raise TypeError(
                    "trajectory sampling requires pure ensemble members")
        self._states = [s for s, _ in ensemble.members]
        self._cum = np.cumsum([q for _, q in ensemble.members])
        self._rng = rng

    def sample(self) -> PureQubit:
        u = self._rng.random()
        idx = int(np.searchsorted(self._cum, u, side="right"))
        return self._states[min(idx, len(self._states) - 1)]
