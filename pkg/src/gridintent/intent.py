"""Hidden-Markov desire filter over goal hypotheses.

Hidden states are the K goal desires plus "unknown goal" (G?) and
"irrational" (Gx).  Each executed action is scored against every goal's
MDP tables into a normalized observation vector; a short-window
rationality indicator picks the emission branch; the filter advances a
max-product (Viterbi) or sum-product (forward) trellis one step per action
and reports the normalized per-state mass as the current desire estimate.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .gridworld import GridMap, Pose
from .planner import PrecomputeTables, parse_action, q_values

DESIRE_UNKNOWN = "G?"
DESIRE_IRRATIONAL = "Gx"

FILTER_KINDS = ("viterbi", "forward")

#: Denominator guard: when a state's best and worst actions are this close,
#: every action counts as fully consistent with the hypothesis.
Q_EQUIV_TOL = 1e-9


def desire_state_names(n_goals: int):
    """Ordered hidden-state names: G1..GK, then G?, then Gx."""
    return tuple(f"G{i}" for i in range(1, n_goals + 1)) + (DESIRE_UNKNOWN, DESIRE_IRRATIONAL)


def initial_distribution(n_goals: int) -> np.ndarray:
    """All probability mass on the unknown-goal state."""
    pi = np.zeros(n_goals + 2)
    pi[n_goals] = 1.0
    return pi


# ---------- parameters ----------


@dataclass(frozen=True)
class HmmParams:
    """Transition/emission constants of the desire model.

    ``beta`` (the unknown-state-to-goal mass) is derived so that rows stay
    stochastic for any goal count: (1 - gamma_hmm - delta/2) / n_goals.
    At the defaults and three goals the matrix is

        goals:  0.8 self, 0.2 -> G?
        G?:     0.1 to each goal, 0.65 self, 0.05 -> Gx
        Gx:     0.1 -> G?, 0.9 self
    """

    n_goals: int
    alpha: float = 0.2
    gamma_hmm: float = 0.65
    delta: float = 0.1
    c_rational: float = 0.55
    c_unknown: float = 0.1
    phi_threshold: float = 0.5
    window: int = 3

    def __post_init__(self):
        if self.n_goals < 1:
            raise ValueError("n_goals must be at least 1")
        if not 0.0 <= self.alpha <= 1.0:
            raise ValueError("alpha must be in [0, 1]")
        if not 0.0 <= self.delta <= 1.0:
            raise ValueError("delta must be in [0, 1]")
        if self.gamma_hmm < 0.0 or self.gamma_hmm + self.delta / 2.0 > 1.0:
            raise ValueError("need 0 <= gamma_hmm and gamma_hmm + delta/2 <= 1")
        if self.c_rational <= 0.0 or self.c_unknown <= 0.0:
            raise ValueError("emission constants must be positive")
        if not 0.0 <= self.phi_threshold <= 1.0:
            raise ValueError("phi_threshold must be in [0, 1]")
        if self.window < 1:
            raise ValueError("window must be at least 1")

    @property
    def beta(self) -> float:
        return (1.0 - self.gamma_hmm - self.delta / 2.0) / self.n_goals

    def transition_matrix(self) -> np.ndarray:
        k = self.n_goals
        n = k + 2
        T = np.zeros((n, n))
        for i in range(k):
            T[i, i] = 1.0 - self.alpha
            T[i, k] = self.alpha
        T[k, :k] = self.beta
        T[k, k] = self.gamma_hmm
        T[k, k + 1] = self.delta / 2.0
        T[k + 1, k] = self.delta
        T[k + 1, k + 1] = 1.0 - self.delta
        return T


# ---------- observations ----------


@dataclass(frozen=True)
class ObservationVector:
    """Per-hypothesis action quality in [0, 1]: 1 at the best action, 0 at
    the worst, linear in Q between; plus the (state, action) it scores."""

    values: np.ndarray
    state: Pose
    action: int


def observe(grid: GridMap, tables: PrecomputeTables, state: Pose, action) -> ObservationVector:
    """Score one action against every goal hypothesis.

    O_i = (Q(a) - Q(worst)) / (Q(best) - Q(worst)); a state whose actions
    are all Q-equivalent under a hypothesis scores 1 (nothing distinguishes
    the action from the optimum there).
    """
    action = parse_action(action)
    gamma = tables.params["gamma"]
    eps_move = tables.params["eps_move"]
    out = np.empty(len(tables.hypotheses))
    for i, hyp in enumerate(tables.hypotheses):
        q = q_values(grid, hyp.rewards, hyp.values, state, gamma=gamma, eps_move=eps_move)
        lo = q.min()
        span = q.max() - lo
        if span < Q_EQUIV_TOL:
            out[i] = 1.0
        else:
            out[i] = (q[action] - lo) / span
    return ObservationVector(values=out, state=state, action=action)


def rationality_phi(history, window: int = 3) -> float:
    """Max over hypotheses of the mean observation value across the last
    ``window`` observations (fewer are allowed near the episode start)."""
    if len(history) == 0:
        raise ValueError("rationality_phi needs at least one observation")
    rows = [np.asarray(o.values if isinstance(o, ObservationVector) else o) for o in history]
    recent = np.stack(rows[-window:])
    return float(recent.mean(axis=0).max())


def emission_row(obs_values, phi: float, params: HmmParams) -> np.ndarray:
    """Emission probabilities over the K+2 desire states, normalized.

    Rational regime (phi above threshold): goals emit tanh(O_i), the
    unknown state a fixed tanh(c_rational), the irrational state nothing.
    Otherwise observations are discounted to tanh(O_i/2), the unknown
    state drops to tanh(c_unknown) and the irrational state emits
    tanh(1 - phi).  The unknown state's entry is positive in both regimes,
    which keeps the trellis alive forever.
    """
    o = np.asarray(obs_values, dtype=np.float64)
    if o.shape != (params.n_goals,):
        raise ValueError(f"expected {params.n_goals} observation values")
    if phi > params.phi_threshold:
        row = np.concatenate([np.tanh(o), [math.tanh(params.c_rational), 0.0]])
    else:
        row = np.concatenate(
            [np.tanh(o / 2.0), [math.tanh(params.c_unknown), math.tanh(1.0 - phi)]]
        )
    total = row.sum()
    assert total > 0.0, "emission row lost all mass"
    return row / total


# ---------- trellis filtering ----------


@dataclass
class DesireEstimate:
    """Filter output: per-step normalized state mass (row 0 is the prior)
    and the most likely hidden-state sequence over the emitted steps."""

    per_step: np.ndarray
    sequence: list = field(default_factory=list)

    @property
    def current(self) -> np.ndarray:
        return self.per_step[-1]


class DesireFilter:
    """Incremental trellis over desire states; one step per action.

    ``viterbi`` (default) propagates max-product scores and backtraces the
    most probable state sequence; ``forward`` propagates sum-product
    probabilities and reports per-step argmax states.  Each step is
    renormalized, which leaves both the normalized estimates and every
    argmax unchanged while keeping 1e5-step sessions away from underflow.
    """

    def __init__(self, params: HmmParams, kind: str = "viterbi"):
        if kind not in FILTER_KINDS:
            raise ValueError(f"kind must be one of {FILTER_KINDS}")
        self.params = params
        self.kind = kind
        self._T = params.transition_matrix()
        self.reset()

    def reset(self):
        self._mass = initial_distribution(self.params.n_goals)
        self._backpointers = []
        self._history = [self._mass.copy()]

    @property
    def step_count(self) -> int:
        return len(self._history) - 1

    @property
    def estimate(self) -> np.ndarray:
        """Current normalized state mass (the desire probabilities)."""
        return self._mass.copy()

    def estimates(self) -> np.ndarray:
        """(t+1, K+2) per-step estimates including the step-0 prior."""
        return np.stack(self._history)

    def step(self, emission: np.ndarray) -> np.ndarray:
        emission = np.asarray(emission, dtype=np.float64)
        flow = self._mass[:, None] * self._T  # [from, to]
        if self.kind == "viterbi":
            self._backpointers.append(np.argmax(flow, axis=0))
            mass = emission * flow.max(axis=0)
        else:
            mass = emission * flow.sum(axis=0)
        total = mass.sum()
        assert total > 0.0, "trellis lost all mass"
        self._mass = mass / total
        self._history.append(self._mass.copy())
        return self._mass.copy()

    def sequence(self) -> list:
        """Most likely hidden-state index per emitted step (length = steps)."""
        t = self.step_count
        if t == 0:
            return []
        if self.kind == "viterbi":
            states = [int(np.argmax(self._history[-1]))]
            for bp in reversed(self._backpointers[1:]):
                states.append(int(bp[states[-1]]))
            states.reverse()
            return states
        return [int(np.argmax(h)) for h in self._history[1:]]


def estimate_desires(params: HmmParams, emissions, kind: str = "viterbi") -> DesireEstimate:
    """Run the whole trellis over a sequence of emission rows."""
    filt = DesireFilter(params, kind=kind)
    for e in emissions:
        filt.step(e)
    return DesireEstimate(per_step=filt.estimates(), sequence=filt.sequence())


class IntentTracker:
    """Per-episode glue: observation history, rationality, filter state."""

    def __init__(self, params: HmmParams, kind: str = "viterbi"):
        self.params = params
        self.filter = DesireFilter(params, kind=kind)
        self._observations = []

    def reset(self):
        self.filter.reset()
        self._observations.clear()

    def update(self, obs: ObservationVector):
        """Fold one observation in; returns (phi, emission row, estimate)."""
        self._observations.append(np.asarray(obs.values, dtype=np.float64))
        phi = rationality_phi(self._observations, window=self.params.window)
        emission = emission_row(obs.values, phi, self.params)
        estimate = self.filter.step(emission)
        return phi, emission, estimate
