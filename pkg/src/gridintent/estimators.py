"""Scikit-learn style estimator facade over the recognition pipeline.

``fit`` runs the offline precompute for one map; ``predict_proba`` filters
an action sequence from a start pose into per-step desire probabilities and
``predict`` returns the most likely hidden-state sequence.  Parameters
follow the sklearn convention (stored verbatim in ``__init__``, validated
in ``fit``), so ``get_params``/``set_params``/``clone`` work as usual.
"""

from __future__ import annotations

import math

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from .engine import RunParams, Session
from .gridworld import GridMap, parse_map
from .intent import desire_state_names
from .validation import check_actions, check_pose


class IntentionRecognizer(BaseEstimator):
    """Per-goal MDP scoring plus HMM filtering behind a fit/predict API.

    Parameters
    ----------
    gamma : float, default=0.95
        Discount factor of the per-goal value iteration.
    eta : float, default=0.01
        Convergence threshold on the total absolute value change per sweep.
    eps_move : float, default=0.1
        Slip probability mass of the motion model.
    eps_reward : float, default=0.1
        Base penalty added to the heading-deviation reward.
    eps_astar : float, default=1e-3
        Visibility discount of the path search.
    fov_half_angle : float, default=pi/2
        Half-angle of the agent's vision cone.
    reward_floor : {"eps-pi", "pi"}, default="eps-pi"
        How hidden/unreachable paths are scored.
    alpha, gamma_hmm, delta : float
        Desire-state transition constants.
    c_rational, c_unknown : float
        Emission constants of the unknown-goal state.
    phi_threshold : float, default=0.5
        Rationality threshold selecting the emission branch.
    window : int, default=3
        Number of recent observations averaged into the rationality score.
    filter_kind : {"viterbi", "forward"}, default="viterbi"
        Trellis propagation rule.

    Attributes
    ----------
    grid_ : GridMap
        The fitted map.
    tables_ : PrecomputeTables
        Converged per-hypothesis reward/value tables.
    state_names_ : tuple of str
        Hidden-state names, goals first.
    n_goals_ : int
        Number of goal hypotheses.
    """

    def __init__(
        self,
        gamma=0.95,
        eta=0.01,
        eps_move=0.1,
        eps_reward=0.1,
        eps_astar=1e-3,
        fov_half_angle=math.pi / 2,
        reward_floor="eps-pi",
        alpha=0.2,
        gamma_hmm=0.65,
        delta=0.1,
        c_rational=0.55,
        c_unknown=0.1,
        phi_threshold=0.5,
        window=3,
        filter_kind="viterbi",
    ):
        self.gamma = gamma
        self.eta = eta
        self.eps_move = eps_move
        self.eps_reward = eps_reward
        self.eps_astar = eps_astar
        self.fov_half_angle = fov_half_angle
        self.reward_floor = reward_floor
        self.alpha = alpha
        self.gamma_hmm = gamma_hmm
        self.delta = delta
        self.c_rational = c_rational
        self.c_unknown = c_unknown
        self.phi_threshold = phi_threshold
        self.window = window
        self.filter_kind = filter_kind

    # ---------- sklearn plumbing ----------

    def _run_params(self) -> RunParams:
        return RunParams(
            gamma=self.gamma,
            eta=self.eta,
            eps_move=self.eps_move,
            eps_reward=self.eps_reward,
            eps_astar=self.eps_astar,
            fov_half_angle=self.fov_half_angle,
            reward_floor=self.reward_floor,
            alpha=self.alpha,
            gamma_hmm=self.gamma_hmm,
            delta=self.delta,
            c_rational=self.c_rational,
            c_unknown=self.c_unknown,
            phi_threshold=self.phi_threshold,
            window=self.window,
            filter_kind=self.filter_kind,
        ).validate()

    # ---------- estimator API ----------

    def fit(self, X, y=None):
        """Precompute per-goal tables for a map.

        Parameters
        ----------
        X : GridMap or str
            The map to fit, either parsed or as ASCII text.
        y : ignored
            Present for estimator-API compatibility.
        """
        from .engine import precompute

        params = self._run_params()
        grid = X if isinstance(X, GridMap) else parse_map(X)
        self.grid_ = grid
        self.tables_ = precompute(grid, params)
        self.n_goals_ = grid.n_goals
        self.state_names_ = desire_state_names(grid.n_goals)
        return self

    def _session(self, start) -> Session:
        check_is_fitted(self, "tables_")
        pose = check_pose(self.grid_, start)
        return Session(self.grid_, self.tables_, self._run_params(), pose, mode="deterministic")

    def predict_proba(self, X, start) -> np.ndarray:
        """Desire probabilities after each action of a sequence.

        Parameters
        ----------
        X : sequence of action names or indices
        start : Pose, dict or (x, y, heading)

        Returns
        -------
        ndarray of shape (len(X) + 1, n_goals_ + 2); row 0 is the prior.
        """
        session = self._session(start)
        for action in check_actions(X):
            session.step(action)
        return session.tracker.filter.estimates()

    def predict(self, X, start) -> np.ndarray:
        """Most likely hidden-state name per action of a sequence."""
        session = self._session(start)
        for action in check_actions(X):
            session.step(action)
        return np.asarray(session.sequence_names(), dtype=object)
