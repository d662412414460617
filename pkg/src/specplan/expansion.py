"""Branch construction from the controllability spectrum.

A node's state is linearized along the box-center nominal input, the
input-normalized controllability matrix is decomposed, and each branch
tracks one signed spectral mode endpoint (optionally plus a goal-biased
endpoint) with Riccati feedback on the nonlinear system.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Optional, Sequence, Union

import numpy as np

from .mdp import (DynamicsError, IntervalBox, MdpDefinition, Trajectory,
                  discounted_return, finish_trajectory)
from .numerics import (
    ControllabilityDecomposition,
    Linearization,
    RiccatiError,
    SVD_TRUNCATION,
    controllability,
    dare_solve,
    finite_horizon_gains,
    linearize_along,
    lqr_gain,
    min_energy_inputs,
    physical_actions,
)

GOAL_TAG = "goal"


@dataclass(frozen=True)
class Branch:
    """One tree edge: an H-step tracked trajectory plus its provenance."""

    trajectory: Trajectory
    branch_reward: float
    target_endpoint: np.ndarray
    achieved_endpoint: np.ndarray
    mode_index: Union[int, str]
    safe: bool


@dataclass(frozen=True)
class ExpansionOptions:
    """Knobs for branch construction.

    ``mode_subset`` restricts the search to one mode per listed coordinate
    group: for each group the mode whose scaled singular vector has the
    largest magnitude on those coordinates is kept. ``goal_bias`` appends one
    extra branch aimed at the projection of the goal onto the reachable
    ellipsoid. ``gain_mode`` selects between the algebraic Riccati solution
    (default; failures mark the branch unsafe) and the always-defined
    finite-horizon recursion, needed for systems whose free modes are
    structurally uncontrollable (tether targets, observation counters).
    """

    branch_len: int
    mode_subset: Optional[Sequence[Sequence[int]]] = None
    goal_bias: Optional[np.ndarray] = None
    time_invariant_lin: bool = False
    gain_mode: str = "dare"  # "dare" | "finite_horizon"
    tracking_state_weight: Optional[np.ndarray] = None
    tracking_action_weight: Optional[np.ndarray] = None
    dare_tol: float = 1e-9
    dare_max_iter: int = 10000

    def __post_init__(self):
        if self.branch_len < 1:
            raise ValueError("branch_len must be >= 1")
        if self.gain_mode not in ("dare", "finite_horizon"):
            raise ValueError("gain_mode must be 'dare' or 'finite_horizon'")
        if self.goal_bias is not None:
            object.__setattr__(self, "goal_bias", np.asarray(self.goal_bias, dtype=float))


def branching_factor(opts: ExpansionOptions, n: int) -> int:
    """Number of child slots per node: two per searched mode plus goal bias."""
    if opts.mode_subset is not None:
        for group in opts.mode_subset:
            if any(idx >= n for idx in group):
                raise ValueError("mode_subset coordinate index out of range")
        modes = len(opts.mode_subset)
    else:
        modes = n
    return 2 * modes + (1 if opts.goal_bias is not None else 0)


def select_modes(decomp: ControllabilityDecomposition,
                 opts: ExpansionOptions, n: int) -> list[int]:
    """Mode indices searched at a node, in stable child order."""
    if opts.mode_subset is None:
        return list(range(n))
    scaled = decomp.singular_vectors * decomp.singular_values  # column i = sigma_i v_i
    picks = []
    for group in opts.mode_subset:
        rows = np.asarray(list(group), dtype=int)
        weights = np.linalg.norm(scaled[rows, :], axis=0)
        picks.append(int(np.argmax(weights)))
    return picks


def goal_biased_target(decomp: ControllabilityDecomposition, goal: np.ndarray) -> np.ndarray:
    """Project a goal displacement onto the reachable ellipsoid.

    The ellipsoid is {sum_i a_i sigma_i v_i : ||a||_2 <= 1}; coefficients of
    the displacement in the mode basis are scaled by 1/sigma_i and normalized
    onto the unit ball if outside it.
    """
    d = np.asarray(goal, dtype=float) - decomp.drift_endpoint
    s = decomp.singular_values
    cutoff = SVD_TRUNCATION * (s[0] if s.size else 0.0)
    coeffs = decomp.singular_vectors.T @ d
    b = np.zeros_like(coeffs)
    live = s > cutoff
    b[live] = coeffs[live] / s[live]
    norm = np.linalg.norm(b)
    if norm > 1.0:
        b /= norm
    return decomp.drift_endpoint + decomp.singular_vectors @ (b * s)


def spectrum_heatmap(decomp: ControllabilityDecomposition) -> np.ndarray:
    """|sigma_i * v_i[r]| per (state coordinate r, mode i)."""
    return np.abs(decomp.singular_vectors * decomp.singular_values)


class SpectralExpander:
    """Builds spectral branches, caching decompositions and tracking gains.

    One expander instance is tied to one MdpDefinition. Two cache levels:
    per-state (the finite-difference linearization) and per-linearization
    content (spectrum, endpoint propagators, Riccati gains), so states that
    share local dynamics, and in particular exactly linear systems, pay for
    the spectral and Riccati work once. Content keys are rounded to absorb
    finite-difference noise; the tracking feedback is insensitive at that
    scale.
    """

    sequential_fill = False

    def __init__(self, mdp: MdpDefinition, opts: ExpansionOptions):
        self.mdp = mdp
        self.opts = opts
        self.branch_len = opts.branch_len
        n = mdp.state_dim
        self._Gx = (np.asarray(opts.tracking_state_weight, dtype=float)
                    if opts.tracking_state_weight is not None else np.eye(n))
        self._Gu = (np.asarray(opts.tracking_action_weight, dtype=float)
                    if opts.tracking_action_weight is not None else np.eye(mdp.action_dim))
        self._node_cache: dict[bytes, tuple] = {}
        self._shared_cache: dict[bytes, tuple] = {}
        self._discount_weights = mdp.discount ** np.arange(opts.branch_len)

    def child_count(self, state: np.ndarray) -> int:
        return branching_factor(self.opts, self.mdp.state_dim)

    def allows_new_child(self, visits: int, expanded: int) -> bool:
        return True

    def _node_data(self, x0: np.ndarray):
        key = x0.tobytes()
        hit = self._node_cache.get(key)
        if hit is not None:
            return hit
        lin = linearize_along(self.mdp, x0, self._nominal_actions(),
                              time_invariant=self.opts.time_invariant_lin)
        template, gains, modes = self._shared_data(lin)
        drift = template.propagator @ x0 + template.affine_drift
        decomp = replace(template, drift_endpoint=drift)
        data = (lin, decomp, gains, modes)
        self._node_cache[key] = data
        return data

    def _shared_data(self, lin: Linearization):
        # adding 0.0 folds -0.0 into +0.0 so byte keys match
        key = ((np.round(lin.A_seq, 9) + 0.0).tobytes()
               + (np.round(lin.B_seq, 9) + 0.0).tobytes()
               + (np.round(lin.c_seq, 9) + 0.0).tobytes())
        hit = self._shared_cache.get(key)
        if hit is not None:
            return hit
        decomp = controllability(lin, self.mdp.action_box)
        gains = self._gains_for(lin)
        modes = select_modes(decomp, self.opts, self.mdp.state_dim)
        data = (decomp, gains, modes)
        self._shared_cache[key] = data
        return data

    def _nominal_actions(self) -> np.ndarray:
        u_c = self.mdp.action_box.center
        return np.tile(u_c, (self.branch_len, 1))

    def _gains_for(self, lin: Linearization) -> Optional[np.ndarray]:
        """Per-step tracking gains, or None when the DARE is unsolvable."""
        H = lin.horizon
        m = self.mdp.action_dim
        n = self.mdp.state_dim
        gains: Optional[np.ndarray]
        if self.opts.gain_mode == "finite_horizon":
            gains = finite_horizon_gains(lin.A_seq, lin.B_seq, self._Gx, self._Gu)
        else:
            gains = np.empty((H, m, n))
            try:
                if self.opts.time_invariant_lin:
                    M = dare_solve(lin.A_seq[0], lin.B_seq[0], self._Gx, self._Gu,
                                   tol=self.opts.dare_tol, max_iter=self.opts.dare_max_iter)
                    gains[:] = lqr_gain(lin.A_seq[0], lin.B_seq[0], M, self._Gu)
                else:
                    for k in range(H):
                        M = dare_solve(lin.A_seq[k], lin.B_seq[k], self._Gx, self._Gu,
                                       tol=self.opts.dare_tol, max_iter=self.opts.dare_max_iter)
                        gains[k] = lqr_gain(lin.A_seq[k], lin.B_seq[k], M, self._Gu)
            except RiccatiError:
                gains = None
        return gains

    def target_for(self, decomp: ControllabilityDecomposition, modes: list[int],
                   branch_index: int) -> tuple[np.ndarray, Union[int, str]]:
        n_mode_branches = 2 * len(modes)
        if branch_index < n_mode_branches:
            mode = modes[branch_index // 2]
            sign = -1.0 if branch_index % 2 else 1.0
            target = (decomp.drift_endpoint
                      + sign * decomp.singular_values[mode] * decomp.singular_vectors[:, mode])
            return target, mode
        if self.opts.goal_bias is not None and branch_index == n_mode_branches:
            return goal_biased_target(decomp, self.opts.goal_bias), GOAL_TAG
        raise IndexError(f"branch index {branch_index} out of range")

    def expand(self, x0: np.ndarray, branch_index: int, rng=None) -> Branch:
        """Build the branch for one child slot.

        Locally unstabilizable linearizations and numerical blow-ups (states
        whose rollouts overflow before leaving the state box) both yield a
        dead branch: unsafe, zero reward, so the search routes around them.
        """
        x0 = np.asarray(x0, dtype=float)
        try:
            lin, decomp, gains, modes = self._node_data(x0)
        except DynamicsError:
            return _unsafe_branch(self.mdp, x0, x0, branch_index)
        target, tag = self.target_for(decomp, modes, branch_index)
        if gains is None:
            return _unsafe_branch(self.mdp, x0, target, tag)
        try:
            with np.errstate(over="ignore", invalid="ignore"):
                w = min_energy_inputs(decomp, target)
                u_ref = physical_actions(decomp, w, self.mdp.action_box)
                z_ref = lin.simulate(x0, u_ref)
                traj = tracked_rollout(self.mdp, x0, u_ref, z_ref, gains)
        except (DynamicsError, FloatingPointError):
            return _unsafe_branch(self.mdp, x0, target, tag)
        reward = float(self._discount_weights @ traj.stage_rewards)
        return Branch(trajectory=traj, branch_reward=reward, target_endpoint=target,
                      achieved_endpoint=traj.end_state, mode_index=tag, safe=traj.safe)


def tracked_rollout(mdp: MdpDefinition, x0: np.ndarray, u_ref: np.ndarray,
                    z_ref: np.ndarray, gains: np.ndarray) -> Trajectory:
    """Nonlinear rollout applying u_k = clip(u_ref_k - K_k (x_k - z_ref_k)).

    Reward and safety bookkeeping matches ``mdp.rollout``: rewards are
    evaluated at arrived-at states and zeroed past the first violation.
    """
    H = len(u_ref)
    lo, hi = mdp.action_box.lower, mdp.action_box.upper
    actions = np.empty_like(u_ref)
    states = np.empty((H + 1, mdp.state_dim))
    states[0] = x0
    x = x0
    blowup_at = None
    dynamics = mdp.dynamics
    for k in range(H):
        u = u_ref[k] - gains[k] @ (x - z_ref[k])
        u = np.minimum(np.maximum(u, lo), hi)
        actions[k] = u
        x = np.asarray(dynamics(x, u), dtype=float)
        if not np.isfinite(x.sum()):
            states[k + 1:] = states[k]
            actions[k + 1:] = np.minimum(np.maximum(u_ref[k + 1:], lo), hi)
            blowup_at = k
            break
        states[k + 1] = x
    return finish_trajectory(mdp, states, actions, blowup_at)


def _unsafe_branch(mdp: MdpDefinition, x0: np.ndarray, target: np.ndarray,
                   tag: Union[int, str]) -> Branch:
    H = 1
    states = np.tile(x0, (H + 1, 1))
    actions = np.tile(mdp.action_box.center, (H, 1))
    traj = Trajectory(states=states, actions=actions,
                      stage_rewards=np.zeros(H), safe_prefix_len=0)
    return Branch(trajectory=traj, branch_reward=0.0, target_endpoint=target,
                  achieved_endpoint=x0, mode_index=tag, safe=False)


def spectral_expand(mdp: MdpDefinition, x0: np.ndarray, branch_index: int,
                    opts: ExpansionOptions) -> Branch:
    """One-shot branch construction (uncached convenience wrapper)."""
    return SpectralExpander(mdp, opts).expand(np.asarray(x0, dtype=float), branch_index)
