"""Comparison planners: uniform action-grid expansion, double progressive
widening, and predictive sampling as an alternative exploration strategy.

All branch construction funnels through the same rollout helper as the
spectral expander, so action clipping and safety truncation behave
identically across methods.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .expansion import Branch
from .mdp import MdpDefinition, Trajectory, concat_trajectories, discounted_return, rollout
from .tree import SearchBudget, SearchResult, TreeNode, confidence_profile

METHOD_NAMES = ("SE-MCTS", "SE-PS", "UD-MCTS", "UD-PS", "DPW-MCTS")


@dataclass(frozen=True)
class UniformGrid:
    """eta grid points per action dimension, held for hold_len steps."""

    eta: int
    hold_len: int

    def __post_init__(self):
        if self.eta < 2:
            raise ValueError("eta must be >= 2")
        if self.hold_len < 1:
            raise ValueError("hold_len must be >= 1")


def grid_action(grid: UniformGrid, mdp: MdpDefinition, child_index: int) -> np.ndarray:
    """Decode a child index (base-eta digits) into a grid action."""
    m = mdp.action_dim
    if not (0 <= child_index < grid.eta**m):
        raise IndexError("grid child index out of range")
    lo = mdp.action_box.lower
    hi = mdp.action_box.upper
    u = np.empty(m)
    rem = child_index
    for j in range(m):
        digit = rem % grid.eta
        rem //= grid.eta
        u[j] = lo[j] + (digit / (grid.eta - 1)) * (hi[j] - lo[j])
    return u


def _held_branch(mdp: MdpDefinition, x0: np.ndarray, u: np.ndarray,
                 hold_len: int, tag) -> Branch:
    us = np.tile(u, (hold_len, 1))
    traj = rollout(mdp, x0, us)
    reward = discounted_return(traj.stage_rewards, mdp.discount, 0)
    return Branch(trajectory=traj, branch_reward=reward,
                  target_endpoint=traj.end_state, achieved_endpoint=traj.end_state,
                  mode_index=tag, safe=traj.safe)


def uniform_expand(mdp: MdpDefinition, x0: np.ndarray, child_index: int,
                   grid: UniformGrid) -> Branch:
    """Hold one grid action for hold_len steps."""
    u = grid_action(grid, mdp, child_index)
    return _held_branch(mdp, np.asarray(x0, dtype=float), u, grid.hold_len, child_index)


class UniformExpander:
    """Tree-search expander over the uniform action grid."""

    sequential_fill = False

    def __init__(self, mdp: MdpDefinition, grid: UniformGrid):
        self.mdp = mdp
        self.grid = grid
        self.branch_len = grid.hold_len

    def child_count(self, state: np.ndarray) -> int:
        return self.grid.eta**self.mdp.action_dim

    def allows_new_child(self, visits: int, expanded: int) -> bool:
        return True

    def expand(self, x0: np.ndarray, child_index: int, rng=None) -> Branch:
        return uniform_expand(self.mdp, x0, child_index, self.grid)


def dpw_allows_new_child(visits: int, current_children: int,
                         k_pw: float, alpha_pw: float) -> bool:
    """Widen while the child count is below ceil(k_pw * visits**alpha_pw)."""
    if k_pw <= 0:
        raise ValueError("k_pw must be positive")
    if not (0 < alpha_pw <= 1):
        raise ValueError("alpha_pw must lie in (0, 1]")
    return current_children < math.ceil(k_pw * visits**alpha_pw)


class DpwExpander:
    """Progressive widening: new children sample actions uniformly from the box."""

    sequential_fill = True

    def __init__(self, mdp: MdpDefinition, hold_len: int,
                 k_pw: float = 1.0, alpha_pw: float = 0.5, max_children: int = 64):
        self.mdp = mdp
        self.branch_len = hold_len
        self.hold_len = hold_len
        self.k_pw = k_pw
        self.alpha_pw = alpha_pw
        self.max_children = max_children

    def child_count(self, state: np.ndarray) -> int:
        return self.max_children

    def allows_new_child(self, visits: int, expanded: int) -> bool:
        return dpw_allows_new_child(visits, expanded, self.k_pw, self.alpha_pw)

    def expand(self, x0: np.ndarray, child_index: int, rng=None) -> Branch:
        if rng is None:
            raise ValueError("DPW expansion draws actions and needs the search rng")
        box = self.mdp.action_box
        u = box.lower + rng.random(self.mdp.action_dim) * (box.upper - box.lower)
        return _held_branch(self.mdp, np.asarray(x0, dtype=float), u, self.hold_len,
                            child_index)


def predictive_sampling(mdp: MdpDefinition, x0: np.ndarray, expander,
                        budget: SearchBudget, seed: int = 0) -> SearchResult:
    """Uniform random root-to-leaf rollouts keeping the best trajectory.

    The value estimate reported per iteration is the best return found so
    far (the quantity this strategy ultimately returns).
    """
    x0 = np.asarray(x0, dtype=float)
    if not mdp.state_ok(x0):
        raise ValueError("root state is unsafe or out of the state box")
    rng = np.random.default_rng(seed)
    H = expander.branch_len
    depth_cap = math.ceil(mdp.horizon / H)
    gamma = mdp.discount
    step_discount = gamma**H

    history = []
    best_return = -np.inf
    best_branches: list[Branch] = []
    node_count = 1
    start = time.monotonic()
    iteration = 0
    while True:
        if budget.max_iterations is not None and iteration >= budget.max_iterations:
            break
        if budget.max_wall_time is not None and time.monotonic() - start >= budget.max_wall_time:
            break
        iteration += 1

        state = x0
        branches = []
        bonus = 0.0
        for depth in range(depth_cap):
            slot = int(rng.integers(expander.child_count(state)))
            branch = expander.expand(state, slot, rng)
            branches.append(branch)
            node_count += 1
            state = branch.trajectory.end_state
            if not branch.safe:
                break
        else:
            bonus = float(mdp.terminal_reward(state))
        value = bonus
        for branch in reversed(branches):
            value = branch.branch_reward + step_discount * value
        if value > best_return:
            best_return = value
            best_branches = branches
        history.append((iteration, best_return, best_return))

    if not best_branches:
        raise RuntimeError("sampling budget allowed no completed rollout")
    best_traj = concat_trajectories([b.trajectory for b in best_branches])
    hist = np.asarray(history, dtype=float)
    return SearchResult(best_trajectory=best_traj, best_return=float(best_return),
                        root_value_history=hist, node_count=node_count,
                        confidence_by_depth=np.zeros(depth_cap),
                        root=TreeNode(x0, 0, 0), iterations=iteration)
