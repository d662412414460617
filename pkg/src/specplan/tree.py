"""Anytime Monte Carlo tree search with a polynomial exploration bonus.

The expansion strategy is pluggable: anything exposing ``child_count``,
``expand``, ``branch_len``, ``allows_new_child`` and ``sequential_fill``
(see SpectralExpander and the baseline expanders) can grow the tree.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .expansion import Branch
from .mdp import MdpDefinition, Trajectory, concat_trajectories


@dataclass(frozen=True)
class UcbConstants:
    """Selection rule: mean + c1 * T_parent**c3 / T_child**c2."""

    c1: float = 1.0
    c2: float = 1.0
    c3: float = 0.5


@dataclass(frozen=True)
class SearchBudget:
    max_iterations: Optional[int] = None
    max_wall_time: Optional[float] = None  # seconds

    def __post_init__(self):
        if self.max_iterations is None and self.max_wall_time is None:
            raise ValueError("at least one budget bound must be set")


class TreeNode:
    """One tree node; created by expanding a parent's child slot."""

    __slots__ = ("state", "depth", "branch", "branch_reward", "total_value",
                 "visits", "children", "child_totals", "child_visits",
                 "terminal", "parent", "index_in_parent")

    def __init__(self, state: np.ndarray, depth: int, child_slots: int,
                 branch: Optional[Branch] = None, parent: Optional["TreeNode"] = None,
                 index_in_parent: int = -1, terminal: bool = False):
        self.state = state
        self.depth = depth
        self.branch = branch
        self.branch_reward = branch.branch_reward if branch is not None else 0.0
        self.total_value = 0.0
        self.visits = 0
        self.children: list[Optional[TreeNode]] = [None] * child_slots
        self.child_totals = np.zeros(child_slots)
        self.child_visits = np.zeros(child_slots, dtype=np.int64)
        self.terminal = terminal
        self.parent = parent
        self.index_in_parent = index_in_parent

    @property
    def mean_value(self) -> float:
        return self.total_value / self.visits if self.visits else 0.0

    def unexpanded_slots(self) -> list[int]:
        return [i for i, c in enumerate(self.children) if c is None]

    def expanded_count(self) -> int:
        return sum(c is not None for c in self.children)


@dataclass
class SearchResult:
    """Immutable snapshot of a finished search."""

    best_trajectory: Trajectory
    best_return: float
    root_value_history: np.ndarray  # columns: iteration, value_estimate, best_return
    node_count: int
    confidence_by_depth: np.ndarray
    root: TreeNode
    iterations: int


def ucb_select(node: TreeNode, c1: float, c2: float, c3: float, rng) -> int:
    """Pick a child slot: uniform among unexpanded, else polynomial-UCB argmax
    (ties to the lowest index)."""
    if node.terminal:
        raise ValueError("cannot select a child of a terminal node")
    unexpanded = node.unexpanded_slots()
    if unexpanded:
        return unexpanded[int(rng.integers(len(unexpanded)))]
    visits = node.child_visits
    scores = node.child_totals / visits + c1 * node.visits**c3 / visits.astype(float)**c2
    return int(np.argmax(scores))


def _select_slot(node: TreeNode, expander, constants: UcbConstants, rng) -> int:
    """ucb_select plus the expander's widening gate (progressive widening)."""
    unexpanded = node.unexpanded_slots()
    expanded = len(node.children) - len(unexpanded)
    if unexpanded and expander.allows_new_child(max(node.visits, 1), expanded):
        if expander.sequential_fill:
            return expanded
        return unexpanded[int(rng.integers(len(unexpanded)))]
    visits = node.child_visits
    with np.errstate(divide="ignore", invalid="ignore"):
        scores = node.child_totals / visits + constants.c1 * node.visits**constants.c3 / visits.astype(float)**constants.c2
    scores = np.where(visits > 0, scores, -np.inf)
    return int(np.argmax(scores))


def backup(path: list[TreeNode], gamma: float, branch_len: int,
           terminal_bonus: float = 0.0) -> float:
    """Add the rollout's node-relative discounted returns along the path.

    The node at position d gains sum_{t>=d} gamma**((t-d)*H) * r(p[t]); when
    the rollout reached full depth, every node additionally receives the
    terminal reward discounted one branch beyond the leaf's own segment.
    Every node's visit count increments. Returns the rollout's return as
    seen from the root (used for best-trajectory tracking).
    """
    step_discount = gamma**branch_len

    def credit(node: TreeNode, value: float):
        node.total_value += value
        node.visits += 1
        if node.parent is not None:
            node.parent.child_totals[node.index_in_parent] += value
            node.parent.child_visits[node.index_in_parent] += 1

    suffix = terminal_bonus
    for node in reversed(path[1:]):
        suffix = node.branch_reward + step_discount * suffix
        credit(node, suffix)
    root_return = suffix if len(path) > 1 else terminal_bonus
    credit(path[0], path[0].branch_reward + step_discount * root_return)
    return root_return


def search(mdp: MdpDefinition, x0: np.ndarray, expander, budget: SearchBudget,
           constants: UcbConstants = UcbConstants(), seed: int = 0) -> SearchResult:
    """Grow a tree from x0 until the budget runs out.

    Deterministic for a fixed seed under an iteration budget. Each iteration
    descends to the depth cap (expanding unvisited slots on the way), stops
    early at unsafe children, and backs the rewards up the path.
    """
    x0 = np.asarray(x0, dtype=float)
    if not mdp.state_ok(x0):
        raise ValueError("root state is unsafe or out of the state box")
    rng = np.random.default_rng(seed)
    H = expander.branch_len
    depth_cap = math.ceil(mdp.horizon / H)
    gamma = mdp.discount
    root = TreeNode(x0, depth=0, child_slots=expander.child_count(x0))
    node_count = 1

    history = []
    best_return = -np.inf
    best_path: list[TreeNode] = []
    start = time.monotonic()
    iteration = 0
    while True:
        if budget.max_iterations is not None and iteration >= budget.max_iterations:
            break
        if budget.max_wall_time is not None and time.monotonic() - start >= budget.max_wall_time:
            break
        iteration += 1

        path = [root]
        node = root
        while node.depth < depth_cap and not node.terminal:
            slot = _select_slot(node, expander, constants, rng)
            child = node.children[slot]
            if child is None:
                branch = expander.expand(node.state, slot, rng)
                child = TreeNode(
                    state=branch.trajectory.end_state,
                    depth=node.depth + 1,
                    child_slots=expander.child_count(branch.trajectory.end_state),
                    branch=branch,
                    parent=node,
                    index_in_parent=slot,
                    terminal=(not branch.safe) or node.depth + 1 >= depth_cap,
                )
                node.children[slot] = child
                node_count += 1
            path.append(child)
            node = child
            if child.branch is not None and not child.branch.safe:
                break

        leaf = path[-1]
        bonus = 0.0
        if leaf.depth >= depth_cap and (leaf.branch is None or leaf.branch.safe):
            bonus = float(mdp.terminal_reward(leaf.state))
        rollout_value = backup(path, gamma, H, terminal_bonus=bonus)
        if rollout_value > best_return:
            best_return = rollout_value
            best_path = path
        history.append((iteration, root.mean_value, best_return))

    if not best_path:
        raise RuntimeError("search budget allowed no completed rollout")
    best_traj = concat_trajectories([n.branch.trajectory for n in best_path[1:]])
    hist = np.asarray(history, dtype=float)
    confidence = np.array([confidence_profile(root, d) for d in range(depth_cap)])
    return SearchResult(best_trajectory=best_traj, best_return=float(best_return),
                        root_value_history=hist, node_count=node_count,
                        confidence_by_depth=confidence, root=root, iterations=iteration)


def best_trajectory(result: SearchResult) -> Trajectory:
    """The max-return rollout recorded by the search."""
    return result.best_trajectory


def confidence_profile(root: TreeNode, depth: int) -> float:
    """Visit concentration at the given depth along the most-visited path:
    max child visits over total child visits (0 when nothing was visited)."""
    node = root
    for _ in range(depth):
        visits = node.child_visits
        if visits.sum() == 0:
            return 0.0
        node = node.children[int(np.argmax(visits))]
        if node is None:
            return 0.0
    total = node.child_visits.sum()
    if total == 0:
        return 0.0
    return float(node.child_visits.max() / total)
