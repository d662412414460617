"""Core MDP abstraction: deterministic discrete-time dynamics, bounded stage
rewards, box constraints, and the primitive rollout machinery shared by the
planner, the baselines, and the benchmark environments.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

Vector = np.ndarray
DynamicsFn = Callable[[np.ndarray, np.ndarray], np.ndarray]
RewardFn = Callable[[np.ndarray], float]
PredicateFn = Callable[[np.ndarray], bool]


class DynamicsError(RuntimeError):
    """Raised when a dynamics evaluation produces a non-finite state."""


@dataclass(frozen=True)
class IntervalBox:
    """Axis-aligned box: per-dimension lower/upper bounds."""

    lower: np.ndarray
    upper: np.ndarray

    def __post_init__(self):
        lower = np.asarray(self.lower, dtype=float)
        upper = np.asarray(self.upper, dtype=float)
        object.__setattr__(self, "lower", lower)
        object.__setattr__(self, "upper", upper)
        if lower.ndim != 1 or upper.shape != lower.shape:
            raise ValueError("bounds must be 1-D arrays of equal length")
        if lower.size == 0:
            raise ValueError("box dimension must be positive")
        if np.any(lower > upper):
            raise ValueError("lower bound exceeds upper bound")

    @property
    def dim(self) -> int:
        return self.lower.size

    @property
    def center(self) -> np.ndarray:
        return 0.5 * (self.lower + self.upper)

    @property
    def half_width(self) -> np.ndarray:
        return 0.5 * (self.upper - self.lower)

    def contains(self, x: np.ndarray) -> bool:
        return bool(np.all(x >= self.lower) and np.all(x <= self.upper))


@dataclass(frozen=True)
class MdpDefinition:
    """Deterministic, discounted, finite-horizon planning problem.

    ``dynamics`` advances the state by one step of duration ``dt``;
    ``stage_reward`` maps a state into [0, 1]; ``unsafe`` marks forbidden
    states. All callables must be pure: identical inputs give bit-identical
    outputs, and they must be safe to call from many workers at once.
    """

    state_dim: int
    action_dim: int
    dynamics: DynamicsFn
    stage_reward: RewardFn
    terminal_reward: RewardFn
    unsafe: PredicateFn
    state_box: IntervalBox
    action_box: IntervalBox
    horizon: int
    discount: float
    dt: float
    name: str = "mdp"
    # optional vectorized evaluators over (L, n) state batches; must agree
    # with their scalar counterparts exactly
    stage_reward_batch: Optional[Callable[[np.ndarray], np.ndarray]] = None
    unsafe_batch: Optional[Callable[[np.ndarray], np.ndarray]] = None

    def __post_init__(self):
        if self.state_dim <= 0 or self.action_dim <= 0:
            raise ValueError("state/action dimensions must be positive")
        if self.state_box.dim != self.state_dim:
            raise ValueError("state_box dimension mismatch")
        if self.action_box.dim != self.action_dim:
            raise ValueError("action_box dimension mismatch")
        if self.horizon <= 0:
            raise ValueError("horizon must be positive")
        # gamma = 1 is tolerated (undiscounted problems run fine in practice)
        if not (0.0 <= self.discount <= 1.0):
            raise ValueError("discount must lie in [0, 1]")
        if self.dt <= 0:
            raise ValueError("dt must be positive")

    def state_ok(self, x: np.ndarray) -> bool:
        """Inside the state box and not unsafe."""
        return self.state_box.contains(x) and not self.unsafe(x)

    def return_upper_bound(self) -> float:
        """Upper bound on any discounted return over the full horizon."""
        g, k = self.discount, self.horizon
        stage = float(k) if g == 1.0 else (1.0 - g**k) / (1.0 - g)
        return stage


@dataclass(frozen=True)
class Trajectory:
    """A rollout: L actions, L+1 states, L stage rewards.

    ``safe_prefix_len`` is the first action index whose successor state was
    unsafe or out of the state box (== L when fully safe). Stage rewards at
    and beyond that index are recorded as zero.
    """

    states: np.ndarray
    actions: np.ndarray
    stage_rewards: np.ndarray
    safe_prefix_len: int

    def __post_init__(self):
        if len(self.states) != len(self.actions) + 1:
            raise ValueError("states must be one longer than actions")
        if len(self.stage_rewards) != len(self.actions):
            raise ValueError("one stage reward per action required")

    def __len__(self) -> int:
        return len(self.actions)

    @property
    def safe(self) -> bool:
        return self.safe_prefix_len == len(self.actions)

    @property
    def end_state(self) -> np.ndarray:
        return self.states[-1]


def clip_action(u: np.ndarray, box: IntervalBox) -> np.ndarray:
    """Componentwise saturation of ``u`` onto the box (a projection)."""
    u = np.asarray(u, dtype=float)
    if u.shape != box.lower.shape:
        raise ValueError("action dimension mismatch")
    return np.minimum(np.maximum(u, box.lower), box.upper)


def step(mdp: MdpDefinition, x: np.ndarray, u: np.ndarray) -> np.ndarray:
    """One dynamics step. Raises DynamicsError on non-finite output."""
    x = np.asarray(x, dtype=float)
    u = np.asarray(u, dtype=float)
    if x.shape != (mdp.state_dim,) or u.shape != (mdp.action_dim,):
        raise ValueError("state/action dimension mismatch")
    nxt = np.asarray(mdp.dynamics(x, u), dtype=float)
    if not np.isfinite(nxt.sum()):
        raise DynamicsError("dynamics produced non-finite state")
    return nxt


def finish_trajectory(mdp: MdpDefinition, states: np.ndarray, actions: np.ndarray,
                      blowup_at: Optional[int] = None) -> Trajectory:
    """Build a Trajectory from propagated states: rewards at arrived states,
    zeroed past the first out-of-box/unsafe state.

    ``blowup_at`` marks the step whose successor state was non-finite (its
    tail must already be frozen); propagating a blow-up from inside the safe
    prefix is an error.
    """
    length = len(actions)
    body = states[1:]
    lo, hi = mdp.state_box.lower, mdp.state_box.upper
    in_box = np.all((body >= lo) & (body <= hi), axis=1)
    bad = np.flatnonzero(~in_box)
    box_prefix = int(bad[0]) if bad.size else length
    safe_prefix = box_prefix
    if box_prefix:
        if mdp.unsafe_batch is not None:
            hits = np.flatnonzero(mdp.unsafe_batch(body[:box_prefix]))
            if hits.size:
                safe_prefix = int(hits[0])
        else:
            for k in range(box_prefix):
                if mdp.unsafe(body[k]):
                    safe_prefix = k
                    break
    if blowup_at is not None and safe_prefix >= blowup_at:
        raise DynamicsError("dynamics produced non-finite state")
    rewards = np.zeros(length)
    if safe_prefix:
        if mdp.stage_reward_batch is not None:
            rewards[:safe_prefix] = mdp.stage_reward_batch(body[:safe_prefix])
        else:
            for k in range(safe_prefix):
                rewards[k] = mdp.stage_reward(body[k])
    return Trajectory(states=states, actions=actions, stage_rewards=rewards,
                      safe_prefix_len=safe_prefix)


def rollout(mdp: MdpDefinition, x0: np.ndarray, us: Sequence[np.ndarray]) -> Trajectory:
    """Roll the dynamics through an action sequence.

    The stage reward is evaluated at each arrived-at state. Once a state
    leaves the box or enters the unsafe set, the remaining rewards are
    zeroed (the states are still propagated so callers can inspect them).
    """
    us = np.atleast_2d(np.asarray(us, dtype=float))
    if us.size == 0:
        raise ValueError("empty action sequence")
    x0 = np.asarray(x0, dtype=float)
    length = len(us)
    states = np.empty((length + 1, mdp.state_dim))
    states[0] = x0
    x = x0
    blowup_at = None
    dynamics = mdp.dynamics
    for k in range(length):
        x = np.asarray(dynamics(x, us[k]), dtype=float)
        if not np.isfinite(x.sum()):
            # hold the last finite state; finish_trajectory decides whether
            # the blow-up happened inside the safe prefix (an error) or past
            # it (diagnostic tail only)
            states[k + 1:] = states[k]
            blowup_at = k
            break
        states[k + 1] = x
    return finish_trajectory(mdp, states, us.copy(), blowup_at)


def discounted_return(rewards: Sequence[float], gamma: float, step_offset: int = 0) -> float:
    """Sum of gamma**(step_offset + k) * rewards[k]."""
    if not (0.0 <= gamma <= 1.0):
        raise ValueError("gamma must lie in [0, 1]")
    rewards = np.asarray(rewards, dtype=float)
    if rewards.size == 0:
        return 0.0
    weights = gamma ** (step_offset + np.arange(rewards.size))
    return float(np.dot(weights, rewards))


def concat_trajectories(parts: Sequence[Trajectory]) -> Trajectory:
    """Stitch consecutive trajectories (each starting at the previous end state)."""
    if not parts:
        raise ValueError("nothing to concatenate")
    states = [parts[0].states]
    actions = []
    rewards = []
    safe_prefix = 0
    still_safe = True
    offset = 0
    for i, part in enumerate(parts):
        if i > 0:
            if not np.array_equal(part.states[0], states[-1][-1]):
                raise ValueError("trajectories are not contiguous")
            states.append(part.states[1:])
        actions.append(part.actions)
        rewards.append(part.stage_rewards)
        if still_safe:
            safe_prefix = offset + part.safe_prefix_len
            still_safe = part.safe
        offset += len(part)
    return Trajectory(
        states=np.concatenate(states, axis=0),
        actions=np.concatenate(actions, axis=0),
        stage_rewards=np.concatenate(rewards, axis=0),
        safe_prefix_len=safe_prefix,
    )
