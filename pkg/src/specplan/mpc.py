"""Receding-horizon execution: plan with a fixed budget, execute a prefix
open-loop, replan from the predicted (or current) state.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .expansion import ExpansionOptions, SpectralExpander
from .mdp import MdpDefinition, clip_action
from .tree import SearchBudget, SearchResult, UcbConstants, search

Planner = Callable[[MdpDefinition, np.ndarray, int], SearchResult]


@dataclass(frozen=True)
class MpcConfig:
    replan_interval: int
    plan_horizon: int
    budget: SearchBudget
    predict_ahead: bool = True
    abort_on_unsafe: bool = False

    def __post_init__(self):
        if not (1 <= self.replan_interval <= self.plan_horizon):
            raise ValueError("replan_interval must lie in [1, plan_horizon]")


@dataclass
class MpcLog:
    """Per-step execution record of a receding-horizon run."""

    times: np.ndarray
    states: np.ndarray        # (T+1, n): includes the initial state
    actions: np.ndarray       # (T, m)
    rewards: np.ndarray
    plan_values: np.ndarray   # value estimate of the plan active at each step
    safety_events: np.ndarray  # bool per step
    aborted: bool = False

    @property
    def total_reward(self) -> float:
        return float(self.rewards.sum())

    def to_csv(self) -> str:
        n = self.states.shape[1]
        m = self.actions.shape[1]
        header = (["t", "step"] + [f"state_{i}" for i in range(n)]
                  + [f"action_{j}" for j in range(m)]
                  + ["reward", "plan_value", "safety_event"])
        lines = [",".join(header)]
        for k in range(len(self.actions)):
            row = [f"{self.times[k]:.6f}", str(k)]
            row += [repr(v) for v in self.states[k + 1]]
            row += [repr(v) for v in self.actions[k]]
            row += [repr(self.rewards[k]), repr(self.plan_values[k]),
                    str(int(self.safety_events[k]))]
            lines.append(",".join(row))
        return "\n".join(lines) + "\n"


def spectral_planner(opts: ExpansionOptions, budget: SearchBudget,
                     constants: UcbConstants = UcbConstants()) -> Planner:
    """Planner factory running tree search with a fresh expander per call."""

    def plan(mdp: MdpDefinition, x0: np.ndarray, seed: int) -> SearchResult:
        expander = SpectralExpander(mdp, opts)
        return search(mdp, x0, expander, budget, constants=constants, seed=seed)

    return plan


def _plan_actions(result: Optional[SearchResult], mdp: MdpDefinition,
                  count: int) -> np.ndarray:
    """First ``count`` planned actions, padded with the box center if short.

    With no plan at all (unplannable window) the box-center action is held.
    """
    actions = (result.best_trajectory.actions if result is not None
               else np.zeros((0, mdp.action_dim)))
    if len(actions) >= count:
        return actions[:count]
    pad = np.tile(mdp.action_box.center, (count - len(actions), 1))
    return np.concatenate([actions, pad], axis=0)


def _try_plan(planner: Planner, plan_mdp: MdpDefinition, x: np.ndarray,
              seed: int) -> Optional[SearchResult]:
    if not plan_mdp.state_ok(x):
        return None
    return planner(plan_mdp, x, seed)


def mpc_run(mdp: MdpDefinition, x0: np.ndarray, planner: Planner, cfg: MpcConfig,
            total_steps: int, seed: int = 0) -> MpcLog:
    """Closed-loop execution of ``total_steps`` sim steps.

    Each window executes ``replan_interval`` actions of the active plan
    verbatim, while the next plan is computed from the state predicted at the
    window's end (``predict_ahead``) or from the actual state at the next
    window boundary otherwise. Unsafe excursions are logged; the state is
    projected back into the state box and the run continues (or aborts, per
    config).
    """
    x0 = np.asarray(x0, dtype=float)
    if not mdp.state_ok(x0):
        raise ValueError("initial state is unsafe or out of the state box")
    plan_mdp = dataclasses.replace(mdp, horizon=cfg.plan_horizon)

    n, m = mdp.state_dim, mdp.action_dim
    states = np.empty((total_steps + 1, n))
    actions = np.empty((total_steps, m))
    rewards = np.zeros(total_steps)
    plan_values = np.zeros(total_steps)
    events = np.zeros(total_steps, dtype=bool)
    times = (1 + np.arange(total_steps)) * mdp.dt

    states[0] = x0
    x = x0
    replan_index = 0
    result = _try_plan(planner, plan_mdp, x, seed + replan_index)
    step_count = 0
    aborted = False
    while step_count < total_steps and not aborted:
        window = min(cfg.replan_interval, total_steps - step_count)
        window_actions = _plan_actions(result, mdp, window)
        if cfg.predict_ahead and step_count + window < total_steps:
            # deterministic dynamics: the predicted end state is the rollout
            # of the committed prefix
            x_pred = x
            for u in window_actions:
                x_pred = np.asarray(mdp.dynamics(x_pred, u), dtype=float)
            replan_index += 1
            next_result = _try_plan(planner, plan_mdp,
                                    _project_into_box(mdp, x_pred),
                                    seed + replan_index)
            planned_ahead = True
        else:
            next_result = None
            planned_ahead = False
        for u in window_actions:
            x = np.asarray(mdp.dynamics(x, u), dtype=float)
            bad = not mdp.state_ok(x)
            if bad:
                events[step_count] = True
                x = _project_into_box(mdp, x)
            else:
                rewards[step_count] = mdp.stage_reward(x)
            states[step_count + 1] = x
            actions[step_count] = u
            plan_values[step_count] = result.best_return if result is not None else 0.0
            step_count += 1
            if bad and cfg.abort_on_unsafe:
                aborted = True
                break
        if aborted or step_count >= total_steps:
            break
        if not planned_ahead:
            replan_index += 1
            next_result = _try_plan(planner, plan_mdp, x, seed + replan_index)
        result = next_result

    if step_count < total_steps:
        states = states[: step_count + 1]
        actions = actions[:step_count]
        rewards = rewards[:step_count]
        plan_values = plan_values[:step_count]
        events = events[:step_count]
        times = times[:step_count]
    return MpcLog(times=times, states=states, actions=actions, rewards=rewards,
                  plan_values=plan_values, safety_events=events, aborted=aborted)


def _project_into_box(mdp: MdpDefinition, x: np.ndarray) -> np.ndarray:
    return np.minimum(np.maximum(x, mdp.state_box.lower), mdp.state_box.upper)
