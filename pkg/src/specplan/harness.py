"""Desk-scale experiment drivers: branch-length/budget convergence grids,
method comparisons, confidence profiles, and spectrum heatmaps.

Workers rebuild environments from the JSON config document (constructor
closures do not cross process boundaries); results merge in task order, so
output is deterministic for fixed seeds regardless of worker count.
"""

from __future__ import annotations

import math
from dataclasses import replace
from multiprocessing import get_context
from typing import Iterable, Optional, Sequence

import numpy as np

from .baselines import DpwExpander, UniformExpander, UniformGrid, predictive_sampling
from .expansion import ExpansionOptions, SpectralExpander, spectrum_heatmap
from .numerics import controllability, linearize_along
from .tree import SearchBudget, SearchResult, UcbConstants, confidence_profile, search
from .envs import EnvBundle, load_env

METHODS = ("SE-MCTS", "SE-PS", "UD-MCTS", "UD-PS", "DPW-MCTS")


def _expansion_options(bundle: EnvBundle, H: int) -> ExpansionOptions:
    p = bundle.planner
    return ExpansionOptions(branch_len=H, time_invariant_lin=p.time_invariant_lin,
                            gain_mode=p.gain_mode)


def _constants(bundle: EnvBundle) -> UcbConstants:
    p = bundle.planner
    return UcbConstants(c1=p.c1, c2=p.c2, c3=p.c3)


def make_expander(bundle: EnvBundle, method: str, H: int, eta: int = 3,
                  k_pw: float = 1.0, alpha_pw: float = 0.5):
    family = method.split("-")[0]
    if family == "SE":
        return SpectralExpander(bundle.mdp, _expansion_options(bundle, H))
    if family == "UD":
        return UniformExpander(bundle.mdp, UniformGrid(eta=eta, hold_len=H))
    if family == "DPW":
        return DpwExpander(bundle.mdp, hold_len=H, k_pw=k_pw, alpha_pw=alpha_pw)
    raise ValueError(f"unknown method '{method}'")


def run_method(bundle: EnvBundle, method: str, H: int, seed: int,
               budget: SearchBudget, eta: int = 3) -> SearchResult:
    if method not in METHODS:
        raise ValueError(f"unknown method '{method}'")
    expander = make_expander(bundle, method, H, eta)
    if method.endswith("-PS"):
        return predictive_sampling(bundle.mdp, bundle.x0, expander, budget, seed=seed)
    return search(bundle.mdp, bundle.x0, expander, budget,
                  constants=_constants(bundle), seed=seed)


def _history_at(history: np.ndarray, L: int) -> tuple[float, float]:
    """(value_estimate, best_return) after exactly L iterations."""
    idx = min(L, len(history)) - 1
    return float(history[idx, 1]), float(history[idx, 2])


def _grid_cell(args):
    doc, H, seed, budgets = args
    bundle = load_env(doc)
    result = run_method(bundle, "SE-MCTS", H, seed,
                        SearchBudget(max_iterations=max(budgets)))
    rows = []
    for L in budgets:
        value, best = _history_at(result.root_value_history, L)
        rows.append((H, L, seed, value, best))
    return rows


def run_convergence_grid(doc: dict, H_list: Sequence[int], seed_count: int,
                         budget_list: Sequence[int], workers: int = 1) -> list[tuple]:
    """One search per (H, seed) to the largest budget, checkpointed at each L.

    Returns rows (H, L, seed, value, best_return) in deterministic order.
    """
    if not H_list or not budget_list or seed_count < 1:
        raise ValueError("H_list, budget_list and seed_count must be non-empty")
    budgets = sorted(int(b) for b in budget_list)
    tasks = [(doc, int(H), seed, budgets)
             for H in H_list for seed in range(seed_count)]
    if workers > 1:
        with get_context("fork").Pool(workers) as pool:
            chunks = pool.map(_grid_cell, tasks)
    else:
        chunks = [_grid_cell(t) for t in tasks]
    return [row for chunk in chunks for row in chunk]


def grid_csv(rows: Iterable[tuple]) -> str:
    lines = ["H,L,seed,value,best_return"]
    for H, L, seed, value, best in rows:
        lines.append(f"{H},{L},{seed},{value!r},{best!r}")
    return "\n".join(lines) + "\n"


def _checkpoints(budget: int) -> list[int]:
    pts = sorted({int(v) for v in np.unique(np.round(
        np.logspace(0, math.log10(budget), 25)))})
    return [p for p in pts if 1 <= p <= budget]


def _comparison_cell(args):
    doc, method, H, eta, seed, budget = args
    bundle = load_env(doc)
    result = run_method(bundle, method, H, seed,
                        SearchBudget(max_iterations=budget), eta=eta)
    rows = []
    for L in _checkpoints(budget):
        value, best = _history_at(result.root_value_history, L)
        rows.append((method, H, eta, seed, L, value, best))
    return rows


def run_method_comparison(doc: dict, methods: Sequence[str], H_list: Sequence[int],
                          eta_list: Sequence[int], seed_count: int, budget: int,
                          workers: int = 1) -> tuple[list[tuple], dict]:
    """Value-versus-iteration curves for each method variant.

    Returns (rows, best_variants). Rows are
    (method, H, eta, seed, iteration, value_estimate, best_return); the
    best_variants map picks, per method family, the (H, eta) with the
    highest mean final value across seeds.
    """
    unknown = set(methods) - set(METHODS)
    if unknown:
        raise ValueError(f"unknown methods: {sorted(unknown)}")
    tasks = []
    for method in methods:
        etas = eta_list if method.startswith("UD") else [eta_list[0] if eta_list else 3]
        for H in H_list:
            for eta in etas:
                for seed in range(seed_count):
                    tasks.append((doc, method, int(H), int(eta), seed, int(budget)))
    if workers > 1:
        with get_context("fork").Pool(workers) as pool:
            chunks = pool.map(_comparison_cell, tasks)
    else:
        chunks = [_comparison_cell(t) for t in tasks]
    rows = [row for chunk in chunks for row in chunk]

    finals: dict[tuple, list[float]] = {}
    for method, H, eta, seed, L, value, best in rows:
        finals.setdefault((method, H, eta), []).append((L, value))
    mean_final: dict[tuple, float] = {}
    for key, pairs in finals.items():
        last = max(L for L, _ in pairs)
        vals = [v for L, v in pairs if L == last]
        mean_final[key] = float(np.mean(vals))
    best_variants = {}
    for method in methods:
        candidates = {k: v for k, v in mean_final.items() if k[0] == method}
        best_variants[method] = max(candidates, key=candidates.get)
    return rows, best_variants


def comparison_csv(rows: Iterable[tuple], best_variants: dict) -> str:
    lines = ["method,H,eta,seed,iteration,value_estimate,best_return,best_variant"]
    best = set(best_variants.values())
    for method, H, eta, seed, L, value, ret in rows:
        flag = int((method, H, eta) in best)
        lines.append(f"{method},{H},{eta},{seed},{L},{value!r},{ret!r},{flag}")
    return "\n".join(lines) + "\n"


def run_confidence_profiles(doc: dict, H: int, budget_list: Sequence[int],
                            seed_count: int) -> list[tuple]:
    """Mean visit-concentration per depth for each tree-size budget.

    Rows: (iterations, depth, confidence), seed-averaged.
    """
    bundle = load_env(doc)
    depth_cap = math.ceil(bundle.mdp.horizon / H)
    rows = []
    for L in sorted(int(b) for b in budget_list):
        profiles = []
        for seed in range(seed_count):
            result = run_method(load_env(doc), "SE-MCTS", H, seed,
                                SearchBudget(max_iterations=L))
            profiles.append([confidence_profile(result.root, d)
                             for d in range(depth_cap)])
        mean = np.mean(np.asarray(profiles), axis=0)
        for d in range(depth_cap):
            rows.append((L, d, float(mean[d])))
    return rows


def confidence_csv(rows: Iterable[tuple]) -> str:
    lines = ["iterations,depth,confidence"]
    for L, d, c in rows:
        lines.append(f"{L},{d},{c!r}")
    return "\n".join(lines) + "\n"


def spectrum_rows(bundle: EnvBundle, H: int) -> list[tuple]:
    """Heatmap cells (state_index, mode_index, magnitude) at the start state."""
    opts = _expansion_options(bundle, H)
    nominal = np.tile(bundle.mdp.action_box.center, (H, 1))
    lin = linearize_along(bundle.mdp, bundle.x0, nominal,
                          time_invariant=opts.time_invariant_lin)
    dec = controllability(lin, bundle.mdp.action_box)
    hm = spectrum_heatmap(dec)
    return [(r, i, float(hm[r, i]))
            for r in range(hm.shape[0]) for i in range(hm.shape[1])]


def spectrum_csv(rows: Iterable[tuple]) -> str:
    lines = ["state_index,mode_index,magnitude"]
    for r, i, v in rows:
        lines.append(f"{r},{i},{v!r}")
    return "\n".join(lines) + "\n"


def value_history_csv(result: SearchResult) -> str:
    lines = ["iteration,value_estimate,best_return"]
    for it, value, best in result.root_value_history:
        lines.append(f"{int(it)},{value!r},{best!r}")
    return "\n".join(lines) + "\n"
