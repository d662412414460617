import itertools

import numpy as np
import pytest

from specplan.expansion import Branch, ExpansionOptions, SpectralExpander
from specplan.mdp import IntervalBox, MdpDefinition, Trajectory
from specplan.tree import (SearchBudget, TreeNode, UcbConstants, backup,
                           confidence_profile, search, ucb_select)
from specplan.envs import DoubleIntegratorConfig, make_double_integrator


def toy_mdp(depth, gamma=1.0):
    return MdpDefinition(
        state_dim=1, action_dim=1, dynamics=lambda x, u: x,
        stage_reward=lambda x: 0.0, terminal_reward=lambda x: 0.0,
        unsafe=lambda x: False,
        state_box=IntervalBox([-1e9], [1e9]), action_box=IntervalBox([-1], [1]),
        horizon=depth, discount=gamma, dt=1.0, name="toy",
    )


class TableExpander:
    """Deterministic toy tree: states are node ids, rewards come from a map.

    Node ids follow heap order: child c of node i is i * branching + c + 1.
    """

    sequential_fill = False
    branch_len = 1

    def __init__(self, branching, rewards):
        self.branching = branching
        self.rewards = rewards
        self.expansions = []

    def child_count(self, state):
        return self.branching

    def allows_new_child(self, visits, expanded):
        return True

    def expand(self, state, slot, rng=None):
        node_id = int(state[0])
        child_id = node_id * self.branching + slot + 1
        self.expansions.append((node_id, slot))
        reward = self.rewards[(node_id, slot)]
        traj = Trajectory(states=np.array([[node_id], [child_id]], dtype=float),
                          actions=np.zeros((1, 1)), stage_rewards=np.array([reward]),
                          safe_prefix_len=1)
        return Branch(trajectory=traj, branch_reward=reward,
                      target_endpoint=traj.end_state, achieved_endpoint=traj.end_state,
                      mode_index=slot, safe=True)


def enumerate_toy_optimum(branching, depth, rewards, gamma=1.0):
    """Brute-force best rollout return of the toy tree."""
    best = -np.inf
    for choice in itertools.product(range(branching), repeat=depth):
        node = 0
        total = 0.0
        for d, slot in enumerate(choice):
            total += gamma**d * rewards[(node, slot)]
            node = node * branching + slot + 1
        best = max(best, total)
    return best


def make_node(child_slots=0, visits=0, total=0.0, reward=0.0, depth=0, parent=None,
              index=-1):
    node = TreeNode(np.zeros(1), depth=depth, child_slots=child_slots,
                    parent=parent, index_in_parent=index)
    node.visits = visits
    node.total_value = total
    node.branch_reward = reward
    return node


class TestUcbSelect:
    def test_formula_example(self):
        parent = make_node(child_slots=2, visits=4)
        for i, (visits, total) in enumerate([(1, 0.5), (3, 1.5)]):
            child = make_node(parent=parent, index=i, depth=1)
            parent.children[i] = child
            parent.child_visits[i] = visits
            parent.child_totals[i] = total
        rng = np.random.default_rng(0)
        # scores: 0.5 + 4/1 = 4.5 and 0.5 + 4/sqrt(3) ~ 2.809
        assert ucb_select(parent, 1.0, 0.5, 1.0, rng) == 0

    def test_unexpanded_uniform(self):
        rng = np.random.default_rng(0)
        parent = make_node(child_slots=3, visits=5)
        parent.children[1] = make_node(parent=parent, index=1, depth=1)
        parent.child_visits[1] = 5
        picks = {ucb_select(parent, 1.0, 1.0, 0.5, rng) for _ in range(100)}
        assert picks == {0, 2}

    def test_zero_c1_pure_greedy(self):
        parent = make_node(child_slots=2, visits=10)
        for i, (visits, total) in enumerate([(8, 4.0), (2, 1.8)]):
            parent.children[i] = make_node(parent=parent, index=i, depth=1)
            parent.child_visits[i] = visits
            parent.child_totals[i] = total
        rng = np.random.default_rng(0)
        # means 0.5 vs 0.9
        assert ucb_select(parent, 0.0, 1.0, 0.5, rng) == 1

    def test_terminal_node_rejected(self):
        node = make_node()
        node.terminal = True
        with pytest.raises(ValueError):
            ucb_select(node, 1.0, 1.0, 0.5, np.random.default_rng(0))


class TestBackup:
    def _path(self, rewards):
        root = make_node(child_slots=1)
        path = [root]
        parent = root
        for d, r in enumerate(rewards):
            node = make_node(child_slots=1, reward=r, depth=d + 1,
                             parent=parent, index=0)
            parent.children[0] = node
            path.append(node)
            parent = node
        return path

    def test_hand_sums_gamma_one(self):
        path = self._path([0.5, 0.3])
        ret = backup(path, gamma=1.0, branch_len=1)
        assert path[1].total_value == pytest.approx(0.8)
        assert path[2].total_value == pytest.approx(0.3)
        assert ret == pytest.approx(0.8)

    def test_gamma_zero_keeps_own_reward(self):
        path = self._path([0.5, 0.3])
        backup(path, gamma=0.0, branch_len=1)
        assert path[1].total_value == pytest.approx(0.5)
        assert path[2].total_value == pytest.approx(0.3)
        assert path[0].total_value == pytest.approx(0.0)

    def test_visits_increment(self):
        path = self._path([0.1, 0.2, 0.4])
        backup(path, gamma=0.9, branch_len=2)
        assert all(n.visits == 1 for n in path)
        backup(path, gamma=0.9, branch_len=2)
        assert all(n.visits == 2 for n in path)

    def test_terminal_bonus_discounting(self):
        path = self._path([0.5])
        ret = backup(path, gamma=0.5, branch_len=1, terminal_bonus=1.0)
        # leaf gains r + gamma^H * D = 0.5 + 0.5
        assert path[1].total_value == pytest.approx(1.0)
        assert ret == pytest.approx(1.0)

    def test_node_relative_discounting(self):
        path = self._path([0.5, 0.3])
        backup(path, gamma=0.5, branch_len=2)
        g = 0.25
        assert path[2].total_value == pytest.approx(0.3)
        assert path[1].total_value == pytest.approx(0.5 + g * 0.3)
        assert path[0].total_value == pytest.approx(g * (0.5 + g * 0.3))


class TestSearch:
    def test_two_armed_bandit(self):
        rewards = {(0, 0): 0.2, (0, 1): 0.9}
        expander = TableExpander(2, rewards)
        mdp = toy_mdp(depth=1)
        res = search(mdp, np.zeros(1), expander, SearchBudget(max_iterations=50), seed=3)
        root = res.root
        assert root.child_visits.sum() == 50
        # both children expanded in the first two iterations
        assert sorted(e[1] for e in expander.expansions) == [0, 1]
        assert res.best_return == pytest.approx(0.9)
        # the exploration bonus revisits the weak arm occasionally, but the
        # better arm dominates the visit count
        assert root.child_visits[1] >= 4 * root.child_visits[0]
        assert root.mean_value > 0.7

    def test_budget_one_iteration(self):
        rewards = {(0, 0): 0.2, (0, 1): 0.9}
        expander = TableExpander(2, rewards)
        res = search(toy_mdp(1), np.zeros(1), expander,
                     SearchBudget(max_iterations=1), seed=0)
        assert len(expander.expansions) == 1
        assert res.iterations == 1
        assert len(res.best_trajectory) == 1

    def test_deterministic_same_seed(self):
        mdp = make_double_integrator(DoubleIntegratorConfig())
        x0 = np.array([-1.0, 0.0, 0.0, 0.0])
        results = []
        for _ in range(2):
            ex = SpectralExpander(mdp, ExpansionOptions(branch_len=5))
            results.append(search(mdp, x0, ex, SearchBudget(max_iterations=100),
                                  seed=11))
        a, b = results
        assert np.array_equal(a.root_value_history, b.root_value_history)
        assert np.array_equal(a.best_trajectory.states, b.best_trajectory.states)
        assert np.array_equal(a.best_trajectory.actions, b.best_trajectory.actions)
        assert a.node_count == b.node_count

    def test_unsafe_root_rejected(self):
        cfg = DoubleIntegratorConfig(obstacles=[(0.0, 0.0, 0.5)])
        mdp = make_double_integrator(cfg)
        ex = SpectralExpander(mdp, ExpansionOptions(branch_len=5))
        with pytest.raises(ValueError, match="root"):
            search(mdp, np.zeros(4), ex, SearchBudget(max_iterations=1), seed=0)

    def test_visit_accounting_and_value_bounds(self):
        mdp = make_double_integrator(DoubleIntegratorConfig(discount=0.98))
        x0 = np.array([-1.5, 0.5, 0.0, 0.0])
        ex = SpectralExpander(mdp, ExpansionOptions(branch_len=10))
        res = search(mdp, x0, ex, SearchBudget(max_iterations=200), seed=5)
        bound = mdp.return_upper_bound()

        def walk(node):
            expanded = [c for c in node.children if c is not None]
            child_visits = sum(c.visits for c in expanded)
            assert node.child_visits.sum() == child_visits
            assert node.visits >= child_visits
            if node.visits:
                assert -1e-9 <= node.mean_value <= bound + 1e-9
            for c in expanded:
                walk(c)

        assert res.root.visits == res.iterations
        walk(res.root)

    def test_anytime_monotonicity(self):
        mdp = make_double_integrator(DoubleIntegratorConfig())
        ex = SpectralExpander(mdp, ExpansionOptions(branch_len=10))
        res = search(mdp, np.array([-1.0, 0, 0, 0]), ex,
                     SearchBudget(max_iterations=300), seed=7)
        best = res.root_value_history[:, 2]
        assert np.all(np.diff(best) >= 0)

    def test_best_return_at_least_root_mean(self):
        for seed in range(5):
            mdp = make_double_integrator(DoubleIntegratorConfig(discount=0.97))
            ex = SpectralExpander(mdp, ExpansionOptions(branch_len=10))
            res = search(mdp, np.array([-1.0, 0, 0, 0]), ex,
                         SearchBudget(max_iterations=150), seed=seed)
            assert res.best_return >= res.root.mean_value - 1e-12

    def test_argmax_invariance_under_reward_scaling(self):
        rng = np.random.default_rng(13)
        rewards = {}
        for node in range(7):
            for slot in range(2):
                rewards[(node, slot)] = float(rng.uniform(0, 1))
        scale = 3.7
        scaled = {k: v * scale for k, v in rewards.items()}
        runs = []
        for table, c1 in ((rewards, 1.0), (scaled, scale)):
            ex = TableExpander(2, table)
            search(toy_mdp(2), np.zeros(1), ex, SearchBudget(max_iterations=400),
                   constants=UcbConstants(c1=c1), seed=21)
            runs.append(list(ex.expansions))
        assert runs[0] == runs[1]

    def test_small_instance_matches_exhaustive(self):
        rng = np.random.default_rng(2)
        rewards = {}
        for node in range(3):
            for slot in range(2):
                rewards[(node, slot)] = float(rng.uniform(0, 1))
        optimum = enumerate_toy_optimum(2, 2, rewards)
        ex = TableExpander(2, rewards)
        res = search(toy_mdp(2), np.zeros(1), ex, SearchBudget(max_iterations=2000),
                     seed=4)
        assert res.best_return == pytest.approx(optimum)

    def test_all_unsafe_children_still_complete(self):
        # tracked vehicle at exact rest under the algebraic gain mode: every
        # branch is dead, but the search must finish and return a plan
        from specplan.envs import TrackedVehicleConfig, make_tracked_vehicle

        mdp = make_tracked_vehicle(TrackedVehicleConfig())
        ex = SpectralExpander(mdp, ExpansionOptions(branch_len=2, dare_max_iter=200))
        res = search(mdp, np.zeros(5), ex, SearchBudget(max_iterations=25), seed=0)
        assert res.iterations == 25
        assert res.best_return == 0.0
        assert all(c is None or c.terminal for c in res.root.children)

    def test_wall_time_budget(self):
        rewards = {(0, 0): 0.2, (0, 1): 0.9}
        ex = TableExpander(2, rewards)
        res = search(toy_mdp(1), np.zeros(1), ex,
                     SearchBudget(max_wall_time=0.05), seed=0)
        assert res.iterations >= 1

    def test_budget_requires_a_bound(self):
        with pytest.raises(ValueError):
            SearchBudget()


class TestConfidenceProfile:
    def test_ratio(self):
        root = make_node(child_slots=3, visits=10)
        for i, v in enumerate([7, 2, 1]):
            root.children[i] = make_node(parent=root, index=i, depth=1)
            root.child_visits[i] = v
        assert confidence_profile(root, 0) == pytest.approx(0.7)

    def test_single_child_visited(self):
        root = make_node(child_slots=2, visits=3)
        root.children[0] = make_node(parent=root, index=0, depth=1)
        root.child_visits[0] = 3
        assert confidence_profile(root, 0) == 1.0

    def test_no_visits_zero(self):
        root = make_node(child_slots=2)
        assert confidence_profile(root, 0) == 0.0
        assert confidence_profile(root, 3) == 0.0
