import json

import numpy as np
import pytest

from specplan.expansion import ExpansionOptions, SpectralExpander
from specplan.mdp import rollout, step
from specplan.numerics import controllability, jacobian, linearize_along
from specplan.envs import (ConfigError, DoubleIntegratorConfig, GliderConfig,
                           HazardGrid, NetParams, SpacecraftNetConfig,
                           TrackedVehicleConfig, arctan_shaping, contact_force,
                           default_initial_state, load_env, load_env_file,
                           make_double_integrator, make_glider, make_spacecraft_net,
                           make_tracked_vehicle, net_segment_force,
                           target_coordinate_indices, trimmed_initial_state)
from specplan.envs.glider import body_to_world, target_in_cone


class TestDoubleIntegrator:
    def test_zero_action_keeps_velocity(self):
        mdp = make_double_integrator(DoubleIntegratorConfig())
        x = np.array([0.1, 0.2, 0.3, -0.4])
        out = step(mdp, x, np.zeros(2))
        assert np.allclose(out[2:], x[2:])

    def test_reward_one_at_goal(self):
        cfg = DoubleIntegratorConfig(goal=(1.0, 1.0))
        mdp = make_double_integrator(cfg)
        assert mdp.stage_reward(np.array([1.0, 1.0, 0.0, 0.0])) == pytest.approx(1.0)

    def test_reward_half_at_scale_distance(self):
        cfg = DoubleIntegratorConfig(goal=(0.0, 0.0), reward_scale=0.5)
        mdp = make_double_integrator(cfg)
        assert mdp.stage_reward(np.array([0.5, 0.0, 0, 0])) == pytest.approx(0.5)

    def test_rewards_in_unit_interval(self):
        mdp = make_double_integrator(DoubleIntegratorConfig())
        rng = np.random.default_rng(0)
        for _ in range(50):
            r = mdp.stage_reward(rng.uniform(-3, 3, size=4))
            assert 0.0 <= r <= 1.0


class TestTrackedVehicle:
    def test_perfect_tracking_reward_one(self):
        cfg = TrackedVehicleConfig(command=(0.5, -0.2))
        mdp = make_tracked_vehicle(cfg)
        x = np.array([0, 0, 0, 0.5, -0.2])
        assert mdp.stage_reward(x) == pytest.approx(1.0)

    def test_unit_velocity_error(self):
        cfg = TrackedVehicleConfig(command=(1.0, 0.0))
        mdp = make_tracked_vehicle(cfg)
        x = np.array([0, 0, 0, 0.0, 0.0])
        assert mdp.stage_reward(x) == pytest.approx(0.2)

    def test_degradation_scales_forward_command(self):
        cfg = TrackedVehicleConfig(degradation=(-0.25, 0, 0, 0))
        mdp = make_tracked_vehicle(cfg)
        out_full = step(mdp, np.zeros(5), np.array([1.0, 0.0]))
        nominal = make_tracked_vehicle(TrackedVehicleConfig())
        out_scaled = step(nominal, np.zeros(5), np.array([0.75, 0.0]))
        assert np.allclose(out_full, out_scaled)

    def test_hazard_footprint(self):
        cells = np.zeros((10, 10), dtype=bool)
        cells[5, 5] = True
        grid = HazardGrid(origin=np.array([0.0, 0.0]), resolution=0.5, cells=cells)
        cfg = TrackedVehicleConfig(footprint_radius=0.3)
        mdp = make_tracked_vehicle(cfg, grid)
        # footprint overlapping the blocked cell at (2.5..3.0)^2
        assert mdp.unsafe(np.array([2.75, 2.75, 0, 0, 0]))
        assert not mdp.unsafe(np.array([1.0, 1.0, 0, 0, 0]))
        # off-grid counts as unsafe
        assert mdp.unsafe(np.array([50.0, 50.0, 0, 0, 0]))

    def test_hazard_batch_matches_scalar(self):
        rng = np.random.default_rng(4)
        cells = rng.random((12, 12)) < 0.3
        grid = HazardGrid(origin=np.array([-3.0, -3.0]), resolution=0.5, cells=cells)
        mdp = make_tracked_vehicle(TrackedVehicleConfig(footprint_radius=0.4), grid)
        xs = np.column_stack([rng.uniform(-4, 4, 50), rng.uniform(-4, 4, 50),
                              np.zeros(50), np.zeros(50), np.zeros(50)])
        batch = mdp.unsafe_batch(xs)
        for i, x in enumerate(xs):
            assert batch[i] == mdp.unsafe(x)


class TestHazardGrid:
    def test_json_round_trip(self):
        cells = np.array([[0, 1], [1, 0]], dtype=bool)
        grid = HazardGrid(origin=np.array([1.0, -2.0]), resolution=0.25, cells=cells)
        clone = HazardGrid.from_json_dict(json.loads(json.dumps(grid.to_json_dict())))
        assert np.array_equal(clone.cells, grid.cells)
        assert clone.resolution == grid.resolution
        assert np.array_equal(clone.origin, grid.origin)


class TestNetForces:
    PARAMS = NetParams(segment_count=3, nominal_len=1.0, stiffness=10.0,
                       damping=0.0, contact_stiffness=4.0, contact_damping=0.0,
                       target_radius=0.5)

    def test_slack_boundary_zero(self):
        f_i, f_j, flag = net_segment_force(np.zeros(2), np.array([1.0, 0.0]),
                                           np.zeros(2), np.zeros(2), self.PARAMS)
        assert np.allclose(f_i, 0) and np.allclose(f_j, 0) and not flag

    def test_compressed_zero(self):
        f_i, f_j, _ = net_segment_force(np.zeros(2), np.array([0.5, 0.0]),
                                        np.zeros(2), np.zeros(2), self.PARAMS)
        assert np.allclose(f_i, 0) and np.allclose(f_j, 0)

    def test_tension_magnitude(self):
        f_i, f_j, _ = net_segment_force(np.zeros(2), np.array([1.1, 0.0]),
                                        np.zeros(2), np.zeros(2), self.PARAMS)
        assert np.linalg.norm(f_i) == pytest.approx(1.0)
        assert np.allclose(f_i, -f_j)
        assert f_i[0] > 0  # pulls node i toward node j

    def test_coincident_nodes_flagged(self):
        f_i, f_j, flag = net_segment_force(np.ones(2), np.ones(2),
                                           np.zeros(2), np.zeros(2), self.PARAMS)
        assert flag and np.allclose(f_i, 0)

    def test_contact_boundary_zero(self):
        f_n, f_t = contact_force(np.array([0.5, 0.0]), np.zeros(2),
                                 np.zeros(2), np.zeros(2), self.PARAMS)
        assert np.allclose(f_n, 0) and np.allclose(f_t, 0)

    def test_contact_pushes_apart(self):
        f_n, f_t = contact_force(np.array([0.25, 0.0]), np.zeros(2),
                                 np.zeros(2), np.zeros(2), self.PARAMS)
        assert np.linalg.norm(f_n) == pytest.approx(4.0 * 0.25)
        assert f_n[0] > 0  # node pushed away from the target
        assert np.allclose(f_n + f_t, 0)


class TestSpacecraftNet:
    def test_rest_slack_only_thrust_accelerates(self):
        cfg = SpacecraftNetConfig()
        mdp = make_spacecraft_net(cfg)
        x0 = default_initial_state(cfg)
        u = np.array([0.1, 0.0, 0.0, 0.0])
        out = step(mdp, x0, u)
        P = cfg.node_count + 1
        vel = out[2 * P:].reshape(P, 2)
        assert abs(vel[0, 0] - cfg.dt * 0.1) < 1e-12
        assert np.allclose(vel[1:], 0.0)

    def test_reward_sums_weights_when_matched(self):
        cfg = SpacecraftNetConfig(desired_velocity=(0.0, 0.0))
        mdp = make_spacecraft_net(cfg)
        N = cfg.node_count
        P = N + 1
        pos = np.zeros((P, 2))  # centroid exactly on the target
        x = np.concatenate([pos.reshape(-1), np.zeros(2 * P)])
        c1, c2, c3 = cfg.reward_weights
        assert mdp.stage_reward(x) == pytest.approx(c1 + c2 + c3)

    def test_reward_weight_validation(self):
        with pytest.raises(ValueError):
            make_spacecraft_net(SpacecraftNetConfig(reward_weights=(0.6, 0.3, 0.3)))

    def test_momentum_change_equals_thrust_impulse(self):
        cfg = SpacecraftNetConfig()
        mdp = make_spacecraft_net(cfg)
        rng = np.random.default_rng(8)
        P = cfg.node_count + 1
        x = default_initial_state(cfg)
        x = x + 0.01 * rng.normal(size=x.size)  # stretch the net a bit
        u = np.array([0.05, -0.03, 0.02, 0.04])
        out = step(mdp, x, u)
        masses = np.append(np.ones(cfg.node_count), cfg.target_mass)
        before = (masses[:, None] * x[2 * P:].reshape(P, 2)).sum(axis=0)
        after = (masses[:, None] * out[2 * P:].reshape(P, 2)).sum(axis=0)
        impulse = cfg.dt * (u[0:2] + u[2:4])
        assert np.allclose(after - before, impulse, atol=1e-12)

    def test_pre_contact_target_rows_of_b_zero(self):
        cfg = SpacecraftNetConfig()
        mdp = make_spacecraft_net(cfg)
        x0 = default_initial_state(cfg)
        A, B = jacobian(mdp.dynamics, x0, np.zeros(4))
        t_idx = target_coordinate_indices(cfg)
        assert np.all(B[t_idx, :] == 0.0)
        # target block decoupled in A as well (pre-contact)
        others = np.setdiff1d(np.arange(mdp.state_dim), t_idx)
        assert np.all(A[np.ix_(t_idx, others)] == 0.0)
        assert np.all(A[np.ix_(others, t_idx)] == 0.0)

    def test_pre_contact_gramian_columns_zero(self):
        cfg = SpacecraftNetConfig()
        mdp = make_spacecraft_net(cfg)
        x0 = default_initial_state(cfg)
        lin = linearize_along(mdp, x0, np.zeros((3, 4)))
        dec = controllability(lin, mdp.action_box)
        t_idx = target_coordinate_indices(cfg)
        assert np.all(dec.ctrl_matrix[t_idx, :] == 0.0)

    def test_undamped_energy_conservation(self):
        net = NetParams(segment_count=3, nominal_len=0.5, stiffness=0.8,
                        damping=0.0, contact_stiffness=2.0, contact_damping=0.0,
                        target_radius=0.3)
        cfg = SpacecraftNetConfig(dt=0.01, net=net)
        mdp = make_spacecraft_net(cfg)
        N = cfg.node_count
        P = N + 1
        pos = np.zeros((P, 2))
        pos[:N, 0] = np.linspace(-0.9, 0.9, N)  # stretched 20% beyond rest
        pos[N] = (0.0, 2.0)
        x = np.concatenate([pos.reshape(-1), np.zeros(2 * P)])

        def energy(state):
            p = state[: 2 * P].reshape(P, 2)
            v = state[2 * P:].reshape(P, 2)
            masses = np.append(np.ones(N), cfg.target_mass)
            kin = 0.5 * float((masses * (v * v).sum(axis=1)).sum())
            pot = 0.0
            for i in range(1, N):
                li = np.linalg.norm(p[i] - p[i - 1])
                if li > net.nominal_len:
                    pot += 0.5 * net.stiffness * (li - net.nominal_len) ** 2
            for i in range(N):
                d = np.linalg.norm(p[i] - p[N])
                if d < net.target_radius:
                    pot += 0.5 * net.contact_stiffness * (d - net.target_radius) ** 2
            return kin + pot

        e0 = energy(x)
        assert e0 > 0
        for _ in range(100):
            x = step(mdp, x, np.zeros(4))
        drift = abs(energy(x) - e0) / e0
        assert drift <= 0.01


class TestGlider:
    def test_missing_coefficients_rejected(self):
        coeffs = {"CL": {"zero": 0.2}}
        with pytest.raises(ConfigError, match="missing aerodynamic"):
            make_glider(GliderConfig(coeffs=coeffs))

    def test_cone_inclusion_50m_ahead(self):
        cfg = GliderConfig()
        x = trimmed_initial_state(cfg)
        target = x[0:3] + body_to_world(x[6], x[7], x[8]) @ np.array([50.0, 0, 0])
        assert target_in_cone(x, target, np.deg2rad(30), 100.0)

    def test_cone_excludes_beyond_length(self):
        cfg = GliderConfig()
        x = trimmed_initial_state(cfg)
        target = x[0:3] + body_to_world(x[6], x[7], x[8]) @ np.array([150.0, 0, 0])
        assert not target_in_cone(x, target, np.deg2rad(30), 100.0)

    def test_cone_excludes_wide_angle(self):
        cfg = GliderConfig()
        x = trimmed_initial_state(cfg)
        offset = np.array([50.0, 50.0 * np.tan(np.deg2rad(40)), 0.0])
        target = x[0:3] + body_to_world(x[6], x[7], x[8]) @ offset
        assert not target_in_cone(x, target, np.deg2rad(30), 100.0)

    def test_xi_resets_on_observation(self):
        cfg = GliderConfig(target=(80.0, 0.0, -300.0))
        mdp = make_glider(cfg)
        x = trimmed_initial_state(cfg)  # at origin heading +x, altitude 300
        out = step(mdp, x, np.zeros(3))
        assert out[12] == 0.0

    def test_xi_increments_when_unseen(self):
        cfg = GliderConfig(target=(-500.0, 0.0, -300.0))
        mdp = make_glider(cfg)
        x = trimmed_initial_state(cfg)
        out = step(mdp, x, np.zeros(3))
        assert out[12] == x[12] + 1

    def test_reward_when_recently_observed(self):
        cfg = GliderConfig()
        mdp = make_glider(cfg)
        x = trimmed_initial_state(cfg)
        x[12] = 0.0
        assert mdp.stage_reward(x) == pytest.approx(0.1 * cfg.stay_alive_reward + 0.9)

    def test_reward_in_unit_interval(self):
        cfg = GliderConfig()
        mdp = make_glider(cfg)
        rng = np.random.default_rng(1)
        for _ in range(30):
            x = trimmed_initial_state(cfg)
            x[0:3] += rng.uniform(-500, 200, 3)
            x[12] = rng.integers(0, 200)
            assert 0.0 <= mdp.stage_reward(x) <= 1.0

    def test_drag_drains_energy_without_thermal(self):
        cfg = GliderConfig(thermal_force=0.0)
        mdp = make_glider(cfg)
        x = trimmed_initial_state(cfg)

        def energy(s):
            speed2 = float(s[3] ** 2 + s[4] ** 2 + s[5] ** 2)
            altitude = -s[2]
            return 0.5 * cfg.mass * speed2 + cfg.mass * cfg.gravity * altitude

        e0 = energy(x)
        for _ in range(100):
            x = step(mdp, x, np.zeros(3))
        assert energy(x) < e0

    def test_thermal_adds_upward_force(self):
        base = GliderConfig(thermal_force=0.0)
        boosted = GliderConfig(thermal_center=(0.0, 0.0), thermal_radius=500.0,
                               thermal_force=300.0)
        x = trimmed_initial_state(base)
        out_base = step(make_glider(base), x, np.zeros(3))
        out_boost = step(make_glider(boosted), x, np.zeros(3))
        # NED: more upward force makes w-dot (and descent rate) smaller
        assert out_boost[5] < out_base[5]


class TestLoader:
    def test_double_integrator_round_trip(self, tmp_path):
        doc = {"type": "double_integrator", "env": {"dt": 0.05, "horizon": 50},
               "x0": [0, 0, 0, 0], "planner": {"branch_len": 5, "budget_iters": 10}}
        path = tmp_path / "env.json"
        path.write_text(json.dumps(doc))
        bundle = load_env_file(path)
        assert bundle.mdp.dt == 0.05
        assert bundle.planner.branch_len == 5

    def test_unknown_type_rejected(self):
        with pytest.raises(ConfigError):
            load_env({"type": "submarine"})

    def test_unknown_field_rejected(self):
        with pytest.raises(ConfigError, match="unknown env fields"):
            load_env({"type": "double_integrator", "env": {"speed": 3}})

    def test_missing_file(self):
        with pytest.raises(ConfigError, match="not found"):
            load_env_file("/nonexistent/env.json")

    def test_hazard_grid_embedded(self):
        doc = {
            "type": "tracked_vehicle",
            "hazard": {"origin": [0, 0], "resolution": 0.5, "rows": 2, "cols": 2,
                       "data": [0, 1, 0, 0]},
            "x0": [0.2, 0.2, 0, 0, 0],
        }
        bundle = load_env(doc)
        assert bundle.hazard is not None
        assert bundle.mdp.unsafe(np.array([0.75, 0.2, 0, 0, 0]))
