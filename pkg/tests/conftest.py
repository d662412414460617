import numpy as np
import pytest

from specplan.mdp import IntervalBox, MdpDefinition


def make_linear_mdp(A, B, c=None, horizon=10, discount=1.0, dt=1.0,
                    state_span=1e6, action_span=1e6, reward=None):
    """An exactly linear MDP with wide boxes (clipping inactive by default)."""
    A = np.asarray(A, dtype=float)
    B = np.asarray(B, dtype=float)
    n, m = B.shape
    c = np.zeros(n) if c is None else np.asarray(c, dtype=float)

    def dynamics(x, u):
        return A @ x + B @ u + c

    if reward is None:
        def reward(x):
            return 0.0

    return MdpDefinition(
        state_dim=n, action_dim=m, dynamics=dynamics, stage_reward=reward,
        terminal_reward=lambda x: 0.0, unsafe=lambda x: False,
        state_box=IntervalBox([-state_span] * n, [state_span] * n),
        action_box=IntervalBox([-action_span] * m, [action_span] * m),
        horizon=horizon, discount=discount, dt=dt, name="linear",
    )


@pytest.fixture
def di_1d_mdp():
    """1-D double integrator (position, velocity), dt = 1."""
    return make_linear_mdp([[1.0, 1.0], [0.0, 1.0]], [[0.0], [1.0]],
                           horizon=2, action_span=1.0)
