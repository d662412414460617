"""Linearization, controllability decomposition, and Riccati machinery.

Everything here operates on plain numpy arrays and is pure: decompositions
are immutable snapshots that can be shared across workers.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .mdp import DynamicsError, IntervalBox, MdpDefinition, step

FD_EPS = 1e-6
SVD_TRUNCATION = 1e-8


class RiccatiError(RuntimeError):
    """Raised when the fixed-point Riccati iteration fails to converge."""


@dataclass(frozen=True)
class Linearization:
    """Time-varying affine model x+ = A_k x + B_k u + c_k along a nominal
    trajectory; exact at the expansion points by construction of c_k."""

    A_seq: np.ndarray  # (H, n, n)
    B_seq: np.ndarray  # (H, n, m)
    c_seq: np.ndarray  # (H, n)
    nominal_states: np.ndarray  # (H+1, n)
    nominal_actions: np.ndarray  # (H, m)

    @property
    def horizon(self) -> int:
        return len(self.A_seq)

    def simulate(self, z0: np.ndarray, us: np.ndarray) -> np.ndarray:
        """Roll the affine model; returns (H+1, n) states."""
        states = np.empty((self.horizon + 1, z0.size))
        states[0] = z0
        z = z0
        for k in range(self.horizon):
            z = self.A_seq[k] @ z + self.B_seq[k] @ us[k] + self.c_seq[k]
            states[k + 1] = z
        return states


@dataclass(frozen=True)
class ControllabilityDecomposition:
    """Spectrum of the input-normalized controllability matrix.

    ``ctrl_matrix`` maps the stacked normalized input sequence w (each step
    scaled so the action box becomes the unit cube around its center) to the
    terminal-state displacement. ``drift_endpoint`` is the endpoint of the
    affine model under the box-center input, i.e. the image of w = 0.
    """

    ctrl_matrix: np.ndarray        # (n, m*H)
    singular_values: np.ndarray    # (n,), nonincreasing
    singular_vectors: np.ndarray   # (n, n), columns v_i
    drift_endpoint: np.ndarray     # (n,)
    input_scale: np.ndarray        # (m, m) diagonal
    center_offset: np.ndarray      # (m,)
    # affine form of the endpoint map: drift_endpoint = propagator @ z0 + affine_drift
    propagator: np.ndarray         # (n, n)
    affine_drift: np.ndarray       # (n,)
    # SVD factor for least-squares solves: ctrl_matrix = U diag(s) Vt
    _vt: np.ndarray

    @property
    def horizon(self) -> int:
        return self.ctrl_matrix.shape[1] // self.input_scale.shape[0]

    def drift_for(self, z0: np.ndarray) -> np.ndarray:
        """Drift endpoint for a different initial state (same linearization)."""
        return self.propagator @ z0 + self.affine_drift


def jacobian(f, x: np.ndarray, u: np.ndarray):
    """Central finite-difference Jacobians of f(x, u) w.r.t. x and u.

    Per-coordinate step h_j = FD_EPS * max(1, |coord_j|).
    """
    x = np.asarray(x, dtype=float)
    u = np.asarray(u, dtype=float)
    n = x.size
    m = u.size
    A = np.empty((n, n))
    B = np.empty((n, m))
    xp = x.copy()
    xm = x.copy()
    for j in range(n):
        h = FD_EPS * max(1.0, abs(x[j]))
        xp[j] = x[j] + h
        xm[j] = x[j] - h
        A[:, j] = (f(xp, u) - f(xm, u)) * (0.5 / h)
        xp[j] = x[j]
        xm[j] = x[j]
    up = u.copy()
    um = u.copy()
    for j in range(m):
        h = FD_EPS * max(1.0, abs(u[j]))
        up[j] = u[j] + h
        um[j] = u[j] - h
        B[:, j] = (f(x, up) - f(x, um)) * (0.5 / h)
        up[j] = u[j]
        um[j] = u[j]
    if not np.isfinite(A.sum()):
        bad = np.flatnonzero(~np.isfinite(A).all(axis=0))
        raise DynamicsError(f"non-finite Jacobian column for state coordinate {bad[0]}")
    if not np.isfinite(B.sum()):
        bad = np.flatnonzero(~np.isfinite(B).all(axis=0))
        raise DynamicsError(f"non-finite Jacobian column for action coordinate {bad[0]}")
    return A, B


def linearize_along(mdp: MdpDefinition, x0: np.ndarray, nominal_actions: np.ndarray,
                    time_invariant: bool = False) -> Linearization:
    """Affine models along the nominal rollout of ``nominal_actions`` from x0.

    With ``time_invariant`` the step-0 model is reused for every k (the
    nominal trajectory is still propagated with the true dynamics).
    """
    nominal_actions = np.atleast_2d(np.asarray(nominal_actions, dtype=float))
    H = len(nominal_actions)
    if H < 1:
        raise ValueError("need at least one nominal action")
    n, m = mdp.state_dim, mdp.action_dim
    states = np.empty((H + 1, n))
    states[0] = np.asarray(x0, dtype=float)
    A_seq = np.empty((H, n, n))
    B_seq = np.empty((H, n, m))
    c_seq = np.empty((H, n))
    for k in range(H):
        xk, uk = states[k], nominal_actions[k]
        nxt = step(mdp, xk, uk)
        states[k + 1] = nxt
        if time_invariant and k > 0:
            A_seq[k] = A_seq[0]
            B_seq[k] = B_seq[0]
            c_seq[k] = c_seq[0]
            continue
        A, B = jacobian(mdp.dynamics, xk, uk)
        A_seq[k] = A
        B_seq[k] = B
        c_seq[k] = nxt - A @ xk - B @ uk
    return Linearization(A_seq=A_seq, B_seq=B_seq, c_seq=c_seq,
                         nominal_states=states, nominal_actions=nominal_actions)


def controllability(lin: Linearization, action_box: IntervalBox) -> ControllabilityDecomposition:
    """Assemble the input-normalized controllability matrix and its spectrum.

    Inputs are normalized as u = S w + u_c with S = diag(half-widths) and
    u_c the box center, so that any feasible action sequence has |w|_inf <= 1.
    The box-center input is folded into the affine drift term.
    """
    H = lin.horizon
    n = lin.A_seq.shape[1]
    m = action_box.dim
    if H * m == 0:
        raise ValueError("empty input sequence")
    S = np.diag(action_box.half_width)
    u_c = action_box.center

    # suffix products P_i = A_{H-1} ... A_{i+1} (P_{H-1} = I)
    suffix = np.empty((H, n, n))
    suffix[H - 1] = np.eye(n)
    for i in range(H - 2, -1, -1):
        suffix[i] = suffix[i + 1] @ lin.A_seq[i + 1]

    blocks = [suffix[i] @ lin.B_seq[i] @ S for i in range(H)]
    C = np.concatenate(blocks, axis=1)

    propagator = suffix[0] @ lin.A_seq[0]
    affine = np.zeros(n)
    for i in range(H):
        affine += suffix[i] @ (lin.B_seq[i] @ u_c + lin.c_seq[i])

    U, s, Vt = np.linalg.svd(C, full_matrices=True)
    sigma = np.zeros(n)
    sigma[: s.size] = s
    drift = propagator @ lin.nominal_states[0] + affine
    return ControllabilityDecomposition(
        ctrl_matrix=C,
        singular_values=sigma,
        singular_vectors=U,
        drift_endpoint=drift,
        input_scale=S,
        center_offset=u_c,
        propagator=propagator,
        affine_drift=affine,
        _vt=Vt,
    )


def min_energy_inputs(decomp: ControllabilityDecomposition, target: np.ndarray) -> np.ndarray:
    """Minimum-norm normalized input sequence w with C w ~= target - drift.

    Singular values below SVD_TRUNCATION * sigma_max are truncated, so the
    solve always returns (the residual lies outside range(C)). Result shape
    is (H, m).
    """
    rhs = np.asarray(target, dtype=float) - decomp.drift_endpoint
    s = decomp.singular_values
    cutoff = SVD_TRUNCATION * (s[0] if s.size else 0.0)
    coeffs = decomp.singular_vectors.T @ rhs
    k = decomp.ctrl_matrix.shape[1]
    r = min(s.size, k)
    live = s[:r] > cutoff
    w = np.zeros(k)
    if live.any():
        w = (coeffs[:r][live] / s[:r][live]) @ decomp._vt[:r][live]
    m = decomp.input_scale.shape[0]
    return w.reshape(-1, m)


def physical_actions(decomp: ControllabilityDecomposition, w: np.ndarray,
                     action_box: IntervalBox) -> np.ndarray:
    """Map normalized inputs back to clipped physical actions."""
    u = w @ decomp.input_scale.T + decomp.center_offset
    return np.clip(u, action_box.lower, action_box.upper)


def _riccati_map(M: np.ndarray, A: np.ndarray, B: np.ndarray,
                 Gx: np.ndarray, Gu: np.ndarray) -> np.ndarray:
    BtM = B.T @ M
    gain = np.linalg.solve(Gu + BtM @ B, BtM @ A)
    return A.T @ M @ A - (BtM @ A).T @ gain + Gx


def dare_solve(A: np.ndarray, B: np.ndarray, Gx: np.ndarray, Gu: np.ndarray,
               tol: float = 1e-10, max_iter: int = 10000) -> np.ndarray:
    """Fixed-point solve of the discrete algebraic Riccati equation.

    Iterates M <- A'MA - A'MB (Gu + B'MB)^-1 B'MA + Gx from M0 = Gx until the
    residual Frobenius norm drops below tol. Raises RiccatiError if the cap
    is hit (unstabilizable pair).
    """
    A = np.asarray(A, dtype=float)
    B = np.asarray(B, dtype=float)
    Gx = np.asarray(Gx, dtype=float)
    Gu = np.asarray(Gu, dtype=float)
    M = Gx.copy()
    for _ in range(max_iter):
        M_next = _riccati_map(M, A, B, Gx, Gu)
        M_next = 0.5 * (M_next + M_next.T)
        # ||map(M) - M|| is exactly the equation residual at M
        if np.linalg.norm(M_next - M, ord="fro") <= tol:
            return M
        M = M_next
    raise RiccatiError("DARE did not converge")


def lqr_gain(A: np.ndarray, B: np.ndarray, M: np.ndarray, Gu: np.ndarray) -> np.ndarray:
    """Tracking gain K = (Gu + B'MB)^-1 B'MA."""
    BtM = B.T @ M
    return np.linalg.solve(Gu + BtM @ B, BtM @ A)


def finite_horizon_gains(A_seq: np.ndarray, B_seq: np.ndarray,
                         Gx: np.ndarray, Gu: np.ndarray) -> np.ndarray:
    """Backward Riccati recursion over the branch horizon.

    Always well defined, even when free modes of (A, B) are uncontrollable
    (tethered/augmented states), where the algebraic equation has no
    stabilizing solution. Returns per-step gains, shape (H, m, n).
    """
    H = len(A_seq)
    n = A_seq.shape[1]
    m = B_seq.shape[2]
    gains = np.empty((H, m, n))
    M = Gx.copy()
    for k in range(H - 1, -1, -1):
        A, B = A_seq[k], B_seq[k]
        BtM = B.T @ M
        gains[k] = np.linalg.solve(Gu + BtM @ B, BtM @ A)
        M = A.T @ M @ A - (BtM @ A).T @ gains[k] + Gx
        M = 0.5 * (M + M.T)
    return gains
