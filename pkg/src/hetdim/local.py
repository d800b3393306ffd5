"""Iterates of the local map in direct and cross (boundary-value) form.

The cross form solves for the orbit segment connecting an entry plane to an
exit plane: given (x0, yk, z0) it finds the unique (xk, y0, zk) such that k
forward steps from (x0, y0, z0) land at (xk, yk, zk).  The y-equation is a
scalar contraction at rate |gamma|^-k, so a damped fixed-point iteration with
forward shooting closes it quickly; the linear tier converges in one step.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConvergenceError, DomainError, ItineraryError
from .saddle import SaddleModel, SplitVector, t0_array, t0_jac_array

Array = np.ndarray


def iterate_local(model: SaddleModel, p: SplitVector, k: int,
                  with_jacobian: bool = True) -> tuple[SplitVector, Array | None, Array]:
    """k-fold local map with chained Jacobian and the dense trajectory.

    Raises ItineraryError carrying the first step j at which the orbit leaves
    the validity box.  k = 0 returns the identity.
    """
    v = p.as_array()
    if np.max(np.abs(v)) > model.box:
        raise DomainError("starting point outside validity box")
    D = model.dim
    traj = np.empty((k + 1, D))
    traj[0] = v
    J = np.eye(D) if with_jacobian else None
    for j in range(k):
        if with_jacobian:
            J = t0_jac_array(model, v) @ J
        v = t0_array(model, v)
        if np.max(np.abs(v)) > model.box:
            raise ItineraryError(f"orbit left the validity box at step {j + 1}", step=j + 1)
        traj[j + 1] = v
    return SplitVector.from_array(v), J, traj


def _forward_y(model: SaddleModel, x0: float, y0: float, z0: Array, k: int) -> tuple[float, float, float, Array]:
    """Forward-shoot k steps; return (yk, dyk/dy0, xk, zk)."""
    v = np.concatenate(([x0, y0], z0))
    dy = np.zeros(model.dim)
    dy[1] = 1.0
    for _ in range(k):
        dy = t0_jac_array(model, v) @ dy
        v = t0_array(model, v)
        if np.max(np.abs(v)) > model.box:
            raise DomainError("cross-form shooting left the validity box")
    return float(v[1]), float(dy[1]), float(v[0]), v[2:]


@dataclass(frozen=True)
class CrossFormResult:
    x_k: float
    y_0: float
    z_k: Array
    residual: float
    iterations: int


def solve_cross_form(model: SaddleModel, x0: float, yk: float, z0, k: int,
                     tol: float = 1e-12, max_iter: int = 200) -> CrossFormResult:
    """Solve the cross form: find (x_k, y_0, z_k) with prescribed (x0, yk, z0).

    Damped fixed-point iteration on y0 (update scaled by the shooting
    derivative dyk/dy0 ~ gamma^k); tolerance on |yk(y0) - yk|.
    """
    z0 = np.atleast_1d(np.asarray(z0, dtype=float))
    gam = model.multipliers.gamma
    y0 = yk / gam ** k
    last = np.inf
    for it in range(1, max_iter + 1):
        y_end, slope, xk, zk = _forward_y(model, x0, y0, z0, k)
        resid = y_end - yk
        if abs(resid) < tol:
            return CrossFormResult(xk, y0, zk, abs(resid), it)
        if not np.isfinite(resid):
            break
        last = abs(resid)
        y0 = y0 - resid / slope
    raise ConvergenceError(f"cross form did not converge for k={k}",
                           residual=last, seed=yk / gam ** k)


def strong_derivative_bounds(model: SaddleModel, p: SplitVector, k: int) -> tuple[float, float]:
    """Decay ratios of the strong-stable derivative blocks after k steps.

    Returns (||dx_k/dz_0|| / lambda0^k, ||dz_k/dz_0|| / lambda0^k); both stay
    bounded uniformly in k for admissible models.
    """
    _, J, _ = iterate_local(model, p, k)
    lam0 = model.multipliers.lambda0
    dx_dz = np.atleast_2d(J[0, 2:])
    dz_dz = J[2:, 2:]
    scale = lam0 ** k
    return (float(np.linalg.norm(dx_dz, 2)) / scale,
            float(np.linalg.norm(dz_dz, 2)) / scale)
