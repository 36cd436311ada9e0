"""Exact radial trajectories under gradient descent and gradient flow.

A run starts on the eps-sphere around the saddle and records the radial
vector u_k = x_k - x* at every step until the radius first leaves the ball
(strictly exceeds eps) or the step budget runs out.  These trajectories are
the ground truth the spectral approximations are measured against.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import TYPE_CHECKING

import numpy as np

from .spectral import decompose

if TYPE_CHECKING:
    from .problems import SaddleProblem


class NoExit(ValueError):
    """Trajectory never left the eps-ball within its budget."""


class StepTooLarge(ValueError):
    """An integrator step jumped far past the exit shell (norm > 10 eps)."""


@dataclass(frozen=True)
class RadialTrajectory:
    """Recorded radial history of one run.

    radials has shape (K+1, n) with radials[k] = x_k - x*; norms are the
    corresponding radii.  exit_index is the first k with norms[k] > eps, or
    None if the run exhausted its budget inside the ball.  alpha is the step
    size (the time step dt for flow runs).  budget is the step limit the run
    was given.
    """

    eps: float
    alpha: float
    radials: np.ndarray
    exit_index: int | None
    norms: np.ndarray
    budget: int

    def __post_init__(self):
        r0 = float(self.norms[0])
        if abs(r0 - self.eps) > 1e-5 * self.eps:
            raise ValueError(
                f"trajectory must start on the eps-sphere: ||u_0|| = {r0:.12g}, eps = {self.eps:.12g}"
            )


def default_k_max(eps: float, alpha: float, beta: float) -> int:
    """Step budget generous enough for the slowest admissible escape rate."""
    return 10 * math.ceil(math.log(1.0 / eps) / math.log1p(alpha * beta))


def gd_run(
    problem: "SaddleProblem",
    u0: np.ndarray,
    alpha: float,
    eps: float,
    k_max: int | None = None,
) -> RadialTrajectory:
    """Run gradient descent x_{k+1} = x_k - alpha * grad f(x_k) from x* + u0.

    Requires 0 < alpha <= 1/L where L is the largest |eigenvalue| of the
    saddle Hessian.  Stops at the first radius strictly above eps (that point
    is recorded and becomes exit_index) or after k_max steps.  The default
    budget is 10 * ceil(log(1/eps) / log(1 + alpha * beta)).
    """
    u0 = np.asarray(u0, dtype=float)
    spectrum = decompose(problem.hessian(problem.saddle))
    if not (0 < alpha <= (1.0 + 1e-12) / spectrum.big_l):
        raise ValueError(
            f"alpha must lie in (0, 1/L] with L = {spectrum.big_l:g}, got {alpha}"
        )
    if k_max is None:
        k_max = default_k_max(eps, alpha, spectrum.beta)

    x = problem.saddle + u0
    radials = [u0.copy()]
    norms = [float(np.linalg.norm(u0))]
    exit_index = None
    for k in range(1, k_max + 1):
        x = x - alpha * problem.gradient(x)
        u = x - problem.saddle
        radials.append(u)
        norms.append(float(np.linalg.norm(u)))
        if norms[-1] > eps:
            exit_index = k
            break
    return RadialTrajectory(
        eps=float(eps),
        alpha=float(alpha),
        radials=np.array(radials),
        exit_index=exit_index,
        norms=np.array(norms),
        budget=k_max,
    )


def _rk4_step(problem: "SaddleProblem", x: np.ndarray, dt: float) -> np.ndarray:
    k1 = -problem.gradient(x)
    k2 = -problem.gradient(x + 0.5 * dt * k1)
    k3 = -problem.gradient(x + 0.5 * dt * k2)
    k4 = -problem.gradient(x + dt * k3)
    return x + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def flow_run(
    problem: "SaddleProblem",
    u0: np.ndarray,
    t_max: float,
    dt: float,
    eps: float,
) -> RadialTrajectory:
    """Integrate gradient flow dx/dt = -grad f(x) with classical fixed-step RK4.

    Fixed steps keep runs bit-reproducible for a given dt.  Stops at the first
    recorded radius above eps; a single step that lands past 10 * eps raises
    StepTooLarge since the error estimate behind the exit record breaks down.
    alpha on the returned trajectory holds dt.
    """
    u0 = np.asarray(u0, dtype=float)
    if dt <= 0 or t_max <= 0:
        raise ValueError("t_max and dt must be positive")
    steps = math.ceil(t_max / dt)
    x = problem.saddle + u0
    radials = [u0.copy()]
    norms = [float(np.linalg.norm(u0))]
    exit_index = None
    for k in range(1, steps + 1):
        x = _rk4_step(problem, x, dt)
        u = x - problem.saddle
        r = float(np.linalg.norm(u))
        if r > 10.0 * eps:
            raise StepTooLarge(
                f"step {k} jumped to radius {r:.3g} > 10 * eps; reduce dt"
            )
        radials.append(u)
        norms.append(r)
        if r > eps:
            exit_index = k
            break
    return RadialTrajectory(
        eps=float(eps),
        alpha=float(dt),
        radials=np.array(radials),
        exit_index=exit_index,
        norms=np.array(norms),
        budget=steps,
    )


def exit_time(traj: RadialTrajectory) -> int:
    """First index K >= 1 with ||u_K|| > eps.  Raises NoExit if none recorded."""
    above = np.flatnonzero(traj.norms[1:] > traj.eps)
    if above.size == 0:
        raise NoExit(
            f"no radius above eps = {traj.eps:g} within {traj.norms.size - 1} recorded steps"
        )
    return int(above[0]) + 1


def monotonicity_profile(
    traj: RadialTrajectory, v: np.ndarray
) -> tuple[np.ndarray, bool]:
    """Alignment sequence <v, u_k> up to (and including) the exit step.

    Returns the sequence and whether it is strictly increasing.  Strict
    increase is the behaviour the crude escape bound assumes; on nonconvex
    problems it can fail even though the run still exits, so callers treat
    the flag as a diagnostic rather than an error condition.
    """
    v = np.asarray(v, dtype=float)
    stop = traj.norms.size if traj.exit_index is None else traj.exit_index + 1
    seq = traj.radials[:stop] @ v
    increasing = bool(np.all(np.diff(seq) > 0)) if seq.size > 1 else True
    return seq, increasing
