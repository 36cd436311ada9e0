"""First-order response of the saddle eigenstructure to radial movement.

When the iterate sits at x* + u, the Hessian is modelled as
H(x*) + p * ||u|| * H'(u/||u||) with H' the directional derivative of the
Hessian field at the saddle.  The classical first-order formulas then give
eigenvalue rates <v_i, H' v_i> and eigenvector rates mixing v_i with the other
eigenvectors through the spectral gaps.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import TYPE_CHECKING

import numpy as np

from .spectral import Spectrum

if TYPE_CHECKING:
    from .problems import SaddleProblem


class DegeneracyUnhandled(ValueError):
    """Eigenvector rates requested on a (near-)degenerate spectrum without grouping."""


class InvalidAlpha(ValueError):
    """Step size outside (0, 1/L]."""


@dataclass(frozen=True)
class PerturbationData:
    """Directional Hessian derivative with its spectral response.

    h_matrix is symmetric; eigenvalue_rates[i] = <v_i, H v_i>;
    eigenvector_rates[:, i] is the rate of v_i and is orthogonal to v_i.
    direction records the unit radial direction the derivative was taken in.
    """

    h_matrix: np.ndarray
    eigenvalue_rates: np.ndarray
    eigenvector_rates: np.ndarray
    direction: np.ndarray | None


def fd_step(eps: float) -> float:
    """Central-difference step for Hessian differentiation at radius scale eps."""
    return max(1e-3 * eps, 1e-6)


def directional_hessian_derivative(
    problem: "SaddleProblem", u_hat: np.ndarray, h: float = 1e-4
) -> np.ndarray:
    """Directional derivative of the Hessian field at the saddle along u_hat.

    Central difference (H(x* + h u_hat) - H(x* - h u_hat)) / (2h), symmetrized.
    The default step 1e-4 balances truncation against cancellation for Hessian
    entries of order one.
    """
    u_hat = np.asarray(u_hat, dtype=float)
    nrm = np.linalg.norm(u_hat)
    if nrm == 0:
        raise ValueError("direction must be nonzero")
    u_hat = u_hat / nrm
    hp = problem.hessian(problem.saddle + h * u_hat)
    hm = problem.hessian(problem.saddle - h * u_hat)
    d = (hp - hm) / (2.0 * h)
    return 0.5 * (d + d.T)


def _same_group(groups: tuple[tuple[int, ...], ...]) -> dict[int, int]:
    owner = {}
    for g, members in enumerate(groups):
        for i in members:
            owner[i] = g
    return owner


def rs_corrections(
    spectrum: Spectrum,
    h_matrix: np.ndarray,
    degenerate: bool = False,
    direction: np.ndarray | None = None,
) -> PerturbationData:
    """First-order eigenvalue and eigenvector rates under the perturbation h_matrix.

    Rates follow the standard non-degenerate formulas
        dlam_i = <v_i, H v_i>,
        dv_i   = sum_{l != i} <v_l, H v_i> / (lam_i - lam_l) * v_l.
    With degenerate=True the sum skips every l in the same near-degenerate
    group as i, which is the grouped variant that stays finite when
    within-group gaps vanish.  With degenerate=False a within-group gap below
    1e-8 * big_l raises DegeneracyUnhandled instead of dividing by it.
    """
    h = np.asarray(h_matrix, dtype=float)
    lam = spectrum.eigenvalues
    v = spectrum.eigenvectors
    n = lam.size
    hv = v.T @ h @ v
    rates = np.diag(hv).copy()

    owner = _same_group(spectrum.groups)
    if not degenerate:
        for g in spectrum.groups:
            for a in range(len(g)):
                for b in range(a + 1, len(g)):
                    if abs(lam[g[a]] - lam[g[b]]) < 1e-8 * spectrum.big_l:
                        raise DegeneracyUnhandled(
                            f"eigenvalues {g[a]} and {g[b]} are degenerate; "
                            "pass degenerate=True to use the grouped formula"
                        )

    dv = np.zeros((n, n))
    for i in range(n):
        coeffs = np.zeros(n)
        for l in range(n):
            if l == i:
                continue
            if degenerate and owner[l] == owner[i]:
                continue
            coeffs[l] = hv[l, i] / (lam[i] - lam[l])
        dv[:, i] = v @ coeffs

    return PerturbationData(
        h_matrix=h,
        eigenvalue_rates=rates,
        eigenvector_rates=dv,
        direction=None if direction is None else np.asarray(direction, dtype=float),
    )


def hessian_first_order(
    problem: "SaddleProblem", u: np.ndarray, p: float = 1.0, h: float = 1e-4
) -> np.ndarray:
    """First-order Hessian model H(x*) + p * ||u|| * H'(u/||u||) at offset u."""
    u = np.asarray(u, dtype=float)
    base = problem.hessian(problem.saddle)
    nrm = float(np.linalg.norm(u))
    if nrm == 0:
        return base
    return base + p * nrm * directional_hessian_derivative(problem, u / nrm, h=h)


def eps_validity_bounds(
    big_l: float,
    big_m: float,
    n: int,
    delta: float,
    alpha: float,
    eps_guess: float = 0.0,
) -> float:
    """Largest radius at which the first-order spectral trajectory model is valid.

    Two regimes, split by how close alpha sits to the top step 1/big_l.  The
    boundary margin is 10 * eps_guess * big_m / (2 big_l); with the default
    eps_guess=0 only alpha = 1/big_l itself selects the near-top formula.
    Returns +inf for big_m = 0 (the model is exact on quadratics).

    Raises InvalidAlpha outside (0, 1/big_l].
    """
    if not (0 < alpha <= 1.0 / big_l * (1 + 1e-12)):
        raise InvalidAlpha(f"alpha must lie in (0, 1/L], got {alpha} with L={big_l}")
    if big_m == 0:
        return float("inf")
    margin = 10.0 * eps_guess * big_m / (2.0 * big_l)
    if alpha >= 1.0 / big_l - margin:
        return 2.0 * big_l * delta / (big_m * (2.0 * big_l * n**2 - delta))
    return 2.0 * delta * (1.0 - alpha * big_l) / (alpha * big_m * (2.0 * big_l * n**2 + delta))
