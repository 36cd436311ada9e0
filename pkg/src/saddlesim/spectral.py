"""Eigenstructure of saddle Hessians: signed decomposition, gap grouping, projections.

Everything downstream (trajectory models, exit-time bounds) consumes the
:class:`Spectrum` produced here, so the conventions are fixed once and for all:
eigenvalues sorted descending, eigenvectors as orthonormal columns in the same
order, stable = positive eigenvalues, unstable = negative.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


class NotSymmetric(ValueError):
    """Input matrix is not symmetric within tolerance."""


class NotMorse(ValueError):
    """An eigenvalue sits at (or numerically at) zero, so the saddle is degenerate."""


class NoNegativeEigenvalue(ValueError):
    """All eigenvalues are nonnegative: the point is not a strict saddle."""


class SingleGroup(ValueError):
    """Gap grouping merged every eigenvalue, leaving no inter-group gap to report."""


class WrongRadius(ValueError):
    """Initial offset does not lie on the sphere of the requested radius."""


@dataclass(frozen=True)
class Spectrum:
    """Eigen-decomposition of a Hessian at a strict saddle.

    Attributes
    ----------
    eigenvalues : (n,) array, sorted descending.
    eigenvectors : (n, n) array, orthonormal columns, eigenvectors[:, i]
        paired with eigenvalues[i].
    stable_idx : indices with eigenvalues > 0.
    unstable_idx : indices with eigenvalues < 0.
    big_l : max |eigenvalue| (gradient Lipschitz constant of the quadratic part).
    beta : min |eigenvalue|.
    delta : smallest gap between eigenvalues in distinct groups.
    groups : partition of indices into near-degenerate clusters, each a tuple
        of positions into the descending order.
    """

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray
    stable_idx: np.ndarray
    unstable_idx: np.ndarray
    big_l: float
    beta: float
    delta: float
    groups: tuple[tuple[int, ...], ...]

    @property
    def dim(self) -> int:
        return self.eigenvalues.size


@dataclass(frozen=True)
class Projections:
    """Nonnegative initial amplitudes of an offset on the eigenbasis.

    theta_s and theta_us hold |<u0, v_i>| / eps for stable and unstable
    directions respectively, in spectrum order.  signed_basis carries the
    sign-flipped eigenvectors so that u0 = eps * signed_basis @ theta_full
    with every theta nonnegative.
    """

    theta_s: np.ndarray
    theta_us: np.ndarray
    eps: float
    signed_basis: np.ndarray


def _consecutive_groups(eigenvalues: np.ndarray, group_gap: float) -> list[list[int]]:
    groups = [[0]]
    for i in range(1, eigenvalues.size):
        if eigenvalues[i - 1] - eigenvalues[i] < group_gap:
            groups[-1].append(i)
        else:
            groups.append([i])
    return groups


def _default_group_gap(eigenvalues: np.ndarray) -> float:
    gaps = eigenvalues[:-1] - eigenvalues[1:]
    return float(np.median(gaps)) / 10.0


def group_eigenvalues(spectrum: Spectrum, group_gap: float | None = None) -> Spectrum:
    """Re-cluster a spectrum by single linkage on consecutive gaps.

    Adjacent eigenvalues whose gap is strictly below ``group_gap`` land in the
    same group.  The reported delta is the smallest gap between eigenvalues of
    distinct groups.  Default ``group_gap`` is a tenth of the median
    consecutive gap.

    Raises SingleGroup when everything merges into one cluster.
    """
    lam = spectrum.eigenvalues
    if group_gap is None:
        group_gap = _default_group_gap(lam)
    raw = _consecutive_groups(lam, group_gap)
    if len(raw) == 1:
        raise SingleGroup(
            f"group gap {group_gap:g} merges all {lam.size} eigenvalues into one group"
        )
    groups = tuple(tuple(g) for g in raw)
    boundary_gaps = [
        lam[groups[g][-1]] - lam[groups[g + 1][0]] for g in range(len(groups) - 1)
    ]
    delta = float(min(boundary_gaps))
    return Spectrum(
        eigenvalues=lam,
        eigenvectors=spectrum.eigenvectors,
        stable_idx=spectrum.stable_idx,
        unstable_idx=spectrum.unstable_idx,
        big_l=spectrum.big_l,
        beta=spectrum.beta,
        delta=delta,
        groups=groups,
    )


def decompose(hessian: np.ndarray, zero_tol: float | None = None) -> Spectrum:
    """Decompose a saddle Hessian into a :class:`Spectrum`.

    Parameters
    ----------
    hessian : (n, n) symmetric array, n >= 2.
    zero_tol : eigenvalues with |lambda| <= zero_tol are treated as zero and
        rejected.  Default 1e-8 * max|lambda|.

    Raises
    ------
    NotSymmetric, NotMorse, NoNegativeEigenvalue
    """
    a = np.asarray(hessian, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError(f"hessian must be square, got shape {a.shape}")
    if a.shape[0] < 2:
        raise ValueError("need dimension >= 2")
    asym = np.max(np.abs(a - a.T))
    if asym > 1e-8:
        raise NotSymmetric(f"max asymmetry {asym:.3e} exceeds 1e-8")
    a = 0.5 * (a + a.T)

    w, v = np.linalg.eigh(a)
    order = np.argsort(w)[::-1]
    lam = w[order]
    vec = v[:, order]
    # Deterministic sign convention: largest-magnitude component positive.
    for i in range(vec.shape[1]):
        j = int(np.argmax(np.abs(vec[:, i])))
        if vec[j, i] < 0:
            vec[:, i] = -vec[:, i]

    big_l = float(np.max(np.abs(lam)))
    if zero_tol is None:
        zero_tol = 1e-8 * big_l
    if np.any(np.abs(lam) <= zero_tol):
        raise NotMorse(
            f"eigenvalue with |lambda| <= {zero_tol:.3e}; saddle is not Morse"
        )
    if not np.any(lam < 0):
        raise NoNegativeEigenvalue("no negative eigenvalue; not a strict saddle")

    stable_idx = np.flatnonzero(lam > 0)
    unstable_idx = np.flatnonzero(lam < 0)
    beta = float(np.min(np.abs(lam)))

    base = Spectrum(
        eigenvalues=lam,
        eigenvectors=vec,
        stable_idx=stable_idx,
        unstable_idx=unstable_idx,
        big_l=big_l,
        beta=beta,
        delta=np.nan,
        groups=(),
    )
    return group_eigenvalues(base)


def project(
    u0: np.ndarray, spectrum: Spectrum, eps: float, rtol: float = 1e-5
) -> Projections:
    """Split an initial offset on the eps-sphere into nonnegative amplitudes.

    theta_i = |<u0, v_i>| / eps, with the basis column flipped whenever the
    raw inner product is negative, so u0 reconstructs exactly from nonnegative
    amplitudes on the signed basis.

    Raises WrongRadius when | ||u0|| - eps | > rtol * eps.
    """
    u0 = np.asarray(u0, dtype=float)
    if eps <= 0:
        raise ValueError("eps must be positive")
    radius = float(np.linalg.norm(u0))
    if abs(radius - eps) > rtol * eps:
        raise WrongRadius(
            f"||u0|| = {radius:.12g} but eps = {eps:.12g} (relative rtol {rtol:g})"
        )
    raw = spectrum.eigenvectors.T @ u0 / eps
    signs = np.where(raw < 0, -1.0, 1.0)
    signed_basis = spectrum.eigenvectors * signs
    theta = np.abs(raw)
    return Projections(
        theta_s=theta[spectrum.stable_idx],
        theta_us=theta[spectrum.unstable_idx],
        eps=float(eps),
        signed_basis=signed_basis,
    )


def theta_full(projections: Projections, spectrum: Spectrum) -> np.ndarray:
    """Assemble the full amplitude vector in spectrum order."""
    out = np.empty(spectrum.dim)
    out[spectrum.stable_idx] = projections.theta_s
    out[spectrum.unstable_idx] = projections.theta_us
    return out
