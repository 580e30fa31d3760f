"""Desk-scale explicit construction of the hidden-manifold projector.

The oblique projector onto Null(G) along Range(G^T M^-T ...) is

    P = I - G^T (G M^-1 G^T)^-1 G M^-1,

with P M = M P^T and P^T x = x exactly for constraint-satisfying x. Splitting
P into full-rank factors turns the constrained system into an ordinary dense
second-order system of size n1 - n2. All of this is intentionally dense and
capped in size: it exists as the ground truth the sparse augmented-solve path
is verified against, never as a computational route at scale.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg as dla

from .errors import ConstraintDegeneracyError, DenseCapError, PoleError, RankError
from .model_core import SecondOrderIndex3System

DENSE_CAP = 2000
SPLIT_RANK_TOL = 1e-10  # singular values below tol * sigma_max count as zero


@dataclass(frozen=True)
class Projector:
    matrix: np.ndarray
    rank: int


@dataclass(frozen=True)
class ProjectorSplit:
    """Full-rank factors with P = left_factor @ right_factor.T and L^T R = I."""

    left_factor: np.ndarray
    right_factor: np.ndarray


@dataclass(frozen=True)
class ProjectedSystem:
    """Dense unconstrained second-order system of order n1 - n2."""

    M: np.ndarray
    D: np.ndarray
    K: np.ndarray
    F: np.ndarray
    L: np.ndarray


def build_projector(sys: SecondOrderIndex3System, dense_cap: int = DENSE_CAP) -> Projector:
    n1, n2 = sys.n1, sys.n2
    if n1 > dense_cap:
        raise DenseCapError(f"projector construction refused for n1={n1} > cap {dense_cap}")
    M = sys.M.toarray()
    G = sys.G.toarray()
    # G M^-1 = (M^-T G^T)^T
    GMinv = dla.solve(M.T, G.T).T
    gram = GMinv @ G.T
    try:
        core = dla.solve(gram, GMinv)
    except dla.LinAlgError as exc:
        raise ConstraintDegeneracyError("G M^-1 G^T is singular") from exc
    P = np.eye(n1) - G.T @ core
    return Projector(matrix=P, rank=n1 - n2)


def split_projector(proj: Projector) -> ProjectorSplit:
    """Thin SVD factorization of the projector, truncated at its rank.

    Idempotency of P forces right_factor^T @ left_factor = I automatically
    for any full-column-rank factorization, so only the rank needs care.
    """
    U, s, Vt = dla.svd(proj.matrix)
    if s[0] == 0:
        raise RankError("projector is identically zero")
    k = int(np.count_nonzero(s > SPLIT_RANK_TOL * s[0]))
    if k != proj.rank:
        raise RankError(f"projector numerical rank {k} != expected {proj.rank}")
    left = U[:, :k] * s[:k]
    right = Vt[:k].T
    return ProjectorSplit(left_factor=left, right_factor=right)


def project_system(sys: SecondOrderIndex3System, split: ProjectorSplit) -> ProjectedSystem:
    R = split.right_factor
    return ProjectedSystem(
        M=R.T @ (sys.M @ R),
        D=R.T @ (sys.D @ R),
        K=R.T @ (sys.K @ R),
        F=R.T @ sys.F.toarray(),
        L=sys.L.toarray() @ R,
    )


def projected_transfer(psys: ProjectedSystem, s: complex) -> np.ndarray:
    """Dense evaluation L (s^2 M + s D + K)^-1 F of the projected system."""
    s = complex(s)
    resolvent = (s * s) * psys.M + s * psys.D + psys.K
    try:
        sol = dla.solve(resolvent, psys.F.astype(np.complex128))
    except dla.LinAlgError as exc:
        raise PoleError(f"projected resolvent singular at s={s}") from exc
    return psys.L @ sol


def lift_projected_solve(sys: SecondOrderIndex3System, split: ProjectorSplit,
                         alpha: complex, direction: np.ndarray) -> np.ndarray:
    """Dense projected solve lifted back to length n1 (the Lemma-1 oracle)."""
    psys = project_system(sys, split)
    alpha = complex(alpha)
    resolvent = (alpha * alpha) * psys.M + alpha * psys.D + psys.K
    rhs = psys.F @ np.asarray(direction, dtype=np.complex128).reshape(sys.m)
    return split.right_factor @ dla.solve(resolvent, rhs)
