"""Core system types: sparse second-order index-3 systems and dense reduced models.

A constrained mechanical model is the sextuple (M, D, K, G, F, L) describing

    M x''(t) + D x'(t) + K x(t) + G^T z(t) = F u(t)
    G x(t) = 0
    y(t) = L x(t)

with M, D, K of order n1, the constraint matrix G of shape (n2, n1) with
full row rank and n2 < n1, input map F (n1, m) and output map L (q, n1).
The Lagrange-multiplier channel z is never stored; it only exists inside
the augmented solves of :mod:`somor.saddle_solver`.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as dla
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .errors import (
    ConstraintDegeneracyError,
    FactorizationError,
    ReducedModelSingularError,
    StructuralError,
)

# Largest dense G (n1*n2 entries) for which the pivoted-QR rank check is used;
# beyond it the sparse Gram-factorization fallback kicks in.
DENSE_RANK_CAP = 4_000_000

RANK_DROP_TOL = 1e-10  # relative to max |G| entry


def as_sparse(matrix) -> sp.csc_matrix:
    """Coerce to a float64 CSC matrix with canonical (duplicate-free) entries."""
    m = sp.csc_matrix(matrix, dtype=np.float64)
    m.sum_duplicates()
    m.check_format(full_check=True)
    return m


@dataclass(frozen=True)
class SecondOrderIndex3System:
    """Sparse second-order system with holonomic constraints (immutable)."""

    M: sp.csc_matrix
    D: sp.csc_matrix
    K: sp.csc_matrix
    G: sp.csc_matrix
    F: sp.csc_matrix
    L: sp.csc_matrix

    @property
    def n1(self) -> int:
        return self.M.shape[0]

    @property
    def n2(self) -> int:
        return self.G.shape[0]

    @property
    def m(self) -> int:
        return self.F.shape[1]

    @property
    def q(self) -> int:
        return self.L.shape[0]


def make_system(M, D, K, G, F, L) -> SecondOrderIndex3System:
    """Assemble a system from any scipy-sparse/array-like blocks."""
    return SecondOrderIndex3System(
        M=as_sparse(M), D=as_sparse(D), K=as_sparse(K),
        G=as_sparse(G), F=as_sparse(F), L=as_sparse(L),
    )


@dataclass(frozen=True)
class ValidationReport:
    dimensions_ok: bool
    rank_G: int
    rank_ok: bool
    M_factorizable: bool
    problems: tuple[str, ...] = ()

    @property
    def accepted(self) -> bool:
        return self.dimensions_ok and self.rank_ok and self.M_factorizable


def _constraint_rank(G: sp.csc_matrix) -> int:
    """Numerical row rank of G, drop tolerance RANK_DROP_TOL * max|G|."""
    n2, n1 = G.shape
    if G.nnz == 0:
        return 0
    gmax = abs(G).max()
    tol = RANK_DROP_TOL * gmax
    if n1 * n2 <= DENSE_RANK_CAP:
        # rank-revealing pivoted QR on the dense constraint matrix
        R = dla.qr(G.toarray().T, mode="r", pivoting=True)[0]
        diag = np.abs(np.diag(R))
        return int(np.count_nonzero(diag > tol))
    # large-scale fallback: LU pivots of the constraint Gram matrix G G^T
    gram = (G @ G.T).tocsc()
    try:
        lu = spla.splu(gram)
    except RuntimeError:
        return n2 - 1  # exactly singular; the deficiency count is not needed
    pivots = np.abs(lu.U.diagonal())
    return int(np.count_nonzero(pivots > tol * tol))


def validate_system(sys: SecondOrderIndex3System) -> ValidationReport:
    """Check the structural assumptions: shapes, rank of G, factorizable M."""
    problems = []
    n1 = sys.M.shape[0]
    dims_ok = (
        sys.M.shape == (n1, n1)
        and sys.D.shape == (n1, n1)
        and sys.K.shape == (n1, n1)
        and sys.G.shape[1] == n1
        and sys.F.shape[0] == n1
        and sys.L.shape[1] == n1
    )
    if not dims_ok:
        problems.append("inconsistent matrix dimensions")
    n2 = sys.G.shape[0]
    if dims_ok and not n2 < n1:
        dims_ok = False
        problems.append(f"need n2 < n1, got n1={n1}, n2={n2}")

    rank_g = _constraint_rank(sys.G) if dims_ok else 0
    rank_ok = dims_ok and rank_g == n2
    if dims_ok and not rank_ok:
        problems.append(f"constraint matrix rank {rank_g} < n2={n2}")

    m_ok = False
    if dims_ok:
        try:
            spla.splu(sys.M.tocsc())
            m_ok = True
        except RuntimeError:
            problems.append("mass matrix is singular")

    return ValidationReport(
        dimensions_ok=dims_ok,
        rank_G=rank_g,
        rank_ok=rank_ok,
        M_factorizable=m_ok,
        problems=tuple(problems),
    )


def require_valid(sys: SecondOrderIndex3System) -> ValidationReport:
    """validate_system, raising the specific error for the first failure."""
    report = validate_system(sys)
    if report.accepted:
        return report
    if not report.dimensions_ok:
        raise StructuralError("; ".join(report.problems))
    if not report.rank_ok:
        raise ConstraintDegeneracyError("; ".join(report.problems))
    raise FactorizationError("; ".join(report.problems))


@dataclass(frozen=True)
class ReducedSecondOrderModel:
    """Dense second-order reduced model (M, D, K of order r; F (r, m); L (q, r))."""

    M: np.ndarray
    D: np.ndarray
    K: np.ndarray
    F: np.ndarray
    L: np.ndarray

    @property
    def r(self) -> int:
        return self.M.shape[0]

    @property
    def m(self) -> int:
        return self.F.shape[1]

    @property
    def q(self) -> int:
        return self.L.shape[0]


@dataclass(frozen=True)
class FirstOrderRealization:
    """Dense first-order companion form (E, A, B, C) of a reduced model."""

    E: np.ndarray
    A: np.ndarray
    B: np.ndarray
    C: np.ndarray


def embed_first_order(rom: ReducedSecondOrderModel) -> FirstOrderRealization:
    """Companion embedding E = [[I,0],[0,M]], A = [[0,I],[-K,-D]], B = [0;F], C = [L 0].

    The pencil (A, E) carries exactly the 2r roots of det(s^2 M + s D + K).
    Requires a nonsingular reduced mass block so that E is invertible.
    """
    r = rom.r
    svals = dla.svdvals(rom.M)
    if svals[-1] <= 1e-13 * max(svals[0], 1e-300):
        raise ReducedModelSingularError(
            f"reduced mass matrix numerically singular (sv ratio {svals[-1]:.2e}/{svals[0]:.2e})"
        )
    E = np.block([
        [np.eye(r), np.zeros((r, r))],
        [np.zeros((r, r)), rom.M],
    ])
    A = np.block([
        [np.zeros((r, r)), np.eye(r)],
        [-rom.K, -rom.D],
    ])
    B = np.vstack([np.zeros((r, rom.m)), rom.F])
    C = np.hstack([rom.L, np.zeros((rom.q, r))])
    return FirstOrderRealization(E=E, A=A, B=B, C=C)
