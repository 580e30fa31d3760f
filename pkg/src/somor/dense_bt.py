"""Dense balanced truncation for small first-order realizations.

Square-root method: solve the two continuous-time Lyapunov equations for the
controllability and observability Gramians, take the SVD of the cross product
of their factors (the singular values are the Hankel singular values), and
project with the balancing bases. Used for the interpolation-point update on
tiny embedded models and as the desk-scale comparison baseline.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
import scipy.linalg as dla

from .errors import DenseCapError, RankError, SolveAccuracyError, StabilityError

LYAP_DENSE_CAP = 4000
LYAP_RESIDUAL_TOL = 1e-8
MCMILLAN_DROP = 1e-12  # Hankel values below drop * sigma_1 do not count


def _require_stable_standard(A: np.ndarray) -> None:
    eigs = dla.eigvals(A)
    worst = float(np.max(eigs.real))
    if not worst < 0:
        raise StabilityError(f"pencil has eigenvalue with real part {worst:.3e} >= 0")


def solve_lyapunov(A, E, rhs_factor) -> np.ndarray:
    """Gramian factor Z with A (ZZ^T) E^T + E (ZZ^T) A^T + FF^T = 0.

    E must be nonsingular and the pencil (A, E) stable. Returns a full n x n
    factor (zero columns kept) so callers see all n Hankel directions.
    Relative residual is kept below 1e-8 by one refinement sweep.
    """
    A = np.asarray(A, dtype=float)
    E = np.asarray(E, dtype=float)
    F = np.atleast_2d(np.asarray(rhs_factor, dtype=float))
    n = A.shape[0]
    if n > LYAP_DENSE_CAP:
        raise DenseCapError(f"dense Lyapunov solve refused for n={n} > cap {LYAP_DENSE_CAP}")
    At = dla.solve(E, A)
    Ft = dla.solve(E, F)
    _require_stable_standard(At)
    rhs = -(Ft @ Ft.T)
    X = dla.solve_continuous_lyapunov(At, rhs)
    X = 0.5 * (X + X.T)
    resid = At @ X + X @ At.T - rhs
    denom = max(np.linalg.norm(rhs), 1e-300)
    if np.linalg.norm(resid) > 1e-13 * denom:
        X = X - dla.solve_continuous_lyapunov(At, resid)
        X = 0.5 * (X + X.T)
        resid = At @ X + X @ At.T - rhs
    # residual in the original generalized form
    gen_resid = A @ X @ E.T + E @ X @ A.T + F @ F.T
    gen_denom = max(np.linalg.norm(F @ F.T), 1e-300)
    if np.linalg.norm(gen_resid) > LYAP_RESIDUAL_TOL * gen_denom:
        raise SolveAccuracyError(
            f"Lyapunov residual {np.linalg.norm(gen_resid) / gen_denom:.2e} above tolerance"
        )
    lam, U = dla.eigh(X)
    lam = np.clip(lam, 0.0, None)[::-1]
    U = U[:, ::-1]
    return U * np.sqrt(lam)


@dataclass(frozen=True)
class BalancedReduction:
    """Order-k balanced truncation with the full Hankel value sequence."""

    E: np.ndarray
    A: np.ndarray
    B: np.ndarray
    C: np.ndarray
    hankel: np.ndarray

    @property
    def order(self) -> int:
        return self.A.shape[0]


def balanced_truncate(E, A, B, C, k: int) -> BalancedReduction:
    """Square-root balanced truncation of a stable dense realization to order k.

    If k exceeds the numerical McMillan degree, the order is reduced with a
    warning. The returned reduced pencil is checked to be stable.
    """
    A = np.asarray(A, dtype=float)
    E = np.asarray(E, dtype=float)
    B = np.atleast_2d(np.asarray(B, dtype=float))
    C = np.atleast_2d(np.asarray(C, dtype=float))
    n = A.shape[0]
    if not 1 <= k <= n:
        raise ValueError(f"truncation order k={k} outside 1..{n}")
    eye = np.eye(n)
    At = dla.solve(E, A)
    Bt = dla.solve(E, B)
    Zc = solve_lyapunov(At, eye, Bt)
    Zo = solve_lyapunov(At.T, eye, C.T)
    U, s, Vt = dla.svd(Zo.T @ Zc)
    if s[0] <= 0:
        raise RankError("system has no reachable-observable part")
    degree = int(np.count_nonzero(s > MCMILLAN_DROP * s[0]))
    if k > degree:
        warnings.warn(
            f"requested order {k} exceeds numerical McMillan degree {degree}; truncating to {degree}",
            stacklevel=2,
        )
        k = degree
    scale = 1.0 / np.sqrt(s[:k])
    W = Zo @ U[:, :k] * scale
    V = Zc @ Vt[:k].T * scale
    Er = W.T @ V
    Ar = W.T @ At @ V
    Br = W.T @ Bt
    Cr = C @ V
    red_eigs = dla.eigvals(Ar, Er)
    if not np.all(red_eigs.real < 0):
        raise StabilityError("balanced truncation produced an unstable reduced pencil")
    return BalancedReduction(E=Er, A=Ar, B=Br, C=Cr, hankel=s)


def split_stable_antistable(E, A, B, C):
    """Additive decomposition G = G_stable + G_antistable in standard form.

    Returns ((As, Bs, Cs), (Au, Bu, Cu)) with block sizes summing to n; the
    first block carries every eigenvalue with negative real part. Decoupling
    uses a Schur reordering followed by a Sylvester solve, which exists
    because the two spectra are disjoint by construction.
    """
    A = np.asarray(A, dtype=float)
    E = np.asarray(E, dtype=float)
    B = np.atleast_2d(np.asarray(B, dtype=float))
    C = np.atleast_2d(np.asarray(C, dtype=float))
    At = dla.solve(E, A)
    Bt = dla.solve(E, B)
    T, Z, sdim = dla.schur(At, output="real", sort="lhp")
    Bz = Z.T @ Bt
    Cz = C @ Z
    if sdim == T.shape[0]:
        return (T, Bz, Cz), (np.zeros((0, 0)), np.zeros((0, B.shape[1])), np.zeros((C.shape[0], 0)))
    if sdim == 0:
        return (np.zeros((0, 0)), np.zeros((0, B.shape[1])), np.zeros((C.shape[0], 0))), (T, Bz, Cz)
    T11, T12, T22 = T[:sdim, :sdim], T[:sdim, sdim:], T[sdim:, sdim:]
    X = dla.solve_sylvester(T11, -T22, -T12)
    B2 = Bz.copy()
    B2[:sdim] -= X @ Bz[sdim:]
    C2 = Cz.copy()
    C2[:, sdim:] += Cz[:, :sdim] @ X
    return (T11, B2[:sdim], C2[:, :sdim]), (T22, Bz[sdim:], C2[:, sdim:])


def reduce_order(E, A, B, C, k: int) -> BalancedReduction:
    """Order-k compression that tolerates unstable modes.

    Mirrors what a general-purpose balanced-reduction routine does: split off
    the antistable part untouched, balance-truncate the stable part to the
    remaining budget, and reassemble block-diagonally. For a stable input
    this is plain balanced truncation.
    """
    (As, Bs, Cs), (Au, Bu, Cu) = split_stable_antistable(E, A, B, C)
    nu = Au.shape[0]
    if nu >= k:
        raise StabilityError(
            f"{nu} non-decaying modes meet or exceed the target order {k}"
        )
    if As.shape[0] == 0:
        return BalancedReduction(E=np.eye(nu), A=Au, B=Bu, C=Cu, hankel=np.zeros(0))
    red = balanced_truncate(np.eye(As.shape[0]), As, Bs, Cs, k - nu)
    if nu == 0:
        return red
    ks = red.order
    E2 = np.block([
        [red.E, np.zeros((ks, nu))],
        [np.zeros((nu, ks)), np.eye(nu)],
    ])
    A2 = np.block([
        [red.A, np.zeros((ks, nu))],
        [np.zeros((nu, ks)), Au],
    ])
    B2 = np.vstack([red.B, Bu])
    C2 = np.hstack([red.C, Cu])
    return BalancedReduction(E=E2, A=A2, B=B2, C=C2, hankel=red.hankel)


def first_order_transfer(E, A, B, C, s: complex) -> np.ndarray:
    """Dense evaluation C (s E - A)^-1 B."""
    s = complex(s)
    return np.asarray(C, dtype=np.complex128) @ dla.solve(
        s * np.asarray(E, dtype=np.complex128) - np.asarray(A, dtype=np.complex128),
        np.asarray(B, dtype=np.complex128),
    )
