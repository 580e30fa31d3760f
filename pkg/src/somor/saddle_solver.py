"""Augmented (saddle-point) solves that replace the explicit null-space projector.

Solving

    [ a^2 M + a D + K   G^T ] [ v ]   [ F b ]
    [ G                 0   ] [ . ] = [ 0   ]

returns the same v as projecting the system onto Null(G) and lifting back,
without ever forming the projector. The discarded second block is the
Lagrange multiplier. The left variant transposes the (1,1) block only, which
makes the left augmented matrix exactly the transpose of the right one, so a
single sparse LU factorization per shift serves both directions (and complex
conjugation serves the conjugate shift).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .errors import ShiftAtEigenvalueError, SolveAccuracyError
from .model_core import SecondOrderIndex3System

RCOND_FLOOR = 1e-14
CONSTRAINT_RESIDUAL_TOL = 1e-10


def _quadratic_block(sys: SecondOrderIndex3System, alpha: complex) -> sp.csc_matrix:
    return (alpha * alpha) * sys.M + alpha * sys.D + sys.K


def assemble(sys: SecondOrderIndex3System, alpha: complex, side: str = "right") -> "SaddleOperator":
    """Build the augmented operator of order n1+n2 for one shift.

    side="right" puts a^2 M + a D + K in the (1,1) block; side="left" uses the
    transposed blocks (the matrix is then the transpose of the right one).
    """
    if side not in ("right", "left"):
        raise ValueError(f"side must be 'right' or 'left', got {side!r}")
    S = _quadratic_block(sys, complex(alpha))
    if side == "left":
        S = S.T
    mat = sp.bmat([[S, sys.G.T], [sys.G, None]], format="csc", dtype=np.complex128)
    return SaddleOperator(sys=sys, alpha=complex(alpha), side=side, matrix=mat)


@dataclass
class SaddleOperator:
    """Augmented matrix for one shift with a cached sparse LU factorization."""

    sys: SecondOrderIndex3System
    alpha: complex
    side: str
    matrix: sp.csc_matrix
    _lu: spla.SuperLU | None = field(default=None, repr=False)
    _rcond: float | None = field(default=None, repr=False)

    @property
    def order(self) -> int:
        return self.matrix.shape[0]

    def factorize(self) -> spla.SuperLU:
        if self._lu is None:
            try:
                self._lu = spla.splu(self.matrix)
            except RuntimeError as exc:
                raise ShiftAtEigenvalueError(
                    f"augmented matrix singular at shift {self.alpha}",
                    shift=self.alpha, rcond=0.0,
                ) from exc
            rc = self.rcond_estimate()
            if rc < RCOND_FLOOR:
                raise ShiftAtEigenvalueError(
                    f"augmented matrix ill-conditioned at shift {self.alpha} "
                    f"(rcond estimate {rc:.2e})",
                    shift=self.alpha, rcond=rc,
                )
        return self._lu

    def rcond_estimate(self) -> float:
        """Reciprocal 1-norm condition estimate of the equilibrated matrix.

        Block-diagonal scaling removes the |alpha|^2 size disparity between
        the quadratic block and the constraint rows, which would otherwise
        look like ill-conditioning at perfectly benign large shifts; a shift
        sitting on an eigenvalue of the constrained pencil stays detectable.
        """
        if self._rcond is None:
            lu = self._lu if self._lu is not None else spla.splu(self.matrix)
            self._lu = lu
            n1, n2 = self.sys.n1, self.sys.n2
            a_max = max(abs(self.matrix[:n1, :n1]).max(), 1e-300)
            g_max = max(abs(self.sys.G).max(), 1e-300) if self.sys.G.nnz else 1.0
            d1 = 1.0 / np.sqrt(a_max)
            d = np.empty(n1 + n2)
            d[:n1] = d1
            d[n1:] = np.sqrt(a_max) / g_max
            col_sums = np.abs(self.matrix).T @ d
            norm_scaled = float(np.max(d * col_sums))
            def scaled_solve(b, trans="N"):
                return lu.solve(np.asarray(b).reshape(-1) / d, trans=trans) / d

            inv_op = spla.LinearOperator(
                self.matrix.shape,
                matvec=scaled_solve,
                rmatvec=lambda b: scaled_solve(b, trans="H"),
                dtype=np.complex128,
            )
            with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
                norm_inv = float(spla.onenormest(inv_op))
            prod = norm_scaled * norm_inv
            self._rcond = 1.0 / prod if prod > 0 and np.isfinite(prod) else 0.0
        return self._rcond

    def _solve_augmented(self, rhs: np.ndarray, trans: str) -> np.ndarray:
        lu = self.factorize()
        x = lu.solve(rhs, trans=trans)
        mat = self.matrix if trans == "N" else self.matrix.T
        resid = mat @ x - rhs
        rhs_norm = np.linalg.norm(rhs)
        if rhs_norm > 0 and np.linalg.norm(resid) > 1e-13 * rhs_norm:
            x = x - lu.solve(resid, trans=trans)  # one refinement sweep
        return x

    def solve_first_block(self, top: np.ndarray, trans: str = "N") -> np.ndarray:
        """Solve with right-hand side [top; 0] and return the first n1 rows.

        Enforces the constraint residual ||G v|| <= 1e-10 ||v|| ||G||_F for
        every returned column (the computable face of the projector identity).
        """
        n1, n2 = self.sys.n1, self.sys.n2
        top = np.asarray(top, dtype=np.complex128)
        vec_in = top.ndim == 1
        if vec_in:
            top = top[:, None]
        rhs = np.vstack([top, np.zeros((n2, top.shape[1]), dtype=np.complex128)])
        x = self._solve_augmented(rhs, trans)
        v = x[:n1, :]
        g_norm = sp.linalg.norm(self.sys.G)
        for j in range(v.shape[1]):
            vn = np.linalg.norm(v[:, j])
            if vn == 0:
                continue
            if np.linalg.norm(self.sys.G @ v[:, j]) > CONSTRAINT_RESIDUAL_TOL * vn * g_norm:
                raise SolveAccuracyError(
                    f"constraint residual above tolerance at shift {self.alpha}"
                )
        return v[:, 0] if vec_in else v


def solve_right(sys: SecondOrderIndex3System, alpha: complex, direction: np.ndarray) -> np.ndarray:
    """First block of the augmented solve with right-hand side [F b; 0]."""
    b = np.asarray(direction, dtype=np.complex128).reshape(sys.m)
    return assemble(sys, alpha, "right").solve_first_block(sys.F @ b)


def solve_left(sys: SecondOrderIndex3System, alpha: complex, direction: np.ndarray) -> np.ndarray:
    """First block of the transposed-block augmented solve, rhs [L^T c; 0]."""
    c = np.asarray(direction, dtype=np.complex128).reshape(sys.q)
    return assemble(sys, alpha, "left").solve_first_block(sys.L.T @ c)


def solve_many(sys: SecondOrderIndex3System, shifts) -> tuple[np.ndarray, np.ndarray]:
    """Right and left solution blocks for every interpolation point.

    Returns complex matrices (n1, r). One factorization per distinct shift:
    the left solve reuses it through the transpose, the conjugate shift
    through conjugation (valid because the paired directions are conjugate).
    Per-shift failures carry the offending shift index.
    """
    r = len(shifts.points)
    Vc = np.empty((sys.n1, r), dtype=np.complex128)
    Wc = np.empty((sys.n1, r), dtype=np.complex128)
    done = np.zeros(r, dtype=bool)
    for i in range(r):
        if done[i]:
            continue
        alpha = shifts.points[i]
        try:
            op = assemble(sys, alpha, "right")
            Vc[:, i] = op.solve_first_block(sys.F @ shifts.input_dirs[i])
            Wc[:, i] = op.solve_first_block(sys.L.T @ shifts.output_dirs[i], trans="T")
        except ShiftAtEigenvalueError as exc:
            exc.shift_index = i
            raise
        done[i] = True
        j = shifts.pair_index[i]
        if j != i and not done[j]:
            Vc[:, j] = np.conj(Vc[:, i])
            Wc[:, j] = np.conj(Wc[:, i])
            done[j] = True
    return Vc, Wc
