"""Runnable invariant suite: every cross-checked identity with its tolerance.

Each check compares two independent computational routes (augmented solve vs
dense projection, reduction vs direct evaluation, Lyapunov solve vs residual)
and reports the measured residual against the contract tolerance. The CLI
exposes this as `somor verify --tier tiny|small`.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg as dla
import scipy.sparse as sp

from . import dense_bt, freq_response, projection_oracle
from .irka_reducer import (
    IrkaOptions,
    check_interpolation,
    init_shifts,
    irka_reduce,
)
from .model_core import SecondOrderIndex3System, make_system, validate_system
from .saddle_solver import assemble, solve_right


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    measured: float
    threshold: float

    def as_dict(self):
        return {
            "name": self.name,
            "passed": bool(self.passed),
            "measured": float(self.measured),
            "threshold": float(self.threshold),
        }


def random_system(n1: int, n2: int, m: int = 2, q: int = 3, seed: int = 0) -> SecondOrderIndex3System:
    """Well-damped random constrained system for oracle checks.

    M diagonal SPD, K tridiagonal SPD, proportional damping; G dense gaussian
    (full row rank almost surely). The constrained pencil is stable, so right
    half-plane shifts and imaginary-axis grid points are always safe.
    """
    rng = np.random.default_rng(seed)
    M = sp.diags(rng.uniform(0.5, 2.0, n1), format="csc")
    main = rng.uniform(2.0, 4.0, n1)
    off = -rng.uniform(0.5, 1.0, n1 - 1)
    K = sp.diags([off, main, off], [-1, 0, 1], format="csc")
    D = 0.08 * K + 0.08 * M
    G = sp.csc_matrix(rng.standard_normal((n2, n1)))
    F = sp.csc_matrix(rng.standard_normal((n1, m)))
    L = sp.csc_matrix(rng.standard_normal((q, n1)))
    return make_system(M, D, K, G, F, L)


def _rel(x, scale) -> float:
    return float(x / max(scale, 1e-300))


def projector_identity_checks(n1: int, n2: int, seed: int) -> list[CheckResult]:
    sys = random_system(n1, n2, seed=seed)
    proj = projection_oracle.build_projector(sys)
    P = proj.matrix
    M = sys.M.toarray()
    Gt = sys.G.toarray().T
    pn = dla.norm(P)
    tag = f"n1={n1}/seed={seed}"
    out = [
        CheckResult(f"projector/idempotent/{tag}", True,
                    _rel(dla.norm(P @ P - P), pn), 1e-10),
        CheckResult(f"projector/mass-commute/{tag}", True,
                    _rel(dla.norm(P @ M - M @ P.T), pn * dla.norm(M)), 1e-10),
        CheckResult(f"projector/annihilates-GT/{tag}", True,
                    _rel(dla.norm(P @ Gt), pn * dla.norm(Gt)), 1e-10),
    ]
    split = projection_oracle.split_projector(proj)
    out.append(CheckResult(
        f"projector/split-product/{tag}", True,
        _rel(dla.norm(split.left_factor @ split.right_factor.T - P), pn), 1e-10))
    out.append(CheckResult(
        f"projector/split-biorth/{tag}", True,
        float(dla.norm(split.left_factor.T @ split.right_factor - np.eye(proj.rank))), 1e-10))
    # Null-space characterization: P^T fixes constraint-satisfying vectors
    rng = np.random.default_rng(seed + 1)
    basis = dla.null_space(sys.G.toarray())
    worst = 0.0
    for _ in range(10):
        x = basis @ rng.standard_normal(basis.shape[1])
        worst = max(worst, _rel(dla.norm(P.T @ x - x), dla.norm(x)))
    out.append(CheckResult(f"projector/fixes-nullspace/{tag}", True, worst, 1e-10))
    return [CheckResult(c.name, c.measured <= c.threshold, c.measured, c.threshold) for c in out]


def lemma_equivalence_checks(n1: int, n2: int, seed: int, n_shifts: int = 5) -> list[CheckResult]:
    """Augmented solve equals the dense projected solve lifted back."""
    sys = random_system(n1, n2, seed=seed)
    split = projection_oracle.split_projector(projection_oracle.build_projector(sys))
    shifts = init_shifts(n_shifts, sys.m, sys.q, band=(1e-1, 1e1), seed=seed)
    g_norm = sp.linalg.norm(sys.G)
    out = []
    for i in range(n_shifts):
        a, b = shifts.points[i], shifts.input_dirs[i]
        v = solve_right(sys, a, b)
        v_oracle = projection_oracle.lift_projected_solve(sys, split, a, b)
        rel = _rel(np.linalg.norm(v - v_oracle), np.linalg.norm(v_oracle))
        cres = _rel(np.linalg.norm(sys.G @ v), np.linalg.norm(v) * g_norm)
        tag = f"n1={n1}/seed={seed}/shift{i}"
        out.append(CheckResult(f"lemma/lift-agreement/{tag}", rel <= 1e-8, rel, 1e-8))
        out.append(CheckResult(f"lemma/constraint-residual/{tag}", cres <= 1e-10, cres, 1e-10))
    return out


def realization_equivalence_checks(n1: int, n2: int, seed: int,
                                   n_freq: int = 20) -> list[CheckResult]:
    """Full augmented-path transfer equals the dense projected realization."""
    sys = random_system(n1, n2, seed=seed)
    split = projection_oracle.split_projector(projection_oracle.build_projector(sys))
    psys = projection_oracle.project_system(sys, split)
    worst = 0.0
    for w in np.geomspace(1e-2, 1e1, n_freq):
        t_full = freq_response.full_transfer(sys, 1j * w)
        t_proj = projection_oracle.projected_transfer(psys, 1j * w)
        err = np.abs(t_full - t_proj) / np.maximum(1.0, np.abs(t_full))
        worst = max(worst, float(err.max()))
    return [CheckResult(f"realization/grid-agreement/n1={n1}/seed={seed}",
                        worst <= 1e-8, worst, 1e-8)]


def interpolation_checks(n1: int, n2: int, r: int, seed: int) -> list[CheckResult]:
    """Hermite conditions hold after every basis build (here: every iteration)."""
    sys = random_system(n1, n2, seed=seed)
    rom, trace = irka_reduce(sys, r, IrkaOptions(max_iter=3, tol=0.0, seed=seed))
    report = check_interpolation(sys, rom, trace.final_shifts)
    v, t, d = report.max_residuals()
    tag = f"n1={n1}/r={r}/seed={seed}"
    return [
        CheckResult(f"interp/value/{tag}", v <= 1e-6, v, 1e-6),
        CheckResult(f"interp/bitangential/{tag}", t <= 1e-6, t, 1e-6),
        CheckResult(f"interp/derivative/{tag}", d <= 1e-4, d, 1e-4),
    ]


def bt_bound_checks(n: int, k: int, seed: int) -> list[CheckResult]:
    """Classical truncation error bound on a random stable dense system."""
    rng = np.random.default_rng(seed)
    A = rng.standard_normal((n, n))
    A = A - (np.max(dla.eigvals(A).real) + 0.5) * np.eye(n)
    E = np.eye(n) + 0.1 * rng.standard_normal((n, n))
    B = rng.standard_normal((n, 2))
    C = rng.standard_normal((2, n))
    red = dense_bt.balanced_truncate(E, A, B, C, k)
    bound = 2.0 * float(np.sum(red.hankel[k:]))
    worst = 0.0
    for w in np.geomspace(1e-2, 1e2, 50):
        t_full = dense_bt.first_order_transfer(E, A, B, C, 1j * w)
        t_red = dense_bt.first_order_transfer(red.E, red.A, red.B, red.C, 1j * w)
        worst = max(worst, float(dla.svdvals(t_full - t_red)[0]))
    limit = bound * 1.1
    return [CheckResult(f"bt/error-bound/n={n}/k={k}/seed={seed}",
                        worst <= limit, worst, limit)]


def saddle_hand_check() -> list[CheckResult]:
    """The 3x3 worked augmented system with a hand-verifiable solution."""
    sys = make_system(np.eye(2), np.zeros((2, 2)), np.eye(2),
                      np.array([[1.0, -1.0]]), np.array([[1.0], [0.0]]),
                      np.array([[1.0, 0.0]]))
    v = solve_right(sys, 1.0, np.array([1.0]))
    err = float(np.linalg.norm(v - np.array([0.25, 0.25])))
    return [CheckResult("saddle/hand-3x3", err <= 1e-12, err, 1e-12)]


def run_checks(tier: str = "small") -> list[CheckResult]:
    results: list[CheckResult] = []
    if tier == "tiny":
        results += saddle_hand_check()
        results += projector_identity_checks(10, 1, seed=0)
        results += lemma_equivalence_checks(20, 2, seed=1, n_shifts=2)
        results += realization_equivalence_checks(20, 2, seed=2, n_freq=5)
        results += bt_bound_checks(10, 3, seed=3)
        return results
    if tier != "small":
        raise ValueError(f"unknown verify tier {tier!r} (expected tiny or small)")
    results += saddle_hand_check()
    for n1 in (10, 50, 200):
        for seed in range(3):
            results += projector_identity_checks(n1, max(1, n1 // 10), seed)
    for seed in range(3):
        results += lemma_equivalence_checks(100, 10, seed=seed)
        results += realization_equivalence_checks(100, 10, seed=seed)
    for r in (4, 10):
        results += interpolation_checks(120, 12, r, seed=7)
    for seed in range(3):
        results += bt_bound_checks(20, 5, seed=seed)
    sys = random_system(60, 6, seed=11)
    results.append(CheckResult("validate/random-instance",
                               validate_system(sys).accepted, 1.0, 1.0))
    return results
