"""Fixed-point tangential-interpolation loop for constrained second-order systems.

One iteration: solve the augmented systems at the current interpolation
points (right and tangential-left), compress the complex solutions to a real
orthonormal basis pair, form the two-sided projection of (M, D, K, F, L),
then pick the next points as mirrored poles of a balanced-truncation
compression of the reduced model's first-order embedding. Interpolation
points always come as conjugate-closed sets in the open right half-plane.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as dla

from . import freq_response
from .dense_bt import reduce_order
from .errors import (
    BasisCollapseError,
    NumericalError,
    ParameterError,
    PoleError,
    ReducedModelSingularError,
    ShiftAtEigenvalueError,
    ShiftUpdateError,
)
from .model_core import (
    ReducedSecondOrderModel,
    SecondOrderIndex3System,
    embed_first_order,
    require_valid,
)
from .saddle_solver import solve_many

BASIS_RANK_TOL = 1e-12
MIN_REAL_PART = 1e-12


@dataclass(frozen=True)
class ShiftSet:
    """Conjugate-closed interpolation points with tangential directions.

    points[i] pairs with points[pair_index[i]] (i itself for real points);
    conjugate pairs are stored adjacently, the +Im member first. input_dirs
    has shape (r, m), output_dirs (r, q), rows conjugate like the points.
    """

    points: np.ndarray
    input_dirs: np.ndarray
    output_dirs: np.ndarray
    pair_index: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=np.complex128)
        if pts.ndim != 1 or len(pts) == 0:
            raise ParameterError("need at least one interpolation point")
        if np.any(pts.real <= 0):
            raise ParameterError("interpolation points must lie in the open right half-plane")
        pair = np.full(len(pts), -1, dtype=int)
        for i, a in enumerate(pts):
            if pair[i] >= 0:
                continue
            if a.imag == 0:
                pair[i] = i
                continue
            match = np.flatnonzero(
                (pair < 0) & (np.arange(len(pts)) != i)
                & np.isclose(pts, np.conj(a), rtol=1e-9, atol=0)
            )
            if len(match) == 0:
                raise ParameterError(f"point {a} has no conjugate partner")
            j = int(match[0])
            pair[i], pair[j] = j, i
        object.__setattr__(self, "pair_index", pair)
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "input_dirs", np.asarray(self.input_dirs, dtype=np.complex128))
        object.__setattr__(self, "output_dirs", np.asarray(self.output_dirs, dtype=np.complex128))

    def __len__(self) -> int:
        return len(self.points)

    @classmethod
    def create(cls, points, input_dirs, output_dirs) -> "ShiftSet":
        """Canonicalize raw data: reflect into the right half-plane, enforce
        conjugate closure by averaging pairs, normalize directions, and order
        deterministically (pairs adjacent, groups sorted by (Re, |Im|))."""
        pts = np.asarray(points, dtype=np.complex128).ravel().copy()
        b = np.atleast_2d(np.asarray(input_dirs, dtype=np.complex128)).copy()
        c = np.atleast_2d(np.asarray(output_dirs, dtype=np.complex128)).copy()
        if b.shape[0] != len(pts) or c.shape[0] != len(pts):
            raise ParameterError("direction row count must match number of points")

        re = np.abs(pts.real)
        re = np.where(re <= 0, MIN_REAL_PART * (1.0 + np.abs(pts)), re)
        pts = re + 1j * pts.imag

        def unit(row, fallback_len):
            n = np.linalg.norm(row)
            if n == 0:
                return np.ones(fallback_len, dtype=np.complex128) / np.sqrt(fallback_len)
            return row / n

        b = np.array([unit(row, b.shape[1]) for row in b])
        c = np.array([unit(row, c.shape[1]) for row in c])

        real_idx = [i for i in range(len(pts)) if pts[i].imag == 0]
        pos = sorted((i for i in range(len(pts)) if pts[i].imag > 0),
                     key=lambda i: (pts[i].real, pts[i].imag))
        neg = sorted((i for i in range(len(pts)) if pts[i].imag < 0),
                     key=lambda i: (pts[i].real, -pts[i].imag))
        groups = []
        for i, j in zip(pos, neg):
            a = 0.5 * (pts[i] + np.conj(pts[j]))
            bi = 0.5 * (b[i] + np.conj(b[j]))
            ci = 0.5 * (c[i] + np.conj(c[j]))
            groups.append((a.real, abs(a.imag),
                           [(a, unit(bi, b.shape[1]), unit(ci, c.shape[1])),
                            (np.conj(a), np.conj(unit(bi, b.shape[1])), np.conj(unit(ci, c.shape[1])))]))
        # odd leftovers of either sign become real points of the same magnitude
        for i in pos[len(neg):] + neg[len(pos):]:
            a = complex(abs(pts[i]))
            groups.append((a.real, 0.0, [(a, unit(b[i].real, b.shape[1]), unit(c[i].real, c.shape[1]))]))
        for i in real_idx:
            a = pts[i]
            groups.append((a.real, 0.0, [(a, unit(b[i].real, b.shape[1]), unit(c[i].real, c.shape[1]))]))
        groups.sort(key=lambda g: (g[0], g[1]))
        flat = [entry for g in groups for entry in g[2]]
        return cls(
            points=np.array([e[0] for e in flat]),
            input_dirs=np.array([e[1] for e in flat]),
            output_dirs=np.array([e[2] for e in flat]),
        )


@dataclass(frozen=True)
class IrkaOptions:
    max_iter: int = 50
    tol: float = 1e-4
    band: tuple[float, float] = (1e-2, 1.0)
    seed: int = 0


@dataclass(frozen=True)
class IterationRecord:
    iteration: int
    shift_change: float
    elapsed_s: float
    shifts: np.ndarray  # points sorted by (Re, Im)


@dataclass
class ConvergenceTrace:
    records: list[IterationRecord]
    status: str = "max-iterations"  # converged | max-iterations | stagnated
    final_shifts: ShiftSet | None = None

    @property
    def iterations(self) -> int:
        return len(self.records)

    def to_csv(self, path) -> None:
        lines = ["iteration,shift_change,elapsed_s,shifts\n"]
        for rec in self.records:
            pts = ";".join(f"{a.real:.17g}{a.imag:+.17g}j" for a in rec.shifts)
            lines.append(f"{rec.iteration},{rec.shift_change:.17g},{rec.elapsed_s:.17g},{pts}\n")
        with open(path, "w") as fh:
            fh.writelines(lines)


def init_shifts(r: int, m: int, q: int, band=(1e-2, 1.0), seed: int = 0) -> ShiftSet:
    """Random conjugate-closed starting points, magnitudes log-uniform in band.

    Pairs are sigma * (cos t +/- i sin t) with t uniform in (0, pi/2); an odd
    count adds one real positive point. Directions are unit-norm random rows.
    Deterministic for a fixed seed.
    """
    if r < 1:
        raise ParameterError(f"need r >= 1, got {r}")
    lo, hi = band
    if not (0 < lo < hi):
        raise ParameterError(f"need 0 < lo < hi in band, got {band}")
    rng = np.random.default_rng(seed)
    pts, bs, cs = [], [], []
    for _ in range(r // 2):
        sigma = 10.0 ** rng.uniform(np.log10(lo), np.log10(hi))
        theta = (np.pi / 2) * (1e-6 + (1 - 2e-6) * rng.uniform())
        a = sigma * complex(np.cos(theta), np.sin(theta))
        b = rng.standard_normal(m) + 1j * rng.standard_normal(m)
        c = rng.standard_normal(q) + 1j * rng.standard_normal(q)
        pts += [a, np.conj(a)]
        bs += [b, np.conj(b)]
        cs += [c, np.conj(c)]
    if r % 2:
        sigma = 10.0 ** rng.uniform(np.log10(lo), np.log10(hi))
        pts.append(complex(sigma))
        bs.append(rng.standard_normal(m) + 0j)
        cs.append(rng.standard_normal(q) + 0j)
    return ShiftSet.create(np.array(pts), np.array(bs), np.array(cs))


def _real_columns(cols: np.ndarray, shifts: ShiftSet) -> np.ndarray:
    out = np.empty((cols.shape[0], len(shifts)), dtype=float)
    k = 0
    for i in range(len(shifts)):
        j = shifts.pair_index[i]
        if j == i:
            out[:, k] = cols[:, i].real
            k += 1
        elif shifts.points[i].imag > 0:  # one Re/Im pair per conjugate pair
            out[:, k] = cols[:, i].real
            out[:, k + 1] = cols[:, i].imag
            k += 2
    return out


def realify(Vc: np.ndarray, Wc: np.ndarray, shifts: ShiftSet) -> tuple[np.ndarray, np.ndarray]:
    """Compress conjugate-paired complex solution columns to real orthonormal bases.

    The real span of {Re v, Im v} over retained pairs equals the complex span
    of {v, conj(v)}, so tangential interpolation survives the compression.
    """
    out = []
    for name, cols in (("right", Vc), ("left", Wc)):
        X = _real_columns(cols, shifts)
        norms = np.linalg.norm(X, axis=0)
        X = X / np.where(norms > 0, norms, 1.0)  # spans only; avoids scale-skewed rank test
        Q, R = np.linalg.qr(X)
        diag = np.abs(np.diag(R))
        if diag.max() == 0 or diag.min() <= BASIS_RANK_TOL * diag.max():
            raise BasisCollapseError(
                f"{name} basis lost rank (duplicate or degenerate interpolation points)"
            )
        out.append(Q)
    return out[0], out[1]


def assemble_reduced(sys: SecondOrderIndex3System, V: np.ndarray, W: np.ndarray) -> ReducedSecondOrderModel:
    """Two-sided projection of the sparse blocks; the projector never appears.

    Basis columns already satisfy G V = G W = 0, which is what makes the
    plain W^T (.) V products equal to the projected-system reduction.
    """
    rom = ReducedSecondOrderModel(
        M=W.T @ (sys.M @ V),
        D=W.T @ (sys.D @ V),
        K=W.T @ (sys.K @ V),
        F=W.T @ sys.F.toarray(),
        L=sys.L.toarray() @ V,
    )
    svals = dla.svdvals(rom.M)
    if svals[-1] <= 1e-13 * max(svals[0], 1e-300):
        raise ReducedModelSingularError(
            "reduced mass matrix singular; bases are M-degenerate at these points"
        )
    return rom


def update_shifts(rom: ReducedSecondOrderModel, r: int) -> ShiftSet:
    """Next interpolation data from the reduced model.

    Embed to first order (order 2r), compress to order r by balanced
    truncation (antistable modes pass through the compression untouched and
    are handled by the mirror reflection), then mirror the compressed
    pencil's eigenvalues and read the tangential directions off its
    left/right eigenvectors.
    """
    fo = embed_first_order(rom)
    try:
        red = reduce_order(fo.E, fo.A, fo.B, fo.C, k=r)
        lam, vl, vr = dla.eig(red.A, red.E, left=True, right=True)
    except (NumericalError, dla.LinAlgError) as exc:
        raise ShiftUpdateError(f"interpolation-point update failed: {exc}") from exc
    if not np.all(np.isfinite(lam)):
        raise ShiftUpdateError("reduced pencil has infinite or undefined eigenvalues")
    alphas = -lam
    b_rows = -(red.B.T @ vl).T          # row i is  -(y_i^H B)^H
    c_rows = np.conj((red.C @ vr).T)    # row i is  (C z_i)^*
    shifts = ShiftSet.create(alphas, b_rows, c_rows)
    if len(shifts) < r:
        shifts = _pad_shifts(shifts, r)
    return shifts


def _pad_shifts(shifts: ShiftSet, r: int) -> ShiftSet:
    """Pad with real points when the compressed model lost numerical order."""
    m = shifts.input_dirs.shape[1]
    q = shifts.output_dirs.shape[1]
    mu = float(np.exp(np.mean(np.log(np.abs(shifts.points)))))
    extra = r - len(shifts)
    pts = list(shifts.points) + [complex(mu * 1.2 ** (j + 1)) for j in range(extra)]
    b = list(shifts.input_dirs) + [np.ones(m) / np.sqrt(m)] * extra
    c = list(shifts.output_dirs) + [np.ones(q) / np.sqrt(q)] * extra
    return ShiftSet.create(np.array(pts), np.array(b), np.array(c))


def shift_change(old_points: np.ndarray, new_points: np.ndarray) -> float:
    """Relative l2 change between the (Re, Im)-lexicographically sorted sets."""
    def sorted_pts(p):
        order = np.lexsort((p.imag, p.real))
        return p[order]

    a = sorted_pts(np.asarray(old_points))
    b = sorted_pts(np.asarray(new_points))
    denom = np.linalg.norm(a)
    return float(np.linalg.norm(b - a) / denom) if denom > 0 else float("inf")


def _solve_with_retries(sys, shifts: ShiftSet, max_retries: int = 3):
    """solve_many with the spec'd perturb-and-retry policy for bad points."""
    for attempt in range(max_retries + 1):
        try:
            return solve_many(sys, shifts), shifts
        except ShiftAtEigenvalueError as exc:
            if attempt == max_retries:
                raise
            i = exc.shift_index if exc.shift_index is not None else 0
            pts = shifts.points.copy()
            j = shifts.pair_index[i]
            pts[i] = pts[i] * 1.01
            pts[j] = np.conj(pts[i]) if j != i else pts[i]
            shifts = ShiftSet.create(pts, shifts.input_dirs, shifts.output_dirs)
    raise AssertionError("unreachable")


def irka_reduce(sys: SecondOrderIndex3System, r: int,
                opts: IrkaOptions = IrkaOptions()) -> tuple[ReducedSecondOrderModel, ConvergenceTrace]:
    """Run the fixed-point loop; returns the reduced model and its trace.

    Convergence is declared when the relative change of the sorted
    interpolation points drops below opts.tol. The returned model is the one
    assembled from the bases of the last completed iteration, and
    trace.final_shifts is exactly the point set those bases interpolate at.
    """
    require_valid(sys)
    if not 1 <= r < sys.n1 - sys.n2:
        raise ParameterError(f"need 1 <= r < n1 - n2 = {sys.n1 - sys.n2}, got r={r}")
    shifts = init_shifts(r, sys.m, sys.q, opts.band, opts.seed)
    records: list[IterationRecord] = []
    trace = ConvergenceTrace(records=records)
    rom = None
    for it in range(1, opts.max_iter + 1):
        t0 = time.perf_counter()
        (Vc, Wc), shifts = _solve_with_retries(sys, shifts)
        V, W = realify(Vc, Wc, shifts)
        rom = assemble_reduced(sys, V, W)
        trace.final_shifts = shifts
        try:
            new_shifts = update_shifts(rom, r)
        except ShiftUpdateError:
            records.append(IterationRecord(it, float("nan"), time.perf_counter() - t0,
                                           _sorted_points(shifts)))
            trace.status = "stagnated"
            return rom, trace
        d = shift_change(shifts.points, new_shifts.points)
        records.append(IterationRecord(it, d, time.perf_counter() - t0, _sorted_points(shifts)))
        if d < opts.tol:
            trace.status = "converged"
            return rom, trace
        shifts = new_shifts
    trace.status = "max-iterations"
    return rom, trace


def _sorted_points(shifts: ShiftSet) -> np.ndarray:
    p = shifts.points
    return p[np.lexsort((p.imag, p.real))].copy()


@dataclass(frozen=True)
class InterpolationReport:
    """Per-point relative mismatches between full and reduced transfer data."""

    points: np.ndarray
    value_residuals: np.ndarray          # || T b - Tr b || / || T b ||
    bitangential_residuals: np.ndarray   # |c^T T b - c^T Tr b| / |c^T T b|
    derivative_residuals: np.ndarray     # same for d/ds c^T T(s) b, central differences
    unavailable: np.ndarray              # True where evaluation hit a pole

    def max_residuals(self) -> tuple[float, float, float]:
        ok = ~self.unavailable
        if not np.any(ok):
            return float("nan"), float("nan"), float("nan")
        return (float(self.value_residuals[ok].max()),
                float(self.bitangential_residuals[ok].max()),
                float(self.derivative_residuals[ok].max()))


def check_interpolation(sys: SecondOrderIndex3System, rom: ReducedSecondOrderModel,
                        shifts: ShiftSet) -> InterpolationReport:
    """Measure the tangential-interpolation quality of rom at the given points.

    The derivative condition uses central differences with step
    h = 1e-6 * max(1, |point|) applied identically to both models.
    """
    r = len(shifts)
    rho0 = np.full(r, np.nan)
    rho_t = np.full(r, np.nan)
    rho_d = np.full(r, np.nan)
    bad = np.zeros(r, dtype=bool)
    for i in range(r):
        a = shifts.points[i]
        b = shifts.input_dirs[i]
        c = shifts.output_dirs[i]
        h = 1e-6 * max(1.0, abs(a))
        try:
            tb = freq_response.full_transfer(sys, a) @ b
            tb_r = freq_response.reduced_transfer(rom, a) @ b
            f = lambda s: c @ (freq_response.full_transfer(sys, s) @ b)      # noqa: E731
            fr = lambda s: c @ (freq_response.reduced_transfer(rom, s) @ b)  # noqa: E731
            d_full = (f(a + h) - f(a - h)) / (2 * h)
            d_red = (fr(a + h) - fr(a - h)) / (2 * h)
        except (ShiftAtEigenvalueError, PoleError):
            bad[i] = True
            continue
        rho0[i] = np.linalg.norm(tb - tb_r) / max(np.linalg.norm(tb), 1e-300)
        ctb = c @ tb
        rho_t[i] = abs(ctb - c @ tb_r) / max(abs(ctb), 1e-300)
        rho_d[i] = abs(d_full - d_red) / max(abs(d_full), 1e-300)
    return InterpolationReport(
        points=shifts.points.copy(),
        value_residuals=rho0,
        bitangential_residuals=rho_t,
        derivative_residuals=rho_d,
        unavailable=bad,
    )
