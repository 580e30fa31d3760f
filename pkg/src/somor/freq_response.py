"""Transfer-function sweeps, sigma-max curves, and error curves.

Full-order evaluations go through the augmented sparse solver (one
factorization per frequency, m right-hand sides); reduced models are
evaluated densely. Tables carry the raw q x m response matrices so the
largest singular value can always be recomputed from storage.
"""

from __future__ import annotations

import concurrent.futures
import os
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import scipy.linalg as dla

from .errors import ParameterError, PoleError, ShiftAtEigenvalueError
from .model_core import ReducedSecondOrderModel, SecondOrderIndex3System
from .saddle_solver import assemble

DEFAULT_GRID_COUNT = 200


@dataclass(frozen=True)
class FrequencyGrid:
    """Strictly increasing positive frequencies in rad/s."""

    omegas: np.ndarray

    def __post_init__(self):
        w = np.asarray(self.omegas, dtype=float)
        if w.ndim != 1 or len(w) == 0:
            raise ParameterError("frequency grid must be a nonempty 1-D array")
        if np.any(w <= 0) or np.any(np.diff(w) <= 0):
            raise ParameterError("frequencies must be positive and strictly increasing")
        object.__setattr__(self, "omegas", w)

    def __len__(self) -> int:
        return len(self.omegas)


def make_grid(lo: float, hi: float, count: int = DEFAULT_GRID_COUNT) -> FrequencyGrid:
    if not (0 < lo < hi):
        raise ParameterError(f"need 0 < lo < hi, got [{lo}, {hi}]")
    return FrequencyGrid(omegas=np.geomspace(lo, hi, count))


@dataclass(frozen=True)
class FrequencyResponseTable:
    omegas: np.ndarray
    values: np.ndarray       # (n, q, m) complex; NaN rows where a pole was hit
    sigma_max: np.ndarray    # (n,)
    pole_hits: np.ndarray    # (n,) bool

    def __len__(self) -> int:
        return len(self.omegas)


def _sigma(mat: np.ndarray) -> float:
    return float(dla.svdvals(mat)[0])


def full_transfer(sys: SecondOrderIndex3System, s: complex) -> np.ndarray:
    """q x m transfer matrix of the constrained system via one augmented solve."""
    op = assemble(sys, s, "right")
    sol = op.solve_first_block(sys.F.toarray().astype(np.complex128))
    return sys.L @ sol


def reduced_transfer(rom: ReducedSecondOrderModel, s: complex) -> np.ndarray:
    """Dense q x m evaluation L (s^2 M + s D + K)^-1 F of a reduced model."""
    s = complex(s)
    resolvent = (s * s) * rom.M + s * rom.D + rom.K
    try:
        sol = dla.solve(resolvent, rom.F.astype(np.complex128))
    except dla.LinAlgError as exc:
        raise PoleError(f"reduced resolvent singular at s={s}") from exc
    return rom.L @ sol


def worker_count(requested: int | None = None) -> int:
    """Requested workers, capped by the SOMOR_WORKERS environment variable."""
    cap = os.environ.get("SOMOR_WORKERS")
    n = requested if requested and requested > 0 else 1
    if cap:
        n = min(n, max(1, int(cap)))
    return n


def _sweep(eval_one, omegas, q, m, workers):
    values = np.full((len(omegas), q, m), np.nan, dtype=np.complex128)
    sigma = np.full(len(omegas), np.nan)
    hits = np.zeros(len(omegas), dtype=bool)

    def run(idx):
        try:
            return idx, eval_one(1j * omegas[idx])
        except (ShiftAtEigenvalueError, PoleError):
            return idx, None

    if workers > 1:
        with concurrent.futures.ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(run, range(len(omegas))))
    else:
        results = [run(i) for i in range(len(omegas))]
    for idx, mat in results:  # assembled in grid order regardless of completion order
        if mat is None:
            hits[idx] = True
        else:
            values[idx] = mat
            sigma[idx] = _sigma(mat)
    return FrequencyResponseTable(
        omegas=np.asarray(omegas, dtype=float).copy(),
        values=values, sigma_max=sigma, pole_hits=hits,
    )


def full_response(sys: SecondOrderIndex3System, grid: FrequencyGrid,
                  workers: int | None = None) -> FrequencyResponseTable:
    return _sweep(lambda s: full_transfer(sys, s), grid.omegas, sys.q, sys.m,
                  worker_count(workers))


def reduced_response(model, grid: FrequencyGrid, workers: int | None = None) -> FrequencyResponseTable:
    """Sweep a reduced model (second-order) or a first-order dict from BT."""
    if isinstance(model, ReducedSecondOrderModel):
        q, m = model.q, model.m
        eval_one = lambda s: reduced_transfer(model, s)  # noqa: E731
    else:
        E, A, B, C = model["E"], model["A"], model["B"], model["C"]
        q, m = C.shape[0], B.shape[1]
        eval_one = lambda s: C @ dla.solve(s * E - A, B.astype(np.complex128))  # noqa: E731
    return _sweep(eval_one, grid.omegas, q, m, worker_count(workers))


@dataclass(frozen=True)
class ErrorCurves:
    absolute: np.ndarray    # sigma_max(T - Tr) per frequency
    relative: np.ndarray    # absolute / sigma_max(T); NaN where undefined
    undefined: np.ndarray   # True where sigma_max(T) == 0 or either side hit a pole

    def max_relative(self) -> float:
        ok = ~self.undefined
        return float(np.nanmax(self.relative[ok])) if np.any(ok) else float("nan")


def error_curves(full_t: FrequencyResponseTable, red_t: FrequencyResponseTable) -> ErrorCurves:
    if len(full_t) != len(red_t) or not np.allclose(full_t.omegas, red_t.omegas):
        raise ParameterError("error curves need matching frequency grids")
    n = len(full_t)
    absolute = np.full(n, np.nan)
    relative = np.full(n, np.nan)
    undefined = full_t.pole_hits | red_t.pole_hits
    for i in range(n):
        if undefined[i]:
            continue
        absolute[i] = _sigma(full_t.values[i] - red_t.values[i])
        if full_t.sigma_max[i] == 0:
            undefined[i] = True
        else:
            relative[i] = absolute[i] / full_t.sigma_max[i]
    return ErrorCurves(absolute=absolute, relative=relative, undefined=undefined)


def _cell(x) -> str:
    return "" if x is None else f"{x:.17g}"


def write_response_csv(path, grid: FrequencyGrid,
                       full_t: FrequencyResponseTable | None = None,
                       red_t: FrequencyResponseTable | None = None,
                       errors: ErrorCurves | None = None) -> None:
    """Five-column sweep CSV: omega,sigma_full,sigma_reduced,abs_err,rel_err.

    Missing tables leave their cells empty; pole-hit entries are written as
    nan. Values carry 17 significant digits.
    """
    lines = ["omega,sigma_full,sigma_reduced,abs_err,rel_err\n"]
    for i, w in enumerate(grid.omegas):
        sf = _cell(full_t.sigma_max[i]) if full_t is not None else ""
        sr = _cell(red_t.sigma_max[i]) if red_t is not None else ""
        ae = _cell(errors.absolute[i]) if errors is not None else ""
        re = _cell(errors.relative[i]) if errors is not None else ""
        lines.append(f"{w:.17g},{sf},{sr},{ae},{re}\n")
    Path(path).write_text("".join(lines))


def write_channel_csv(path, grid: FrequencyGrid,
                      full_t: FrequencyResponseTable | None = None,
                      red_t: FrequencyResponseTable | None = None) -> None:
    """Companion per-channel magnitude table |T_ij| for every output/input pair."""
    header = ["omega"]
    tables = []
    for tag, t in (("full", full_t), ("reduced", red_t)):
        if t is None:
            continue
        q, m = t.values.shape[1:]
        header += [f"mag_{tag}_o{i + 1}_i{j + 1}" for i in range(q) for j in range(m)]
        tables.append(t)
    lines = [",".join(header) + "\n"]
    for k, w in enumerate(grid.omegas):
        row = [f"{w:.17g}"]
        for t in tables:
            row += [f"{abs(v):.17g}" for v in t.values[k].ravel()]
        lines.append(",".join(row) + "\n")
    Path(path).write_text("".join(lines))


def read_response_csv(path) -> dict[str, np.ndarray]:
    """Read a sweep CSV back into float arrays (empty cells become NaN)."""
    text = Path(path).read_text().strip().splitlines()
    names = text[0].split(",")
    cols = {n: [] for n in names}
    for line in text[1:]:
        for n, cell in zip(names, line.split(",")):
            cols[n].append(float(cell) if cell else float("nan"))
    return {n: np.array(v) for n, v in cols.items()}
