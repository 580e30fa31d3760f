"""Constrained mechanical benchmark families at any size.

Both generators emit sparse (M, D, K, G, F, L) with O(n1) stored entries,
full-row-rank difference constraints (edge sets of a forest are linearly
independent), symmetric positive definite stiffness, and proportional
damping D = (damping/stiffness) K + 1e-2 M so the constrained pencil is
stable without tuning. Physical parameters are configuration, not imported
data; the emitted manifest records them so runs are self-describing.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np
import scipy.sparse as sp

from .errors import ParameterError
from .model_core import SecondOrderIndex3System, make_system


@dataclass(frozen=True)
class DsmsParams:
    """Damped spring-mass chain with holonomic ties between distant masses."""

    n1: int
    n2: int
    mass: float = 100.0
    stiffness: float = 2.0
    damping: float = 5.0
    seed: int = 0  # recorded in manifests; generation itself is deterministic


@dataclass(frozen=True)
class TcomParams:
    """Triple chain oscillator: three chains of g masses tied to a common end mass."""

    g: int
    n2: int | None = None  # default 2g (cross-chain ties only)
    masses: tuple[float, float, float] = (1.0, 2.0, 3.0)
    stiffness: float = 10.0
    damping: float = 5.0
    seed: int = 0

    @property
    def n1(self) -> int:
        return 3 * self.g + 1

    def resolved_n2(self) -> int:
        return 2 * self.g if self.n2 is None else self.n2


def _proportional_damping(K, M, damping, stiffness):
    return (damping / stiffness) * K + 1e-2 * M


def gen_dsms(p: DsmsParams) -> SecondOrderIndex3System:
    """Spring chain: M = mass*I, K tridiagonal, ties x_i = x_{i+stride/2}.

    Constraint row j ties the pair (stride*j, stride*j + stride//2) with
    stride = n1 // n2; needs stride >= 2 so the pairs stay disjoint.
    """
    n1, n2 = p.n1, p.n2
    if not 1 <= n2 < n1:
        raise ParameterError(f"need 1 <= n2 < n1, got n1={n1}, n2={n2}")
    if min(p.mass, p.stiffness, p.damping) <= 0:
        raise ParameterError("mass, stiffness, damping must be positive")
    stride = n1 // n2
    offset = stride // 2
    if offset < 1:
        raise ParameterError(
            f"constraint pairs collide: n1={n1} allows at most n2={n1 // 2} ties"
        )
    M = sp.identity(n1, format="csc") * p.mass
    main = np.full(n1, 2.0 * p.stiffness)
    off = np.full(n1 - 1, -p.stiffness)
    K = sp.diags([off, main, off], [-1, 0, 1], format="csc")
    D = _proportional_damping(K, M, p.damping, p.stiffness)

    rows = np.repeat(np.arange(n2), 2)
    cols = np.empty(2 * n2, dtype=int)
    cols[0::2] = stride * np.arange(n2)
    cols[1::2] = stride * np.arange(n2) + offset
    vals = np.tile([1.0, -1.0], n2)
    G = sp.csc_matrix((vals, (rows, cols)), shape=(n2, n1))

    F = sp.csc_matrix(([1.0], ([n1 // 2], [0])), shape=(n1, 1))
    taps = [n1 // 4, n1 // 2, 3 * n1 // 4]
    L = sp.csc_matrix((np.ones(3), (range(3), taps)), shape=(3, n1))
    return make_system(M, D, K, G, F, L)


def _tcom_edges(g: int):
    """Spanning-tree edge list over 3g chain coordinates plus the common mass.

    Coordinate layout: chain p occupies indices p*g .. p*g + g - 1 (mass 0
    nearest the common mass), the common mass sits at index 3g. Per chain
    position i the candidate ties are chain1-chain2, chain2-chain3, and
    chain3-common; all 3g of them together form a spanning tree, so any
    subset is linearly independent.
    """
    edges = []
    for i in range(g):
        edges.append((i, g + i))
        edges.append((g + i, 2 * g + i))
        edges.append((2 * g + i, 3 * g))
    return edges


def gen_tcom(p: TcomParams) -> SecondOrderIndex3System:
    """Three spring chains joined at a wall-anchored common mass, cross-tied."""
    g = p.g
    if g < 1:
        raise ParameterError(f"need g >= 1, got {g}")
    n1 = p.n1
    n2 = p.resolved_n2()
    if not 1 <= n2 < n1:
        raise ParameterError(f"need 1 <= n2 < n1 = {n1}, got n2={n2}")
    if n2 > 3 * g:
        raise ParameterError(f"not enough cross-chain ties: n2={n2} > 3g={3 * g}")
    if min(min(p.masses), p.stiffness, p.damping) <= 0:
        raise ParameterError("masses, stiffness, damping must be positive")

    common = 3 * g
    diag_m = np.empty(n1)
    for chain in range(3):
        diag_m[chain * g:(chain + 1) * g] = p.masses[chain]
    diag_m[common] = float(np.mean(p.masses))
    M = sp.diags(diag_m, format="csc")

    # springs: consecutive masses within each chain, chain head to the common
    # mass, and the common mass to the wall (keeps K positive definite)
    k = p.stiffness
    springs = []
    for chain in range(3):
        base = chain * g
        springs.append((base, common))
        for i in range(g - 1):
            springs.append((base + i, base + i + 1))
    rows, cols, vals = [], [], []
    for a, b in springs:
        rows += [a, b, a, b]
        cols += [a, b, b, a]
        vals += [k, k, -k, -k]
    rows.append(common)
    cols.append(common)
    vals.append(k)  # wall anchor
    K = sp.csc_matrix((vals, (rows, cols)), shape=(n1, n1))
    K.sum_duplicates()
    D = _proportional_damping(K, M, p.damping, p.stiffness)

    edges = _tcom_edges(g)
    picks = [edges[(j * len(edges)) // n2] for j in range(n2)]
    rows = np.repeat(np.arange(n2), 2)
    cols = np.array([idx for e in picks for idx in e])
    vals = np.tile([1.0, -1.0], n2)
    G = sp.csc_matrix((vals, (rows, cols)), shape=(n2, n1))

    F = sp.csc_matrix(([1.0], ([common], [0])), shape=(n1, 1))
    L = sp.csc_matrix(([1.0], ([0], [0])), shape=(1, n1))
    return make_system(M, D, K, G, F, L)


def generate(model: str, **kwargs) -> tuple[SecondOrderIndex3System, dict]:
    """Dispatch by family name; returns the system plus its parameter record."""
    model = model.lower()
    if model == "dsms":
        params = DsmsParams(**kwargs)
        return gen_dsms(params), {"model": "dsms", **asdict(params)}
    if model == "tcom":
        params = TcomParams(**kwargs)
        record = {"model": "tcom", **asdict(params)}
        record["n2"] = params.resolved_n2()
        return gen_tcom(params), record
    raise ParameterError(f"unknown benchmark family {model!r} (expected dsms or tcom)")
