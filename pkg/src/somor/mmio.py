"""On-disk formats: Matrix Market matrices, system manifests, reduced-model JSON.

A model directory holds one Matrix Market coordinate file per system block
plus ``manifest.json`` with schema tag ``somor-manifest-v1`` listing the six
file names and the dimensions (n1, n2, m, q). Values are written with 17
significant digits so a write/read round trip is bit-exact for float64.
"""

from __future__ import annotations

import hashlib
import json
from pathlib import Path

import numpy as np
import scipy.io
import scipy.sparse as sp

from .errors import ManifestError
from .model_core import ReducedSecondOrderModel, SecondOrderIndex3System, as_sparse

MANIFEST_SCHEMA = "somor-manifest-v1"
ROM_SCHEMA = "somor-rom-v1"
BT_ROM_SCHEMA = "somor-bt-rom-v1"

SYSTEM_BLOCKS = ("M", "D", "K", "G", "F", "L")


def write_matrix_market(path, matrix) -> None:
    """Write a real sparse matrix in coordinate format with 17 significant digits."""
    m = as_sparse(matrix).tocoo()
    order = np.lexsort((m.col, m.row))
    lines = [
        "%%MatrixMarket matrix coordinate real general\n",
        f"{m.shape[0]} {m.shape[1]} {m.nnz}\n",
    ]
    rows, cols, vals = m.row[order], m.col[order], m.data[order]
    for i, j, v in zip(rows, cols, vals):
        lines.append(f"{i + 1} {j + 1} {v:.17g}\n")
    Path(path).write_text("".join(lines))


def read_matrix_market(path) -> sp.csc_matrix:
    return as_sparse(scipy.io.mmread(str(path)))


def save_system(sys: SecondOrderIndex3System, out_dir, extra: dict | None = None) -> Path:
    """Write the six matrix files plus manifest.json; returns the manifest path."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    files = {}
    for name in SYSTEM_BLOCKS:
        fname = f"{name}.mtx"
        write_matrix_market(out / fname, getattr(sys, name))
        files[name] = fname
    manifest = {
        "schema": MANIFEST_SCHEMA,
        "n1": sys.n1,
        "n2": sys.n2,
        "m": sys.m,
        "q": sys.q,
        "files": files,
    }
    if extra:
        manifest.update(extra)
    path = out / "manifest.json"
    path.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    return path


def load_system(model_dir) -> SecondOrderIndex3System:
    """Read a system back from a model directory written by :func:`save_system`."""
    root = Path(model_dir)
    manifest_path = root / "manifest.json"
    if not manifest_path.is_file():
        raise ManifestError(f"no manifest.json in {root}")
    manifest = json.loads(manifest_path.read_text())
    if manifest.get("schema") != MANIFEST_SCHEMA:
        raise ManifestError(f"unsupported manifest schema {manifest.get('schema')!r}")
    blocks = {}
    for name in SYSTEM_BLOCKS:
        try:
            fname = manifest["files"][name]
        except KeyError as exc:
            raise ManifestError(f"manifest missing file entry for block {name}") from exc
        blocks[name] = read_matrix_market(root / fname)
    sys = SecondOrderIndex3System(**blocks)
    declared = (manifest["n1"], manifest["n2"], manifest["m"], manifest["q"])
    if declared != (sys.n1, sys.n2, sys.m, sys.q):
        raise ManifestError(
            f"manifest dimensions {declared} disagree with matrix files "
            f"{(sys.n1, sys.n2, sys.m, sys.q)}"
        )
    return sys


def manifest_sha256(model_dir) -> str:
    data = (Path(model_dir) / "manifest.json").read_bytes()
    return hashlib.sha256(data).hexdigest()


def _dense_block(a: np.ndarray) -> list:
    return np.asarray(a, dtype=float).tolist()  # row-major nested lists


def save_reduced_model(rom: ReducedSecondOrderModel, path, source_hash: str | None = None) -> None:
    doc = {
        "schema": ROM_SCHEMA,
        "r": rom.r,
        "m": rom.m,
        "q": rom.q,
        "source_manifest_sha256": source_hash,
        "M": _dense_block(rom.M),
        "D": _dense_block(rom.D),
        "K": _dense_block(rom.K),
        "F": _dense_block(rom.F),
        "L": _dense_block(rom.L),
    }
    Path(path).write_text(json.dumps(doc) + "\n")


def save_first_order_model(E, A, B, C, path, hankel=None, source_hash: str | None = None) -> None:
    doc = {
        "schema": BT_ROM_SCHEMA,
        "order": int(np.asarray(A).shape[0]),
        "m": int(np.asarray(B).shape[1]),
        "q": int(np.asarray(C).shape[0]),
        "source_manifest_sha256": source_hash,
        "E": _dense_block(E),
        "A": _dense_block(A),
        "B": _dense_block(B),
        "C": _dense_block(C),
    }
    if hankel is not None:
        doc["hankel"] = [float(s) for s in hankel]
    Path(path).write_text(json.dumps(doc) + "\n")


def load_reduced_model(path):
    """Load either reduced-model flavor; returns a model object or (E, A, B, C) tuple.

    Second-order files yield a :class:`ReducedSecondOrderModel`; balanced-
    truncation files yield a dict with dense E, A, B, C arrays (first-order).
    """
    doc = json.loads(Path(path).read_text())
    schema = doc.get("schema")
    if schema == ROM_SCHEMA:
        return ReducedSecondOrderModel(
            M=np.asarray(doc["M"], dtype=float),
            D=np.asarray(doc["D"], dtype=float),
            K=np.asarray(doc["K"], dtype=float),
            F=np.asarray(doc["F"], dtype=float),
            L=np.asarray(doc["L"], dtype=float),
        )
    if schema == BT_ROM_SCHEMA:
        return {
            "E": np.asarray(doc["E"], dtype=float),
            "A": np.asarray(doc["A"], dtype=float),
            "B": np.asarray(doc["B"], dtype=float),
            "C": np.asarray(doc["C"], dtype=float),
            "hankel": np.asarray(doc.get("hankel", []), dtype=float),
        }
    raise ManifestError(f"unsupported reduced-model schema {schema!r}")
