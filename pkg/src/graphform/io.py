"""Problem and matrix file formats.

Problem files are JSON documents with fields ``m``, ``n``, ``A`` and term
lists ``f`` (length m) and ``g`` (length n).  ``A`` may be a nested list of
rows, a flat row-major list of length m*n, or a path (relative to the
problem file) to a Matrix Market or raw binary matrix.  Term entries are
objects like ``{"h": "Square", "b": 1.5}``; omitted parameters default to
``a=1, b=0, c=1, d=0, e=0``.

Raw binary matrices carry a 16-byte header (8-byte magic ``GFMATRIX``,
little-endian uint32 m and n) followed by m*n float64 values, row major.
"""

from __future__ import annotations

import json
import struct
from pathlib import Path

import numpy as np
import scipy.io
import scipy.sparse as sp

from .errors import ProblemFormatError
from .functions import BaseFunction, SeparableFunction
from .problem import GraphFormProblem

__all__ = [
    "RAW_MAGIC",
    "read_matrix",
    "write_matrix",
    "read_raw_matrix",
    "write_raw_matrix",
    "load_problem",
    "save_problem",
]

RAW_MAGIC = b"GFMATRIX"
_RAW_HEADER = struct.Struct("<8sII")

_TERM_FIELDS = ("a", "b", "c", "d", "e")


def read_raw_matrix(path) -> np.ndarray:
    path = Path(path)
    blob = path.read_bytes()
    if len(blob) < _RAW_HEADER.size:
        raise ProblemFormatError(f"{path}: truncated raw matrix header")
    magic, m, n = _RAW_HEADER.unpack_from(blob)
    if magic != RAW_MAGIC:
        raise ProblemFormatError(f"{path}: bad magic {magic!r}")
    data = np.frombuffer(blob, dtype="<f8", offset=_RAW_HEADER.size)
    if data.size != m * n:
        raise ProblemFormatError(
            f"{path}: expected {m * n} values, found {data.size}"
        )
    return data.reshape(m, n).astype(float)


def write_raw_matrix(path, A) -> None:
    A = np.ascontiguousarray(np.asarray(A, dtype=float))
    m, n = A.shape
    with open(path, "wb") as fh:
        fh.write(_RAW_HEADER.pack(RAW_MAGIC, m, n))
        fh.write(A.astype("<f8").tobytes())


def read_matrix(path, want_sparse: bool = False):
    """Read a Matrix Market (.mtx, dense array or coordinate) or raw binary
    matrix.  Coordinate files stay sparse only when ``want_sparse``."""
    path = Path(path)
    if path.suffix == ".bin":
        return read_raw_matrix(path)
    try:
        A = scipy.io.mmread(str(path))
    except Exception as exc:
        raise ProblemFormatError(f"{path}: cannot read matrix: {exc}") from exc
    if sp.issparse(A):
        if want_sparse:
            return A.tocsr()
        return np.asarray(A.todense(), dtype=float)
    return np.asarray(A, dtype=float)


def write_matrix(path, A) -> None:
    path = Path(path)
    if path.suffix == ".bin":
        write_raw_matrix(path, A)
    else:
        scipy.io.mmwrite(str(path), np.asarray(A, dtype=float))


def _parse_terms(entries, expected: int, field: str) -> SeparableFunction:
    if not isinstance(entries, list):
        raise ProblemFormatError(f"field '{field}' must be a list of terms")
    if len(entries) != expected:
        raise ProblemFormatError(
            f"field '{field}' has {len(entries)} terms, expected {expected}"
        )
    codes = []
    params = {name: np.zeros(expected) for name in _TERM_FIELDS}
    params["a"][:] = 1.0
    params["c"][:] = 1.0
    for i, entry in enumerate(entries):
        if not isinstance(entry, dict) or "h" not in entry:
            raise ProblemFormatError(
                f"field '{field}', term {i}: expected an object with 'h'"
            )
        try:
            kind = BaseFunction.from_name(entry["h"])
        except Exception as exc:
            raise ProblemFormatError(
                f"field '{field}', term {i}: {exc}"
            ) from exc
        codes.append(kind)
        for name in _TERM_FIELDS:
            if name in entry:
                try:
                    params[name][i] = float(entry[name])
                except (TypeError, ValueError) as exc:
                    raise ProblemFormatError(
                        f"field '{field}', term {i}: bad value for "
                        f"'{name}'"
                    ) from exc
        unknown = set(entry) - {"h", *_TERM_FIELDS}
        if unknown:
            raise ProblemFormatError(
                f"field '{field}', term {i}: unknown keys {sorted(unknown)}"
            )
    try:
        return SeparableFunction.from_arrays(codes, **params)
    except Exception as exc:
        raise ProblemFormatError(f"field '{field}': {exc}") from exc


def _parse_dense(entry, m: int, n: int):
    arr = np.asarray(entry, dtype=float)
    if arr.ndim == 1:
        if arr.size != m * n:
            raise ProblemFormatError(
                f"field 'A': flat array has {arr.size} entries, "
                f"expected m*n = {m * n}"
            )
        arr = arr.reshape(m, n)
    if arr.shape != (m, n):
        raise ProblemFormatError(
            f"field 'A': shape {arr.shape} does not match (m, n) = ({m}, {n})"
        )
    return arr


def load_problem(path, want_sparse: bool = False) -> GraphFormProblem:
    path = Path(path)
    try:
        doc = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise ProblemFormatError(
            f"{path}: invalid JSON at line {exc.lineno}, column {exc.colno}: "
            f"{exc.msg}"
        ) from exc
    if not isinstance(doc, dict):
        raise ProblemFormatError(f"{path}: top level must be an object")
    for field in ("m", "n", "A", "f", "g"):
        if field not in doc:
            raise ProblemFormatError(f"{path}: missing field '{field}'")
    try:
        m = int(doc["m"])
        n = int(doc["n"])
    except (TypeError, ValueError) as exc:
        raise ProblemFormatError(f"{path}: fields 'm'/'n' must be integers") \
            from exc
    if m < 1 or n < 1:
        raise ProblemFormatError(f"{path}: 'm' and 'n' must be positive")
    entry = doc["A"]
    if isinstance(entry, str):
        A = read_matrix(path.parent / entry, want_sparse=want_sparse)
        if A.shape != (m, n):
            raise ProblemFormatError(
                f"field 'A': file {entry} has shape {A.shape}, expected "
                f"({m}, {n})"
            )
    else:
        A = _parse_dense(entry, m, n)
    f = _parse_terms(doc["f"], m, "f")
    g = _parse_terms(doc["g"], n, "g")
    try:
        return GraphFormProblem(A, f, g)
    except Exception as exc:
        raise ProblemFormatError(f"{path}: {exc}") from exc


def _terms_to_json(sf: SeparableFunction) -> list:
    from .functions import CODE_KIND

    out = []
    for i in range(len(sf)):
        entry = {"h": CODE_KIND[int(sf.h[i])].value}
        for name in _TERM_FIELDS:
            val = float(getattr(sf, name)[i])
            default = 1.0 if name in ("a", "c") else 0.0
            if val != default:
                entry[name] = val
        out.append(entry)
    return out


def save_problem(path, problem: GraphFormProblem, matrix_path=None) -> None:
    """Write a problem file.  With ``matrix_path`` the matrix goes to its own
    Matrix Market or raw binary file referenced from the JSON document."""
    path = Path(path)
    if matrix_path is not None:
        matrix_path = Path(matrix_path)
        # relative matrix paths live next to the problem file
        target = matrix_path if matrix_path.is_absolute() \
            else path.parent / matrix_path
        write_matrix(target, problem.A)
        a_entry = str(matrix_path)
    else:
        A = problem.A
        if sp.issparse(A):
            A = np.asarray(A.todense())
        a_entry = np.asarray(A, dtype=float).tolist()
    doc = {
        "m": problem.m,
        "n": problem.n,
        "A": a_entry,
        "f": _terms_to_json(problem.f),
        "g": _terms_to_json(problem.g),
    }
    path.write_text(json.dumps(doc))
