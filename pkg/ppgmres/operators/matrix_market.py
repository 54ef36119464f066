"""
Matrix Market coordinate-format reading and writing
"""

import logging
from pathlib import Path
from typing import List, Union

import numpy as np
import scipy.io
import scipy.sparse

from ..errors import MatrixMarketError, UnsupportedFormatError
from .models import SparseMatrix

logger = logging.getLogger(__name__)

BANNER = "%%matrixmarket"
SUPPORTED_FIELDS = ("real", "integer", "complex")
SUPPORTED_SYMMETRIES = ("general", "symmetric", "skew-symmetric", "hermitian")


def _parse_banner(line: str, line_number: int):
    tokens = line.strip().lower().split()
    if len(tokens) != 5 or tokens[0] != BANNER:
        raise MatrixMarketError(f"invalid banner {line.strip()!r}", line_number)
    _, obj, fmt, field, symmetry = tokens
    if obj != "matrix":
        raise UnsupportedFormatError(f"object type {obj!r} is not supported")
    if fmt != "coordinate":
        raise UnsupportedFormatError(f"format {fmt!r} is not supported, only coordinate")
    if field not in SUPPORTED_FIELDS:
        raise UnsupportedFormatError(f"field type {field!r} is not supported")
    if symmetry not in SUPPORTED_SYMMETRIES:
        raise UnsupportedFormatError(f"symmetry {symmetry!r} is not supported")
    return field, symmetry


def read_matrix_market(path: Union[str, Path]) -> SparseMatrix:
    """
    Read a square coordinate-format Matrix Market file

    Entries are 1-indexed in the file and 0-indexed in the result. Symmetric,
    skew-symmetric and Hermitian storage is expanded to the full matrix.

    Args:
        path: File path

    Returns:
        SparseMatrix in CSR storage
    """
    path = Path(path)
    rows: List[int] = []
    cols: List[int] = []
    vals: List[complex] = []
    shape = None
    expected = 0
    entries = 0
    field = symmetry = None

    with open(path, "r", encoding="utf-8") as f:
        for line_number, line in enumerate(f, start=1):
            if line_number == 1:
                field, symmetry = _parse_banner(line, line_number)
                continue
            stripped = line.strip()
            if not stripped or stripped.startswith("%"):
                continue
            tokens = stripped.split()
            if shape is None:
                if len(tokens) != 3:
                    raise MatrixMarketError("size line must hold rows, columns and entry count", line_number)
                try:
                    n_rows, n_cols, expected = (int(t) for t in tokens)
                except ValueError:
                    raise MatrixMarketError(f"non-integer size line {stripped!r}", line_number)
                if n_rows != n_cols:
                    raise MatrixMarketError(f"matrix must be square, got {n_rows} x {n_cols}", line_number)
                shape = (n_rows, n_cols)
                continue

            width = 4 if field == "complex" else 3
            if len(tokens) != width:
                raise MatrixMarketError(f"expected {width} fields, got {len(tokens)}", line_number)
            try:
                i, j = int(tokens[0]) - 1, int(tokens[1]) - 1
                if field == "complex":
                    value = complex(float(tokens[2]), float(tokens[3]))
                else:
                    value = float(tokens[2])
            except ValueError:
                raise MatrixMarketError(f"malformed entry {stripped!r}", line_number)
            if not (0 <= i < shape[0] and 0 <= j < shape[1]):
                raise MatrixMarketError(f"index ({i + 1}, {j + 1}) outside {shape[0]} x {shape[1]}", line_number)

            entries += 1
            rows.append(i)
            cols.append(j)
            vals.append(value)
            if i != j and symmetry != "general":
                rows.append(j)
                cols.append(i)
                if symmetry == "symmetric":
                    vals.append(value)
                elif symmetry == "skew-symmetric":
                    vals.append(-value)
                else:
                    vals.append(np.conj(value))

    if shape is None:
        raise MatrixMarketError("missing size line", 1)
    if field is None:
        raise MatrixMarketError("empty file", 1)

    if entries != expected:
        raise MatrixMarketError(f"header declares {expected} entries, found {entries}", line_number)

    dtype = complex if field == "complex" else float
    coo = scipy.sparse.coo_matrix(
        (np.array(vals, dtype=dtype), (np.array(rows, dtype=int), np.array(cols, dtype=int))),
        shape=shape,
    )
    matrix = SparseMatrix(coo.tocsr(), name=path.stem)
    logger.info(f"Read {path.name}: n={matrix.n}, nnz={matrix.nnz}, {field} {symmetry}")
    return matrix


def write_matrix_market(path: Union[str, Path], matrix: Union[SparseMatrix, scipy.sparse.spmatrix]) -> Path:
    """
    Write a matrix in general coordinate format with full double precision

    Args:
        path: Destination file
        matrix: SparseMatrix or scipy sparse matrix

    Returns:
        The written path
    """
    path = Path(path)
    csr = matrix.csr if isinstance(matrix, SparseMatrix) else scipy.sparse.csr_matrix(matrix)
    path.parent.mkdir(parents=True, exist_ok=True)
    scipy.io.mmwrite(str(path), csr.tocoo(), precision=17, symmetry="general")
    # mmwrite appends the extension when missing
    if not path.exists() and path.with_suffix(path.suffix + ".mtx").exists():
        path = path.with_suffix(path.suffix + ".mtx")
    logger.info(f"Wrote {path.name}: n={csr.shape[0]}, nnz={csr.nnz}")
    return path
