"""
Storage models for operators loaded from files
"""

from dataclasses import dataclass
from typing import Any, Dict

import numpy as np
import scipy.sparse


@dataclass
class SparseMatrix:
    """Square matrix in compressed row storage"""
    csr: scipy.sparse.csr_matrix
    name: str = "sparse"

    def __post_init__(self):
        rows, cols = self.csr.shape
        if rows != cols:
            raise ValueError(f"only square matrices are supported, got {rows} x {cols}")
        # Canonical form: sorted column indices, no duplicates
        self.csr.sum_duplicates()
        self.csr.sort_indices()

    @property
    def n(self) -> int:
        """Dimension"""
        return self.csr.shape[0]

    @property
    def nnz(self) -> int:
        """Number of stored entries"""
        return int(self.csr.nnz)

    @property
    def row_offsets(self) -> np.ndarray:
        """CSR row pointer array"""
        return self.csr.indptr

    @property
    def column_indices(self) -> np.ndarray:
        """CSR column index array"""
        return self.csr.indices

    @property
    def values(self) -> np.ndarray:
        """CSR value array"""
        return self.csr.data

    @property
    def is_complex(self) -> bool:
        """True when entries are complex"""
        return np.iscomplexobj(self.csr.data)

    def to_dict(self) -> Dict[str, Any]:
        """Summary for reports"""
        return {
            'name': self.name,
            'n': self.n,
            'nnz': self.nnz,
            'complex': self.is_complex,
        }
