"""Tagged N x N proximity matrices."""
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

KINDS = (
    "adjacency",
    "laplacian",
    "transition",
    "fst",
    "ist",
    "fsmt",
    "estimated-fst",
    "estimated-fsmt",
)


class ParameterError(ValueError):
    """An argument outside the domain of a proximity, solver or walk routine."""


@dataclass(frozen=True, eq=False)
class ProximityMatrix:
    """An N x N matrix together with the proximity kind and its parameters.

    ``values`` is either a dense ``ndarray`` or a scipy CSR matrix; the
    builder picks whichever is natural for the kind.
    """

    values: object
    kind: str
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown proximity kind {self.kind!r}")
        shape = self.values.shape
        if len(shape) != 2 or shape[0] != shape[1]:
            raise ValueError(f"proximity matrix must be square, got {shape}")

    @property
    def n(self):
        return self.values.shape[0]

    @property
    def is_sparse(self):
        return sp.issparse(self.values)

    def toarray(self):
        if self.is_sparse:
            return self.values.toarray()
        return np.asarray(self.values)

    def tocsr(self):
        if self.is_sparse:
            return self.values.tocsr()
        return sp.csr_matrix(self.values)

    def row_sums(self):
        return np.asarray(self.values.sum(axis=1)).ravel()

    def nonzero_values(self):
        if self.is_sparse:
            m = self.values.tocsr()
            return m.data[m.data != 0]
        v = np.asarray(self.values).ravel()
        return v[v != 0]

    def dump(self, path):
        """Write non-zero entries as ``i<TAB>j<TAB>value`` lines."""
        m = self.tocsr().tocoo()
        order = np.lexsort((m.col, m.row))
        with open(path, "w", encoding="utf-8") as fh:
            for k in order:
                if m.data[k] != 0:
                    fh.write(f"{m.row[k]}\t{m.col[k]}\t{float(m.data[k])!r}\n")


def load_triples(path, n):
    """Read a matrix written by :meth:`ProximityMatrix.dump` back as CSR."""
    rows, cols, vals = [], [], []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            if not line.strip():
                continue
            i, j, v = line.split("\t")
            rows.append(int(i))
            cols.append(int(j))
            vals.append(float(v))
    return sp.csr_matrix((vals, (rows, cols)), shape=(n, n))
