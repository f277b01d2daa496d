"""Sparse Hermitian operators on a magnetization sector.

Operators are assembled from elementary spin-1/2 terms (S^z, S^z S^z and
flip-flop S^+ S^- pairs) acting on bitmask basis states, stored row
compressed (CSR), and carry their :class:`~typpert.basis.SectorBasis`.
The triplet text format used for export is::

    dim nnz
    row col re im        (0-based, one entry per line)
"""

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from .basis import SectorBasis


@dataclass(frozen=True)
class SparseHermitian:
    """CSR-backed Hermitian operator restricted to a sector basis."""

    matrix: sp.csr_matrix = field(repr=False)
    basis: SectorBasis = None

    def __post_init__(self):
        m = self.matrix
        if m.shape[0] != m.shape[1]:
            raise ValueError(f"operator must be square, got {m.shape}")

    @property
    def dim(self):
        return self.matrix.shape[0]

    @property
    def nnz(self):
        return self.matrix.nnz

    def apply(self, vec):
        """Matrix-vector product A @ vec."""
        return self.matrix @ vec

    def expectation(self, vec):
        """<vec|A|vec> (complex; callers decide how to treat the imaginary part)."""
        return np.vdot(vec, self.matrix @ vec)

    def trace(self):
        return complex(self.matrix.diagonal().sum())

    def diagonal(self):
        return self.matrix.diagonal()

    def toarray(self):
        return self.matrix.toarray()

    def hermiticity_defect(self):
        """max |A_mn - conj(A_nm)| over all entries."""
        d = self.matrix - self.matrix.conjugate().transpose().tocsr()
        return 0.0 if d.nnz == 0 else float(np.abs(d.data).max())

    def __add__(self, other):
        return SparseHermitian((self.matrix + other.matrix).tocsr(), self.basis)

    def __sub__(self, other):
        return SparseHermitian((self.matrix - other.matrix).tocsr(), self.basis)

    def __rmul__(self, scalar):
        return SparseHermitian((scalar * self.matrix).tocsr(), self.basis)

    def commutator_norm(self, other):
        """Frobenius norm of [A, B]; zero iff the operators commute."""
        c = self.matrix @ other.matrix - other.matrix @ self.matrix
        return float(sp.linalg.norm(c)) if c.nnz else 0.0

    # -- triplet text export / import ------------------------------------

    def to_triplet_text(self):
        """Serialize as the documented `dim nnz` / `row col re im` format."""
        coo = self.matrix.tocoo()
        order = np.lexsort((coo.col, coo.row))
        lines = [f"{self.dim} {coo.nnz}"]
        for k in order:
            v = coo.data[k]
            lines.append(f"{coo.row[k]} {coo.col[k]} {v.real:.17g} {v.imag:.17g}")
        return "\n".join(lines) + "\n"

    @classmethod
    def from_triplet_text(cls, text, basis=None):
        lines = text.strip().splitlines()
        dim, nnz = (int(x) for x in lines[0].split())
        rows = np.empty(nnz, dtype=np.int64)
        cols = np.empty(nnz, dtype=np.int64)
        vals = np.empty(nnz, dtype=np.complex128)
        for k, line in enumerate(lines[1 : nnz + 1]):
            r, c, re, im = line.split()
            rows[k], cols[k] = int(r), int(c)
            vals[k] = float(re) + 1j * float(im)
        m = sp.coo_matrix((vals, (rows, cols)), shape=(dim, dim)).tocsr()
        return cls(m, basis)

    @classmethod
    def from_dense(cls, array, basis=None):
        return cls(sp.csr_matrix(np.asarray(array, dtype=np.complex128)), basis)

    @classmethod
    def identity(cls, dim, basis=None):
        return cls(sp.identity(dim, dtype=np.complex128, format="csr"), basis)


def _sz(state, site):
    """S^z eigenvalue at `site` of a bitmask state: +-1/2."""
    return 0.5 if (state >> site) & 1 else -0.5


class OperatorBuilder:
    """Accumulates spin-1/2 terms and assembles a sector-restricted operator.

    Supported elementary terms (site indices are 0-based):

    * ``add_sz(i, c)``                -- c * S^z_i
    * ``add_szsz(i, j, c)``           -- c * S^z_i S^z_j
    * ``add_flip_flop(i, j, c)``      -- c * S^+_i S^-_j  + conj(c) * S^-_i S^+_j

    The flip-flop pair is always added with its Hermitian partner, so any
    combination of terms yields a Hermitian operator that commutes with
    total S^z by construction.
    """

    def __init__(self, basis: SectorBasis):
        self.basis = basis
        self._z = []
        self._zz = []
        self._ff = []

    def add_sz(self, site, coeff):
        self._check_site(site)
        self._z.append((site, coeff))
        return self

    def add_szsz(self, i, j, coeff):
        self._check_site(i)
        self._check_site(j)
        self._zz.append((i, j, coeff))
        return self

    def add_flip_flop(self, i, j, coeff):
        if i == j:
            raise ValueError("flip-flop term needs two distinct sites")
        self._check_site(i)
        self._check_site(j)
        self._ff.append((i, j, complex(coeff)))
        return self

    def add_heisenberg(self, i, j, coeff=1.0):
        """coeff * vec(S)_i . vec(S)_j"""
        self.add_szsz(i, j, coeff)
        self.add_flip_flop(i, j, 0.5 * coeff)
        return self

    def add_xx_yy(self, i, j, coeff=1.0):
        """coeff * (S^x_i S^x_j + S^y_i S^y_j)"""
        self.add_flip_flop(i, j, 0.5 * coeff)
        return self

    def add_current(self, i, j, coeff=1.0):
        """coeff * (S^x_i S^y_j - S^y_i S^x_j) = coeff * (i/2)(S^+_i S^-_j - S^-_i S^+_j)"""
        self.add_flip_flop(i, j, 0.5j * coeff)
        return self

    def _check_site(self, site):
        if not (0 <= site < self.basis.num_spins):
            raise ValueError(f"site {site} outside 0..{self.basis.num_spins - 1}")

    def build(self):
        basis = self.basis
        states = basis.states
        dim = basis.dim
        rows, cols, vals = [], [], []
        lookup = basis.lookup
        for col in range(dim):
            s = int(states[col])
            diag = 0.0
            for site, c in self._z:
                diag += c * _sz(s, site)
            for i, j, c in self._zz:
                diag += c * _sz(s, i) * _sz(s, j)
            if diag != 0.0:
                rows.append(col)
                cols.append(col)
                vals.append(diag)
            for i, j, c in self._ff:
                bi, bj = (s >> i) & 1, (s >> j) & 1
                if bi == 0 and bj == 1:  # S^+_i S^-_j
                    rows.append(lookup((s | (1 << i)) & ~(1 << j)))
                    cols.append(col)
                    vals.append(c)
                if bi == 1 and bj == 0:  # S^-_i S^+_j (Hermitian partner)
                    rows.append(lookup((s & ~(1 << i)) | (1 << j)))
                    cols.append(col)
                    vals.append(np.conj(c))
        m = sp.coo_matrix(
            (np.asarray(vals, dtype=np.complex128), (rows, cols)), shape=(dim, dim)
        ).tocsr()
        m.sum_duplicates()
        m.sort_indices()
        return SparseHermitian(m, basis)
