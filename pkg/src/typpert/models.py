"""The three spin-1/2 systems: builders for Hamiltonians, perturbations,
observables and declarative initial-state specifications.

All operators are restricted to a fixed-magnetization sector (total
S^z = 0 for an even number of spins, +1/2 for odd lattices) and built
deterministically: the same :class:`ModelSpec` always yields the same
sparse structure.

Site conventions (0-based internally, 1-based in the formulas):

* ladders: ``site = 2*(l-1) + (j-1)`` for rung ``l`` in 1..L, leg ``j`` in {1, 2}
* lattice: ``site = L*(i-1) + (j-1)`` for row ``i``, column ``j`` in 1..L
"""

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from .basis import SectorBasis
from .errors import ModelSizeError, SpecificationError
from .sparse import OperatorBuilder, SparseHermitian

MODEL_KINDS = ("cross_ladder", "chain_ladder", "lattice")
LATTICE_BOND_MODES = ("literal", "all_nn")


@dataclass(frozen=True)
class ModelSpec:
    """Declarative description of one of the three systems."""

    kind: str
    L: int
    boundary: str = None  # filled in by __post_init__ per kind
    includes_symmetry_breaker: bool = True
    lattice_bonds: str = "literal"

    def __post_init__(self):
        if self.kind not in MODEL_KINDS:
            raise SpecificationError(f"unknown model kind {self.kind!r}")
        if self.boundary is None:
            object.__setattr__(
                self, "boundary", "open" if self.kind == "lattice" else "periodic"
            )
        if self.lattice_bonds not in LATTICE_BOND_MODES:
            raise SpecificationError(f"unknown lattice_bonds {self.lattice_bonds!r}")

    @property
    def num_spins(self):
        return self.L**2 if self.kind == "lattice" else 2 * self.L

    @property
    def total_sz(self):
        # smallest sector: S_z = 0 when the spin count is even, else +1/2
        return 0.0 if self.num_spins % 2 == 0 else 0.5


@dataclass(frozen=True)
class StateSpec:
    """Declarative initial-state construction (nothing realized yet)."""

    model_kind: str
    construction: str
    window: tuple = None  # (E, half-width) in the unperturbed Hamiltonian
    sigma_e: float = None
    projector_sites: tuple = None

    @property
    def is_plain_autocorrelation(self):
        """True when the spec reduces to an unfiltered autocorrelation."""
        if self.construction == "current_autocorrelation":
            return True
        return self.window is not None and math.isinf(self.window[1])


@dataclass(frozen=True)
class Model:
    """Built operators of one system on its sector basis."""

    spec: ModelSpec
    basis: SectorBasis
    h0: SparseHermitian
    v: SparseHermitian
    observable: SparseHermitian
    observable_name: str
    h0_bonds: tuple = field(repr=False, default=())

    def pup(self, i, j):
        """Projector onto spin-up at lattice site (i, j): S^z + 1/2."""
        if self.spec.kind != "lattice":
            raise SpecificationError("pup is defined for the lattice model only")
        L = self.spec.L
        _check_lattice_site(L, i, j)
        b = OperatorBuilder(self.basis)
        b.add_sz(_lattice_site(L, i, j), 1.0)
        op = b.build()
        half = SparseHermitian.identity(self.basis.dim, self.basis)
        return op + 0.5 * half


def _ladder_site(l, j):
    return 2 * (l - 1) + (j - 1)


def _lattice_site(L, i, j):
    return L * (i - 1) + (j - 1)


def _check_lattice_site(L, i, j):
    if not (1 <= i <= L and 1 <= j <= L):
        raise ModelSizeError(f"site ({i},{j}) outside the {L}x{L} lattice")


def _ladder_basis(L):
    if L < 5:
        raise ModelSizeError(
            f"ladders need L >= 5 so the symmetry-breaking fields at rungs 4 and 5 exist, got L={L}"
        )
    return SectorBasis.build(2 * L, 0.0)


def _add_symmetry_breaker(builder):
    # local fields at sites (1,1), (4,2), (5,2); L-independent by construction
    builder.add_sz(_ladder_site(1, 1), -0.16)
    builder.add_sz(_ladder_site(4, 2), 0.2)
    builder.add_sz(_ladder_site(5, 2), 0.1)


def build_cross_ladder(L, include_h=True):
    """Spin ladder with diagonal-cross S^z S^z perturbation.

    Returns the unperturbed Hamiltonian (legs + rungs + local fields),
    the cross perturbation and the slowest-mode magnetization observable
    S_q, all on the S_z = 0 sector with periodic wrap l = L+1 -> 1.
    """
    basis = _ladder_basis(L)
    bonds = []

    h0 = OperatorBuilder(basis)
    if include_h:
        _add_symmetry_breaker(h0)
    for j in (1, 2):
        for l in range(1, L + 1):
            a, b = _ladder_site(l, j), _ladder_site(l % L + 1, j)
            h0.add_heisenberg(a, b, 1.0)
            bonds.append((a, b))
    for l in range(1, L + 1):
        a, b = _ladder_site(l, 1), _ladder_site(l, 2)
        h0.add_heisenberg(a, b, 1.0)
        bonds.append((a, b))

    v = OperatorBuilder(basis)
    for l in range(1, L + 1):
        lp = l % L + 1
        v.add_szsz(_ladder_site(l, 1), _ladder_site(lp, 2), 1.0)
        v.add_szsz(_ladder_site(l, 2), _ladder_site(lp, 1), 1.0)

    sq = OperatorBuilder(basis)
    for l in range(1, L + 1):
        c = math.cos(2.0 * math.pi * l / L)
        sq.add_sz(_ladder_site(l, 1), c)
        sq.add_sz(_ladder_site(l, 2), c)

    spec = ModelSpec("cross_ladder", L, includes_symmetry_breaker=include_h)
    return Model(spec, basis, h0.build(), v.build(), sq.build(), "sq", tuple(bonds))


def build_chain_ladder(L, include_h=True):
    """Two periodic Heisenberg chains; the perturbation adds the rungs.

    The observable is the spin current along the chains, Hermitian with
    purely imaginary matrix elements in the product basis.
    """
    basis = _ladder_basis(L)
    bonds = []

    h0 = OperatorBuilder(basis)
    if include_h:
        _add_symmetry_breaker(h0)
    for j in (1, 2):
        for l in range(1, L + 1):
            a, b = _ladder_site(l, j), _ladder_site(l % L + 1, j)
            h0.add_heisenberg(a, b, 1.0)
            bonds.append((a, b))

    v = OperatorBuilder(basis)
    for l in range(1, L + 1):
        v.add_heisenberg(_ladder_site(l, 1), _ladder_site(l, 2), 1.0)

    cur = OperatorBuilder(basis)
    for j in (1, 2):
        for l in range(1, L + 1):
            cur.add_current(_ladder_site(l, j), _ladder_site(l % L + 1, j), 1.0)

    spec = ModelSpec("chain_ladder", L, includes_symmetry_breaker=include_h)
    return Model(spec, basis, h0.build(), v.build(), cur.build(), "current", tuple(bonds))


def _lattice_h0_bonds(L, mode):
    """Heisenberg bond list of the lattice Hamiltonian.

    `literal` keeps both sum indices in 1..L-1, which drops the last row's
    horizontal bonds and the last column's vertical bonds; `all_nn` covers
    every nearest-neighbor pair of the open lattice (2L(L-1) bonds).
    """
    bonds = []
    if mode == "literal":
        for i in range(1, L):
            for j in range(1, L):
                bonds.append(((i, j), (i, j + 1)))
                bonds.append(((i, j), (i + 1, j)))
    else:
        for i in range(1, L + 1):
            for j in range(1, L):
                bonds.append(((i, j), (i, j + 1)))
        for i in range(1, L):
            for j in range(1, L + 1):
                bonds.append(((i, j), (i + 1, j)))
    return bonds


def build_lattice(L, bonds_mode="literal", include_h=True):
    """Open-boundary L x L lattice with diagonal XX+YY perturbation.

    Couplings carry the explicit factor 4; the observable is the
    z-magnetization correlation 4 S^z_{2,2} S^z_{3,3} (needs L >= 3).
    """
    if L < 2:
        raise ModelSizeError(f"lattice needs L >= 2, got L={L}")
    if bonds_mode not in LATTICE_BOND_MODES:
        raise SpecificationError(f"unknown lattice_bonds {bonds_mode!r}")
    spec = ModelSpec("lattice", L, lattice_bonds=bonds_mode, includes_symmetry_breaker=include_h)
    basis = SectorBasis.build(spec.num_spins, spec.total_sz)

    h0 = OperatorBuilder(basis)
    if include_h:
        h0.add_sz(_lattice_site(L, 1, 2), 0.16)
    bond_sites = []
    for (i1, j1), (i2, j2) in _lattice_h0_bonds(L, bonds_mode):
        a, b = _lattice_site(L, i1, j1), _lattice_site(L, i2, j2)
        h0.add_heisenberg(a, b, 4.0)
        bond_sites.append((a, b))

    v = OperatorBuilder(basis)
    for i in range(1, L):
        for j in range(1, L):
            v.add_xx_yy(_lattice_site(L, i, j), _lattice_site(L, i + 1, j + 1), 4.0)
            v.add_xx_yy(_lattice_site(L, i + 1, j), _lattice_site(L, i, j + 1), 4.0)

    obs = None
    if L >= 3:
        o = OperatorBuilder(basis)
        o.add_szsz(_lattice_site(L, 2, 2), _lattice_site(L, 3, 3), 4.0)
        obs = o.build()

    model = Model(spec, basis, h0.build(), v.build(), obs, "zz_corr", tuple(bond_sites))
    return model


def build_model(spec: ModelSpec):
    """Dispatch a ModelSpec to its builder."""
    if spec.kind == "cross_ladder":
        return build_cross_ladder(spec.L, include_h=spec.includes_symmetry_breaker)
    if spec.kind == "chain_ladder":
        return build_chain_ladder(spec.L, include_h=spec.includes_symmetry_breaker)
    return build_lattice(
        spec.L, bonds_mode=spec.lattice_bonds, include_h=spec.includes_symmetry_breaker
    )


def observable_min_shift(op: SparseHermitian):
    """Smallest eigenvalue of an operator diagonal in the product basis.

    Used to shift S_q so the initial-state weight S_q - kappa is positive
    semidefinite.  Raises if the operator has off-diagonal entries.
    """
    off = op.matrix - sp.diags(op.matrix.diagonal(), format="csr")
    if off.nnz and np.abs(off.data).max() > 0:
        raise SpecificationError("operator is not diagonal in the product basis")
    return float(op.matrix.diagonal().real.min())


def initial_state_spec(model_spec: ModelSpec, window=None, filter=None):
    """Declarative initial state for a model; nothing is realized here.

    Parameters
    ----------
    window : dict with keys ``E`` and ``dE``, optional
        Energy window of the unperturbed Hamiltonian (cross ladder only).
    filter : dict with key ``sigma_E``, optional
        Gaussian energy filter width (lattice only).
    """
    kind = model_spec.kind
    if kind == "cross_ladder":
        if filter is not None:
            raise SpecificationError("cross_ladder takes an energy window, not a filter")
        if window is None:
            window = {"E": 0.0, "dE": math.inf}
        de = float(window["dE"])
        if de <= 0:
            raise SpecificationError("window half-width must be positive")
        return StateSpec(kind, "windowed_shifted_observable", (float(window["E"]), de))
    if kind == "chain_ladder":
        if window is not None or filter is not None:
            raise SpecificationError(
                "chain_ladder autocorrelation takes neither window nor filter"
            )
        # zeta-linear response reading of rho ~ 1 + zeta*J: report
        # C_J(t) = Tr{J(t) J} / D directly, zeta never materialized
        return StateSpec(kind, "current_autocorrelation")
    if window is not None:
        raise SpecificationError("lattice takes a Gaussian filter, not a window")
    if filter is None:
        raise SpecificationError("lattice initial state needs filter={'sigma_E': ...}")
    sig = float(filter["sigma_E"])
    if sig <= 0:
        raise SpecificationError("sigma_E must be positive")
    return StateSpec(kind, "filtered_projected_correlation", None, sig, ((2, 2), (3, 3)))
