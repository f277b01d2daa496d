"""Fixed-magnetization product basis for spin-1/2 systems.

Basis states are bitmasks over the sites: bit ``i`` set means spin up at
site ``i``.  A sector collects every configuration with a fixed number of
up spins, ordered by increasing integer value of the bitmask, so indexing
is reproducible across runs and machines.
"""

from dataclasses import dataclass, field
from math import comb

import numpy as np

from .errors import EmptySectorError


def _next_bit_permutation(state):
    """Next larger integer with the same popcount (Gosper's hack)."""
    t = (state | (state - 1)) + 1
    return t | ((((t & -t) // (state & -state)) >> 1) - 1)


@dataclass(frozen=True)
class SectorBasis:
    """All product states with a fixed total S^z.

    Attributes
    ----------
    num_spins : int
        Number of lattice sites.
    total_sz : float
        Total magnetization of the sector (integer or half-integer).
    states : np.ndarray
        Bitmasks of the sector states, strictly increasing.
    """

    num_spins: int
    total_sz: float
    states: np.ndarray = field(repr=False)
    _index: dict = field(repr=False, default=None, compare=False)

    @classmethod
    def build(cls, num_spins, total_sz=0.0):
        n_up = num_spins / 2 + total_sz
        if abs(n_up - round(n_up)) > 1e-9 or not (0 <= round(n_up) <= num_spins):
            raise EmptySectorError(
                f"sector S_z={total_sz} is empty for {num_spins} spins"
            )
        n_up = int(round(n_up))
        states = np.empty(comb(num_spins, n_up), dtype=np.int64)
        s = (1 << n_up) - 1
        last = s << (num_spins - n_up) if n_up else 0
        for k in range(states.size):
            states[k] = s
            if s == last:
                break
            s = _next_bit_permutation(s)
        index = {int(v): i for i, v in enumerate(states)}
        return cls(num_spins, total_sz, states, index)

    @property
    def dim(self):
        return self.states.size

    @property
    def n_up(self):
        return int(round(self.num_spins / 2 + self.total_sz))

    def state(self, index):
        """Bitmask of the basis state at `index`."""
        return int(self.states[index])

    def lookup(self, state):
        """Index of a bitmask within the sector; KeyError if outside."""
        return self._index[int(state)]

    def bit(self, state, site):
        """Spin at `site` of a bitmask: 1 up, 0 down."""
        return (int(state) >> site) & 1
