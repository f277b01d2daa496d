"""Random-vector trace estimators, DOS and LDOS histograms.

Expectation values Tr{rho A(t)} are estimated from Haar-random vectors
|phi>: a state-construction operator B with rho = B B^dag / Tr{B B^dag}
turns each sample into |psi> = B|phi>, and the ratio of sample means
<psi(t)|A|psi(t)> / <psi|psi> is an asymptotically unbiased estimator
with error shrinking as 1/sqrt(samples * dim).  Autocorrelation traces
use the two-vector scheme <phi| e^{iHt} A e^{-iHt} B |phi>.

Spectral densities use stochastic Lanczos quadrature: the Ritz values of
a random-vector Lanczos run carry weights |<phi|ritz>|^2 whose bin sums
are unbiased estimates of the level counts.
"""

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla

from ._parallel import parallel_map
from .errors import CapacityError, SpecificationError
from .linalg import (
    Spectrum,
    _lanczos,
    chebyshev_gaussian_filter,
    chebyshev_window_filter,
    exact_diag,
    krylov_propagate,
    window_projector,
)
from .models import Model, StateSpec, observable_min_shift
from .series import TimeSeries


def sample_seed(base_seed, i):
    """Independent, reproducible seed stream for sample i."""
    return np.random.SeedSequence(base_seed, spawn_key=(i,))


def random_state(dim, seed):
    """Normalized Haar-random vector, deterministic per seed.

    Amplitudes are i.i.d. complex standard normal, normalized; the global
    phase is fixed so the first amplitude is real and non-negative (it is
    irrelevant for every estimator here, and makes dim=1 give exactly (1)).
    """
    if dim < 1:
        raise ValueError("dim must be >= 1")
    rng = np.random.default_rng(seed)
    v = rng.standard_normal(dim) + 1j * rng.standard_normal(dim)
    v /= np.linalg.norm(v)
    if abs(v[0]) > 1e-300:
        v *= np.conj(v[0]) / abs(v[0])
    return v


@dataclass(frozen=True)
class Histogram:
    """Uniform-bin histogram; in `density` mode sum(weight * width) = 1."""

    edges: np.ndarray = field(repr=False)
    weights: np.ndarray = field(repr=False)
    normalized: bool = True

    @property
    def bin_width(self):
        return float(self.edges[1] - self.edges[0])

    @property
    def centers(self):
        return 0.5 * (self.edges[:-1] + self.edges[1:])

    def integral(self):
        return float(np.sum(self.weights) * self.bin_width)

    def to_csv(self):
        lines = ["bin_center,density"]
        for c, w in zip(self.centers, self.weights):
            lines.append(f"{c:.17g},{w:.17g}")
        return "\n".join(lines) + "\n"


@dataclass(frozen=True)
class StatePrep:
    """Realized initial-state construction.

    kind 'single': rho = B B^dag (up to normalization); `apply_b` maps a
    random vector to the sample state.  kind 'pair': the autocorrelation
    Tr{B(t) B} / D of the operator applied by `apply_b`.
    `dense_weight` returns the unnormalized rho (or the bare operator for
    'pair') for exact small-dimension evaluation, or raises CapacityError.
    """

    kind: str
    dim: int
    apply_b: callable = field(repr=False)
    dense_weight: callable = field(repr=False)
    description: str = ""


def realize_state_prep(spec: StateSpec, model: Model, h0_spectrum: Spectrum = None,
                       method="ed"):
    """Turn a declarative StateSpec into a sampler / exact-weight provider.

    Windows and Gaussian filters are built in the unperturbed Hamiltonian.
    The `ed` method uses the eigendecomposition of H0 (hard energy cuts);
    `chebyshev` substitutes polynomial filters and needs no spectrum.
    """
    if spec.model_kind != model.spec.kind:
        raise SpecificationError("state spec and model kinds differ")
    dim = model.basis.dim

    if spec.construction == "current_autocorrelation":
        j = model.observable

        def apply_b(phi):
            return j.apply(phi)

        def dense_weight():
            return j.toarray()

        return StatePrep("pair", dim, apply_b, dense_weight,
                         "Tr{J(t) J} / D current autocorrelation")

    if spec.construction == "windowed_shifted_observable":
        kappa = observable_min_shift(model.observable)
        x = model.observable.diagonal().real - kappa
        sqrt_x = np.sqrt(np.maximum(x, 0.0))
        e_center, de = spec.window
        unfiltered = math.isinf(de)
        if unfiltered:
            def apply_b(phi):
                return sqrt_x * phi

            def dense_weight():
                return np.diag(x)

        elif method == "ed":
            if h0_spectrum is None or h0_spectrum.eigenvectors is None:
                raise SpecificationError("ed window realization needs an H0 spectrum with vectors")
            proj = window_projector(h0_spectrum, e_center, de)

            def apply_b(phi):
                return proj.apply(sqrt_x * phi)

            def dense_weight():
                p = proj.matrix()
                return p @ np.diag(x) @ p

        elif method == "chebyshev":
            h0 = model.h0

            def apply_b(phi):
                return chebyshev_window_filter(h0, sqrt_x * phi, e_center, de)

            def dense_weight():
                raise CapacityError("chebyshev window realization has no exact dense form")

        else:
            raise SpecificationError(f"unknown realization method {method!r}")
        win = "full spectrum" if unfiltered else f"|E - {e_center}| < {de}"
        return StatePrep("single", dim, apply_b, dense_weight,
                         f"projected shifted observable, {win}")

    if spec.construction == "filtered_projected_correlation":
        sig = spec.sigma_e
        pp = np.ones(dim)
        for (i, j) in spec.projector_sites:
            pp *= model.pup(i, j).diagonal().real
        if method == "ed":
            if h0_spectrum is None or h0_spectrum.eigenvectors is None:
                raise SpecificationError("ed filter realization needs an H0 spectrum with vectors")
            u = h0_spectrum.eigenvectors
            f = np.exp(-h0_spectrum.eigenvalues**2 / (2.0 * sig**2))

            def apply_b(phi):
                return u @ (f * (u.conj().T @ (pp * phi)))

            def dense_weight():
                fmat = (u * f) @ u.conj().T
                return fmat @ (pp[:, None] * fmat)

        elif method == "chebyshev":
            h0 = model.h0

            def apply_b(phi):
                return chebyshev_gaussian_filter(h0, pp * phi, sig)

            def dense_weight():
                raise CapacityError("chebyshev filter realization has no exact dense form")

        else:
            raise SpecificationError(f"unknown realization method {method!r}")
        return StatePrep("single", dim, apply_b, dense_weight,
                         f"Gaussian filter sigma_E={sig} on double-projected state")

    raise SpecificationError(f"unknown construction {spec.construction!r}")


def _evolve_expectations(H, psi, a_op, times, krylov_dim, tol):
    """<psi(t)|A|psi(t)> on the grid, propagating with Krylov steps."""
    out = np.empty(times.size, dtype=np.complex128)
    cur = psi
    t_prev = None
    for k, t in enumerate(times):
        cur = cur if t_prev is None else krylov_propagate(H, cur, t - t_prev, krylov_dim, tol)
        t_prev = t
        out[k] = np.vdot(cur, a_op.apply(cur))
    return out


def _evolve_pair(H, phi, b_phi, a_op, times, krylov_dim, tol):
    """<phi(t)|A|(B phi)(t)> on the grid (two-vector autocorrelation)."""
    out = np.empty(times.size, dtype=np.complex128)
    a_vec, b_vec = phi, b_phi
    t_prev = None
    for k, t in enumerate(times):
        if t_prev is not None:
            a_vec = krylov_propagate(H, a_vec, t - t_prev, krylov_dim, tol)
            b_vec = krylov_propagate(H, b_vec, t - t_prev, krylov_dim, tol)
        t_prev = t
        out[k] = np.vdot(a_vec, a_op.apply(b_vec))
    return out


def estimate_expectation(a_op, prep: StatePrep, H, times, samples=1, seed=0,
                         krylov_dim=30, tol=1e-10, threads=None, metadata=None):
    """Typicality estimate of Tr{rho A(t)} as a TimeSeries with error bars.

    For 'single' preparations the ratio-of-means estimator over samples is
    used, with a delta-method standard error; 'pair' preparations average
    the real part of the two-vector trace directly.  Identical seeds give
    bit-identical results; per-sample seeds are spawned from `seed`.
    """
    if samples < 1:
        raise ValueError("samples must be >= 1")
    times = np.asarray(times, dtype=float)

    def one_sample(i):
        phi = random_state(prep.dim, sample_seed(seed, i))
        if prep.kind == "pair":
            vals = _evolve_pair(H, phi, prep.apply_b(phi), a_op, times, krylov_dim, tol)
            return vals.real, 1.0
        psi = prep.apply_b(phi)
        norm2 = float(np.vdot(psi, psi).real)
        vals = _evolve_expectations(H, psi, a_op, times, krylov_dim, tol)
        return vals.real, norm2

    results = parallel_map(one_sample, range(samples), threads)
    nums = np.stack([r[0] for r in results])
    dens = np.array([r[1] for r in results])

    md = dict(metadata or {})
    md.update(samples=samples, seed=seed, estimator=prep.kind,
              description=prep.description)
    if prep.kind == "pair":
        # Tr{A(t) B}/D: Haar average of the two-vector form, no denominator
        values = nums.mean(axis=0)
        stderr = (nums.std(axis=0, ddof=1) / math.sqrt(samples)
                  if samples > 1 else None)
        return TimeSeries(times, values, stderr, md)
    num_mean = nums.mean(axis=0)
    den_mean = dens.mean()
    values = num_mean / den_mean
    stderr = None
    if samples > 1:
        resid = nums - values[None, :] * dens[:, None]
        stderr = resid.std(axis=0, ddof=1) / (den_mean * math.sqrt(samples))
    return TimeSeries(times, values, stderr, md)


def _slq_samples(matvec, dim, start_vectors, lanczos_cap):
    """Ritz values and weights from Lanczos runs off the given start vectors."""
    out = []
    m = min(dim, lanczos_cap)
    for v0, weight in start_vectors:
        alpha, beta, _, _ = _lanczos(matvec, v0, m)
        if alpha.size == 1:
            out.append((alpha.copy(), np.array([weight])))
            continue
        theta, z = sla.eigh_tridiagonal(alpha, beta)
        out.append((theta, weight * np.abs(z[0, :]) ** 2))
    return out


def _histogram_from_nodes(node_sets, bins, hist_range):
    lo, hi = hist_range
    edges = np.linspace(lo, hi, bins + 1)
    acc = np.zeros(bins)
    total = 0.0
    for theta, w in node_sets:
        h, _ = np.histogram(theta, bins=edges, weights=w)
        acc += h
        total += w.sum()
    width = edges[1] - edges[0]
    return Histogram(edges, acc / (total * width), True)


def dos_histogram(H, bins=100, method="ed", seed=0, samples=20,
                  lanczos_cap=400, hist_range=None, ed_cap=None):
    """Normalized density of states over [E_min, E_max].

    `ed` bins the exact spectrum; `typicality` uses stochastic Lanczos
    quadrature off `samples` random vectors (trace-estimated level counts).
    """
    if bins < 10:
        raise ValueError("bins must be >= 10")
    if method == "ed":
        kwargs = {} if ed_cap is None else {"cap": ed_cap}
        eigs = exact_diag(H, want_vectors=False, **kwargs).eigenvalues
        rng = hist_range or (eigs[0], eigs[-1])
        h, edges = np.histogram(eigs, bins=bins, range=rng, density=True)
        return Histogram(edges, h, True)
    if method != "typicality":
        raise ValueError(f"unknown method {method!r}")
    starts = [(random_state(H.dim, sample_seed(seed, i)), 1.0) for i in range(samples)]
    nodes = _slq_samples(H.apply, H.dim, starts, lanczos_cap)
    if hist_range is None:
        lo = min(t.min() for t, _ in nodes)
        hi = max(t.max() for t, _ in nodes)
        hist_range = (lo, hi)
    return _histogram_from_nodes(nodes, bins, hist_range)


def ldos_histogram(prep: StatePrep, H, bins=100, method="ed", seed=0, samples=20,
                   lanczos_cap=400, hist_range=None, ed_cap=None):
    """Level-population density of the prepared state in the eigenbasis of H.

    For 'pair' preparations (rho ~ 1 + zeta B, zeta -> 0) the populations
    reduce to the DOS, which is what is returned.
    """
    if bins < 10:
        raise ValueError("bins must be >= 10")
    if prep.kind == "pair":
        return dos_histogram(H, bins, method, seed, samples, lanczos_cap,
                             hist_range, ed_cap)
    if method == "ed":
        kwargs = {} if ed_cap is None else {"cap": ed_cap}
        spec = exact_diag(H, want_vectors=True, **kwargs)
        rho = prep.dense_weight()
        w = np.einsum("im,im->m", spec.eigenvectors.conj(),
                      rho @ spec.eigenvectors).real
        w = np.maximum(w, 0.0)
        w /= w.sum()
        rng = hist_range or (spec.eigenvalues[0], spec.eigenvalues[-1])
        edges = np.linspace(rng[0], rng[1], bins + 1)
        h, _ = np.histogram(spec.eigenvalues, bins=edges, weights=w)
        width = edges[1] - edges[0]
        return Histogram(edges, h / width, True)
    if method != "typicality":
        raise ValueError(f"unknown method {method!r}")
    starts = []
    for i in range(samples):
        phi = random_state(prep.dim, sample_seed(seed, i))
        psi = prep.apply_b(phi)
        norm2 = float(np.vdot(psi, psi).real)
        if norm2 > 1e-28:  # samples annihilated by the projector carry no weight
            starts.append((psi, norm2))
    nodes = _slq_samples(H.apply, prep.dim, starts, lanczos_cap)
    if hist_range is None:
        lo = min(t.min() for t, _ in nodes)
        hi = max(t.max() for t, _ in nodes)
        hist_range = (lo, hi)
    return _histogram_from_nodes(nodes, bins, hist_range)
