"""Spectral routines for sparse Hermitian operators.

Exact diagonalization below a configurable dimension cap, Lanczos-based
Krylov time propagation with adaptive sub-stepping, Chebyshev expansions
of Gaussian / soft-window filters, eigenbasis window projectors and the
mean level spacing.
"""

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla
from scipy.special import erf

from .errors import BoundsError, CapacityError, PropagationError, WindowError

ED_CAP_DEFAULT = 20000


@dataclass(frozen=True)
class Spectrum:
    """Eigenvalues (ascending) and optional eigenvectors of a Hermitian operator."""

    eigenvalues: np.ndarray = field(repr=False)
    eigenvectors: np.ndarray = field(repr=False, default=None)  # columns
    basis: object = None

    @property
    def dim(self):
        return self.eigenvalues.size

    def vector(self, k):
        if self.eigenvectors is None:
            raise ValueError("spectrum was computed without eigenvectors")
        return self.eigenvectors[:, k]

    def to_text(self):
        return "\n".join(f"{e:.17g}" for e in self.eigenvalues) + "\n"


def exact_diag(H, want_vectors=True, cap=ED_CAP_DEFAULT):
    """Full spectrum of a SparseHermitian via dense diagonalization.

    A real symmetric path is used automatically when the operator has no
    imaginary entries.  Dimensions above `cap` raise CapacityError.
    """
    if H.dim > cap:
        raise CapacityError(f"dim {H.dim} exceeds the ED cap {cap}")
    a = H.toarray()
    if np.abs(a.imag).max(initial=0.0) == 0.0:
        a = a.real
    if want_vectors:
        w, z = np.linalg.eigh(a)
        return Spectrum(w, z, H.basis)
    w = np.linalg.eigvalsh(a)
    return Spectrum(w, None, H.basis)


def _lanczos(matvec, v0, m, reorth=True):
    """Lanczos tridiagonalization with optional full reorthogonalization.

    Returns (alpha, beta, V, residual_norm): alpha has k <= m entries,
    beta the k-1 inner off-diagonals, V the orthonormal basis (n, k) and
    residual_norm the norm of the would-be (k+1)-th off-diagonal (tiny on
    invariant-subspace breakdown).
    """
    n = v0.size
    nrm = np.linalg.norm(v0)
    if nrm == 0:
        raise ValueError("Lanczos start vector is zero")
    m = min(m, n)
    V = np.empty((n, m), dtype=np.complex128)
    alpha = np.empty(m)
    beta = np.empty(max(m - 1, 0))
    V[:, 0] = np.asarray(v0, dtype=np.complex128) / nrm
    w = matvec(V[:, 0])
    alpha[0] = np.vdot(V[:, 0], w).real
    w = w - alpha[0] * V[:, 0]
    res = np.linalg.norm(w)
    built = 1
    for k in range(1, m):
        scale = np.abs(alpha[:built]).max() + (beta[: built - 1].max() if built > 1 else 0.0)
        if res <= 1e-14 * max(scale, 1e-300):
            break
        beta[k - 1] = res
        V[:, k] = w / res
        if reorth:
            V[:, k] -= V[:, :k] @ (V[:, :k].conj().T @ V[:, k])
            V[:, k] /= np.linalg.norm(V[:, k])
        w = matvec(V[:, k])
        alpha[k] = np.vdot(V[:, k], w).real
        w = w - alpha[k] * V[:, k] - beta[k - 1] * V[:, k - 1]
        if reorth:
            w = w - V[:, : k + 1] @ (V[:, : k + 1].conj().T @ w)
        res = np.linalg.norm(w)
        built = k + 1
    return alpha[:built], beta[: built - 1], V[:, :built], res


def spectral_bounds(H, iters=100, pad=0.05, seed=0):
    """Estimated [E_min, E_max] of H from extremal Lanczos with safety padding."""
    rng = np.random.default_rng(seed)
    v0 = rng.standard_normal(H.dim) + 1j * rng.standard_normal(H.dim)
    alpha, beta, _, _ = _lanczos(H.apply, v0, min(iters, H.dim))
    if alpha.size == 1:
        lo = hi = alpha[0]
    else:
        ritz = sla.eigh_tridiagonal(alpha, beta, eigvals_only=True)
        lo, hi = ritz[0], ritz[-1]
    span = hi - lo
    if not np.isfinite(span):
        raise BoundsError("Lanczos bound estimation produced non-finite values")
    if span == 0.0:
        span = max(abs(hi), 1.0)
    return lo - pad * span, hi + pad * span


def _expm_tridiag_apply(alpha, beta, scale):
    """First column of exp(scale * T) for the real tridiagonal T."""
    if alpha.size == 1:
        return np.array([np.exp(scale * alpha[0])])
    w, z = sla.eigh_tridiagonal(alpha, beta)
    return z @ (np.exp(scale * w) * z[0, :].conj())


def krylov_propagate(H, psi, dt, krylov_dim=30, tol=1e-10, _depth=0, _max_depth=40):
    """psi(t+dt) ~ exp(-i H dt) psi via a Lanczos Krylov space.

    The defect-based error estimate beta_{m+1} * |dt| * |y_m| triggers
    adaptive halving of the step; PropagationError carries the achieved
    residual when the recursion depth runs out.
    """
    if dt == 0.0:
        return psi.astype(np.complex128, copy=True)
    if not np.isfinite(dt):
        raise ValueError("dt must be finite")
    nrm = np.linalg.norm(psi)
    if nrm == 0.0:
        return psi.astype(np.complex128, copy=True)
    m = max(2, min(krylov_dim, H.dim))
    alpha, beta, V, res = _lanczos(H.apply, psi, m)
    y = _expm_tridiag_apply(alpha, beta, -1j * dt)
    y_half = _expm_tridiag_apply(alpha, beta, -0.5j * dt)
    est = abs(dt) * res * max(abs(y[-1]), abs(y_half[-1]))
    if est <= tol:
        return nrm * (V @ y)
    if _depth >= _max_depth:
        raise PropagationError(
            f"Krylov propagation failed to reach tol={tol:g}", residual=est
        )
    half = krylov_propagate(H, psi, dt / 2, krylov_dim, tol / 2, _depth + 1, _max_depth)
    return krylov_propagate(H, half, dt / 2, krylov_dim, tol / 2, _depth + 1, _max_depth)


def _chebyshev_coefficients(f, lo, hi, order):
    """Chebyshev interpolation coefficients of f on [lo, hi]."""
    theta = np.pi * (np.arange(order) + 0.5) / order
    x = np.cos(theta)
    fx = f(0.5 * (hi - lo) * x + 0.5 * (hi + lo))
    k = np.arange(order)[:, None]
    c = (2.0 / order) * (np.cos(k * theta[None, :]) @ fx)
    c[0] *= 0.5
    return c


def _chebyshev_truncation(f, lo, hi, tol, max_order):
    """Coefficients truncated to the shortest series meeting `tol` on a grid."""
    order = 64
    grid = np.linspace(lo, hi, 2001)
    target = f(grid)
    scaled = (2.0 * grid - (hi + lo)) / (hi - lo)
    while True:
        c = _chebyshev_coefficients(f, lo, hi, order)
        approx = np.polynomial.chebyshev.chebval(scaled, c)
        if np.abs(approx - target).max() <= tol:
            # shrink to the first length that still satisfies the tolerance
            kept = order
            while kept > 8:
                trial = np.polynomial.chebyshev.chebval(scaled, c[: kept - 8])
                if np.abs(trial - target).max() > tol:
                    break
                kept -= 8
            return c[:kept]
        order *= 2
        if order > max_order:
            raise BoundsError(
                f"Chebyshev expansion did not reach tol={tol:g} at order {max_order}"
            )


def _chebyshev_apply(H, psi, coeffs, lo, hi):
    """Clenshaw-style evaluation of sum_k c_k T_k(H_scaled) psi."""
    center = 0.5 * (hi + lo)
    halfspan = 0.5 * (hi - lo)

    def hs(v):
        return (H.apply(v) - center * v) / halfspan

    t_prev = psi.astype(np.complex128, copy=True)
    out = coeffs[0] * t_prev
    if coeffs.size == 1:
        return out
    t_cur = hs(t_prev)
    out = out + coeffs[1] * t_cur
    for c in coeffs[2:]:
        t_next = 2.0 * hs(t_cur) - t_prev
        out = out + c * t_next
        t_prev, t_cur = t_cur, t_next
    return out


def chebyshev_gaussian_filter(H, psi, sigma_e, tol=1e-8, bounds=None, max_order=1 << 14):
    """Apply exp(-H^2 / (2 sigma_e^2)) to psi via a Chebyshev expansion.

    Spectral bounds are taken from extremal Lanczos (5% padding) unless
    given; the expansion order is grown until the scalar approximation
    error on the spectral interval is below `tol`.
    """
    if sigma_e <= 0:
        raise ValueError("sigma_e must be positive")
    lo, hi = bounds if bounds is not None else spectral_bounds(H)
    coeffs = _chebyshev_truncation(
        lambda x: np.exp(-(x**2) / (2.0 * sigma_e**2)), lo, hi, tol, max_order
    )
    return _chebyshev_apply(H, psi, coeffs, lo, hi)


def chebyshev_window_filter(
    H, psi, E, dE, edge_width=None, tol=1e-6, bounds=None, max_order=1 << 15
):
    """Soft-edged approximation of the energy-window projector P_{E,dE}.

    Substitutes for the exact eigenbasis projector beyond the ED cap; the
    indicator is smoothed over `edge_width` (default dE/20) so a finite
    Chebyshev order suffices.
    """
    if dE <= 0:
        raise WindowError("window half-width must be positive")
    w = dE / 20.0 if edge_width is None else float(edge_width)
    lo, hi = bounds if bounds is not None else spectral_bounds(H)

    def f(x):
        a = (x - (E - dE)) / (math.sqrt(2.0) * w)
        b = (x - (E + dE)) / (math.sqrt(2.0) * w)
        return 0.5 * (erf(a) - erf(b))

    coeffs = _chebyshev_truncation(f, lo, hi, tol, max_order)
    return _chebyshev_apply(H, psi, coeffs, lo, hi)


@dataclass(frozen=True)
class WindowProjector:
    """Rank-r projector onto unperturbed eigenstates inside |E_nu - E| < dE."""

    center: float
    half_width: float
    eigenvalues: np.ndarray = field(repr=False)
    vectors: np.ndarray = field(repr=False)  # (dim, rank) eigenvector columns

    @property
    def rank(self):
        return self.vectors.shape[1]

    @property
    def dim(self):
        return self.vectors.shape[0]

    def apply(self, psi):
        return self.vectors @ (self.vectors.conj().T @ psi)

    def matrix(self):
        return self.vectors @ self.vectors.conj().T

    def compress(self, op):
        """Represent a SparseHermitian (or dense matrix) on the window subspace."""
        a = op.toarray() if hasattr(op, "toarray") else np.asarray(op)
        return self.vectors.conj().T @ a @ self.vectors


def window_projector(spectrum: Spectrum, E, dE):
    """Projector handle onto the |E_nu - E| < dE eigenstates of `spectrum`."""
    if spectrum.eigenvectors is None:
        raise WindowError("window projector needs a spectrum with eigenvectors")
    if dE <= 0:
        raise WindowError("window half-width must be positive")
    mask = np.abs(spectrum.eigenvalues - E) < dE
    if not mask.any():
        raise WindowError(f"no eigenvalues inside |E - {E}| < {dE}")
    idx = np.flatnonzero(mask)
    return WindowProjector(
        float(E), float(dE), spectrum.eigenvalues[idx], spectrum.eigenvectors[:, idx]
    )


def mean_level_spacing(spectrum, window=None):
    """(E_max - E_min) / (N - 1) over the eigenvalues inside the window."""
    eigs = spectrum.eigenvalues if isinstance(spectrum, Spectrum) else np.asarray(spectrum)
    if window is not None:
        E, dE = window
        eigs = eigs[np.abs(eigs - E) < dE]
    if eigs.size < 2:
        raise WindowError("mean level spacing needs at least two levels in the window")
    return float((eigs.max() - eigs.min()) / (eigs.size - 1))
