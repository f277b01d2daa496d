"""Condition checks: windowed trace-free perturbations, sign-randomized
spectral comparisons against the Wigner semicircle, and extraction of the
perturbation profile sigma^2(omega) with exponential / Lorentzian fits.

The spectral-difference metric is the two-sample Kolmogorov-Smirnov
statistic between eigenvalue CDFs, with a null threshold calibrated by
Monte-Carlo on GOE matrices of the same rank (sign randomization is
distribution-preserving on a GOE, so correlated structure shows up as a
KS value above the null).
"""

from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import curve_fit

from .errors import FitError, WindowError
from .linalg import Spectrum, WindowProjector

PROFILE_EXCLUDE_BIN_WIDTHS = 3  # near-diagonal bins flagged, not fitted
PROFILE_COARSE_WINDOW = 5       # moving-average width of the coarse profile


def windowed_traceless(v_op, proj: WindowProjector):
    """Trace-free window restriction P V P - (Tr{P V P} / Tr{P}) P.

    Returned as a dense Hermitian matrix on the window subspace (rank x
    rank), exactly traceless by construction.
    """
    if proj.rank < 2:
        raise WindowError("trace-free restriction needs a window of rank >= 2")
    w = proj.compress(v_op)
    w = 0.5 * (w + w.conj().T)
    np.fill_diagonal(w, w.diagonal() - np.trace(w) / proj.rank)
    return w


def sign_randomize(v, seed=0):
    """Flip each matrix element's sign with probability 1/2, Hermitically.

    Every unordered index pair (diagonal included) gets an independent
    fair sign, mirrored so that the output stays Hermitian and elementwise
    absolute values are preserved.
    """
    v = np.asarray(v)
    n = v.shape[0]
    rng = np.random.default_rng(seed)
    raw = rng.integers(0, 2, size=(n, n)) * 2 - 1
    signs = np.triu(raw) + np.triu(raw, 1).T
    return v * signs


def ks_statistic(a, b):
    """Two-sample Kolmogorov-Smirnov statistic between empirical CDFs."""
    a = np.sort(np.asarray(a, dtype=float))
    b = np.sort(np.asarray(b, dtype=float))
    support = np.concatenate([a, b])
    cdf_a = np.searchsorted(a, support, side="right") / a.size
    cdf_b = np.searchsorted(b, support, side="right") / b.size
    return float(np.abs(cdf_a - cdf_b).max())


@dataclass(frozen=True)
class SpectralComparison:
    ks: float
    eigenvalues_a: np.ndarray = field(repr=False)
    eigenvalues_b: np.ndarray = field(repr=False)
    hist_a: tuple = field(repr=False, default=None)  # (edges, density)
    hist_b: tuple = field(repr=False, default=None)


def spectral_compare(a, b, bins=50):
    """Spectra of two Hermitian matrices and the KS distance between them."""
    a = np.asarray(a)
    b = np.asarray(b)
    if a.shape != b.shape:
        raise ValueError(f"dimension mismatch {a.shape} vs {b.shape}")
    ea = np.linalg.eigvalsh(a)
    eb = np.linalg.eigvalsh(b)
    lo = min(ea[0], eb[0])
    hi = max(ea[-1], eb[-1])
    ha, edges = np.histogram(ea, bins=bins, range=(lo, hi), density=True)
    hb, _ = np.histogram(eb, bins=bins, range=(lo, hi), density=True)
    return SpectralComparison(ks_statistic(ea, eb), ea, eb, (edges, ha), (edges, hb))


def goe_matrix(dim, rng):
    """Real symmetric Gaussian matrix: off-diagonal variance 1, diagonal 2."""
    g = rng.standard_normal((dim, dim))
    return (g + g.T) / np.sqrt(2.0)


def ks_null_threshold(rank, realizations=200, quantile=0.95, seed=7):
    """Monte-Carlo null for the sign-randomization test at a given rank.

    Draws GOE matrices, sign-randomizes each and returns the requested
    quantile of the KS distribution (the value an uncorrelated matrix
    would rarely exceed).
    """
    rng = np.random.default_rng(seed)
    out = np.empty(realizations)
    for k in range(realizations):
        v = goe_matrix(rank, rng)
        vt = sign_randomize(v, seed=rng.integers(1 << 31))
        out[k] = ks_statistic(np.linalg.eigvalsh(v), np.linalg.eigvalsh(vt))
    return float(np.quantile(out, quantile))


def wigner_semicircle(energy, radius):
    """Semicircle density (2 / (pi R^2)) sqrt(R^2 - E^2), zero outside |E| <= R."""
    if radius <= 0:
        raise ValueError("radius must be positive")
    e = np.asarray(energy, dtype=float)
    inside = np.abs(e) <= radius
    out = np.zeros_like(e, dtype=float)
    out[inside] = 2.0 / (np.pi * radius**2) * np.sqrt(radius**2 - e[inside] ** 2)
    return float(out) if e.ndim == 0 else out


def semicircle_radius_from_spectrum(eigenvalues):
    """Radius matched to the spectrum's second moment (<E^2> = R^2/4)."""
    return 2.0 * float(np.sqrt(np.mean(np.asarray(eigenvalues) ** 2)))


def semicircle_radius_from_matrix(v):
    """Radius 2 sqrt(dim * mean |V_mn|^2) of the comparable random matrix."""
    v = np.asarray(v)
    return 2.0 * float(np.sqrt(v.shape[0] * np.mean(np.abs(v) ** 2)))


@dataclass(frozen=True)
class ProfileEstimate:
    """Binned variance of perturbation matrix elements vs energy difference.

    `sigma2` is the per-bin mean of |V_mu,nu|^2 over all ordered index
    pairs whose |E_mu - E_nu| falls in the bin; `coarse` its moving
    average; `excluded` flags the near-diagonal bins that fits ignore.
    """

    edges: np.ndarray = field(repr=False)
    sigma2: np.ndarray = field(repr=False)
    counts: np.ndarray = field(repr=False)
    coarse: np.ndarray = field(repr=False)
    excluded: np.ndarray = field(repr=False)

    @property
    def centers(self):
        return 0.5 * (self.edges[:-1] + self.edges[1:])

    @property
    def bin_width(self):
        return float(self.edges[1] - self.edges[0])

    def to_csv(self):
        lines = ["omega,sigma2,coarse,count,excluded"]
        for c, s, g, n, x in zip(
            self.centers, self.sigma2, self.coarse, self.counts, self.excluded
        ):
            lines.append(f"{c:.17g},{s:.17g},{g:.17g},{int(n)},{int(x)}")
        return "\n".join(lines) + "\n"


def central_indices(dim, fraction):
    """Indices of the central `fraction` of an ascending spectrum."""
    keep = int(round(dim * fraction))
    lo = (dim - keep) // 2
    return np.arange(lo, lo + keep)


def perturbation_profile(v_op, spec0: Spectrum, bins=200, keep=None, block=512):
    """sigma^2(omega): variance of V's eigenbasis elements vs |E_mu - E_nu|.

    Transforms V into the eigenbasis of the unperturbed spectrum, bins
    |V_mu,nu|^2 by energy difference over uniform bins covering
    [0, omega_max], and reports per-bin means together with a moving
    average (window of 5 bins).  Bins below 3 bin widths are flagged as
    near-diagonal.  `keep` restricts to a subset of eigenstates (e.g. the
    central 60%); the transform runs in column blocks to bound memory.
    """
    if spec0.eigenvectors is None:
        raise ValueError("perturbation profile needs eigenvectors of H0")
    idx = np.arange(spec0.dim) if keep is None else np.asarray(keep)
    energies = spec0.eigenvalues[idx]
    u = spec0.eigenvectors[:, idx]
    n = idx.size
    omega_max = float(energies[-1] - energies[0])
    if omega_max <= 0:
        raise ValueError("degenerate energy range")
    edges = np.linspace(0.0, omega_max, bins + 1)
    sums = np.zeros(bins)
    counts = np.zeros(bins, dtype=np.int64)
    for start in range(0, n, block):
        cols = slice(start, min(start + block, n))
        vt = u.conj().T @ (v_op.apply(u[:, cols]))
        w = np.abs(vt) ** 2
        om = np.abs(energies[:, None] - energies[None, cols])
        s, _ = np.histogram(om, bins=edges, weights=w)
        c, _ = np.histogram(om, bins=edges)
        sums += s
        counts += c
    sigma2 = np.divide(sums, counts, out=np.zeros(bins), where=counts > 0)
    kernel = np.ones(PROFILE_COARSE_WINDOW)
    norm = np.convolve(np.ones(bins), kernel, mode="same")
    coarse = np.convolve(sigma2, kernel, mode="same") / norm
    centers = 0.5 * (edges[:-1] + edges[1:])
    excluded = centers < PROFILE_EXCLUDE_BIN_WIDTHS * (edges[1] - edges[0])
    return ProfileEstimate(edges, sigma2, counts, coarse, excluded)


def _exp_family(omega, s0, dv):
    return s0 * np.exp(-omega / dv)


def _lor_family(omega, s0, dv):
    return s0 / (1.0 + (np.pi * omega / (2.0 * dv)) ** 2)


def fit_profile(profile: ProfileEstimate, family):
    """Least-squares fit of the profile with the chosen family.

    family 'exponential': sigma^2(0) exp(-omega/Delta_v) (whose normalized
    integral equals Delta_v identically); 'lorentzian':
    sigma^2(0) / (1 + (pi omega / 2 Delta_v)^2).  Near-diagonal and empty
    bins are ignored; `residual` is the integrated squared residual over
    the fitted bins.
    """
    if family not in ("exponential", "lorentzian"):
        raise ValueError(f"unknown profile family {family!r}")
    usable = (~profile.excluded) & (profile.counts > 0)
    if usable.sum() < 10:
        raise FitError("fewer than 10 usable profile bins")
    x = profile.centers[usable]
    y = profile.sigma2[usable]
    if not (y > 0).any():
        raise FitError("degenerate profile: no positive bins")
    s0_guess = max(y.max(), 1e-300)
    pos = y > 0
    if pos.sum() >= 2:
        slope = np.polyfit(x[pos], np.log(y[pos]), 1)[0]
        dv_guess = -1.0 / slope if slope < 0 else x.max()
    else:
        dv_guess = x.max()
    dv_guess = min(max(dv_guess, 1e-6), 10 * x.max())
    fn = _exp_family if family == "exponential" else _lor_family
    try:
        popt, _ = curve_fit(
            fn, x, y, p0=(s0_guess, dv_guess),
            bounds=([0.0, 1e-12], [np.inf, np.inf]), maxfev=20000,
        )
    except RuntimeError as exc:
        raise FitError(f"profile fit did not converge: {exc}") from exc
    s0, dv = float(popt[0]), float(popt[1])
    resid = float(np.sum((y - fn(x, s0, dv)) ** 2) * profile.bin_width)
    return {"family": family, "sigma2_0": s0, "delta_v": dv, "residual": resid}
