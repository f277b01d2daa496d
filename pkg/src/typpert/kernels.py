"""Response kernels and the prediction equation.

The perturbed expectation value is interpolated between the unperturbed
curve and its long-time value by the squared magnitude of a scalar kernel
g(t):

    out(t) = longtime + |g(t)|^2 * (unperturbed(t) - longtime)

Three kernel families with a theoretical basis are provided (exponential
weak-coupling decay ``g1``, Bessel strong-coupling decay ``g2`` and the
two-rate interpolation ``g3``) plus two ad-hoc comparison shapes (Gaussian
and Lorentzian in lambda*t).  All kernels are even in t, equal 1 at t=0
and are bounded by 1 in magnitude.
"""

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import j1 as _scipy_j1

from .errors import SpecificationError
from .series import TimeSeries

KERNEL_TAGS = ("g1", "g2", "g3", "gauss", "lorentz")

# relative closeness of Gamma to gamma_0 that switches g3 to its pole limit
_G3_POLE_BAND = 1e-9


def bessel_j1(x):
    """Bessel function of the first kind, order 1 (delegates to SciPy's
    Cephes implementation; accuracy validated against independent series
    and asymptotic oracles in the test suite)."""
    return _scipy_j1(x)


@dataclass(frozen=True)
class ResponseParams:
    """Kernel parameter set {sigma^2(0), Delta_v, epsilon, lambda}.

    sigma2_0 is the variance density of perturbation matrix elements at
    zero energy difference, delta_v the decay scale of the perturbation
    profile, epsilon the mean level spacing and lam the dimensionless
    perturbation strength.
    """

    sigma2_0: float
    delta_v: float
    epsilon: float
    lam: float = 0.0

    def __post_init__(self):
        if self.sigma2_0 < 0:
            raise SpecificationError("sigma2_0 must be >= 0")
        if self.delta_v <= 0:
            raise SpecificationError("delta_v must be > 0")
        if self.epsilon <= 0:
            raise SpecificationError("epsilon must be > 0")
        if self.lam < 0:
            raise SpecificationError("lambda must be >= 0")

    @property
    def gamma_rate(self):
        """Weak-coupling decay rate Gamma = 2 pi lambda^2 sigma^2(0) / epsilon."""
        return 2.0 * math.pi * self.lam**2 * self.sigma2_0 / self.epsilon

    @property
    def gamma_freq(self):
        """Strong-coupling frequency gamma = lambda sqrt(8 Delta_v sigma^2(0) / epsilon)."""
        return self.lam * math.sqrt(8.0 * self.delta_v * self.sigma2_0 / self.epsilon)

    @property
    def gamma_zero(self):
        """Unshifted two-rate prefactor gamma_0 = 2 Delta_v / pi."""
        return 2.0 * self.delta_v / math.pi

    @property
    def gamma_pm(self):
        """(gamma_minus, gamma_plus) = gamma_0 (1 -+ sqrt(1 - Gamma/gamma_0)).

        Complex for Gamma > gamma_0 (overdamped branch); the two values are
        then conjugate so every kernel expression built from them is real.
        """
        g0 = self.gamma_zero
        s = np.sqrt(complex(1.0 - self.gamma_rate / g0))
        return g0 * (1.0 - s), g0 * (1.0 + s)

    @property
    def is_overdamped(self):
        return self.gamma_rate > self.gamma_zero

    def lambda_c(self):
        return lambda_c(self.sigma2_0, self.delta_v, self.epsilon)

    def with_lambda(self, lam):
        return ResponseParams(self.sigma2_0, self.delta_v, self.epsilon, lam)


def lambda_c(sigma2_0, delta_v, epsilon):
    """Crossover strength sqrt(2 Delta_v epsilon / (pi^2 sigma^2(0)))."""
    if sigma2_0 <= 0:
        raise SpecificationError("lambda_c is undefined for sigma2_0 = 0")
    return math.sqrt(2.0 * delta_v * epsilon / (math.pi**2 * sigma2_0))


def _as_abs_t(t):
    t = np.asarray(t, dtype=float)
    return np.abs(np.atleast_1d(t)), t.ndim == 0


def g1(t, params: ResponseParams):
    """Exponential weak-coupling kernel exp(-Gamma |t| / 2)."""
    at, scalar = _as_abs_t(t)
    out = np.exp(-0.5 * params.gamma_rate * at)
    return float(out[0]) if scalar else out


def g2(t, params: ResponseParams):
    """Bessel strong-coupling kernel 2 J1(gamma t) / (gamma t), value 1 at t=0."""
    at, scalar = _as_abs_t(t)
    x = params.gamma_freq * at
    out = np.ones_like(x)
    nz = x > 0
    out[nz] = 2.0 * bessel_j1(x[nz]) / x[nz]
    return float(out[0]) if scalar else out


def g3(t, params: ResponseParams):
    """Two-rate kernel combining the decay constants gamma_-,0,+.

    For Gamma -> 0 it reduces to g1; at the double root Gamma = gamma_0
    the analytic limit exp(-g0 t) (1 + g0 t + (g0 t)^2 / 4) is used; past
    it (overdamped) the conjugate-pair expression stays real and the real
    part is returned.
    """
    at, scalar = _as_abs_t(t)
    gam = params.gamma_rate
    g0 = params.gamma_zero
    if gam == 0.0:
        out = np.ones_like(at)
        return float(out[0]) if scalar else out
    if abs(g0 - gam) < _G3_POLE_BAND * g0:
        x = g0 * at
        out = np.exp(-x) * (1.0 + x + 0.25 * x**2)
    else:
        gm, gp = params.gamma_pm
        num = (
            (gp - 0.5 * gam) * np.exp(-gm * at)
            + (gm - 0.5 * gam) * np.exp(-gp * at)
            - gam * np.exp(-g0 * at)
        )
        out = (num / (2.0 * (g0 - gam))).real
    out = np.where(at == 0.0, 1.0, out)
    return float(out[0]) if scalar else out


def g_adhoc(t, kind, alpha, lam):
    """Ad-hoc comparison kernels without a theoretical basis.

    gauss:   exp(-alpha (lambda t)^2)
    lorentz: 1 / (1 + alpha (lambda t)^2)
    """
    if alpha <= 0:
        raise SpecificationError("alpha must be > 0")
    at, scalar = _as_abs_t(t)
    x = alpha * (lam * at) ** 2
    if kind == "gauss":
        out = np.exp(-x)
    elif kind == "lorentz":
        out = 1.0 / (1.0 + x)
    else:
        raise SpecificationError(f"unknown ad-hoc kernel {kind!r}")
    return float(out[0]) if scalar else out


@dataclass(frozen=True)
class KernelKind:
    """Kernel family tag plus the free parameter of the ad-hoc shapes."""

    tag: str
    alpha: float = None

    def __post_init__(self):
        if self.tag not in KERNEL_TAGS:
            raise SpecificationError(f"unknown kernel tag {self.tag!r}")
        if self.tag in ("gauss", "lorentz"):
            if self.alpha is not None and self.alpha <= 0:
                raise SpecificationError("alpha must be > 0 for ad-hoc kernels")

    @property
    def is_adhoc(self):
        return self.tag in ("gauss", "lorentz")

    def evaluate(self, t, params: ResponseParams):
        if self.tag == "g1":
            return g1(t, params)
        if self.tag == "g2":
            return g2(t, params)
        if self.tag == "g3":
            return g3(t, params)
        if self.alpha is None:
            raise SpecificationError(f"{self.tag} kernel needs alpha")
        return g_adhoc(t, self.tag, self.alpha, params.lam)


def predict(unperturbed: TimeSeries, longtime, kernel: KernelKind, params: ResponseParams):
    """Perturbed dynamics predicted from the unperturbed curve.

    out(t) = longtime + |g(t)|^2 (unperturbed(t) - longtime), evaluated
    pointwise on the input grid.  With sigma^2(0) = 0 (or lambda = 0) the
    kernel is 1 and the input is returned unchanged.
    """
    if unperturbed.times.size == 0:
        raise ValueError("empty time grid")
    g = np.asarray(kernel.evaluate(unperturbed.times, params))
    weight = np.abs(g) ** 2
    values = longtime + weight * (unperturbed.values - longtime)
    md = dict(unperturbed.metadata)
    md.update(kernel=kernel.tag, lam=params.lam, longtime=float(longtime))
    return TimeSeries(unperturbed.times, values, None, md)


def lorentz_profile(omega, sigma2_0, delta_v):
    """Lorentz-shaped perturbation profile sigma^2(0) / (1 + (omega pi / (2 Delta_v))^2).

    Its integral over omega in [0, inf) equals sigma^2(0) * Delta_v, the
    normalization behind the Delta_v definition.
    """
    if delta_v <= 0:
        raise SpecificationError("delta_v must be > 0")
    w = np.asarray(omega, dtype=float)
    out = sigma2_0 / (1.0 + (w * math.pi / (2.0 * delta_v)) ** 2)
    return float(out) if w.ndim == 0 else out
