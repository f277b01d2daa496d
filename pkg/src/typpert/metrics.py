"""Relaxation time, deviation functionals, kernel-parameter fitting and
the mesoscopic frequency-scale calculator.

The deviation between a predicted and a numerical trace is

    Delta = 1 / (tau * num(0)^2) * integral_0^tau |pred - num|^2 dt

with trapezoidal quadrature on the native grid (tau snapped down to the
grid, and the snapped value used in the normalization, so constant
offsets give exactly c^2).  Kernel fits minimize the weighted total
Delta_tot = sum_i w(lambda_i) Delta(lambda_i) with w = 1/lambda (default)
or 1/lambda^2, using a deterministic log-spaced coarse grid followed by
Nelder-Mead refinement.
"""

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.constants import hbar as HBAR
from scipy.constants import k as K_BOLTZMANN
from scipy.optimize import minimize

from .errors import (
    FitError,
    NoRelaxationError,
    NormalizationError,
    SpecificationError,
)
from .kernels import KernelKind, ResponseParams
from .series import TimeSeries, normalize_series  # re-exported

__all__ = [
    "TimeSeries",
    "normalize_series",
    "relaxation_time",
    "deviation",
    "tail_mean",
    "FitResult",
    "fit_kernel",
    "mesoscopic_estimate",
]

RELAXATION_THRESHOLD = 0.01
TAIL_FRACTION = 0.2  # horizon fraction used by the long-time estimator

# coarse-grid bounds of the fit search space
SIGMA2_BOUNDS = (1e-6, 1.0)
DELTA_V_BOUNDS = (1e-2, 1e2)
ALPHA_BOUNDS = (1e-6, 1e2)
COARSE_GRID = 32


def tail_mean(series: TimeSeries, fraction=TAIL_FRACTION):
    """Long-time value estimate: mean over the final `fraction` of the horizon."""
    n = max(1, int(round(series.values.size * fraction)))
    return float(series.values[-n:].mean())


def relaxation_time(series: TimeSeries, longtime):
    """Earliest time after which the normalized trace stays below 0.01.

    The trace is normalized as (C(t) - C_inf) / (C(0) - C_inf); the
    threshold is applied to the signed value.  The series must stay below
    the threshold over its final 10%, otherwise the horizon is too short.
    """
    c0 = series.values[0]
    if c0 == longtime:
        raise NormalizationError("C(0) equals the long-time value")
    ctil = (series.values - longtime) / (c0 - longtime)
    above = ctil >= RELAXATION_THRESHOLD
    tail = max(1, series.values.size // 10)
    if above[-tail:].any():
        raise NoRelaxationError(
            "normalized trace not settled below 0.01 over the final 10%; extend the horizon"
        )
    if not above.any():
        return float(series.times[0])
    last_above = np.flatnonzero(above)[-1]
    if last_above + 1 >= series.times.size:
        raise NoRelaxationError("trace still above threshold at the horizon")
    return float(series.times[last_above + 1])


def _deviation_arrays(times, pred, num, tau):
    num0 = num[0]
    if num0 == 0.0:
        raise NormalizationError("deviation undefined: num(0) = 0")
    if tau > times[-1] + 1e-12 * max(1.0, abs(times[-1])):
        raise ValueError(f"tau={tau} beyond the simulated horizon {times[-1]}")
    stop = int(np.searchsorted(times, tau * (1 + 1e-12) + 1e-15, side="right"))
    if stop < 2:
        raise ValueError("tau must cover at least one grid step")
    t_eff = times[stop - 1] - times[0]
    diff2 = np.abs(pred[:stop] - num[:stop]) ** 2
    return float(np.trapz(diff2, times[:stop]) / (t_eff * num0**2))


def deviation(pred: TimeSeries, num: TimeSeries, tau):
    """Normalized integrated squared deviation between two traces up to tau."""
    pred.require_same_grid(num)
    return _deviation_arrays(pred.times, pred.values, num.values, tau)


@dataclass(frozen=True)
class FitResult:
    """Outcome of a kernel fit: parameters, per-lambda deviations, Delta_tot."""

    kernel: KernelKind
    params: dict
    per_lambda: dict
    delta_tot: float
    longtimes: dict
    n_evals: int
    config: dict = field(default_factory=dict)

    def to_json_dict(self):
        return {
            "kernel": self.kernel.tag,
            "params": self.params,
            "per_lambda": {f"{lam:.17g}": d for lam, d in self.per_lambda.items()},
            "delta_tot": self.delta_tot,
            "longtimes": {f"{lam:.17g}": b for lam, b in self.longtimes.items()},
            "n_evals": self.n_evals,
            "config": self.config,
        }


def _weight(lam, weighting):
    if weighting == "inv_lambda":
        return 1.0 / lam
    if weighting == "inv_lambda_sq":
        return 1.0 / lam**2
    raise SpecificationError(f"unknown weighting {weighting!r}")


def _optimal_longtime(times, u_vals, num_vals, weight2, stop, fallback):
    """Closed-form long-time value minimizing the windowed squared residual.

    The prediction is affine in the long-time value b:
    pred = w^2 u + b (1 - w^2), so the optimum is a ratio of overlaps.
    """
    phi = (1.0 - weight2)[:stop]
    y = (num_vals - weight2 * u_vals)[:stop]
    denom = np.trapz(phi * phi, times[:stop])
    if denom < 1e-28:
        return fallback
    return float(np.trapz(phi * y, times[:stop]) / denom)


def _log_grid(bounds, n):
    return np.geomspace(bounds[0], bounds[1], n)


def fit_kernel(family: KernelKind, unperturbed: TimeSeries, perturbed: dict,
               epsilon, mode="fit", params=None, weighting="inv_lambda",
               longtime_mode="tail_mean", nm_maxiter=400):
    """Fit a kernel family against perturbed traces across a lambda set.

    Parameters
    ----------
    family : KernelKind
        g1/g2/g3 fit (sigma^2(0), Delta_v) jointly across all lambdas
        (Delta_v is unconstrained for g1 and reported as None); gauss and
        lorentz fit their single alpha.
    perturbed : dict lambda -> TimeSeries
        Numerical perturbed traces on the unperturbed grid.  A lambda=0
        entry is ignored (it is the reference itself).
    epsilon : float
        Mean level spacing, held fixed.
    mode : 'fit' or 'fixed'
        'fixed' evaluates at the given `params` (ResponseParams or
        {'sigma2_0','delta_v'} / {'alpha'}) without optimizing.
    longtime_mode : 'tail_mean' or 'fit'
        The per-lambda long-time value: tail estimate, or the closed-form
        least-squares optimum (it enters the prediction affinely).

    Optimization is a deterministic coarse scan over log-spaced parameter
    grids followed by Nelder-Mead refinement in log space.
    """
    lambdas = sorted(lam for lam in perturbed if lam > 0)
    if not lambdas:
        raise SpecificationError("need at least one positive lambda")
    times = unperturbed.times
    for lam in lambdas:
        perturbed[lam].require_same_grid(unperturbed)

    taus, stops, tails = {}, {}, {}
    for lam in lambdas:
        ser = perturbed[lam]
        tails[lam] = tail_mean(ser)
        taus[lam] = relaxation_time(ser, tails[lam])
        stops[lam] = int(np.searchsorted(times, taus[lam] * (1 + 1e-12) + 1e-15, "right"))

    u_vals = unperturbed.values
    evals = [0]

    def assemble(theta):
        """theta -> (params dict, per-lambda ResponseParams or alpha)"""
        if family.is_adhoc:
            return {"alpha": float(theta[0])}
        if family.tag == "g1":
            return {"sigma2_0": float(theta[0]), "delta_v": None}
        return {"sigma2_0": float(theta[0]), "delta_v": float(theta[1])}

    def evaluate(theta, collect=False):
        evals[0] += 1
        p = assemble(theta)
        total = 0.0
        per_lambda, longtimes = {}, {}
        for lam in lambdas:
            num_vals = perturbed[lam].values
            if family.is_adhoc:
                kern = KernelKind(family.tag, p["alpha"])
                rp = ResponseParams(1.0, 1.0, epsilon, lam)
            else:
                dv = p["delta_v"] if p["delta_v"] is not None else 1.0
                kern = KernelKind(family.tag)
                rp = ResponseParams(p["sigma2_0"], dv, epsilon, lam)
            g = np.asarray(kern.evaluate(times, rp))
            w2 = np.abs(g) ** 2
            stop = stops[lam]
            if longtime_mode == "fit":
                b = _optimal_longtime(times, u_vals, num_vals, w2, stop, tails[lam])
            else:
                b = tails[lam]
            pred = b + w2 * (u_vals - b)
            d = _deviation_arrays(times, pred, num_vals, taus[lam])
            total += _weight(lam, weighting) * d
            if collect:
                per_lambda[lam] = d
                longtimes[lam] = b
        if collect:
            return total, per_lambda, longtimes
        return total

    cfg = {
        "mode": mode, "weighting": weighting, "longtime_mode": longtime_mode,
        "epsilon": epsilon, "lambdas": [float(x) for x in lambdas],
        "taus": {f"{lam:.17g}": taus[lam] for lam in lambdas},
    }

    if mode == "fixed":
        theta = _fixed_theta(family, params)
        total, per_lambda, longtimes = evaluate(theta, collect=True)
        return FitResult(family, assemble(theta), per_lambda, total, longtimes,
                         evals[0], cfg)
    if mode != "fit":
        raise SpecificationError(f"unknown fit mode {mode!r}")

    if family.is_adhoc:
        grid = [(a,) for a in _log_grid(ALPHA_BOUNDS, 2 * COARSE_GRID)]
    elif family.tag == "g1":
        grid = [(s,) for s in _log_grid(SIGMA2_BOUNDS, 2 * COARSE_GRID)]
    else:
        grid = [(s, d)
                for s in _log_grid(SIGMA2_BOUNDS, COARSE_GRID)
                for d in _log_grid(DELTA_V_BOUNDS, COARSE_GRID)]
    best_theta = min(grid, key=evaluate)

    x0 = np.log(np.asarray(best_theta))
    res = minimize(lambda x: evaluate(np.exp(x)), x0, method="Nelder-Mead",
                   options={"xatol": 1e-6, "fatol": 1e-12, "maxiter": nm_maxiter})
    theta = np.exp(res.x)
    converged = res.success or evaluate(theta) <= evaluate(best_theta)
    if not converged:
        theta = np.asarray(best_theta)
    total, per_lambda, longtimes = evaluate(theta, collect=True)
    result = FitResult(family, assemble(theta), per_lambda, total, longtimes,
                       evals[0], cfg)
    if not res.success and not converged:
        raise FitError("simplex refinement did not converge", best=result)
    return result


def _fixed_theta(family, params):
    if params is None:
        raise SpecificationError("fixed mode needs explicit parameters")
    if isinstance(params, ResponseParams):
        params = {"sigma2_0": params.sigma2_0, "delta_v": params.delta_v}
    if family.is_adhoc:
        if family.alpha is not None:
            return (family.alpha,)
        if "alpha" not in params:
            raise SpecificationError("ad-hoc kernel needs alpha in fixed mode")
        return (params["alpha"],)
    if family.tag == "g1":
        return (params["sigma2_0"],)
    return (params["sigma2_0"], params["delta_v"])


def mesoscopic_estimate(c_v, temperature, products=None):
    """Relevant-frequency scale of a macroscopic thermal contact.

    omega_rel = sqrt(k_B C_v) * 2 T / hbar for heat capacity `c_v` (J/K)
    and temperature (K), using CODATA constants.  `products` optionally
    maps labels to (frequency_scale, tau) pairs whose products are
    returned alongside, for comparison with the model time scales.
    """
    if c_v <= 0 or temperature <= 0:
        raise SpecificationError("heat capacity and temperature must be positive")
    omega_rel = math.sqrt(K_BOLTZMANN * c_v) * 2.0 * temperature / HBAR
    out = {}
    if products:
        for label, (scale, tau) in products.items():
            out[label] = scale * tau
    return {"omega_rel": omega_rel, "products": out}
