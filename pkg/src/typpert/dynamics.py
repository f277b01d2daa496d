"""Experiment orchestration: realize initial states, evolve under
H = H0 + lambda V across a lambda grid, and collect TimeSeries.

Windows and Gaussian filters are always constructed in the unperturbed
Hamiltonian; the evolution runs under the full perturbed one.  All
lambdas share a single canonical time grid so deviation functionals can
compare traces without interpolation.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from ._parallel import parallel_map
from .errors import SpecificationError
from .linalg import ED_CAP_DEFAULT, exact_diag
from .models import ModelSpec, build_model, initial_state_spec
from .series import TimeSeries, normalize_series  # noqa: F401  (re-export)
from .typicality import estimate_expectation, realize_state_prep

_IMAG_TOL = 1e-9


@dataclass(frozen=True)
class ExperimentPlan:
    """Declarative description of one dynamics experiment.

    The lambda list always contains 0 (the unperturbed reference); if the
    caller omitted it, it is inserted and `lambda_zero_added` records the
    fact for the run manifest.
    """

    model: ModelSpec
    lambdas: tuple
    t_max: float
    dt: float
    window: dict = None
    filter: dict = None
    method: str = "ed"
    samples: int = 1
    seed: int = 0
    ed_cap: int = ED_CAP_DEFAULT
    lambda_zero_added: bool = field(default=False)

    def __post_init__(self):
        lams = sorted({float(l) for l in self.lambdas})
        if any(l < 0 for l in lams):
            raise SpecificationError("lambda values must be >= 0")
        if not lams or lams[0] != 0.0:
            lams = [0.0] + lams
            object.__setattr__(self, "lambda_zero_added", True)
        object.__setattr__(self, "lambdas", tuple(lams))
        if self.method not in ("ed", "krylov"):
            raise SpecificationError(f"unknown method {self.method!r}")
        if self.dt <= 0 or self.t_max < self.dt:
            raise SpecificationError("need dt > 0 and t_max >= dt")
        if self.samples < 1:
            raise SpecificationError("samples must be >= 1")

    @property
    def times(self):
        n = int(round(self.t_max / self.dt)) + 1
        return self.dt * np.arange(n)


def _ed_series(H, a_op, prep, times):
    """Exact Tr{rho A(t)} through the eigenbasis of the full Hamiltonian."""
    spec = exact_diag(H, want_vectors=True)
    u, e = spec.eigenvectors, spec.eigenvalues
    a_t = u.conj().T @ (a_op.toarray() @ u)
    if prep.kind == "pair":
        rho = prep.dense_weight() / H.dim
    else:
        rho = prep.dense_weight()
        tr = np.trace(rho).real
        if abs(tr) < 1e-300:
            raise SpecificationError("initial state has zero trace")
        rho = rho / tr
    r_t = u.conj().T @ (rho @ u)
    d = a_t * r_t.T
    vals = np.empty(times.size, dtype=np.complex128)
    for k, t in enumerate(times):
        phase = np.exp(-1j * e * t)
        vals[k] = np.conj(phase) @ (d @ phase)
    scale = max(1.0, np.abs(vals.real).max())
    worst = np.abs(vals.imag).max()
    if worst > _IMAG_TOL * scale:
        raise RuntimeError(f"expectation developed imaginary part {worst:g}")
    return vals.real


def run_dynamics(plan: ExperimentPlan, threads=None):
    """One TimeSeries per lambda; the lambda=0 entry is the reference.

    The `ed` method evaluates Tr{rho A(t)} exactly (dimension permitting);
    `krylov` uses the typicality estimator with `plan.samples` random
    vectors per lambda, realized with hard eigenbasis windows below the ED
    cap and Chebyshev filters above it.
    """
    model = build_model(plan.model)
    if model.observable is None:
        raise SpecificationError("model has no observable at this size")
    state_spec = initial_state_spec(plan.model, plan.window, plan.filter)

    needs_h0_vectors = state_spec.construction == "filtered_projected_correlation" or (
        state_spec.construction == "windowed_shifted_observable"
        and not math.isinf(state_spec.window[1])
    )
    realize_method = "ed"
    h0_spectrum = None
    if needs_h0_vectors:
        if model.basis.dim <= plan.ed_cap:
            h0_spectrum = exact_diag(model.h0, want_vectors=True, cap=plan.ed_cap)
        else:
            realize_method = "chebyshev"
            if plan.method == "ed":
                raise SpecificationError(
                    "ed method above the ED cap; use method='krylov'"
                )
    prep = realize_state_prep(state_spec, model, h0_spectrum, method=realize_method)
    times = plan.times

    def run_one(item):
        k, lam = item
        h_full = model.h0 if lam == 0.0 else model.h0 + lam * model.v
        md = {
            "model": plan.model.kind, "L": plan.model.L, "lam": lam,
            "window": plan.window, "filter": plan.filter,
            "method": plan.method, "seed": plan.seed,
        }
        if plan.method == "ed":
            vals = _ed_series(h_full, model.observable, prep, times)
            md["samples"] = 0
            return lam, TimeSeries(times, vals, np.zeros_like(vals), md)
        series = estimate_expectation(
            model.observable, prep, h_full, times,
            samples=plan.samples, seed=(plan.seed, k), metadata=md,
        )
        return lam, series

    results = parallel_map(run_one, list(enumerate(plan.lambdas)), threads)
    return dict(results)
