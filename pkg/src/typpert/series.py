"""Uniformly sampled expectation-value traces."""

from dataclasses import dataclass, field

import numpy as np

from .errors import GridMismatchError, NormalizationError


@dataclass(frozen=True)
class TimeSeries:
    """<A(t)> on a uniform time grid (hbar = 1) with run metadata.

    `stderr` holds the per-time sample standard error when the values come
    from a stochastic estimator, zeros when they are exact.
    """

    times: np.ndarray = field(repr=False)
    values: np.ndarray = field(repr=False)
    stderr: np.ndarray = field(repr=False, default=None)
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        t = np.asarray(self.times, dtype=float)
        v = np.asarray(self.values, dtype=float)
        if t.size != v.size:
            raise ValueError("times and values must have equal length")
        if t.size == 0:
            raise ValueError("empty time grid")
        if t.size > 1:
            dt = np.diff(t)
            if (dt <= 0).any():
                raise ValueError("times must be strictly increasing")
            if np.abs(dt - dt[0]).max() > 1e-9 * max(dt[0], 1e-300):
                raise ValueError("time grid must be uniform")
        if not np.isfinite(v).all():
            raise ValueError("series values must be finite")
        object.__setattr__(self, "times", t)
        object.__setattr__(self, "values", v)
        if self.stderr is not None:
            object.__setattr__(self, "stderr", np.asarray(self.stderr, dtype=float))

    @property
    def dt(self):
        return float(self.times[1] - self.times[0]) if self.times.size > 1 else 0.0

    def with_values(self, values, **meta):
        md = dict(self.metadata)
        md.update(meta)
        return TimeSeries(self.times, values, self.stderr, md)

    def same_grid(self, other):
        return self.times.size == other.times.size and np.array_equal(
            self.times, other.times
        )

    def require_same_grid(self, other):
        if not self.same_grid(other):
            raise GridMismatchError("time series are on different grids")

    def to_csv(self):
        lines = ["t,value,stderr"]
        err = self.stderr if self.stderr is not None else np.zeros_like(self.values)
        for t, v, e in zip(self.times, self.values, err):
            lines.append(f"{t:.17g},{v:.17g},{e:.17g}")
        return "\n".join(lines) + "\n"


def normalize_series(series: TimeSeries, mode="initial_one"):
    """Normalize a series by its t=0 value (`initial_one`) or pass through."""
    if mode == "none":
        md = dict(series.metadata)
        md["normalization"] = "none"
        return TimeSeries(series.times, series.values, series.stderr, md)
    if mode != "initial_one":
        raise ValueError(f"unknown normalization mode {mode!r}")
    c0 = series.values[0]
    if c0 == 0.0:
        raise NormalizationError("cannot normalize: value at t=0 is zero")
    md = dict(series.metadata)
    md["normalization"] = "initial_one"
    err = series.stderr / abs(c0) if series.stderr is not None else None
    return TimeSeries(series.times, series.values / c0, err, md)
