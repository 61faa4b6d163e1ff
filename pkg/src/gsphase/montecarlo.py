"""Ensemble statistics of the terminal phase and the 2*pi randomness test."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import NamedTuple, Sequence

import numpy as np
from scipy import stats

from .errors import DegenerateEnsembleError, InvalidParameterError, TooFewSamplesError
from .params import DerivedParams, LaserParams, PumpWaveform
from .rate_solver import (
    DEFAULT_DT,
    DEFAULT_MAX_PERIODS,
    DEFAULT_TOL,
    ReferenceTrajectory,
    continue_reference,
    settle_periodic,
    steps_per_period,
)
from .sde import NoiseFlags, simulate_phases

TWO_PI = 2.0 * math.pi
HIST_BINS = 201
HIST_HALF_WIDTH = 5.0  # in units of sigma


@dataclass(frozen=True)
class EnsembleConfig:
    n_traj: int = 50_000
    master_seed: int = 1
    dt: float = DEFAULT_DT
    flags: NoiseFlags = field(default_factory=NoiseFlags)

    def __post_init__(self) -> None:
        if self.n_traj < 2:
            raise InvalidParameterError("n_traj", f"must be >= 2, got {self.n_traj}")
        if not 0 <= self.master_seed < 2**64:
            raise InvalidParameterError("master_seed", "must be a 64-bit unsigned integer")
        if not self.dt > 0:
            raise InvalidParameterError("dt", f"must be > 0, got {self.dt!r}")


@dataclass(frozen=True, eq=False)
class Histogram:
    edges: np.ndarray
    counts: np.ndarray

    @property
    def total(self) -> int:
        return int(self.counts.sum())


@dataclass(frozen=True, eq=False)
class EnsembleStats:
    n_traj: int
    sigma_phi: float
    mean_phi: float
    stderr_sigma: float
    skewness: float
    excess_kurtosis: float
    ks_distance: float
    histogram: Histogram
    passes_2pi: bool
    samples: np.ndarray | None = None

    def same_values(self, other: "EnsembleStats") -> bool:
        scalars = ("n_traj", "sigma_phi", "mean_phi", "stderr_sigma", "skewness", "excess_kurtosis", "ks_distance", "passes_2pi")
        same = all(_same(getattr(self, k), getattr(other, k)) for k in scalars)
        return (
            same
            and np.array_equal(self.histogram.edges, other.histogram.edges)
            and np.array_equal(self.histogram.counts, other.histogram.counts)
        )


def _same(a, b) -> bool:
    if isinstance(a, float) and math.isnan(a):
        return isinstance(b, float) and math.isnan(b)
    return a == b


class Gaussianity(NamedTuple):
    skewness: float
    excess_kurtosis: float
    ks_distance: float
    degenerate: bool


def gaussianity(samples: Sequence[float]) -> Gaussianity:
    """Moment and Kolmogorov-Smirnov checks against the fitted normal."""
    x = np.asarray(samples, dtype=float)
    if x.size < 100:
        raise TooFewSamplesError(f"need at least 100 samples, got {x.size}")
    sd = float(np.std(x))
    if sd == 0.0:
        return Gaussianity(math.nan, math.nan, math.nan, True)
    skew = float(stats.skew(x))
    kurt = float(stats.kurtosis(x))
    ks = float(stats.kstest(x, "norm", args=(float(np.mean(x)), float(np.std(x, ddof=1)))).statistic)
    return Gaussianity(skew, kurt, ks, False)


def randomness_criterion(stats_: EnsembleStats) -> bool:
    """True when the phase spread exceeds 2*pi.

    The interference phase of two pulses one period apart is the phase
    accumulated over that period, so the spread to test is sigma_phi(T_p)
    itself, not sqrt(2) times it.
    """
    return bool(stats_.sigma_phi > TWO_PI)


def histogram(phases: np.ndarray, bins: int = HIST_BINS) -> Histogram:
    mean = float(np.mean(phases))
    sd = float(np.std(phases, ddof=1))
    half = HIST_HALF_WIDTH * sd if sd > 0 else 1.0
    edges = np.linspace(mean - half, mean + half, bins + 1)
    clipped = np.clip(phases, edges[0], edges[-1])
    counts, _ = np.histogram(clipped, bins=edges)
    return Histogram(edges=edges, counts=counts)


def summarize(phases: np.ndarray, flags: NoiseFlags | None = None, keep_samples: bool = False) -> EnsembleStats:
    """Aggregate terminal phases; the order of ``phases`` fixes the result."""
    phases = np.ascontiguousarray(phases, dtype=float)
    n = phases.size
    if n < 2:
        raise InvalidParameterError("phases", "need at least two samples")
    sigma = float(np.std(phases, ddof=1))
    if sigma == 0.0 and flags is not None and flags.any:
        raise DegenerateEnsembleError("all terminal phases are identical although noise is enabled")
    if n >= 100:
        g = gaussianity(phases)
    else:
        g = Gaussianity(math.nan, math.nan, math.nan, sigma == 0.0)
    st = EnsembleStats(
        n_traj=n,
        sigma_phi=sigma,
        mean_phi=float(np.mean(phases)),
        stderr_sigma=sigma / math.sqrt(2.0 * (n - 1)),
        skewness=g.skewness,
        excess_kurtosis=g.excess_kurtosis,
        ks_distance=g.ks_distance,
        histogram=histogram(phases),
        passes_2pi=bool(sigma > TWO_PI),
        samples=phases if keep_samples else None,
    )
    return st


def run_ensemble(
    p: LaserParams,
    d: DerivedParams,
    w: PumpWaveform,
    cfg: EnsembleConfig,
    threads: int | None = None,
    ref: ReferenceTrajectory | None = None,
    keep_samples: bool = False,
    max_periods: int = DEFAULT_MAX_PERIODS,
    tol: float = DEFAULT_TOL,
) -> EnsembleStats:
    """Settle the limit cycle and integrate ``cfg.n_traj`` stochastic periods.

    Trajectory ``i`` draws from stream ``(cfg.master_seed, i)``; the result
    is identical for any ``threads``.
    """
    if ref is None:
        ref = settle_periodic(p, d, w, dt=cfg.dt, max_periods=max_periods, tol=tol)
    phases = simulate_phases(ref, p, d, cfg.flags, cfg.master_seed, cfg.n_traj, threads=threads)[:, 0]
    return summarize(phases, cfg.flags, keep_samples=keep_samples)


@dataclass(frozen=True)
class VarianceCurve:
    times: np.ndarray
    variance: np.ndarray
    stderr: np.ndarray
    N_ref: float
    Q_ref: float


def constant_drive_variance(
    p: LaserParams,
    d: DerivedParams,
    current: float,
    times: Sequence[float],
    cfg: EnsembleConfig,
    warmup: float = 0.0,
    threads: int | None = None,
) -> VarianceCurve:
    """Variance of the phase increment over ``times`` under constant drive.

    The deterministic laser is first brought to its stationary state; the
    stochastic ensemble then runs for ``warmup`` seconds so that its
    fluctuations are themselves stationary before increments are measured.
    The stderr column is the normal-theory standard error of a variance.
    """
    times = np.asarray(times, dtype=float)
    if np.any(times < 0) or np.any(np.diff(times) <= 0):
        raise InvalidParameterError("times", "must be non-negative and strictly ascending")
    dt = cfg.dt
    settle_window = 100e-12
    w = PumpWaveform(I_b=current, I_p=0.0, f_p=1.0 / settle_window)
    base = settle_periodic(p, d, w, dt=dt, max_periods=2000)
    k0 = int(round(warmup / dt))
    rec = k0 + np.array([steps_per_period(t, dt) if t > 0 else 0 for t in times], dtype=np.int64)
    n_total = int(rec[-1])
    ref = continue_reference(base, p, d, np.full(max(n_total, 1), float(current)))
    rec_all = np.concatenate(([k0], rec))
    phases = simulate_phases(ref, p, d, cfg.flags, cfg.master_seed, cfg.n_traj, record_steps=rec_all, threads=threads)
    incr = phases[:, 1:] - phases[:, :1]
    var = np.var(incr, axis=0, ddof=1)
    n = cfg.n_traj
    return VarianceCurve(
        times=times,
        variance=var,
        stderr=var * math.sqrt(2.0 / (n - 1)),
        N_ref=float(ref.N[0]),
        Q_ref=float(ref.Q[0]),
    )
