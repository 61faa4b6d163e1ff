"""Deterministic rate equations: forward-Euler stepping and limit cycles.

The noiseless trajectory is integrated with the same first-order scheme and
on the same grid as the stochastic integrator, so that the reference
quantities needed at step n are available without interpolation.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numba as nb
import numpy as np

from .errors import ConvergenceError, InvalidParameterError, NoStablePulsationError
from .params import E_CHARGE, DerivedParams, LaserParams, PumpWaveform, pump_current

log = logging.getLogger(__name__)

DEFAULT_DT = 1.0e-14
DEFAULT_TOL = 1.0e-6
DEFAULT_MAX_PERIODS = 200


class FieldState(NamedTuple):
    N: float
    Q: float
    phi: float


def physics_tuple(p: LaserParams, d: DerivedParams) -> tuple:
    """Packed constants for the compiled kernels (reciprocals precomputed)."""
    return (
        1.0 / p.tau_ph,
        1.0 / p.tau_e,
        float(p.N_tr),
        1.0 / (p.N_th - p.N_tr),
        float(p.C_sp),
        1.0 / (p.Gamma * p.tau_ph),
        p.alpha / (2.0 * p.tau_ph),
        float(d.chi_Q),
        1.0 / E_CHARGE,
        float(p.tau_e),
    )


@nb.njit(cache=True, nogil=True, error_model="numpy")
def drift(N, Q, current, dt, pv):
    """Deterministic increments (dN, dQ, dphi) over one step."""
    inv_tau_ph, inv_tau_e, n_tr, inv_span, c_sp, inv_gamma_tau_ph, phase_rate, chi_q, inv_e, _tau_e = pv
    g_lin = (N - n_tr) * inv_span
    g = g_lin * (1.0 - chi_q * Q)
    dq = (g - 1.0) * (Q * inv_tau_ph) * dt + c_sp * (N * inv_tau_e) * dt
    dphi = phase_rate * (g_lin - 1.0) * dt
    dn = current * inv_e * dt - N * inv_tau_e * dt - Q * g * inv_gamma_tau_ph * dt
    return dn, dq, dphi


@nb.njit(cache=True, nogil=True, error_model="numpy")
def _det_update(N, Q, phi, current, dt, pv):
    dn, dq, dphi = drift(N, Q, current, dt, pv)
    N = N + dn
    Q = Q + dq
    if N < 0.0:
        N = 0.0
    if Q < 0.0:
        Q = 0.0
    return N, Q, phi + dphi


@nb.njit(cache=True, nogil=True, error_model="numpy")
def integrate_grid(N, Q, phi, currents, dt, pv, out_N, out_Q, out_phi):
    """Step through ``currents``; sample k holds the state before step k.

    Returns the state after the last step.
    """
    for k in range(currents.shape[0]):
        out_N[k] = N
        out_Q[k] = Q
        out_phi[k] = phi
        N, Q, phi = _det_update(N, Q, phi, currents[k], dt, pv)
    return N, Q, phi


def det_step(
    s: FieldState, p: LaserParams, d: DerivedParams, I: float, dt: float
) -> FieldState:
    """One forward-Euler step of the noiseless equations, clamped at N, Q >= 0."""
    if not dt > 0:
        raise InvalidParameterError("dt", f"must be > 0, got {dt!r}")
    return FieldState(*_det_update(float(s.N), float(s.Q), float(s.phi), float(I), float(dt), physics_tuple(p, d)))


def steps_per_period(period: float, dt: float) -> int:
    if not dt > 0:
        raise InvalidParameterError("dt", f"must be > 0, got {dt!r}")
    ratio = period / dt
    n = int(round(ratio))
    if n < 1 or abs(ratio - n) > 1e-9 * ratio:
        raise InvalidParameterError("dt", f"must divide the period {period!r} s, got {dt!r}")
    return n


def grid_currents(w: PumpWaveform, dt: float, n_steps: int | None = None) -> np.ndarray:
    """Drive current at t_k = k dt for one period (or ``n_steps``)."""
    if n_steps is None:
        n_steps = steps_per_period(w.period, dt)
    return pump_current(w, np.arange(n_steps) * dt)


@dataclass(frozen=True, eq=False)
class ReferenceTrajectory:
    """One period of the deterministic limit cycle on the integration grid.

    ``N``, ``Q``, ``phi`` and ``current`` hold the values at t_k = k dt for
    k = 0 .. n-1, i.e. the inputs of step k; ``end`` is the state at T_p.
    The phase starts at 0 at the rising edge of the pump.
    """

    dt: float
    N: np.ndarray
    Q: np.ndarray
    phi: np.ndarray
    current: np.ndarray
    end: FieldState
    converged: bool
    warmup_periods: int

    def __len__(self) -> int:
        return self.N.shape[0]

    @property
    def samples(self) -> list[FieldState]:
        return [FieldState(float(a), float(b), float(c)) for a, b, c in zip(self.N, self.Q, self.phi)]

    def state(self, k: int) -> FieldState:
        return FieldState(float(self.N[k]), float(self.Q[k]), float(self.phi[k]))

    @property
    def times(self) -> np.ndarray:
        return np.arange(len(self)) * self.dt


def _period_change(N_new, Q_new, N_old, Q_old, N_th):
    dn = np.max(np.abs(N_new - N_old)) / N_th
    q_scale = np.max(Q_new)
    dq = np.max(np.abs(Q_new - Q_old)) / q_scale if q_scale > 0 else 0.0
    return dn, dq


def settle_periodic(
    p: LaserParams,
    d: DerivedParams,
    w: PumpWaveform,
    dt: float = DEFAULT_DT,
    max_periods: int = DEFAULT_MAX_PERIODS,
    tol: float = DEFAULT_TOL,
) -> ReferenceTrajectory:
    """Integrate from a cold start until consecutive periods agree within ``tol``.

    Raises ConvergenceError (carrying the last period) after ``max_periods``.
    """
    if max_periods < 2:
        raise ConvergenceError(f"max_periods={max_periods}: at least two periods are needed to compare")
    if dt > p.tau_ph / 10:
        raise InvalidParameterError("dt", f"must be <= tau_ph/10 = {p.tau_ph / 10!r}, got {dt!r}")
    n = steps_per_period(w.period, dt)
    currents = grid_currents(w, dt, n)
    pv = physics_tuple(p, d)

    bufs = [tuple(np.empty(n) for _ in range(3)) for _ in range(2)]
    N, Q = 0.0, 0.0
    converged = False
    cur = prev = None
    periods = 0
    for periods in range(1, max_periods + 1):
        cur = bufs[periods % 2]
        N, Q, phi_end = integrate_grid(N, Q, 0.0, currents, dt, pv, *cur)
        if prev is not None:
            dn, dq = _period_change(cur[0], cur[1], prev[0], prev[1], p.N_th)
            if dn < tol and dq < tol:
                converged = True
                break
        prev = cur

    ref = ReferenceTrajectory(
        dt=dt,
        N=cur[0].copy(),
        Q=cur[1].copy(),
        phi=cur[2].copy(),
        current=currents,
        end=FieldState(N, Q, phi_end),
        converged=converged,
        warmup_periods=periods - 1,
    )
    if not converged:
        raise ConvergenceError(
            f"no period-1 limit cycle after {max_periods} periods "
            f"(I_b={w.I_b!r} A, I_p={w.I_p!r} A, f_p={w.f_p!r} Hz)",
            trajectory=ref,
        )
    return ref


def continue_reference(
    ref: ReferenceTrajectory, p: LaserParams, d: DerivedParams, currents: np.ndarray
) -> ReferenceTrajectory:
    """Deterministic trajectory driven by ``currents``, starting at ``ref.end``."""
    n = currents.shape[0]
    N, Q, phi = (np.empty(n) for _ in range(3))
    s = ref.end
    end = integrate_grid(s.N, s.Q, 0.0, np.asarray(currents, dtype=float), ref.dt, physics_tuple(p, d), N, Q, phi)
    return ReferenceTrajectory(
        dt=ref.dt,
        N=N,
        Q=Q,
        phi=phi,
        current=np.asarray(currents, dtype=float),
        end=FieldState(*end),
        converged=ref.converged,
        warmup_periods=ref.warmup_periods,
    )


def local_maxima(Q: np.ndarray, periodic: bool = True) -> np.ndarray:
    """Indices of strict-left local maxima, treating the samples as periodic."""
    if periodic:
        left = np.roll(Q, 1)
        right = np.roll(Q, -1)
    else:
        left = np.concatenate(([np.inf], Q[:-1]))
        right = np.concatenate((Q[1:], [np.inf]))
    return np.flatnonzero((Q > left) & (Q >= right))


@dataclass(frozen=True)
class PulsationCriteria:
    """Thresholds of the stable-pulsation predicate.

    Local maxima of Q below ``pulse_fraction`` of the period peak are
    ignored. Walking the rest in time order from the peak, a maximum that
    rises above the one before it starts a new pulse; a falling sequence is
    the relaxation ringing of a single pulse. Stable pulsation means a
    converged period-1 cycle in which the carrier number crosses threshold,
    with exactly ``pulses`` pulses and a peak at least ``min_contrast``
    times the period minimum of Q.
    """

    pulses: int = 1
    pulse_fraction: float = 0.5
    min_contrast: float = 10.0


def count_pulses(Q: np.ndarray, pulse_fraction: float = 0.5) -> int:
    """Pulses per period; decaying ringing after a pulse does not count."""
    Q = np.asarray(Q, dtype=float)
    peak_at = int(np.argmax(Q))
    peak = float(Q[peak_at])
    if peak <= 0:
        return 0
    idx = local_maxima(Q)
    idx = idx[Q[idx] >= pulse_fraction * peak]
    heights = Q[idx[np.argsort((idx - peak_at) % len(Q))]]
    return 1 + int(np.count_nonzero(np.diff(heights) > 0))


def is_stable_pulsation(
    ref: ReferenceTrajectory, N_th: float, criteria: PulsationCriteria = PulsationCriteria()
) -> bool:
    if not ref.converged or float(np.max(ref.N)) <= N_th:
        return False
    q_min = float(np.min(ref.Q))
    q_max = float(np.max(ref.Q))
    if q_max < criteria.min_contrast * q_min or q_max <= 0:
        return False
    return count_pulses(ref.Q, criteria.pulse_fraction) == criteria.pulses


def find_min_bias(
    p: LaserParams,
    d: DerivedParams,
    I_p: float,
    f_p: float,
    dt: float,
    grid: Sequence[float],
    criteria: PulsationCriteria = PulsationCriteria(),
    duty: float = 0.5,
    max_periods: int = DEFAULT_MAX_PERIODS,
    tol: float = DEFAULT_TOL,
) -> float:
    """Smallest bias in ``grid`` giving stable pulsation at peak current ``I_p``."""
    grid = [float(x) for x in grid]
    if not grid:
        raise InvalidParameterError("grid", "must be nonempty")
    if any(b <= a for a, b in zip(grid, grid[1:])):
        raise InvalidParameterError("grid", "must be strictly ascending")
    for I_b in grid:
        w = PumpWaveform(I_b=I_b, I_p=I_p, f_p=f_p, duty=duty)
        try:
            ref = settle_periodic(p, d, w, dt=dt, max_periods=max_periods, tol=tol)
        except ConvergenceError:
            log.debug("I_b=%.6g A: no period-1 cycle", I_b)
            continue
        if is_stable_pulsation(ref, p.N_th, criteria):
            return I_b
    raise NoStablePulsationError(
        f"no stable pulsation on a {len(grid)}-point grid [{grid[0]!r}, {grid[-1]!r}] A "
        f"(I_p={I_p!r} A, f_p={f_p!r} Hz)"
    )


def steady_state(
    p: LaserParams, d: DerivedParams, current: float, dt: float = DEFAULT_DT, tol: float = 1e-10, max_time: float = 100e-9
) -> FieldState:
    """Fixed point under constant drive, by integration to stationarity."""
    pv = physics_tuple(p, d)
    chunk = max(1, int(round(100e-12 / dt)))
    currents = np.full(chunk, float(current))
    N_buf, Q_buf, phi_buf = (np.empty(chunk) for _ in range(3))
    N, Q = 0.0, 0.0
    for _ in range(max(1, int(math.ceil(max_time / (chunk * dt))))):
        N, Q, _phi = integrate_grid(N, Q, 0.0, currents, dt, pv, N_buf, Q_buf, phi_buf)
        dn, dq = _period_change(N_buf, Q_buf, N, Q, p.N_th)
        if dn < tol and dq < tol:
            return FieldState(N, Q, 0.0)
    raise ConvergenceError(f"no stationary state within {max_time!r} s at I={current!r} A")
