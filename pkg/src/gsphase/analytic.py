"""Closed-form phase diffusion of a laser at steady state above threshold.

Henry's small-signal result: a linear diffusion term enhanced by
(1 + alpha^2) plus a damped oscillation at the relaxation frequency. Only
valid for continuous-wave emission above threshold; every function here
refuses currents at or below threshold rather than extrapolating.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np

from .errors import BelowThresholdError
from .params import E_CHARGE, DerivedParams, LaserParams


class OscillationParams(NamedTuple):
    omega_r: float
    gamma_d: float
    delta: float


def _require_above(I: float, d: DerivedParams, strict: bool = True) -> None:
    if (I <= d.I_th) if strict else (I < d.I_th):
        raise BelowThresholdError(f"I={I!r} A is not above threshold I_th={d.I_th!r} A")


def steady_state_numbers(p: LaserParams, d: DerivedParams, I: float) -> tuple[float, float]:
    """Approximate (N, Q) at steady state: N clamps at N_th."""
    return p.N_th, (I - d.I_th) * p.Gamma * p.tau_ph / E_CHARGE


def relaxation_frequency(p: LaserParams, d: DerivedParams, I: float) -> float:
    _require_above(I, d, strict=False)
    return math.sqrt((I - d.I_th) / (d.I_th - d.I_tr) / (p.tau_ph * p.tau_e))


def damping_rate(p: LaserParams, d: DerivedParams, I: float) -> float:
    _require_above(I, d)
    N, Q = steady_state_numbers(p, d, I)
    dG_dN = 1.0 / (p.N_th - p.N_tr)
    dG_dQ = -d.chi_Q
    return 0.5 * (
        1.0 / p.tau_e
        + dG_dN * Q / p.tau_ph
        + p.C_sp * N / (p.tau_e * Q)
        - dG_dQ * Q / p.tau_ph
    )


def oscillation(p: LaserParams, d: DerivedParams, I: float) -> OscillationParams:
    omega = relaxation_frequency(p, d, I)
    gamma = damping_rate(p, d, I)
    return OscillationParams(omega, gamma, math.atan2(gamma, omega))


def diffusion_rate(p: LaserParams, d: DerivedParams, I: float) -> float:
    """Prefactor C_sp N / (2 Q tau_e) of the variance, rad^2/s."""
    _require_above(I, d)
    N, Q = steady_state_numbers(p, d, I)
    return p.C_sp * N / (2.0 * Q * p.tau_e)


def henry_variance(p: LaserParams, d: DerivedParams, I: float, t):
    """Mean-square phase change after time ``t`` (scalar or array), rad^2."""
    t_arr = np.asarray(t, dtype=float)
    if np.any(t_arr < 0):
        raise ValueError("t must be >= 0")
    k = diffusion_rate(p, d, I)
    omega, gamma, delta = oscillation(p, d, I)
    a2 = p.alpha * p.alpha
    osc = (np.exp(-gamma * t_arr) * np.cos(omega * t_arr - 3.0 * delta) - math.cos(3.0 * delta)) / (
        2.0 * gamma * math.cos(delta)
    )
    var = k * ((1.0 + a2) * t_arr - a2 * osc)
    if var.ndim == 0:
        return float(var)
    return var


@dataclass(frozen=True)
class AnalyticCurve:
    chi: float
    I_p: float
    t: float
    I_b: np.ndarray
    sigma_phi: np.ndarray


def henry_sigma_curve(
    p: LaserParams, d: DerivedParams, I_p: float, t: float, I_b_grid: Sequence[float]
) -> AnalyticCurve:
    """sqrt(henry_variance) against bias current at total current I_b + I_p."""
    grid = np.asarray(list(I_b_grid), dtype=float)
    for I_b in grid.tolist():
        if not I_b + I_p > d.I_th:
            raise BelowThresholdError(
                f"grid point I_b={I_b!r} A gives I={I_b + I_p!r} A, not above I_th={d.I_th!r} A"
            )
    sigma = np.array([math.sqrt(henry_variance(p, d, I_b + I_p, t)) for I_b in grid])
    return AnalyticCurve(chi=p.chi, I_p=I_p, t=t, I_b=grid, sigma_phi=sigma)
