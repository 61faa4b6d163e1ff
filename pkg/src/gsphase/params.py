"""Laser and drive parameters, derived constants and the pump waveform.

All quantities are SI internally (seconds, amperes, watts, hertz). Carrier
and photon numbers are plain dimensionless counts.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import InvalidParameterError

E_CHARGE = 1.602176634e-19  # C
HBAR = 1.054571817e-34  # J s


@dataclass(frozen=True)
class LaserParams:
    """Single-mode laser parameter set.

    Defaults are the reference device used throughout the package; ``chi``
    is the gain compression factor in 1/W.
    """

    tau_ph: float = 1.0e-12
    tau_e: float = 1.0e-9
    eps: float = 0.3
    N_tr: float = 6.0e7
    N_th: float = 6.5e7
    C_sp: float = 1.0e-5
    Gamma: float = 0.12
    alpha: float = 6.0
    nu0: float = 193.548e12
    chi: float = 20.0

    def __post_init__(self) -> None:
        validate(self)

    def replace(self, **changes) -> "LaserParams":
        fields = {k: getattr(self, k) for k in self.__dataclass_fields__}
        fields.update(changes)
        return LaserParams(**fields)


def validate(p: LaserParams) -> None:
    """Raise InvalidParameterError naming the first offending field."""
    for name in ("tau_ph", "tau_e", "eps", "N_tr", "N_th", "Gamma", "nu0"):
        value = getattr(p, name)
        if not (math.isfinite(value) and value > 0):
            raise InvalidParameterError(name, f"must be finite and > 0, got {value!r}")
    if not math.isfinite(p.alpha):
        raise InvalidParameterError("alpha", f"must be finite, got {p.alpha!r}")
    if not (math.isfinite(p.chi) and p.chi >= 0):
        raise InvalidParameterError("chi", f"must be finite and >= 0, got {p.chi!r}")
    if not p.N_th > p.N_tr:
        raise InvalidParameterError("N_th", f"must exceed N_tr ({p.N_tr!r}), got {p.N_th!r}")
    if not p.eps <= 1:
        raise InvalidParameterError("eps", f"must be <= 1, got {p.eps!r}")
    if not p.Gamma <= 1:
        raise InvalidParameterError("Gamma", f"must be <= 1, got {p.Gamma!r}")
    if not (math.isfinite(p.C_sp) and 0 <= p.C_sp <= 1):
        raise InvalidParameterError("C_sp", f"must lie in [0, 1], got {p.C_sp!r}")


@dataclass(frozen=True)
class DerivedParams:
    I_th: float
    I_tr: float
    hbar_omega0: float
    chi_Q: float
    c_P: float


def derive(p: LaserParams) -> DerivedParams:
    validate(p)
    hbar_omega0 = HBAR * 2.0 * math.pi * p.nu0
    c_P = p.eps * hbar_omega0 / (2.0 * p.Gamma * p.tau_ph)
    return DerivedParams(
        I_th=p.N_th * E_CHARGE / p.tau_e,
        I_tr=p.N_tr * E_CHARGE / p.tau_e,
        hbar_omega0=hbar_omega0,
        chi_Q=p.chi * c_P,
        c_P=c_P,
    )


def photons_to_watts(Q, d: DerivedParams):
    """Output power from one facet for normalized intensity ``Q``."""
    arr = np.asarray(Q, dtype=float)
    if np.any(arr < 0):
        raise InvalidParameterError("Q", "intensity must be non-negative")
    if arr.ndim == 0:
        return float(arr) * d.c_P
    return arr * d.c_P


@dataclass(frozen=True)
class PumpWaveform:
    """Square-wave drive ``I_b + I_p`` during the first ``duty`` of each period.

    The pulse-on phase starts at t = 0.
    """

    I_b: float
    I_p: float
    f_p: float
    duty: float = 0.5

    def __post_init__(self) -> None:
        if not (math.isfinite(self.f_p) and self.f_p > 0):
            raise InvalidParameterError("f_p", f"must be > 0, got {self.f_p!r}")
        if not 0 < self.duty < 1:
            raise InvalidParameterError("duty", f"must lie in (0, 1), got {self.duty!r}")
        if not (math.isfinite(self.I_p) and self.I_p >= 0):
            raise InvalidParameterError("I_p", f"must be >= 0, got {self.I_p!r}")
        if not math.isfinite(self.I_b):
            raise InvalidParameterError("I_b", f"must be finite, got {self.I_b!r}")

    @property
    def period(self) -> float:
        return 1.0 / self.f_p


def pump_current(w: PumpWaveform, t):
    """Drive current at time(s) ``t`` >= 0."""
    t_arr = np.asarray(t, dtype=float)
    frac = np.mod(t_arr * w.f_p, 1.0)
    current = np.where(frac < w.duty, w.I_b + w.I_p, w.I_b)
    if current.ndim == 0:
        return float(current)
    return current
