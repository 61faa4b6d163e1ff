"""INI run configuration.

Values are kept in the units written in the file (ps, ns, mA, GHz, fs) and
converted to SI only when building the physics objects, so a file survives
parse -> serialize -> parse unchanged. Every key is optional; an empty file
describes the reference device with default drive and ensemble settings.

Schema::

    [laser]     tau_ph_ps, tau_e_ns, eps, N_tr, N_th, C_sp, Gamma, alpha,
                nu0_THz, chi_per_W
    [drive]     f_p_GHz, I_b_mA, I_p_mA, duty
    [sweep]     I_p_mA (list), chi_per_W (list, default: laser chi),
                I_b_mA ("auto" or "min, max, step"), auto_step_mA,
                search_min_mA
    [ensemble]  trajectories, seed, dt_fs, field_noise, carrier_noise
    [solver]    tol, max_periods, pulse_fraction, min_contrast
    [analytic]  t_ps, I_p_mA, chi_per_W (list), I_b_mA ("min, max, step")
    [output]    csv, svg, histogram, log
"""

from __future__ import annotations

import configparser
import dataclasses
import io
import math
from dataclasses import dataclass, field, fields
from pathlib import Path
from typing import Optional

import numpy as np

from .errors import ConfigError, InvalidParameterError
from .montecarlo import EnsembleConfig
from .params import LaserParams, PumpWaveform
from .rate_solver import PulsationCriteria
from .sde import NoiseFlags


@dataclass(frozen=True)
class LaserSection:
    tau_ph_ps: float = 1.0
    tau_e_ns: float = 1.0
    eps: float = 0.3
    N_tr: float = 6.0e7
    N_th: float = 6.5e7
    C_sp: float = 1.0e-5
    Gamma: float = 0.12
    alpha: float = 6.0
    nu0_THz: float = 193.548
    chi_per_W: float = 20.0

    def to_params(self, chi: float | None = None) -> LaserParams:
        return LaserParams(
            tau_ph=self.tau_ph_ps / 1e12,
            tau_e=self.tau_e_ns / 1e9,
            eps=self.eps,
            N_tr=self.N_tr,
            N_th=self.N_th,
            C_sp=self.C_sp,
            Gamma=self.Gamma,
            alpha=self.alpha,
            nu0=self.nu0_THz * 1e12,
            chi=self.chi_per_W if chi is None else chi,
        )


@dataclass(frozen=True)
class DriveSection:
    f_p_GHz: float = 2.5
    I_b_mA: float = 7.0
    I_p_mA: float = 12.0
    duty: float = 0.5

    def to_waveform(self) -> PumpWaveform:
        return PumpWaveform(self.I_b_mA / 1e3, self.I_p_mA / 1e3, self.f_p_GHz * 1e9, self.duty)


@dataclass(frozen=True)
class SweepSection:
    I_p_mA: tuple[float, ...] = (12.0,)
    chi_per_W: Optional[tuple[float, ...]] = None
    I_b_mA: Optional[tuple[float, float, float]] = None  # None means auto
    auto_step_mA: float = 0.25
    search_min_mA: float = -10.0


@dataclass(frozen=True)
class EnsembleSection:
    trajectories: int = 50_000
    seed: int = 1
    dt_fs: float = 10.0
    field_noise: bool = True
    carrier_noise: bool = True

    def to_config(self) -> EnsembleConfig:
        return EnsembleConfig(
            n_traj=self.trajectories,
            master_seed=self.seed,
            dt=self.dt_fs / 1e15,
            flags=NoiseFlags(self.field_noise, self.carrier_noise),
        )


@dataclass(frozen=True)
class SolverSection:
    tol: float = 1.0e-6
    max_periods: int = 200
    pulse_fraction: float = 0.5
    min_contrast: float = 10.0

    def criteria(self) -> PulsationCriteria:
        return PulsationCriteria(pulse_fraction=self.pulse_fraction, min_contrast=self.min_contrast)


@dataclass(frozen=True)
class AnalyticSection:
    t_ps: float = 400.0
    I_p_mA: float = 12.0
    chi_per_W: tuple[float, ...] = (0.0, 20.0, 40.0)
    I_b_mA: tuple[float, float, float] = (-1.5, 10.0, 0.25)


@dataclass(frozen=True)
class OutputSection:
    csv: Optional[str] = None
    svg: Optional[str] = None
    histogram: Optional[str] = None
    log: Optional[str] = None


@dataclass(frozen=True)
class RunConfig:
    laser: LaserSection = field(default_factory=LaserSection)
    drive: DriveSection = field(default_factory=DriveSection)
    sweep: SweepSection = field(default_factory=SweepSection)
    ensemble: EnsembleSection = field(default_factory=EnsembleSection)
    solver: SolverSection = field(default_factory=SolverSection)
    analytic: AnalyticSection = field(default_factory=AnalyticSection)
    output: OutputSection = field(default_factory=OutputSection)

    def replace(self, section: str, **changes) -> "RunConfig":
        return dataclasses.replace(self, **{section: dataclasses.replace(getattr(self, section), **changes)})


_SECTIONS = {f.name: f.default_factory for f in fields(RunConfig)}


def _fmt_float(x: float) -> str:
    return repr(float(x))


def _fmt_list(xs) -> str:
    return ", ".join(_fmt_float(x) for x in xs)


def _parse_float(section: str, key: str, raw: str) -> float:
    try:
        value = float(raw)
    except ValueError:
        raise ConfigError(f"[{section}] {key}: expected a number, got {raw!r}") from None
    if not math.isfinite(value):
        raise ConfigError(f"[{section}] {key}: must be finite, got {raw!r}")
    return value


def _parse_int(section: str, key: str, raw: str) -> int:
    try:
        return int(raw)
    except ValueError:
        raise ConfigError(f"[{section}] {key}: expected an integer, got {raw!r}") from None


def _parse_bool(section: str, key: str, raw: str) -> bool:
    low = raw.strip().lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise ConfigError(f"[{section}] {key}: expected a boolean, got {raw!r}")


def _parse_list(section: str, key: str, raw: str) -> tuple[float, ...]:
    items = [s.strip() for s in raw.split(",") if s.strip()]
    if not items:
        raise ConfigError(f"[{section}] {key}: empty list")
    return tuple(_parse_float(section, key, s) for s in items)


def _parse_range(section: str, key: str, raw: str) -> tuple[float, float, float]:
    vals = _parse_list(section, key, raw)
    if len(vals) != 3:
        raise ConfigError(f"[{section}] {key}: expected 'min, max, step', got {raw!r}")
    lo, hi, step = vals
    if not step > 0:
        raise ConfigError(f"[{section}] {key}: step must be > 0")
    if hi < lo:
        raise ConfigError(f"[{section}] {key}: max is below min")
    return lo, hi, step


def _parse_value(section: str, key: str, raw: str, kind):
    if section == "sweep" and key == "I_b_mA":
        return None if raw.strip().lower() == "auto" else _parse_range(section, key, raw)
    if section == "analytic" and key == "I_b_mA":
        return _parse_range(section, key, raw)
    if section == "output":
        return raw.strip() or None
    if kind is bool:
        return _parse_bool(section, key, raw)
    if kind is int:
        return _parse_int(section, key, raw)
    if kind is float:
        return _parse_float(section, key, raw)
    return _parse_list(section, key, raw)


def _format_value(section: str, key: str, value) -> str | None:
    if value is None:
        return "auto" if (section, key) == ("sweep", "I_b_mA") else None
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, int):
        return str(value)
    if isinstance(value, float):
        return _fmt_float(value)
    if isinstance(value, tuple):
        return _fmt_list(value)
    return str(value)


def _field_kind(section: str, name: str, default):
    if isinstance(default, bool):
        return bool
    if isinstance(default, int):
        return int
    if isinstance(default, float):
        return float
    return tuple


def loads(text: str) -> RunConfig:
    """Parse INI text into a validated RunConfig."""
    cp = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#", ";"))
    cp.optionxform = str  # keys are case sensitive (N_tr, C_sp)
    try:
        cp.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(f"malformed config: {exc}") from None
    sections = {}
    for name in cp.sections():
        if name not in _SECTIONS:
            raise ConfigError(f"unknown section [{name}]")
        default = _SECTIONS[name]()
        known = {f.name: getattr(default, f.name) for f in fields(default)}
        values = {}
        for key, raw in cp.items(name):
            if key not in known:
                raise ConfigError(f"[{name}] unknown key {key!r}")
            values[key] = _parse_value(name, key, raw, _field_kind(name, key, known[key]))
        sections[name] = dataclasses.replace(default, **values)
    cfg = RunConfig(**sections)
    validate(cfg)
    return cfg


def load(path: str | Path) -> RunConfig:
    try:
        text = Path(path).read_text()
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}") from None
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    return loads(text)


def dumps(cfg: RunConfig) -> str:
    """Serialize every key, including defaults, so the file is self-describing."""
    out = io.StringIO()
    for f in fields(cfg):
        section = getattr(cfg, f.name)
        out.write(f"[{f.name}]\n")
        for sf in fields(section):
            text = _format_value(f.name, sf.name, getattr(section, sf.name))
            if text is not None:
                out.write(f"{sf.name} = {text}\n")
        out.write("\n")
    return out.getvalue()


def validate(cfg: RunConfig) -> None:
    """Build every physics object once so bad values fail at load time."""
    try:
        cfg.laser.to_params()
        cfg.drive.to_waveform()
        cfg.ensemble.to_config()
        cfg.solver.criteria()
        for chi in cfg.sweep.chi_per_W or ():
            cfg.laser.to_params(chi)
        for chi in cfg.analytic.chi_per_W:
            cfg.laser.to_params(chi)
    except InvalidParameterError as exc:
        raise ConfigError(f"invalid parameter {exc}") from None
    if any(not x > 0 for x in cfg.sweep.I_p_mA):
        raise ConfigError("[sweep] I_p_mA: every modulation amplitude must be > 0")
    if not cfg.sweep.auto_step_mA > 0:
        raise ConfigError("[sweep] auto_step_mA: must be > 0")
    if cfg.solver.max_periods < 2:
        raise ConfigError("[solver] max_periods: must be >= 2")
    if not cfg.solver.tol > 0:
        raise ConfigError("[solver] tol: must be > 0")
    if not cfg.analytic.t_ps >= 0:
        raise ConfigError("[analytic] t_ps: must be >= 0")


def grid_from_range(lo: float, hi: float, step: float) -> np.ndarray:
    """Inclusive grid lo, lo+step, ... <= hi (a small tolerance absorbs rounding)."""
    n = int(math.floor((hi - lo) / step + 1e-9))
    return lo + step * np.arange(n + 1)
