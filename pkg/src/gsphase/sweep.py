"""Bias-current sweeps of the ensemble phase spread, and their CSV form."""

from __future__ import annotations

import csv
import logging
import math
from dataclasses import dataclass, field
from typing import Iterable, NamedTuple, Optional, Sequence

import numpy as np

from .config import OutputSection, RunConfig, grid_from_range
from .errors import AllPointsUnstableError, ConvergenceError, InvalidParameterError, NumericalError
from .montecarlo import EnsembleConfig, run_ensemble
from .params import LaserParams, PumpWaveform, derive
from .rate_solver import PulsationCriteria, find_min_bias, is_stable_pulsation, settle_periodic

log = logging.getLogger(__name__)

CSV_HEADER = ("f_p_Hz", "I_p_A", "chi_per_W", "I_b_A", "sigma_phi_rad", "stderr_rad", "passes_2pi")


class CurveLabel(NamedTuple):
    f_p: float
    I_p: float
    chi: float


class SweepPoint(NamedTuple):
    I_b: float
    sigma_phi: float
    stderr: float
    passes_2pi: bool


class SkippedPoint(NamedTuple):
    I_b: float
    reason: str


@dataclass(frozen=True)
class SweepCurve:
    label: CurveLabel
    points: tuple[SweepPoint, ...]
    skipped: tuple[SkippedPoint, ...] = ()

    def __post_init__(self) -> None:
        I_b = [pt.I_b for pt in self.points]
        if any(b <= a for a, b in zip(I_b, I_b[1:])):
            raise InvalidParameterError("points", "must be ordered by ascending I_b")
        if any(pt.stderr < 0 for pt in self.points):
            raise InvalidParameterError("points", "stderr must be >= 0")

    @property
    def I_b(self) -> np.ndarray:
        return np.array([pt.I_b for pt in self.points])

    @property
    def sigma_phi(self) -> np.ndarray:
        return np.array([pt.sigma_phi for pt in self.points])


@dataclass(frozen=True)
class SweepSpec:
    params: LaserParams
    f_p: float
    I_p_list: tuple[float, ...]
    chi_list: tuple[float, ...]
    I_b_range: Optional[tuple[float, float, float]]  # A; None = auto
    ensemble: EnsembleConfig
    criteria: PulsationCriteria = PulsationCriteria()
    duty: float = 0.5
    auto_step: float = 0.25 / 1e3
    search_min: float = -10 / 1e3
    max_periods: int = 200
    tol: float = 1e-6
    outputs: OutputSection = field(default_factory=OutputSection)

    def __post_init__(self) -> None:
        if not self.I_p_list:
            raise InvalidParameterError("I_p_list", "must be nonempty")
        if not self.chi_list:
            raise InvalidParameterError("chi_list", "must be nonempty")
        if self.I_b_range is not None and not self.I_b_range[2] > 0:
            raise InvalidParameterError("I_b_range", "step must be > 0")
        if not self.auto_step > 0:
            raise InvalidParameterError("auto_step", "must be > 0")


def spec_from_config(cfg: RunConfig) -> SweepSpec:
    sw = cfg.sweep
    rng = None if sw.I_b_mA is None else tuple(x / 1e3 for x in sw.I_b_mA)
    return SweepSpec(
        params=cfg.laser.to_params(),
        f_p=cfg.drive.f_p_GHz * 1e9,
        I_p_list=tuple(x / 1e3 for x in sw.I_p_mA),
        chi_list=tuple(sw.chi_per_W) if sw.chi_per_W is not None else (cfg.laser.chi_per_W,),
        I_b_range=rng,
        ensemble=cfg.ensemble.to_config(),
        criteria=cfg.solver.criteria(),
        duty=cfg.drive.duty,
        auto_step=sw.auto_step_mA / 1e3,
        search_min=sw.search_min_mA / 1e3,
        max_periods=cfg.solver.max_periods,
        tol=cfg.solver.tol,
        outputs=cfg.output,
    )


def _clean(x: float) -> float:
    # k * step picks up binary noise; snap to the short decimal it stands for
    return float(f"{x:.12g}")


def auto_grid(step: float, lo: float, I_th: float) -> list[float]:
    """Multiples of ``step`` from ``lo`` up to the largest one below I_th."""
    k0 = math.ceil(lo / step - 1e-9)
    k1 = math.ceil(I_th / step - 1e-9) - 1
    return [_clean(k * step) for k in range(k0, k1 + 1) if _clean(k * step) < I_th]


def bias_grid(spec: SweepSpec, p: LaserParams, I_p: float) -> list[float]:
    """I_b grid of one curve; the auto range starts at the stable-pulsation edge."""
    d = derive(p)
    if spec.I_b_range is not None:
        lo, hi, step = spec.I_b_range
        return [_clean(x) for x in grid_from_range(lo, hi, step)]
    grid = auto_grid(spec.auto_step, spec.search_min, d.I_th)
    if not grid:
        raise InvalidParameterError("search_min", "no grid point lies below threshold")
    I_min = find_min_bias(
        p, d, I_p, spec.f_p, spec.ensemble.dt, grid, spec.criteria, spec.duty, spec.max_periods, spec.tol
    )
    return [x for x in grid if x >= I_min]


def run_curve(
    spec: SweepSpec, I_p: float, chi: float, threads: int | None = None, grid: Sequence[float] | None = None
) -> SweepCurve:
    p = spec.params.replace(chi=chi)
    d = derive(p)
    label = CurveLabel(spec.f_p, I_p, chi)
    if grid is None:
        grid = bias_grid(spec, p, I_p)
    points: list[SweepPoint] = []
    skipped: list[SkippedPoint] = []
    for I_b in grid:
        w = PumpWaveform(I_b=I_b, I_p=I_p, f_p=spec.f_p, duty=spec.duty)
        try:
            ref = settle_periodic(p, d, w, dt=spec.ensemble.dt, max_periods=spec.max_periods, tol=spec.tol)
        except ConvergenceError as exc:
            skipped.append(SkippedPoint(I_b, f"no period-1 cycle: {exc}"))
            log.info("skip f_p=%g I_p=%g chi=%g I_b=%g: no period-1 cycle", spec.f_p, I_p, chi, I_b)
            continue
        if not is_stable_pulsation(ref, p.N_th, spec.criteria):
            skipped.append(SkippedPoint(I_b, "cycle is not a stable single-pulse train"))
            log.info("skip f_p=%g I_p=%g chi=%g I_b=%g: not a stable pulse train", spec.f_p, I_p, chi, I_b)
            continue
        try:
            st = run_ensemble(p, d, w, spec.ensemble, threads=threads, ref=ref)
        except NumericalError as exc:
            skipped.append(SkippedPoint(I_b, f"ensemble failed: {exc}"))
            log.info("skip f_p=%g I_p=%g chi=%g I_b=%g: %s", spec.f_p, I_p, chi, I_b, exc)
            continue
        points.append(SweepPoint(I_b, st.sigma_phi, st.stderr_sigma, st.passes_2pi))
        log.debug("f_p=%g I_p=%g chi=%g I_b=%g sigma=%.6g", spec.f_p, I_p, chi, I_b, st.sigma_phi)
    if not points:
        raise AllPointsUnstableError(
            f"every grid point was skipped for f_p={spec.f_p!r} Hz, I_p={I_p!r} A, chi={chi!r} 1/W"
        )
    return SweepCurve(label, tuple(points), tuple(skipped))


def run_sweep(spec: SweepSpec, threads: int | None = None) -> list[SweepCurve]:
    """One curve per (I_p, chi), I_p outermost, in the order declared."""
    return [run_curve(spec, I_p, chi, threads) for I_p in spec.I_p_list for chi in spec.chi_list]


def _g9(x: float) -> str:
    return f"{x:.9g}"


def emit_csv(curves: Iterable[SweepCurve], path) -> None:
    with open(path, "w", newline="") as fh:
        write_csv(curves, fh)


def write_csv(curves: Iterable[SweepCurve], fh) -> None:
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(CSV_HEADER)
    for c in curves:
        for pt in c.points:
            w.writerow([
                _g9(c.label.f_p), _g9(c.label.I_p), _g9(c.label.chi),
                _g9(pt.I_b), _g9(pt.sigma_phi), _g9(pt.stderr),
                "true" if pt.passes_2pi else "false",
            ])


def read_csv(path) -> list[SweepCurve]:
    """Inverse of ``emit_csv``: consecutive rows with the same label form a curve."""
    curves: list[SweepCurve] = []
    label = None
    points: list[SweepPoint] = []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if tuple(header or ()) != CSV_HEADER:
            raise ValueError(f"unexpected header {header!r}")
        for row in reader:
            f_p, I_p, chi, I_b, sigma, se, flag = row
            lab = CurveLabel(float(f_p), float(I_p), float(chi))
            if lab != label:
                if label is not None:
                    curves.append(SweepCurve(label, tuple(points)))
                label, points = lab, []
            points.append(SweepPoint(float(I_b), float(sigma), float(se), flag == "true"))
    if label is not None:
        curves.append(SweepCurve(label, tuple(points)))
    return curves


def write_skip_log(curves: Iterable[SweepCurve], path) -> None:
    with open(path, "w") as fh:
        for c in curves:
            for sk in c.skipped:
                fh.write(
                    f"f_p_Hz={_g9(c.label.f_p)} I_p_A={_g9(c.label.I_p)} chi_per_W={_g9(c.label.chi)} "
                    f"I_b_A={_g9(sk.I_b)} skipped: {sk.reason}\n"
                )


def _segments(I_b: np.ndarray, step: float | None) -> list[slice]:
    if step is None or len(I_b) < 2:
        return [slice(0, len(I_b))]
    cuts = np.flatnonzero(np.diff(I_b) > 1.5 * step) + 1
    edges = [0, *cuts.tolist(), len(I_b)]
    return [slice(a, b) for a, b in zip(edges[:-1], edges[1:])]


def oscillation_amplitude(I_b: Sequence[float], sigma: Sequence[float], step: float | None = None) -> float:
    """Largest rise from a local trough of sigma(I_b) to the next local peak.

    With ``step`` given, gaps wider than the grid step (skipped points)
    split the curve and no rise is measured across them. Returns 0 for a
    curve without an interior trough followed by a peak.
    """
    I_b = np.asarray(I_b, dtype=float)
    s = np.asarray(sigma, dtype=float)
    best = 0.0
    for seg in _segments(I_b, step):
        y = s[seg]
        for i in range(1, len(y) - 1):
            if not (y[i] < y[i - 1] and y[i] <= y[i + 1]):
                continue
            j = i
            while j + 1 < len(y) and y[j + 1] >= y[j]:
                j += 1
            if j > i and j < len(y) - 1:
                best = max(best, float(y[j] - y[i]))
    return best
