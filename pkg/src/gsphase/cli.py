"""Command-line entry point: ``gsphase {sweep,ensemble,trace,analytic} CONFIG``.

Exit codes: 0 success, 1 configuration error, 2 numerical failure,
3 input/output error.
"""

from __future__ import annotations

import argparse
import csv
import logging
import sys
from contextlib import contextmanager
from typing import Sequence

from . import config as cfgmod
from .analytic import henry_sigma_curve
from .errors import ConfigError, InvalidParameterError, NumericalError
from .montecarlo import run_ensemble
from .params import derive, photons_to_watts
from .rate_solver import settle_periodic
from .svgplot import emit_svg
from .sweep import spec_from_config, run_sweep, write_csv, write_skip_log

EXIT_OK, EXIT_CONFIG, EXIT_NUMERICAL, EXIT_IO = 0, 1, 2, 3

log = logging.getLogger("gsphase")


class _IOFailure(Exception):
    pass


@contextmanager
def _open_out(path):
    """Text sink: a file when ``path`` is set, stdout otherwise."""
    if path is None or path == "-":
        yield sys.stdout
        return
    try:
        fh = open(path, "w", newline="")
    except OSError as exc:
        raise _IOFailure(f"cannot write {path}: {exc}") from None
    with fh:
        yield fh


def _apply_overrides(cfg: cfgmod.RunConfig, args) -> cfgmod.RunConfig:
    ens = {}
    if args.seed is not None:
        ens["seed"] = args.seed
    if args.dt is not None:
        ens["dt_fs"] = args.dt
    if args.trajectories is not None:
        ens["trajectories"] = args.trajectories
    if args.no_carrier_noise:
        ens["carrier_noise"] = False
    if args.no_field_noise:
        ens["field_noise"] = False
    if ens:
        cfg = cfg.replace("ensemble", **ens)
    if args.output is not None:
        cfg = cfg.replace("output", csv=args.output)
    cfgmod.validate(cfg)
    return cfg


def _g9(x: float) -> str:
    return f"{x:.9g}"


def cmd_sweep(cfg: cfgmod.RunConfig, threads) -> None:
    spec = spec_from_config(cfg)
    curves = run_sweep(spec, threads=threads)
    with _open_out(cfg.output.csv) as fh:
        write_csv(curves, fh)
    for c in curves:
        for sk in c.skipped:
            log.warning("skipped I_b=%.6g A (I_p=%.6g A, chi=%g): %s", sk.I_b, c.label.I_p, c.label.chi, sk.reason)
    log_path = cfg.output.log or (cfg.output.csv + ".log" if cfg.output.csv not in (None, "-") else None)
    if log_path:
        _guard_io(write_skip_log, curves, log_path)
    if cfg.output.svg:
        _guard_io(emit_svg, curves, cfg.output.svg, derive(spec.params).I_th)


ENSEMBLE_HEADER = (
    "f_p_Hz", "I_b_A", "I_p_A", "chi_per_W", "n_traj", "sigma_phi_rad", "stderr_rad",
    "mean_phi_rad", "skewness", "excess_kurtosis", "ks_distance", "passes_2pi",
)


def cmd_ensemble(cfg: cfgmod.RunConfig, threads) -> None:
    p = cfg.laser.to_params()
    d = derive(p)
    w = cfg.drive.to_waveform()
    st = run_ensemble(p, d, w, cfg.ensemble.to_config(), threads=threads,
                      max_periods=cfg.solver.max_periods, tol=cfg.solver.tol)
    with _open_out(cfg.output.csv) as fh:
        wr = csv.writer(fh, lineterminator="\n")
        wr.writerow(ENSEMBLE_HEADER)
        wr.writerow([
            _g9(w.f_p), _g9(w.I_b), _g9(w.I_p), _g9(p.chi), st.n_traj,
            _g9(st.sigma_phi), _g9(st.stderr_sigma), _g9(st.mean_phi),
            _g9(st.skewness), _g9(st.excess_kurtosis), _g9(st.ks_distance),
            "true" if st.passes_2pi else "false",
        ])
    if cfg.output.histogram:
        with _open_out(cfg.output.histogram) as fh:
            wr = csv.writer(fh, lineterminator="\n")
            wr.writerow(("bin_left_rad", "bin_right_rad", "count"))
            h = st.histogram
            for lo, hi, n in zip(h.edges[:-1], h.edges[1:], h.counts):
                wr.writerow((_g9(lo), _g9(hi), int(n)))


def cmd_trace(cfg: cfgmod.RunConfig, threads) -> None:
    p = cfg.laser.to_params()
    d = derive(p)
    ref = settle_periodic(p, d, cfg.drive.to_waveform(), dt=cfg.ensemble.dt_fs / 1e15,
                          max_periods=cfg.solver.max_periods, tol=cfg.solver.tol)
    P = photons_to_watts(ref.Q, d)
    with _open_out(cfg.output.csv) as fh:
        wr = csv.writer(fh, lineterminator="\n")
        wr.writerow(("t_s", "N", "Q", "phi_rad", "P_W"))
        for row in zip(ref.times, ref.N, ref.Q, ref.phi, P):
            wr.writerow([_g9(v) for v in row])


def cmd_analytic(cfg: cfgmod.RunConfig, threads) -> None:
    a = cfg.analytic
    grid = cfgmod.grid_from_range(*(x / 1e3 for x in a.I_b_mA))
    with _open_out(cfg.output.csv) as fh:
        wr = csv.writer(fh, lineterminator="\n")
        wr.writerow(("chi_per_W", "I_b_mA", "sigma_phi_rad"))
        for chi in a.chi_per_W:
            p = cfg.laser.to_params(chi)
            curve = henry_sigma_curve(p, derive(p), a.I_p_mA / 1e3, a.t_ps / 1e12, grid)
            for I_b, s in zip(curve.I_b, curve.sigma_phi):
                wr.writerow((_g9(chi), _g9(I_b * 1e3), _g9(s)))


def _guard_io(fn, *args):
    try:
        fn(*args)
    except OSError as exc:
        raise _IOFailure(str(exc)) from None


COMMANDS = {
    "sweep": (cmd_sweep, "bias-current sweep of the ensemble phase spread"),
    "ensemble": (cmd_ensemble, "statistics of one ensemble at the [drive] operating point"),
    "trace": (cmd_trace, "settled deterministic trajectory over one period"),
    "analytic": (cmd_analytic, "closed-form above-threshold phase spread versus bias"),
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("config", help="INI configuration file")
    common.add_argument("--seed", type=int, help="master seed (overrides [ensemble] seed)")
    common.add_argument("--dt", type=float, help="time step in fs")
    common.add_argument("--trajectories", type=int, help="ensemble size")
    common.add_argument("--output", help="output CSV path ('-' for stdout)")
    common.add_argument("--threads", type=int, help="worker threads (default: $GSPHASE_THREADS or CPU count)")
    common.add_argument("--no-carrier-noise", action="store_true", help="drop the carrier shot-noise term")
    common.add_argument("--no-field-noise", action="store_true", help="drop the field noise terms")
    common.add_argument("-v", "--verbose", action="count", default=0)

    parser = argparse.ArgumentParser(prog="gsphase", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    for name, (_, help_) in COMMANDS.items():
        sub.add_parser(name, parents=[common], help=help_, description=help_)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # argparse exits 2 on usage errors; a bad command line is a config error here
        return EXIT_OK if exc.code == 0 else EXIT_CONFIG
    level = logging.WARNING - 10 * min(args.verbose, 2)
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)
    try:
        if args.threads is not None and args.threads < 1:
            raise ConfigError("--threads must be >= 1")
        cfg = _apply_overrides(cfgmod.load(args.config), args)
        COMMANDS[args.command][0](cfg, args.threads)
    except (ConfigError, InvalidParameterError) as exc:
        print(f"gsphase: configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NumericalError as exc:
        print(f"gsphase: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except (_IOFailure, OSError) as exc:
        print(f"gsphase: i/o error: {exc}", file=sys.stderr)
        return EXIT_IO
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
