"""Euler-Maruyama integration of the Langevin rate equations.

Each step adds to the deterministic drift three noise terms built from the
reference (noiseless) trajectory and a standard-normal triple
(zeta_A, zeta_B, zeta_C):

    dQ   += 2 sqrt(C_sp N Q / (2 tau_e)) (zA cos phi + zB sin phi) sqrt(dt)
    dphi += sqrt(C_sp N / (2 tau_e Q)) (zB cos phi - zA sin phi) sqrt(dt)
    dN   += -(Q noise term) + sqrt(2 N / tau_e) zC sqrt(dt)

where N, Q and phi on the right-hand side are reference values. N and Q are
clamped at zero after the update.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numba as nb
import numpy as np

from .errors import InvalidParameterError, ReferenceUnderflowError
from .params import DerivedParams, LaserParams
from .rate_solver import FieldState, ReferenceTrajectory, drift, physics_tuple
from .rng import normal_triple, split_words

Q_FLOOR = 1.0e-12
CHUNK = 64
THREADS_ENV = "GSPHASE_THREADS"


@dataclass(frozen=True)
class NoiseFlags:
    field_noise: bool = True
    carrier_shot_noise: bool = True

    @property
    def any(self) -> bool:
        return self.field_noise or self.carrier_shot_noise


NOISE_OFF = NoiseFlags(False, False)


class DiffusionCoeffs(NamedTuple):
    D_QQ: float
    D_phiphi: float
    D_NN: float
    D_Qphi: float
    D_NQ: float
    D_Nphi: float


def diffusion(ref: tuple[float, float], p: LaserParams) -> DiffusionCoeffs:
    """Langevin diffusion coefficients at reference point ``(N, Q)``."""
    N, Q = float(ref[0]), float(ref[1])
    if not Q > 0:
        raise ReferenceUnderflowError(f"reference intensity must be > 0, got {Q!r}")
    if N < 0:
        raise InvalidParameterError("N", f"must be >= 0, got {N!r}")
    r_sp = N / p.tau_e
    d_qq = p.C_sp * r_sp * Q
    return DiffusionCoeffs(
        D_QQ=d_qq,
        D_phiphi=p.C_sp * r_sp / (4.0 * Q),
        D_NN=r_sp + d_qq,
        D_Qphi=0.0,
        D_NQ=-d_qq,
        D_Nphi=0.0,
    )


@nb.njit(cache=True, nogil=True, error_model="numpy")
def noise_amplitudes(n_ref, q_ref, phi_ref, dt, c_sp, tau_e):
    """Per-step amplitudes (a_Q, a_phi, a_N) and (cos, sin) of the reference phase."""
    sdt = math.sqrt(dt)
    a_q = 2.0 * math.sqrt(c_sp * n_ref * q_ref / (2.0 * tau_e)) * sdt
    a_phi = math.sqrt(c_sp * n_ref / (2.0 * tau_e * q_ref)) * sdt
    a_n = math.sqrt(2.0 * n_ref / tau_e) * sdt
    return a_q, a_phi, a_n, math.cos(phi_ref), math.sin(phi_ref)


@nb.njit(cache=True, nogil=True, error_model="numpy")
def _em_apply(N, Q, phi, current, dt, pv, a_q, a_phi, a_n, c, s, za, zb, zc, field, carrier):
    dn, dq, dphi = drift(N, Q, current, dt, pv)
    if field:
        f_q = a_q * (za * c + zb * s)
        dq = dq + f_q
        dphi = dphi + a_phi * (zb * c - za * s)
        dn = dn - f_q
    if carrier:
        dn = dn + a_n * zc
    N = N + dn
    Q = Q + dq
    if N < 0.0:
        N = 0.0
    if Q < 0.0:
        Q = 0.0
    return N, Q, phi + dphi


@nb.njit(cache=True, nogil=True, error_model="numpy")
def _em_update(N, Q, phi, n_ref, q_ref, phi_ref, current, dt, pv, za, zb, zc, field, carrier):
    a_q, a_phi, a_n, c, s = noise_amplitudes(n_ref, q_ref, phi_ref, dt, pv[4], pv[9])
    return _em_apply(N, Q, phi, current, dt, pv, a_q, a_phi, a_n, c, s, za, zb, zc, field, carrier)


def _check_floor(q_ref) -> None:
    q = np.asarray(q_ref)
    if np.any(q < Q_FLOOR):
        k = int(np.argmax(q < Q_FLOOR))
        raise ReferenceUnderflowError(
            f"reference intensity {float(q.flat[k])!r} below floor {Q_FLOOR!r} at step {k}"
        )


def em_step(
    s: FieldState,
    refs: tuple[float, float, float],
    p: LaserParams,
    d: DerivedParams,
    I_n: float,
    dt: float,
    z: tuple[float, float, float],
    flags: NoiseFlags = NoiseFlags(),
) -> FieldState:
    """One Euler-Maruyama step from ``s`` with reference ``(N, Q, phi)`` and normals ``z``."""
    if not dt > 0:
        raise InvalidParameterError("dt", f"must be > 0, got {dt!r}")
    n_ref, q_ref, phi_ref = (float(x) for x in refs)
    _check_floor(q_ref)
    out = _em_update(
        float(s.N), float(s.Q), float(s.phi), n_ref, q_ref, phi_ref, float(I_n), float(dt),
        physics_tuple(p, d), float(z[0]), float(z[1]), float(z[2]),
        bool(flags.field_noise), bool(flags.carrier_shot_noise),
    )
    return FieldState(*out)


@nb.njit(cache=True, nogil=True, error_model="numpy")
def em_increments(N, Q, phi, n_ref, q_ref, phi_ref, current, dt, pv, z, field, carrier, out):
    """Vectorized one-step increments for an array of triples ``z`` (moment tests)."""
    for j in range(z.shape[0]):
        n1, q1, p1 = _em_update(N, Q, phi, n_ref, q_ref, phi_ref, current, dt, pv, z[j, 0], z[j, 1], z[j, 2], field, carrier)
        out[j, 0] = n1 - N
        out[j, 1] = q1 - Q
        out[j, 2] = p1 - phi


@nb.njit(cache=True, nogil=True, error_model="numpy")
def _amplitude_tables(n_ref, q_ref, phi_ref, dt, c_sp, tau_e):
    n = n_ref.shape[0]
    tab = np.empty((n, 5))
    for k in range(n):
        a_q, a_phi, a_n, c, s = noise_amplitudes(n_ref[k], q_ref[k], phi_ref[k], dt, c_sp, tau_e)
        tab[k, 0] = a_q
        tab[k, 1] = a_phi
        tab[k, 2] = a_n
        tab[k, 3] = c
        tab[k, 4] = s
    return tab


@nb.njit(cache=True, nogil=True, error_model="numpy")
def _run_chunk(first, count, N0, Q0, phi0, currents, tab, dt, pv, k_lo, k_hi, field, carrier, record, out):
    n_steps = currents.shape[0]
    n_rec = record.shape[0]
    for j in range(count):
        idx = np.uint64(first + j)
        t_lo = idx & np.uint64(0xFFFFFFFF)
        t_hi = idx >> np.uint64(32)
        N, Q, phi = N0, Q0, phi0
        r = 0
        while r < n_rec and record[r] == 0:
            out[j, r] = phi
            r += 1
        for k in range(n_steps):
            za = 0.0
            zb = 0.0
            zc = 0.0
            if field or carrier:
                za, zb, zc = normal_triple(np.uint64(k), t_lo, t_hi, k_lo, k_hi)
            N, Q, phi = _em_apply(
                N, Q, phi, currents[k], dt, pv,
                tab[k, 0], tab[k, 1], tab[k, 2], tab[k, 3], tab[k, 4],
                za, zb, zc, field, carrier,
            )
            while r < n_rec and record[r] == k + 1:
                out[j, r] = phi
                r += 1


def default_threads() -> int:
    env = os.environ.get(THREADS_ENV)
    if env:
        try:
            value = int(env)
        except ValueError:
            raise InvalidParameterError(THREADS_ENV, f"must be an integer, got {env!r}") from None
        if value < 1:
            raise InvalidParameterError(THREADS_ENV, f"must be >= 1, got {value}")
        return value
    return os.cpu_count() or 1


def simulate_phases(
    ref: ReferenceTrajectory,
    p: LaserParams,
    d: DerivedParams,
    flags: NoiseFlags,
    seed: int,
    n_traj: int,
    record_steps: Sequence[int] | None = None,
    first_index: int = 0,
    threads: int | None = None,
) -> np.ndarray:
    """Phases of ``n_traj`` trajectories at the given step indices.

    Trajectory ``i`` uses stream ``(seed, first_index + i)`` and starts at
    the reference state ``ref.state(0)``. Record index ``k`` means the phase
    after ``k`` steps; by default only the terminal phase is returned.
    The output has shape ``(n_traj, len(record_steps))`` and does not
    depend on ``threads``.
    """
    n_steps = len(ref)
    if record_steps is None:
        record_steps = [n_steps]
    record = np.asarray(record_steps, dtype=np.int64)
    if record.ndim != 1 or np.any(np.diff(record) < 0) or np.any(record < 0) or np.any(record > n_steps):
        raise InvalidParameterError("record_steps", "must be ascending step indices within the trajectory")
    if n_traj < 1:
        raise InvalidParameterError("n_traj", f"must be >= 1, got {n_traj}")
    if n_steps >= 2**32:
        raise InvalidParameterError("ref", "trajectory longer than the 32-bit step counter")
    if flags.any:
        _check_floor(ref.Q)
    pv = physics_tuple(p, d)
    tab = _amplitude_tables(ref.N, ref.Q, ref.phi, ref.dt, p.C_sp, p.tau_e)
    k_lo, k_hi = split_words(seed)
    split_words(first_index + n_traj - 1)
    s0 = ref.state(0)
    out = np.empty((n_traj, record.shape[0]))
    field, carrier = bool(flags.field_noise), bool(flags.carrier_shot_noise)

    def work(start: int) -> None:
        count = min(CHUNK, n_traj - start)
        _run_chunk(
            first_index + start, count, s0.N, s0.Q, s0.phi, ref.current, tab, ref.dt, pv,
            k_lo, k_hi, field, carrier, record, out[start:start + count],
        )

    starts = range(0, n_traj, CHUNK)
    workers = threads if threads is not None else default_threads()
    if workers < 1:
        raise InvalidParameterError("threads", f"must be >= 1, got {workers}")
    if workers == 1 or len(starts) == 1:
        for start in starts:
            work(start)
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            list(pool.map(work, starts))
    return out


def simulate_phase(
    ref: ReferenceTrajectory,
    p: LaserParams,
    d: DerivedParams,
    flags: NoiseFlags,
    seed: int,
    index: int = 0,
) -> float:
    """Terminal phase of a single trajectory (stream ``(seed, index)``)."""
    if not ref.converged:
        raise InvalidParameterError("ref", "reference trajectory has not converged")
    return float(simulate_phases(ref, p, d, flags, seed, 1, first_index=index, threads=1)[0, 0])


def simulate_path(
    ref: ReferenceTrajectory,
    p: LaserParams,
    d: DerivedParams,
    flags: NoiseFlags,
    seed: int,
    index: int = 0,
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Full (N, Q, phi) path of one trajectory, samples 0..n inclusive.

    Reference implementation stepping ``em_step``-equivalent updates one at a
    time; slow, meant for inspection and tests.
    """
    n = len(ref)
    k_lo, k_hi = split_words(seed)
    t_lo, t_hi = split_words(index)
    pv = physics_tuple(p, d)
    N = np.empty(n + 1)
    Q = np.empty(n + 1)
    phi = np.empty(n + 1)
    _path(ref.N, ref.Q, ref.phi, ref.current, ref.dt, pv, k_lo, k_hi, t_lo, t_hi,
          bool(flags.field_noise), bool(flags.carrier_shot_noise), N, Q, phi)
    return N, Q, phi


@nb.njit(cache=True, nogil=True, error_model="numpy")
def _path(n_ref, q_ref, phi_ref, currents, dt, pv, k_lo, k_hi, t_lo, t_hi, field, carrier, N, Q, phi):
    N[0] = n_ref[0]
    Q[0] = q_ref[0]
    phi[0] = phi_ref[0]
    for k in range(currents.shape[0]):
        za = 0.0
        zb = 0.0
        zc = 0.0
        if field or carrier:
            za, zb, zc = normal_triple(np.uint64(k), t_lo, t_hi, k_lo, k_hi)
        N[k + 1], Q[k + 1], phi[k + 1] = _em_update(
            N[k], Q[k], phi[k], n_ref[k], q_ref[k], phi_ref[k], currents[k], dt, pv, za, zb, zc, field, carrier
        )
