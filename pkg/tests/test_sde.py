import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from gsphase.errors import InvalidParameterError, ReferenceUnderflowError
from gsphase.params import LaserParams, PumpWaveform, derive
from gsphase.rate_solver import FieldState, det_step, physics_tuple, settle_periodic
from gsphase.rng import normal_triples
from gsphase.sde import (
    NOISE_OFF,
    Q_FLOOR,
    THREADS_ENV,
    NoiseFlags,
    default_threads,
    diffusion,
    em_increments,
    em_step,
    simulate_path,
    simulate_phase,
    simulate_phases,
)

DT = 1e-14


@pytest.fixture(scope="module")
def ref10(p, d):
    # 10 GHz keeps the period short (10^4 steps)
    return settle_periodic(p, d, PumpWaveform(8e-3, 12e-3, 10e9), dt=DT)


def test_diffusion_coefficients(p):
    c = diffusion((6.5e7, 8.99e3), p)
    assert c.D_phiphi == pytest.approx(1.8076e7, rel=1e-4)
    r = 6.5e7 / p.tau_e
    assert c.D_QQ == pytest.approx(p.C_sp * r * 8.99e3, rel=1e-14)
    assert c.D_NN == pytest.approx(r + c.D_QQ, rel=1e-14)
    assert c.D_NQ == -c.D_QQ
    assert c.D_Qphi == 0.0 and c.D_Nphi == 0.0


def test_diffusion_limits(p):
    assert all(x == 0 for x in diffusion((0.0, 5.0), p))
    c = diffusion((6e7, 10.0), p.replace(C_sp=0.0))
    assert c.D_QQ == 0 and c.D_phiphi == 0 and c.D_NN == 6e7 / p.tau_e


def test_diffusion_rejects_bad_reference(p):
    with pytest.raises(ReferenceUnderflowError):
        diffusion((6e7, 0.0), p)
    with pytest.raises(InvalidParameterError):
        diffusion((-1.0, 1.0), p)


STATE = FieldState(6.3e7, 1200.0, 0.7)
REFS = (6.31e7, 1150.0, 0.5)


def test_zero_noise_is_det_step(p, d):
    assert em_step(STATE, REFS, p, d, 15e-3, DT, (0.0, 0.0, 0.0)) == det_step(STATE, p, d, 15e-3, DT)
    assert em_step(STATE, REFS, p, d, 15e-3, DT, (1.0, -2.0, 0.5), NOISE_OFF) == det_step(STATE, p, d, 15e-3, DT)


@given(st.tuples(st.floats(-8, 8), st.floats(-8, 8), st.floats(-8, 8)))
def test_no_coupling_no_carrier_noise_is_det_step(z):
    q = LaserParams(C_sp=0.0)
    dq = derive(q)
    flags = NoiseFlags(field_noise=True, carrier_shot_noise=False)
    assert em_step(STATE, REFS, q, dq, 15e-3, DT, z, flags) == det_step(STATE, q, dq, 15e-3, DT)


def test_noise_terms_by_hand(p, d):
    z = (0.3, -1.1, 0.8)
    N, Q, phi = REFS
    base = det_step(STATE, p, d, 15e-3, DT)
    f_q = 2 * math.sqrt(p.C_sp * N * Q / (2 * p.tau_e)) * (z[0] * math.cos(phi) + z[1] * math.sin(phi)) * math.sqrt(DT)
    f_phi = math.sqrt(p.C_sp * N / (2 * p.tau_e * Q)) * (z[1] * math.cos(phi) - z[0] * math.sin(phi)) * math.sqrt(DT)
    f_n = math.sqrt(2 * N / p.tau_e) * z[2] * math.sqrt(DT)
    s = em_step(STATE, REFS, p, d, 15e-3, DT, z)
    assert s.Q == pytest.approx(base.Q + f_q, rel=1e-12)
    assert s.phi == pytest.approx(base.phi + f_phi, rel=1e-12)
    assert s.N == pytest.approx(base.N - f_q + f_n, rel=1e-12)

    field_only = em_step(STATE, REFS, p, d, 15e-3, DT, z, NoiseFlags(True, False))
    assert field_only.N == pytest.approx(base.N - f_q, rel=1e-12)
    carrier_only = em_step(STATE, REFS, p, d, 15e-3, DT, z, NoiseFlags(False, True))
    assert (carrier_only.Q, carrier_only.phi) == (base.Q, base.phi)
    assert carrier_only.N == pytest.approx(base.N + f_n, rel=1e-12)


def test_em_step_guards(p, d):
    with pytest.raises(ReferenceUnderflowError):
        em_step(STATE, (6e7, Q_FLOOR / 2, 0.0), p, d, 0.0, DT, (0, 0, 0))
    with pytest.raises(InvalidParameterError):
        em_step(STATE, REFS, p, d, 0.0, 0.0, (0, 0, 0))


@given(
    st.floats(0, 1e8), st.floats(0, 1e5), st.floats(1e-12, 1e5), st.floats(0, 1e8),
    st.tuples(st.floats(-60, 60), st.floats(-60, 60), st.floats(-60, 60)),
)
def test_clamping_under_extreme_draws(p, d, N, Q, q_ref, n_ref, z):
    s = em_step(FieldState(N, Q, 0.0), (n_ref, q_ref, 1.0), p, d, 20e-3, DT, z)
    assert s.N >= 0 and s.Q >= 0
    assert all(math.isfinite(x) for x in s)


def test_frozen_phase_walk(p, d):
    # G_L = 1 at N = N_th removes the phase drift; the walk is an i.i.d. Gaussian sum
    N, Q = p.N_th, 8.99e3
    K, M = 2000, 500
    z = np.concatenate([normal_triples(99, i, M) for i in range(K)])
    out = np.empty_like(z)
    em_increments(N, Q, 0.0, N, Q, 0.0, 0.0, DT, physics_tuple(p, d), z, True, True, out)
    walk = out[:, 2].reshape(K, M).sum(axis=1)
    expect = p.C_sp * N / (2 * p.tau_e * Q) * M * DT
    var = walk.var(ddof=1)
    assert abs(var - expect) < 3 * expect * math.sqrt(2 / (K - 1))


def test_noise_off_trajectory_equals_reference(ref10, p, d):
    phases = simulate_phases(ref10, p, d, NOISE_OFF, 1, 3, record_steps=[0, 5000, len(ref10)])
    assert np.all(phases[:, 0] == 0.0)
    assert np.all(phases[:, 1] == ref10.phi[5000])
    assert np.all(phases[:, 2] == ref10.end.phi)
    N, Q, phi = simulate_path(ref10, p, d, NOISE_OFF, 1)
    np.testing.assert_array_equal(N[:-1], ref10.N)
    np.testing.assert_array_equal(Q[:-1], ref10.Q)
    np.testing.assert_array_equal(phi[:-1], ref10.phi)
    assert (N[-1], Q[-1], phi[-1]) == tuple(ref10.end)


def test_simulate_phase_is_em_step_loop(ref10, p, d):
    seed, idx = 2024, 17
    z = normal_triples(seed, idx, len(ref10))
    s = ref10.state(0)
    for k in range(len(ref10)):
        s = em_step(s, ref10.state(k), p, d, ref10.current[k], ref10.dt, z[k])
    assert simulate_phase(ref10, p, d, NoiseFlags(), seed, idx) == s.phi
    N, Q, phi = simulate_path(ref10, p, d, NoiseFlags(), seed, idx)
    assert (N[-1], Q[-1], phi[-1]) == tuple(s)


def test_same_seed_same_phase_distinct_seeds_differ(ref10, p, d):
    a = simulate_phase(ref10, p, d, NoiseFlags(), 5)
    assert a == simulate_phase(ref10, p, d, NoiseFlags(), 5)
    b = simulate_phase(ref10, p, d, NoiseFlags(), 6)
    assert a != b and abs(a - b) < 50


def test_thread_count_does_not_change_output(ref10, p, d):
    one = simulate_phases(ref10, p, d, NoiseFlags(), 3, 300, threads=1)
    many = simulate_phases(ref10, p, d, NoiseFlags(), 3, 300, threads=4)
    np.testing.assert_array_equal(one, many)
    part = simulate_phases(ref10, p, d, NoiseFlags(), 3, 100, first_index=150, threads=2)
    np.testing.assert_array_equal(one[150:250], part)


def test_record_step_validation(ref10, p, d):
    with pytest.raises(InvalidParameterError):
        simulate_phases(ref10, p, d, NoiseFlags(), 1, 2, record_steps=[5, 3])
    with pytest.raises(InvalidParameterError):
        simulate_phases(ref10, p, d, NoiseFlags(), 1, 2, record_steps=[len(ref10) + 1])


def test_unconverged_reference_rejected(ref10, p, d):
    bad = type(ref10)(ref10.dt, ref10.N, ref10.Q, ref10.phi, ref10.current, ref10.end, False, 0)
    with pytest.raises(InvalidParameterError):
        simulate_phase(bad, p, d, NoiseFlags(), 1)


def test_underflowing_reference_raises(p, d):
    ref = settle_periodic(p, d, PumpWaveform(-5e-3, 5e-3, 10e9), dt=DT)
    with pytest.raises(ReferenceUnderflowError):
        simulate_phases(ref, p, d, NoiseFlags(), 1, 4)
    # without noise the floor is irrelevant
    simulate_phases(ref, p, d, NOISE_OFF, 1, 4)


def test_clamp_fuzz_at_lowest_bias(p, d):
    # lowest stable bias at 2.5 GHz: the deepest intensity minimum of the family
    ref = settle_periodic(p, d, PumpWaveform(4e-3, 14e-3, 2.5e9), dt=DT)
    lo = 1e300
    for i in range(25):  # 25 x 40000 = 10^6 draws
        N, Q, phi = simulate_path(ref, p, d, NoiseFlags(), 77, i)
        assert np.all(np.isfinite(N)) and np.all(np.isfinite(Q)) and np.all(np.isfinite(phi))
        lo = min(lo, N.min(), Q.min())
    assert lo >= 0.0


def test_default_threads(monkeypatch):
    monkeypatch.setenv(THREADS_ENV, "3")
    assert default_threads() == 3
    monkeypatch.setenv(THREADS_ENV, "zero")
    with pytest.raises(InvalidParameterError):
        default_threads()
    monkeypatch.setenv(THREADS_ENV, "0")
    with pytest.raises(InvalidParameterError):
        default_threads()
    monkeypatch.delenv(THREADS_ENV)
    assert default_threads() >= 1
