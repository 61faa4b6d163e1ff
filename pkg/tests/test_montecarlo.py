import dataclasses
import math

import numpy as np
import pytest

from gsphase.errors import DegenerateEnsembleError, InvalidParameterError, TooFewSamplesError
from gsphase.montecarlo import (
    HIST_BINS,
    TWO_PI,
    EnsembleConfig,
    constant_drive_variance,
    gaussianity,
    histogram,
    randomness_criterion,
    run_ensemble,
    summarize,
)
from gsphase.params import PumpWaveform, derive
from gsphase.rate_solver import settle_periodic
from gsphase.rng import standard_normals
from gsphase.sde import NOISE_OFF, NoiseFlags

W10 = PumpWaveform(8e-3, 12e-3, 10e9)


@pytest.fixture(scope="module")
def ref10(p, d):
    return settle_periodic(p, d, W10)


def test_config_validation():
    with pytest.raises(InvalidParameterError):
        EnsembleConfig(n_traj=1)
    with pytest.raises(InvalidParameterError):
        EnsembleConfig(master_seed=-1)
    with pytest.raises(InvalidParameterError):
        EnsembleConfig(dt=0.0)
    assert EnsembleConfig().n_traj == 50_000


def _with_sigma(sigma):
    st = summarize(np.array([0.0, 1.0, 2.0]))
    return dataclasses.replace(st, sigma_phi=sigma)


def test_randomness_criterion_is_strict():
    assert not randomness_criterion(_with_sigma(0.0))
    assert not randomness_criterion(_with_sigma(TWO_PI))
    assert randomness_criterion(_with_sigma(10.0))


def test_gaussianity_of_exact_normals():
    g = gaussianity(standard_normals(11, 100_000))
    assert abs(g.skewness) < 0.03 and abs(g.excess_kurtosis) < 0.06
    assert g.ks_distance < 0.01 and not g.degenerate


def test_gaussianity_flags_non_normal():
    x = standard_normals(12, 20_000) ** 2
    g = gaussianity(x)
    assert g.skewness > 2 and g.excess_kurtosis > 5


def test_gaussianity_edge_cases():
    assert gaussianity(np.full(200, 3.0)).degenerate
    with pytest.raises(TooFewSamplesError):
        gaussianity(np.zeros(99))


def test_summarize():
    x = standard_normals(13, 5000) * 7.0 + 2.0
    st = summarize(x, NoiseFlags())
    assert st.sigma_phi == pytest.approx(np.std(x, ddof=1), rel=1e-15)
    assert st.stderr_sigma == pytest.approx(st.sigma_phi / math.sqrt(2 * 4999))
    assert st.passes_2pi == (st.sigma_phi > TWO_PI)
    assert st.histogram.total == 5000 and len(st.histogram.counts) == HIST_BINS
    assert st.samples is None
    assert summarize(x, keep_samples=True).samples is not None
    with pytest.raises(DegenerateEnsembleError):
        summarize(np.ones(10), NoiseFlags())
    assert summarize(np.ones(10), NOISE_OFF).sigma_phi == 0.0


def test_histogram_keeps_outliers():
    x = np.concatenate([np.zeros(500), standard_normals(1, 500), [1e6, -1e6]])
    h = histogram(x)
    assert h.total == x.size
    assert h.counts[0] >= 1 and h.counts[-1] >= 1


def test_noise_off_ensemble(p, d, ref10):
    st = run_ensemble(p, d, W10, EnsembleConfig(n_traj=50, flags=NOISE_OFF), ref=ref10)
    assert st.sigma_phi == 0.0 and not st.passes_2pi
    assert st.mean_phi == ref10.end.phi


def test_thread_invariance(p, d, ref10):
    cfg = EnsembleConfig(n_traj=400, master_seed=9)
    a = run_ensemble(p, d, W10, cfg, threads=1, ref=ref10)
    b = run_ensemble(p, d, W10, cfg, threads=4, ref=ref10)
    assert a.same_values(b)
    c = run_ensemble(p, d, W10, cfg, threads=3)
    assert a.same_values(c)


def test_subsample_consistency(p, d, ref10):
    full = run_ensemble(p, d, W10, EnsembleConfig(n_traj=4000, master_seed=4), ref=ref10, keep_samples=True)
    half = summarize(full.samples[:2000])
    tol = 3 * math.hypot(full.stderr_sigma, half.stderr_sigma)
    assert abs(full.sigma_phi - half.sigma_phi) < tol


def test_seeds_change_sample_not_statistics(p, d, ref10):
    a = run_ensemble(p, d, W10, EnsembleConfig(n_traj=2000, master_seed=1), ref=ref10)
    b = run_ensemble(p, d, W10, EnsembleConfig(n_traj=2000, master_seed=2), ref=ref10)
    assert a.sigma_phi != b.sigma_phi
    assert abs(a.sigma_phi - b.sigma_phi) < 4 * math.hypot(a.stderr_sigma, b.stderr_sigma)


def test_subthreshold_diffusion_small(p, d):
    cfg = EnsembleConfig(n_traj=2000, master_seed=21)
    c = constant_drive_variance(p, d, 8e-3, [100e-12], cfg)
    expect = p.C_sp * c.N_ref / (2 * p.tau_e * c.Q_ref) * 100e-12
    assert abs(c.variance[0] - expect) < 3 * c.stderr[0]


def test_diffusion_grows_with_coupling_above_threshold(p):
    # with constant drive above threshold Q is set by the current, so the
    # phase diffusion scales with the spontaneous coupling
    vals = []
    for c_sp in (1e-6, 3e-6, 1e-5):
        q = p.replace(C_sp=c_sp)
        c = constant_drive_variance(q, derive(q), 22.4e-3, [400e-12], EnsembleConfig(n_traj=1500, master_seed=8))
        vals.append(c.variance[0])
    assert vals[0] < vals[1] < vals[2]


def test_variance_curve_validation(p, d):
    with pytest.raises(InvalidParameterError):
        constant_drive_variance(p, d, 8e-3, [2e-10, 1e-10], EnsembleConfig(n_traj=10))
