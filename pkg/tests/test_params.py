import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from gsphase.errors import InvalidParameterError
from gsphase.params import (
    E_CHARGE,
    HBAR,
    LaserParams,
    PumpWaveform,
    derive,
    photons_to_watts,
    pump_current,
)

# hand-evaluated from the defining formulas (independent of the package)
I_TH = 6.5e7 * 1.602176634e-19 / 1e-9
I_TR = 6.0e7 * 1.602176634e-19 / 1e-9
HBAR_OMEGA = 1.054571817e-34 * 2 * math.pi * 193.548e12
C_P = 0.3 * HBAR_OMEGA / (2 * 0.12 * 1e-12)


def test_constants_are_codata():
    assert E_CHARGE == 1.602176634e-19
    assert HBAR == 1.054571817e-34


def test_derived_values(d):
    assert d.I_th == pytest.approx(10.414148e-3, rel=1e-6)
    assert d.I_tr == pytest.approx(9.613060e-3, rel=1e-6)
    assert d.hbar_omega0 == pytest.approx(1.28246e-19, rel=1e-5)
    assert d.c_P == pytest.approx(1.60308e-7, rel=1e-5)
    assert d.chi_Q == pytest.approx(3.20616e-6, rel=1e-5)
    assert d.I_th == pytest.approx(I_TH, rel=1e-15)
    assert d.I_tr == pytest.approx(I_TR, rel=1e-15)
    assert d.c_P == pytest.approx(C_P, rel=1e-15)


def test_rounded_currents(d):
    assert round(d.I_th * 1e3, 1) == 10.4
    assert round(d.I_tr * 1e3, 1) == 9.6


def test_chi_q_is_chi_times_cp(p):
    for chi in (0.0, 1.0, 20.0, 40.0):
        dd = derive(p.replace(chi=chi))
        assert dd.chi_Q == chi * dd.c_P
    assert derive(p.replace(chi=0.0)).chi_Q == 0.0


def test_derive_is_pure(p):
    assert derive(p) == derive(LaserParams())


@pytest.mark.parametrize(
    "field,value",
    [
        ("tau_ph", 0.0), ("tau_e", -1e-9), ("eps", 0.0), ("eps", 1.5), ("N_tr", 0.0),
        ("Gamma", 0.0), ("Gamma", 1.1), ("nu0", -1.0), ("chi", -1.0), ("C_sp", -0.1),
        ("C_sp", 2.0), ("alpha", math.inf), ("tau_ph", math.nan),
    ],
)
def test_invalid_field_is_named(field, value):
    with pytest.raises(InvalidParameterError) as exc:
        LaserParams(**{field: value})
    assert exc.value.field == field
    assert field in str(exc.value)


def test_threshold_must_exceed_transparency():
    with pytest.raises(InvalidParameterError) as exc:
        LaserParams(N_th=5e7)
    assert exc.value.field == "N_th"


def test_negative_alpha_allowed():
    assert LaserParams(alpha=-3.0).alpha == -3.0


def test_photons_to_watts(d):
    assert photons_to_watts(0.0, d) == 0.0
    assert photons_to_watts(8.99e3, d) == pytest.approx(1.44e-3, rel=1e-3)
    assert photons_to_watts(1.0 / d.c_P, d) == pytest.approx(1.0, rel=1e-15)
    arr = photons_to_watts(np.array([0.0, 1.0, 2.0]), d)
    np.testing.assert_array_equal(arr, np.array([0.0, d.c_P, 2 * d.c_P]))
    with pytest.raises(InvalidParameterError):
        photons_to_watts(-1.0, d)


@given(st.floats(0, 1e7), st.floats(0, 1e7))
def test_photons_to_watts_linear(d, a, b):
    assert photons_to_watts(a + b, d) == pytest.approx(photons_to_watts(a, d) + photons_to_watts(b, d), rel=1e-12)


def test_pump_examples():
    w = PumpWaveform(5e-3, 12e-3, 2.5e9)
    T = w.period
    assert T == pytest.approx(400e-12)
    assert pump_current(w, 0.0) == pytest.approx(17e-3)
    assert pump_current(w, 0.75 * T) == pytest.approx(5e-3)
    assert pump_current(w, 3.25 * T) == pytest.approx(17e-3)


@given(
    st.floats(0.05, 0.95),
    st.integers(0, 1023),
    st.integers(0, 50),
)
def test_pump_periodic(duty, m, k):
    # f_p = 1 and dyadic t keep t + k exactly representable
    w = PumpWaveform(1.0, 2.0, 1.0, duty)
    t = m / 1024
    assert pump_current(w, t) == pump_current(w, t + k)


def test_pump_array_and_duty():
    w = PumpWaveform(1e-3, 2e-3, 1e9, duty=0.25)
    t = np.array([0.0, 0.2e-9, 0.3e-9, 0.9e-9])
    np.testing.assert_allclose(pump_current(w, t), [3e-3, 3e-3, 1e-3, 1e-3])


@pytest.mark.parametrize("kw,field", [({"f_p": 0.0}, "f_p"), ({"duty": 1.0}, "duty"), ({"duty": 0.0}, "duty"), ({"I_p": -1e-3}, "I_p")])
def test_waveform_validation(kw, field):
    args = dict(I_b=0.0, I_p=1e-3, f_p=1e9)
    args.update(kw)
    with pytest.raises(InvalidParameterError) as exc:
        PumpWaveform(**args)
    assert exc.value.field == field
