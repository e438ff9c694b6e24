import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qchannel.model import (ChannelParams, aspect_ratio, beta_from_lambda,
                            check_validity, derive_scales,
                            experiment_quantumness, k0_from_aspect,
                            lambda_from_experiment, lambda_from_quantumness,
                            params_at_lambda, potential_eval)


def test_potential_modulated_harmonic_value():
    p = ChannelParams(k0=1.0, k1=0.3, L=1.0)
    assert potential_eval(p, 0.0, 1.0) == pytest.approx(0.65, abs=1e-15)


def test_potential_zero_on_axis():
    p = ChannelParams(k0=7.0, k1=0.5, L=2.0, beta=0.3)
    for x in (0.0, 0.5, 1.0, 1.7):
        assert potential_eval(p, x, 0.0) == 0.0


def test_potential_uncorrugated():
    p = ChannelParams(k0=1.0, k1=0.0)
    assert potential_eval(p, 0.123, 2.0) == pytest.approx(2.0, abs=1e-15)


@given(x=st.floats(-3, 3), y=st.floats(-5, 5),
       k1=st.floats(0, 0.9), L=st.floats(0.5, 2))
@settings(max_examples=60, deadline=None)
def test_potential_periodicity_and_evenness(x, y, k1, L):
    p = ChannelParams(k0=2.0, k1=k1, L=L)
    u = potential_eval(p, x, y)
    assert potential_eval(p, x + L, y) == pytest.approx(u, rel=1e-12, abs=1e-12)
    assert potential_eval(p, x, -y) == pytest.approx(u, rel=1e-15, abs=1e-15)


def test_param_invariants_rejected():
    with pytest.raises(ValueError):
        ChannelParams(k0=0.0)
    with pytest.raises(ValueError):
        ChannelParams(k0=1.0, k1=1.0)     # stiffness touches zero
    with pytest.raises(ValueError):
        ChannelParams(k0=1.0, k1=-0.1)
    with pytest.raises(ValueError):
        ChannelParams(k0=1.0, beta=-1.0)


def test_derived_scales_natural_units():
    s = derive_scales(ChannelParams(k0=1.0))
    assert s.lambda_T2 == pytest.approx(2 * math.pi, rel=1e-15)
    assert s.L_y**2 == pytest.approx(2.0, rel=1e-14)
    assert s.Lambda == pytest.approx(1.0 / 48.0, rel=1e-14)
    assert s.omega == 1.0
    assert s.L_omega == pytest.approx(2.0, rel=1e-15)


def test_lambda_scales_as_beta_squared():
    p1 = ChannelParams(k0=3.0, beta=0.7)
    p4 = ChannelParams(k0=3.0, beta=2.8)
    s1, s4 = derive_scales(p1), derive_scales(p4)
    assert s4.lambda_T2 / s1.lambda_T2 == pytest.approx(4.0, rel=1e-13)
    assert (s1.L_y / s4.L_y) ** 2 == pytest.approx(4.0, rel=1e-13)
    assert s4.Lambda / s1.Lambda == pytest.approx(16.0, rel=1e-12)


@given(c=st.floats(0.1, 10))
@settings(max_examples=30, deadline=None)
def test_thermal_wavelength_covariance(c):
    base = ChannelParams(k0=2.0, beta=0.5, hbar=1.3, mass=0.7)
    scaled = ChannelParams(k0=2.0, beta=0.5 * c, hbar=1.3, mass=0.7)
    assert derive_scales(scaled).lambda_T2 == pytest.approx(
        c * derive_scales(base).lambda_T2, rel=1e-12)


def test_classical_limit_lambda_vanishes():
    lams = [derive_scales(ChannelParams(k0=5.0, beta=b)).Lambda
            for b in (1.0, 0.1, 0.01, 0.001)]
    assert all(l2 < l1 for l1, l2 in zip(lams, lams[1:]))
    assert lams[-1] < 1e-6 * lams[0] * 1e3


def test_beta_lambda_inversion_roundtrip():
    p = ChannelParams(k0=123.0, k1=0.2, hbar=0.9, mass=1.4, beta=1.0)
    pl = params_at_lambda(p, 0.07)
    assert derive_scales(pl).Lambda == pytest.approx(0.07, rel=1e-13)
    assert beta_from_lambda(0.07, p.k0, p.hbar, p.mass) == pl.beta


def test_k0_from_aspect_roundtrip():
    k0 = k0_from_aspect(15.8)
    assert aspect_ratio(ChannelParams(k0=k0)) == pytest.approx(15.8, rel=1e-13)


def test_experiment_table_composition():
    assert experiment_quantumness(1.0, 10.0, 1.0, 1.0) == pytest.approx(30.0)
    assert lambda_from_quantumness(30.0) == pytest.approx(0.0995, abs=2e-4)
    assert lambda_from_experiment(1.0, 10.0, 1.0, 1.0) == pytest.approx(
        30.0 / (96.0 * math.pi), rel=1e-14)


def test_experiment_achievable_range():
    # beta k0 lambda_T^2 = 1e3 maps to Lambda ~ 3.3, inside the achievable window
    assert lambda_from_quantumness(1e3) == pytest.approx(3.3157, abs=2e-4)
    assert lambda_from_quantumness(0.0) == 0.0


def test_validity_margins():
    # beta k0 lambda_T^2 = 2 pi beta^2 k0 ; choose it equal to 1
    beta = 1.0 / math.sqrt(2 * math.pi)
    rep = check_validity(ChannelParams(k0=1.0, k1=0.3, beta=beta))
    assert rep.lambda_margin == pytest.approx(1.0 / (48 * math.pi), rel=1e-12)
    assert rep.lambda_small

    # boundary case: ratio exactly one -> not small
    beta = math.sqrt(24.0)
    rep = check_validity(ChannelParams(k0=1.0, k1=0.3, beta=beta))
    assert rep.lambda_margin == pytest.approx(1.0, rel=1e-12)
    assert not rep.lambda_small
    assert rep.messages   # human-readable warning text present


def test_validity_flat_channel_separates():
    rep = check_validity(ChannelParams(k0=1.0, k1=0.0))
    assert math.isinf(rep.lengthscale_margin)
    assert rep.lengthscale_sep


def test_validity_never_raises_in_bad_regime():
    rep = check_validity(ChannelParams(k0=1e4, k1=0.9, beta=10.0))
    assert not rep.lambda_small
    assert rep.messages
