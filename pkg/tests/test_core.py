import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from wgoptomech.core import (ModelParams, parse_branch, potential_full,
                             potential_hermitian, potential_hermitian_derivative)
from wgoptomech.errors import ConfigError


def test_origin_value():
    for eta in (0.0, 1.3, 2.0, 5.0):
        assert potential_full(0.0, ModelParams(eta=eta)) == pytest.approx(4.0 + 0.0j, abs=1e-15)


def test_eta_zero_is_shifted_parabola():
    p = ModelParams(eta=0.0)
    x = np.linspace(-5, 5, 11)
    np.testing.assert_allclose(potential_hermitian(x, p), x**2 / 2 + 4.0, atol=1e-14)
    np.testing.assert_allclose(potential_full(x, p).imag, 0.0, atol=1e-14)


def test_half_period_point():
    p = ModelParams(eta=2.0)
    v = potential_full(math.pi / 2, p)
    assert v.real == pytest.approx(math.pi**2 / 8 - 4.0, abs=1e-14)
    assert abs(v.imag) < 1e-14


def test_hermitian_value_against_high_precision():
    mpmath.mp.dps = 40
    ref = mpmath.mpf(2) + 4 * mpmath.cos(4)
    got = potential_hermitian(2.0, ModelParams(eta=2.0))
    assert abs(got - float(ref)) < 1e-14
    assert got == pytest.approx(-0.6145744834544478, abs=1e-12)


def test_derivatives_match_finite_differences():
    p = ModelParams(eta=2.3, phi=0.7, branch=-1)
    x, d = 1.1, 1e-5
    num1 = (potential_hermitian(x + d, p) - potential_hermitian(x - d, p)) / (2 * d)
    num2 = (potential_hermitian(x + d, p) - 2 * potential_hermitian(x, p)
            + potential_hermitian(x - d, p)) / d**2
    assert potential_hermitian_derivative(x, p, 1) == pytest.approx(num1, rel=1e-8)
    assert potential_hermitian_derivative(x, p, 2) == pytest.approx(num2, rel=1e-4)


@settings(max_examples=60, deadline=None)
@given(x=st.floats(-20, 20), eta=st.floats(0, 8), gamma0=st.floats(0, 10))
def test_pt_symmetry_at_quarter_phase(x, eta, gamma0):
    p = ModelParams(gamma0=gamma0, eta=eta)
    lhs = potential_full(-x, p)
    rhs = np.conj(potential_full(x, p))
    assert abs(lhs - rhs) < 1e-14 * (p.omega + gamma0) * max(1.0, x * x)


@settings(max_examples=60, deadline=None)
@given(x=st.floats(-10, 10), eta=st.floats(0, 6), phi=st.floats(0, 2 * math.pi - 1e-9))
def test_branch_sign_absorbed_by_phase(x, eta, phi):
    minus = ModelParams(eta=eta, phi=phi, branch="-")
    plus = ModelParams(eta=eta, phi=(phi + math.pi) % (2 * math.pi), branch="+")
    assert abs(potential_full(x, minus) - potential_full(x, plus)) < 1e-12 * (1 + x * x)


def test_hermitian_is_real_part_exactly():
    p = ModelParams(eta=1.7, phi=0.3)
    x = np.linspace(-8, 8, 101)
    assert np.array_equal(potential_hermitian(x, p), potential_full(x, p).real)


@pytest.mark.parametrize("kwargs", [dict(omega=0.0), dict(gamma0=-1.0), dict(eta=-0.1),
                                    dict(branch="x")])
def test_invalid_params(kwargs):
    with pytest.raises(ConfigError):
        ModelParams(**kwargs)


def test_phase_reduced_and_branch_parsing():
    assert ModelParams(phi=2 * math.pi + 0.5).phi == pytest.approx(0.5)
    assert parse_branch("+") == 1 and parse_branch("-") == -1 and parse_branch(-1) == -1
