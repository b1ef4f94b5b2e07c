import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.special import lambertw

from rdagraph.hamiltonian import (
    HamiltonianProfile,
    InversionError,
    ZetaProfile,
    exp_decay,
    power_tail,
    validate_profile,
)

PRESETS = [exp_decay(), power_tail()]
ZS = np.linspace(0.0, 20.0, 200)


def F_exp_closed(z):
    # y + 1 - exp(-y/2) = z  <=>  y = z + 2 W0(exp((1 - z)/2) / 2) - 1
    return z + 2.0 * lambertw(0.5 * np.exp((1.0 - z) / 2.0)).real - 1.0


def F_pow_closed(z):
    return z - 0.5 * np.sqrt(4.0 * z + 9.0) + 1.5


def test_H_point_values():
    assert exp_decay().H(np.array([0.0, 0.0])) == 0.0
    assert exp_decay().H(np.array([1.0, 0.0])) == pytest.approx(2.0 - np.exp(-0.5), rel=1e-15)
    assert exp_decay().H(np.array([1.0, 0.0])) == pytest.approx(1.3934693, abs=1e-7)
    assert power_tail().H(np.array([1.0, 0.0])) == pytest.approx(np.sqrt(2.0), rel=1e-15)


def test_grad_perp_values():
    p = exp_decay()
    np.testing.assert_array_equal(p.grad_perp(np.zeros(2)), [0.0, 0.0])
    gp = p.grad_perp(np.array([1.0, 0.0]))
    assert gp[0] == 0.0
    assert gp[1] == pytest.approx(2.0 * (1.0 + 0.5 * np.exp(-0.5)), rel=1e-15)
    assert gp[1] == pytest.approx(2.6065307, abs=1e-7)


@pytest.mark.parametrize("p", PRESETS)
def test_grad_matches_finite_difference(p):
    rng = np.random.default_rng(3)
    x = rng.normal(size=(20, 2))
    h = 1e-6
    fd = np.stack([(p.H(x + [h, 0]) - p.H(x - [h, 0])) / (2 * h),
                   (p.H(x + [0, h]) - p.H(x - [0, h])) / (2 * h)], axis=-1)
    np.testing.assert_allclose(p.grad(x), fd, rtol=1e-7, atol=1e-8)


@pytest.mark.parametrize("p", PRESETS)
def test_laplacian_matches_finite_difference(p):
    x = np.array([[0.3, -0.7], [1.1, 0.4], [-2.0, 1.5]])
    h = 1e-4
    fd = sum(p.H(x + d) + p.H(x - d) - 2 * p.H(x) for d in ([h, 0], [0, h])) / h ** 2
    np.testing.assert_allclose(p.laplacian(x), fd, rtol=1e-6)


def test_F_closed_forms():
    np.testing.assert_allclose(exp_decay().F(ZS), F_exp_closed(ZS), rtol=0, atol=1e-10 * (1 + ZS.max()))
    np.testing.assert_allclose(power_tail().F(ZS), F_pow_closed(ZS), rtol=0, atol=1e-10 * (1 + ZS.max()))
    assert np.all(np.abs(exp_decay().F(ZS) - F_exp_closed(ZS)) <= 1e-10 * (1 + ZS))


def test_F_point_values():
    assert power_tail().F(1.0) == pytest.approx(2.5 - 0.5 * np.sqrt(13.0), rel=1e-14)
    assert power_tail().F(1.0) == pytest.approx(0.6972244, abs=1e-7)
    assert exp_decay().F(0.0) == 0.0
    assert F_exp_closed(0.0) == pytest.approx(0.0, abs=1e-15)
    assert isinstance(exp_decay().F(2.0), float)


def test_F_rejects_negative():
    with pytest.raises(ValueError):
        exp_decay().F(-1.0)


@pytest.mark.parametrize("p", PRESETS)
def test_F_round_trip(p):
    f = p.F(ZS)
    np.testing.assert_allclose(f + p.zeta(f), ZS, rtol=1e-10, atol=1e-300)


@pytest.mark.parametrize("p", PRESETS)
def test_T_equals_pi_F_prime(p):
    z = np.linspace(0.5, 20.0, 40)
    h = 1e-4
    fd = (p.F(z + h) - p.F(z - h)) / (2 * h)
    np.testing.assert_allclose(p.T(z), np.pi * fd, rtol=1e-8)


@pytest.mark.parametrize("p", PRESETS)
def test_A_prime_matches_finite_difference(p):
    z = np.linspace(0.5, 20.0, 40)
    h = 1e-4
    fd = (p.A(z + h) - p.A(z - h)) / (2 * h)
    np.testing.assert_allclose(p.A_prime(z), fd, rtol=1e-6)


@pytest.mark.parametrize("p", PRESETS)
def test_T_prime_matches_finite_difference(p):
    z = np.linspace(0.5, 20.0, 40)
    h = 1e-4
    fd = (p.T(z + h) - p.T(z - h)) / (2 * h)
    np.testing.assert_allclose(p.T_prime(z), fd, rtol=1e-6)


@pytest.mark.parametrize("p", PRESETS)
def test_values_at_vertex(p):
    assert p.T(0.0) == pytest.approx(2 * np.pi / 3, rel=1e-15)
    assert p.A(0.0) == 0.0
    assert p.A_prime(0.0) == pytest.approx(2 * np.pi, rel=1e-15)
    assert p.alpha(0.0) == 0.0
    assert p.beta(0.0) == pytest.approx(3.0, rel=1e-14)


@pytest.mark.parametrize("p", PRESETS)
def test_bounds(p):
    r0, rt = p.zeta.r0, p.zeta.r0_tilde
    T, A, F = p.T(ZS), p.A(ZS), p.F(ZS)
    assert np.all(T >= np.pi / (1 + rt) - 1e-14) and np.all(T <= np.pi / (1 - r0) + 1e-14)
    assert np.all(A >= 2 * np.pi * (1 - r0) / (1 + rt) * ZS - 1e-12)
    assert np.all(A <= 2 * np.pi * (1 + rt) / (1 - r0) * ZS + 1e-12)
    assert np.all(F >= ZS / (1 + rt) - 1e-12) and np.all(F <= ZS / (1 - r0) + 1e-12)
    fp = p.F_prime(ZS)
    assert np.all(fp >= 1 / (1 + rt) - 1e-14) and np.all(fp <= 1 / (1 - r0) + 1e-14)


@pytest.mark.parametrize("p", PRESETS)
def test_alpha_beta_identities(p):
    al, be = p.graph_coefficients(ZS)
    np.testing.assert_allclose(al * p.T(ZS), p.A(ZS), rtol=1e-10, atol=1e-300)
    np.testing.assert_allclose(be * p.T(ZS), p.A_prime(ZS), rtol=1e-10)
    np.testing.assert_allclose(al, p.alpha(ZS), rtol=1e-12, atol=1e-300)
    np.testing.assert_allclose(be, p.beta(ZS), rtol=1e-12)


@given(st.floats(0.0, 500.0))
@settings(max_examples=200, deadline=None)
def test_F_inverse_property(z):
    for p in PRESETS:
        f = p.F(z)
        assert f >= 0
        assert f + p.zeta(f) == pytest.approx(z, rel=1e-10, abs=1e-300)


@given(st.floats(-50, 50), st.floats(-50, 50))
@settings(max_examples=200, deadline=None)
def test_grad_perp_orthogonal(x1, x2):
    for p in PRESETS:
        x = np.array([x1, x2])
        assert np.dot(p.grad_perp(x), p.grad(x)) == pytest.approx(0.0, abs=1e-9 * (1 + x1 * x1 + x2 * x2))
        assert p.H(x) >= (1 - p.zeta.r0) * (x1 * x1 + x2 * x2) - 1e-12


@given(st.floats(0.0, 100.0), st.floats(1e-3, 10.0))
@settings(max_examples=100, deadline=None)
def test_F_increasing(z, dz):
    for p in PRESETS:
        assert p.F(z + dz) > p.F(z)


def test_custom_profile_matches_preset():
    a = 0.5
    custom = HamiltonianProfile(ZetaProfile.custom(
        lambda y: -np.expm1(-a * y), lambda y: a * np.exp(-a * y),
        lambda y: -a * a * np.exp(-a * y), 0.0, a))
    np.testing.assert_allclose(custom.F(ZS), exp_decay().F(ZS), rtol=1e-12, atol=1e-15)
    with pytest.raises(TypeError):
        custom.kernel_args


def test_non_monotone_profile_fails_inversion():
    bad = HamiltonianProfile(ZetaProfile.custom(
        lambda y: -1.5 * np.sin(y), lambda y: -1.5 * np.cos(y), lambda y: 1.5 * np.sin(y),
        0.5, 1.5))
    with pytest.raises(InversionError):
        bad.F(np.linspace(0.0, 10.0, 50))


@pytest.mark.parametrize("p", PRESETS)
def test_validate_presets(p):
    report = validate_profile(p, 20.0, 200)
    assert report.passed, str(report)
    assert report.zeta_second_sign != 0


def test_validate_flags_broken_profile():
    bad = HamiltonianProfile(ZetaProfile.custom(
        lambda y: -1.2 * y, lambda y: -1.2 + 0 * y, lambda y: 0 * y, 0.5, 0.1))
    report = validate_profile(bad, 20.0, 50)
    assert not report.passed
    assert report.first_violation == 0.0
    assert "zeta'" in report.reason


def test_validate_flags_zero_curvature():
    flat = HamiltonianProfile(ZetaProfile.custom(
        lambda y: 0.25 * y, lambda y: 0.25 + 0 * y, lambda y: 0 * y, 0.0, 0.25))
    report = validate_profile(flat, 20.0, 50)
    assert not report.passed
    assert "zeta''" in report.reason


def test_validate_rejects_bad_arguments():
    with pytest.raises(ValueError):
        validate_profile(exp_decay(), 0.0, 10)
