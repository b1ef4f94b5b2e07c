import numpy as np
import pytest

from rdagraph.hamiltonian import exp_decay, power_tail
from rdagraph.particle_mc import (
    ParticleConfig,
    asymptotic_error,
    em_particle_X,
    estimate_barU_points,
    estimate_U_points,
    evaluation_points,
    mc_semigroup_2d,
    mc_semigroup_graph,
    outer_coefficients,
    scheme_Y,
)
from rdagraph.particle_mc import _planar_noise
from rdagraph.rda2d import NonFiniteStateError

P = exp_decay()


def cfg(**kw):
    base = dict(profile=P, eps=0.5, tau=2.0 ** -6, N=4, P=200, Q_outer=3, M2=2, h=1.0)
    base.update(kw)
    return ParticleConfig(**base)


def test_config_validation():
    c = cfg(tau_p=2.0 ** -8)
    assert c.substeps == 4 and c.n_particle_steps == 16
    assert c.T == pytest.approx(4 * 2.0 ** -6)
    assert cfg().tau_p == cfg().tau
    with pytest.raises(ValueError):
        cfg(tau_p=0.003)
    with pytest.raises(ValueError):
        cfg(eps=0.0)
    with pytest.raises(ValueError):
        cfg(M1=2)
    d = c.with_eps(0.1)
    assert d.eps == 0.1 and d.substeps == 4 and d.tau_p == c.tau_p


def test_evaluation_points_order():
    pts = evaluation_points(cfg(M2=2, h=2.0))
    assert pts.shape == (9, 2)
    np.testing.assert_array_equal(pts[:3], [[-2.0, -2.0], [0.0, -2.0], [2.0, -2.0]])
    np.testing.assert_array_equal(pts[4], [0.0, 0.0])


@pytest.mark.parametrize("p", [exp_decay(), power_tail()])
def test_em_energy_drift_second_order_per_step(p):
    # with no noise a single EM step moves H by O(tau^2)
    x0 = np.array([[0.8, -0.3], [1.5, 0.4]])
    drift = []
    for tau in (1e-3, 5e-4):
        c = ParticleConfig(profile=p, eps=0.1, tau=tau, N=1)
        x1 = em_particle_X(c, x0, np.zeros((1, 2, 2)))
        drift.append(np.abs(p.H(x1) - p.H(x0)).max())
    assert drift[0] / drift[1] == pytest.approx(4.0, rel=0.05)


def test_em_pure_noise_when_ratio_vanishes():
    c = cfg(eps=1e300)
    rng = np.random.default_rng(0)
    dB = rng.normal(size=(4, 2)) * 0.1
    x0 = np.array([0.3, 0.7])
    np.testing.assert_allclose(em_particle_X(c, x0, dB), x0 + dB.sum(axis=0), rtol=1e-15)
    traj = em_particle_X(c, x0, dB, store=True)
    assert traj.shape == (5, 2)
    np.testing.assert_array_equal(traj[0], x0)


def test_em_reports_nonfinite_and_shape():
    c = cfg()
    dB = np.zeros((4, 2))
    dB[2, 1] = np.nan
    with pytest.raises(NonFiniteStateError) as info:
        em_particle_X(c, np.zeros(2), dB)
    assert info.value.step == 2
    with pytest.raises(ValueError):
        em_particle_X(c, np.zeros(2), np.zeros((4, 3)))


def test_scheme_Y_first_step_from_vertex():
    tau = 0.01
    c = ParticleConfig(profile=P, eps=1.0, tau=tau, N=1)
    # beta(0) = 3 for this profile; the diffusion vanishes at the vertex
    assert scheme_Y(c, 0.0, np.zeros(1)) == pytest.approx(3 * tau, rel=1e-14)
    assert scheme_Y(c, 0.0, np.array([0.7])) == pytest.approx(3 * tau, rel=1e-14)
    with pytest.raises(ValueError):
        scheme_Y(c, -0.1, np.zeros(1))


def test_scheme_Y_stays_finite_and_mean_grows():
    # E[Y_t] ~ beta(0) t for short times from the vertex
    t = 2.0 ** -8
    c = ParticleConfig(profile=P, eps=1.0, tau=t / 16, N=16, P=20000)
    m, se = mc_semigroup_graph(c, lambda y: y, 0.0, t)
    assert np.isfinite(m)
    assert m == pytest.approx(3 * t, rel=0.1)


def test_semigroup_constants_and_time_zero():
    c = cfg()
    m, se = mc_semigroup_2d(c, lambda x: np.ones(x.shape[:-1]), np.array([0.2, 0.1]), 4 * c.tau)
    assert (m, se) == (1.0, 0.0)
    m, se = mc_semigroup_graph(c, np.ones_like, 1.3, 4 * c.tau)
    assert (m, se) == (1.0, 0.0)
    m, se = mc_semigroup_2d(c, lambda x: P.H(x), np.array([0.2, 0.1]), 0.0)
    assert m == P.H(np.array([0.2, 0.1])) and se == 0.0
    with pytest.raises(ValueError):
        mc_semigroup_graph(c, np.ones_like, 1.0, 0.3 * c.tau)


def test_standard_error_scaling():
    x = np.array([0.5, 0.5])
    t = 4 * 2.0 ** -6
    ses = [mc_semigroup_2d(cfg(P=n), lambda y: P.H(y), x, t)[1] for n in (2000, 4000)]
    assert ses[0] / ses[1] == pytest.approx(np.sqrt(2.0), rel=0.2)


def test_radial_law_agrees_between_estimators():
    # H(X) and Y share a law for radial observables; compare at a few points
    c = cfg(P=20000, tau=2.0 ** -9, N=8, eps=0.5)
    x = np.array([0.6, -0.2])
    f = lambda z: np.exp(-z)
    m2, s2 = mc_semigroup_2d(c, lambda y: f(P.H(y)), x, c.T)
    mg, sg = mc_semigroup_graph(c, f, P.H(x), c.T)
    assert abs(m2 - mg) < 5 * np.hypot(s2, sg) + 2e-3


def test_outer_coefficients_shape_and_determinism():
    c = cfg()
    a = outer_coefficients(c, 1)
    assert a.shape == (c.N, c.M1)
    np.testing.assert_array_equal(a, outer_coefficients(c, 1))
    assert not np.array_equal(a, outer_coefficients(c, 2))
    assert outer_coefficients(cfg(M1=0, modes=()), 0).shape == (c.N, 0)


def test_field_estimators_vanish_without_modes():
    c = cfg(M1=0, modes=())
    d = outer_coefficients(c, 0)
    np.testing.assert_array_equal(estimate_U_points(c, c.eps, d), 0.0)
    np.testing.assert_array_equal(estimate_barU_points(c, d), 0.0)
    assert asymptotic_error(c) == (0.0, 0.0)


def test_field_estimator_single_step_formula():
    # N = 1: U = E[mode(H(X_tau))] * dbeta_1
    c = cfg(N=1, P=50, M2=1)
    d = np.array([[0.37]])
    x0 = np.zeros((50, 2))
    x1 = em_particle_X(c, x0, _planar_noise(c, 1, 50, 0))
    mode = c.modes[0]
    expect = mode(P.H(x1)).mean() * 0.37
    assert estimate_U_points(c, c.eps, d)[0] == pytest.approx(expect, rel=1e-13)
    with pytest.raises(ValueError):
        estimate_U_points(c, c.eps, np.zeros((2, 1)))


def test_psi_term_enters_once():
    c = cfg(M1=0, modes=(), psi=lambda z: np.exp(-z), P=100)
    d = outer_coefficients(c, 0)
    ubar = estimate_barU_points(c, d)
    z = P.H(evaluation_points(c))
    assert np.all(ubar > 0) and np.all(ubar <= 1.0)
    # at the origin the graph process moves up, so exp(-Y) drops below 1
    assert ubar[z.argmin()] < 1.0


def test_asymptotic_error_deterministic_and_cached():
    c = cfg(P=50, Q_outer=2)
    a = asymptotic_error(c)
    cache = {}
    b = asymptotic_error(c, barU_cache=cache)
    assert a == b and set(cache) == {0, 1}
    assert asymptotic_error(c, barU_cache=cache) == a
    assert a[0] > 0 and a[1] >= 0


def test_particle_substeps_keep_snapshot_shape():
    # finer tau_p changes the particles, not the tau-grid of snapshots
    c1 = cfg(P=30, M2=1)
    c2 = cfg(P=30, M2=1, tau_p=c1.tau / 2)
    d = outer_coefficients(c1, 0)
    u1 = estimate_U_points(c1, c1.eps, d)
    u2 = estimate_U_points(c2, c2.eps, d)
    assert u1.shape == u2.shape and np.all(np.isfinite(u2))


def test_em_energy_drift_over_one_period_is_first_order():
    # noise off, one rotation period eps T(z0): the drift bound halves with tau
    eps = 0.1
    x0 = np.array([0.9, 0.0])
    z0 = P.H(x0)
    period = eps * P.T(z0)
    drift = []
    for n in (400, 800):
        c = ParticleConfig(profile=P, eps=eps, tau=period / n, N=n)
        traj = em_particle_X(c, x0, np.zeros((n, 2)), store=True)
        drift.append(np.abs(P.H(traj) - z0).max())
    c_const = drift[0] / ((period / 400) / eps * period)
    print(f"one-period energy drift {drift}, C={c_const:.3f}")
    assert drift[0] / drift[1] == pytest.approx(2.0, rel=0.05)
