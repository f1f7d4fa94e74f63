import math

import numpy as np
import pytest
from scipy.integrate import solve_ivp

from voltsync.dynamics import (
    IntegratorSettings,
    Perturbation,
    finite_difference_check,
    integrate,
    ramp_power,
    rhs_full,
    rhs_reduced,
)
from voltsync.errors import DivergedTrajectory, InvalidPerturbation, ZeroControllerTimeConstant
from voltsync.model import SimState, uniform_model
from voltsync.scenario import Scenario

from conftest import B2, flat_state, network, two_node


def test_rhs_two_node_by_hand():
    m = two_node(gamma=1.0)
    s = SimState(np.array([0.3, 0.0]), np.array([0.1, -0.2]), np.array([1.1, 0.9]))
    d = rhs_reduced(0.0, s, m)
    sin3, cos3 = math.sin(0.3), math.cos(0.3)
    dw1 = -0.2 * 0.1 - 0.3 + 0.5 - 1.1 * (0.9 * sin3)
    dw2 = -0.2 * -0.2 - 0.0 - 0.5 - 0.9 * (-1.1 * sin3)
    dE1 = (1 - 1.1 + (-0.8 * 1.1 + 0.9 * cos3)) / 2
    dE2 = (1 - 0.9 + (-0.8 * 0.9 + 1.1 * cos3)) / 2
    np.testing.assert_allclose(d.theta, [0.1, -0.2])
    np.testing.assert_allclose(d.omega, [dw1, dw2], rtol=1e-14)
    np.testing.assert_allclose(d.E, [dE1, dE2], rtol=1e-14)


def test_constant_voltage_freezes_E():
    m = two_node()
    s = SimState(np.array([0.3, 0.0]), np.zeros(2), np.array([1.1, 0.9]))
    assert np.all(rhs_reduced(0.0, s, m, constant_voltage=True).E == 0)


def test_ramp_power():
    q = Perturbation(node=0, t_start=40.0, t_end=42.0, P_dist=1.0)
    base = np.array([0.5, -0.5])
    np.testing.assert_allclose(ramp_power(39.0, base, [q]), base)
    np.testing.assert_allclose(ramp_power(41.0, base, [q]), [1.0, -0.5])
    np.testing.assert_allclose(ramp_power(50.0, base, [q]), [1.5, -0.5])
    with pytest.raises(InvalidPerturbation):
        Perturbation(node=0, t_start=42.0, t_end=40.0, P_dist=1.0)


def test_rhs_full_requires_tau():
    m = uniform_model(2, B2, alpha=0.2, gamma=1.0)
    s = SimState(np.zeros(2), np.zeros(2), np.ones(2), np.zeros(2))
    with pytest.raises(ZeroControllerTimeConstant):
        rhs_full(0.0, s, m)


def _scenario(model, state, perts=(), dt=0.01, t_final=20.0, stride=10, **kw):
    return Scenario(name="t", model=model, initial_state=state, perturbations=perts,
                    integrator=IntegratorSettings(dt=dt, t_final=t_final, sample_stride=stride), **kw)


def test_sample_grid():
    tr = integrate(_scenario(two_node(), flat_state(2), t_final=1.0, stride=10))
    np.testing.assert_allclose(tr.times, np.arange(11) * 0.1, atol=1e-12)
    assert tr.states.shape == (11, 6)
    np.testing.assert_array_equal(tr.states[0], flat_state(2).to_vector())


def test_matches_adaptive_reference():
    # independent route: scipy's adaptive DOP853 on the numpy right-hand side
    m = network(4, gamma=1.0, B1=0.3)
    q = (Perturbation(0, 2.0, 4.0, 1.0),)
    st = flat_state(4)
    tr = integrate(_scenario(m, st, q, dt=0.005, t_final=10.0, stride=20))

    def f(t, y):
        return rhs_reduced(t, SimState.from_vector(y, 4), m, q).to_vector()

    ref = solve_ivp(f, (0, 10.0), st.to_vector(), method="DOP853", rtol=1e-11, atol=1e-12,
                    t_eval=tr.times, max_step=0.05)
    assert np.max(np.abs(ref.y.T - tr.states)) < 1e-6


def test_full_model_fast_controller_tracks_reduced():
    red = two_node(gamma=1.0)
    full = two_node(gamma=1.0, tau_g=1e-3)
    q = (Perturbation(0, 5.0, 7.0, 1.0),)
    s3 = flat_state(2)
    s4 = SimState(s3.theta, s3.omega, s3.E, np.zeros(2))
    a = integrate(_scenario(red, s3, q, dt=5e-4, t_final=30.0, stride=200))
    b = integrate(_scenario(full, s4, q, dt=5e-4, t_final=30.0, stride=200))
    assert b.u is not None
    assert np.max(np.abs(a.states - b.states[:, :6])) < 5e-3
    np.testing.assert_allclose(b.u[-1], -1.0 * b.theta[-1], atol=1e-3)


def test_rk4_fourth_order():
    # ramp corners sit on the step grid, otherwise the forcing kink costs an order
    sc = lambda dt: _scenario(two_node(gamma=1.0), flat_state(2), (Perturbation(0, 1.0, 3.0, 1.0),),
                              dt=dt, t_final=8.0, stride=int(round(0.4 / dt)))
    y = [integrate(sc(dt)).states[-1] for dt in (0.04, 0.02, 0.01)]
    ratio = np.max(np.abs(y[0] - y[1])) / np.max(np.abs(y[1] - y[2]))
    assert 12 <= ratio <= 20


def test_finite_difference_consistency():
    tr = integrate(_scenario(two_node(gamma=1.0), flat_state(2), dt=0.001, t_final=2.0, stride=1))
    assert finite_difference_check(tr, two_node(gamma=1.0)) < 1e-5


def test_divergence_raises_and_flags():
    m = uniform_model(2, B2, P_star=np.array([50.0, 50.0]), alpha=0.2, T_d=1.0)
    sc = _scenario(m, flat_state(2), t_final=100.0)
    sc = Scenario(name="boom", model=m, initial_state=flat_state(2),
                  integrator=IntegratorSettings(dt=0.01, t_final=100.0, blowup_bound=100.0))
    with pytest.raises(DivergedTrajectory) as info:
        integrate(sc)
    assert info.value.t_last is not None and info.value.trajectory.diverged
    tr = integrate(sc, raise_on_divergence=False)
    assert tr.diverged and tr.t_diverged < 100.0
    assert np.all(np.abs(tr.states) <= 100.0)
