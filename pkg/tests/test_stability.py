import numpy as np
import pytest

from voltsync.errors import AsymmetricPInput, NewtonDiverged
from voltsync.model import SimState
from voltsync.dynamics import rhs_reduced
from voltsync.stability import (
    FixedPoint,
    analyze,
    build_linearization,
    classify,
    eigen_shift_check,
    find_fixed_point,
    orthogonal_complement_basis,
    pinv_symmetric,
    proposition_one_check,
    spectral_stability,
)

from conftest import network, two_node

# Phase difference and voltage of symmetric 2-node equilibria, from
# dP - gamma*d - 2 E(d)^2 sin d = 0 with E(d) = 1 / (1.8 - cos d),
# solved by bracketing root search (scipy brentq, xtol 1e-15).
UNCONTROLLED = (0.39458914622072666, 1.1404518794758192)
UNCONTROLLED_SADDLE = (1.0789613419945558, 0.7531505203085881)
CONTROLLED = (0.2600299030256535, 1.199590637606824)
PERTURBED_CONTROLLED = (0.8378508598216003, 0.8842214771837618)


def fd_jacobian(model, theta, E, h=1e-6):
    N = model.N
    y0 = np.concatenate([theta, np.zeros(N), E])
    J = np.empty((3 * N, 3 * N))
    for k in range(3 * N):
        e = np.zeros(3 * N)
        e[k] = h
        fp = rhs_reduced(0.0, SimState.from_vector(y0 + e, N), model).to_vector()
        fm = rhs_reduced(0.0, SimState.from_vector(y0 - e, N), model).to_vector()
        J[:, k] = (fp - fm) / (2 * h)
    return J


def test_fixed_point_uncontrolled_oracle():
    fp = find_fixed_point(two_node(), (np.zeros(2), np.full(2, 1.14)))
    d, E = UNCONTROLLED
    assert fp.theta_star[0] - fp.theta_star[1] == pytest.approx(d, abs=1e-9)
    np.testing.assert_allclose(fp.E_star, E, atol=1e-9)
    assert fp.theta_star.sum() == pytest.approx(0.0, abs=1e-12)  # gauge pinned
    assert fp.residual_norm < 1e-10


def test_fixed_point_controlled_oracles():
    fp = find_fixed_point(two_node(gamma=1.0), (np.zeros(2), np.ones(2)))
    assert fp.theta_star[0] - fp.theta_star[1] == pytest.approx(CONTROLLED[0], abs=1e-9)
    np.testing.assert_allclose(fp.E_star, CONTROLLED[1], atol=1e-9)
    fp = find_fixed_point(two_node(P=(1.5, -0.5), gamma=1.0), (np.zeros(2), np.ones(2)))
    d, E = PERTURBED_CONTROLLED
    np.testing.assert_allclose(fp.theta_star, [0.5 + d / 2, 0.5 - d / 2], atol=1e-9)
    np.testing.assert_allclose(fp.E_star, E, atol=1e-9)


def test_no_fixed_point_without_control_and_with_imbalance():
    with pytest.raises(NewtonDiverged):
        find_fixed_point(two_node(P=(1.5, -0.5)), (np.zeros(2), np.ones(2)))


@pytest.mark.parametrize("gamma, P", [(0.0, (0.5, -0.5)), (1.0, (1.5, -0.5)), (0.3, (0.9, 0.1))])
def test_jacobian_matches_finite_differences(gamma, P):
    m = two_node(P=P, gamma=gamma)
    fp = find_fixed_point(m, (np.zeros(2), np.ones(2)))
    J = build_linearization(m, fp).J
    np.testing.assert_allclose(J, fd_jacobian(m, fp.theta_star, fp.E_star), atol=1e-7)


def test_jacobian_off_equilibrium_heterogeneous():
    m = network(3, gamma=0.5, B1=0.4)
    rng = np.random.default_rng(3)
    th, E = rng.normal(size=3), 1 + 0.2 * rng.random(3)
    fp = FixedPoint(theta_star=th, E_star=E, residual_norm=np.nan, iterations=0)
    np.testing.assert_allclose(build_linearization(m, fp).J, fd_jacobian(m, th, E), atol=1e-7)


def test_uncontrolled_gauge_mode_excluded():
    m = two_node()
    rep = analyze(m, find_fixed_point(m, (np.zeros(2), np.full(2, 1.14))))
    assert rep.gauge_mode_present
    assert abs(rep.gauge_eigenvalue) < 1e-9
    assert rep.verdict == "stable"
    assert rep.proposition_condition_1 and rep.proposition_condition_2
    assert rep.details["condition_1_subspace"] == "zero_sum"


def test_saddle_is_unstable():
    m = two_node()
    d, E = UNCONTROLLED_SADDLE
    fp = find_fixed_point(m, (np.array([d / 2, -d / 2]), np.full(2, E)))
    assert fp.theta_star[0] - fp.theta_star[1] == pytest.approx(d, abs=1e-8)
    rep = analyze(m, fp)
    assert rep.verdict == "unstable"
    assert not (rep.proposition_condition_1 and rep.proposition_condition_2)


def test_controlled_perturbed_fixed_point_report():
    m = two_node(P=(1.5, -0.5), gamma=1.0)
    rep = analyze(m, find_fixed_point(m, (np.zeros(2), np.ones(2))))
    assert rep.verdict == "stable" and not rep.gauge_mode_present
    assert rep.spectral_abscissa_excl_gauge == pytest.approx(-0.1, abs=1e-6)
    js = rep.to_json()
    assert len(js["eigenvalues"]) == 6 and js["verdict"] == "stable"


def test_condition_one_example_spectrum():
    # P + Gamma for uniform E and zero phase difference has eigenvalues gamma and gamma + 2 E^2 B1
    m = two_node(gamma=0.7)
    fp = FixedPoint(theta_star=np.zeros(2), E_star=np.full(2, 1.1), residual_norm=0.0, iterations=0)
    blocks = build_linearization(m, fp)
    ev = np.linalg.eigvalsh(blocks.P_matrix + blocks.Gamma)
    np.testing.assert_allclose(ev, [0.7, 0.7 + 2 * 1.1**2], atol=1e-12)


def test_asymmetric_P_rejected():
    m = two_node(gamma=1.0)
    fp = FixedPoint(theta_star=np.zeros(2), E_star=np.ones(2), residual_norm=0.0, iterations=0)
    blocks = build_linearization(m, fp)
    blocks.P_matrix = blocks.P_matrix + np.array([[0.0, 0.1], [0.0, 0.0]])
    with pytest.raises(AsymmetricPInput):
        proposition_one_check(blocks)


def test_spectral_stability_on_raw_matrix():
    rep = spectral_stability(np.diag([-1.0, -2.0, 0.5]))
    assert rep.verdict == "unstable" and rep.spectral_abscissa_excl_gauge == 0.5
    assert classify(0.0) == "marginal" and classify(-1e-3) == "stable"


def test_pinv_and_complement():
    S = np.array([[1.0, -1.0], [-1.0, 1.0]])
    np.testing.assert_allclose(pinv_symmetric(S), np.linalg.pinv(S), atol=1e-14)
    Q = orthogonal_complement_basis(5)
    np.testing.assert_allclose(Q.T @ Q, np.eye(4), atol=1e-12)
    np.testing.assert_allclose(Q.sum(axis=0), 0.0, atol=1e-12)


def test_eigen_shift_simple():
    ok, shifted, dev = eigen_shift_check(np.diag([1.0, -2.0]), 3.0)
    assert ok and dev < 1e-14
    np.testing.assert_allclose(shifted, [1.0, 4.0])
