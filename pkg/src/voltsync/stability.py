"""Fixed points, linearization and linear-stability tests of the reduced model.

Block convention (3N x 3N Jacobian, state order theta, omega, E)::

    [[ 0,           I,   0              ],
     [ -(P + G),   -A,  -L              ],
     [ -Ti X L^T,   0,   Ti (X C - I)   ]]

``L`` is the voltage-to-frequency coupling block.  The lower-left block is
``-Ti X L^T`` rather than ``Ti X L``; only the former matches the
derivatives of the model and keeps the global phase shift neutral.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    AsymmetricPInput,
    EigensolverFailure,
    NewtonDiverged,
    SingularJacobianAtIterate,
)
from .model import GridModel

log = logging.getLogger(__name__)

DEFINITENESS_TOL = 1e-9
PINV_RCOND = 1e-10
GAUGE_ANGLE_TOL = 1e-6


@dataclass
class FixedPoint:
    theta_star: np.ndarray
    E_star: np.ndarray
    residual_norm: float
    iterations: int = 0

    @property
    def omega_star(self):
        return np.zeros_like(self.theta_star)


@dataclass
class LinearizationBlocks:
    P_matrix: np.ndarray
    Lambda_matrix: np.ndarray
    C_matrix: np.ndarray
    Gamma: np.ndarray
    A_damping: np.ndarray
    chi: np.ndarray
    T_inv: np.ndarray
    J: np.ndarray

    @property
    def N(self):
        return self.P_matrix.shape[0]

    @property
    def gamma_all_zero(self) -> bool:
        return bool(np.all(np.diag(self.Gamma) == 0))


@dataclass
class StabilityReport:
    eigenvalues: np.ndarray
    spectral_abscissa_excl_gauge: float
    gauge_mode_present: bool
    verdict: str
    gauge_eigenvalue: complex | None = None
    proposition_condition_1: bool | None = None
    proposition_condition_2: bool | None = None
    details: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        ev = sorted(self.eigenvalues, key=lambda z: (-z.real, z.imag))
        out = {
            "eigenvalues": [[float(z.real), float(z.imag)] for z in ev],
            "spectral_abscissa_excl_gauge": float(self.spectral_abscissa_excl_gauge),
            "gauge_mode_present": bool(self.gauge_mode_present),
            "gauge_eigenvalue": (None if self.gauge_eigenvalue is None
                                 else [float(self.gauge_eigenvalue.real), float(self.gauge_eigenvalue.imag)]),
            "proposition_condition_1": self.proposition_condition_1,
            "proposition_condition_2": self.proposition_condition_2,
            "verdict": self.verdict,
        }
        out.update(self.details)
        return out


def coupling_matrices(theta, E, B):
    """P, L and C evaluated at phases ``theta`` and amplitudes ``E``."""
    d = theta[:, None] - theta[None, :]
    cos_d = np.cos(d)
    sin_d = np.sin(d)
    P = -np.outer(E, E) * B * cos_d
    np.fill_diagonal(P, 0.0)
    np.fill_diagonal(P, -P.sum(axis=1))
    # L_ij = E_i B_ij sin(th_i - th_j); L_ii = sum_{l != i} E_l B_il sin(th_i - th_l)
    L = E[:, None] * B * sin_d
    np.fill_diagonal(L, 0.0)
    np.fill_diagonal(L, (B * sin_d) @ E)
    C = B * cos_d
    return P, L, C


def fixed_point_residual(model: GridModel, theta, E):
    B = model.B
    d = theta[:, None] - theta[None, :]
    s = (B * np.sin(d)) @ E
    c = (B * np.cos(d)) @ E
    r_theta = -model.gamma * theta + model.P_star - E * s
    r_E = (model.E_f - E + model.X * c) / model.T_d
    return np.concatenate([r_theta, r_E])


def _residual_jacobian(model: GridModel, theta, E):
    P, L, C = coupling_matrices(theta, E, model.B)
    N = model.N
    Ti = 1.0 / model.T_d
    top = np.hstack([-(P + np.diag(model.gamma)), -L])
    bottom = np.hstack([-(Ti * model.X)[:, None] * L.T, Ti[:, None] * (model.X[:, None] * C - np.eye(N))])
    return np.vstack([top, bottom])


def find_fixed_point(model: GridModel, initial_guess, *, tol=1e-10, max_iter=100) -> FixedPoint:
    """Damped Newton on the stationary equations (omega = 0).

    ``initial_guess`` is ``(theta, E)``.  Without secondary control the
    phase gauge is pinned by keeping the sum of phases at its initial value.
    """
    theta0, E0 = initial_guess
    N = model.N
    x = np.concatenate([np.broadcast_to(np.asarray(theta0, float), (N,)),
                        np.broadcast_to(np.asarray(E0, float), (N,))]).copy()
    gauge = bool(np.all(model.gamma == 0))
    theta_sum = x[:N].sum()
    if gauge and abs(model.P_star.sum()) > 1e-12:
        raise NewtonDiverged(
            f"no frequency-synchronous fixed point: gamma = 0 with power imbalance {model.P_star.sum():.6g}"
        )

    def full_residual(x):
        r = fixed_point_residual(model, x[:N], x[N:])
        if gauge:
            r = np.append(r, x[:N].sum() - theta_sum)
        return r

    r = full_residual(x)
    norm = np.max(np.abs(r))
    it = 0
    while norm >= tol:
        if it >= max_iter:
            raise NewtonDiverged(f"Newton did not converge in {max_iter} iterations (residual {norm:.3e})")
        Jr = _residual_jacobian(model, x[:N], x[N:])
        if not np.all(np.isfinite(Jr)):
            raise NewtonDiverged("non-finite Jacobian during Newton iteration")
        try:
            if gauge:
                Jr = np.vstack([Jr, np.concatenate([np.ones(N), np.zeros(N)])])
                dx, _, rank, sv = np.linalg.lstsq(Jr, -r, rcond=None)
                if rank < 2 * N:
                    raise np.linalg.LinAlgError("rank deficient")
            else:
                dx = np.linalg.solve(Jr, -r)
        except np.linalg.LinAlgError as exc:
            raise SingularJacobianAtIterate(f"singular Jacobian at Newton iteration {it}") from exc
        step = 1.0
        while True:
            x_new = x + step * dx
            r_new = full_residual(x_new)
            norm_new = np.max(np.abs(r_new))
            if np.isfinite(norm_new) and norm_new < (1 - 1e-4 * step) * norm or step < 1e-6:
                break
            step *= 0.5
        if not np.isfinite(norm_new):
            raise NewtonDiverged(f"residual became non-finite at iteration {it}")
        x, r, norm = x_new, r_new, norm_new
        it += 1
    res = float(np.linalg.norm(fixed_point_residual(model, x[:N], x[N:]), np.inf))
    return FixedPoint(theta_star=x[:N].copy(), E_star=x[N:].copy(), residual_norm=res, iterations=it)


def build_linearization(model: GridModel, fp: FixedPoint) -> LinearizationBlocks:
    N = model.N
    P, L, C = coupling_matrices(fp.theta_star, fp.E_star, model.B)
    Gamma = np.diag(model.gamma)
    A = np.diag(model.alpha)
    chi = np.diag(model.X)
    T_inv = np.diag(1.0 / model.T_d)
    I = np.eye(N)
    Z = np.zeros((N, N))
    J = np.block([
        [Z, I, Z],
        [-(P + Gamma), -A, -L],
        [-T_inv @ chi @ L.T, Z, T_inv @ (chi @ C - I)],
    ])
    return LinearizationBlocks(P, L, C, Gamma, A, chi, T_inv, J)


def _gauge_direction(n3):
    N = n3 // 3
    g = np.zeros(n3)
    g[:N] = 1.0 / np.sqrt(N)
    return g


def _sin_angle(v, g):
    v = v / np.linalg.norm(v)
    proj = np.vdot(g, v)
    return float(np.linalg.norm(v - proj * g))


def classify(abscissa, tol=DEFINITENESS_TOL) -> str:
    if abscissa < -tol:
        return "stable"
    if abscissa > tol:
        return "unstable"
    return "marginal"


def spectral_stability(blocks, gamma_all_zero=None) -> StabilityReport:
    """Eigenvalues of J and the stability verdict.

    ``blocks`` may be a ``LinearizationBlocks`` or a bare square matrix.
    With ``gamma_all_zero`` the global phase-shift eigenpair is identified
    by eigenvector alignment and left out of the abscissa.
    """
    J = blocks.J if isinstance(blocks, LinearizationBlocks) else np.asarray(blocks, dtype=float)
    if gamma_all_zero is None:
        gamma_all_zero = blocks.gamma_all_zero if isinstance(blocks, LinearizationBlocks) else False
    try:
        w, V = np.linalg.eig(J)
    except np.linalg.LinAlgError as exc:
        raise EigensolverFailure(str(exc)) from exc
    if not np.all(np.isfinite(w)):
        raise EigensolverFailure("eigensolver returned non-finite eigenvalues")
    keep = np.ones(w.shape[0], dtype=bool)
    gauge_ev = None
    if gamma_all_zero and J.shape[0] % 3 == 0:
        g = _gauge_direction(J.shape[0])
        angles = np.array([_sin_angle(V[:, k], g) for k in range(w.shape[0])])
        aligned = np.flatnonzero(angles < GAUGE_ANGLE_TOL)
        if aligned.size:
            k = aligned[np.argmin(np.abs(w[aligned]))]
            keep[k] = False
            gauge_ev = complex(w[k])
    rest = w[keep]
    abscissa = float(np.max(rest.real)) if rest.size else -np.inf
    return StabilityReport(
        eigenvalues=w,
        spectral_abscissa_excl_gauge=abscissa,
        gauge_mode_present=gauge_ev is not None,
        gauge_eigenvalue=gauge_ev,
        verdict=classify(abscissa),
    )


def pinv_symmetric(S, rcond=PINV_RCOND):
    """Moore-Penrose inverse of a symmetric matrix by eigendecomposition."""
    w, Q = np.linalg.eigh(S)
    cutoff = rcond * np.max(np.abs(w)) if w.size else 0.0
    inv = np.zeros_like(w)
    mask = np.abs(w) > cutoff
    inv[mask] = 1.0 / w[mask]
    return (Q * inv) @ Q.T


def orthogonal_complement_basis(N):
    """Orthonormal N x (N-1) basis of the vectors summing to zero."""
    ones = np.ones((N, 1)) / np.sqrt(N)
    Q, _ = np.linalg.qr(np.hstack([ones, np.eye(N)[:, : N - 1]]))
    return Q[:, 1:]


def proposition_one_check(blocks: LinearizationBlocks, tol=DEFINITENESS_TOL):
    """Definiteness conditions equivalent to linear stability.

    Condition 1: ``P + G`` positive definite, on the zero-sum subspace when
    every gamma vanishes and on the whole space otherwise.
    Condition 2: ``C - X^-1 + L^T (P + G)^+ L`` negative definite.
    Returns ``(condition_1, condition_2, details)``.
    """
    P = blocks.P_matrix
    if not np.array_equal(P, P.T):
        if np.max(np.abs(P - P.T)) > 1e-12 * max(1.0, np.max(np.abs(P))):
            raise AsymmetricPInput("P matrix is not symmetric")
    N = blocks.N
    S = P + blocks.Gamma
    S = 0.5 * (S + S.T)
    gauge = blocks.gamma_all_zero
    if gauge:
        Q = orthogonal_complement_basis(N)
        ev1 = np.linalg.eigvalsh(Q.T @ S @ Q)
    else:
        ev1 = np.linalg.eigvalsh(S)
    cond1 = bool(ev1.min() > tol)

    Sp = pinv_symmetric(S)
    L = blocks.Lambda_matrix
    chi_inv = np.diag(1.0 / np.diag(blocks.chi))
    M = blocks.C_matrix - chi_inv + L.T @ Sp @ L
    ev2 = np.linalg.eigvalsh(0.5 * (M + M.T))
    cond2 = bool(ev2.max() < -tol)

    # the same test with the pseudo-inverse of P alone
    M_lit = blocks.C_matrix - chi_inv + L.T @ pinv_symmetric(0.5 * (P + P.T)) @ L
    ev2_lit = np.linalg.eigvalsh(0.5 * (M_lit + M_lit.T))
    evP = np.linalg.eigvalsh(0.5 * (P + P.T))
    details = {
        "condition_1_min_eigenvalue": float(ev1.min()),
        "condition_1_subspace": "zero_sum" if gauge else "full",
        "condition_2_max_eigenvalue": float(ev2.max()),
        "condition_2_with_P_pinv_max_eigenvalue": float(ev2_lit.max()),
        "P_min_eigenvalue": float(evP.min()),
        "P_indefinite": bool(evP.min() < -tol),
    }
    if details["P_indefinite"]:
        log.info("P matrix is indefinite (min eigenvalue %.3e)", evP.min())
    return cond1, cond2, details


def analyze(model: GridModel, fp: FixedPoint) -> StabilityReport:
    """Spectral verdict plus both definiteness conditions at ``fp``."""
    blocks = build_linearization(model, fp)
    report = spectral_stability(blocks, blocks.gamma_all_zero)
    c1, c2, details = proposition_one_check(blocks)
    report.proposition_condition_1 = c1
    report.proposition_condition_2 = c2
    report.details.update(details)
    report.details["fixed_point"] = {
        "theta": fp.theta_star.tolist(),
        "E": fp.E_star.tolist(),
        "residual_norm": fp.residual_norm,
    }
    report.details["proposition_agrees"] = (c1 and c2) == (report.spectral_abscissa_excl_gauge < 0)
    return report


def eigen_shift_check(A, gamma, tol=1e-10):
    """Eigenvalues of ``A + gamma I`` are those of ``A`` shifted by gamma.

    Returns ``(passed, shifted_spectrum, max_deviation)``.
    """
    A = np.asarray(A, dtype=float)
    lam = np.linalg.eigvalsh(A)
    lam_shift = np.linalg.eigvalsh(A + gamma * np.eye(A.shape[0]))
    dev = float(np.max(np.abs(lam_shift - (lam + gamma)))) if lam.size else 0.0
    return dev < tol, lam_shift, dev
