"""Node-averaged (bulk) dynamics.

With uniform damping and control the network mean obeys a damped linear
oscillator, independent of the coupling.  The mean voltage has no closed
form; only exponential envelopes bound it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np


@dataclass(frozen=True)
class BulkParams:
    alpha: float
    gamma: float
    N: int
    sum_P: float
    theta_bar_0: float = 0.0
    omega_bar_0: float = 0.0
    E_bar_0: float = 1.14
    T_d: float = 1.0
    E_f: float = 1.0
    X: float = 1.0
    B0: float = -0.8
    B1: float = 1.0

    def __post_init__(self):
        if self.N < 2:
            raise ValueError(f"N must be >= 2, got {self.N}")
        if not self.alpha > 0:
            raise ValueError(f"alpha must be > 0, got {self.alpha}")
        if not self.T_d > 0:
            raise ValueError(f"T_d must be > 0, got {self.T_d}")


def characteristic_roots(alpha, gamma):
    """Roots of r^2 + alpha r + gamma; a repeated root is returned twice."""
    disc = alpha * alpha - 4.0 * gamma
    if abs(disc) <= 1e-12 * alpha * alpha:
        return -alpha / 2, -alpha / 2
    if disc > 0:
        s = math.sqrt(disc)
        return (-alpha + s) / 2, (-alpha - s) / 2
    s = math.sqrt(-disc)
    return complex(-alpha / 2, s / 2), complex(-alpha / 2, -s / 2)


def _homogeneous(alpha, gamma, h0, dh0, tau):
    if gamma == 0:
        d2 = -dh0 / alpha
        d1 = h0 - d2
        e = np.exp(-alpha * tau)
        return d1 + d2 * e, -alpha * d2 * e
    r1, r2 = characteristic_roots(alpha, gamma)
    if isinstance(r1, complex):
        sig, nu = r1.real, r1.imag
        k = (dh0 - sig * h0) / nu
        e = np.exp(sig * tau)
        c, s = np.cos(nu * tau), np.sin(nu * tau)
        th = e * (h0 * c + k * s)
        om = e * ((sig * h0 + nu * k) * c + (sig * k - nu * h0) * s)
        return th, om
    if r1 == r2:
        sig = r1
        k = dh0 - sig * h0
        e = np.exp(sig * tau)
        return e * (h0 + k * tau), e * (dh0 + sig * k * tau)
    c1 = (dh0 - r2 * h0) / (r1 - r2)
    c2 = h0 - c1
    e1, e2 = np.exp(r1 * tau), np.exp(r2 * tau)
    return c1 * e1 + c2 * e2, c1 * r1 * e1 + c2 * r2 * e2


def _segment(alpha, gamma, a, b, th0, om0, tau):
    """Mean dynamics under linear forcing ``a + b*tau`` from (th0, om0)."""
    if gamma > 0:
        c1 = b / gamma
        c0 = (a - alpha * c1) / gamma
        thp, omp = c0 + c1 * tau, c1 + 0.0 * tau
        thp0, omp0 = c0, c1
    else:
        d1 = b / alpha
        d0 = (a - d1) / alpha
        thp, omp = d0 * tau + 0.5 * d1 * tau * tau, d0 + d1 * tau
        thp0, omp0 = 0.0, d0
    th_h, om_h = _homogeneous(alpha, gamma, th0 - thp0, om0 - omp0, tau)
    return thp + th_h, omp + om_h


def analytic_bulk_constant_voltage(p: BulkParams, t):
    """Closed-form mean phase and frequency under constant total power."""
    t = np.asarray(t, dtype=float)
    th, om = _segment(p.alpha, p.gamma, p.sum_P / p.N, 0.0, p.theta_bar_0, p.omega_bar_0, t)
    return th, om


def analytic_bulk_with_ramps(alpha, gamma, N, base_sum_P, perturbations, t,
                             theta_bar_0=0.0, omega_bar_0=0.0):
    """Closed-form means when the total power follows linear ramps.

    The forcing is piecewise linear, so each piece is solved exactly and the
    end state carried into the next.
    """
    t = np.asarray(t, dtype=float)
    breaks = sorted({0.0} | {float(q.t_start) for q in perturbations}
                    | {float(q.t_end) for q in perturbations})
    breaks = [b for b in breaks if b >= 0.0]

    def total(tt):
        s = base_sum_P
        for q in perturbations:
            frac = min(max((tt - q.t_start) / (q.t_end - q.t_start), 0.0), 1.0)
            s += frac * q.P_dist
        return s

    th_out = np.empty_like(t)
    om_out = np.empty_like(t)
    th0, om0 = theta_bar_0, omega_bar_0
    edges = breaks + [math.inf]
    for k in range(len(breaks)):
        t0, t1 = edges[k], edges[k + 1]
        a = total(t0) / N
        b = 0.0 if math.isinf(t1) else (total(t1) - total(t0)) / N / (t1 - t0)
        mask = (t >= t0) & (t < t1) if not math.isinf(t1) else (t >= t0)
        if mask.any():
            th_out[mask], om_out[mask] = _segment(alpha, gamma, a, b, th0, om0, t[mask] - t0)
        if not math.isinf(t1):
            th_end, om_end = _segment(alpha, gamma, a, b, th0, om0, np.array([t1 - t0]))
            th0, om0 = float(th_end[0]), float(om_end[0])
    return th_out, om_out


def asymptotic_means(p: BulkParams):
    """Long-time (theta_bar, omega_bar): a constant angle with control,
    a constant frequency drift without."""
    if p.gamma > 0:
        return p.sum_P / (p.N * p.gamma), 0.0
    return math.inf if p.sum_P else 0.0, p.sum_P / (p.N * p.alpha)


@dataclass
class BulkEnvelope:
    times: np.ndarray
    lower_bound: np.ndarray
    upper_bound: np.ndarray
    sigma1: float
    sigma2: float
    bounded: bool
    lower_literal: np.ndarray = None
    upper_literal: np.ndarray = None
    sigma2_literal: float = 0.0
    bounded_consistent: bool = False
    notes: list = field(default_factory=list)

    def to_json(self) -> dict:
        return {
            "sigma1": self.sigma1,
            "sigma2": self.sigma2,
            "sigma2_literal": self.sigma2_literal,
            "bounded": self.bounded,
            "bounded_consistent": self.bounded_consistent,
            "upper_asymptote": _asym(self.upper_bound),
            "lower_asymptote": _asym(self.lower_bound),
            "notes": list(self.notes),
        }


def _asym(series):
    return float(series[-1]) if series is not None and len(series) else None


def _relax(E0, E_f, rate, T_d, t, literal):
    # solution of T_d dE/dt = E_f - rate*E, optionally with the extra 1/T_d on the asymptote
    with np.errstate(over="ignore"):
        e = np.exp(-rate * t / T_d)  # rate < 0 grows without bound
    if rate == 0:
        drift = E_f * t / T_d
        return E0 + (drift / T_d if literal else drift)
    level = E_f / rate / (T_d if literal else 1.0)
    with np.errstate(invalid="ignore", over="ignore"):
        return E0 * e + level * (1.0 - e)


def voltage_envelope(p: BulkParams, times) -> BulkEnvelope:
    """Exponential bounds on the mean voltage.

    ``lower_bound``/``upper_bound`` solve the bounding linear ODEs exactly
    (asymptotes ``E_f/(1-sigma1)`` and ``E_f/(1+sigma2)``); the
    ``*_literal`` curves keep the extra ``1/T_d`` on the asymptote.
    """
    times = np.asarray(times, dtype=float)
    n1 = (p.N - 1) * p.B1
    sigma1 = p.X * (p.B0 + n1)
    sigma2 = -p.X * (p.B0 - n1)
    sigma2_lit = -p.X * (p.B0 + n1)
    upper = _relax(p.E_bar_0, p.E_f, 1.0 - sigma1, p.T_d, times, False)
    lower = _relax(p.E_bar_0, p.E_f, 1.0 + sigma2, p.T_d, times, False)
    upper_lit = _relax(p.E_bar_0, p.E_f, 1.0 - sigma1, p.T_d, times, True)
    lower_lit = _relax(p.E_bar_0, p.E_f, 1.0 + sigma2, p.T_d, times, True)
    notes = []
    if p.T_d != 1.0:
        notes.append("literal curves carry an extra 1/T_d factor on the asymptote")
    if p.X == 0:
        notes.append("X = 0: both bounds reduce to uncoupled relaxation")
    return BulkEnvelope(
        times=times,
        lower_bound=lower,
        upper_bound=upper,
        sigma1=float(sigma1),
        sigma2=float(sigma2),
        bounded=bool(1.0 - sigma1 > 0 and 1.0 + sigma2_lit > 0),
        lower_literal=lower_lit,
        upper_literal=upper_lit,
        sigma2_literal=float(sigma2_lit),
        bounded_consistent=bool(1.0 - sigma1 > 0 and 1.0 + sigma2 > 0),
        notes=notes,
    )


def admissible_network_size(X, B0, B1):
    """Network sizes for which the mean-voltage bound stays finite.

    Returns ``(N_min, N_max, sizes)`` where ``sizes`` lists the integers
    N >= 2 inside the closed interval.
    """
    if B1 == 0:
        raise ValueError("B1 must be nonzero")
    half = X * (1.0 - B0) / B1
    lo, hi = sorted((1.0 - half, 1.0 + half))
    eps = 1e-12 * max(1.0, abs(lo), abs(hi))
    first = max(2, math.ceil(lo - eps))
    last = math.floor(hi + eps)
    return 1.0 - half, 1.0 + half, list(range(first, last + 1))


@dataclass
class MeanSeries:
    times: np.ndarray
    theta_bar: np.ndarray
    omega_bar: np.ndarray
    E_bar: np.ndarray


def bulk_mean_series(traj) -> MeanSeries:
    if len(traj) == 0:
        raise ValueError("empty trajectory")
    return MeanSeries(
        times=traj.times.copy(),
        theta_bar=traj.theta.mean(axis=1),
        omega_bar=traj.omega.mean(axis=1),
        E_bar=traj.E.mean(axis=1),
    )


def bulk_params_for(scenario, *, include_perturbations=True) -> BulkParams:
    """BulkParams of a uniform-parameter scenario (first node's values)."""
    m = scenario.model
    n0 = m.nodes[0]
    sum_P = float(m.P_star.sum())
    if include_perturbations:
        sum_P += sum(q.P_dist for q in scenario.perturbations)
    B = m.B
    B1 = float(B[0, 1]) if m.N > 1 else 0.0
    st = scenario.initial_state
    return BulkParams(
        alpha=n0.alpha, gamma=n0.gamma, N=m.N, sum_P=sum_P,
        theta_bar_0=float(st.theta.mean()), omega_bar_0=float(st.omega.mean()),
        E_bar_0=float(st.E.mean()), T_d=n0.T_d, E_f=n0.E_f, X=n0.X,
        B0=float(B[0, 0]), B1=B1,
    )
