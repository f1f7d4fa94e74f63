"""Right-hand sides of the reduced and full models and trajectory integration."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import _kernels
from .errors import (
    DimensionMismatch,
    DivergedTrajectory,
    InvalidPerturbation,
    ZeroControllerTimeConstant,
)
from .model import GridModel, SimState

log = logging.getLogger(__name__)

DEFAULT_BLOWUP_BOUND = 1e6


@dataclass(frozen=True)
class Perturbation:
    """Linear ramp of ``P_dist`` on ``node`` (0-based) over [t_start, t_end]."""

    node: int
    t_start: float
    t_end: float
    P_dist: float

    def __post_init__(self):
        if not self.t_end > self.t_start:
            raise InvalidPerturbation(
                f"perturbation on node {self.node}: t_end={self.t_end} must exceed t_start={self.t_start}"
            )
        if self.node < 0:
            raise InvalidPerturbation(f"perturbation node index {self.node} is negative")


@dataclass(frozen=True)
class IntegratorSettings:
    dt: float = 0.01
    t_final: float = 200.0
    sample_stride: int = 10
    blowup_bound: float = DEFAULT_BLOWUP_BOUND
    method: str = "rk4"

    def __post_init__(self):
        if not self.dt > 0:
            raise ValueError(f"dt must be > 0, got {self.dt}")
        if not self.t_final > 0:
            raise ValueError(f"t_final must be > 0, got {self.t_final}")
        if int(self.sample_stride) != self.sample_stride or self.sample_stride < 1:
            raise ValueError(f"sample_stride must be an integer >= 1, got {self.sample_stride}")
        if self.method != "rk4":
            raise ValueError(f"only fixed-step 'rk4' is supported, got {self.method!r}")

    @property
    def n_steps(self) -> int:
        return max(1, int(round(self.t_final / self.dt)))


@dataclass
class Trajectory:
    times: np.ndarray
    states: np.ndarray  # (n_samples, 3N) or (n_samples, 4N)
    N: int
    diverged: bool = False
    t_diverged: float | None = None
    metadata: dict = field(default_factory=dict)

    @property
    def theta(self):
        return self.states[:, : self.N]

    @property
    def omega(self):
        return self.states[:, self.N: 2 * self.N]

    @property
    def E(self):
        return self.states[:, 2 * self.N: 3 * self.N]

    @property
    def u(self):
        if self.states.shape[1] == 4 * self.N:
            return self.states[:, 3 * self.N:]
        return None

    def state(self, k) -> SimState:
        return SimState.from_vector(self.states[k], self.N)

    def __len__(self):
        return self.times.shape[0]

    def at(self, t) -> int:
        """Index of the sample closest to time ``t``."""
        return int(np.argmin(np.abs(self.times - t)))

    def window(self, t0, t1):
        return (self.times >= t0 - 1e-9) & (self.times <= t1 + 1e-9)


def _perturbation_arrays(perturbations: Sequence[Perturbation], N: int):
    for p in perturbations:
        if p.node >= N:
            raise InvalidPerturbation(f"perturbation targets node {p.node} but the model has {N} nodes")
    pn = np.array([p.node for p in perturbations], dtype=np.int64)
    pt0 = np.array([p.t_start for p in perturbations], dtype=float)
    pt1 = np.array([p.t_end for p in perturbations], dtype=float)
    pdp = np.array([p.P_dist for p in perturbations], dtype=float)
    return pn, pt0, pt1, pdp


def ramp_power(t, base, perturbations: Sequence[Perturbation] = ()):
    """Per-node power at time ``t`` with every ramp applied."""
    P = np.array(base, dtype=float)
    for p in perturbations:
        if t <= p.t_start:
            frac = 0.0
        elif t >= p.t_end:
            frac = 1.0
        else:
            frac = (t - p.t_start) / (p.t_end - p.t_start)
        P[p.node] += frac * p.P_dist
    return P


def _coupling(theta, E, B):
    d = theta[:, None] - theta[None, :]
    s = (B * np.sin(d)) @ E
    c = (B * np.cos(d)) @ E
    return s, c


def rhs_reduced(t, state: SimState, model: GridModel, perturbations=(), *, constant_voltage=False) -> SimState:
    if state.N != model.N or state.u is not None:
        raise DimensionMismatch(
            f"reduced model with {model.N} nodes needs a 3N state without u, got N={state.N}"
        )
    P = ramp_power(t, model.P_star, perturbations)
    s, c = _coupling(state.theta, state.E, model.B)
    dtheta = state.omega.copy()
    domega = -model.alpha * state.omega - model.gamma * state.theta + P - state.E * s
    if constant_voltage:
        dE = np.zeros(model.N)
    else:
        dE = (model.E_f - state.E + model.X * c) / model.T_d
    return SimState(dtheta, domega, dE)


def rhs_full(t, state: SimState, model: GridModel, perturbations=()) -> SimState:
    """Full model with a first-order controller lag ``tau_g``."""
    if state.N != model.N or state.u is None:
        raise DimensionMismatch(f"full model with {model.N} nodes needs a 4N state including u")
    tau = model.tau_g
    if np.any(tau <= 0):
        raise ZeroControllerTimeConstant(
            f"tau_g must be > 0 on every node (node {int(np.argmin(tau))}); use rhs_reduced"
        )
    P = ramp_power(t, model.P_star, perturbations)
    s, c = _coupling(state.theta, state.E, model.B)
    domega = -model.alpha * state.omega + P - state.E * s + state.u
    dE = (model.E_f - state.E + model.X * c) / model.T_d
    du = (-state.u - model.gamma * state.theta - model.beta * state.omega) / tau
    return SimState(state.omega.copy(), domega, dE, du)


def integrate(scenario, *, raise_on_divergence=True) -> Trajectory:
    """Fixed-step RK4 run of ``scenario``.

    Uses the full model when the initial state carries a control signal,
    the reduced model otherwise.  Divergence (any component beyond the
    blow-up bound, or non-finite) raises ``DivergedTrajectory`` unless
    ``raise_on_divergence`` is false, in which case the truncated trajectory
    is returned with ``diverged`` set.
    """
    model = scenario.model
    settings = scenario.integrator
    y0 = scenario.initial_state.to_vector()
    N = model.N
    full = scenario.initial_state.u is not None
    if full:
        if np.any(model.tau_g <= 0):
            raise ZeroControllerTimeConstant("full-model run requested but some tau_g == 0")
    elif not model.is_reduced:
        raise DimensionMismatch("model has controller dynamics; reduce it or provide an initial u")
    if y0.shape[0] != (4 if full else 3) * N:
        raise DimensionMismatch(f"initial state length {y0.shape[0]} does not match N={N}")
    constant_voltage = bool(getattr(scenario, "constant_voltage", False))
    pn, pt0, pt1, pdp = _perturbation_arrays(scenario.perturbations, N)

    n_steps = settings.n_steps
    stride = int(settings.sample_stride)
    n_samples = n_steps // stride + 1
    samples = np.empty((n_samples, y0.shape[0]))
    times = np.empty(n_samples)
    tau = model.tau_g if full else np.ones(N)
    ns, status, t_fail, t_nonpos, last_y, t_last = _kernels.rk4_integrate(
        y0, float(settings.dt), n_steps, stride, float(settings.blowup_bound), N, full,
        constant_voltage, model.P_star, model.alpha, model.gamma, model.T_d, model.E_f,
        model.X, tau, model.beta, np.ascontiguousarray(model.B), pn, pt0, pt1, pdp,
        samples, times,
    )
    meta = {
        "scenario": getattr(scenario, "name", ""),
        "dt": settings.dt,
        "model": "full" if full else "reduced",
        "constant_voltage": constant_voltage,
    }
    if t_nonpos >= 0:
        meta["voltage_nonpositive_at"] = t_nonpos
        log.warning("%s: voltage amplitude reached <= 0 at t=%.4g", meta["scenario"], t_nonpos)
    traj = Trajectory(times=times[:ns].copy(), states=samples[:ns].copy(), N=N, metadata=meta)
    if status == _kernels.STATUS_DIVERGED:
        traj.diverged = True
        traj.t_diverged = t_fail
        meta["diverged_at"] = t_fail
        msg = (f"{meta['scenario'] or 'trajectory'} left the blow-up bound "
               f"{settings.blowup_bound:g} at t={t_fail:.4g}")
        log.warning(msg)
        if raise_on_divergence:
            raise DivergedTrajectory(msg, t_last=t_last, last_state=SimState.from_vector(last_y, N),
                                     trajectory=traj)
    return traj


def finite_difference_check(traj: Trajectory, model: GridModel, perturbations=()):
    """Largest gap between central differences of samples and the RHS."""
    h = traj.times[1] - traj.times[0]
    worst = 0.0
    for k in range(1, len(traj) - 1):
        fd = (traj.states[k + 1] - traj.states[k - 1]) / (2 * h)
        d = rhs_reduced(traj.times[k], traj.state(k), model, perturbations).to_vector()
        worst = max(worst, float(np.max(np.abs(fd - d))))
    return worst

