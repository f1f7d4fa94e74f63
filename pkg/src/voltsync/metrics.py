"""Post-processing diagnostics on trajectories."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InsufficientSeriesLength


@dataclass(frozen=True)
class ReturnTimeSpec:
    T: float = 5.0
    xi: float = 1e-4
    t_perturb_end: float = 42.0

    def __post_init__(self):
        if not self.T > 0:
            raise ValueError(f"T must be > 0, got {self.T}")
        if not self.xi > 0:
            raise ValueError(f"xi must be > 0, got {self.xi}")


@dataclass(frozen=True)
class ReturnTimeResult:
    return_time: float | None
    converged: bool
    pointwise_return_time: float | None = None

    def to_json(self):
        return {
            "return_time": self.return_time,
            "converged": self.converged,
            "pointwise_return_time": self.pointwise_return_time,
        }


def return_time(times, mean_E, spec: ReturnTimeSpec) -> ReturnTimeResult:
    """Time after the perturbation until the mean voltage stops moving.

    The lag-T difference ``|E(s) - E(s-T)|`` must stay within ``xi`` for
    every sample ``s`` of a window ``[t-T, t]``.  The result is the start of
    the first such window, measured from ``spec.t_perturb_end``; an
    identically flat series therefore returns 0.  The single-sample variant
    is reported as ``pointwise_return_time``.
    """
    times = np.asarray(times, dtype=float)
    mean_E = np.asarray(mean_E, dtype=float)
    if times.shape != mean_E.shape or times.ndim != 1:
        raise ValueError("times and mean_E must be 1-D and of equal length")
    if times.size < 2:
        raise InsufficientSeriesLength("need at least two samples")
    h = times[1] - times[0]
    if not np.allclose(np.diff(times), h, rtol=1e-6, atol=1e-9):
        raise ValueError("series must be uniformly sampled")
    lag = int(round(spec.T / h))
    if lag < 1:
        raise InsufficientSeriesLength(f"T={spec.T} shorter than the sample spacing {h}")
    t_first = spec.t_perturb_end + spec.T
    if times[-1] < spec.t_perturb_end + 2 * spec.T - 1e-9 or times[0] > spec.t_perturb_end - spec.T + 1e-9:
        raise InsufficientSeriesLength(
            f"series [{times[0]:g}, {times[-1]:g}] does not cover "
            f"[{spec.t_perturb_end - spec.T:g}, {spec.t_perturb_end + 2 * spec.T:g}]"
        )
    # ok[k] refers to sample k + lag
    ok = np.abs(mean_E[lag:] - mean_E[:-lag]) <= spec.xi
    start = int(np.searchsorted(times, t_first - 1e-9))

    pointwise = None
    for k in range(start, times.size):
        if ok[k - lag]:
            pointwise = float(times[k] - spec.T - spec.t_perturb_end)
            break

    windowed = None
    # run length of consecutive passing samples ending at each k
    run = 0
    for k in range(lag, times.size):
        run = run + 1 if ok[k - lag] else 0
        if k >= start and run >= lag + 1:
            windowed = float(times[k] - spec.T - spec.t_perturb_end)
            break
    return ReturnTimeResult(
        return_time=windowed,
        converged=windowed is not None,
        pointwise_return_time=pointwise,
    )


def _late_window(traj, fraction=0.25):
    n = len(traj)
    k0 = min(n - 1, int(np.floor(n * (1.0 - fraction))))
    return slice(k0, n)


def steady_state_deviation_check(traj, model, perturbations=(), fraction=0.25) -> dict:
    """Late-window means against their bulk asymptotes.

    Uniform alpha and gamma are assumed for the asymptotes.
    """
    w = _late_window(traj, fraction)
    om_bar = float(traj.omega[w].mean())
    th_bar = float(traj.theta[w].mean())
    N = model.N
    sum_P = float(model.P_star.sum()) + sum(p.P_dist for p in perturbations)
    alpha = float(model.alpha.mean())
    gamma = float(model.gamma.mean())
    report = {"omega_bar": om_bar, "theta_bar": th_bar, "sum_P": sum_P, "window_start": float(traj.times[w][0])}
    if gamma == 0:
        expected = sum_P / (N * alpha)
        report["omega_bar_expected"] = expected
        report["omega_bar_abs_error"] = abs(om_bar - expected)
        report["omega_bar_rel_error"] = abs(om_bar - expected) / abs(expected) if expected else abs(om_bar)
    else:
        expected_th = sum_P / (N * gamma)
        report["omega_bar_expected"] = 0.0
        report["omega_bar_abs_error"] = abs(om_bar)
        report["theta_bar_expected"] = expected_th
        report["theta_bar_abs_error"] = abs(th_bar - expected_th)
        report["theta_bar_rel_error"] = (abs(th_bar - expected_th) / abs(expected_th)
                                         if expected_th else abs(th_bar))
    return report


def frequency_spread(traj) -> np.ndarray:
    """max_i |omega_i - omega_bar| per sample."""
    om = traj.omega
    return np.max(np.abs(om - om.mean(axis=1, keepdims=True)), axis=1)


def sync_check(traj, tol, window=None, *, phase=True) -> bool:
    """Synchronized over ``window`` (a (t0, t1) pair; default the last 25%).

    Requires the frequency spread below ``tol`` at every sample and, with
    ``phase``, every pairwise phase difference constant within ``tol``.
    """
    if len(traj) == 0:
        raise ValueError("empty trajectory")
    if window is None:
        sel = _late_window(traj)
    else:
        sel = traj.window(*window)
    if traj.N < 2:
        return True
    if np.any(frequency_spread(traj)[sel] >= tol):
        return False
    if phase:
        th = traj.theta[sel]
        for i in range(traj.N - 1):
            diffs = th[:, i + 1:] - th[:, i:i + 1]
            if np.any(np.ptp(diffs, axis=0) >= tol):
                return False
    return True
