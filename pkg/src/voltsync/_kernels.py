"""Compiled right-hand sides and the fixed-step RK4 loop.

State layout: ``[theta(N), omega(N), E(N)]`` for the reduced model and
``[theta, omega, E, u]`` for the full model.  Perturbations are passed as
four parallel arrays (node, t_start, t_end, delta_P).
"""

import numpy as np
from numba import njit

STATUS_OK = 0
STATUS_DIVERGED = 1


@njit(cache=True, nogil=True)
def effective_power(t, P, pn, pt0, pt1, pdp, out):
    for i in range(P.shape[0]):
        out[i] = P[i]
    for k in range(pn.shape[0]):
        if t <= pt0[k]:
            frac = 0.0
        elif t >= pt1[k]:
            frac = 1.0
        else:
            frac = (t - pt0[k]) / (pt1[k] - pt0[k])
        out[pn[k]] += frac * pdp[k]


@njit(cache=True, nogil=True)
def rhs(t, y, N, full, const_voltage, P, alpha, gamma, T_d, E_f, X, tau_g, beta, B,
        pn, pt0, pt1, pdp, work, dy):
    # work: scratch of length 5N
    Pt = work[0:N]
    sn = work[N:2 * N]
    cs = work[2 * N:3 * N]
    es = work[3 * N:4 * N]
    ec = work[4 * N:5 * N]
    effective_power(t, P, pn, pt0, pt1, pdp, Pt)
    for j in range(N):
        sn[j] = np.sin(y[j])
        cs[j] = np.cos(y[j])
    for i in range(N):
        a = 0.0
        b = 0.0
        for j in range(N):
            w = B[i, j] * y[2 * N + j]
            a += w * cs[j]
            b += w * sn[j]
        ec[i] = a  # sum_j B_ij E_j cos(theta_j)
        es[i] = b  # sum_j B_ij E_j sin(theta_j)
    for i in range(N):
        E_i = y[2 * N + i]
        # sum_j B_ij E_j sin(th_i - th_j) and cos(th_i - th_j)
        s_sum = sn[i] * ec[i] - cs[i] * es[i]
        c_sum = cs[i] * ec[i] + sn[i] * es[i]
        om = y[N + i]
        dy[i] = om
        if full:
            dy[N + i] = -alpha[i] * om + Pt[i] - E_i * s_sum + y[3 * N + i]
            dy[3 * N + i] = (-y[3 * N + i] - gamma[i] * y[i] - beta[i] * om) / tau_g[i]
        else:
            dy[N + i] = -alpha[i] * om - gamma[i] * y[i] + Pt[i] - E_i * s_sum
        if const_voltage:
            dy[2 * N + i] = 0.0
        else:
            dy[2 * N + i] = (E_f[i] - E_i + X[i] * c_sum) / T_d[i]


@njit(cache=True, nogil=True)
def rk4_integrate(y0, dt, n_steps, stride, bound, N, full, const_voltage,
                  P, alpha, gamma, T_d, E_f, X, tau_g, beta, B, pn, pt0, pt1, pdp,
                  samples, sample_times):
    """Integrate and store every ``stride``-th state.

    Returns ``(n_samples, status, t_fail, first_nonpositive_E_time, last_y, t_last)``.
    """
    n = y0.shape[0]
    y = y0.copy()
    k1 = np.empty(n)
    k2 = np.empty(n)
    k3 = np.empty(n)
    k4 = np.empty(n)
    tmp = np.empty(n)
    work = np.empty(5 * N)
    samples[0, :] = y
    sample_times[0] = 0.0
    ns = 1
    t_nonpos = -1.0
    for i in range(N):
        if y[2 * N + i] <= 0.0:
            t_nonpos = 0.0
    for step in range(n_steps):
        t = step * dt
        rhs(t, y, N, full, const_voltage, P, alpha, gamma, T_d, E_f, X, tau_g, beta, B,
            pn, pt0, pt1, pdp, work, k1)
        for m in range(n):
            tmp[m] = y[m] + 0.5 * dt * k1[m]
        rhs(t + 0.5 * dt, tmp, N, full, const_voltage, P, alpha, gamma, T_d, E_f, X, tau_g,
            beta, B, pn, pt0, pt1, pdp, work, k2)
        for m in range(n):
            tmp[m] = y[m] + 0.5 * dt * k2[m]
        rhs(t + 0.5 * dt, tmp, N, full, const_voltage, P, alpha, gamma, T_d, E_f, X, tau_g,
            beta, B, pn, pt0, pt1, pdp, work, k3)
        for m in range(n):
            tmp[m] = y[m] + dt * k3[m]
        rhs(t + dt, tmp, N, full, const_voltage, P, alpha, gamma, T_d, E_f, X, tau_g,
            beta, B, pn, pt0, pt1, pdp, work, k4)
        bad = False
        for m in range(n):
            v = y[m] + dt / 6.0 * (k1[m] + 2.0 * k2[m] + 2.0 * k3[m] + k4[m])
            if not (abs(v) <= bound):
                bad = True
            tmp[m] = v
        t_new = (step + 1) * dt
        if bad:
            return ns, STATUS_DIVERGED, t_new, t_nonpos, y, t
        for m in range(n):
            y[m] = tmp[m]
        if t_nonpos < 0.0:
            for i in range(N):
                if y[2 * N + i] <= 0.0:
                    t_nonpos = t_new
                    break
        if (step + 1) % stride == 0:
            samples[ns, :] = y
            sample_times[ns] = t_new
            ns += 1
    return ns, STATUS_OK, -1.0, t_nonpos, y, n_steps * dt
