"""Compiled inner loops for the explicit curvature-flow schemes."""

import math

import numpy as np
from numba import njit

OK, HIT_STEPS, HIT_H, COLLAPSE = 0, 1, 2, 3


@njit(cache=True, nogil=True)
def polar_rate(rho, inv2h, cot, cL, cR, n, out):
    """Radial velocity of a closed polar graph moving with normal speed -H.

    Returns the largest mean curvature and the largest stable explicit step.
    The spherical Laplacian part uses the finite-volume weights ``cL``, ``cR``
    (zero flux through the poles).
    """
    N = rho.size
    h_max = -np.inf
    dt_max = np.inf
    for i in range(N):
        p = rho[i]
        if i == 0:
            lap = cR[0] * (rho[1] - p)
            d1 = 0.0
            cubic = 0.0
        elif i == N - 1:
            lap = -cL[i] * (p - rho[i - 1])
            d1 = 0.0
            cubic = 0.0
        else:
            lap = cR[i] * (rho[i + 1] - p) - cL[i] * (p - rho[i - 1])
            d1 = (rho[i + 1] - rho[i - 1]) * inv2h
            cubic = (n - 1) * d1 * d1 * d1 * cot[i] / (p * p)
        D = p * p + d1 * d1
        v = (lap + cubic) / D - (p * p + 2 * d1 * d1) / (p * D) - (n - 1) / p
        out[i] = v
        H = -v * p / math.sqrt(D)
        if H > h_max:
            h_max = H
        s = D / (cL[i] + cR[i])
        if s < dt_max:
            dt_max = s
    return h_max, dt_max


@njit(cache=True, nogil=True)
def axis_rate(r, h, n, out):
    """Radius velocity of an axis graph; endpoints extrapolate linearly."""
    N = r.size
    h_max = -np.inf
    dt_max = np.inf
    for i in range(1, N - 1):
        d1 = (r[i + 1] - r[i - 1]) / (2 * h)
        d2 = (r[i + 1] - 2 * r[i] + r[i - 1]) / (h * h)
        W2 = 1 + d1 * d1
        out[i] = d2 / W2 - (n - 1) / r[i]
        H = -out[i] / math.sqrt(W2)
        if H > h_max:
            h_max = H
        s = W2 * h * h / 2
        if s < dt_max:
            dt_max = s
    out[0] = 2 * out[1] - out[2]
    out[N - 1] = 2 * out[N - 2] - out[N - 3]
    return h_max, dt_max


@njit(cache=True, nogil=True)
def advance_polar(rho, inv2h, cot, cL, cR, n, safety, t, t_stop, max_steps, H_stop):
    """Explicit Euler steps in place until a stop condition.

    Returns ``(t, steps, status, h_max)``; on collapse the state is left at the
    last valid step.
    """
    N = rho.size
    rate = np.empty(N)
    new = np.empty(N)
    steps = 0
    while True:
        h_max, dt_lim = polar_rate(rho, inv2h, cot, cL, cR, n, rate)
        if h_max >= H_stop:
            return t, steps, HIT_H, h_max
        if t >= t_stop:
            return t, steps, OK, h_max
        if steps >= max_steps:
            return t, steps, HIT_STEPS, h_max
        dt = safety * dt_lim
        last = False
        if t + dt >= t_stop:
            dt = t_stop - t
            last = True
        for i in range(N):
            x = rho[i] + dt * rate[i]
            if not (x > 0.0) or not math.isfinite(x):
                return t, steps, COLLAPSE, h_max
            new[i] = x
        rho[:] = new
        t = t_stop if last else t + dt
        steps += 1


@njit(cache=True, nogil=True)
def advance_axis(r, h, n, safety, t, t_stop, max_steps, H_stop):
    N = r.size
    rate = np.empty(N)
    new = np.empty(N)
    steps = 0
    while True:
        h_max, dt_lim = axis_rate(r, h, n, rate)
        if h_max >= H_stop:
            return t, steps, HIT_H, h_max
        if t >= t_stop:
            return t, steps, OK, h_max
        if steps >= max_steps:
            return t, steps, HIT_STEPS, h_max
        dt = safety * dt_lim
        last = False
        if t + dt >= t_stop:
            dt = t_stop - t
            last = True
        for i in range(N):
            x = r[i] + dt * rate[i]
            if not (x > 0.0) or not math.isfinite(x):
                return t, steps, COLLAPSE, h_max
            new[i] = x
        r[:] = new
        t = t_stop if last else t + dt
        steps += 1
