"""Hot loops with numba and pure-numpy implementations.

Each public function picks the numba kernel when acceleration is enabled
(see :mod:`robustmc._accel`) and the numpy version otherwise.  Both consume
the same pre-drawn randomness, so they return the same numbers up to
floating-point summation order.
"""
import math

import numpy as np

from ._accel import USE_NUMBA, njit


# ------------------------------------------------------------------ ACF

def _acf_np(xc, max_lag):
    n = xc.shape[0]
    return np.array([np.dot(xc[: n - k], xc[k:]) for k in range(max_lag + 1)])


def autocovariance_sums(xc, max_lag):
    """sum_t xc[t] xc[t+k] for k = 0..max_lag (direct summation).

    Always numpy: each lag is one BLAS dot, which beats a compiled scalar loop."""
    xc = np.ascontiguousarray(xc, dtype=np.float64)
    return _acf_np(xc, max_lag)


# ------------------------------------------------- Zig-Zag on box Gaussian

@njit
def _zz_box_next(x, v, prec, E):
    a = v * x
    t_wall = 1.0 - a
    if prec > 0.0:
        ap = a if a > 0.0 else 0.0
        t_rate = math.sqrt(2.0 * E / prec + ap * ap) - a
        if t_rate < t_wall:
            return t_rate, 0, 0.0
        return t_wall, 1, E - 0.5 * prec * (1.0 - ap * ap)
    return t_wall, 1, E


@njit
def _zz_box_loop(x, v, prec, n_events, exps, track):
    """Product-form Zig-Zag on N(0, 1/prec) restricted to [-1, 1]^d.

    Wall hits flip the velocity and keep the unused part of the exponential
    budget.  Returns time integrals of x and x^2 per coordinate, the final
    time and the skeleton of coordinate ``track``."""
    d = x.shape[0]
    last = np.zeros(d)
    when = np.empty(d)
    kind = np.zeros(d, np.int64)
    resid = np.zeros(d)
    ptr = 0
    for i in range(d):
        dt, k, r = _zz_box_next(x[i], v[i], prec, exps[ptr])
        ptr += 1
        when[i] = dt
        kind[i] = k
        resid[i] = r
    sx = np.zeros(d)
    sx2 = np.zeros(d)
    skel_t = np.empty(n_events + 1)
    skel_x = np.empty(n_events + 1)
    skel_t[0] = 0.0
    skel_x[0] = x[track]
    m = 1
    t_now = 0.0
    for _ in range(n_events):
        i = 0
        best = when[0]
        for j in range(1, d):
            if when[j] < best:
                best = when[j]
                i = j
        dt = best - last[i]
        xi = x[i]
        vi = v[i]
        sx[i] += xi * dt + vi * dt * dt / 2.0
        sx2[i] += xi * xi * dt + xi * vi * dt * dt + dt * dt * dt / 3.0
        if kind[i] == 1:
            x[i] = vi
            E = resid[i]
        else:
            x[i] = xi + vi * dt
            E = exps[ptr]
            ptr += 1
        v[i] = -vi
        last[i] = best
        t_now = best
        if i == track:
            skel_t[m] = best
            skel_x[m] = x[i]
            m += 1
        step, k, r = _zz_box_next(x[i], v[i], prec, E)
        when[i] = best + step
        kind[i] = k
        resid[i] = r
    for i in range(d):
        dt = t_now - last[i]
        sx[i] += x[i] * dt + v[i] * dt * dt / 2.0
        sx2[i] += x[i] * x[i] * dt + x[i] * v[i] * dt * dt + dt * dt * dt / 3.0
        x[i] = x[i] + v[i] * dt
    return sx, sx2, t_now, skel_t[:m], skel_x[:m]


def zz_box_gaussian(x0, v0, sigma2, n_events, exps, track=0):
    prec = 0.0 if math.isinf(sigma2) else 1.0 / sigma2
    x = np.array(x0, dtype=np.float64)
    v = np.array(v0, dtype=np.float64)
    exps = np.ascontiguousarray(exps, dtype=np.float64)
    if exps.size < x.size + n_events:
        raise ValueError("exponential pool too small")
    sx, sx2, T, st, sxk = _zz_box_loop(x, v, prec, int(n_events), exps, int(track))
    return {"mean": sx / T, "second_moment": sx2 / T, "total_time": T,
            "skeleton_t": st, "skeleton_x": sxk, "final_x": x, "final_v": v}


# ----------------------------------------- (P-)MALA on the Laplace product

@njit
def _laplace_chain_nb(x, h, noise, logu, proximal, sumx, trace0):
    n, d = noise.shape
    s2h = math.sqrt(2.0 * h)
    mx = np.empty(d)
    my = np.empty(d)
    y = np.empty(d)
    ux = 0.0
    for j in range(d):
        ux += abs(x[j])
        if proximal:
            mx[j] = math.copysign(max(abs(x[j]) - h, 0.0), x[j])
        else:
            mx[j] = x[j] - h * np.sign(x[j])
    acc = 0
    for t in range(n):
        uy = 0.0
        for j in range(d):
            y[j] = mx[j] + s2h * noise[t, j]
            uy += abs(y[j])
            if proximal:
                my[j] = math.copysign(max(abs(y[j]) - h, 0.0), y[j])
            else:
                my[j] = y[j] - h * np.sign(y[j])
        back = 0.0
        fwd = 0.0
        for j in range(d):
            back += (x[j] - my[j]) ** 2
            fwd += (y[j] - mx[j]) ** 2
        logr = ux - uy - (back - fwd) / (4.0 * h)
        if logu[t] < logr:
            for j in range(d):
                x[j] = y[j]
                mx[j] = my[j]
            ux = uy
            acc += 1
        for j in range(d):
            sumx[j] += x[j]
        trace0[t] = x[0]
    return acc


def _laplace_mean_np(x, h, proximal):
    if proximal:
        return np.sign(x) * np.maximum(np.abs(x) - h, 0.0)
    return x - h * np.sign(x)


def _laplace_chain_np(x, h, noise, logu, proximal, sumx, trace0):
    s2h = math.sqrt(2.0 * h)
    mx = _laplace_mean_np(x, h, proximal)
    ux = np.abs(x).sum()
    acc = 0
    for t in range(noise.shape[0]):
        y = mx + s2h * noise[t]
        my = _laplace_mean_np(y, h, proximal)
        uy = np.abs(y).sum()
        logr = ux - uy - (np.sum((x - my) ** 2) - np.sum((y - mx) ** 2)) / (4.0 * h)
        if logu[t] < logr:
            x[:] = y
            mx, ux = my, uy
            acc += 1
        sumx += x
        trace0[t] = x[0]
    return acc


def laplace_langevin_chunk(x, h, noise, logu, proximal, sumx, trace0):
    """Advance ``x`` in place through ``len(logu)`` MALA (or P-MALA with
    lambda = h) steps on pi ~ exp(-|x|_1); returns the accept count."""
    fn = _laplace_chain_nb if USE_NUMBA else _laplace_chain_np
    return int(fn(x, float(h), np.ascontiguousarray(noise), np.ascontiguousarray(logu), bool(proximal), sumx, trace0))
