"""Compiled 1D time-marching loop.

The loop mirrors the numpy path in :mod:`degenlab.solver` operation by
operation (same stencils, same step control, same energy quadrature) and is
tested against it. It exists because certificate runs need 10**5-10**6 steps.
"""
from __future__ import annotations

import numpy as np
from numba import njit

OK = 0
NONFINITE = 1
BUDGET = 2

MODE_EINSTEIN = 0
MODE_PME = 1


@njit(cache=True)
def _pow(x, a):
    if a == 1.0:
        return x
    if a == 0.0:
        return 1.0
    if a == 2.0:
        return x * x
    return x**a


@njit(cache=True)
def _energy_add(u, h, level, kappa, power, dt, energy, z, buckets):
    # z is only needed on nodes with level > 0 and their neighbours
    n = u.size
    n_lev = energy.size
    for i in range(n):
        z[i] = -1.0
    for i in range(n):
        if level[i] == 0:
            continue
        lo = max(i - 1, 0)
        hi = min(i + 1, n - 1)
        if i == 0:
            hi = 2
        if i == n - 1:
            lo = n - 3
        for j in range(lo, hi + 1):
            if z[j] < 0.0:
                z[j] = _pow(u[j], kappa) if u[j] > 0.0 else 0.0
    for k in range(n_lev + 1):
        buckets[k] = 0.0
    for i in range(n):
        lv = level[i]
        if lv == 0:
            continue
        if i == 0:
            g = (-3.0 * z[0] + 4.0 * z[1] - z[2]) / (2.0 * h)
        elif i == n - 1:
            g = (3.0 * z[n - 1] - 4.0 * z[n - 2] + z[n - 3]) / (2.0 * h)
        else:
            g = (z[i + 1] - z[i - 1]) / (2.0 * h)
        g = abs(g)
        buckets[lv] += _pow(g, power)
    acc = 0.0
    for k in range(n_lev, 0, -1):
        acc += buckets[k]
        energy[k - 1] += dt * acc * h


@njit(cache=True)
def march_1d(u, h, t, target, mode, alpha, beta, eps, k2, k1, b, upwind, pme_m,
             r_coeff, r_power, cfl, u_floor, dirichlet, max_steps, steps,
             track, level, kappa, power, energy, stats, dts, und_tol):
    """Advance ``u`` in place from ``t`` to ``target``.

    ``stats`` holds ``[dt_min, dt_max, dt_sum, retries]`` and is updated in
    place; ``dts`` receives the step sizes when it is long enough. Returns
    ``(status, t, steps)``.
    """
    n = u.size
    h2 = h * h
    inv_h2 = 1.0 / h2
    inv_2h = 1.0 / (2.0 * h)
    rate = np.empty(n)
    raw = np.empty(n)
    w = np.empty(n)
    z = np.empty(n)
    buckets = np.empty(energy.size + 1)
    umax = 0.0
    for i in range(n):
        if u[i] > umax:
            umax = u[i]
    while t < target:
        if steps >= max_steps:
            return BUDGET, t, steps
        mc = 0.0
        if mode == MODE_PME:
            for i in range(n):
                w[i] = u[i] ** pme_m
            for i in range(n):
                wl = w[i - 1] if i > 0 else 0.0
                wr = w[i + 1] if i < n - 1 else 0.0
                rate[i] = (wr + wl - 2.0 * w[i]) * inv_h2
            mc = pme_m * umax ** (pme_m - 1.0)
            kk2 = 1.0
            kk1 = 0.0
            lip = 0.0
        else:
            ul = 0.0
            uc = u[0]
            for i in range(n):
                ur = u[i + 1] if i < n - 1 else 0.0
                lap = (ur + ul - 2.0 * uc) * inv_h2
                grad = (ur - ul) * inv_2h
                coef = _pow(uc, alpha) * _pow(abs(grad), beta) + eps
                if coef > mc:
                    mc = coef
                if b != 0.0:
                    if upwind:
                        if b > 0:
                            adv = b * ((ur - uc) / h)
                        else:
                            adv = b * ((uc - ul) / h)
                    else:
                        adv = b * grad
                    r = coef * (k2 * lap + adv)
                else:
                    r = coef * (k2 * lap)
                if r_coeff > 0.0:
                    r += r_coeff * uc**r_power
                rate[i] = r
                ul = uc
                uc = ur
            kk2 = k2
            kk1 = k1
            lip = 0.0
            if r_coeff > 0.0 and umax > 0.0:
                if r_power >= 1.0:
                    lip = r_coeff * r_power * umax ** (r_power - 1.0)
                else:
                    lip = r_coeff * umax ** (r_power - 1.0)
        denom = 2.0 * kk2 * mc + h * kk1 * mc + h2 * lip
        if denom <= 0.0:
            dt = cfl * h2
        else:
            dt = cfl * h2 / denom
        last = t + dt >= target * (1.0 - 1e-14)
        if last:
            dt = target - t
        while True:
            rmin = np.inf
            check = 0.0
            for i in range(n):
                v = u[i] + dt * rate[i]
                check += v
                raw[i] = v
            if not np.isfinite(check):
                return NONFINITE, t, steps
            if dirichlet:
                raw[0] = 0.0
                raw[n - 1] = 0.0
            for i in range(n):
                if raw[i] < rmin:
                    rmin = raw[i]
            if rmin >= -und_tol * umax or dt < 1e-14 * max(target, 1.0):
                break
            dt *= 0.5
            last = False
            stats[3] += 1.0
        if track:
            _energy_add(u, h, level, kappa, power, dt, energy, z, buckets)
        if last:
            t = target
        else:
            t = t + dt
        umax = 0.0
        for i in range(n):
            v = raw[i] if raw[i] > u_floor else u_floor
            u[i] = v
            if v > umax:
                umax = v
        if dt < stats[0]:
            stats[0] = dt
        if dt > stats[1]:
            stats[1] = dt
        stats[2] += dt
        if steps < dts.size:
            dts[steps] = dt
        steps += 1
    return OK, t, steps
