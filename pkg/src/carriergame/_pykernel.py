"""Pure-Python best-response dynamics kernel.

Mirrors ``_core.pyx`` operation for operation so both backends produce
bit-identical trajectories. Works on nested lists; numpy only at the edges.
"""

import math

import numpy as np

JACOBI, GAUSS_SEIDEL, ASYNC = 0, 1, 2

BACKEND = "python"


def _best_row(h, g, sigma2, p, k, n, d, gstar, p_max, tie_rtol):
    hk = h[k]
    best = 0
    rbest = math.inf
    second = math.inf
    for l in range(d):
        s = sigma2
        for j in range(n):
            if j != k:
                s += g[j][k][l] * p[j][l]
        r = gstar * s / hk[l]
        if r < rbest:
            second = rbest
            rbest = r
            best = l
        elif r < second:
            second = r
    tie = second - rbest <= tie_rtol * rbest
    clamped = rbest > p_max
    return best, (p_max if clamped else rbest), clamped, tie


def _is_fixed(h, g, sigma2, p, n, d, gstar, p_max, tie_rtol, tol):
    for k in range(n):
        c, pw, clamped, _ = _best_row(h, g, sigma2, p, k, n, d, gstar, p_max, tie_rtol)
        row = p[k]
        for l in range(d):
            target = pw if l == c else 0.0
            if abs(row[l] - target) >= tol:
                return False
        if not clamped:
            s = sigma2
            for j in range(n):
                if j != k:
                    s += g[j][k][c] * p[j][c]
            pkc = row[c]
            if pkc <= 0.0:
                return False
            gamma = h[k][c] * pkc / s
            if abs(gamma - gstar) > gstar * (2.0 * tol / pkc + 1e-12):
                return False
    return True


def run_dynamics(h, g, sigma2, p0, gstar, p_max, scheme, order, user_seq,
                 max_iters, tol, stable_rounds, tie_rtol):
    """Iterate the best-response map until a verified fixed point.

    Returns ``(history, converged, iterations, clamped_ever, tie_ever)``
    where ``history`` is an ``(n_profiles, N, D)`` array starting at ``p0``.
    """
    n, d = np.shape(h)
    h = np.asarray(h, dtype=np.float64).tolist()
    g = np.asarray(g, dtype=np.float64).tolist()
    cur = np.asarray(p0, dtype=np.float64).tolist()
    order = [int(x) for x in order]
    history = [cur]
    iters = 0
    stable = 0
    pos = 0
    converged = False
    clamped_ever = False
    tie_ever = False
    while iters < max_iters:
        if scheme == JACOBI:
            new = [[0.0] * d for _ in range(n)]
            for k in range(n):
                c, pw, cl, ti = _best_row(h, g, sigma2, cur, k, n, d, gstar, p_max, tie_rtol)
                new[k][c] = pw
                clamped_ever = clamped_ever or cl
                tie_ever = tie_ever or ti
            iters += n
        else:
            if scheme == GAUSS_SEIDEL:
                k = order[pos]
                pos = (pos + 1) % n
            else:
                k = int(user_seq[iters])
            c, pw, cl, ti = _best_row(h, g, sigma2, cur, k, n, d, gstar, p_max, tie_rtol)
            clamped_ever = clamped_ever or cl
            tie_ever = tie_ever or ti
            new = [row[:] for row in cur]
            new_row = [0.0] * d
            new_row[c] = pw
            new[k] = new_row
            iters += 1
        diff = 0.0
        for k in range(n):
            a, b = new[k], cur[k]
            for l in range(d):
                dv = abs(a[l] - b[l])
                if dv > diff:
                    diff = dv
        cur = new
        history.append(cur)
        stable = stable + 1 if diff < tol else 0
        if stable >= stable_rounds and _is_fixed(h, g, sigma2, cur, n, d, gstar, p_max,
                                                 tie_rtol, tol):
            converged = True
            break
    return np.array(history, dtype=np.float64), converged, iters, clamped_ever, tie_ever


def jacobi_map(h, g, sigma2, p, gstar, p_max, tie_rtol):
    """One simultaneous best-response step; returns ``(profile, tie_any, clamped_any)``."""
    n, d = np.shape(h)
    hl = np.asarray(h, dtype=np.float64).tolist()
    gl = np.asarray(g, dtype=np.float64).tolist()
    pl = np.asarray(p, dtype=np.float64).tolist()
    out = np.zeros((n, d))
    tie_any = clamped_any = False
    for k in range(n):
        c, pw, cl, ti = _best_row(hl, gl, sigma2, pl, k, n, d, gstar, p_max, tie_rtol)
        out[k, c] = pw
        tie_any = tie_any or ti
        clamped_any = clamped_any or cl
    return out, tie_any, clamped_any
