"""Solvers for square polynomial systems given as batched ``(F, J)`` callables.

``multistart_newton`` runs the compiled Newton kernel from seeded random
starts. ``total_degree_homotopy`` tracks every root of ``y_a^D = 1`` to
the target system with a random complex ``gamma``; with probability one
it reaches every isolated root.
"""
import numpy as np

from ._kernels import newton_batch


def ball_starts(n: int, count: int, radius: float, seed: int) -> np.ndarray:
    """Uniform points of the complex ``n``-ball; start ``i`` depends only on ``(seed, i)``."""
    out = np.empty((count, n), dtype=complex)
    for i in range(count):
        rng = np.random.default_rng([seed, 7, i])
        z = rng.normal(size=n) + 1j * rng.normal(size=n)
        z /= np.linalg.norm(z)
        out[i] = radius * rng.uniform() ** (1.0 / (2 * n)) * z
    return out


def multistart_newton(system, n: int, count: int, radius: float, seed: int, maxit: int = 80, tol: float = 1e-13):
    starts = ball_starts(n, count, radius, seed)
    x, status = newton_batch(starts, system.coeffs, system.cubic, maxit, tol, 1e6 * max(radius, 1.0))
    return x[status == 1]


def _solve(jac, rhs):
    try:
        return np.linalg.solve(jac, rhs[..., None])[..., 0]
    except np.linalg.LinAlgError:
        out = np.empty_like(rhs)
        for k in range(len(rhs)):
            out[k] = np.linalg.lstsq(jac[k], rhs[k], rcond=None)[0]
        return out


def polish(system, x, iterations: int = 8):
    """A few plain Newton steps, batched."""
    x = np.array(x, dtype=complex, copy=True)
    for _ in range(iterations):
        f, j = system.evaluate(x)
        x = x - _solve(j, f)
    return x


def total_degree_homotopy(
    system,
    n: int,
    degree: int,
    scale: float,
    seed: int,
    h_max: float = 0.05,
    h_min: float = 1e-12,
    blowup: float = 1e7,
    max_steps: int = 20000,
):
    """Endpoints of all ``degree ** n`` paths that stay finite.

    Variables are rescaled by ``scale`` so that start roots and targets
    are of comparable size.
    """
    rng = np.random.default_rng([seed, 11])
    phase = rng.uniform(0, 2 * np.pi)
    gamma = np.exp(1j * phase)
    roots = np.exp(2j * np.pi * np.arange(degree) / degree)
    grids = np.meshgrid(*([roots] * n), indexing="ij")
    y = np.stack([g.ravel() for g in grids], axis=1).astype(complex)
    paths = len(y)
    t = np.zeros(paths)
    h = np.full(paths, h_max / 4)
    streak = np.zeros(paths, dtype=int)
    active = np.ones(paths, dtype=bool)
    finished = np.zeros(paths, dtype=bool)
    eye = np.eye(n)

    def hom(yy, tt):
        f, j = system.evaluate(scale * yy)
        g = yy ** degree - 1.0
        tt = tt[:, None]
        value = (1 - tt) * gamma * g + tt * f
        dy = (1 - tt)[:, :, None] * gamma * degree * (yy ** (degree - 1))[:, :, None] * eye + tt[:, :, None] * scale * j
        dt = f - gamma * g
        return value, dy, dt

    def velocity(yy, tt):
        _, dy, dt = hom(yy, tt)
        return -_solve(dy, dt)

    steps = 0
    while active.any() and steps < max_steps:
        steps += 1
        ids = np.nonzero(active)[0]
        y0, t0 = y[ids], t[ids]
        hh = np.minimum(h[ids], 1.0 - t0)
        k1 = velocity(y0, t0)
        k2 = velocity(y0 + 0.5 * hh[:, None] * k1, t0 + 0.5 * hh)
        k3 = velocity(y0 + 0.5 * hh[:, None] * k2, t0 + 0.5 * hh)
        k4 = velocity(y0 + hh[:, None] * k3, t0 + hh)
        y1 = y0 + hh[:, None] / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)
        t1 = t0 + hh
        ok = np.zeros(len(ids), dtype=bool)
        for it in range(3):
            value, dy, _ = hom(y1, t1)
            delta = _solve(dy, value)
            y1 = y1 - delta
            size = np.max(np.abs(delta), axis=1)
            ok = size <= 1e-10 * (1.0 + np.max(np.abs(y1), axis=1))
            if ok.all():
                break
        jump = np.max(np.abs(y1 - y0), axis=1) <= 0.5 * (1.0 + np.max(np.abs(y0), axis=1))
        ok &= jump & np.all(np.isfinite(y1), axis=1)
        for k, p in enumerate(ids):
            if ok[k]:
                y[p], t[p] = y1[k], t1[k]
                streak[p] += 1
                if streak[p] >= 3:
                    h[p] = min(h_max, 1.5 * h[p])
                    streak[p] = 0
                if t[p] >= 1.0:
                    active[p] = False
                    finished[p] = True
                elif np.max(np.abs(y[p])) > blowup:
                    active[p] = False
            else:
                h[p] *= 0.5
                streak[p] = 0
                if h[p] < h_min:
                    active[p] = False
    x = scale * y[finished]
    if len(x):
        x = polish(system, x)
    return x[np.all(np.isfinite(x), axis=1)] if len(x) else x.reshape(0, n)
