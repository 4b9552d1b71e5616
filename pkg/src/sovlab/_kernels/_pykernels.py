"""NumPy implementations of the hot kernels.

These define the reference semantics; the compiled module mirrors them
one for one and is checked against them in the test suite.
"""
import numpy as np


def graded_swap_table(d, m, sites, a, b):
    """Signed permutation of the graded flip of sites ``a < b``."""
    size = d ** sites
    idx = np.arange(size, dtype=np.int64)
    ka = (idx // d ** a) % d
    kb = (idx // d ** b) % d
    perm = idx + (kb - ka) * d ** a + (ka - kb) * d ** b
    pa = (ka >= m).astype(np.int64)
    pb = (kb >= m).astype(np.int64)
    mid = np.zeros(size, dtype=np.int64)
    for c in range(a + 1, b):
        mid += ((idx // d ** c) % d >= m)
    odd = (pa * pb + (pa + pb) * mid) % 2
    sign = np.where(odd == 1, -1.0, 1.0)
    return perm, sign


def tower_system(x, coeffs, cubic):
    """Residuals and Jacobians of the scalar tower systems for a batch of points.

    ``x`` has shape ``(S, N)``. ``coeffs`` is the tuple assembled by
    :class:`sovlab.gl12.TowerSystem`. With ``cubic`` set the system is
    ``x_a * t2(xi_a + eta)``; otherwise it is the closure relation sampled
    at the stored points.
    """
    (A1, B1, P2, Q2, a1, b1, p2, q2, p2p, q2p, p3, q3, cL, ck, cs) = coeffs
    S, N = x.shape
    eye = np.eye(N)
    u = A1[None, :] + x @ B1.T
    w = u * x
    dw = B1[None, :, :] * x[:, :, None] + u[:, :, None] * eye[None, :, :]
    v = P2[None, :] + w @ Q2.T
    dv = np.einsum("ab,sbc->sac", Q2, dw)
    if cubic:
        f = cs[None, :] * x * v
        jac = cs[None, :, None] * (x[:, :, None] * dv + v[:, :, None] * eye[None, :, :])
        return f, jac
    z = v * x
    dz = dv * x[:, :, None] + v[:, :, None] * eye[None, :, :]
    t1p = a1[None, :] + x @ b1.T
    t2 = p2[None, :] + w @ q2.T
    t2p = p2p[None, :] + w @ q2p.T
    t3 = p3[None, :] + z @ q3.T
    dt2 = np.einsum("jb,sbc->sjc", q2, dw)
    dt2p = np.einsum("jb,sbc->sjc", q2p, dw)
    dt3 = np.einsum("jb,sbc->sjc", q3, dz)
    f = cL[None, :] * t3 - ck[None, :] * (t2 * t2p - t3 * t1p)
    jac = (
        cL[None, :, None] * dt3
        - ck[None, :, None]
        * (dt2 * t2p[:, :, None] + t2[:, :, None] * dt2p - dt3 * t1p[:, :, None] - t3[:, :, None] * b1[None, :, :])
    )
    return f, jac


def newton_batch(x0, coeffs, cubic, maxit, tol, blowup):
    """Plain Newton from every row of ``x0``.

    Returns ``(x, status)`` where status is 1 for converged, 0 for not
    converged within ``maxit`` and -1 for a singular step or blow-up.
    """
    x = np.array(x0, dtype=complex, copy=True)
    S, N = x.shape
    status = np.zeros(S, dtype=np.int64)
    active = np.ones(S, dtype=bool)
    for _ in range(maxit):
        if not active.any():
            break
        ids = np.nonzero(active)[0]
        f, jac = tower_system(x[ids], coeffs, cubic)
        step = np.empty_like(f)
        for k, s in enumerate(ids):
            try:
                step[k] = np.linalg.solve(jac[k], -f[k])
            except np.linalg.LinAlgError:
                status[s] = -1
                active[s] = False
                step[k] = 0.0
        x[ids] += step
        size = np.max(np.abs(step), axis=1)
        scale = 1.0 + np.max(np.abs(x[ids]), axis=1)
        done = size <= tol * scale
        bad = ~np.isfinite(size) | (scale > blowup)
        for k, s in enumerate(ids):
            if not active[s]:
                continue
            if bad[k]:
                status[s] = -1
                active[s] = False
            elif done[k]:
                status[s] = 1
                active[s] = False
    return x, status
