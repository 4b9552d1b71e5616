# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled versions of the kernels in ``_pykernels``."""
import numpy as np
cimport numpy as cnp
from libc.math cimport fabs, isfinite

cnp.import_array()

ctypedef double complex cplx


def graded_swap_table(int d, int m, int sites, int a, int b):
    cdef Py_ssize_t size = d ** sites
    cdef cnp.ndarray[cnp.int64_t, ndim=1] perm = np.empty(size, dtype=np.int64)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] sign = np.empty(size, dtype=np.float64)
    cdef Py_ssize_t idx, rest, da, db
    cdef int c, k, ka = 0, kb = 0, mid, pa, pb
    da = d ** a
    db = d ** b
    for idx in range(size):
        rest = idx
        mid = 0
        for c in range(b + 1):
            k = rest % d
            rest //= d
            if c == a:
                ka = k
            elif c == b:
                kb = k
            elif c > a and k >= m:
                mid += 1
        pa = 1 if ka >= m else 0
        pb = 1 if kb >= m else 0
        perm[idx] = idx + (kb - ka) * da + (ka - kb) * db
        sign[idx] = -1.0 if (pa * pb + (pa + pb) * mid) % 2 else 1.0
    return perm, sign


cdef inline double cabs1(cplx z) nogil:
    return fabs(z.real) + fabs(z.imag)


cdef void _eval_one(
    const cplx[:] x, int n, int m, int cubic,
    const cplx[:] A1, const cplx[:, :] B1, const cplx[:] P2, const cplx[:, :] Q2,
    const cplx[:] a1, const cplx[:, :] b1, const cplx[:] p2, const cplx[:, :] q2,
    const cplx[:] p2p, const cplx[:, :] q2p, const cplx[:] p3, const cplx[:, :] q3,
    const cplx[:] cL, const cplx[:] ck, const cplx[:] cs,
    cplx[:] u, cplx[:] w, cplx[:, :] dw, cplx[:] v, cplx[:, :] dv, cplx[:] z, cplx[:, :] dz,
    cplx[:] f, cplx[:, :] jac,
) nogil:
    cdef int a, b, c, j
    cdef cplx acc, t1p, t2, t2p, t3, d2, d2p, d3
    for a in range(n):
        acc = A1[a]
        for c in range(n):
            acc = acc + B1[a, c] * x[c]
        u[a] = acc
    for b in range(n):
        w[b] = u[b] * x[b]
        for c in range(n):
            dw[b, c] = B1[b, c] * x[b]
        dw[b, b] = dw[b, b] + u[b]
    for a in range(n):
        acc = P2[a]
        for b in range(n):
            acc = acc + Q2[a, b] * w[b]
        v[a] = acc
        for c in range(n):
            acc = 0
            for b in range(n):
                acc = acc + Q2[a, b] * dw[b, c]
            dv[a, c] = acc
    if cubic:
        for a in range(n):
            f[a] = cs[a] * x[a] * v[a]
            for c in range(n):
                jac[a, c] = cs[a] * x[a] * dv[a, c]
            jac[a, a] = jac[a, a] + cs[a] * v[a]
        return
    for b in range(n):
        z[b] = v[b] * x[b]
        for c in range(n):
            dz[b, c] = dv[b, c] * x[b]
        dz[b, b] = dz[b, b] + v[b]
    for j in range(m):
        t1p = a1[j]
        t2 = p2[j]
        t2p = p2p[j]
        t3 = p3[j]
        for b in range(n):
            t1p = t1p + b1[j, b] * x[b]
            t2 = t2 + q2[j, b] * w[b]
            t2p = t2p + q2p[j, b] * w[b]
            t3 = t3 + q3[j, b] * z[b]
        f[j] = cL[j] * t3 - ck[j] * (t2 * t2p - t3 * t1p)
        for c in range(n):
            d2 = 0
            d2p = 0
            d3 = 0
            for b in range(n):
                d2 = d2 + q2[j, b] * dw[b, c]
                d2p = d2p + q2p[j, b] * dw[b, c]
                d3 = d3 + q3[j, b] * dz[b, c]
            jac[j, c] = cL[j] * d3 - ck[j] * (d2 * t2p + t2 * d2p - d3 * t1p - t3 * b1[j, c])


def tower_system(x, coeffs, cubic):
    (A1, B1, P2, Q2, a1, b1, p2, q2, p2p, q2p, p3, q3, cL, ck, cs) = [
        np.ascontiguousarray(arr, dtype=complex) for arr in coeffs
    ]
    cdef cplx[:, :] xs = np.ascontiguousarray(x, dtype=complex)
    cdef int S = xs.shape[0]
    cdef int n = xs.shape[1]
    cdef int m = n if cubic else a1.shape[0]
    fo = np.empty((S, m), dtype=complex)
    jo = np.empty((S, m, n), dtype=complex)
    cdef cplx[:, :] fv = fo
    cdef cplx[:, :, :] jv = jo
    cdef cplx[:] u = np.empty(n, dtype=complex)
    cdef cplx[:] w = np.empty(n, dtype=complex)
    cdef cplx[:] v = np.empty(n, dtype=complex)
    cdef cplx[:] z = np.empty(n, dtype=complex)
    cdef cplx[:, :] dw = np.empty((n, n), dtype=complex)
    cdef cplx[:, :] dv = np.empty((n, n), dtype=complex)
    cdef cplx[:, :] dz = np.empty((n, n), dtype=complex)
    cdef int s
    cdef int cub = 1 if cubic else 0
    cdef const cplx[:] vA1 = A1, va1 = a1, vP2 = P2, vp2 = p2, vp2p = p2p, vp3 = p3, vcL = cL, vck = ck, vcs = cs
    cdef const cplx[:, :] vB1 = B1, vQ2 = Q2, vb1 = b1, vq2 = q2, vq2p = q2p, vq3 = q3
    with nogil:
        for s in range(S):
            _eval_one(xs[s], n, m, cub, vA1, vB1, vP2, vQ2, va1, vb1, vp2, vq2, vp2p, vq2p, vp3, vq3, vcL, vck, vcs,
                      u, w, dw, v, dv, z, dz, fv[s], jv[s])
    return fo, jo


cdef int _solve_inplace(cplx[:, :] a, cplx[:] rhs, int n) nogil:
    """Gaussian elimination with partial pivoting; returns 0 on a zero pivot."""
    cdef int i, j, k, piv
    cdef double best, val
    cdef cplx tmp, factor
    for k in range(n):
        piv = k
        best = cabs1(a[k, k])
        for i in range(k + 1, n):
            val = cabs1(a[i, k])
            if val > best:
                best = val
                piv = i
        if best == 0.0:
            return 0
        if piv != k:
            for j in range(n):
                tmp = a[k, j]
                a[k, j] = a[piv, j]
                a[piv, j] = tmp
            tmp = rhs[k]
            rhs[k] = rhs[piv]
            rhs[piv] = tmp
        for i in range(k + 1, n):
            factor = a[i, k] / a[k, k]
            for j in range(k, n):
                a[i, j] = a[i, j] - factor * a[k, j]
            rhs[i] = rhs[i] - factor * rhs[k]
    for i in range(n - 1, -1, -1):
        tmp = rhs[i]
        for j in range(i + 1, n):
            tmp = tmp - a[i, j] * rhs[j]
        rhs[i] = tmp / a[i, i]
    return 1


def newton_batch(x0, coeffs, cubic, int maxit, double tol, double blowup):
    (A1, B1, P2, Q2, a1, b1, p2, q2, p2p, q2p, p3, q3, cL, ck, cs) = [
        np.ascontiguousarray(arr, dtype=complex) for arr in coeffs
    ]
    xo = np.array(x0, dtype=complex, copy=True, order="C")
    cdef cplx[:, :] xs = xo
    cdef int S = xs.shape[0]
    cdef int n = xs.shape[1]
    cdef int m = n if cubic else a1.shape[0]
    status_o = np.zeros(S, dtype=np.int64)
    cdef cnp.int64_t[:] status = status_o
    cdef cplx[:] u = np.empty(n, dtype=complex)
    cdef cplx[:] w = np.empty(n, dtype=complex)
    cdef cplx[:] v = np.empty(n, dtype=complex)
    cdef cplx[:] z = np.empty(n, dtype=complex)
    cdef cplx[:, :] dw = np.empty((n, n), dtype=complex)
    cdef cplx[:, :] dv = np.empty((n, n), dtype=complex)
    cdef cplx[:, :] dz = np.empty((n, n), dtype=complex)
    cdef cplx[:] f = np.empty(m, dtype=complex)
    cdef cplx[:, :] jac = np.empty((m, n), dtype=complex)
    cdef int s, it, c
    cdef int cub = 1 if cubic else 0
    cdef double size, scale, mag
    cdef bint finite
    cdef const cplx[:] vA1 = A1, va1 = a1, vP2 = P2, vp2 = p2, vp2p = p2p, vp3 = p3, vcL = cL, vck = ck, vcs = cs
    cdef const cplx[:, :] vB1 = B1, vQ2 = Q2, vb1 = b1, vq2 = q2, vq2p = q2p, vq3 = q3
    with nogil:
        for s in range(S):
            for it in range(maxit):
                _eval_one(xs[s], n, m, cub, vA1, vB1, vP2, vQ2, va1, vb1, vp2, vq2, vp2p, vq2p, vp3, vq3, vcL, vck, vcs,
                          u, w, dw, v, dv, z, dz, f, jac)
                for c in range(n):
                    f[c] = -f[c]
                if not _solve_inplace(jac, f, n):
                    status[s] = -1
                    break
                size = 0.0
                scale = 0.0
                finite = True
                for c in range(n):
                    xs[s, c] = xs[s, c] + f[c]
                    mag = abs(f[c])
                    if not isfinite(mag):
                        finite = False
                    if mag > size:
                        size = mag
                    mag = abs(xs[s, c])
                    if mag > scale:
                        scale = mag
                scale = 1.0 + scale
                if not finite or scale > blowup:
                    status[s] = -1
                    break
                if size <= tol * scale:
                    status[s] = 1
                    break
    return xo, status_o
