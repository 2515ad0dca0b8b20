# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled RK4 ray integrator for gradient-index media.

Mirrors _pycore.trace_batch ray by ray: mode 0 is the analytic classical
Luneburg profile, mode 1 a vacuum-padded voxel grid sampled trilinearly
with central-difference gradients (probe = step/4).
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport floor, sqrt

cnp.import_array()


cdef struct Medium:
    int mode
    double radius
    double ox, oy, oz
    double gstep
    double grad_h
    Py_ssize_t nx, ny, nz
    const double* grid


cdef inline double _interp(const Medium* m, double x, double y, double z) noexcept nogil:
    cdef double fx = (x - m.ox) / m.gstep - 0.5
    cdef double fy = (y - m.oy) / m.gstep - 0.5
    cdef double fz = (z - m.oz) / m.gstep - 0.5
    cdef Py_ssize_t ix = <Py_ssize_t>floor(fx)
    cdef Py_ssize_t iy = <Py_ssize_t>floor(fy)
    cdef Py_ssize_t iz = <Py_ssize_t>floor(fz)
    if ix < 0 or iy < 0 or iz < 0 or ix > m.nx - 2 or iy > m.ny - 2 or iz > m.nz - 2:
        return 1.0
    cdef double tx = fx - ix
    cdef double ty = fy - iy
    cdef double tz = fz - iz
    cdef Py_ssize_t s = m.ny * m.nz
    cdef const double* g = m.grid + ix * s + iy * m.nz + iz
    cdef double c00 = g[0] * (1 - tx) + g[s] * tx
    cdef double c01 = g[1] * (1 - tx) + g[s + 1] * tx
    cdef double c10 = g[m.nz] * (1 - tx) + g[s + m.nz] * tx
    cdef double c11 = g[m.nz + 1] * (1 - tx) + g[s + m.nz + 1] * tx
    return (c00 * (1 - ty) + c10 * ty) * (1 - tz) + (c01 * (1 - ty) + c11 * ty) * tz


cdef inline void _sample(const Medium* m, const double* p, double* eps, double* geps) noexcept nogil:
    # the analytic profile extends to 1.02 R so boundary-crossing RK4 stages
    # see a continuous medium (matches media.SURFACE_MARGIN)
    cdef double r2, h
    if m.mode == 0:
        r2 = p[0] * p[0] + p[1] * p[1] + p[2] * p[2]
        if r2 > m.radius * m.radius * 1.0404:
            eps[0] = 1.0
            geps[0] = geps[1] = geps[2] = 0.0
        else:
            eps[0] = 2.0 - r2 / (m.radius * m.radius)
            geps[0] = -2.0 * p[0] / (m.radius * m.radius)
            geps[1] = -2.0 * p[1] / (m.radius * m.radius)
            geps[2] = -2.0 * p[2] / (m.radius * m.radius)
    else:
        eps[0] = _interp(m, p[0], p[1], p[2])
        h = m.grad_h
        geps[0] = (_interp(m, p[0] + h, p[1], p[2]) - _interp(m, p[0] - h, p[1], p[2])) / (2 * h)
        geps[1] = (_interp(m, p[0], p[1] + h, p[2]) - _interp(m, p[0], p[1] - h, p[2])) / (2 * h)
        geps[2] = (_interp(m, p[0], p[1], p[2] + h) - _interp(m, p[0], p[1], p[2] - h)) / (2 * h)


cdef inline void _deriv(const Medium* m, const double* p, const double* t,
                        double* dp, double* dt) noexcept nogil:
    cdef double eps, n
    cdef double geps[3]
    _sample(m, p, &eps, geps)
    n = sqrt(eps)
    cdef int a
    for a in range(3):
        dp[a] = t[a] / n
        dt[a] = geps[a] / (2.0 * n)


cdef inline void _rk4(const Medium* m, const double* p0, const double* t0, double h,
                      double* p1, double* t1) noexcept nogil:
    cdef double k1p[3], k1t[3], k2p[3], k2t[3], k3p[3], k3t[3], k4p[3], k4t[3]
    cdef double tp[3], tt[3]
    cdef int a
    _deriv(m, p0, t0, k1p, k1t)
    for a in range(3):
        tp[a] = p0[a] + 0.5 * h * k1p[a]
        tt[a] = t0[a] + 0.5 * h * k1t[a]
    _deriv(m, tp, tt, k2p, k2t)
    for a in range(3):
        tp[a] = p0[a] + 0.5 * h * k2p[a]
        tt[a] = t0[a] + 0.5 * h * k2t[a]
    _deriv(m, tp, tt, k3p, k3t)
    for a in range(3):
        tp[a] = p0[a] + h * k3p[a]
        tt[a] = t0[a] + h * k3t[a]
    _deriv(m, tp, tt, k4p, k4t)
    for a in range(3):
        p1[a] = p0[a] + h / 6.0 * (k1p[a] + 2 * k2p[a] + 2 * k3p[a] + k4p[a])
        t1[a] = t0[a] + h / 6.0 * (k1t[a] + 2 * k2t[a] + 2 * k3t[a] + k4t[a])


cdef int _trace_one(const Medium* m, double* p, double* u, double* length_io,
                    double step, double max_length, double bisect_tol,
                    double* out_pos, double* out_dir, double* out_len) noexcept nogil:
    """Returns 0 = exited, 1 = trapped, 2 = never entered, -1 = non-finite."""
    cdef double r2lim = m.radius * m.radius
    cdef double length = length_io[0]
    cdef double r2, b, disc, t_in, eps, n, nrm, sg
    cdef double t[3], p0[3], t0[3], p1[3], t1[3], u1[3], pm[3], tm[3]
    cdef double lo, hi, mid
    cdef int a, it
    cdef double geps[3]

    r2 = p[0] * p[0] + p[1] * p[1] + p[2] * p[2]
    if r2 > r2lim * (1.0 + 1e-12):
        b = p[0] * u[0] + p[1] * u[1] + p[2] * u[2]
        disc = b * b - (r2 - r2lim)
        t_in = -1.0
        if disc >= 0.0:
            t_in = -b - sqrt(disc)
        if t_in < 0.0:
            for a in range(3):
                out_pos[a] = p[a]
                out_dir[a] = u[a]
            out_len[0] = 0.0
            return 2
        for a in range(3):
            p[a] += t_in * u[a]
        length += t_in

    _sample(m, p, &eps, geps)
    n = sqrt(eps)
    for a in range(3):
        t[a] = n * u[a]

    while length < max_length:
        # renormalize momentum magnitude to the local index before stepping
        _sample(m, p, &eps, geps)
        n = sqrt(eps)
        nrm = sqrt(t[0] * t[0] + t[1] * t[1] + t[2] * t[2])
        for a in range(3):
            t0[a] = t[a] * (n / nrm)
            p0[a] = p[a]
        _rk4(m, p0, t0, step, p1, t1)
        for a in range(3):
            if p1[a] != p1[a] or t1[a] != t1[a]:
                return -1
        nrm = sqrt(t1[0] * t1[0] + t1[1] * t1[1] + t1[2] * t1[2])
        for a in range(3):
            u1[a] = t1[a] / nrm
        r2 = p1[0] * p1[0] + p1[1] * p1[1] + p1[2] * p1[2]
        if r2 > r2lim and (p1[0] * u1[0] + p1[1] * u1[1] + p1[2] * u1[2]) > 0.0:
            lo = 0.0
            hi = step
            for it in range(60):
                if hi - lo <= bisect_tol:
                    break
                mid = 0.5 * (lo + hi)
                _rk4(m, p0, t0, mid, pm, tm)
                if pm[0] * pm[0] + pm[1] * pm[1] + pm[2] * pm[2] <= r2lim:
                    lo = mid
                else:
                    hi = mid
            sg = 0.5 * (lo + hi)
            _rk4(m, p0, t0, sg, pm, tm)
            nrm = sqrt(tm[0] * tm[0] + tm[1] * tm[1] + tm[2] * tm[2])
            for a in range(3):
                out_pos[a] = pm[a]
                out_dir[a] = tm[a] / nrm
            out_len[0] = length + sg
            return 0
        for a in range(3):
            p[a] = p1[a]
            t[a] = t1[a]
        length += step

    nrm = sqrt(t[0] * t[0] + t[1] * t[1] + t[2] * t[2])
    for a in range(3):
        out_pos[a] = p[a]
        out_dir[a] = t[a] / nrm
    out_len[0] = length
    length_io[0] = length
    return 1


def trace_batch(int mode, double radius,
                cnp.ndarray[double, ndim=3] grid, double ox, double oy, double oz,
                double gstep,
                cnp.ndarray[double, ndim=2] start_pos,
                cnp.ndarray[double, ndim=2] start_dir,
                double step, double max_length, double bisect_tol=1e-3):
    """Trace a bundle; returns (exit_pos, exit_dir, exit_len, trapped)."""
    cdef Medium m
    grid = np.ascontiguousarray(grid)
    m.mode = mode
    m.radius = radius
    m.ox = ox
    m.oy = oy
    m.oz = oz
    m.gstep = gstep
    m.grad_h = 0.25 * gstep
    m.nx = grid.shape[0]
    m.ny = grid.shape[1]
    m.nz = grid.shape[2]
    m.grid = <const double*>cnp.PyArray_DATA(grid)

    cdef Py_ssize_t n_rays = start_pos.shape[0]
    cdef cnp.ndarray[double, ndim=2] epos = np.empty((n_rays, 3))
    cdef cnp.ndarray[double, ndim=2] edir = np.empty((n_rays, 3))
    cdef cnp.ndarray[double, ndim=1] elen = np.zeros(n_rays)
    cdef cnp.ndarray[cnp.uint8_t, ndim=1] trapped = np.zeros(n_rays, dtype=np.uint8)

    cdef double p[3], u[3]
    cdef double nrm, length
    cdef Py_ssize_t i
    cdef int a, status
    for i in range(n_rays):
        nrm = sqrt(start_dir[i, 0] ** 2 + start_dir[i, 1] ** 2 + start_dir[i, 2] ** 2)
        for a in range(3):
            p[a] = start_pos[i, a]
            u[a] = start_dir[i, a] / nrm
        length = 0.0
        with nogil:
            status = _trace_one(&m, p, u, &length, step, max_length, bisect_tol,
                                &epos[i, 0], &edir[i, 0], &elen[i])
        if status == -1:
            from ..errors import NumericalError
            raise NumericalError(
                "non-finite ray state during integration",
                last_sample=(np.array([p[0], p[1], p[2]]), None, length),
            )
        trapped[i] = 1 if status == 1 else 0
    return epos, edir, elen, trapped.astype(bool)
