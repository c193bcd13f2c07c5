# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled reflected random walk in the unit disk.

Mirrors ``_walk_py.walk`` operation for operation; see that module for the
description of the scheme.  Every walker owns a xoshiro256** stream seeded
from a splitmix64 sequence, so results do not depend on how walkers are
batched.
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport cos, exp, log, sin, sqrt, M_PI
from libc.stdint cimport int64_t, uint64_t

cnp.import_array()

cdef uint64_t GOLDEN = 0x9E3779B97F4A7C15ULL


cdef inline uint64_t _rotl(uint64_t x, int k) noexcept nogil:
    return (x << k) | (x >> (64 - k))


cdef inline uint64_t _mix(uint64_t z) noexcept nogil:
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL
    return z ^ (z >> 31)


cdef inline void _seed(uint64_t seed, uint64_t index, uint64_t* s) noexcept nogil:
    cdef uint64_t base = _mix(seed) + 4 * index * GOLDEN
    cdef int k
    for k in range(4):
        base += GOLDEN
        s[k] = _mix(base)


cdef inline double _uniform(uint64_t* s) noexcept nogil:
    cdef uint64_t result = _rotl(s[1] * 5, 7) * 9
    cdef uint64_t t = s[1] << 17
    s[2] ^= s[0]
    s[3] ^= s[1]
    s[1] ^= s[2]
    s[0] ^= s[3]
    s[2] ^= t
    s[3] = _rotl(s[3], 45)
    return <double>(result >> 11) * (1.0 / 9007199254740992.0)


cdef inline int _arc(double x, double y, const double* cc, const double* cs,
                     const double* ce, int npatch) noexcept nogil:
    """Patch whose arc contains the direction of (x, y), else -1."""
    cdef double r = sqrt(x * x + y * y)
    cdef int i
    for i in range(npatch):
        if x * cc[i] + y * cs[i] >= ce[i] * r:
            return i
    return -1


def uniforms(uint64_t seed, uint64_t index, int count):
    """First ``count`` uniforms of walker ``index`` (stream check)."""
    cdef uint64_t s[4]
    _seed(seed, index, s)
    out = np.empty(count)
    cdef double[:] o = out
    cdef int k
    for k in range(count):
        o[k] = _uniform(s)
    return out


def walk(double[:] x0, double[:] y0, uint64_t seed, uint64_t first,
         double[:] pc, double[:] pe, double[:] dcx, double[:] dcy, double[:] drad,
         double gamma, double dt_min, double dt_max, int64_t max_steps,
         int stratified):
    """Walk every walker to absorption.

    Returns ``(hit, time)``: ``hit`` is the absorbing patch index, then disk
    indices offset by the patch count, or -1 when ``max_steps`` ran out.
    """
    cdef Py_ssize_t n = x0.shape[0], w
    cdef int npatch = pc.shape[0], ndisk = dcx.shape[0], j, hit, near
    hit_arr = np.empty(n, dtype=np.int64)
    time_arr = np.empty(n)
    cdef int64_t[:] hits = hit_arr
    cdef double[:] times = time_arr
    cdef uint64_t s[4]
    cdef double x, y, nx, ny, r, nr, d, dd, h, sd, g, u1, u2, u3, t, phi, a, b, c
    cdef double sc, cx, cy, wx, wy, dot, e1, e2, p_out, p_disk, px, py, lo, fr
    cdef double ring, ang
    cdef int64_t steps
    cdef double dw
    # patch directions, arc half-width cosines and endpoints
    cos_c = np.cos(np.asarray(pc))
    sin_c = np.sin(np.asarray(pc))
    cos_e = np.cos(np.asarray(pe))
    ends = np.stack([np.cos(np.asarray(pc) - np.asarray(pe)), np.sin(np.asarray(pc) - np.asarray(pe)),
                     np.cos(np.asarray(pc) + np.asarray(pe)), np.sin(np.asarray(pc) + np.asarray(pe))], axis=1)
    ends = np.ascontiguousarray(ends).reshape(-1) if npatch else np.zeros(1)
    if not npatch:
        cos_c = sin_c = cos_e = np.zeros(1)
    cdef double[:] ccv = cos_c, csv = sin_c, cev = cos_e, env = ends
    cdef const double* cc = &ccv[0]
    cdef const double* cs = &csv[0]
    cdef const double* ce = &cev[0]
    cdef const double* en = &env[0]
    with nogil:
        for w in range(n):
            _seed(seed, first + w, s)
            if stratified:
                # 20 equal-area strata: 4 rings by 5 sectors
                ring = <double>(((first + w) % 20) // 5)
                ang = <double>((first + w) % 5)
                u1 = _uniform(s)
                u2 = _uniform(s)
                r = sqrt((ring + u1) / 4.0)
                phi = 2 * M_PI * (ang + u2) / 5.0 - M_PI
                x = r * cos(phi)
                y = r * sin(phi)
            else:
                x = x0[w]
                y = y0[w]
            t = 0.0
            hit = -1
            steps = 0
            while steps < max_steps:
                steps += 1
                r = sqrt(x * x + y * y)
                # distance to the nearest absorber
                d = 1e300
                for j in range(npatch):
                    if x * cc[j] + y * cs[j] >= ce[j] * r:
                        dd = 1.0 - r
                    else:
                        dd = sqrt((x - en[4 * j]) ** 2 + (y - en[4 * j + 1]) ** 2)
                        dw = sqrt((x - en[4 * j + 2]) ** 2 + (y - en[4 * j + 3]) ** 2)
                        if dw < dd:
                            dd = dw
                    if dd < d:
                        d = dd
                for j in range(ndisk):
                    dd = sqrt((x - dcx[j]) ** 2 + (y - dcy[j]) ** 2) - drad[j]
                    if dd < d:
                        d = dd
                # steps near the reflecting circle are capped by dt_max
                dw = 0.5 * gamma * gamma * (1.0 - r) * (1.0 - r)
                if dw < dt_max:
                    dw = dt_max
                h = 0.5 * gamma * gamma * d * d
                if h > dw:
                    h = dw
                if h < dt_min:
                    h = dt_min
                sd = sqrt(2.0 * h)
                u1 = 1.0 - _uniform(s)
                u2 = _uniform(s)
                u3 = _uniform(s)
                g = sqrt(-2.0 * log(u1))
                nx = x + sd * g * cos(2 * M_PI * u2)
                ny = y + sd * g * sin(2 * M_PI * u2)
                t += h
                # interior disks: earliest segment intersection
                lo = 2.0
                for j in range(ndisk):
                    wx = nx - x
                    wy = ny - y
                    px = x - dcx[j]
                    py = y - dcy[j]
                    a = wx * wx + wy * wy
                    b = px * wx + py * wy
                    c = px * px + py * py - drad[j] * drad[j]
                    dot = b * b - a * c
                    if dot >= 0 and a > 0:
                        sc = (-b - sqrt(dot)) / a
                        if 0 <= sc <= 1 and sc < lo:
                            lo = sc
                            hit = npatch + j
                if hit >= 0:
                    break
                nr = sqrt(nx * nx + ny * ny)
                if nr > 1.0:
                    wx = nx - x
                    wy = ny - y
                    a = wx * wx + wy * wy
                    b = x * wx + y * wy
                    c = r * r - 1.0
                    sc = (-b + sqrt(b * b - a * c)) / a
                    cx = x + sc * wx
                    cy = y + sc * wy
                    hit = _arc(cx, cy, cc, cs, ce, npatch)
                    if hit >= 0:
                        break
                    # specular reflection of the remaining displacement
                    fr = 1.0 - sc
                    wx *= fr
                    wy *= fr
                    dot = (wx * cx + wy * cy) / (cx * cx + cy * cy)
                    nx = cx + wx - 2 * dot * cx
                    ny = cy + wy - 2 * dot * cy
                    nr = sqrt(nx * nx + ny * ny)
                    if nr > 1.0:
                        fr = (2.0 - nr) / nr
                        if fr < 0:
                            fr = 0.0
                        nx *= fr
                        ny *= fr
                else:
                    # Brownian-bridge test for excursions between the two samples
                    p_out = 0.0
                    if npatch and _arc(x + nx, y + ny, cc, cs, ce, npatch) >= 0:
                        p_out = exp(-(1.0 - r) * (1.0 - nr) / h)
                    p_disk = 0.0
                    near = -1
                    e1 = 1e300
                    for j in range(ndisk):
                        dd = sqrt((x - dcx[j]) ** 2 + (y - dcy[j]) ** 2) - drad[j]
                        if dd < e1:
                            e1 = dd
                            near = j
                    if near >= 0:
                        e2 = sqrt((nx - dcx[near]) ** 2 + (ny - dcy[near]) ** 2) - drad[near]
                        p_disk = exp(-e1 * e2 / h)
                    if u3 < p_out:
                        hit = _arc(x + nx, y + ny, cc, cs, ce, npatch)
                        break
                    if u3 < p_out + p_disk:
                        hit = npatch + near
                        break
                x = nx
                y = ny
            hits[w] = hit
            times[w] = t
    return hit_arr, time_arr
