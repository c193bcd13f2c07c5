"""Array (numpy) implementation of the reflected random walk in the unit disk.

Scheme, shared with the compiled kernel:

* Each walker owns a xoshiro256** stream.  Its state is four consecutive
  outputs of a splitmix64 sequence that starts at ``mix(seed)`` and skips
  ``4 * index`` values, so streams never overlap and do not depend on batching.
* A step of length ``h = max(min(gamma^2 d^2 / 2, cap), dt_min)`` draws
  three uniforms.  Two feed a Box-Muller Gaussian pair (variance ``2h`` per
  coordinate) and the third drives the Brownian-bridge test.  ``d`` is the
  distance to the nearest absorber.  The cap is ``max(dt_max, gamma^2 w^2 / 2)``
  with ``w`` the distance to the circle.  Steps are therefore bounded by
  ``dt_max`` near the reflecting wall and may grow in the bulk.
* A step leaving the disk is cut at the circle (linear interpolation).  The
  walker is absorbed if the crossing lies on a patch arc and otherwise the rest
  of the step is reflected specularly about the tangent.
* A step that stays inside may still have touched the circle or an interior
  disk in between.  The bridge probability ``exp(-d1 d2 / h)`` decides that.
"""

from __future__ import annotations

import numpy as np

GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)
_SCALE = 1.0 / 9007199254740992.0


def _rotl(x, k):
    return (x << np.uint64(k)) | (x >> np.uint64(64 - k))


def _mix(z):
    z = (z ^ (z >> np.uint64(30))) * _M1
    z = (z ^ (z >> np.uint64(27))) * _M2
    return z ^ (z >> np.uint64(31))


def _seed(seed, index):
    """State array of shape (n, 4) for walkers ``index``."""
    index = np.asarray(index, dtype=np.uint64)
    base = _mix(np.array([seed], dtype=np.uint64))[0] + np.uint64(4) * index * GOLDEN
    state = np.empty(index.shape + (4,), dtype=np.uint64)
    for k in range(4):
        base = base + GOLDEN
        state[..., k] = _mix(base)
    return state


def _uniform(s):
    """Advance every row of ``s`` in place and return one uniform per row."""
    result = _rotl(s[:, 1] * np.uint64(5), 7) * np.uint64(9)
    t = s[:, 1] << np.uint64(17)
    s[:, 2] ^= s[:, 0]
    s[:, 3] ^= s[:, 1]
    s[:, 1] ^= s[:, 2]
    s[:, 0] ^= s[:, 3]
    s[:, 2] ^= t
    s[:, 3] = _rotl(s[:, 3], 45)
    return (result >> np.uint64(11)).astype(float) * _SCALE


def uniforms(seed, index, count):
    """First ``count`` uniforms of walker ``index`` (stream check)."""
    with np.errstate(over="ignore"):
        s = _seed(seed, [index])
        return np.array([_uniform(s)[0] for _ in range(count)])


def _arc(x, y, geo):
    """Patch whose arc contains the direction of (x, y), else -1."""
    cc, cs, ce = geo[:3]
    r = np.sqrt(x * x + y * y)
    out = np.full(np.shape(x), -1, dtype=np.int64)
    for i in range(len(cc) - 1, -1, -1):
        out[x * cc[i] + y * cs[i] >= ce[i] * r] = i
    return out


def walk(x0, y0, seed, first, pc, pe, dcx, dcy, drad, gamma, dt_min, dt_max,
         max_steps, stratified):
    """Array version of the compiled ``walk``; same arguments and outputs."""
    with np.errstate(over="ignore"):
        return _walk(x0, y0, seed, first, pc, pe, dcx, dcy, drad, gamma, dt_min,
                     dt_max, max_steps, stratified)


def _walk(x0, y0, seed, first, pc, pe, dcx, dcy, drad, gamma, dt_min, dt_max,
          max_steps, stratified):
    n = len(x0)
    npatch, ndisk = len(pc), len(dcx)
    pc, pe = np.asarray(pc, dtype=float), np.asarray(pe, dtype=float)
    geo = (np.cos(pc), np.sin(pc), np.cos(pe), np.cos(pc - pe), np.sin(pc - pe),
           np.cos(pc + pe), np.sin(pc + pe))
    widx = np.arange(n, dtype=np.uint64)
    state = _seed(seed, np.uint64(first) + widx)
    if stratified:
        cell = (int(first) + np.arange(n)) % 20
        u1, u2 = _uniform(state), _uniform(state)
        r = np.sqrt((cell // 5 + u1) / 4.0)
        phi = 2 * np.pi * (cell % 5 + u2) / 5.0 - np.pi
        x, y = r * np.cos(phi), r * np.sin(phi)
    else:
        x, y = np.array(x0, dtype=float), np.array(y0, dtype=float)
    hits = np.full(n, -1, dtype=np.int64)
    times = np.zeros(n)
    live = np.arange(n)
    steps = 0
    while live.size and steps < max_steps:
        steps += 1
        s = state[live]
        px, py = x[live], y[live]
        r = np.sqrt(px * px + py * py)
        d = np.full(live.size, 1e300)
        for j in range(npatch):
            dd = np.minimum(np.sqrt((px - geo[3][j]) ** 2 + (py - geo[4][j]) ** 2),
                            np.sqrt((px - geo[5][j]) ** 2 + (py - geo[6][j]) ** 2))
            dd = np.where(px * geo[0][j] + py * geo[1][j] >= geo[2][j] * r, 1.0 - r, dd)
            d = np.minimum(d, dd)
        for j in range(ndisk):
            d = np.minimum(d, np.sqrt((px - dcx[j]) ** 2 + (py - dcy[j]) ** 2) - drad[j])
        # steps near the reflecting circle are capped by dt_max
        cap = np.maximum(0.5 * gamma * gamma * (1.0 - r) ** 2, dt_max)
        h = np.maximum(np.minimum(0.5 * gamma * gamma * d * d, cap), dt_min)
        sd = np.sqrt(2.0 * h)
        u1 = 1.0 - _uniform(s)
        u2 = _uniform(s)
        u3 = _uniform(s)
        state[live] = s
        g = np.sqrt(-2.0 * np.log(u1))
        nx = px + sd * g * np.cos(2 * np.pi * u2)
        ny = py + sd * g * np.sin(2 * np.pi * u2)
        times[live] += h
        hit = np.full(live.size, -1, dtype=np.int64)
        lo = np.full(live.size, 2.0)
        wx, wy = nx - px, ny - py
        a = wx * wx + wy * wy
        for j in range(ndisk):
            qx, qy = px - dcx[j], py - dcy[j]
            b = qx * wx + qy * wy
            c = qx * qx + qy * qy - drad[j] * drad[j]
            disc = b * b - a * c
            ok = (disc >= 0) & (a > 0)
            sc = np.where(ok, (-b - np.sqrt(np.where(ok, disc, 0.0))) / np.where(a > 0, a, 1.0), 3.0)
            take = ok & (sc >= 0) & (sc <= 1) & (sc < lo)
            lo[take] = sc[take]
            hit[take] = npatch + j
        nr = np.sqrt(nx * nx + ny * ny)
        out = (hit < 0) & (nr > 1.0)
        if out.any():
            b = px * wx + py * wy
            sc = (-b[out] + np.sqrt(b[out] ** 2 - a[out] * (r[out] ** 2 - 1.0))) / a[out]
            cx, cy = px[out] + sc * wx[out], py[out] + sc * wy[out]
            arc = _arc(cx, cy, geo)
            fr = 1.0 - sc
            rx, ry = wx[out] * fr, wy[out] * fr
            dot = (rx * cx + ry * cy) / (cx * cx + cy * cy)
            mx, my = cx + rx - 2 * dot * cx, cy + ry - 2 * dot * cy
            mr = np.sqrt(mx * mx + my * my)
            fold = np.where(mr > 1.0, np.maximum((2.0 - mr) / mr, 0.0), 1.0)
            mx, my = mx * fold, my * fold
            hit[out] = arc
            nx[out], ny[out] = mx, my
        inside = (hit < 0) & ~out
        if inside.any():
            p_out = np.zeros(live.size)
            mid = np.full(live.size, -1, dtype=np.int64)
            if npatch:
                mid[inside] = _arc(px[inside] + nx[inside], py[inside] + ny[inside], geo)
                on = inside & (mid >= 0)
                p_out[on] = np.exp(-(1.0 - r[on]) * (1.0 - nr[on]) / h[on])
            p_disk = np.zeros(live.size)
            near = np.full(live.size, -1, dtype=np.int64)
            if ndisk:
                e1 = np.full(live.size, 1e300)
                for j in range(ndisk):
                    dd = np.sqrt((px - dcx[j]) ** 2 + (py - dcy[j]) ** 2) - drad[j]
                    closer = dd < e1
                    e1[closer] = dd[closer]
                    near[closer] = j
                e2 = np.sqrt((nx - dcx[near]) ** 2 + (ny - dcy[near]) ** 2) - drad[near]
                p_disk[inside] = np.exp(-e1[inside] * e2[inside] / h[inside])
            via_arc = inside & (u3 < p_out)
            hit[via_arc] = mid[via_arc]
            via_disk = inside & ~via_arc & (u3 < p_out + p_disk)
            hit[via_disk] = npatch + near[via_disk]
        done = hit >= 0
        hits[live[done]] = hit[done]
        keep = ~done
        x[live[keep]], y[live[keep]] = nx[keep], ny[keep]
        live = live[keep]
    return hits, times
