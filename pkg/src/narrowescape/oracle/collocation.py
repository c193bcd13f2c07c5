"""Boundary-collocation solver for mixed Laplace problems on the unit disk.

Patch problems: the harmonic field is written as

    u(x) = chi - (1/pi) sum_p int_{patch p} ln|x - xi| f_p(xi) ds_xi ,

whose outward normal derivative on the unit circle is ``f - (1/2pi) int f``.
Imposing ``sum_p int f_p = 0`` makes the reflecting condition hold exactly
off the patches, and the disk average of ``u`` equals ``chi``.  Each flux
``f_p`` is expanded in a patch-local polynomial basis in ``t = (psi - c_p)/eps_p``:

* Dirichlet patches: ``T_k(t) / sqrt(1 - t^2)`` (square-root edge singularity),
* Robin and Steklov patches: Legendre ``P_k(t)`` (bounded flux),

for which the logarithmic self-interaction is known in closed form; the
remaining smooth part is integrated by Gauss quadrature.

Circular boundaries (concentric annulus, interior circular targets) use a
method of particular solutions with logarithms and multipoles.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numpy.polynomial import chebyshev, legendre
from scipy import linalg

from ..errors import ResolutionError, SceneError, UnsupportedError

COND_LIMIT = 1e13


@dataclass(frozen=True)
class CollocationConfig:
    """``order``: flux modes per patch (or harmonics per circle); ``nodes``:
    collocation points per patch for least-squares solves (at least
    ``2 (2 order + 1)``); ``ridge``: Tikhonov weight for those solves."""

    order: int = 48
    nodes: int | None = None
    ridge: float = 1e-12
    quadrature: int = 256

    def __post_init__(self):
        if self.order < 1:
            raise ValueError("order must be positive")
        need = 2 * (2 * self.order + 1)
        if self.nodes is None:
            object.__setattr__(self, "nodes", need)
        elif self.nodes < need:
            raise ValueError(f"need at least {need} collocation nodes for order {self.order}")


def _wrap(angle):
    return (np.asarray(angle) + np.pi) % (2 * np.pi) - np.pi


def _legendre_q(nmax, t):
    """Legendre functions of the second kind on the cut, rows n = 0..nmax."""
    out = np.empty((nmax + 1,) + np.shape(t))
    out[0] = np.arctanh(t)
    if nmax >= 1:
        out[1] = t * out[0] - 1.0
    for n in range(1, nmax):
        out[n + 1] = ((2 * n + 1) * t * out[n] - n * out[n - 1]) / (n + 1)
    return out


def _smooth_log(delta):
    """``ln|2 sin(d/2)| - ln|d|``, analytic for |d| < 2 pi."""
    half = 0.5 * np.abs(delta)
    return np.log(np.where(half < 1e-8, 1.0 - half**2 / 6, np.sin(half) / np.where(half < 1e-8, 1.0, half)))


class _Patch:
    """Flux basis of one patch (centre angle, half-length, basis family)."""

    def __init__(self, center, eps, family, order, quadrature):
        self.center = float(center)
        self.eps = float(eps)
        self.family = family
        self.order = order
        q = max(quadrature, 2 * order)
        if family == "chebyshev":
            self.qnodes = np.cos((2 * np.arange(q) + 1) * np.pi / (2 * q))
            self.qweights = np.full(q, np.pi / q)       # weight 1/sqrt(1-t^2) absorbed
        else:
            self.qnodes, self.qweights = legendre.leggauss(q)
        self.qbasis = self._poly(self.qnodes)           # (q, K)

    # -- basis ------------------------------------------------------------
    def _poly(self, t):
        t = np.asarray(t, dtype=float)
        if self.family == "chebyshev":
            return chebyshev.chebvander(t, self.order - 1)
        return legendre.legvander(t, self.order - 1)

    def collocation_nodes(self, count):
        k = np.arange(count)
        if self.family == "chebyshev":
            return np.cos((2 * k + 1) * np.pi / (2 * count))[::-1]
        return legendre.leggauss(count)[0]

    def angles(self, t):
        return self.center + self.eps * np.asarray(t)

    def flux(self, t):
        """Flux density of every basis function at local points ``t``."""
        t = np.asarray(t, dtype=float)
        vals = self._poly(t)
        if self.family == "chebyshev":
            vals = vals / np.sqrt(1 - t**2)[:, None]
        return vals

    def moments(self):
        """``int f_k ds`` over the patch."""
        out = np.zeros(self.order)
        out[0] = self.eps * (np.pi if self.family == "chebyshev" else 2.0)
        return out

    # -- potentials -------------------------------------------------------
    def self_potential(self, t):
        """Boundary value of ``-(1/pi) int ln|x - xi| f_k ds`` at own points ``t``."""
        t = np.asarray(t, dtype=float)
        k = np.arange(self.order)
        if self.family == "chebyshev":
            logint = np.empty((t.size, self.order))
            logint[:, 0] = -np.pi * np.log(2.0)
            logint[:, 1:] = -np.pi / k[1:] * chebyshev.chebvander(t, self.order - 1)[:, 1:]
            mass = np.zeros(self.order)
            mass[0] = np.pi
        else:
            q = _legendre_q(self.order, t)
            logint = np.empty((t.size, self.order))
            logint[:, 0] = (1 + t) * np.log1p(t) + (1 - t) * np.log1p(-t) - 2
            for n in range(1, self.order):
                logint[:, n] = 2.0 / (2 * n + 1) * (q[n + 1] - q[n - 1])
            mass = np.zeros(self.order)
            mass[0] = 2.0
        smooth = _smooth_log(self.eps * (t[:, None] - self.qnodes[None, :]))
        smooth = (smooth * self.qweights) @ self.qbasis
        total = np.log(self.eps) * mass[None, :] + logint + smooth
        return -(self.eps / np.pi) * total

    def far_potential(self, phi):
        """Same potential at boundary angles ``phi`` off this patch."""
        delta = _wrap(np.asarray(phi, dtype=float)[:, None] - self.angles(self.qnodes)[None, :])
        kern = np.log(np.abs(2 * np.sin(0.5 * delta)))
        return -(self.eps / np.pi) * (kern * self.qweights) @ self.qbasis

    def interior_potential(self, x):
        """Potential at interior points ``x`` (shape (n, 2))."""
        src = np.exp(1j * self.angles(self.qnodes))
        z = x[:, 0] + 1j * x[:, 1]
        kern = np.log(np.abs(z[:, None] - src[None, :]))
        return -(self.eps / np.pi) * (kern * self.qweights) @ self.qbasis


def _disk_patches(scene, cfg):
    dom = scene.domain
    if dom.kind != "disk-interior":
        raise UnsupportedError("the collocation oracle handles the interior unit disk only")
    out = []
    for p, bp in zip(scene.patches, scene.points):
        family = "chebyshev" if p.condition == "dirichlet" else "legendre"
        out.append(_Patch(bp.param, p.half_length, family, cfg.order, cfg.quadrature))
    return out


def _layout(patches):
    offsets = np.concatenate([[1], 1 + np.cumsum([p.order for p in patches])])
    return offsets, int(offsets[-1])


def _potential_rows(patches, target, t, offsets, size):
    """Rows of ``u`` at local points ``t`` of patch ``target`` (column 0 is chi)."""
    rows = np.zeros((t.size, size))
    rows[:, 0] = 1.0
    phi = patches[target].angles(t)
    for q, patch in enumerate(patches):
        cols = slice(offsets[q], offsets[q + 1])
        rows[:, cols] = patch.self_potential(t) if q == target else patch.far_potential(phi)
    return rows


def _flux_rows(patches, target, t, offsets, size):
    rows = np.zeros((t.size, size))
    rows[:, offsets[target]:offsets[target + 1]] = patches[target].flux(t)
    return rows


def _net_flux_row(patches, offsets, size):
    row = np.zeros(size)
    for q, patch in enumerate(patches):
        row[offsets[q]:offsets[q + 1]] = patch.moments()
    return row


def _lstsq(mat, rhs, ridge):
    scale = np.linalg.norm(mat, axis=0)
    scale[scale == 0] = 1.0
    a = mat / scale
    cond = np.linalg.cond(a)
    if not np.isfinite(cond) or cond > COND_LIMIT:
        raise ResolutionError(f"collocation system ill-conditioned (cond = {cond:.3g}); "
                              "try a smaller or larger order")
    if ridge > 0:
        a = np.vstack([a, np.sqrt(ridge) * np.eye(a.shape[1])])
        rhs = np.concatenate([rhs, np.zeros(a.shape[1])])
    sol, *_ = linalg.lstsq(a, rhs)
    return sol / scale


@dataclass(frozen=True)
class BoundaryField:
    """Solved patch representation; evaluates ``u`` inside the disk."""

    patches: tuple
    unknowns: np.ndarray
    particular: float = 0.0          # coefficient of -|x|^2 / 4 (Poisson problems)

    @property
    def chi(self):
        return float(self.unknowns[0])

    def __call__(self, x):
        x = np.atleast_2d(np.asarray(x, dtype=float))
        offsets, _ = _layout(self.patches)
        val = np.full(x.shape[0], self.unknowns[0])
        for q, patch in enumerate(self.patches):
            val += patch.interior_potential(x) @ self.unknowns[offsets[q]:offsets[q + 1]]
        return val - self.particular * np.sum(x**2, axis=1) / 4

    def average(self):
        return self.chi - self.particular / 8

    def flux(self, q, t):
        offsets, _ = _layout(self.patches)
        return self.patches[q].flux(t) @ self.unknowns[offsets[q]:offsets[q + 1]]


def _assemble_reactive(scene, cfg, target=None, poisson=False):
    """Least-squares system for splitting (target given) or MFRT (poisson)."""
    patches = _disk_patches(scene, cfg)
    offsets, size = _layout(patches)
    blocks, rhs = [], []
    for q, (spec, patch) in enumerate(zip(scene.patches, patches)):
        t = patch.collocation_nodes(cfg.nodes)
        pot = _potential_rows(patches, q, t, offsets, size)
        ind = 1.0 if (target is not None and q == target - 1) else 0.0
        # Poisson particular part -r^2/4 is -1/4 on the circle, flux -1/2 absorbed below
        shift = -0.25 if poisson else 0.0
        if spec.condition == "dirichlet":
            blocks.append(pot)
            rhs.append(np.full(t.size, ind - shift))
        elif spec.condition == "robin":
            blocks.append(_flux_rows(patches, q, t, offsets, size) + spec.q * pot)
            rhs.append(np.full(t.size, spec.q * (ind - shift)))
        else:
            raise SceneError("Steklov patches belong to the eigenvalue solver")
    row = _net_flux_row(patches, offsets, size)
    weight = np.sqrt(cfg.nodes)
    blocks.append(weight * row[None, :])
    rhs.append([weight * (-np.pi if poisson else 0.0)])
    mat = np.vstack(blocks)
    sol = _lstsq(mat, np.concatenate(rhs), cfg.ridge)
    return BoundaryField(tuple(patches), sol, 1.0 if poisson else 0.0)


def collocation_splitting(scene, k, cfg=None):
    """``(chi_k, field)`` for Dirichlet/Robin patches on the unit disk (k is 1-based)."""
    cfg = cfg or CollocationConfig()
    if not 1 <= k <= scene.size:
        raise IndexError("target index out of range")
    field = _assemble_reactive(scene, cfg, target=k)
    return field.chi, field


def collocation_mfrt(scene, cfg=None):
    """``(mean time over the disk, field)`` for Dirichlet/Robin patches."""
    cfg = cfg or CollocationConfig()
    field = _assemble_reactive(scene, cfg, poisson=True)
    return field.average(), field


# ---------------------------------------------------------------------------
# eigenproblems
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SteklovModes:
    """Eigenvalues (ascending) with boundary traces.

    ``traces[j][i]`` samples mode ``j`` on Steklov patch ``i`` (0-based list
    position) at local points ``samples``; each mode has unit L2 norm over
    the Steklov part of the boundary and a non-negative mean on the first
    Steklov patch.
    """

    sigma: np.ndarray
    samples: np.ndarray
    traces: tuple
    residuals: np.ndarray


def _finite_real(vals, vecs, count, tol=1e-6):
    keep = np.isfinite(vals) & (np.abs(vals.imag) <= tol * np.maximum(1, np.abs(vals.real)))
    keep &= vals.real > -1e-8
    vals, vecs = vals[keep].real, vecs[:, keep].real
    order = np.argsort(vals)
    if order.size < count:
        raise ResolutionError(f"only {order.size} admissible eigenvalues found; raise the order")
    return vals[order[:count]], vecs[:, order[:count]]


def _whole_circle(count, cfg, samples):
    """Steklov condition on the entire unit circle, solved with the harmonic basis."""
    order = max(cfg.order, count)
    basis = _Mps([], order)
    z, nrm = _outer_nodes(2 * order + 1)
    vals, vecs = linalg.eig(basis.normal_derivative(z, nrm), basis.values(z))
    vals, vecs = _finite_real(vals, vecs, count)
    theta = np.pi * samples
    grid = np.exp(1j * np.linspace(-np.pi, np.pi, 4096, endpoint=False))
    traces = []
    for j in range(count):
        norm = np.sqrt(2 * np.pi * np.mean((basis.values(grid) @ vecs[:, j]) ** 2))
        traces.append((basis.values(np.exp(1j * theta)) @ vecs[:, j] / norm,))
    return SteklovModes(vals, samples, tuple(traces), np.zeros(count))


def collocation_steklov(scene, count, cfg=None, samples=None, whole_boundary=False):
    """Smallest ``count`` eigenvalues of an SN or SND problem on the unit disk.

    With ``whole_boundary=True`` the scene is ignored and the classical disk
    Steklov problem (Steklov condition on the entire circle) is solved; its
    traces are sampled at angles ``pi * samples``.
    """
    cfg = cfg or CollocationConfig()
    if samples is None:
        samples = np.linspace(-1, 1, 201)[1:-1]
    samples = np.asarray(samples, dtype=float)
    if whole_boundary:
        return _whole_circle(count, cfg, samples)
    conds = scene.conditions
    if any(c == "robin" for c in conds) or "steklov" not in conds:
        raise SceneError("eigen-solves need Steklov patches plus optional Dirichlet patches")
    patches = _disk_patches(scene, cfg)
    offsets, size = _layout(patches)
    amat, bmat = [], []
    for q, (spec, patch) in enumerate(zip(scene.patches, patches)):
        t = patch.collocation_nodes(patch.order)
        pot = _potential_rows(patches, q, t, offsets, size)
        if spec.condition == "steklov":
            amat.append(_flux_rows(patches, q, t, offsets, size))
            bmat.append(pot)
        else:
            amat.append(pot)
            bmat.append(np.zeros_like(pot))
    amat.append(_net_flux_row(patches, offsets, size)[None, :])
    bmat.append(np.zeros((1, size)))
    amat, bmat = np.vstack(amat), np.vstack(bmat)
    vals, vecs = linalg.eig(amat, bmat)
    vals, vecs = _finite_real(vals, vecs, count)
    stek = [q for q, c in enumerate(conds) if c == "steklov"]
    traces, resid = [], []
    gl_t, gl_w = legendre.leggauss(200)
    for j in range(count):
        field = BoundaryField(tuple(patches), vecs[:, j])
        vals_on = []
        norm2 = 0.0
        for q in stek:
            rows = _potential_rows(patches, q, gl_t, offsets, size)
            norm2 += patches[q].eps * np.sum(gl_w * (rows @ field.unknowns) ** 2)
            vals_on.append(_potential_rows(patches, q, samples, offsets, size) @ field.unknowns)
        scale = 1.0 / np.sqrt(norm2)
        mean0 = np.sum(gl_w * (_potential_rows(patches, stek[0], gl_t, offsets, size)
                               @ field.unknowns))
        if mean0 < 0:
            scale = -scale
        traces.append(tuple(v * scale for v in vals_on))
        # residual of the Steklov condition at off-node points
        check = np.linspace(-0.9, 0.9, 7)
        q = stek[0]
        lhs = _flux_rows(patches, q, check, offsets, size) @ field.unknowns
        rhs = vals[j] * (_potential_rows(patches, q, check, offsets, size) @ field.unknowns)
        resid.append(float(np.max(np.abs(lhs - rhs)) * abs(scale)))
    return SteklovModes(vals, samples, tuple(traces), np.array(resid))


# ---------------------------------------------------------------------------
# circular boundaries: method of particular solutions
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Circle:
    """Interior circular target: centre, radius and condition."""

    center: tuple
    radius: float
    condition: str = "dirichlet"


class _Mps:
    """Harmonic basis: 1, ln|x - c_i|, Re/Im (r_i/(z - c_i))^n, Re/Im z^n."""

    def __init__(self, circles, order, outer=True):
        self.circles = circles
        self.order = order
        self.outer = outer
        self.size = 1 + len(circles) * (1 + 2 * order) + (2 * order if outer else 0)

    def _eval(self, z, normal):
        """Values (normal=None) or derivatives along complex unit ``normal``."""
        cols = [np.zeros_like(z, dtype=float) if normal is not None else np.ones(z.shape)]
        n = np.arange(1, self.order + 1)
        for c in self.circles:
            c0 = complex(*c.center)
            w = z - c0
            if normal is None:
                cols.append(np.log(np.abs(w)))
                pw = (c.radius / w)[:, None] ** n
                cols += [pw.real, pw.imag]
            else:
                cols.append((normal / w).real)
                # d/dz (r/w)^n = -n (r/w)^n / w ; directional derivative = Re(normal * dF/dz)
                d = -n * (c.radius / w)[:, None] ** n / w[:, None]
                dd = normal[:, None] * d
                cols += [dd.real, (normal[:, None] * d).imag]
        if self.outer:
            if normal is None:
                pw = z[:, None] ** n
                cols += [pw.real, pw.imag]
            else:
                d = n * z[:, None] ** (n - 1) * normal[:, None]
                cols += [d.real, d.imag]
        out = [np.atleast_2d(cl).reshape(z.size, -1) for cl in cols]
        return np.hstack(out)

    def values(self, z):
        return self._eval(np.asarray(z, dtype=complex), None)

    def normal_derivative(self, z, normal):
        return self._eval(np.asarray(z, dtype=complex), np.asarray(normal, dtype=complex))


def _circle_nodes(circle, count):
    ang = 2 * np.pi * (np.arange(count) + 0.5) / count
    c0 = complex(*circle.center)
    z = c0 + circle.radius * np.exp(1j * ang)
    # outward normal of the perforated domain points into the target
    return z, -np.exp(1j * ang)


def _outer_nodes(count):
    ang = 2 * np.pi * (np.arange(count) + 0.5) / count
    return np.exp(1j * ang), np.exp(1j * ang)


def circles_steklov(circles, count, cfg=None, outer="neumann"):
    """Eigenvalues of a Steklov problem with circular boundaries.

    ``circles`` are interior circles (Steklov or Dirichlet).  The unit circle
    is reflecting (``outer='neumann'``) or carries the Steklov condition
    (``outer='steklov'``, used for the concentric annulus).
    """
    cfg = cfg or CollocationConfig()
    order = cfg.order
    basis = _Mps(circles, order)
    amat, bmat = [], []
    for c in circles:
        z, nrm = _circle_nodes(c, 2 * order + 1)
        val, der = basis.values(z), basis.normal_derivative(z, nrm)
        if c.condition == "steklov":
            amat.append(der)
            bmat.append(val)
        elif c.condition == "dirichlet":
            amat.append(val)
            bmat.append(np.zeros_like(val))
        else:
            raise SceneError(f"unsupported circle condition {c.condition!r}")
    z, nrm = _outer_nodes(2 * order + 1)
    val, der = basis.values(z), basis.normal_derivative(z, nrm)
    if outer == "steklov":
        amat.append(der)
        bmat.append(val)
    elif outer == "neumann":
        amat.append(der)
        bmat.append(np.zeros_like(val))
    else:
        raise ValueError("outer must be 'neumann' or 'steklov'")
    amat, bmat = np.vstack(amat), np.vstack(bmat)
    vals, vecs = linalg.eig(amat, bmat)          # square: (circles + 1)(2 order + 1)
    vals, _ = _finite_real(vals, vecs, count)
    return vals


def annulus_steklov(inner_radius, count=1, cfg=None):
    """Steklov on the unit circle, Dirichlet on a concentric inner circle."""
    cfg = cfg or CollocationConfig(order=8)
    circle = Circle((0.0, 0.0), float(inner_radius), "dirichlet")
    return circles_steklov([circle], count, cfg, outer="steklov")


def circles_splitting(circles, k, cfg=None):
    """``chi_k`` and field for interior Dirichlet circles in a reflecting unit disk.

    The field is a harmonic MPS expansion; its disk average is obtained by
    quadrature over the perforated domain (targets excluded).
    """
    cfg = cfg or CollocationConfig(order=24)
    order = cfg.order
    basis = _Mps(circles, order)
    rows, rhs = [], []
    for i, c in enumerate(circles):
        if c.condition != "dirichlet":
            raise SceneError("circle splitting supports Dirichlet targets only")
        z, _ = _circle_nodes(c, 4 * order + 2)
        rows.append(basis.values(z))
        rhs.append(np.full(z.size, 1.0 if i == k - 1 else 0.0))
    z, nrm = _outer_nodes(4 * order + 2)
    rows.append(basis.normal_derivative(z, nrm))
    rhs.append(np.zeros(z.size))
    coef = _lstsq(np.vstack(rows), np.concatenate(rhs), cfg.ridge)

    def field(x):
        x = np.atleast_2d(np.asarray(x, dtype=float))
        return basis.values(x[:, 0] + 1j * x[:, 1]) @ coef
    return coef, field


def perforated_average(field, circles, radial=160, angular=320):
    """Average of ``field`` over the unit disk with the target disks removed.

    Gauss-Legendre in ``r^2`` and the trapezoidal rule in angle; quadrature
    nodes inside a target are dropped.
    """
    t, w = legendre.leggauss(radial)
    r = np.sqrt((t + 1) / 2)
    theta = np.linspace(-np.pi, np.pi, angular, endpoint=False)
    rr, tt = np.meshgrid(r, theta, indexing="ij")
    pts = np.stack([(rr * np.cos(tt)).ravel(), (rr * np.sin(tt)).ravel()], axis=1)
    weights = np.repeat(w, angular)
    keep = np.ones(len(pts), dtype=bool)
    for c in circles:
        keep &= np.hypot(pts[:, 0] - c.center[0], pts[:, 1] - c.center[1]) > c.radius
    return float(np.sum(weights[keep] * field(pts[keep])) / np.sum(weights[keep]))
