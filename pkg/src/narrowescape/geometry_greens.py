"""Planar domains and their Neumann Green's functions.

Four domain kinds are supported: the unit disk and an ellipse, each as an
interior or an exterior domain.  For every kind we provide the *surface*
Green's function (source on the boundary, singularity ``-(1/pi) ln r``) and
the *bulk* one (interior source, ``-(1/2pi) ln r``), their regular parts, and
the interaction matrix used by the matched-asymptotic solvers.

Interior Green's functions are normalised to zero mean over the domain;
exterior ones behave like ``-(1/2pi) ln|x| + o(1)`` at infinity.

Ellipses use elliptic coordinates ``x1 + i x2 = a_E cosh(alpha + i theta)``
with focal half-distance ``a_E = sqrt(a^2 - b^2)``; the boundary is
``alpha = alpha_b = atanh(b/a)`` and image sums are geometric in
``beta = (a - b)/(a + b)``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import special

from .errors import DegenerateConfigError, DomainError, SingularityError, UnsupportedError

KINDS = ("disk-interior", "disk-exterior", "ellipse-interior", "ellipse-exterior")
SERIES_CUTOFF = 1e-16
BULK_CLEARANCE = 1e-6
_TOL = 1e-12


@dataclass(frozen=True)
class Domain:
    """Unit disk or ellipse (semi-axes ``a >= b``), interior or exterior."""

    kind: str
    a: float = 1.0
    b: float = 1.0

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown domain kind {self.kind!r}; expected one of {KINDS}")
        if self.is_disk:
            if self.a != 1.0 or self.b != 1.0:
                raise ValueError("disk domains have unit radius (rescale lengths externally)")
        else:
            if not (self.a > self.b > 0):
                raise ValueError("ellipse semi-axes must satisfy a > b > 0")

    @property
    def is_disk(self):
        return self.kind.startswith("disk")

    @property
    def is_interior(self):
        return self.kind.endswith("interior")

    @property
    def focal(self):
        return np.sqrt(self.a**2 - self.b**2)

    @property
    def beta(self):
        return (self.a - self.b) / (self.a + self.b)

    @property
    def alpha_b(self):
        return np.arctanh(self.b / self.a)

    @property
    def area(self):
        if not self.is_interior:
            raise UnsupportedError("unsupported: infinite area for an exterior domain")
        return np.pi * self.a * self.b

    # -- boundary parametrisation -------------------------------------
    def boundary_point(self, theta):
        """Cartesian point(s) for boundary parameter ``theta``."""
        theta = np.asarray(theta, dtype=float)
        return np.stack([self.a * np.cos(theta), self.b * np.sin(theta)], axis=-1)

    def boundary_param(self, x):
        """Inverse of :meth:`boundary_point` (polar or elliptic angle)."""
        x = np.asarray(x, dtype=float)
        return np.arctan2(x[..., 1] / self.b, x[..., 0] / self.a)

    def level(self, x):
        """``(x1/a)^2 + (x2/b)^2``: < 1 inside the obstacle curve."""
        x = np.asarray(x, dtype=float)
        return (x[..., 0] / self.a) ** 2 + (x[..., 1] / self.b) ** 2

    def contains(self, x, tol=_TOL):
        """Membership of the closed domain."""
        lev = self.level(x)
        return lev <= 1 + tol if self.is_interior else lev >= 1 - tol

    def perimeter(self):
        if self.is_disk:
            return 2 * np.pi
        return 4 * self.a * special.ellipe(1 - (self.b / self.a) ** 2)

    def arc_length(self, theta):
        """Arc length from parameter 0 to ``theta`` (counter-clockwise)."""
        theta = np.asarray(theta, dtype=float)
        if self.is_disk:
            return theta
        m = 1 - (self.b / self.a) ** 2
        # a * int_0^t sqrt(1 - m cos^2 u) du, with u = pi/2 - v
        return self.a * (special.ellipeinc(np.pi / 2, m) - special.ellipeinc(np.pi / 2 - theta, m))

    def elliptic(self, x):
        """Elliptic coordinates ``(alpha, theta)`` of cartesian points."""
        x = np.asarray(x, dtype=float)
        zeta = np.arccosh((x[..., 0] + 1j * x[..., 1]) / self.focal)
        return zeta.real, zeta.imag


def disk():
    return Domain("disk-interior")


def exterior_disk():
    return Domain("disk-exterior")


def ellipse(a, b):
    return Domain("ellipse-interior", float(a), float(b))


def exterior_ellipse(a, b):
    return Domain("ellipse-exterior", float(a), float(b))


@dataclass(frozen=True)
class BoundaryPoint:
    """Point on the obstacle curve given by its (polar or elliptic) angle."""

    domain: Domain
    param: float

    @property
    def cartesian(self):
        return self.domain.boundary_point(self.param)


def as_boundary_point(domain, p):
    """Accept a BoundaryPoint, an angle or a cartesian pair on the boundary."""
    if isinstance(p, BoundaryPoint):
        return p
    arr = np.asarray(p, dtype=float)
    if arr.ndim == 0:
        return BoundaryPoint(domain, float(arr))
    if abs(domain.level(arr) - 1) > 1e-9:
        raise DomainError(f"point {arr.tolist()} is not on the boundary")
    return BoundaryPoint(domain, float(domain.boundary_param(arr)))


def _points(x):
    x = np.asarray(x, dtype=float)
    if x.shape[-1] != 2:
        raise ValueError("points must have a trailing dimension of size 2")
    return x


def _check_field_points(domain, x, src):
    if not np.all(domain.contains(x)):
        raise DomainError("evaluation point outside the closed domain")
    dist = np.hypot(x[..., 0] - src[0], x[..., 1] - src[1])
    if np.any(dist < 1e-14):
        raise SingularityError("evaluation point coincides with the source")


def _log_gap(dalpha, dtheta):
    """``ln(1 - 2 cos(dtheta) q + q^2)`` with ``q = exp(-dalpha)``, free of cancellation."""
    q = np.exp(-dalpha)
    return np.log(np.expm1(-dalpha) ** 2 + 4 * q * np.sin(dtheta / 2) ** 2)


def _image_terms(beta):
    if beta <= 0:
        return np.array([1.0])
    nmax = int(np.ceil(np.log(SERIES_CUTOFF) / (2 * np.log(beta))))
    return beta ** (2 * np.arange(nmax + 1))


def _log_sum(weights, z):
    """sum_n sum_j ln|1 - w_n z_j| for a stack of complex z (..., J)."""
    z = np.asarray(z)
    return np.sum(np.log(np.abs(1 - weights[:, None, None] * z.reshape(1, -1, z.shape[-1]))),
                  axis=(0, 2)).reshape(z.shape[:-1])


# ---------------------------------------------------------------------------
# surface Green's functions
# ---------------------------------------------------------------------------

def surface_green(domain, x, xi):
    """Surface Neumann Green's function ``G(x, xi)`` for a boundary source xi."""
    xi = as_boundary_point(domain, xi)
    x = _points(x)
    src = xi.cartesian
    _check_field_points(domain, x, src)
    dist = np.hypot(x[..., 0] - src[0], x[..., 1] - src[1])
    r2 = np.sum(x**2, axis=-1)
    if domain.kind == "disk-interior":
        return -np.log(dist) / np.pi + r2 / (4 * np.pi) - 1 / (8 * np.pi)
    if domain.kind == "disk-exterior":
        return -np.log(dist) / np.pi + np.log(r2) / (4 * np.pi)
    a, b = domain.a, domain.b
    ab = domain.alpha_b
    alpha, theta = domain.elliptic(x)
    th0 = float(domain.elliptic(src)[1])
    if domain.kind == "ellipse-interior":
        d, s = 1j * (theta - th0), 1j * (theta + th0)
        z = np.stack([np.exp(-ab + alpha + d), np.exp(-3 * ab - alpha + d),
                      np.exp(-3 * ab + alpha + s), np.exp(-ab - alpha + s)], axis=-1)
        return ((r2 + np.sum(src**2)) / (4 * np.pi * a * b)
                - 3 * (a**2 + b**2) / (16 * np.pi * a * b)
                - _log_sum(_image_terms(domain.beta), z) / np.pi)
    return ((np.log(2 / domain.focal) - alpha) / (2 * np.pi)
            - _log_gap(alpha - ab, theta - th0) / (2 * np.pi))


def _check_bulk_source(domain, xi):
    xi = _points(xi)
    lev = domain.level(xi)
    if domain.is_disk:
        r = np.sqrt(lev)
        gap = (1 - r) if domain.is_interior else (r - 1)
    else:
        alpha0, _ = domain.elliptic(xi)
        gap = (domain.alpha_b - alpha0) if domain.is_interior else (alpha0 - domain.alpha_b)
    if gap <= 0:
        raise DomainError("bulk source must lie strictly inside the domain")
    if gap < BULK_CLEARANCE:
        raise SingularityError("bulk source too close to the boundary (regular part diverges)")
    return xi


def bulk_green(domain, x, xi):
    """Bulk Neumann Green's function ``G_b(x, xi)`` for an interior source."""
    xi = _check_bulk_source(domain, xi)
    x = _points(x)
    _check_field_points(domain, x, xi)
    dist = np.hypot(x[..., 0] - xi[0], x[..., 1] - xi[1])
    r2 = np.sum(x**2, axis=-1)
    s2 = float(np.sum(xi**2))
    if domain.kind == "disk-interior":
        cross = 1 + r2 * s2 - 2 * (x @ xi)
        return (-np.log(dist) / (2 * np.pi) - np.log(cross) / (4 * np.pi)
                + (r2 + s2) / (4 * np.pi) - 3 / (8 * np.pi))
    if domain.kind == "disk-exterior":
        img = xi / s2
        dimg = np.hypot(x[..., 0] - img[0], x[..., 1] - img[1])
        return -(np.log(dist) + np.log(dimg) - 0.5 * np.log(r2)) / (2 * np.pi)
    a, b = domain.a, domain.b
    ab = domain.alpha_b
    alpha, theta = domain.elliptic(x)
    a0, t0 = (float(v) for v in domain.elliptic(xi))
    if domain.kind == "ellipse-interior":
        gap = np.abs(alpha - a0)
        d, s = 1j * (theta - t0), 1j * (theta + t0)
        z = np.stack([np.exp(-gap + d), np.exp(-4 * ab + gap + d),
                      np.exp(-2 * ab - alpha - a0 + d), np.exp(-2 * ab + alpha + a0 + d),
                      np.exp(-4 * ab + alpha + a0 + s), np.exp(-alpha - a0 + s),
                      np.exp(-2 * ab + gap + s), np.exp(-2 * ab - gap + s)], axis=-1)
        return ((r2 + s2) / (4 * np.pi * a * b) - 3 * (a**2 + b**2) / (16 * np.pi * a * b)
                + (ab - np.maximum(alpha, a0)) / (2 * np.pi)
                - _log_sum(_image_terms(domain.beta), z) / (2 * np.pi))
    return ((np.log(2 / domain.focal) - np.maximum(alpha, a0)) / (2 * np.pi)
            - (_log_gap(np.abs(alpha - a0), theta - t0)
               + _log_gap(alpha + a0 - 2 * ab, theta - t0)) / (4 * np.pi))


# ---------------------------------------------------------------------------
# regular parts
# ---------------------------------------------------------------------------

def _metric(domain, alpha0, theta0):
    """|dx| / |d(alpha, theta)| at a point (conformal scale factor)."""
    return domain.focal * np.sqrt(np.sinh(alpha0) ** 2 + np.sin(theta0) ** 2)


def regular_part(domain, xi, mode="surface"):
    """Regular part of the surface (``mode='surface'``) or bulk Green's function."""
    if mode == "surface":
        xi = as_boundary_point(domain, xi)
        src = xi.cartesian
        if domain.kind == "disk-interior":
            return 1 / (8 * np.pi)
        if domain.kind == "disk-exterior":
            return 0.0
        a, b, ab, beta = domain.a, domain.b, domain.alpha_b, domain.beta
        th0 = float(domain.elliptic(src)[1])
        if domain.kind == "ellipse-interior":
            n = np.arange(1, len(_image_terms(beta)) + 1)
            series = np.sum(np.log(1 - beta ** (2 * n))
                            + np.log(np.abs(1 - beta ** (2 * n - 1) * np.exp(2j * th0))))
            return (np.sum(src**2) / (2 * np.pi * a * b) - 3 * (a**2 + b**2) / (16 * np.pi * a * b)
                    + np.log(_metric(domain, ab, th0)) / np.pi - 2 * series / np.pi)
        return (np.log(2 * domain.focal) - ab + np.log(np.sinh(ab) ** 2 + np.sin(th0) ** 2)) / (2 * np.pi)
    if mode != "bulk":
        raise ValueError("mode must be 'surface' or 'bulk'")
    xi = _check_bulk_source(domain, xi)
    s2 = float(np.sum(xi**2))
    if domain.kind == "disk-interior":
        return -np.log(1 - s2) / (2 * np.pi) + s2 / (2 * np.pi) - 3 / (8 * np.pi)
    if domain.kind == "disk-exterior":
        return -np.log(1 - 1 / s2) / (2 * np.pi)
    a, b, ab = domain.a, domain.b, domain.alpha_b
    a0, t0 = (float(v) for v in domain.elliptic(xi))
    if domain.kind == "ellipse-interior":
        w = _image_terms(domain.beta)
        d, s = 0j, 2j * t0
        z = np.array([np.exp(-4 * ab + d), np.exp(-2 * ab - 2 * a0 + d),
                      np.exp(-2 * ab + 2 * a0 + d), np.exp(-4 * ab + 2 * a0 + s),
                      np.exp(-2 * a0 + s), np.exp(-2 * ab + s), np.exp(-2 * ab + s)])
        logs = (np.sum(np.log(np.abs(1 - w[:, None] * z[None, :])))
                + np.sum(np.log(1 - w[1:])))
        return (s2 / (2 * np.pi * a * b) - 3 * (a**2 + b**2) / (16 * np.pi * a * b)
                + (ab - a0) / (2 * np.pi) - logs / (2 * np.pi)
                + np.log(_metric(domain, a0, t0)) / (2 * np.pi))
    return (0.5 * np.log(np.sinh(a0) ** 2 + np.sin(t0) ** 2) + np.log(2) - a0
            - np.log(1 - np.exp(-2 * (a0 - ab)))) / (2 * np.pi)


# ---------------------------------------------------------------------------
# interaction matrix
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class GreenMatrix:
    """Symmetric interaction matrix ``scale * [R_j on the diagonal, G_ji off]``."""

    entries: np.ndarray
    scale: float
    mode: str
    warnings: tuple = field(default=())

    @property
    def size(self):
        return self.entries.shape[0]


def _center_points(domain, centers, mode):
    if mode == "surface":
        pts = [as_boundary_point(domain, c) for c in centers]
        return pts, np.array([p.cartesian for p in pts]).reshape(-1, 2)
    xy = np.array([np.asarray(c, dtype=float) for c in centers]).reshape(-1, 2)
    return list(xy), xy


def separation_warnings(domain, centers, half_lengths, mode="surface"):
    """Warnings for pairs closer than four times the largest half-length."""
    if half_lengths is None or len(centers) < 2:
        return ()
    limit = 4 * float(np.max(half_lengths))
    out = []
    pts, xy = _center_points(domain, centers, mode)
    if mode == "surface":
        s = np.array([float(domain.arc_length(p.param)) for p in pts])
        per = domain.perimeter()
    for i in range(len(pts)):
        for j in range(i + 1, len(pts)):
            if mode == "surface":
                gap = abs(s[i] - s[j]) % per
                gap = min(gap, per - gap)
            else:
                gap = float(np.hypot(*(xy[i] - xy[j])))
            if gap < limit:
                out.append(f"well-separated assumption violated: targets {i + 1} and {j + 1} "
                           f"are {gap:.4g} apart (< 4 max eps = {limit:.4g})")
    return tuple(out)


def green_matrix(domain, centers, mode="surface", half_lengths=None):
    """Assemble the interaction matrix for boundary (surface) or interior (bulk) centers."""
    if mode not in ("surface", "bulk"):
        raise ValueError("mode must be 'surface' or 'bulk'")
    pts, xy = _center_points(domain, centers, mode)
    n = len(pts)
    for i in range(n):
        for j in range(i + 1, n):
            if np.hypot(*(xy[i] - xy[j])) < 1e-12:
                raise DegenerateConfigError(f"duplicate centers {i + 1} and {j + 1}",
                                            pair=(i + 1, j + 1))
    scale = np.pi if mode == "surface" else 2 * np.pi
    green = surface_green if mode == "surface" else bulk_green
    mat = np.empty((n, n))
    for i in range(n):
        mat[i, i] = scale * regular_part(domain, pts[i], mode)
        for j in range(i + 1, n):
            mat[i, j] = mat[j, i] = scale * float(green(domain, xy[i], pts[j]))
    return GreenMatrix(mat, scale, mode, separation_warnings(domain, centers, half_lengths, mode))
