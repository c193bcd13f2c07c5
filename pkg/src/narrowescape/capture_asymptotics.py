"""Splitting probabilities and mean reaction times for small boundary patches.

Every patch ``j`` enters through its gauge ``nu_j`` (a logarithm of its size,
corrected by ``C(eps q)`` for a partially reactive patch) and through the
interaction matrix ``G`` of the domain.  With ``nu = diag(nu_j)``,
``nubar = sum nu_j`` and ``E = e e^T`` all results follow from linear solves
with ``M0 = I + (I - nu E / nubar) nu G``.

Target and patch indices are 1-based throughout the public interface.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy import linalg

from .errors import (AsymptoticsWarning, DegenerateConfigError, DomainError,
                     InadmissibleError, SceneError)
from .geometry_greens import (BoundaryPoint, Domain, GreenMatrix, as_boundary_point,
                              bulk_green, green_matrix, surface_green)
from .halfplane_basis import default_cfunction

CONDITIONS = ("dirichlet", "robin", "steklov")
NU_LIMIT = 0.6
COND_LIMIT = 1e12
LOG_HALF = np.log(0.5)


# ---------------------------------------------------------------------------
# scenes
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class PatchSpec:
    """Boundary patch of half-length ``half_length`` centred at ``center``.

    ``center`` is a boundary parameter (polar or elliptic angle), a cartesian
    boundary point or a :class:`BoundaryPoint`.  ``q`` is the reactivity of a
    Robin patch and must be omitted otherwise.
    """

    center: object
    half_length: float
    condition: str = "dirichlet"
    q: float | None = None

    def __post_init__(self):
        cond = str(self.condition).lower()
        object.__setattr__(self, "condition", cond)
        if cond not in CONDITIONS:
            raise SceneError(f"unknown boundary condition {self.condition!r}")
        eps = float(self.half_length)
        if not (np.isfinite(eps) and eps > 0):
            raise SceneError("patch half-length must be positive and finite")
        object.__setattr__(self, "half_length", eps)
        if cond == "robin":
            if self.q is None or not (np.isfinite(self.q) and self.q > 0):
                raise SceneError("Robin patches need a finite reactivity q > 0")
            object.__setattr__(self, "q", float(self.q))
        elif self.q is not None:
            raise SceneError(f"reactivity q given for a {cond} patch")


@dataclass(frozen=True)
class Scene:
    """A domain with an ordered list of non-overlapping boundary patches."""

    domain: Domain
    patches: tuple
    warnings: tuple = field(init=False, default=())

    def __post_init__(self):
        patches = tuple(self.patches)
        if not patches:
            raise SceneError("a scene needs at least one patch")
        pts = tuple(as_boundary_point(self.domain, p.center) for p in patches)
        object.__setattr__(self, "patches", patches)
        object.__setattr__(self, "_points", pts)
        self._check_overlap()
        from .geometry_greens import separation_warnings
        object.__setattr__(self, "warnings",
                           separation_warnings(self.domain, pts, self.half_lengths, "surface"))

    def _check_overlap(self):
        per = self.domain.perimeter()
        s = np.array([float(self.domain.arc_length(p.param)) for p in self._points]) % per
        eps = self.half_lengths
        if 2 * eps.sum() >= per:
            raise DegenerateConfigError("patches cover the whole boundary")
        for i in range(len(s)):
            for j in range(i + 1, len(s)):
                gap = abs(s[i] - s[j]) % per
                gap = min(gap, per - gap)
                if gap < eps[i] + eps[j]:
                    raise DegenerateConfigError(
                        f"patches {i + 1} and {j + 1} overlap", pair=(i + 1, j + 1))

    @property
    def size(self):
        return len(self.patches)

    @property
    def points(self):
        return self._points

    @property
    def centers(self):
        return np.array([p.cartesian for p in self._points])

    @property
    def half_lengths(self):
        return np.array([p.half_length for p in self.patches])

    @property
    def conditions(self):
        return tuple(p.condition for p in self.patches)

    def green_matrix(self):
        return green_matrix(self.domain, self._points, "surface", self.half_lengths)


# ---------------------------------------------------------------------------
# gauges
# ---------------------------------------------------------------------------

def nu_and_effective_length(patch, cfun=None):
    """Gauge ``nu`` and effective half-length of a single patch."""
    eps = patch.half_length
    if patch.condition == "dirichlet":
        return -1.0 / (np.log(eps) + LOG_HALF), eps
    if patch.condition == "steklov":
        return -1.0 / np.log(eps), eps
    cfun = cfun or default_cfunction()
    cval = float(cfun(eps * patch.q))
    return 1.0 / (-np.log(eps) + cval), eps * np.exp(np.log(2.0) - cval)


def check_admissible(nu, limit=NU_LIMIT):
    nu = np.asarray(nu, dtype=float)
    bad = np.flatnonzero(~((nu > 0) & (nu < limit)))
    if bad.size:
        i = int(bad[0])
        raise InadmissibleError(
            f"patch {i + 1} is too large for the small-target asymptotics "
            f"(nu = {nu[i]:.4g}, admissible range (0, {limit}))", index=i + 1)


def gauge_vector(scene, cfun=None):
    return np.array([nu_and_effective_length(p, cfun)[0] for p in scene.patches])


def reduced_matrix(nu, gmat):
    """``M0 = I + (I - nu E / nubar) nu G`` for a gauge vector and matrix G."""
    nu = np.asarray(nu, dtype=float)
    n = nu.size
    proj = np.eye(n) - np.outer(nu, np.ones(n)) / nu.sum()
    return np.eye(n) + proj @ (nu[:, None] * gmat)


def _solve(mat, rhs):
    try:
        lu = linalg.lu_factor(mat, check_finite=True)
    except (linalg.LinAlgError, ValueError) as exc:
        raise InadmissibleError(f"singular reduced matrix: {exc}") from exc
    cond = np.linalg.cond(mat)
    if not np.isfinite(cond) or cond > COND_LIMIT:
        raise InadmissibleError(f"reduced matrix is numerically singular (cond = {cond:.3g})")
    return linalg.lu_solve(lu, rhs)


# ---------------------------------------------------------------------------
# outer solutions
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class OuterSolution:
    """Common data of an outer solution ``const - sum scale A_i G(x, x_i)``."""

    coeffs: np.ndarray
    nu: np.ndarray
    greens: GreenMatrix
    domain: Domain
    sources: tuple
    half_lengths: np.ndarray
    warnings: tuple
    scene: object = None

    def _outer(self, x):
        x = np.asarray(x, dtype=float)
        if x.shape[-1] != 2:
            raise ValueError("points must have a trailing dimension of size 2")
        if not np.all(self.domain.contains(x)):
            raise DomainError("evaluation point outside the domain")
        green = surface_green if self.greens.mode == "surface" else bulk_green
        total = np.zeros(x.shape[:-1])
        near = False
        for a, src, eps in zip(self.coeffs, self.sources, self.half_lengths):
            xy = src.cartesian if isinstance(src, BoundaryPoint) else np.asarray(src)
            dist = np.hypot(x[..., 0] - xy[0], x[..., 1] - xy[1])
            if self.greens.mode == "bulk" and np.any(dist <= eps):
                raise DomainError("evaluation point inside an interior target")
            near |= bool(np.any(dist < eps))
            total = total + self.greens.scale * a * green(self.domain, x, src)
        if near:
            warnings.warn("outer solution evaluated within one half-length of a patch centre",
                          AsymptoticsWarning, stacklevel=3)
        return total


@dataclass(frozen=True)
class SplittingSolution(OuterSolution):
    target: int = 1
    chi: float = 0.0

    def field(self, x, cap=False):
        val = self.chi - self._outer(x)
        return np.clip(val, 0.0, 1.0) if cap else val


@dataclass(frozen=True)
class MfrtSolution(OuterSolution):
    mean_time: float = 0.0

    def field(self, x):
        return self.mean_time - self._outer(x)


def splitting_from_matrix(nu, gmat, k, **common):
    """Coefficients and ``chi_k`` for gauges ``nu`` and interaction matrix ``gmat``."""
    nu = np.asarray(nu, dtype=float)
    n = nu.size
    nubar = nu.sum()
    mat = reduced_matrix(nu, gmat.entries)
    ek = np.zeros(n)
    ek[k - 1] = 1.0
    coeffs = (nu[k - 1] / nubar) * _solve(mat, nu - nubar * ek)
    chi = float(nu @ (gmat.entries @ coeffs) / nubar + nu[k - 1] / nubar)
    notes = list(common.pop("warnings", ()))
    if not 0.0 < chi < 1.0:
        notes.append(f"chi_{k} = {chi:.6g} lies outside (0, 1)")
    return SplittingSolution(coeffs=coeffs, nu=nu, greens=gmat, warnings=tuple(notes),
                             target=k, chi=chi, **common)


def mfrt_from_matrix(nu, gmat, area, **common):
    nu = np.asarray(nu, dtype=float)
    nubar = nu.sum()
    lead = area / (gmat.scale * nubar)
    coeffs = _solve(reduced_matrix(nu, gmat.entries), lead * nu)
    mean = float(lead + nu @ (gmat.entries @ coeffs) / nubar)
    notes = list(common.pop("warnings", ()))
    if mean <= 0:
        notes.append(f"mean reaction time {mean:.6g} is not positive")
    return MfrtSolution(coeffs=coeffs, nu=nu, greens=gmat, warnings=tuple(notes),
                        mean_time=mean, **common)


def _common(scene, gmat):
    return dict(domain=scene.domain, sources=scene.points, half_lengths=scene.half_lengths,
                warnings=tuple(scene.warnings) + tuple(gmat.warnings), scene=scene)


def _require_reactive(scene):
    bad = [i + 1 for i, c in enumerate(scene.conditions) if c == "steklov"]
    if bad:
        raise SceneError(f"patch {bad[0]} is a Steklov patch; splitting and MFRT need "
                         "Dirichlet or Robin patches")


def solve_splitting(scene, k, cfun=None):
    """Splitting solution for target ``k`` (1-based)."""
    _require_reactive(scene)
    n = scene.size
    if not 1 <= k <= n:
        raise IndexError(f"target index {k} outside 1..{n}")
    nu = gauge_vector(scene, cfun)
    check_admissible(nu)
    gmat = scene.green_matrix()
    common = _common(scene, gmat)
    if n == 1:
        common["warnings"] += ("single target: chi = 1 trivially",)
        return SplittingSolution(coeffs=np.zeros(1), nu=nu, greens=gmat, target=1,
                                 chi=1.0, **common)
    return splitting_from_matrix(nu, gmat, k, **common)


def eval_splitting_field(sol, x, cap=False):
    """Outer splitting probability at interior point(s) ``x``; optionally clamped."""
    return sol.field(x, cap=cap)


def solve_mfrt(scene, cfun=None):
    """Volume-averaged mean first-reaction time and its outer field."""
    _require_reactive(scene)
    area = scene.domain.area
    nu = gauge_vector(scene, cfun)
    check_admissible(nu)
    gmat = scene.green_matrix()
    return mfrt_from_matrix(nu, gmat, area, **_common(scene, gmat))


# ---------------------------------------------------------------------------
# equally spaced patches on the unit disk
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class CirculantSpectrum:
    """Eigenvalues ``kappa_j`` (j = 1..N) of the circulant disk matrix."""

    count: int
    kappa: np.ndarray

    def __getitem__(self, j):
        return self.kappa[j - 1]


def kappa_exact(count, j):
    """Closed-form eigenvalue ``kappa_j`` of the N-patch disk interaction matrix."""
    if count < 2 or not 1 <= j <= count:
        raise ValueError("need N >= 2 and 1 <= j <= N")
    if j == count:
        return count / 8.0 - np.log(count)
    m = np.arange(1, count)
    return float(np.log(2.0) - np.sum(np.cos(2 * np.pi * j * m / count)
                                      * np.log(np.sin(np.pi * m / count))))


def circulant_spectrum(count):
    return CirculantSpectrum(count, np.array([kappa_exact(count, j)
                                              for j in range(1, count + 1)]))


KAPPA_ORDERS = ("full", "cubic", "loworder", "empirical")


def kappa_asymptotic(count, j, order="full", coefficient=1.25):
    """Large-N approximations of ``kappa_j`` from the Euler-Maclaurin sum."""
    from scipy.special import sici
    if order not in KAPPA_ORDERS:
        raise ValueError(f"order must be one of {KAPPA_ORDERS}")
    if not 1 <= j <= count / 2:
        raise ValueError("need 1 <= j <= N/2")
    if count < 8:
        warnings.warn("kappa asymptotics are meant for N >= 8", AsymptoticsWarning,
                      stacklevel=2)
    xi = j / count
    if order == "full":
        arg = 2 * np.pi * xi
        shape = np.sin(arg) / (np.pi * xi) - np.cos(arg) - np.pi * xi * np.sin(arg) / 3
        return float(count / (2 * j) + np.log(np.pi / count) * shape + np.log(2.0)
                     + np.cos(arg) / 6 - sici(arg)[0] / (np.pi * xi))
    base = count / (2 * j) + np.log(2 * np.pi * np.exp(-11.0 / 6.0) / count)
    weight = {"cubic": 1.0, "loworder": 0.0, "empirical": coefficient}[order]
    return float(base + weight * np.pi**2 * xi**2 / 9)


def equally_spaced_scene(count, eps, condition="dirichlet", q=None):
    """N identical patches on the unit disk, the first centred at angle 0."""
    from .geometry_greens import disk
    return Scene(disk(), tuple(PatchSpec(2 * np.pi * m / count, eps, condition, q)
                               for m in range(count)))


def spectral_splitting(count, eps, k=1):
    """Coefficients and ``chi_k`` from the circulant eigen-decomposition."""
    nu = -1.0 / np.log(eps / 2)
    kap = circulant_spectrum(count).kappa
    j = np.arange(1, count)
    m = np.arange(1, count + 1)
    phase = np.cos(2 * np.pi * np.outer(k - m, j) / count)
    coeffs = -(nu / count) * phase @ (1.0 / (1.0 + nu * kap[:-1]))
    chi = kap[-1] * coeffs.sum() / count + 1.0 / count
    return coeffs, float(chi)


def circulant_splitting_check(count, eps, k=1):
    """``(spectral A, dense A)`` for N identical equally spaced Dirichlet patches."""
    spectral, _ = spectral_splitting(count, eps, k)
    dense = solve_splitting(equally_spaced_scene(count, eps), k).coeffs
    return spectral, dense
