"""Interior targets, the exterior-of-a-disk Robin constant and exterior scenes.

Interior targets sit inside a reflecting domain.  The matched-asymptotic
algebra is unchanged, but the inner problem is the exterior of the rescaled
target (logarithmic capacity ``d``) and the outer problem uses the bulk
Neumann Green's function with the factor ``2 pi``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .capture_asymptotics import (Scene, check_admissible, mfrt_from_matrix,
                                  splitting_from_matrix)
from .errors import (DegenerateConfigError, DomainError, PoleError, SceneError,
                     UnsupportedError)
from .geometry_greens import bulk_green, green_matrix, regular_part

SHAPES = ("disk", "custom")
CONDITIONS = ("dirichlet", "robin", "steklov")


@dataclass(frozen=True)
class InteriorTargetSpec:
    """Interior target of size ``size`` centred at ``center``.

    ``shape='disk'`` means a disk of radius ``size`` (capacity 1 after
    rescaling); ``shape='custom'`` needs a user-supplied ``capacity``.
    """

    center: tuple
    size: float
    shape: str = "disk"
    capacity: float | None = None
    condition: str = "dirichlet"
    q: float | None = None

    def __post_init__(self):
        c = np.asarray(self.center, dtype=float)
        if c.shape != (2,):
            raise SceneError("target centre must be a pair (x, y)")
        object.__setattr__(self, "center", (float(c[0]), float(c[1])))
        if not (np.isfinite(self.size) and self.size > 0):
            raise SceneError("target size must be positive")
        if self.shape not in SHAPES:
            raise SceneError(f"unknown target shape {self.shape!r}")
        if self.shape == "disk":
            if self.capacity not in (None, 1.0, 1):
                raise SceneError("disk targets have capacity 1")
            object.__setattr__(self, "capacity", 1.0)
        elif self.capacity is None or not self.capacity > 0:
            raise SceneError("custom targets need a positive logarithmic capacity")
        cond = str(self.condition).lower()
        object.__setattr__(self, "condition", cond)
        if cond not in CONDITIONS:
            raise SceneError(f"unknown boundary condition {self.condition!r}")
        if cond == "steklov" and self.shape != "disk":
            raise UnsupportedError("Steklov interior targets must be disks")
        if cond == "robin":
            if self.q is None or not (np.isfinite(self.q) and self.q > 0):
                raise SceneError("Robin targets need a finite reactivity q > 0")
        elif self.q is not None:
            raise SceneError(f"reactivity q given for a {cond} target")


def c_exterior_disk(mu):
    """Far-field constant of the Robin Green's function outside the unit disk: ``1/mu``."""
    mu = float(mu)
    if mu == 0:
        raise PoleError("C_disk(mu) has a pole at mu = 0", index=0)
    return 1.0 / mu


def boundary_clearance(domain, point, samples=4096):
    """Distance from an interior point to the domain boundary."""
    point = np.asarray(point, dtype=float)
    if domain.is_disk:
        return float(abs(1.0 - np.hypot(*point)))
    theta = np.linspace(-np.pi, np.pi, samples, endpoint=False)
    curve = domain.boundary_point(theta)
    dist = np.hypot(curve[:, 0] - point[0], curve[:, 1] - point[1])
    # refine around the sampled minimum
    i = int(np.argmin(dist))
    fine = np.linspace(theta[i] - 2 * np.pi / samples, theta[i] + 2 * np.pi / samples, 401)
    curve = domain.boundary_point(fine)
    return float(np.min(np.hypot(curve[:, 0] - point[0], curve[:, 1] - point[1])))


def target_gauge(target):
    eps, cap = target.size, target.capacity
    if target.condition == "dirichlet":
        return -1.0 / np.log(eps * cap)
    if target.condition == "robin":
        if target.shape != "disk":
            raise UnsupportedError("Robin targets need a known C(mu); only disks are supported")
        return 1.0 / (-np.log(eps) + c_exterior_disk(eps * target.q))
    raise SceneError("Steklov targets have no splitting gauge")


def validate_targets(domain, targets):
    """Check placement; returns ``(targets, notes)`` with clearance warnings."""
    if not domain.is_interior:
        raise UnsupportedError("interior targets need a bounded (interior) domain")
    targets = tuple(targets)
    if not targets:
        raise SceneError("need at least one target")
    notes = []
    for i, t in enumerate(targets):
        if not domain.contains(np.array(t.center)) or domain.level(np.array(t.center)) >= 1:
            raise DomainError(f"target {i + 1} centre is not inside the domain")
        gap = boundary_clearance(domain, t.center)
        if gap <= t.size:
            raise DegenerateConfigError(f"target {i + 1} crosses the domain boundary")
        if gap < 2 * t.size:
            notes.append(f"target {i + 1} is only {gap:.4g} from the boundary "
                         f"(< 2 eps = {2 * t.size:.4g})")
    for i in range(len(targets)):
        for j in range(i + 1, len(targets)):
            d = np.hypot(*(np.subtract(targets[i].center, targets[j].center)))
            if d <= targets[i].size + targets[j].size:
                raise DegenerateConfigError(f"targets {i + 1} and {j + 1} overlap",
                                            pair=(i + 1, j + 1))
    return targets, notes


def _interior_common(domain, targets, notes):
    centers = [np.array(t.center) for t in targets]
    sizes = np.array([t.size for t in targets])
    gmat = green_matrix(domain, centers, "bulk", sizes)
    common = dict(domain=domain, sources=tuple(centers), half_lengths=sizes,
                  warnings=tuple(notes) + tuple(gmat.warnings))
    return gmat, common


def interior_splitting(domain, targets, k):
    """Splitting solution for interior Dirichlet/Robin target ``k`` (1-based)."""
    targets, notes = validate_targets(domain, targets)
    if any(t.condition == "steklov" for t in targets):
        raise SceneError("splitting needs Dirichlet or Robin targets")
    if not 1 <= k <= len(targets):
        raise IndexError(f"target index {k} outside 1..{len(targets)}")
    nu = np.array([target_gauge(t) for t in targets])
    check_admissible(nu)
    gmat, common = _interior_common(domain, targets, notes)
    if len(targets) == 1:
        raise DegenerateConfigError("splitting needs at least two targets")
    return splitting_from_matrix(nu, gmat, k, **common)


def interior_mfrt(domain, targets):
    """Mean reaction time for interior Dirichlet/Robin targets."""
    targets, notes = validate_targets(domain, targets)
    if any(t.condition == "steklov" for t in targets):
        raise SceneError("MFRT needs Dirichlet or Robin targets")
    nu = np.array([target_gauge(t) for t in targets])
    check_admissible(nu)
    gmat, common = _interior_common(domain, targets, notes)
    return mfrt_from_matrix(nu, gmat, domain.area, **common)


def interior_snd_inverse(domain, steklov, dirichlet):
    """``1 / (eps_1 sigma_0)`` for a Steklov disk target and one Dirichlet target."""
    if steklov.condition != "steklov" or steklov.shape != "disk":
        raise SceneError("the first target must be a Steklov disk")
    if dirichlet.condition != "dirichlet":
        raise SceneError("the second target must be a Dirichlet target")
    validate_targets(domain, (steklov, dirichlet))
    x1, x2 = np.array(steklov.center), np.array(dirichlet.center)
    pair = (regular_part(domain, x1, "bulk") + regular_part(domain, x2, "bulk")
            - 2 * float(bulk_green(domain, x1, x2)))
    return float(-np.log(dirichlet.capacity * steklov.size * dirichlet.size)
                 + 2 * np.pi * pair)


def interior_snd_principal(domain, steklov, dirichlet):
    """Principal eigenvalue ``sigma_0`` of the interior SND problem."""
    return 1.0 / (steklov.size * interior_snd_inverse(domain, steklov, dirichlet))


def exterior_scene_support(domain, patches):
    """Interaction matrix of boundary patches on the obstacle of an exterior domain."""
    if domain.is_interior:
        raise UnsupportedError("exterior_scene_support needs an exterior domain")
    return Scene(domain, tuple(patches)).green_matrix()
