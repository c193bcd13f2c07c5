"""Monte Carlo estimates of splitting probabilities and mean first-passage times.

Walkers perform reflected Brownian motion (unit diffusivity) in the unit disk
and are absorbed on Dirichlet patch arcs of the circle or on interior Dirichlet
disks.  The step size shrinks near absorbers.  A Brownian-bridge test catches
contacts between two samples.  See :mod:`._walk_py` for the scheme.

The compiled kernel ``_walk`` is used when available.  Otherwise the numpy
implementation takes over, and ``BACKEND`` records which one is active.
Each walker owns its random stream, so estimates depend only on the seed
and the walker count.  They do not depend on the chunk size or the backend.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from ..errors import McTimeoutError, SceneError, UnsupportedError
from . import _walk_py

try:
    from . import _walk as _compiled
except ImportError:  # pragma: no cover - depends on the build
    _compiled = None

BACKEND = "compiled" if _compiled is not None else "numpy"
MIN_WALKERS = 1000
_SEED_MASK = (1 << 64) - 1


def kernel(name=None):
    """Walk module for ``name`` in {'compiled', 'numpy'}; default is ``BACKEND``."""
    name = name or BACKEND
    if name == "compiled":
        if _compiled is None:
            raise UnsupportedError("the compiled walk kernel is not built")
        return _compiled
    if name == "numpy":
        return _walk_py
    raise ValueError(f"unknown backend {name!r}")


@dataclass(frozen=True)
class McConfig:
    """Walker count, seed and step control.

    A walker at distance ``d`` from the nearest absorber and ``w`` from the
    circle takes a step of ``max(min(gamma^2 d^2 / 2, max(dt, gamma^2 w^2 / 2)), dt_min)``.
    So ``dt`` bounds steps along the reflecting wall, and steps grow in the
    bulk.  ``chunk`` only affects memory use, never the result.
    """

    walkers: int = 100_000
    seed: int = 12345
    dt: float = 1e-3
    dt_min: float = 1e-6
    gamma: float = 0.25
    max_steps: int = 10_000_000
    chunk: int = 25_000

    def __post_init__(self):
        if int(self.walkers) < MIN_WALKERS:
            raise SceneError(f"need at least {MIN_WALKERS} walkers")
        if not (0 < self.dt_min <= self.dt):
            raise SceneError("need 0 < dt_min <= dt")
        if not self.gamma > 0:
            raise SceneError("gamma must be positive")
        if int(self.max_steps) < 1 or int(self.chunk) < 1:
            raise SceneError("max_steps and chunk must be positive")
        object.__setattr__(self, "seed", int(self.seed) & _SEED_MASK)

    def halved(self):
        """Same walkers and seed with every step length scale halved."""
        return replace(self, dt=self.dt / 2, dt_min=self.dt_min / 2,
                       gamma=self.gamma / np.sqrt(2), max_steps=2 * self.max_steps)


@dataclass(frozen=True)
class Estimate:
    """Sample mean with ``stderr = sample std / sqrt(samples)``."""

    mean: float
    stderr: float
    samples: int

    def within(self, value, sigmas=3.0):
        return abs(self.mean - value) <= sigmas * self.stderr


def _estimate(values):
    values = np.asarray(values, dtype=float)
    n = values.size
    return Estimate(float(values.mean()), float(values.std(ddof=1) / np.sqrt(n)), n)


def _absorbers(target):
    """Patch arcs and interior disks of a unit-disk scene.

    ``target`` is a ``Scene`` of Dirichlet patches on the unit disk or a
    sequence of interior Dirichlet disk targets.
    """
    empty = np.zeros(0)
    if hasattr(target, "patches"):
        dom = target.domain
        if not (dom.is_disk and dom.is_interior):
            raise UnsupportedError("the Monte Carlo oracle needs the unit disk")
        if any(c != "dirichlet" for c in target.conditions):
            raise UnsupportedError("Monte Carlo walkers support Dirichlet patches only")
        pc = np.array([float(p.param) for p in target.points])
        pe = np.array(target.half_lengths, dtype=float)
        return pc, pe, empty, empty, empty
    targets = tuple(target)
    if not targets:
        raise SceneError("need at least one absorber")
    for t in targets:
        if t.condition != "dirichlet" or t.shape != "disk":
            raise UnsupportedError("Monte Carlo walkers support Dirichlet disk targets only")
        if np.hypot(*t.center) + t.size >= 1:
            raise SceneError("interior targets must lie inside the unit disk")
    cx = np.array([t.center[0] for t in targets])
    cy = np.array([t.center[1] for t in targets])
    rad = np.array([t.size for t in targets])
    return empty, empty, cx, cy, rad


def _start(start, absorbers):
    if isinstance(start, str):
        if start != "uniform":
            raise SceneError(f"unknown start {start!r}; use 'uniform' or a point")
        return None
    p = np.asarray(start, dtype=float)
    if p.shape != (2,) or not np.all(np.isfinite(p)) or np.hypot(*p) >= 1:
        raise SceneError("start must be a point strictly inside the unit disk")
    _, _, cx, cy, rad = absorbers
    if np.any(np.hypot(cx - p[0], cy - p[1]) <= rad):
        raise SceneError("start point lies inside an absorbing target")
    return p


def run_walkers(target, start="uniform", cfg=None, backend=None):
    """Walk ``cfg.walkers`` walkers; return per-walker ``(hit, time)`` arrays.

    ``hit`` holds 0-based absorber indices (patches first, then interior
    disks).  Raises :class:`McTimeoutError` if any walker exceeds
    ``cfg.max_steps``.
    """
    cfg = cfg or McConfig()
    absorbers = _absorbers(target)
    point = _start(start, absorbers)
    mod = kernel(backend)
    n = int(cfg.walkers)
    hits = np.empty(n, dtype=np.int64)
    times = np.empty(n)
    # fixed chunk order keeps the reduction deterministic
    for lo in range(0, n, int(cfg.chunk)):
        m = min(int(cfg.chunk), n - lo)
        x0 = np.full(m, 0.0 if point is None else point[0])
        y0 = np.full(m, 0.0 if point is None else point[1])
        h, t = mod.walk(x0, y0, cfg.seed, lo, *absorbers, float(cfg.gamma),
                        float(cfg.dt_min), float(cfg.dt), int(cfg.max_steps),
                        int(point is None))
        hits[lo:lo + m] = h
        times[lo:lo + m] = t
    lost = int(np.count_nonzero(hits < 0))
    if lost:
        raise McTimeoutError(f"{lost} of {n} walkers exceeded max_steps={cfg.max_steps}; "
                             "raise max_steps or dt", walkers=lost)
    return hits, times


def mc_splitting(target, k, start="uniform", cfg=None, backend=None):
    """Fraction of walkers absorbed by absorber ``k`` (1-based), binomial stderr.

    ``start`` is a point or ``'uniform'``.  A uniform start uses stratified
    sampling over 20 equal-area cells (4 rings by 5 sectors).
    """
    count = len(_absorbers(target)[0]) + len(_absorbers(target)[2])
    if not 1 <= k <= count:
        raise IndexError(f"absorber index {k} outside 1..{count}")
    hits, _ = run_walkers(target, start, cfg, backend)
    return _estimate(hits == k - 1)


def mc_mfpt(target, start="uniform", cfg=None, backend=None):
    """Mean first-passage time to any absorber (unit diffusivity)."""
    _, times = run_walkers(target, start, cfg, backend)
    return _estimate(times)
