"""Canonical half-plane inner problems.

The local geometry near a small boundary patch is the upper half-plane with
the patch flattened onto the interval (-1, 1).  This module provides

* the Dirichlet Green's function ``g_dirichlet`` (logarithmic capacity 1/2),
* the interval Steklov eigenbasis ``build_basis`` / ``psi_eval``,
* the Robin Green's function ``g_robin`` and the meromorphic far-field
  constant ``c_function`` together with its Taylor coefficients.

Points of the half-plane are described through elliptic coordinates with unit
focal distance, ``y1 + i y2 = cosh(alpha + i theta)``.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from numpy.polynomial import chebyshev, polynomial
from scipy import linalg, special

from .errors import NumericalError, PoleError

DEFAULT_COUNT = 101          # k = 0..100, i.e. 50 non-trivial even modes
DEFAULT_TRUNCATION = 256
POLE_RADIUS = 1e-9
FORMAT_VERSION = 1
CACHE_ENV = "NARROWESCAPE_CACHE_DIR"

EXACT_C1 = 1.5 - np.log(2.0)
EXACT_C2 = (21.0 - 2.0 * np.pi**2) / (18.0 * np.pi)


def _as_points(y):
    y = np.asarray(y, dtype=float)
    if y.shape[-1] != 2:
        raise ValueError("points must have a trailing dimension of size 2")
    return y


def elliptic_angles(y):
    """Return ``(alpha, theta)`` with ``y1 + i y2 = cosh(alpha + i theta)``."""
    y = _as_points(y)
    zeta = np.arccosh(y[..., 0] + 1j * y[..., 1])
    return zeta.real, zeta.imag


def g_dirichlet(y):
    """Half-plane Green's function vanishing on the interval (-1, 1).

    Harmonic in the upper half-plane, zero on the interval, reflecting on the
    rest of the real axis and ``~ ln|y| + ln 2`` at infinity.  In elliptic
    coordinates it is simply the radial coordinate ``alpha``.
    """
    alpha, _ = elliptic_angles(y)
    return alpha


def dirichlet_flux(y1):
    """Inward flux ``-d_n g`` of :func:`g_dirichlet` on the interval."""
    y1 = np.asarray(y1, dtype=float)
    return 1.0 / np.sqrt(1.0 - y1**2)


# ---------------------------------------------------------------------------
# interval Steklov basis
# ---------------------------------------------------------------------------

def _overlap_matrix(size):
    """Projection integrals ``A[n, m]`` for n, m = 0..size."""
    n = np.arange(size + 1)
    d = n[:, None] - n[None, :]
    s = n[:, None] + n[None, :]
    even = (s % 2 == 0)
    with np.errstate(divide="ignore"):
        val = 1.0 / (1.0 - d.astype(float) ** 2) + 1.0 / (1.0 - s.astype(float) ** 2)
    return np.where(even, 2.0 / np.pi * val, 0.0)


@dataclass(frozen=True)
class IntervalSteklovBasis:
    """Eigenpairs of the interval Steklov problem in the half-plane.

    ``mu[k]`` ascend with ``mu[0] = 0``; ``coeffs[k, n]`` are the weights of
    ``cos(n theta) exp(-n alpha)`` and ``coeffs[k, 0]`` is the far-field value.
    """

    mu: np.ndarray
    coeffs: np.ndarray
    truncation: int

    @property
    def count(self):
        return self.mu.size

    @property
    def far_field(self):
        return self.coeffs[:, 0]

    @property
    def even_modes(self):
        """Indices of symmetric modes, starting with the constant one."""
        return np.arange(0, self.count, 2)

    def even_data(self, modes=None):
        """``(mu_2k, Psi_2k(inf)^2)`` for the non-trivial even modes."""
        idx = self.even_modes[1:]
        if modes is not None:
            idx = idx[:modes]
        return self.mu[idx], self.coeffs[idx, 0] ** 2


def _parity_block(amat, parity, size):
    """Diagonalise one parity block; returns (mu, c) with c[:, 0] filled."""
    n = np.arange(parity if parity else 2, size + 1, 2)
    if n.size == 0:
        return np.empty(0), np.empty((0, size + 1))
    a00 = amat[0, 0]
    s = amat[np.ix_(n, n)] - np.outer(amat[n, 0], amat[0, n]) / a00
    scale = 1.0 / np.sqrt(n)
    sym = s * scale[:, None] * scale[None, :]
    lam, vec = linalg.eigh(sym)
    keep = lam > 0
    lam, vec = lam[keep], vec[:, keep]
    mu = 1.0 / lam
    c = np.zeros((mu.size, size + 1))
    c[:, n] = (vec * scale[:, None]).T * np.sqrt(2.0 * mu / np.pi)[:, None]
    c[:, 0] = -(c[:, n] @ amat[n, 0]) / a00
    return mu, c


def _orient(c, odd):
    # even modes: positive at the patch centre; odd modes: increasing there
    n = np.arange(c.shape[1])
    if odd:
        probe = c @ (n * np.sin(n * np.pi / 2))
    else:
        probe = c @ np.cos(n * np.pi / 2)
    sign = np.where(probe < 0, -1.0, 1.0)
    return c * sign[:, None]


def build_basis(count=DEFAULT_COUNT, truncation=DEFAULT_TRUNCATION):
    """Solve the truncated interval Steklov problem.

    Parameters
    ----------
    count : int
        Number of eigenpairs returned, the constant mode included.
    truncation : int
        Number of cosine harmonics kept (must be at least ``2 * count``).
    """
    count, truncation = int(count), int(truncation)
    if count < 1:
        raise ValueError("count must be at least 1")
    if truncation < 2 * count:
        raise ValueError(f"truncation {truncation} < 2*count = {2 * count}")
    amat = _overlap_matrix(truncation)
    if not np.all(np.isfinite(amat)):
        raise NumericalError("non-finite entries in the interval overlap matrix")
    try:
        mu_e, c_e = _parity_block(amat, 0, truncation)
        mu_o, c_o = _parity_block(amat, 1, truncation)
    except linalg.LinAlgError as exc:
        raise NumericalError(f"interval eigensolve failed: {exc}") from exc
    c_e, c_o = _orient(c_e, False), _orient(c_o, True)

    mu = np.concatenate([mu_e, mu_o])
    c = np.vstack([c_e, c_o])
    parity = np.concatenate([np.zeros(mu_e.size), np.ones(mu_o.size)])
    order = np.lexsort((parity, mu))
    mu, c = mu[order][: count - 1], c[order][: count - 1]
    if mu.size < count - 1:
        raise NumericalError("not enough positive eigenvalues; increase truncation")

    constant = np.zeros((1, truncation + 1))
    constant[0, 0] = 1.0 / np.sqrt(2.0)
    return IntervalSteklovBasis(mu=np.concatenate([[0.0], mu]),
                                coeffs=np.vstack([constant, c]),
                                truncation=truncation)


def psi_eval(basis, k, y):
    """Evaluate the k-th eigenfunction at half-plane points ``y`` (..., 2)."""
    if not 0 <= k < basis.count:
        raise IndexError(f"mode {k} outside 0..{basis.count - 1}")
    alpha, theta = elliptic_angles(y)
    w = np.exp(-alpha + 1j * theta)
    return polynomial.polyval(w, basis.coeffs[k]).real


def psi_on_interval(basis, k, y1):
    """Restriction ``Psi_k(y1, 0)`` for ``|y1| <= 1``."""
    if not 0 <= k < basis.count:
        raise IndexError(f"mode {k} outside 0..{basis.count - 1}")
    return chebyshev.chebval(np.clip(y1, -1.0, 1.0), basis.coeffs[k])


# ---------------------------------------------------------------------------
# C(mu)
# ---------------------------------------------------------------------------

def _tail_sum(mu, start):
    """Sum over k >= start of 1 / (pi k (pi k + mu)), vectorised in mu."""
    mu = np.asarray(mu, dtype=float)
    small = np.abs(mu) < 1e-6
    safe = np.where(small, 1.0, mu)
    big = (special.digamma(start + safe / np.pi) - special.digamma(start)) / (np.pi * safe)
    tiny = special.polygamma(1, start) / np.pi**2 + mu * special.polygamma(2, start) / (2 * np.pi**3)
    return np.where(small, tiny, big)


@dataclass(frozen=True)
class CFunction:
    """Far-field constant of the half-plane Robin Green's function.

    ``C(mu) = ln 2 + pi/(2 mu) + pi * sum_k Psi_2k(inf)^2 / (mu_2k + mu)``,
    optionally completed by the large-k surrogate for the discarded modes.
    """

    basis: IntervalSteklovBasis
    tail: bool = True
    modes: int | None = None
    _even: tuple = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "_even", self.basis.even_data(self.modes))

    @property
    def poles(self):
        """Pole locations ``-mu_{2k}``, k = 0, 1, ... (the first is 0)."""
        return np.concatenate([[0.0], -self._even[0]])

    @property
    def retained(self):
        return self._even[0].size

    def _check_poles(self, mu):
        gap = np.abs(np.asarray(mu, dtype=float)[..., None] - self.poles)
        if np.any(gap < POLE_RADIUS):
            hit = int(np.argmin(gap.reshape(-1, gap.shape[-1]).min(axis=0)))
            raise PoleError(f"C(mu) evaluated at the pole mu = {self.poles[hit]:.12g}",
                            index=hit)

    def __call__(self, mu):
        mu = np.asarray(mu, dtype=float)
        self._check_poles(mu)
        mu2k, w2 = self._even
        val = np.log(2.0) + np.pi / (2.0 * mu)
        val = val + np.pi * np.sum(w2 / (mu2k + mu[..., None]), axis=-1)
        if self.tail:
            val = val + _tail_sum(mu, self.retained + 1)
        return val[()] if val.ndim == 0 else val

    def derivative(self, mu):
        """dC/dmu, used by the secant polish of root searches."""
        mu = np.asarray(mu, dtype=float)
        self._check_poles(mu)
        mu2k, w2 = self._even
        val = -np.pi / (2.0 * mu**2) - np.pi * np.sum(w2 / (mu2k + mu[..., None]) ** 2, axis=-1)
        return val[()] if val.ndim == 0 else val


def c_function(cfun, mu):
    """Evaluate ``C(mu)``; raises :class:`PoleError` at ``mu = -mu_{2k}``."""
    return cfun(mu)


def g_robin(basis, mu, y, modes=None):
    """Half-plane Green's function with Robin parameter ``mu`` on the interval.

    Spectral sum over the even Steklov modes (no tail correction); the far-field
    constant equals ``CFunction(basis, tail=False, modes=modes)(mu)``.
    """
    cfun = CFunction(basis, tail=False, modes=modes)
    cfun._check_poles(mu)
    y = _as_points(y)
    val = g_dirichlet(y) + np.pi / (2.0 * mu)
    idx = basis.even_modes[1:]
    if modes is not None:
        idx = idx[:modes]
    alpha, theta = elliptic_angles(y)
    w = np.exp(-alpha + 1j * theta)
    for k in idx:
        psi = polynomial.polyval(w, basis.coeffs[k]).real
        val = val + np.pi * basis.coeffs[k, 0] * psi / (mu + basis.mu[k])
    return val


@dataclass(frozen=True)
class TaylorCoeffs:
    """Series and exact Taylor coefficients of ``C(mu) - pi/(2 mu)``."""

    series: np.ndarray          # C_1 .. C_nmax
    exact_c1: float = EXACT_C1
    exact_c2: float = EXACT_C2

    def __getitem__(self, n):
        return self.series[n - 1]


def taylor_coeffs(basis, n_max=2, modes=None, tail=False):
    """Taylor coefficients ``C_n`` from the spectral sum.

    ``modes`` limits the number of even modes used; ``tail`` appends the
    large-k surrogate (a Hurwitz zeta sum).
    """
    if basis.count < 21:
        raise ValueError("taylor_coeffs needs a basis with at least 10 even modes")
    mu2k, w2 = basis.even_data(modes)
    out = np.empty(n_max)
    for n in range(1, n_max + 1):
        val = np.pi * np.sum(w2 / mu2k**n)
        if n == 1:
            val += np.log(2.0)
        if tail:
            val += np.pi ** (-1 - n) * special.zeta(n + 1, mu2k.size + 1)
        out[n - 1] = val
    return TaylorCoeffs(series=out)


# ---------------------------------------------------------------------------
# cache sidecar
# ---------------------------------------------------------------------------

def cache_path(count, truncation, directory=None):
    directory = Path(directory or os.environ.get(CACHE_ENV) or
                     Path.home() / ".cache" / "narrowescape")
    return directory / f"basis_K{count}_M{truncation}_v{FORMAT_VERSION}.npz"


def save_basis(basis, path):
    header = {"K": basis.count, "M": basis.truncation, "format-version": FORMAT_VERSION}
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    np.savez(path, header=np.frombuffer(json.dumps(header).encode(), dtype=np.uint8),
             coeffs=np.ascontiguousarray(basis.coeffs, dtype="<f8"),
             mu=np.ascontiguousarray(basis.mu, dtype="<f8"))


def load_basis(path):
    with np.load(path) as data:
        header = json.loads(bytes(data["header"]).decode())
        if header.get("format-version") != FORMAT_VERSION:
            raise ValueError("basis cache format mismatch")
        return IntervalSteklovBasis(mu=data["mu"].copy(), coeffs=data["coeffs"].copy(),
                                    truncation=int(header["M"]))


def cached_basis(count=DEFAULT_COUNT, truncation=DEFAULT_TRUNCATION, directory=None):
    """Build a basis, reusing a versioned sidecar file when one exists."""
    path = cache_path(count, truncation, directory)
    if path.exists():
        try:
            basis = load_basis(path)
            if basis.count == count and basis.truncation == truncation:
                return basis
        except (ValueError, KeyError, OSError):
            pass
    basis = build_basis(count, truncation)
    try:
        save_basis(basis, path)
    except OSError:
        pass
    return basis


_DEFAULT = {}


def default_basis():
    """Process-wide default basis (K = 101, M = 256), built once."""
    if "basis" not in _DEFAULT:
        _DEFAULT["basis"] = build_basis()
    return _DEFAULT["basis"]


def default_cfunction():
    if "cfun" not in _DEFAULT:
        _DEFAULT["cfun"] = CFunction(default_basis())
    return _DEFAULT["cfun"]
