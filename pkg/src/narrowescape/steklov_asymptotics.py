"""Small-patch asymptotics of mixed Steklov eigenproblems.

Two settings are covered:

* Steklov-Neumann (SN): ``N`` Steklov patches on a reflecting boundary.  The
  first ``N`` eigenvalues are those of ``M1^{-1} B1`` with
  ``M1 = I + (I - nu E/nubar) nu (G + C1 I)`` and
  ``B1 = (I - nu E/nubar) nu eta``, ``eta = diag(pi / (2 eps_j))``.  They are
  computed from the symmetric matrix ``eta^{1/2} M1^{-1} (I - nu E/nubar) nu eta^{1/2}``.
* Steklov-Neumann-Dirichlet (SND): one Steklov patch (the first) and ``N - 1``
  Dirichlet patches.  The eigenvalues solve ``C(-sigma eps_1) = C`` for a
  configuration constant ``C`` obtained from a rank-one determinant identity.

Mode indices are 0-based, patch indices 1-based.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate, linalg

from .capture_asymptotics import (LOG_HALF, Scene, check_admissible, circulant_spectrum,
                                  reduced_matrix, _solve)
from .errors import (AsymptoticsWarning, DegenerateConfigError, InadmissibleError,
                     NumericalError, ResonanceError, RootError, SceneError)
from .halfplane_basis import (EXACT_C1, POLE_RADIUS, default_basis, default_cfunction,
                              psi_on_interval)

SYMMETRY_TOL = 1e-8
LINEAR_REGIME = 0.5
SND_REGIME = 0.3
BRACKET_WIDTH = 1e-6
SECANT_STEPS = 5
LARGE_N_CONSTANT = 4 * np.pi * np.exp(-11.0 / 6.0)


def _steklov_nu(eps):
    return -1.0 / np.log(np.asarray(eps, dtype=float))


def _gauge_warning(nu, notes):
    try:
        check_admissible(nu)
    except InadmissibleError as exc:
        notes.append(f"outside the small-patch regime: {exc}")


# ---------------------------------------------------------------------------
# restriction series on a patch
# ---------------------------------------------------------------------------

def restriction_series(basis, shift, samples):
    """``sum_k Psi_2k(inf) Psi_2k(y) / (mu_2k - shift)`` over all even modes.

    ``shift`` is ``sigma * eps`` of the patch.  Also returns
    ``sum_k Psi_2k(inf)^2 / (mu_2k - shift)^2``, the squared L2 norm on (-1, 1).
    """
    samples = np.asarray(samples, dtype=float)
    idx = basis.even_modes
    mu = basis.mu[idx]
    gap = mu - shift
    hit = np.flatnonzero(np.abs(gap) < POLE_RADIUS)
    if hit.size:
        raise ResonanceError(f"sigma * eps = {shift:.12g} resonates with mu_{2 * hit[0]}",
                             mode=int(idx[hit[0]]))
    far = basis.far_field[idx]
    values = np.zeros_like(samples)
    for k, f, g in zip(idx, far, gap):
        values = values + f * psi_on_interval(basis, k, samples) / g
    return values, float(np.sum(far**2 / gap**2))


# ---------------------------------------------------------------------------
# Steklov-Neumann
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SnSpectrum:
    """First ``N`` SN eigenvalues with their patch coefficient vectors.

    ``coeffs[j]`` is the vector ``A`` of mode ``j`` normalised so that
    ``sum_i A_i^2 / eps_i = 2 sigma_j^2 / pi^2`` (zero for the constant mode).
    """

    sigma: np.ndarray
    coeffs: np.ndarray
    scales: np.ndarray
    nu: np.ndarray
    half_lengths: np.ndarray
    scene: Scene
    warnings: tuple = field(default=())


def sn_matrices(scene):
    """``(M1, B1hat, eta)`` of the SN problem; ``B1 = B1hat eta``."""
    eps = scene.half_lengths
    nu = _steklov_nu(eps)
    gmat = scene.green_matrix().entries
    n = nu.size
    proj = np.eye(n) - np.outer(nu, np.ones(n)) / nu.sum()
    m1 = reduced_matrix(nu, gmat + EXACT_C1 * np.eye(n))
    return m1, proj * nu[None, :], np.pi / (2 * eps)


def sn_spectrum(scene, basis=None):
    """Asymptotic SN eigenvalues ``sigma_0 = 0 < sigma_1 <= ... <= sigma_{N-1}``."""
    if any(c != "steklov" for c in scene.conditions):
        raise SceneError("sn_spectrum needs Steklov patches only")
    n = scene.size
    if n < 2:
        raise DegenerateConfigError("sn_spectrum needs at least two patches; "
                                    "use single_patch_spectrum for one")
    notes = list(scene.warnings)
    eps = scene.half_lengths
    nu = _steklov_nu(eps)
    _gauge_warning(nu, notes)
    m1, bhat, eta = sn_matrices(scene)
    root = np.sqrt(eta)
    try:
        core = _solve(m1, bhat)
    except InadmissibleError as exc:
        raise InadmissibleError(f"M1 is singular: {exc}") from exc
    dhat = root[:, None] * core * root[None, :]
    asym = np.max(np.abs(dhat - dhat.T))
    if asym > SYMMETRY_TOL * max(1.0, np.max(np.abs(dhat))):
        raise NumericalError(f"symmetrised SN matrix is not symmetric (defect {asym:.3g})")
    vals, vecs = linalg.eigh(0.5 * (dhat + dhat.T))
    # the constant eigenfunction: B1 annihilates e, so eta^{1/2} e spans the kernel
    kernel = root / np.linalg.norm(root)
    zero = int(np.argmax(np.abs(vecs.T @ kernel)))
    order = [zero] + [i for i in np.argsort(vals) if i != zero]
    sigma = np.concatenate([[0.0], vals[order[1:]]])
    coeffs = np.zeros((n, n))
    scales = np.zeros(n)
    for j in range(1, n):
        a = vecs[:, order[j]] / root
        scale = np.sqrt(2.0) * sigma[j] / (np.pi * np.sqrt(np.sum(a**2 / eps)))
        a = a * scale
        lead = np.flatnonzero(np.abs(a) > 1e-12 * np.max(np.abs(a)))[0]
        if a[lead] < 0:
            a = -a
        coeffs[j] = a
        scales[j] = scale
    if np.any(sigma[1:] < 0):
        notes.append("negative SN eigenvalue approximation: patches are too large")
    if np.max(eps * sigma[-1]) > LINEAR_REGIME:
        notes.append("linearised C(mu) regime exceeded: max eps_j sigma_{N-1} "
                     f"= {np.max(eps * sigma[-1]):.3g} > {LINEAR_REGIME}")
    return SnSpectrum(sigma=sigma, coeffs=coeffs, scales=scales, nu=nu, half_lengths=eps,
                      scene=scene, warnings=tuple(notes))


def sn_eigenfunction_restriction(spec, j, i, basis=None, samples=None):
    """Values of mode ``j`` on patch ``i`` at local coordinates ``samples`` in (-1, 1)."""
    if not 1 <= j < spec.sigma.size:
        raise IndexError("mode index must satisfy 1 <= j <= N - 1")
    basis = basis or default_basis()
    if samples is None:
        samples = np.linspace(-1, 1, 201)[1:-1]
    eps = spec.half_lengths[i - 1]
    series, _ = restriction_series(basis, spec.sigma[j] * eps, samples)
    return np.pi * spec.coeffs[j, i - 1] * series


def single_patch_spectrum(eps, count, basis=None):
    """Single Steklov patch law ``sigma_j ~ mu_j / eps`` for j = 1..count."""
    basis = basis or default_basis()
    if count >= basis.count:
        raise ValueError("basis has too few modes")
    return basis.mu[1:count + 1] / eps


# ---------------------------------------------------------------------------
# Steklov-Neumann-Dirichlet
# ---------------------------------------------------------------------------

def _snd_layout(scene):
    cond = scene.conditions
    if scene.size < 2:
        raise DegenerateConfigError("SND needs one Steklov and at least one Dirichlet patch")
    if cond[0] != "steklov" or any(c != "dirichlet" for c in cond[1:]):
        raise SceneError("SND scenes need the Steklov patch first and Dirichlet patches "
                         "after it; other mixtures are not covered")
    eps = scene.half_lengths
    nu = np.concatenate([[-1.0 / np.log(eps[0])], -1.0 / (np.log(eps[1:]) + LOG_HALF)])
    return eps, nu


def _snd_vector(scene):
    eps, nu = _snd_layout(scene)
    gmat = scene.green_matrix().entries
    m0 = reduced_matrix(nu, gmat)
    rhs = -nu / nu.sum()
    rhs[0] += 1.0
    return eps, nu, _solve(m0, rhs)


def snd_constant(scene, cfun=None):
    """Configuration constant ``C`` of the SND problem (negative and large)."""
    _, nu, w = _snd_vector(scene)
    value = -1.0 / (nu[0] * w[0])
    if value >= 0:
        warnings.warn(f"SND constant C = {value:.6g} is not negative", AsymptoticsWarning,
                      stacklevel=2)
    return float(value)


def snd_roots(cfun, constant, count):
    """Roots ``muhat_{2j}`` (j = 0..count-1) of ``C(-muhat) = constant``.

    Each lies in ``(mu_{2j}, mu_{2j+2})``; found by bisection to width 1e-6
    followed by bracketed secant steps.
    """
    cfun = cfun or default_cfunction()
    poles = -cfun.poles
    if count > poles.size - 1:
        raise ValueError(f"at most {poles.size - 1} roots are available")
    tol = 1e-10 * max(1.0, abs(constant))
    roots = np.empty(count)
    for j in range(count):
        # work in m = muhat: f(m) = C(-m) - constant increases from -inf to +inf
        lo, hi = poles[j] + 2 * POLE_RADIUS, poles[j + 1] - 2 * POLE_RADIUS
        f_lo = float(cfun(-lo)) - constant
        f_hi = float(cfun(-hi)) - constant
        if not (f_lo < 0 < f_hi):
            raise RootError(f"no sign change for root {j} on ({lo:.6g}, {hi:.6g})",
                            interval=(lo, hi), values=(f_lo, f_hi))
        while hi - lo > BRACKET_WIDTH:
            mid = 0.5 * (lo + hi)
            f_mid = float(cfun(-mid)) - constant
            if f_mid < 0:
                lo, f_lo = mid, f_mid
            else:
                hi, f_hi = mid, f_mid
        roots[j] = _polish(cfun, constant, lo, f_lo, hi, f_hi, tol, j)
    return roots


def _polish(cfun, constant, lo, f_lo, hi, f_hi, tol, j, max_iter=200):
    """Secant steps kept inside the bracket (Illinois weighting after the first five).

    Roots near a pole can sit closer to it than the bisection width, and
    there the residual cannot drop below the float resolution of ``C``; the
    search then stops once the bracket is a few ulps wide.
    """
    side = 0
    for it in range(max_iter):
        c = hi - f_hi * (hi - lo) / (f_hi - f_lo)
        if not lo < c < hi:
            c = 0.5 * (lo + hi)
        fc = float(cfun(-c)) - constant
        if abs(fc) < tol or hi - lo <= 8 * np.spacing(hi):
            return c
        if fc < 0:
            lo, f_lo = c, fc
            if side == -1 and it >= SECANT_STEPS:
                f_hi *= 0.5
            side = -1
        else:
            hi, f_hi = c, fc
            if side == 1 and it >= SECANT_STEPS:
                f_lo *= 0.5
            side = 1
    raise RootError(f"root {j} did not converge", interval=(lo, hi))


@dataclass(frozen=True)
class SndResult:
    """Principal SND eigenvalue and its companions.

    ``sigma0`` uses the explicit small-``mu`` inversion of ``C(mu)``;
    ``roots[j]`` solve the full spectral equation so ``roots[0] / eps_1`` is
    an alternative principal value.  ``higher[j - 1] = mu_j / eps_1``.
    """

    constant: float
    sigma0: float
    roots: np.ndarray
    higher: np.ndarray
    coeffs: np.ndarray
    half_length: float
    amplitude: float
    warnings: tuple = field(default=())

    @property
    def inverse_scaled(self):
        """``1 / (eps_1 sigma_0)``."""
        return 1.0 / (self.half_length * self.sigma0)


def snd_principal(scene, cfun=None, roots=5, higher=6):
    """Principal SND eigenvalue with root list and higher-mode approximations."""
    cfun = cfun or default_cfunction()
    basis = cfun.basis
    eps, nu, w = _snd_vector(scene)
    notes = list(scene.warnings)
    _gauge_warning(nu, notes)
    constant = -1.0 / (nu[0] * w[0])
    if constant >= 0:
        notes.append(f"SND constant C = {constant:.6g} is not negative")
    inv = (2.0 / np.pi) * (EXACT_C1 - constant)
    sigma0 = 1.0 / (eps[0] * inv)
    mus = snd_roots(cfun, constant, roots)
    ratio = max(1.0, float(np.max(eps / eps[0])))
    if mus[0] * ratio > SND_REGIME:
        notes.append(f"linearised C(mu) regime exceeded: muhat_0 = {mus[0]:.3g}")
    # null vector of M0 + C nu_1 (e_1 - nu e/nubar) e_1^T is M0^{-1}(e_1 - nu e/nubar)
    _, norm2 = restriction_series(basis, sigma0 * eps[0], np.zeros(1))
    amplitude = 1.0 / np.sqrt(eps[0] * norm2)
    # positive on the Steklov patch: the constant mode term -1/(2 sigma eps) dominates
    amplitude = -amplitude
    coeffs = w * (amplitude / np.pi) / w[0]
    return SndResult(constant=float(constant), sigma0=float(sigma0), roots=mus,
                     higher=basis.mu[1:higher + 1] / eps[0], coeffs=coeffs,
                     half_length=float(eps[0]), amplitude=float(amplitude),
                     warnings=tuple(notes))


def snd_restriction(result, j, basis=None, samples=None):
    """Mode ``j`` on the Steklov patch at local coordinates ``samples``.

    ``j = 0`` uses the full restriction series at ``sigma_0``; ``j >= 1`` uses
    the single-patch approximation ``Psi_j / sqrt(eps_1)``.
    """
    basis = basis or default_basis()
    if samples is None:
        samples = np.linspace(-1, 1, 201)[1:-1]
    eps = result.half_length
    if j == 0:
        series, _ = restriction_series(basis, result.sigma0 * eps, samples)
        return result.amplitude * series
    return psi_on_interval(basis, j, samples) / np.sqrt(eps)


SND_MODES = ("discrete", "largeN", "loworder")


def large_n_sum(zeta, coefficient=1.25):
    """``S(zeta) = 4 int_0^{1/2} xi / (1 + 2 xi (zeta + a pi^2 xi^2 / 9)) dxi``."""
    def integrand(xi):
        return xi / (1 + 2 * xi * (zeta + coefficient * np.pi**2 * xi**2 / 9))
    val, _ = integrate.quad(integrand, 0.0, 0.5, epsabs=1e-13, epsrel=1e-12)
    return 4 * val


def snd_equally_spaced(count, eps, ratio, mode="discrete", coefficient=1.25):
    """``1 / (eps_1 sigma_0)`` for one Steklov and ``count - 1`` Dirichlet patches.

    All patches are equally spaced on the unit disk; Dirichlet patches have
    half-length ``eps`` and the Steklov one ``eps_1 = ratio * eps / 2``.
    """
    if mode not in SND_MODES:
        raise ValueError(f"mode must be one of {SND_MODES}")
    if count * eps >= np.pi:
        raise DegenerateConfigError(f"N eps = {count * eps:.4g} >= pi: patches are not "
                                    "well separated")
    if mode == "discrete":
        if count < 3:
            raise ValueError("discrete mode needs N >= 3")
        kap = circulant_spectrum(count).kappa[:-1]
        lead = count / np.sum(1.0 / (np.log(2.0 / eps) + kap))
    else:
        if count < 16:
            warnings.warn("large-N formulas are meant for N >= 16", AsymptoticsWarning,
                          stacklevel=2)
        zeta = -np.log(count * eps / LARGE_N_CONSTANT)
        if mode == "largeN":
            lead = 1.0 / large_n_sum(zeta, coefficient)
        elif abs(zeta) < 1e-4:
            lead = 1.0 / (0.5 - zeta / 3 + zeta**2 / 4)
        else:
            lead = zeta**2 / (zeta - np.log1p(zeta))
    return float((2.0 / np.pi) * (lead + EXACT_C1 - np.log(ratio)))
