import numpy as np
import pytest

from narrowescape import steklov_asymptotics as sa
from narrowescape.capture_asymptotics import (PatchSpec, Scene, equally_spaced_scene,
                                              kappa_exact)
from narrowescape.errors import DegenerateConfigError, ResonanceError, SceneError
from narrowescape.geometry_greens import disk
from narrowescape.halfplane_basis import EXACT_C1

from conftest import antipodal


def two_steklov(e1, e2, angle=2.0):
    return Scene(disk(), (PatchSpec(0.0, e1, "steklov"), PatchSpec(angle, e2, "steklov")))


def test_equally_spaced_closed_form():
    n, eps = 4, 0.05
    spec = sa.sn_spectrum(equally_spaced_scene(n, eps, "steklov"))
    nu = -1 / np.log(eps)
    closed = sorted(np.pi * nu / (2 * eps * (1 + nu * (kappa_exact(n, j) + EXACT_C1)))
                    for j in range(1, n))
    assert spec.sigma[0] == 0.0
    assert np.allclose(spec.sigma[1:], closed, rtol=1e-10)


def test_two_patch_inverse_eigenvalue():
    e1, e2 = 0.05, 0.08
    scene = two_steklov(e1, e2)
    spec = sa.sn_spectrum(scene)
    g = scene.green_matrix().entries
    inv = (2 * e1 * e2 / (np.pi * (e1 + e2))) * (-np.log(e1 * e2) + 2 * EXACT_C1
                                                  + g[0, 0] + g[1, 1] - 2 * g[0, 1])
    assert 1 / spec.sigma[1] == pytest.approx(inv, rel=1e-12)


def test_sn_normalisation():
    e = np.array([0.05, 0.08])
    spec = sa.sn_spectrum(two_steklov(*e))
    a = spec.coeffs[1]
    assert np.sum(a**2 / e) == pytest.approx(2 * spec.sigma[1]**2 / np.pi**2, rel=1e-12)
    assert a.sum() == pytest.approx(0.0, abs=1e-12)
    assert np.all(spec.coeffs[0] == 0)


def test_antisymmetric_mode_restriction(basis):
    spec = sa.sn_spectrum(antipodal(0.05, 0.05, "steklov", "steklov"))
    y = np.linspace(-1, 1, 101)[1:-1]
    r1 = sa.sn_eigenfunction_restriction(spec, 1, 1, basis, y)
    r2 = sa.sn_eigenfunction_restriction(spec, 1, 2, basis, y)
    assert np.allclose(r1, -r2, atol=1e-12)
    # no sign change on a patch for the lowest non-constant mode
    assert np.all(r1 < 0) or np.all(r1 > 0)
    with pytest.raises(IndexError):
        sa.sn_eigenfunction_restriction(spec, 0, 1, basis, y)


def test_sn_scene_checks():
    with pytest.raises(SceneError):
        sa.sn_spectrum(antipodal(0.05, 0.05, "steklov", "dirichlet"))
    with pytest.raises(DegenerateConfigError):
        sa.sn_spectrum(Scene(disk(), (PatchSpec(0.0, 0.05, "steklov"),)))


def test_single_patch_law(basis):
    vals = sa.single_patch_spectrum(0.01, 4, basis)
    assert vals == pytest.approx(basis.mu[1:5] / 0.01)
    assert vals[0] == pytest.approx(2.0061 / 0.01, rel=1e-4)


def test_snd_constant_two_patches():
    scene = antipodal(0.1, 0.1, "steklov", "dirichlet")
    g = scene.green_matrix().entries
    expect = np.log(0.1 * 0.1 / 2) - (g[0, 0] + g[1, 1] - 2 * g[0, 1])
    assert sa.snd_constant(scene) == pytest.approx(expect, rel=1e-12)


def test_snd_roots_interlace(cfun, basis):
    roots = sa.snd_roots(cfun, -10.0, 6)
    even = basis.mu[basis.even_modes]
    assert np.all((roots > even[:6]) & (roots < even[1:7]))
    # small root: C(-m) ~ C1 - pi/(2 m) gives m ~ pi / (2 (C1 - constant))
    assert roots[0] == pytest.approx(np.pi / (2 * (10 + EXACT_C1)), rel=2e-2)
    for m, root in enumerate(roots):
        assert float(cfun(-root)) == pytest.approx(-10.0, abs=1e-8)
    # a very negative constant pushes each root onto its lower pole
    deep = sa.snd_roots(cfun, -1e6, 4)
    assert np.allclose(deep, even[:4], atol=1e-4)


def test_snd_principal_closed_form():
    e1, e2 = np.pi / 12, np.pi / 6
    res = sa.snd_principal(Scene(disk(), (PatchSpec(0.0, e1, "steklov"),
                                          PatchSpec(np.pi, e2))))
    # two antipodal patches: 1/(eps1 sigma0) = (2/pi)(-ln(eps1 eps2 / 2) + C1 + 2 ln 2)
    expect = (2 / np.pi) * (-np.log(e1 * e2 / 2) + EXACT_C1 + 2 * np.log(2))
    assert res.inverse_scaled == pytest.approx(expect, rel=1e-12)
    assert res.roots[0] / e1 == pytest.approx(res.sigma0, rel=0.05)
    assert res.higher.size == 6


def test_snd_restriction_normalised(basis):
    res = sa.snd_principal(antipodal(0.05, 0.1, "steklov", "dirichlet"))
    t, w = np.polynomial.legendre.leggauss(400)
    vals = sa.snd_restriction(res, 0, basis, t)
    assert res.half_length * np.sum(w * vals**2) == pytest.approx(1.0, rel=1e-3)
    assert np.all(vals > 0)


def test_snd_layout_checks():
    with pytest.raises(SceneError):
        sa.snd_principal(antipodal(0.1, 0.1, "dirichlet", "steklov"))
    with pytest.raises(DegenerateConfigError):
        sa.snd_constant(Scene(disk(), (PatchSpec(0.0, 0.1, "steklov"),)))


def test_restriction_resonance(basis):
    mu2 = basis.mu[basis.even_modes][1]
    with pytest.raises(ResonanceError):
        sa.restriction_series(basis, mu2, np.zeros(1))


def test_large_n_sum_limits():
    # at zero coefficient and zeta = 0 the integrand is xi / (1 + 0) -> 1/2
    assert sa.large_n_sum(0.0, 0.0) == pytest.approx(0.5, rel=1e-12)
    z = 3.0
    closed = (z - np.log1p(z)) / z**2
    assert sa.large_n_sum(z, 0.0) == pytest.approx(closed, rel=1e-12)


@pytest.mark.parametrize("eps", [1e-4, 1e-3, 0.01, 0.04])
def test_snd_equally_spaced_modes(eps):
    vals = {m: sa.snd_equally_spaced(64, eps, 0.2 / eps, m) for m in sa.SND_MODES}
    assert vals["largeN"] == pytest.approx(vals["discrete"], rel=1e-2)
    assert vals["loworder"] < vals["discrete"]


def test_snd_equally_spaced_matches_dense():
    n, eps, ratio = 8, 0.02, 3.0
    eps1 = ratio * eps / 2
    patches = [PatchSpec(0.0, eps1, "steklov")] + [PatchSpec(2 * np.pi * m / n, eps)
                                                   for m in range(1, n)]
    res = sa.snd_principal(Scene(disk(), tuple(patches)))
    assert sa.snd_equally_spaced(n, eps, ratio) == pytest.approx(res.inverse_scaled, rel=1e-10)


def test_snd_equally_spaced_guards():
    with pytest.raises(DegenerateConfigError):
        sa.snd_equally_spaced(64, 0.05, 1.0)
    with pytest.raises(ValueError):
        sa.snd_equally_spaced(16, 0.01, 1.0, "cubic")


@pytest.mark.parametrize("eps,tol", [(1e-3, 1e-3), (0.05, 5e-3)])
def test_restriction_l2_normalisation(basis, eps, tol):
    # the coefficient normalisation fixes the patch L2 norm up to O(sigma eps)
    spec = sa.sn_spectrum(two_steklov(eps, 1.6 * eps))
    t, w = np.polynomial.legendre.leggauss(400)
    total = sum(spec.half_lengths[i - 1]
                * np.sum(w * sa.sn_eigenfunction_restriction(spec, 1, i, basis, t) ** 2)
                for i in (1, 2))
    assert total == pytest.approx(1.0, abs=tol)
