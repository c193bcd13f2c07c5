import numpy as np
import pytest
from numpy.polynomial import legendre

from narrowescape import halfplane_basis as hb
from narrowescape.errors import PoleError

# reference values of the interval Steklov table (k = 1..10)
TABLE_MU_ODD = [2.0061, 5.1253, 8.2600, 11.3982, 14.5378, 17.6780, 20.8187, 23.9596, 27.1006, 30.2418]
TABLE_MU_EVEN = [3.4533, 6.6286, 9.7839, 12.9330, 16.0794, 19.2242, 22.3682, 25.5116, 28.6547, 31.7974]
TABLE_PSI2 = [0.0664, 0.0391, 0.0279, 0.0218, 0.0178, 0.0151, 0.0131, 0.0116, 0.0104, 0.0094]


def test_dirichlet_green():
    assert hb.g_dirichlet(np.array([0.3, 0.0])) == pytest.approx(0.0, abs=1e-15)
    y = np.array([0.0, 1e6])
    assert hb.g_dirichlet(y) - np.log(1e6) == pytest.approx(np.log(2), abs=1e-5)
    # total flux through the interval is pi (Gauss-Chebyshev quadrature is exact for 1)
    n = 64
    nodes = np.cos((2 * np.arange(n) + 1) * np.pi / (2 * n))
    flux = np.pi / n * np.sum(hb.dirichlet_flux(nodes) * np.sqrt(1 - nodes**2))
    assert flux == pytest.approx(np.pi, rel=1e-14)


def test_table_values(table_basis):
    mu = table_basis.mu
    assert np.allclose(mu[1:21:2], TABLE_MU_ODD, atol=5e-4)
    assert np.allclose(mu[2:21:2], TABLE_MU_EVEN, atol=5e-4)
    assert np.allclose(table_basis.coeffs[2:21:2, 0] ** 2, TABLE_PSI2, atol=5e-4)


def test_constant_mode(table_basis):
    assert table_basis.mu[0] == 0.0
    assert table_basis.coeffs[0, 0] == 1 / np.sqrt(2)
    assert np.all(table_basis.coeffs[0, 1:] == 0)
    y = np.array([[0.3, 0.0], [2.0, 5.0]])
    assert np.allclose(hb.psi_eval(table_basis, 0, y), 1 / np.sqrt(2))


def test_spectrum_increasing(basis):
    assert np.all(np.diff(basis.mu[1:]) > 0)


def test_orthonormal_restrictions(basis):
    t, w = legendre.leggauss(400)
    modes = range(12)
    vals = np.array([hb.psi_on_interval(basis, k, t) for k in modes])
    gram = (vals * w) @ vals.T
    assert np.allclose(gram, np.eye(len(modes)), atol=1e-8)
    assert np.sum(w * vals[2] ** 2) == pytest.approx(1.0, abs=1e-6)


def test_parity(basis):
    y = np.linspace(-0.95, 0.95, 9)
    for k in range(1, 9):
        v, m = hb.psi_on_interval(basis, k, y), hb.psi_on_interval(basis, k, -y)
        assert np.allclose(v, m if k % 2 == 0 else -m, atol=1e-12)
    assert np.allclose(basis.far_field[1::2], 0.0, atol=1e-14)


def test_psi2_far_field_and_shape(basis):
    far = hb.psi_eval(basis, 2, np.array([0.0, 1e7]))
    assert far == pytest.approx(basis.coeffs[2, 0], abs=1e-6)
    # sign pattern of cos(pi y1): positive at the centre, negative near the ends
    v = hb.psi_on_interval(basis, 2, np.array([-0.9, 0.0, 0.9]))
    assert v[1] > 0 and v[0] < 0 and v[2] < 0


def test_c_function_limits(cfun):
    assert hb.c_function(cfun, 1e6) == pytest.approx(np.log(2), abs=1e-3)
    assert hb.c_function(cfun, 0.01) == pytest.approx(np.pi / 0.02 + hb.EXACT_C1, abs=0.01)
    assert hb.c_function(cfun, 0.01) == pytest.approx(157.88, abs=0.01)


def test_c_function_poles(cfun):
    with pytest.raises(PoleError):
        cfun(0.0)
    with pytest.raises(PoleError):
        cfun(-cfun.basis.mu[2])


def test_c_function_decreasing_between_poles(cfun):
    mu = np.linspace(0.01, 50, 400)
    assert np.all(np.diff(cfun(mu)) < 0)
    poles = cfun.poles
    for a, b in zip(poles[1:4], poles[:3]):
        grid = np.linspace(a + 1e-6, b - 1e-6, 300)
        vals = cfun(grid)
        assert np.all(np.diff(vals) < 0)
        assert vals[0] > 1e4 and vals[-1] < -1e4


def test_taylor_coefficients(basis):
    ten = hb.taylor_coeffs(basis, 2, modes=10)
    assert ten[1] == pytest.approx(0.7976, abs=2e-3)
    assert ten[2] == pytest.approx(0.0222, abs=5e-4)
    full = hb.taylor_coeffs(basis, 2, tail=True)
    assert full[1] == pytest.approx(hb.EXACT_C1, abs=5e-3)
    assert hb.EXACT_C1 == pytest.approx(0.8069, abs=1e-4)
    assert hb.EXACT_C2 == pytest.approx(0.0223, abs=1e-4)
    # convergence toward the exact value as modes are added
    errs = [abs(hb.taylor_coeffs(basis, 1, modes=m)[1] - hb.EXACT_C1) for m in (5, 10, 20, 40)]
    assert errs == sorted(errs, reverse=True)


def test_robin_green(basis):
    cf = hb.CFunction(basis, tail=False)
    far = [hb.g_robin(basis, 1.0, np.array([0.0, r])) - np.log(r) for r in (50.0, 500.0)]
    assert abs(far[1] - cf(1.0)) < abs(far[0] - cf(1.0)) + 1e-12
    assert far[1] == pytest.approx(cf(1.0), abs=5e-3)
    assert hb.g_robin(basis, 1.0, np.array([0.5, 0.0])) > 0
    y = np.stack([np.linspace(-0.95, 0.95, 25), np.zeros(25)], axis=1)
    assert np.all(hb.g_robin(basis, -0.5, y) < 0)


def test_robin_condition_on_interval(basis):
    # d g / d y2 = mu g on the interval, tested against the first even modes
    # (pointwise values of a truncated spectral sum converge slowly)
    t, w = legendre.leggauss(200)
    h = 1e-6
    for mu in (0.5, 2.0, 5.0):
        on = hb.g_robin(basis, mu, np.stack([t, np.zeros_like(t)], axis=1))
        up = hb.g_robin(basis, mu, np.stack([t, np.full_like(t, h)], axis=1))
        resid = (up - on) / h - mu * on
        for k in (0, 2, 4):
            psi = hb.psi_on_interval(basis, k, t)
            assert abs(np.sum(w * resid * psi)) < 1e-2


def test_cache_round_trip(tmp_path, monkeypatch):
    monkeypatch.setenv(hb.CACHE_ENV, str(tmp_path))
    first = hb.cached_basis(21, 100)
    assert hb.cache_path(21, 100).exists()
    again = hb.cached_basis(21, 100)
    assert np.array_equal(first.mu, again.mu)
    assert "v1" in hb.cache_path(21, 100).name


def test_truncation_guard():
    with pytest.raises(ValueError):
        hb.build_basis(60, 100)
