"""Acceptance criteria 1 to 11.

Each test carries ``@pytest.mark.acceptance(n)``; the conftest hook prints one
PASS/FAIL line per criterion at the end of the run.  Reference numbers are
tabulated values, closed forms or independent oracle values.
"""

import time

import numpy as np
import pytest

from narrowescape import capture_asymptotics as ca
from narrowescape import halfplane_basis as hb
from narrowescape import steklov_asymptotics as sa
from narrowescape.capture_asymptotics import PatchSpec, Scene
from narrowescape.geometry_greens import disk
from narrowescape.oracle import collocation as co
from narrowescape.oracle import montecarlo as mc

import test_properties as props

MU_ODD = [2.0061, 5.1253, 8.2600, 11.3982, 14.5378, 17.6780, 20.8187, 23.9596, 27.1006, 30.2418]
MU_EVEN = [3.4533, 6.6286, 9.7839, 12.9330, 16.0794, 19.2242, 22.3682, 25.5116, 28.6547,
           31.7974]
PSI_SQ = [0.0664, 0.0391, 0.0279, 0.0218, 0.0178, 0.0151, 0.0131, 0.0116, 0.0104, 0.0094]

# reference kappa comparison table: rows exact, full, cubic, loworder; j = 1..8
KAPPA_TABLE = {
    16: {"exact": [5.2321, 1.2465, -0.0623, -0.6931, -1.0443, -1.2465, -1.3529, -1.3863],
         "full": [5.2362, 1.2489, -0.0634, -0.6986, -1.0514, -1.2442, -1.3179, -1.2804],
         "cubic": [5.2320, 1.2491, -0.0628, -0.6995, -1.0610, -1.2805, -1.4153, -1.2740],
         "loworder": [5.2362, 1.2320, -0.1014, -0.7680, -1.1680, -1.4347, -1.4939, -1.7680]},
    64: {"exact": [27.8414, 11.8423, 6.5104, 3.8458, 2.2485, 1.1851, 0.4271, -0.1398],
         "full": [27.8459, 11.8467, 6.5147, 3.8498, 2.2521, 1.1881, 0.4293, -0.1388],
         "cubic": [27.846, 11.8470, 6.5147, 3.8499, 2.2524, 1.1886, 0.43021, -0.1372],
         "loworder": [27.8457, 11.8457, 6.5123, 3.8457, 2.2457, 1.1790, 0.4171, -0.1543]},
}
# Cells whose tabulated values cannot be reproduced by any of the four formulas at
# their row. The N=16 j=1 cubic and loworder entries are swapped, and the N=16 j=7
# loworder and j=8 cubic entries hold values belonging to other cells.
TRANSCRIBED = {(16, "cubic", 1), (16, "loworder", 1), (16, "cubic", 8), (16, "loworder", 7)}


def kappa_value(n, row, j):
    return ca.kappa_exact(n, j) if row == "exact" else ca.kappa_asymptotic(n, j, row)


def two_patch_scene(eps1, eps2, cond1="dirichlet", cond2="dirichlet", q1=None, q2=None):
    return Scene(disk(), (PatchSpec(0.0, eps1, cond1, q1), PatchSpec(np.pi, eps2, cond2, q2)))


@pytest.mark.acceptance(1)
def test_interval_steklov_table(record_property):
    start = time.perf_counter()
    basis = hb.build_basis(21, 100)
    elapsed = time.perf_counter() - start
    mu_odd, mu_even = basis.mu[1::2][:10], basis.mu[2::2][:10]
    psi_sq = basis.far_field[2::2][:10] ** 2
    err = max(np.max(np.abs(mu_odd - MU_ODD)), np.max(np.abs(mu_even - MU_EVEN)),
              np.max(np.abs(psi_sq - PSI_SQ)))
    record_property("detail", f"max abs error {err:.2e}, build {elapsed:.2f} s")
    assert err < 5e-4
    assert elapsed < 2.0


@pytest.mark.acceptance(2)
def test_taylor_coefficients(record_property, basis):
    truncated = hb.taylor_coeffs(basis, 2, modes=10)
    tailed = hb.taylor_coeffs(basis, 2, modes=50, tail=True)
    exact_c1, exact_c2 = 1.5 - np.log(2), (21 - 2 * np.pi**2) / (18 * np.pi)
    record_property("detail", f"C1(10) = {truncated[1]:.6f}, C1(50+tail) - exact = "
                              f"{tailed[1] - exact_c1:.1e}, C2 = {truncated[2]:.5f}")
    assert truncated[1] == pytest.approx(0.7976, abs=2e-3)
    assert tailed[1] == pytest.approx(exact_c1, abs=5e-3)
    assert truncated[2] == pytest.approx(0.0222, abs=5e-4)
    assert tailed[2] == pytest.approx(exact_c2, abs=5e-4)


def _kappa_cells(transcribed):
    cells = []
    for n, rows in KAPPA_TABLE.items():
        for row, values in rows.items():
            for j, tabulated in enumerate(values, start=1):
                if ((n, row, j) in TRANSCRIBED) == transcribed:
                    cells.append((n, row, j, tabulated, kappa_value(n, row, j)))
    return cells


@pytest.mark.acceptance(3)
def test_kappa_table(record_property):
    cells = _kappa_cells(False)
    bad = [c for c in cells if abs(c[4] - c[3]) >= 5e-4]
    record_property("detail", f"{len(cells) - len(bad)}/64 cells within 5e-4")
    assert not bad


@pytest.mark.acceptance(3)
@pytest.mark.xfail(strict=True, reason="4 tabulated N=16 cells are transcription errors; "
                                       "see TRANSCRIBED")
def test_kappa_table_transcribed_cells(record_property):
    cells = _kappa_cells(True)
    record_property("detail", "4/64 cells differ: " + ", ".join(
        f"N={n} {row} j={j}: {value:.4f} vs {tabulated}" for n, row, j, tabulated, value in cells))
    # the tabulated values match other cells of the computed table instead
    assert ca.kappa_asymptotic(16, 1, "cubic") == pytest.approx(5.2362, abs=5e-4)
    assert ca.kappa_asymptotic(16, 1, "loworder") == pytest.approx(5.2320, abs=5e-4)
    assert ca.kappa_asymptotic(16, 8, "cubic") == pytest.approx(-1.4939, abs=5e-4)
    for n, row, j, tabulated, value in cells:
        assert value == pytest.approx(tabulated, abs=5e-4)


@pytest.mark.acceptance(4)
def test_splitting_cross_validation(record_property):
    start = time.perf_counter()
    scene = two_patch_scene(0.1, 0.2)
    chi = ca.solve_splitting(scene, 1).chi
    est = mc.mc_splitting(scene, 1, "uniform", mc.McConfig(walkers=100_000))
    oracle, _ = co.collocation_splitting(scene, 1)
    elapsed = time.perf_counter() - start
    record_property("detail", f"chi = {chi:.5f}, MC {est.mean:.5f} +- {est.stderr:.5f} "
                              f"({(est.mean - chi) / est.stderr:+.2f} se), collocation "
                              f"{oracle:.5f}, {elapsed:.1f} s")
    assert est.within(chi, 3.0)
    assert chi == pytest.approx(oracle, rel=1e-2)
    assert elapsed < 60


@pytest.mark.acceptance(5)
def test_robin_curve(record_property):
    worst = 0.0
    for q2 in (1.0, 10.0, 100.0):
        for q1 in np.logspace(-1, 2, 7):
            scene = two_patch_scene(0.1, 0.1, "robin", "robin", q1, q2)
            chi = ca.solve_splitting(scene, 1).chi
            oracle, _ = co.collocation_splitting(scene, 1)
            worst = max(worst, abs(chi - oracle) / oracle)
    record_property("detail", f"max relative deviation {worst:.1e} over 21 points")
    assert worst < 2e-2


@pytest.mark.acceptance(6)
def test_single_patch_mfrt(record_property):
    scene = Scene(disk(), (PatchSpec(0.0, 0.1),))
    mean = ca.solve_mfrt(scene).mean_time
    est = mc.mc_mfpt(scene, "uniform", mc.McConfig(walkers=100_000))
    record_property("detail", f"asymptotic {mean:.5f}, MC {est.mean:.5f} +- {est.stderr:.5f} "
                              f"({(est.mean - mean) / est.stderr:+.2f} se)")
    assert mean == pytest.approx(np.log(2 / 0.1) + 0.125, abs=1e-12)
    assert est.within(mean, 3.0)


@pytest.mark.acceptance(7)
def test_sn_spectrum(record_property):
    eps, count = 0.05, 4
    scene = ca.equally_spaced_scene(count, eps, "steklov")
    sigma = sa.sn_spectrum(scene).sigma
    nu = -1 / np.log(eps)
    closed = np.sort([np.pi * nu / (2 * eps * (1 + nu * (ca.kappa_exact(count, j)
                                                          + hb.EXACT_C1)))
                      for j in range(1, count)])
    oracle = co.collocation_steklov(scene, count).sigma
    closed_err = np.max(np.abs(sigma[1:] - closed) / closed)
    oracle_err = np.max(np.abs(sigma[1:] - oracle[1:]) / oracle[1:])
    record_property("detail", f"closed form {closed_err:.1e}, collocation {oracle_err:.1e}")
    assert closed_err < 1e-10
    assert oracle_err < 5e-2


@pytest.mark.acceptance(8)
def test_snd_principal(record_property, basis):
    eps1, eps2 = np.pi / 12, np.pi / 6
    scene = Scene(disk(), (PatchSpec(0.0, eps1, "steklov"), PatchSpec(np.pi, eps2)))
    res = sa.snd_principal(scene)
    modes = co.collocation_steklov(scene, 4)
    oracle_inv = 1 / (eps1 * modes.sigma[0])
    rms = []
    for j in range(4):
        approx = sa.snd_restriction(res, j, basis, modes.samples)
        trace = modes.traces[j][0]
        if np.dot(approx, trace) < 0:
            approx = -approx
        rms.append(np.sqrt(np.mean((approx - trace) ** 2) / np.mean(trace**2)))
    record_property("detail", f"1/(eps1 sigma0) {res.inverse_scaled:.4f} vs {oracle_inv:.4f}, "
                              f"RMS " + ", ".join(f"{r:.1e}" for r in rms))
    assert res.inverse_scaled == pytest.approx(oracle_inv, rel=3e-2)
    assert max(rms) < 5e-2


@pytest.mark.acceptance(9)
def test_snd_large_n(record_property):
    count, eps1 = 64, 0.1
    worst = 0.0
    for eps in np.logspace(-4, np.log10(0.04), 13):
        ratio = 2 * eps1 / eps
        vals = {m: sa.snd_equally_spaced(count, eps, ratio, m) for m in sa.SND_MODES}
        worst = max(worst, abs(vals["largeN"] - vals["discrete"]) / vals["discrete"])
        assert vals["loworder"] < vals["discrete"]
    record_property("detail", f"largeN vs discrete max {worst:.1e}; loworder below at 13 points")
    assert worst < 1e-2


@pytest.mark.acceptance(10)
def test_annulus(record_property):
    errs = []
    for inner in (0.01, 0.05):
        sigma0 = co.annulus_steklov(inner)[0]
        errs.append(abs(sigma0 * np.log(1 / inner) - 1))
    record_property("detail", f"relative errors {errs[0]:.1e}, {errs[1]:.1e}")
    assert max(errs) < 1e-2


@pytest.mark.acceptance(11)
def test_property_suites(record_property, cfun, table_basis):
    fine = hb.build_basis(21, 200)
    checks = [
        ("splitting sums", lambda: props.test_splitting_sum_rules()),
        ("MFRT flux", lambda: props.test_mfrt_flux_sum_rule()),
        ("surface Green symmetry", lambda: props.test_surface_green_symmetry()),
        ("bulk Green symmetry", lambda: props.test_bulk_green_symmetry()),
        ("surface Green zero mean", lambda: props.test_surface_green_zero_mean()),
        ("bulk Green zero mean", lambda: props.test_bulk_green_zero_mean()),
        ("C monotone", lambda: props.test_cfunction_decreases_between_poles(cfun)),
        ("root interlacing", lambda: props.test_snd_roots_interlace_poles(cfun)),
        ("circulant vs dense", lambda: props.test_circulant_matches_dense()),
        ("truncation M=100/200", lambda: props.test_basis_truncation_stability(table_basis,
                                                                                fine)),
    ]
    for _, check in checks:
        check()
    record_property("detail", f"{len(checks)} property suites, 100 examples each")
