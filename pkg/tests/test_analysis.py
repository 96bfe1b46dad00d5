import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from stabdis import analysis as A


@given(st.floats(0.1, 2.0), st.floats(-1.0, 1.0), st.sampled_from([32, 64, 100]))
def test_cut_scan_roundtrip(c, gamma, L):
    ell = np.arange(1, L)
    fit = A.fit_cut_scan(zip(ell, A.cft_entropy(ell, L, c, gamma)), L)
    assert fit.central_charge == pytest.approx(c, abs=1e-10)
    assert fit.intercept == pytest.approx(gamma, abs=1e-10)


def test_half_chain_roundtrip():
    Ls = [16, 32, 64, 128]
    pts = [(L, 0.7 / 6 * math.log(L / math.pi) + 0.3) for L in Ls]
    fit = A.fit_half_chain(pts)
    assert fit.central_charge == pytest.approx(0.7, abs=1e-10)


def test_errors_shrink_with_points():
    rng = np.random.default_rng(0)
    errs = []
    for L in (64, 256, 1024):
        ell = np.arange(1, L)
        y = A.cft_entropy(ell, L, 1.0, 0.2) + rng.normal(0, 0.01, ell.size)
        errs.append(A.fit_cut_scan(zip(ell, y), L).slope_err)
    assert errs[0] > errs[1] > errs[2]


def test_fit_errors():
    with pytest.raises(A.FitError):
        A.fit_cut_scan([(5, 1.0), (6, 1.1)], 32)
    with pytest.raises(A.FitError):
        A.linear_fit([1, 1, 1], [0, 1, 2])


def test_correlation():
    pts = [(p, 2.0 * m, m) for p, m in enumerate([0.1, 0.2, 0.25, 0.3])]
    rep = A.delta_m2_correlation(pts)
    assert rep.C == pytest.approx(2.0)
    assert rep.pearson_r == pytest.approx(1.0)
    with pytest.raises(A.FitError):
        A.delta_m2_correlation([(0, 1, 1), (1, 1, 1), (2, 1, 1)])


def test_critical_point_synthetic():
    curves = {L: [(h, -((h - 0.9 - 0.5 / L) ** 2)) for h in np.linspace(0.8, 1.0, 21)] for L in (16, 24, 32, 48)}
    est = A.critical_point_estimate(curves)
    assert est.h_c == pytest.approx(0.9, abs=1e-10)
    with pytest.raises(A.FitError):
        A.critical_point_estimate({16: curves[16]})


def test_peak_on_boundary_flagged():
    pos, edge = A.peak_position([0.1, 0.2, 0.3], [3, 2, 1])
    assert edge and pos == 0.1


def test_dispersion_examples():
    L = 12
    k = 2  # 6 pi k / L = pi
    p = A.cluster_dispersion(3, L, 1.0, k)
    assert p.Lambda == pytest.approx(2.0)
    for k in range(1, L + 1):
        assert A.cluster_dispersion(1, L, 0.0, k).Lambda == pytest.approx(1.0)


@given(st.sampled_from([1, 3]), st.integers(6, 60), st.floats(0.0, 2.0), st.data())
def test_bogoliubov_normalization(variant, L, g, data):
    k = data.draw(st.integers(1, L))
    p = A.cluster_dispersion(variant, L, g, k)
    assert p.u**2 + p.v**2 == pytest.approx(1.0, abs=1e-12)
    assert p.Lambda >= 0
    assert p.Lambda == pytest.approx(math.hypot(p.epsilon, p.delta), abs=1e-12)


def test_dual_dispersion_is_ising():
    L, h = 24, 0.6
    for k in range(1, L + 1):
        assert A.cluster_dispersion(3, L, h, k).Lambda == pytest.approx(A.ising_dispersion(L // 3, h, k))
        assert A.cluster_dispersion(1, L, h, k).Lambda == pytest.approx(A.ising_dispersion(L // 2, h, k))


def test_duality_predictions():
    assert A.duality_predictions(1, 64).zero_cuts == (32,)
    p24 = A.duality_predictions(3, 24)
    assert p24.expected_zero_cuts == (8, 16)
    p192 = A.duality_predictions(3, 192)
    assert p192.zero_cuts == (64, 128) and p192.expected_zero_cuts == (64,)
    with pytest.raises(ValueError):
        A.duality_predictions(3, 25)


def test_classification():
    flat = A.fit_half_chain([(L, 0.1 + 1e-4 * (L % 3)) for L in (16, 32, 64)])
    assert A.classify(flat).label == "nLCD"
    grow = A.fit_half_chain([(L, 0.03 * math.log(L)) for L in (16, 32, 64)])
    assert A.classify(grow).label == "LCD"
    assert A.classify(grow, [(1, 0.2), (2, 1e-5), (3, 0.2)]).label == "fLCD"


def test_emitters(tmp_path):
    ell = np.arange(4, 28)
    fit = A.fit_cut_scan(zip(ell, A.cft_entropy(ell, 32, 1.0, 0.1)), 32)
    A.write_fit_json(tmp_path / "f.json", fit)
    A.write_plot_csv(tmp_path / "f.csv", fit.x, fit.y, None, fit)
    A.write_svg(tmp_path / "f.svg", {"S": (fit.x, fit.y)})
    assert (tmp_path / "f.csv").read_text().splitlines()[0] == "x,y,yerr,fit_y"
    assert (tmp_path / "f.svg").read_text().startswith("<svg")
