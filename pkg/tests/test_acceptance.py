"""End-to-end acceptance criteria.

Each test computes its criterion at the stated tolerance, records one
PASS/FAIL line (printed in the terminal summary) and then asserts.
"""

from __future__ import annotations

import math
from functools import lru_cache

import numpy as np
import pytest

from stabdis import analysis, clifford, disentangler, dmrg, magic, models, mps, oracle
from stabdis.models import ModelSpec

pytestmark = [pytest.mark.acceptance, pytest.mark.slow]

CHI = 64
TCI_POINT = 0.428


@lru_cache(maxsize=None)
def ground(family: str, L: int, **params: float) -> dmrg.DMRGResult:
    return dmrg.solve(ModelSpec(family, L, dict(params)), chi_max=CHI)


@lru_cache(maxsize=None)
def record(family: str, L: int, max_sweeps: int = 10, sweep_tol: float = 1e-8, **params: float):
    return disentangler.disentangle(ground(family, L, **params).state, max_sweeps=max_sweeps, sweep_tol=sweep_tol)


def half_chain(family: str, L: int, **params: float) -> tuple[float, float]:
    """(EE, SMEE) at the half cut."""
    rec = record(family, L, **params)
    return rec.initial_half_chain, mps.entanglement_entropy(rec.state, L // 2)


def smee(rec) -> np.ndarray:
    """SMEE indexed by cut: ``out[l]`` for ``l = 1..L-1`` (``out[0]`` is 0)."""
    return np.concatenate([[0.0], [s for _, s in disentangler.smee_profile(rec)]])


# ---------------------------------------------------------------- 1


ORACLE_POINTS = [
    ("XXZ", {"Jz": -0.5}),
    ("XXZ", {"Jz": 0.5}),
    ("XXZ", {"Jz": 0.0}),
    ("TCI", {"lam": 0.0}),
    ("TCI", {"lam": TCI_POINT}),
    ("TCI", {"lam": 1.0}),
    ("Cluster1", {"h": 0.0}),
    ("Cluster1", {"h": 0.5}),
    ("Cluster1", {"h": 1.0}),
    ("Cluster2", {"h": 0.5, "D": 0.1}),
    ("Cluster2", {"h": 0.9, "D": 0.1}),
    ("Cluster2", {"h": 1.2, "D": 0.3}),
    ("Cluster3", {"V": 0.5}),
    ("Cluster3", {"V": 1.0}),
    ("Cluster3", {"V": 1.5}),
]


def test_1_oracle_equivalence(report):
    L = 10
    worst_e = worst_s = worst_m = 0.0
    for family, params in ORACLE_POINTS:
        spec = ModelSpec(family, L, params)
        res = dmrg.solve(spec, chi_max=CHI)
        # compare against ED of the Hamiltonian DMRG actually solved
        target = spec.with_params(edge_field=dmrg.EDGE_PIN) if dmrg.needs_pin(spec) else spec
        e_mps = models.mpo_expectation(models.build(target), res.state)
        e0, psi = oracle.exact_ground_state(target)
        worst_e = max(worst_e, abs(e_mps - e0))
        for ell in range(1, L):
            ee = oracle.exact_entropies(psi, range(ell)).von_neumann
            worst_s = max(worst_s, abs(mps.entanglement_entropy(res.state, ell) - ee))
        worst_m = max(worst_m, abs(magic.sre_exact(res.state, 2).estimate - oracle.exact_sre(mps.to_dense(res.state), 2)))
    ok = worst_e < 1e-8 and worst_s < 1e-8 and worst_m < 1e-10
    report(1, ok, f"15 points at L={L}: max |dE|={worst_e:.1e}, max |dS|={worst_s:.1e}, max |dM2|={worst_m:.1e}")
    assert ok


# ---------------------------------------------------------------- 2


def test_2_clifford_combinatorics(report):
    full = clifford.enumerate_c2()
    n_full, n_mod = len(full), clifford.count_mod_pauli(full)
    coset = clifford.gate_set("coset")
    rng = np.random.default_rng(2)
    worst = 0.0
    for _ in range(100):
        # two-site centre tensor with orthonormal environments of dimension 4
        theta = rng.normal(size=(4, 2, 2, 4)) + 1j * rng.normal(size=(4, 2, 2, 4))
        theta /= np.linalg.norm(theta)
        a = disentangler.candidate_entropies(theta, coset).min()
        b = disentangler.candidate_entropies(theta, full).min()
        worst = max(worst, abs(a - b))
    ok = (n_full, n_mod, len(coset)) == (11520, 720, 20) and worst < 1e-10
    report(2, ok, f"{n_full} / {n_mod} / {len(coset)} gates; coset vs full max diff {worst:.1e} over 100 states")
    assert ok


# ---------------------------------------------------------------- 3


def test_3_stabilizer_sanity(report):
    details, ok = [], True
    for L in (8, 16, 32):
        res = ground("Cluster1", L, h=0.0)
        m2 = magic.sre_sample(res.state, 2, 1000, seed=L)
        rec = disentangler.disentangle(res.state, max_sweeps=1)
        worst = float(np.max(smee(rec)))
        good = abs(m2.density) <= 3 * m2.std_error / L + 1e-12 and worst < 1e-8
        ok &= good
        details.append(f"L={L}: m2={m2.density:.1e}, max SMEE={worst:.1e}")
    report(3, ok, "; ".join(details))
    assert ok


# ---------------------------------------------------------------- 4


def test_4_xxz_nlcd(report):
    sizes = (16, 32, 64)
    rows = [(L, *half_chain("XXZ", L, Jz=0.5)) for L in sizes]
    fit = analysis.fit_half_chain([(L, ee) for L, ee, _ in rows])
    gain = analysis.linear_fit([math.log(L / math.pi) for L, *_ in rows], [ee - sm for _, ee, sm in rows])
    # chains at the smallest size: at L = 32 (8 + 8 blocks) N_S = 1e4 gives an error of
    # about 0.06 against a signal of 0.13 and costs 20 min, so 3 sigma would need hours
    L = 16
    q = L // 4
    state = ground("XXZ", L, Jz=0.5).state
    mut = magic.mutual_sre(state, range(q), range(L - q, L), N_S=10_000, n_chains=8, seed=4)
    ok_c = abs(fit.central_charge - 1.0) <= 0.15
    ok_d = gain.slope <= 0.02
    ok_l = mut.L_AB > 3 * mut.L_err
    report(
        4,
        ok_c and ok_d and ok_l,
        f"c={fit.central_charge:.3f}+-{fit.central_charge_err:.3f}, Delta slope={gain.slope:.4f}, "
        f"L_AB(L={L}, {q}+{q})={mut.L_AB:.4f}+-{mut.L_err:.4f}",
    )
    assert ok_c and ok_d and ok_l


# ---------------------------------------------------------------- 5


def test_5_tci_lcd(report):
    sizes = (32, 64, 128)
    rows = [(L, *half_chain("TCI", L, lam=TCI_POINT)) for L in sizes]
    fit = analysis.fit_half_chain([(L, ee) for L, ee, _ in rows])
    gain = analysis.linear_fit([math.log(L / math.pi) for L, *_ in rows], [ee - sm for _, ee, sm in rows])
    L = sizes[-1]
    rec = record("TCI", L, lam=TCI_POINT)
    sm_fit = analysis.fit_cut_scan(disentangler.smee_profile(rec), L)
    # exact two-block assembly: the chains cannot resolve an O(1e-3) value at 3 sigma
    L = 32
    q = L // 4
    mut = magic.mutual_sre_exact(ground("TCI", L, lam=TCI_POINT).state, range(q), range(L - q, L))
    ok_c = abs(fit.central_charge - 0.70) <= 0.1
    ok_a = 0.05 <= sm_fit.slope <= 0.13
    ok_d = abs(gain.slope - 0.03) <= 0.015
    ok_l = mut.L_AB < -3 * mut.L_err and 1e-4 <= abs(mut.L_AB) < 1e-2
    ok = ok_c and ok_a and ok_d and ok_l
    report(
        5,
        ok,
        f"c={fit.central_charge:.3f}+-{fit.central_charge_err:.3f}, SMEE slope(L={sizes[-1]})={sm_fit.slope:.4f}, "
        f"Delta slope={gain.slope:.4f}, L_AB(L={L}, exact)={mut.L_AB:.5f}",
    )
    assert ok


# ---------------------------------------------------------------- 6


def _scan(family: str, L: int, param: str, values) -> list[tuple[float, float, float]]:
    points = []
    for v in values:
        ee, sm = half_chain(family, L, **{param: float(v)})
        m2 = magic.sre_sample(ground(family, L, **{param: float(v)}).state, 2, 1000, seed=7)
        points.append((float(v), ee - sm, m2.density))
    return points


def test_6_gain_magic_correlation(report):
    scans = {
        "XXZ": (_scan("XXZ", 32, "Jz", np.linspace(-0.9, 0.9, 7)), 0.67 / 0.27),
        "TCI": (_scan("TCI", 64, "lam", np.linspace(0.0, TCI_POINT, 5)), 0.34 / 0.29),
    }
    ok, details = True, []
    for name, (points, anchor) in scans.items():
        corr = analysis.delta_m2_correlation(points)
        ratio = corr.anchor_ratio
        good = corr.pearson_r >= 0.9 and abs(ratio / anchor - 1) <= 0.2
        ok &= good
        details.append(f"{name}: r={corr.pearson_r:.3f}, Delta_max/m2_max={ratio:.2f} (anchor {anchor:.2f})")
    report(6, ok, "; ".join(details))
    assert ok


# ---------------------------------------------------------------- 7


def test_7_cluster_ising_disentangling(report):
    L1 = 64
    p1 = smee(record("Cluster1", L1, max_sweeps=60, sweep_tol=1e-10, h=1.0))
    # below L/2 the profile is that of an Ising chain of effective length L/2
    below = [(ell, p1[ell]) for ell in range(1, L1 // 2)]
    c_eff = analysis.fit_cut_scan(below, L1 // 2)
    L3 = 24
    p3 = smee(record("Cluster3", L3, max_sweeps=60, sweep_tol=1e-10, V=1.0))
    L2 = 64
    p2 = smee(record("Cluster2", L2, max_sweeps=60, sweep_tol=1e-10, h=0.9, D=0.1))
    interior = p2[analysis.DEFAULT_MARGIN : L2 - analysis.DEFAULT_MARGIN + 1]
    checks = {
        "H1 zero": p1[L1 // 2] < 1e-3,
        "H1 c_eff": abs(c_eff.central_charge - 0.25) <= 0.1,
        "H3 zeros": p3[L3 // 3] < 1e-2 and p3[2 * L3 // 3] < 1e-2,
        "H2 none": p2[L2 // 2] > 0.2 and float(interior.min()) > 1e-3,
    }
    ok = all(checks.values())
    failed = [k for k, v in checks.items() if not v]
    report(
        7,
        ok,
        f"Cluster1 L={L1}: SMEE(L/2)={p1[L1 // 2]:.1e}, c_eff={c_eff.central_charge:.3f}+-{c_eff.central_charge_err:.3f}; "
        f"Cluster3 L={L3}: SMEE(L/3)={p3[L3 // 3]:.3f}, SMEE(2L/3)={p3[2 * L3 // 3]:.3f}; "
        f"Cluster2 L={L2}: SMEE(L/2)={p2[L2 // 2]:.3f}" + (f"; failed: {', '.join(failed)}" if failed else ""),
    )
    assert ok


# ---------------------------------------------------------------- 8


def test_8_duality_overlay(report):
    L = 32
    M = L // 2
    cluster = smee(record("Cluster1", L, max_sweeps=60, sweep_tol=1e-10, h=1.0))
    ising = smee(record("IsingTF", M, max_sweeps=60, sweep_tol=1e-10, h=1.0))
    margin = 2
    fc = analysis.fit_cut_scan([(ell, cluster[ell]) for ell in range(1, M)], M, margin=margin)
    fi = analysis.fit_cut_scan([(ell, ising[ell]) for ell in range(1, M)], M, margin=margin)
    tol_a = math.hypot(fc.slope_err, fi.slope_err)
    tol_b = math.hypot(fc.intercept_err, fi.intercept_err)
    ok = abs(fc.slope - fi.slope) <= tol_a and abs(fc.intercept - fi.intercept) <= tol_b
    # both chains park a product qubit at one end, so profiles agree up to reflection
    diff = float(np.max(np.abs(cluster[1:M] - ising[M - 1 : 0 : -1])))
    report(
        8,
        ok,
        f"slope {fc.slope:.4f} vs {fi.slope:.4f} (+-{tol_a:.4f}), intercept {fc.intercept:.4f} vs {fi.intercept:.4f} "
        f"(+-{tol_b:.4f}); max pointwise diff (reflected) {diff:.1e}",
    )
    assert ok


# ---------------------------------------------------------------- 9


def test_9_critical_point(report):
    # wide enough to contain the finite-size maxima, which sit below h_c at these sizes
    hs = np.round(np.arange(0.50, 1.1001, 0.05), 4)
    curves = {}
    for L in (16, 24, 32, 48):
        curves[L] = [(float(h), mps.entanglement_entropy(ground("Cluster2", L, h=float(h), D=0.1).state, L // 2)) for h in hs]
    est = analysis.critical_point_estimate(curves)
    ok = abs(est.h_c - 0.90) <= 0.02
    peaks = ", ".join(f"{L}:{p:.3f}" for L, p in sorted(est.peaks.items()))
    report(9, ok, f"h_c={est.h_c:.4f}+-{est.h_c_err:.4f} from peaks {peaks}")
    assert ok


# ---------------------------------------------------------------- 10


def test_10_estimator_statistics(report):
    L = 10
    outliers = []
    for seed in range(20):
        state = mps.random_mps(L, 8, seed=100 + seed)
        exact = magic.sre_exact(state, 2).estimate
        samp = magic.sre_sample(state, 2, 10_000, seed=seed)
        z = abs(samp.estimate - exact) / samp.std_error
        if z > 3:
            outliers.append(round(z, 2))
    state = ground("XXZ", 16, Jz=0.5).state
    A, B = range(4), range(12, 16)
    chain = magic.mutual_sre(state, A, B, N_S=10_000, n_chains=8, seed=10)
    exact = magic.mutual_sre_exact(state, A, B)
    z_mut = abs(chain.L_AB - exact.L_AB) / chain.L_err
    prod = mps.tensor_product(mps.random_mps(4, 4, seed=1), mps.random_mps(4, 4, seed=2))
    zero = magic.mutual_sre(prod, range(4), range(4, 8), N_S=10_000, n_chains=8, seed=11)
    ok = not outliers and z_mut <= 3 and abs(zero.L_AB) <= 3 * zero.L_err + 1e-12
    report(
        10,
        ok,
        f"sre_sample outliers beyond 3 sigma: {outliers or 'none'} of 20; chain vs exact L_AB "
        f"{chain.L_AB:.4f} vs {exact.L_AB:.4f} ({z_mut:.1f} sigma); product L_AB={zero.L_AB:.1e}+-{zero.L_err:.1e}",
    )
    assert ok
