import numpy as np
import pytest
from hypothesis import given, strategies as st

from stabdis import mps, oracle


def random_state(L, chi, seed):
    return mps.random_mps(L, chi, seed=seed)


@given(st.integers(3, 8), st.integers(1, 6), st.integers(0, 10_000))
def test_dense_roundtrip(L, chi, seed):
    s = random_state(L, chi, seed)
    psi = mps.to_dense(s)
    assert np.isclose(np.linalg.norm(psi), 1.0)
    back = mps.to_dense(mps.from_dense(psi))
    assert abs(np.vdot(psi, back)) == pytest.approx(1.0, abs=1e-10)


@given(st.integers(3, 8), st.integers(0, 10_000), st.data())
def test_canonical_center_move_preserves_state(L, seed, data):
    s = random_state(L, 4, seed)
    c = data.draw(st.integers(0, L - 1))
    moved = mps.move_center(mps.canonicalize(s, "right"), c)
    assert abs(mps.overlap(s, moved)) == pytest.approx(1.0, abs=1e-10)
    for i in range(c):
        assert mps.is_left_normalized(moved.tensors[i])
    for i in range(c + 1, L):
        assert mps.is_right_normalized(moved.tensors[i])


def test_entropies_match_oracle():
    s = random_state(10, 8, 5)
    psi = mps.to_dense(s)
    prof = mps.entropy_profile(mps.canonicalize(s))
    for b in range(1, 10):
        assert prof[b - 1] == pytest.approx(oracle.exact_entropies(psi, b).von_neumann, abs=1e-10)


@pytest.mark.parametrize("region", [(0, 1, 8, 9), (2, 5), (3, 4, 5), (0, 9), (1, 3, 6, 7)])
def test_rdm_and_purity_match_oracle(region):
    s = random_state(10, 6, 11)
    psi = mps.to_dense(s)
    rho = mps.reduced_density_matrix(s, region)
    ref = oracle.reduced_density_matrix(psi, region)
    assert np.allclose(rho, ref, atol=1e-12)
    e = oracle.exact_entropies(psi, region)
    assert mps.rdm_purity(s, region, 2) == pytest.approx(e.purity, abs=1e-10)
    assert mps.rdm_purity(s, region, 3) == pytest.approx(np.trace(ref @ ref @ ref).real, abs=1e-10)


def test_product_and_bell_entropy():
    p = mps.product_state(4, [1, 0])
    assert np.allclose(mps.entropy_profile(mps.canonicalize(p)), 0.0)
    bell = np.zeros(4)
    bell[[0, 3]] = 1 / np.sqrt(2)
    s = mps.from_dense(bell)
    assert mps.entanglement_entropy(s, 1) == pytest.approx(np.log(2))


def test_two_site_gate_matches_dense(rng):
    s = random_state(6, 4, 3)
    g = np.linalg.qr(rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4)))[0]
    out = mps.apply_two_site_gate(mps.canonicalize(s, 2), 2, g, chi_max=None, svd_cutoff=0.0)
    psi = mps.to_dense(s).reshape(4, 4, 4)
    ref = np.einsum("pq,aqb->apb", g, psi).reshape(-1)
    assert abs(np.vdot(ref, mps.to_dense(out))) == pytest.approx(1.0, abs=1e-10)


def test_expectation_pauli_matches_dense():
    s = random_state(5, 4, 8)
    psi = mps.to_dense(s)
    from stabdis.clifford import pauli

    for p in ("XZIYX", "ZZZZZ", "IIXII"):
        ref = np.vdot(psi, pauli(p).matrix() @ psi).real
        assert mps.expectation_pauli(s, p) == pytest.approx(ref, abs=1e-10)


def test_compression_fidelity_monotone_in_chi():
    s = random_state(10, 16, 2)
    fids = [mps.compress_to_chi(s, chi).fidelity for chi in (2, 4, 8, 16)]
    assert all(b >= a - 1e-10 for a, b in zip(fids, fids[1:]))
    assert fids[-1] == pytest.approx(1.0, abs=1e-8)


def test_memory_guard():
    s = random_state(20, 8, 0)
    with pytest.raises(mps.MemoryBudgetExceeded):
        mps.reduced_density_matrix(s, range(0, 20, 2), mem_budget=1 << 20)
