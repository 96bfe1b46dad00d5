import numpy as np
import pytest
from hypothesis import given, strategies as st

from stabdis import clifford
from stabdis.clifford import PauliString, pauli


def test_group_orders():
    full = clifford.enumerate_c2()
    assert len(full) == 11520
    assert clifford.count_mod_pauli(full) == 720
    assert len(clifford.enumerate_c1()) == 24
    assert len(clifford.coset_representatives()) == 20


def test_cosets_partition_the_group():
    reps = clifford.coset_representatives()
    local = clifford.local_cliffords()
    seen = set()
    for g in reps:
        for loc in local:
            seen.add(clifford.CliffordGate2.from_unitary(loc @ g.unitary).encoding)
    assert len(seen) == 11520


def test_identity_first_and_table_shipped():
    reps = clifford.coset_representatives()
    assert np.allclose(reps[0].unitary, np.eye(4))
    table = clifford.load_coset_table()
    assert [row["id"] for row in table] == list(range(20))
    assert table == clifford.gate_table(reps)


@given(st.integers(0, 11519), st.sampled_from(["XI", "IZ", "YX", "ZZ", "XY"]))
def test_conjugation_matches_matrices(gid, word):
    g = clifford.enumerate_c2()[gid]
    p = pauli(word)
    img = g.conjugate(p)
    assert np.allclose(g.unitary @ p.matrix() @ g.unitary.conj().T, img.matrix())


@given(st.integers(0, 11519))
def test_inverse_and_commutation(gid):
    g = clifford.enumerate_c2()[gid]
    assert g.preserves_commutation()
    assert np.allclose((g @ g.inverse()).unitary / (g @ g.inverse()).unitary[0, 0], np.eye(4))


def test_pauli_algebra():
    x, z = pauli("X"), pauli("Z")
    assert not x.commutes(z)
    assert (x * z).equiv(pauli("Y"))
    assert pauli("XZ").commutes(pauli("ZX"))


def test_circuit_conjugation_spreads():
    cz_like = clifford.coset_representatives()[5]
    log = [(i, cz_like) for i in range(5)]
    img = clifford.conjugate_pauli(log, PauliString.single(6, 0, "Z"))
    assert len(img.support) >= 1
    back = clifford.conjugate_pauli(clifford.inverse_log(log), img)
    assert back.equiv(PauliString.single(6, 0, "Z"))
