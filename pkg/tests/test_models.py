import numpy as np
import pytest

from stabdis import models, oracle
from stabdis.models import ModelSpec

CASES = [
    ModelSpec("XXZ", 6, {"Jz": 0.5}),
    ModelSpec("TCI", 6, {"lam": 0.428}),
    ModelSpec("Cluster1", 6, {"h": 1.0}),
    ModelSpec("Cluster2", 6, {"h": 0.9, "D": 0.1}),
    ModelSpec("Cluster3", 6, {"V": 1.0}),
    ModelSpec("IsingTF", 6, {"h": 1.0}),
]


@pytest.mark.parametrize("spec", CASES, ids=lambda s: s.family)
def test_mpo_equals_sparse_build(spec):
    dense = models.build(spec).to_dense()
    ref = models.sparse_hamiltonian(spec).toarray()
    assert np.allclose(dense, ref, atol=1e-13)
    assert np.allclose(dense, dense.conj().T)


def test_xxz_two_sites():
    assert oracle.exact_ground_state(ModelSpec("XXZ", 2, {"Jz": 0.5}))[0] == pytest.approx(-0.375)


def test_cluster_ground_energy_conventions():
    e_pauli = oracle.exact_ground_state(ModelSpec("Cluster1", 8, {"h": 0.0}))[0]
    e_spin = oracle.exact_ground_state(ModelSpec("Cluster1", 8, {"h": 0.0, "convention": "spin"}))[0]
    assert e_pauli == pytest.approx(-6.0)
    assert e_spin == pytest.approx(-0.75)


def test_tci_at_zero_is_ising():
    a = oracle.exact_ground_state(ModelSpec("TCI", 8, {"lam": 0.0}))[0]
    b = oracle.exact_ground_state(ModelSpec("IsingTF", 8, {"h": 1.0}))[0]
    assert a == pytest.approx(b, abs=1e-12)


def test_cluster3_reduces_to_cluster1_at_zero():
    a = models.dense_hamiltonian(ModelSpec("Cluster3", 6, {"V": 0.0}))
    b = models.dense_hamiltonian(ModelSpec("Cluster1", 6, {"h": 0.0}))
    assert np.allclose(a, b)


def test_validation():
    with pytest.raises(ValueError):
        ModelSpec("Potts", 6)
    with pytest.raises(ValueError):
        ModelSpec("XXZ", 1)
    with pytest.raises(ValueError):
        ModelSpec("XXZ", 6, {"Jz": 1j})


@pytest.mark.parametrize(
    "spec",
    [
        ModelSpec("Cluster1", 10, {"h": 0.0}),
        ModelSpec("Cluster2", 10, {"h": 0.3, "D": 0.1}),
        ModelSpec("Cluster3", 10, {"V": 0.5}),
        ModelSpec("Cluster3", 10, {"V": 1.0}),
    ],
    ids=lambda s: f"{s.family}-{s.params}",
)
def test_edge_pin_lifts_degeneracy(spec):
    gap = np.diff(oracle.exact_spectrum(spec.with_params(edge_field=1e-3), 2))[0]
    assert gap > 1e-4


def test_pinned_cluster_state_has_ln2_everywhere():
    _, psi = oracle.exact_ground_state(ModelSpec("Cluster1", 10, {"h": 0.0, "edge_field": 1e-3}))
    for ell in range(1, 10):
        assert oracle.exact_entropies(psi, range(ell)).von_neumann == pytest.approx(np.log(2), abs=1e-10)
