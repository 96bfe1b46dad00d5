import numpy as np
import pytest

from stabdis import oracle
from stabdis.models import ModelSpec


def t_state():
    return np.array([1.0, np.exp(1j * np.pi / 4)]) / np.sqrt(2)


def test_t_state_sre():
    assert oracle.exact_sre(t_state(), 2) == pytest.approx(np.log(4 / 3))


def test_stabilizer_states_have_zero_magic():
    ghz = np.zeros(8)
    ghz[[0, 7]] = 1 / np.sqrt(2)
    assert oracle.exact_sre(ghz, 2) == pytest.approx(0.0, abs=1e-12)
    plus = np.ones(16) / 4
    assert oracle.exact_sre(plus, 2) == pytest.approx(0.0, abs=1e-12)


def test_bell_entropy():
    bell = np.array([1, 0, 0, 1]) / np.sqrt(2)
    e = oracle.exact_entropies(bell, 1)
    assert e.von_neumann == pytest.approx(np.log(2))
    assert e.renyi2 == pytest.approx(np.log(2))


def test_product_mutual_is_zero(rng):
    a = rng.normal(size=4) + 1j * rng.normal(size=4)
    b = rng.normal(size=4) + 1j * rng.normal(size=4)
    psi = np.kron(a / np.linalg.norm(a), b / np.linalg.norm(b))
    m = oracle.exact_mutual_sre(psi, [0, 1], [2, 3])
    assert m.L_AB == pytest.approx(0.0, abs=1e-12)
    assert m.I_AB == pytest.approx(0.0, abs=1e-12)


def test_pauli_spectrum_brute_force(rng):
    from itertools import product

    from stabdis.clifford import pauli

    psi = rng.normal(size=8) + 1j * rng.normal(size=8)
    psi /= np.linalg.norm(psi)
    rho = np.outer(psi, psi.conj())
    spec = oracle.pauli_spectrum(rho)
    brute = sorted(abs(np.trace(rho @ pauli("".join(w)).matrix())) for w in product("IXYZ", repeat=3))
    assert np.allclose(sorted(np.abs(spec).ravel()), brute, atol=1e-12)


def test_size_guards():
    with pytest.raises(oracle.OracleSizeError):
        oracle.exact_ground_state(ModelSpec("XXZ", 16))
    with pytest.raises(oracle.OracleSizeError):
        oracle.exact_sre(np.ones(2**13) / 2**6.5)


def test_ground_state_sign_convention():
    _, v = oracle.exact_ground_state(ModelSpec("XXZ", 6, {"Jz": 0.3}))
    first = v[np.flatnonzero(np.abs(v) > 1e-10)[0]]
    assert first.real > 0 and abs(first.imag) < 1e-12
