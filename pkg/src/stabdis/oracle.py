"""Dense exact-diagonalization references for small chains.

Everything here works on plain state vectors or density matrices, with the
site-0 qubit as the most significant bit. Size guards keep the cost bounded;
nothing in this module touches the MPS code.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np
import scipy.sparse.linalg as spla

from .models import ModelSpec, dense_hamiltonian, sparse_hamiltonian

MAX_ED_SITES = 14
MAX_PAULI_SITES = 12


class OracleSizeError(ValueError):
    """Requested system is beyond the oracle's size guard."""


def _guard(n: int, limit: int, what: str) -> None:
    if n > limit:
        raise OracleSizeError(f"{what}: {n} qubits exceeds the oracle limit of {limit}")


def _fix_sign(v: np.ndarray) -> np.ndarray:
    """Make the first non-negligible component real and positive."""
    idx = int(np.argmax(np.abs(v) > 1e-8 * np.abs(v).max()))
    ph = v[idx] / abs(v[idx])
    return v / ph


def exact_spectrum(spec: ModelSpec, k: int = 4) -> np.ndarray:
    """Lowest ``k`` eigenvalues, ascending."""
    _guard(spec.L, MAX_ED_SITES, "exact_spectrum")
    if spec.L <= 10:
        return np.linalg.eigvalsh(dense_hamiltonian(spec))[:k]
    vals = spla.eigsh(sparse_hamiltonian(spec), k=k, which="SA", return_eigenvectors=False)
    return np.sort(vals)


def exact_ground_state(spec: ModelSpec) -> tuple[float, np.ndarray]:
    """Lowest eigenpair of the dense Hamiltonian, with a fixed global phase."""
    _guard(spec.L, MAX_ED_SITES, "exact_ground_state")
    if spec.L <= 10:
        w, v = np.linalg.eigh(dense_hamiltonian(spec))
        e0, psi = w[0], v[:, 0]
    else:
        h = sparse_hamiltonian(spec)
        v0 = np.random.default_rng(0).normal(size=h.shape[0])
        w, v = spla.eigsh(h, k=2, which="SA", v0=v0, tol=1e-13)
        order = np.argsort(w)
        e0, psi = w[order[0]], v[:, order[0]]
    psi = _fix_sign(psi / np.linalg.norm(psi))
    return float(e0), psi


# ---------------------------------------------------------------- entropies


def _as_tensor(psi: np.ndarray) -> tuple[np.ndarray, int]:
    psi = np.asarray(psi)
    L = int(round(np.log2(psi.size)))
    if 2**L != psi.size:
        raise ValueError("state vector length is not a power of two")
    return psi.reshape((2,) * L), L


def reduced_density_matrix(psi: np.ndarray, region: Iterable[int]) -> np.ndarray:
    """``rho_R`` with the region's sites ordered ascending."""
    t, L = _as_tensor(psi)
    _guard(L, MAX_ED_SITES, "reduced_density_matrix")
    region = sorted(set(region))
    rest = [i for i in range(L) if i not in region]
    m = np.transpose(t, region + rest).reshape(2 ** len(region), -1)
    return m @ m.conj().T


@dataclass(frozen=True)
class ExactEntropies:
    region: tuple[int, ...]
    von_neumann: float
    renyi2: float
    purity: float


def exact_entropies(psi: np.ndarray, region: int | Iterable[int]) -> ExactEntropies:
    """Entropies of a region; an ``int`` means the first ``region`` sites (a cut)."""
    _, L = _as_tensor(psi)
    sites = tuple(range(region)) if isinstance(region, (int, np.integer)) else tuple(sorted(set(region)))
    rho = reduced_density_matrix(psi, sites)
    p = np.clip(np.linalg.eigvalsh(rho), 0.0, None)
    nz = p[p > 1e-15]
    svn = float(-np.sum(nz * np.log(nz)))
    pur = float(np.sum(p**2))
    return ExactEntropies(sites, max(svn, 0.0), float(-np.log(pur)), pur)


# ---------------------------------------------------------------- Pauli spectra


def _fwht(a: np.ndarray) -> np.ndarray:
    """Unnormalized Walsh-Hadamard transform along the last axis."""
    n = a.shape[-1]
    out = np.array(a, dtype=complex)
    h = 1
    lead = out.shape[:-1]
    while h < n:
        v = out.reshape(lead + (n // (2 * h), 2, h))
        x, y = v[..., 0, :].copy(), v[..., 1, :].copy()
        v[..., 0, :] = x + y
        v[..., 1, :] = x - y
        h *= 2
    return out


def pauli_spectrum(rho: np.ndarray, chunk: int = 256) -> np.ndarray:
    """``|Tr(rho X^x Z^z)|`` for all ``4^N`` strings, as an array ``[x, z]``.

    Uses ``Tr(rho X^x Z^z) = sum_s rho[s, s^x] (-1)^{z.s}`` up to a phase, so
    each row is one Walsh-Hadamard transform. A 1-D input is a pure state.
    """
    rho = np.asarray(rho)
    if rho.ndim == 1:
        rho = np.outer(rho, rho.conj())
    d = rho.shape[0]
    n = int(round(np.log2(d)))
    _guard(n, MAX_PAULI_SITES, "pauli_spectrum")
    s = np.arange(d)
    out = np.empty((d, d))
    for start in range(0, d, chunk):
        xs = np.arange(start, min(d, start + chunk))
        w = rho[s[None, :], s[None, :] ^ xs[:, None]]
        out[xs] = np.abs(_fwht(w))
    return out


def exact_sre(state: np.ndarray, n: float = 2) -> float:
    """``M_n`` of a pure state from the full Pauli spectrum."""
    psi = np.asarray(state)
    psi = psi / np.linalg.norm(psi)
    t = pauli_spectrum(psi)
    d = psi.size
    if n == 1:
        xi = t**2 / d
        xi = xi[xi > 0]
        return float(-np.sum(xi * np.log(xi)) - np.log(d))
    return float(np.log(np.sum(t ** (2 * n)) / d) / (1 - n))


def exact_mixed_sre(rho: np.ndarray) -> float:
    """``-ln(sum t^4 / sum t^2)`` with ``t = Tr(rho P)``."""
    t2 = pauli_spectrum(rho) ** 2
    return float(-np.log(np.sum(t2**2) / np.sum(t2)))


@dataclass(frozen=True)
class ExactMutual:
    L_AB: float
    I_AB: float
    W_AB: float
    M_A: float
    M_B: float
    M_AB: float


def exact_mutual_sre(psi: np.ndarray, A: Sequence[int], B: Sequence[int]) -> ExactMutual:
    """Mutual SRE and its split into Renyi-2 mutual information and ``W``."""
    if set(A) & set(B):
        raise ValueError("regions must be disjoint")
    _guard(len(A) + len(B), MAX_PAULI_SITES, "exact_mutual_sre")
    ra = reduced_density_matrix(psi, A)
    rb = reduced_density_matrix(psi, B)
    rab = reduced_density_matrix(psi, list(A) + list(B))
    ma, mb, mab = exact_mixed_sre(ra), exact_mixed_sre(rb), exact_mixed_sre(rab)
    s2 = [float(-np.log(np.real(np.trace(r @ r)))) for r in (ra, rb, rab)]
    i_ab = s2[0] + s2[1] - s2[2]
    l_ab = mab - ma - mb
    return ExactMutual(l_ab, i_ab, i_ab - l_ab, ma, mb, mab)
