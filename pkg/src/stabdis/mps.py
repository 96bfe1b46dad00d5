"""Open-chain matrix product states.

Site tensors have shape ``(left bond, 2, right bond)``; sites are 0-based and
bond ``l`` (``1 <= l <= L-1``) is the cut separating the first ``l`` sites
from the rest. Two-site gates are addressed by their left site ``i`` and act
on ``(i, i+1)``, i.e. on bond ``i + 1``.

States are immutable: every operation returns a new :class:`MPS`. Schmidt
values are cached per bond and invalidated by anything that could change
them; entropies refuse to read stale values.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field, replace
from typing import Iterable, Sequence

import numpy as np
import scipy.linalg

from .clifford import PAULI_MATRICES, PauliString, pauli

SVD_ZERO = 1e-14
DEFAULT_CUTOFF = 1e-12
DENSE_PURITY_SITES = 10
DEFAULT_MEM_BUDGET = 1 << 30  # bytes


class StaleCanonicalForm(RuntimeError):
    """Schmidt values at the requested bond are not current."""


class MemoryBudgetExceeded(RuntimeError):
    """A contraction would exceed the configured memory budget."""


class TruncationWarning(UserWarning):
    """Bond dimension limit forced discarding more weight than the cutoff."""


def _freeze(a: np.ndarray) -> np.ndarray:
    a = np.asarray(a)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class MPS:
    tensors: tuple[np.ndarray, ...]
    schmidt: tuple[np.ndarray | None, ...] = ()
    center: int | None = None
    truncation_error: float = 0.0

    def __post_init__(self) -> None:
        ts = tuple(_freeze(t) for t in self.tensors)
        object.__setattr__(self, "tensors", ts)
        if not self.schmidt:
            object.__setattr__(self, "schmidt", (None,) * (len(ts) - 1))
        if len(self.schmidt) != len(ts) - 1:
            raise ValueError("need one Schmidt slot per bond")
        if ts[0].shape[0] != 1 or ts[-1].shape[2] != 1:
            raise ValueError("boundary bonds must have dimension 1")
        for a, b in zip(ts[:-1], ts[1:]):
            if a.shape[2] != b.shape[0]:
                raise ValueError(f"bond mismatch {a.shape} -> {b.shape}")

    @property
    def length(self) -> int:
        return len(self.tensors)

    def __len__(self) -> int:
        return len(self.tensors)

    @property
    def bond_dims(self) -> list[int]:
        return [t.shape[2] for t in self.tensors[:-1]]

    @property
    def max_bond(self) -> int:
        return max(self.bond_dims, default=1)

    def singular_values(self, bond: int) -> np.ndarray:
        if not 1 <= bond <= self.length - 1:
            raise IndexError(f"bond {bond} outside 1..{self.length - 1}")
        s = self.schmidt[bond - 1]
        if s is None:
            raise StaleCanonicalForm(f"Schmidt values at bond {bond} are stale; canonicalize first")
        return s

    @property
    def dtype(self) -> np.dtype:
        return np.result_type(*self.tensors)


# ---------------------------------------------------------------- linear algebra


def svd(m: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Thin SVD with a deterministic gauge.

    The largest-magnitude entry of every left singular vector is made real
    positive (the right vectors absorb the conjugate phase).
    """
    try:
        u, s, vh = np.linalg.svd(m, full_matrices=False)
    except np.linalg.LinAlgError:
        u, s, vh = scipy.linalg.svd(m, full_matrices=False, lapack_driver="gesvd")
    k = s.shape[0]
    idx = np.argmax(np.abs(u), axis=0)
    ph = u[idx, np.arange(k)]
    ph = ph / np.where(np.abs(ph) > 0, np.abs(ph), 1.0)
    u = u * ph.conj()
    vh = vh * ph[:, None]
    return u, s, vh


def truncation_rank(s: np.ndarray, chi_max: int | None, cutoff: float) -> tuple[int, float, bool]:
    """Number of singular values to keep.

    Keeps the smallest rank whose discarded squared weight (relative to the
    total) is at most ``cutoff``, capped at ``chi_max``; values below
    ``SVD_ZERO`` are always dropped. Returns ``(rank, discarded, forced)``
    where ``forced`` means the cap pushed the discarded weight above cutoff.
    """
    w = s**2
    total = float(w.sum())
    if total == 0.0:
        return 1, 0.0, False
    tail = np.concatenate([np.cumsum(w[::-1])[::-1], [0.0]]) / total
    k = int(np.argmax(tail <= cutoff))
    k = max(1, min(k, int(np.sum(s > SVD_ZERO))))
    forced = False
    if chi_max is not None and k > chi_max:
        k, forced = chi_max, True
    discarded = float(tail[k])
    return k, discarded, forced and discarded > cutoff


def entropy_from_schmidt(s: np.ndarray, n: float = 1.0) -> float:
    """Entanglement entropy (natural log) from Schmidt coefficients."""
    p = np.asarray(s, dtype=float) ** 2
    p = p[np.sqrt(p) > SVD_ZERO]
    p = p / p.sum()
    if n == 1:
        return float(max(0.0, -np.sum(p * np.log(p))))
    if n == 0:
        return float(np.log(len(p)))
    if np.isinf(n):
        return float(-np.log(p.max()))
    return float(max(0.0, np.log(np.sum(p**n)) / (1.0 - n)))


# ---------------------------------------------------------------- construction


def product_state(L: int, local_states: Sequence[Sequence[complex]] | Sequence[complex]) -> MPS:
    """Bond-dimension-one state; a single 2-vector is repeated on every site."""
    if L < 2:
        raise ValueError("need at least two sites")
    arr = np.asarray(local_states, dtype=complex)
    if arr.ndim == 1:
        arr = np.tile(arr, (L, 1))
    if arr.shape != (L, 2):
        raise ValueError(f"expected {L} local 2-vectors, got shape {arr.shape}")
    norms = np.linalg.norm(arr, axis=1)
    if not np.allclose(norms, 1.0, atol=1e-10):
        raise ValueError("local states must be normalized")
    tensors = tuple(v.reshape(1, 2, 1) for v in arr)
    one = np.array([1.0])
    return MPS(tensors, (one,) * (L - 1), center=0)


def basis_state(bits: str | Sequence[int]) -> MPS:
    vecs = [[1, 0] if int(b) == 0 else [0, 1] for b in bits]
    return product_state(len(vecs), vecs)


def random_mps(L: int, chi: int, seed: int | np.random.Generator | None = None, real: bool = False) -> MPS:
    """Random normalized state with bond dimension at most ``chi``, canonicalized."""
    rng = np.random.default_rng(seed)
    dims = [1] + [min(chi, 2**min(i, L - i)) for i in range(1, L)] + [1]
    tensors = []
    for i in range(L):
        shape = (dims[i], 2, dims[i + 1])
        t = rng.normal(size=shape)
        if not real:
            t = t + 1j * rng.normal(size=shape)
        tensors.append(t)
    return canonicalize(MPS(tuple(tensors)))


def from_dense(psi: np.ndarray, chi_max: int | None = None, cutoff: float = 0.0) -> MPS:
    """Exact (or truncated) MPS of a dense state vector by sequential SVDs."""
    psi = np.asarray(psi)
    L = int(round(np.log2(psi.size)))
    if 2**L != psi.size:
        raise ValueError("state size is not a power of two")
    psi = psi / np.linalg.norm(psi)
    tensors = []
    rest = psi.reshape(1, -1)
    for i in range(L - 1):
        chil = rest.shape[0]
        m = rest.reshape(chil * 2, -1)
        u, s, vh = svd(m)
        k, _, _ = truncation_rank(s, chi_max, cutoff)
        tensors.append(u[:, :k].reshape(chil, 2, k))
        rest = s[:k, None] * vh[:k]
    tensors.append(rest.reshape(rest.shape[0], 2, 1))
    return canonicalize(MPS(tuple(tensors)))


def to_dense(state: MPS) -> np.ndarray:
    if state.length > 24:
        raise MemoryBudgetExceeded("refusing to build a dense vector beyond 24 sites")
    v = state.tensors[0].reshape(2, -1)
    for t in state.tensors[1:]:
        v = (v @ t.reshape(t.shape[0], -1)).reshape(-1, t.shape[2])
    return v.reshape(-1)


def tensor_product(a: MPS, b: MPS) -> MPS:
    """``|a> ⊗ |b>`` with ``a`` on the left sites."""
    one = np.array([1.0])
    return canonicalize(MPS(a.tensors + b.tensors, a.schmidt + (one,) + b.schmidt))


# ---------------------------------------------------------------- canonical forms


def _left_qr(t: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    chil, d, chir = t.shape
    q, r = np.linalg.qr(t.reshape(chil * d, chir))
    return q.reshape(chil, d, -1), r


def _right_qr(t: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    chil, d, chir = t.shape
    q, r = np.linalg.qr(t.reshape(chil, d * chir).T)
    return q.T.reshape(-1, d, chir), r.T


def canonicalize(state: MPS, center: int | str = "right") -> MPS:
    """Bring ``state`` to canonical form and refresh every bond's Schmidt values.

    ``center="right"`` means right-normalized (orthogonality center on site 0).
    The state is normalized; numerically zero Schmidt values are dropped.
    """
    L = state.length
    c = 0 if center == "right" else int(center)
    if not 0 <= c < L:
        raise IndexError(f"center {c} outside the chain")
    ts = [np.array(t) for t in state.tensors]
    # right-to-left QR sweep
    for i in range(L - 1, 0, -1):
        q, r = _right_qr(ts[i])
        ts[i] = q
        ts[i - 1] = np.tensordot(ts[i - 1], r, axes=(2, 0))
    ts[0] = ts[0] / np.linalg.norm(ts[0])
    # left-to-right SVD sweep records Schmidt values
    schmidt: list[np.ndarray] = []
    for i in range(L - 1):
        chil, d, chir = ts[i].shape
        u, s, vh = svd(ts[i].reshape(chil * d, chir))
        k = max(1, int(np.sum(s > SVD_ZERO)))
        s = s[:k] / np.linalg.norm(s[:k])
        ts[i] = u[:, :k].reshape(chil, d, k)
        ts[i + 1] = np.tensordot(s[:, None] * vh[:k], ts[i + 1], axes=(1, 0))
        schmidt.append(s)
    ts[-1] = ts[-1] / np.linalg.norm(ts[-1])
    # move the center back
    for i in range(L - 1, c, -1):
        q, r = _right_qr(ts[i])
        ts[i] = q
        ts[i - 1] = np.tensordot(ts[i - 1], r, axes=(2, 0))
    return MPS(tuple(ts), tuple(schmidt), center=c, truncation_error=state.truncation_error)


def move_center(state: MPS, target: int) -> MPS:
    """Shift the orthogonality center with QR steps (Schmidt values are kept)."""
    if state.center is None:
        return canonicalize(state, target)
    ts = list(state.tensors)
    c = state.center
    while c < target:
        q, r = _left_qr(ts[c])
        ts[c] = q
        ts[c + 1] = np.tensordot(r, ts[c + 1], axes=(1, 0))
        c += 1
    while c > target:
        q, r = _right_qr(ts[c])
        ts[c] = q
        ts[c - 1] = np.tensordot(ts[c - 1], r, axes=(2, 0))
        c -= 1
    return replace(state, tensors=tuple(ts), center=c)


def is_left_normalized(t: np.ndarray, atol: float = 1e-10) -> bool:
    m = t.reshape(-1, t.shape[2])
    return np.allclose(m.conj().T @ m, np.eye(m.shape[1]), atol=atol)


def is_right_normalized(t: np.ndarray, atol: float = 1e-10) -> bool:
    m = t.reshape(t.shape[0], -1)
    return np.allclose(m @ m.conj().T, np.eye(m.shape[0]), atol=atol)


# ---------------------------------------------------------------- measurements


def overlap(a: MPS, b: MPS) -> complex:
    """``<a|b>``."""
    if a.length != b.length:
        raise ValueError("length mismatch")
    env = np.ones((1, 1), dtype=complex)
    for ta, tb in zip(a.tensors, b.tensors):
        x = env @ tb.reshape(tb.shape[0], -1)
        x = x.reshape(ta.shape[0] * 2, tb.shape[2])
        env = ta.reshape(-1, ta.shape[2]).conj().T @ x
    return complex(env[0, 0])


def norm(state: MPS) -> float:
    return float(np.sqrt(abs(overlap(state, state))))


def entanglement_entropy(state: MPS, bond: int, renyi_index: float = 1.0) -> float:
    """Entropy (natural log) of the first ``bond`` sites."""
    return entropy_from_schmidt(state.singular_values(bond), renyi_index)


def entropy_profile(state: MPS, renyi_index: float = 1.0) -> np.ndarray:
    if any(s is None for s in state.schmidt):
        state = canonicalize(state)
    return np.array([entanglement_entropy(state, b, renyi_index) for b in range(1, state.length)])


def _apply_letter(letter: str, t: np.ndarray) -> np.ndarray:
    if letter == "I":
        return t
    return np.einsum("st,atb->asb", PAULI_MATRICES[letter], t)


def transfer(env: np.ndarray, t: np.ndarray, op: np.ndarray | None = None) -> np.ndarray:
    """One step of ``E -> sum A^dag E op A`` with ``E`` indexed (bra, ket)."""
    chil, d, chir = t.shape
    x = (env @ t.reshape(chil, d * chir)).reshape(env.shape[0], d, chir)
    if op is not None:
        x = np.einsum("st,atb->asb", op, x)
    return t.reshape(chil * d, chir).conj().T @ x.reshape(chil * d, chir)


def expectation_pauli(state: MPS, p: PauliString | str) -> float:
    """``<psi|P|psi>`` for a Hermitian Pauli string, by one transfer sweep."""
    if isinstance(p, str):
        p = pauli(p)
    if len(p) != state.length:
        raise ValueError(f"Pauli string of length {len(p)} on a chain of {state.length}")
    if not p.is_hermitian:
        raise ValueError("Pauli string with imaginary phase is not an observable")
    env = np.ones((1, 1), dtype=complex)
    for letter, t in zip(p.letters, state.tensors):
        env = transfer(env, t, None if letter == "I" else PAULI_MATRICES[letter])
    val = env[0, 0] * p.sign
    return float(val.real)


def expectation_local(state: MPS, ops: dict[int, np.ndarray]) -> complex:
    env = np.ones((1, 1), dtype=complex)
    for i, t in enumerate(state.tensors):
        env = transfer(env, t, ops.get(i))
    return complex(env[0, 0])


def rdm_purity(
    state: MPS,
    region: Iterable[int],
    renyi_order: int = 2,
    mem_budget: int = DEFAULT_MEM_BUDGET,
) -> float:
    """``Tr(rho_R^n)`` for any (possibly disconnected) set of sites.

    Contracts ``n`` ket and ``n`` bra layers; inside the region the bra of
    copy ``c`` is glued to the ket of copy ``c+1``. The environment holds
    ``chi**(2n)`` entries, which is checked against ``mem_budget``.
    """
    n = int(renyi_order)
    if n < 1:
        raise ValueError("renyi order must be a positive integer")
    reg = set(int(r) for r in region)
    if not reg <= set(range(state.length)):
        raise ValueError("region outside the chain")
    if n == 1 or not reg:
        return 1.0
    if len(reg) <= DENSE_PURITY_SITES:
        try:
            rho = reduced_density_matrix(state, sorted(reg), mem_budget)
        except MemoryBudgetExceeded:
            pass
        else:
            return float(np.trace(np.linalg.matrix_power(rho, n)).real)
    lo, hi = min(reg), max(reg)
    state = move_center(state, lo) if state.center is not None else canonicalize(state, lo)
    chi_max = max(state.tensors[i].shape[2] for i in range(lo, hi + 1))
    chi_max = max(chi_max, state.tensors[lo].shape[0])
    need = 16 * chi_max ** (2 * n) * 4
    if need > mem_budget:
        raise MemoryBudgetExceeded(f"purity contraction needs ~{need / 2**20:.0f} MiB")
    # left of lo: left-normalized -> identity; right of hi: right-normalized -> identity
    chil = state.tensors[lo].shape[0]
    eye = np.eye(chil, dtype=complex)
    env = eye
    for _ in range(n - 1):
        env = np.multiply.outer(env, eye)
    # env indices: (k0, b0, k1, b1, ...)
    letters = "abcdefghijklmnopqrstuvwxyz"
    for i in range(lo, hi + 1):
        t = state.tensors[i]
        inside = i in reg
        env_idx = []
        ops = []
        out_idx = []
        phys = [letters[20 + c] for c in range(n)]  # u, v, w, ...
        for c in range(n):
            k_in, b_in = letters[2 * c], letters[2 * c + 1]
            k_out, b_out = letters[2 * c].upper(), letters[2 * c + 1].upper()
            env_idx += [k_in, b_in]
            p_ket = phys[c]
            p_bra = phys[(c + 1) % n] if inside else phys[c]
            ops.append(f"{k_in}{p_ket}{k_out}")
            ops.append(f"{b_in}{p_bra}{b_out}")
            out_idx += [k_out, b_out]
        sub = "".join(env_idx) + "," + ",".join(ops) + "->" + "".join(out_idx)
        operands = [env]
        for c in range(n):
            operands += [t, t.conj()]
        env = np.einsum(sub, *operands, optimize="greedy")
    # close with identities on every copy
    chir = state.tensors[hi].shape[2]
    d = chir
    idx = "".join(letters[2 * c] + letters[2 * c] for c in range(n))
    val = np.einsum(idx + "->", env.reshape((d,) * (2 * n)))
    return float(val.real)


def reduced_density_matrix(state: MPS, region: Sequence[int], mem_budget: int = DEFAULT_MEM_BUDGET) -> np.ndarray:
    """Dense ``rho_R`` ordered by increasing site index (first site most significant)."""
    reg = sorted(set(int(r) for r in region))
    lo, hi = reg[0], reg[-1]
    state = move_center(state, lo) if state.center is not None else canonicalize(state, lo)
    dim = 2 ** len(reg)
    if hi - lo + 1 == len(reg):
        # contiguous block: rho = Psi Psi^dag with Psi the block wavefunction
        chil = state.tensors[lo].shape[0]
        psi = np.asarray(state.tensors[lo])
        for i in range(lo + 1, hi + 1):
            psi = np.tensordot(psi, state.tensors[i], axes=(psi.ndim - 1, 0))
            if 16 * psi.size > mem_budget:
                raise MemoryBudgetExceeded("reduced density matrix too large")
        m = np.moveaxis(psi.reshape(chil, dim, -1), 1, 0).reshape(dim, -1)
        return m @ m.conj().T
    # last contiguous run is contracted as a block wavefunction
    start = hi
    while start - 1 in reg:
        start -= 1
    head = [r for r in reg if r < start]
    d_tail = 2 ** (hi - start + 1)
    d_head = 2 ** len(head)
    chi = max(state.tensors[i].shape[2] for i in range(lo, start))
    if 16 * (d_head * d_head * chi * chi + d_tail * d_tail * chi * chi) > mem_budget:
        raise MemoryBudgetExceeded("reduced density matrix too large")
    chil = state.tensors[lo].shape[0]
    # env[(ket open), a, (bra open), a'] flattened to (dk, chi, db, chi)
    env = np.eye(chil, dtype=complex).reshape(1, chil, 1, chil)
    for i in range(lo, start):
        t = state.tensors[i]
        x = np.tensordot(env, t, axes=(1, 0))  # p m b s c
        if i in head:
            x = np.tensordot(x, t.conj(), axes=(2, 0))  # p m s c t e
            dk, _, db, _ = env.shape
            env = x.transpose(0, 2, 3, 1, 4, 5).reshape(dk * 2, t.shape[2], db * 2, t.shape[2])
        else:
            env = np.tensordot(x, t.conj(), axes=([2, 3], [0, 1])).transpose(0, 2, 1, 3)
    psi = np.asarray(state.tensors[start])
    for i in range(start + 1, hi + 1):
        psi = np.tensordot(psi, state.tensors[i], axes=(psi.ndim - 1, 0))
    psi = psi.reshape(psi.shape[0], d_tail, -1)
    k = np.einsum("aqr,bcr->abqc", psi, psi.conj())
    rho = np.einsum("pamb,abqc->pqmc", env, k, optimize=True)
    return rho.reshape(d_head * d_tail, d_head * d_tail)


# ---------------------------------------------------------------- gates


def apply_two_site_gate(
    state: MPS,
    site: int,
    gate: np.ndarray,
    chi_max: int | None = None,
    svd_cutoff: float = DEFAULT_CUTOFF,
) -> MPS:
    """Apply a 4x4 unitary to sites ``(site, site+1)``; center ends on ``site+1``.

    The discarded weight accumulates in ``truncation_error``. If ``chi_max``
    forces discarding more than ``svd_cutoff`` a :class:`TruncationWarning`
    is emitted.
    """
    L = state.length
    if not 0 <= site < L - 1:
        raise IndexError(f"gate site {site} outside 0..{L - 2}")
    gate = np.asarray(gate).reshape(4, 4)
    if not np.allclose(gate.conj().T @ gate, np.eye(4), atol=1e-12):
        raise ValueError("gate is not unitary")
    if state.center is None:
        state = canonicalize(state, site)
    elif state.center not in (site, site + 1):
        state = move_center(state, site)
    ts = list(state.tensors)
    if state.center == site + 1:
        q, r = _right_qr(ts[site + 1])
        ts[site + 1] = q
        ts[site] = np.tensordot(ts[site], r, axes=(2, 0))
    a, b = ts[site], ts[site + 1]
    chil, chir = a.shape[0], b.shape[2]
    theta = np.tensordot(a, b, axes=(2, 0)).reshape(chil, 4, chir)
    theta = np.einsum("st,atb->asb", gate, theta)
    u, s, vh = svd(theta.reshape(chil * 2, 2 * chir))
    k, discarded, forced = truncation_rank(s, chi_max, svd_cutoff)
    if forced:
        warnings.warn(
            f"chi_max={chi_max} discarded weight {discarded:.3e} above cutoff at bond {site + 1}",
            TruncationWarning,
            stacklevel=2,
        )
    s = s[:k] / np.linalg.norm(s[:k])
    ts[site] = u[:, :k].reshape(chil, 2, k)
    ts[site + 1] = (s[:, None] * vh[:k]).reshape(k, 2, chir)
    schmidt = list(state.schmidt)
    if discarded > 1e-24:
        schmidt = [None] * (L - 1)
    schmidt[site] = s
    return MPS(tuple(ts), tuple(schmidt), center=site + 1, truncation_error=state.truncation_error + discarded)


def apply_single_site(state: MPS, site: int, op: np.ndarray) -> MPS:
    """Apply a one-site unitary (Schmidt values are unchanged)."""
    ts = list(state.tensors)
    ts[site] = np.einsum("st,atb->asb", op, ts[site])
    return replace(state, tensors=tuple(ts))


# ---------------------------------------------------------------- compression


@dataclass
class CompressionResult:
    state: MPS
    fidelity: float
    converged: bool
    history: list[float] = field(default_factory=list)


def truncate(state: MPS, chi_max: int, cutoff: float = 0.0) -> MPS:
    """SVD truncation sweep from a right-normalized state."""
    state = canonicalize(state)
    ts = list(state.tensors)
    discarded_total = 0.0
    for i in range(state.length - 1):
        chil, d, chir = ts[i].shape
        u, s, vh = svd(ts[i].reshape(chil * d, chir))
        k, disc, _ = truncation_rank(s, chi_max, cutoff)
        discarded_total += disc
        s = s[:k] / np.linalg.norm(s[:k])
        ts[i] = u[:, :k].reshape(chil, d, k)
        ts[i + 1] = np.tensordot(s[:, None] * vh[:k], ts[i + 1], axes=(1, 0))
    ts[-1] = ts[-1] / np.linalg.norm(ts[-1])
    out = MPS(tuple(ts), center=state.length - 1, truncation_error=state.truncation_error + discarded_total)
    return canonicalize(out)


def compress_to_chi(
    state: MPS,
    chi_target: int,
    max_sweeps: int = 20,
    tol: float = 1e-12,
) -> CompressionResult:
    """Closest state (in 2-norm) with bond dimension ``chi_target``.

    Starts from SVD truncation and improves the overlap by single-site
    alternating sweeps, which never decrease the fidelity ``|<out|in>|^2``.
    If the last sweep still improved by more than ``tol`` the result is
    returned with ``converged=False``.
    """
    if chi_target < 1:
        raise ValueError("chi_target must be positive")
    target = canonicalize(state)
    if target.max_bond <= chi_target:
        return CompressionResult(target, 1.0, True, [1.0])
    guess = truncate(target, chi_target)
    L = target.length
    fid0 = abs(overlap(guess, target)) ** 2
    history = [fid0]
    # guess right-normalized with center 0; environments are <guess|target>
    g = [np.array(t) for t in move_center(guess, 0).tensors]
    tt = target.tensors
    right = [None] * (L + 1)
    right[L] = np.ones((1, 1), dtype=complex)
    for i in range(L - 1, 0, -1):
        right[i] = _overlap_right(right[i + 1], g[i], tt[i])
    left = [None] * (L + 1)
    left[0] = np.ones((1, 1), dtype=complex)
    converged = False
    best = fid0
    for sweep in range(max_sweeps):
        fid = 0.0
        # left-to-right
        for i in range(L):
            m = _optimal_site(left[i], tt[i], right[i + 1])
            nrm = np.linalg.norm(m)
            fid = nrm**2
            m = m / nrm
            if i < L - 1:
                q, r = _left_qr(m)
                g[i] = q
                g[i + 1] = np.tensordot(r, g[i + 1], axes=(1, 0))
                left[i + 1] = _overlap_left(left[i], g[i], tt[i])
            else:
                g[i] = m
        # right-to-left
        for i in range(L - 1, -1, -1):
            m = _optimal_site(left[i], tt[i], right[i + 1])
            nrm = np.linalg.norm(m)
            fid = nrm**2
            m = m / nrm
            if i > 0:
                q, r = _right_qr(m)
                g[i] = q
                g[i - 1] = np.tensordot(g[i - 1], r, axes=(2, 0))
                right[i] = _overlap_right(right[i + 1], g[i], tt[i])
            else:
                g[i] = m
        history.append(float(fid))
        if fid - best <= tol:
            converged = True
            best = max(best, fid)
            break
        best = fid
    out = canonicalize(MPS(tuple(g)))
    fidelity = abs(overlap(out, target)) ** 2
    return CompressionResult(out, float(fidelity), converged, history)


def _overlap_left(env: np.ndarray, g: np.ndarray, t: np.ndarray) -> np.ndarray:
    # env (guess bond, target bond)
    x = np.tensordot(env, t, axes=(1, 0))  # (g, s, t')
    return np.tensordot(g.conj(), x, axes=([0, 1], [0, 1]))


def _overlap_right(env: np.ndarray, g: np.ndarray, t: np.ndarray) -> np.ndarray:
    x = np.tensordot(t, env, axes=(2, 1))  # (t, s, g')
    return np.tensordot(x, g.conj(), axes=([1, 2], [1, 2])).T


def _optimal_site(left: np.ndarray, t: np.ndarray, right: np.ndarray) -> np.ndarray:
    x = np.tensordot(left, t, axes=(1, 0))
    return np.tensordot(x, right, axes=(2, 1))
