"""Spin-chain Hamiltonians as MPOs and as dense matrices.

Each model is described once as translation-invariant rules (one-, two- and
three-site terms with open-chain sum limits) plus optional site-dependent
fields. The MPO is a finite-state-machine construction; the dense matrix is
an explicit sum of embedded terms, so the two routes check each other.

Operator conventions: the XXZ chain uses ``S = sigma/2``. The tricritical
Ising, cluster and transverse-field Ising chains use Pauli matrices by
default (``convention="pauli"``), which is the normalization under which
their critical points sit at ``h = 1``, ``V = 1`` and ``lambda = 0.428``;
``convention="spin"`` substitutes ``S = sigma/2`` literally.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any

import numpy as np
import scipy.sparse as sp

X = np.array([[0.0, 1.0], [1.0, 0.0]])
Z = np.array([[1.0, 0.0], [0.0, -1.0]])
IY = np.array([[0.0, 1.0], [-1.0, 0.0]])  # i * sigma_y, real
SP = np.array([[0.0, 1.0], [0.0, 0.0]])  # sigma^+ / 1  (|0> = up)
SM = SP.T
I2 = np.eye(2)

FAMILIES = ("XXZ", "TCI", "Cluster1", "Cluster2", "Cluster3", "IsingTF")
_MIN_L = {"XXZ": 2, "IsingTF": 2, "TCI": 3, "Cluster1": 3, "Cluster2": 3, "Cluster3": 3}
_DEFAULTS: dict[str, dict[str, float]] = {
    "XXZ": {"Jz": 0.0},
    "TCI": {"lam": 0.0},
    "Cluster1": {"h": 0.0},
    "Cluster2": {"h": 0.0, "D": 0.0},
    "Cluster3": {"V": 0.0},
    "IsingTF": {"h": 1.0},
}


@dataclass(frozen=True)
class ModelSpec:
    """Model family, chain length and couplings.

    ``params`` keys: ``Jz`` (XXZ), ``lam`` (TCI), ``h`` (Cluster1/2, IsingTF),
    ``D`` (Cluster2), ``V`` (Cluster3). ``edge_field`` adds
    ``-edge_field * (Z_0 X_1 + X_{L-2} Z_{L-1} / 2)`` to Cluster1/2 and
    ``-edge_field * (X_0 + X_{L-1} / 2)`` to Cluster3 to split their
    edge-mode degeneracy; ``convention`` selects Pauli or spin-1/2 operators.
    """

    family: str
    L: int
    params: dict[str, Any] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if self.family not in FAMILIES:
            raise ValueError(f"unknown model family {self.family!r}; expected one of {FAMILIES}")
        if self.L < _MIN_L[self.family]:
            raise ValueError(f"{self.family} needs L >= {_MIN_L[self.family]}")
        merged = dict(_DEFAULTS[self.family])
        merged.update(self.params)
        for k, v in merged.items():
            if k != "convention" and not np.isreal(v):
                raise ValueError(f"parameter {k} must be real")
        object.__setattr__(self, "params", merged)

    def with_params(self, **kw: Any) -> "ModelSpec":
        p = dict(self.params)
        p.update(kw)
        return ModelSpec(self.family, self.L, p)

    def to_dict(self) -> dict:
        return {"family": self.family, "L": self.L, "params": dict(self.params)}


@dataclass
class Rules:
    """Translation-invariant terms on an open chain.

    ``onsite``: ``[(c, A)]`` summed over every site; ``bonds``:
    ``[(c, A, B)]`` over ``i = 0..L-2``; ``triples``: ``[(c, A, B, C)]`` over
    ``i = 0..L-3``; ``fields``: ``{site: [(c, A)]}`` extra local terms;
    ``local_bonds``: ``{site: [(c, A, B)]}`` extra terms on ``(site, site + 1)``.
    """

    onsite: list = field(default_factory=list)
    bonds: list = field(default_factory=list)
    triples: list = field(default_factory=list)
    fields: dict = field(default_factory=dict)
    local_bonds: dict = field(default_factory=dict)


@dataclass
class HamiltonianMPO:
    """MPO with site tensors ``W[i]`` of shape ``(D_left, D_right, out, in)``."""

    tensors: list[np.ndarray]
    spec: ModelSpec | None = None

    @property
    def length(self) -> int:
        return len(self.tensors)

    @property
    def bond_dims(self) -> list[int]:
        return [w.shape[1] for w in self.tensors[:-1]]

    def to_dense(self) -> np.ndarray:
        """Contract the MPO into a dense matrix (small chains only)."""
        if self.length > 12:
            raise MemoryError("dense MPO contraction limited to 12 sites")
        m = self.tensors[0][0]  # (D, out, in)
        for w in self.tensors[1:]:
            m = np.einsum("aij,abkl->bikjl", m, w)
            d, o1, o2, i1, i2 = m.shape
            m = m.reshape(d, o1 * o2, i1 * i2)
        return m[0]

    def apply(self, psi: np.ndarray) -> np.ndarray:
        """``H|psi>`` for a dense vector, contracting the MPO site by site."""
        L = self.length
        # the MPO bond rides along as the last axis
        v = np.asarray(psi).reshape((2,) * L + (1,))
        for i, w in enumerate(self.tensors):
            # v: (..., s_i, ..., D_left) -> contract s_i and D_left
            v = np.tensordot(v, w, axes=([i, L], [3, 0]))  # appends (D_right, out)
            v = np.moveaxis(v, -1, i)
        return v.reshape(-1)


def _scale(convention: str) -> float:
    if convention == "pauli":
        return 1.0
    if convention == "spin":
        return 0.5
    raise ValueError(f"unknown operator convention {convention!r}")


def model_rules(spec: ModelSpec) -> Rules:
    """Terms of each Hamiltonian written out on an open chain."""
    p = spec.params
    fam = spec.family
    r = Rules()
    if fam == "XXZ":
        # H = -sum (SxSx + SySy + Jz SzSz), S = sigma/2; SxSx+SySy = (S+S- + S-S+)/2
        jz = float(p["Jz"])
        r.bonds = [(-0.5, SP, SM), (-0.5, SM, SP), (-0.25 * jz, Z, Z)]
        return r
    s = _scale(p.get("convention", "pauli"))
    if fam == "IsingTF":
        r.bonds = [(-(s**2), Z, Z)]
        r.onsite = [(-float(p["h"]) * s, X)]
    elif fam == "TCI":
        lam = float(p["lam"])
        r.bonds = [(-(s**2), Z, Z)]
        r.onsite = [(-s, X)]
        r.triples = [(lam * s**3, X, Z, Z), (lam * s**3, Z, Z, X)]
    elif fam in ("Cluster1", "Cluster2", "Cluster3"):
        r.triples = [(-(s**3), X, Z, X)]
        if fam in ("Cluster1", "Cluster2"):
            r.onsite = [(float(p["h"]) * s, Z)]
        if fam == "Cluster2":
            r.bonds = [(float(p["D"]) * s**2, Z, Z)]
        if fam == "Cluster3":
            # sigma_y sigma_y = -(i sigma_y)(i sigma_y)
            r.bonds = [(-float(p["V"]) * s**2, IY, IY)]
        eps = float(p.get("edge_field", 0.0))
        if eps and fam == "Cluster3":
            # the exact Cluster3 doublet is split by single-site X only; X_0 and
            # X_{L-1} act on it with opposite signs, hence the unequal ends
            r.fields = {0: [(-eps, X)], spec.L - 1: [(-0.5 * eps, X)]}
        elif eps:
            # edge stabilizers Z_0 X_1 and X_{L-2} Z_{L-1} select the open cluster state
            r.local_bonds = {0: [(-eps, Z, X)], spec.L - 2: [(-0.5 * eps, X, Z)]}
    return r


def rules_to_mpo(rules: Rules, L: int) -> HamiltonianMPO:
    """Lower-triangular finite-state-machine MPO.

    State 0 means "no term started", the last state "term finished"; every
    multi-site term gets its own chain of intermediate states, so a term that
    would run past the right edge is never completed.
    """
    local = [(i, c, a, b) for i, terms in sorted(rules.local_bonds.items()) for c, a, b in terms]
    n_states = 2 + len(rules.bonds) + 2 * len(rules.triples) + len(local)
    start, fin = 0, n_states - 1
    dtype = np.result_type(
        float, *[op for t in rules.onsite + rules.bonds + rules.triples for op in t[1:]]
    )
    bulk = np.zeros((n_states, n_states, 2, 2), dtype=dtype)
    bulk[start, start] = I2
    bulk[fin, fin] = I2
    k = 1
    for c, a, b in rules.bonds:
        bulk[start, k] = c * a
        bulk[k, fin] = b
        k += 1
    for c, a, b, cc in rules.triples:
        bulk[start, k] = c * a
        bulk[k, k + 1] = b
        bulk[k + 1, fin] = cc
        k += 2
    onsite = sum((c * a for c, a in rules.onsite), np.zeros((2, 2)))
    tensors = []
    for i in range(L):
        w = bulk.copy()
        loc = onsite + sum((c * a for c, a in rules.fields.get(i, [])), np.zeros((2, 2)))
        w[start, fin] = loc
        # site-specific bond terms each own one intermediate state
        for j, (site, c, a, b) in enumerate(local):
            if i == site:
                w[start, k + j] = c * a
            if i == site + 1:
                w[k + j, fin] = b
        if i == 0:
            w = w[start : start + 1]
        if i == L - 1:
            w = w[:, fin : fin + 1]
        tensors.append(w)
    return HamiltonianMPO(tensors)


def _embed(ops: dict[int, np.ndarray], L: int) -> sp.csr_matrix:
    out = sp.identity(1, format="csr", dtype=float)
    for i in range(L):
        out = sp.kron(out, sp.csr_matrix(ops.get(i, I2)), format="csr")
    return out


def rules_to_sparse(rules: Rules, L: int) -> sp.csr_matrix:
    """Explicit sum of embedded terms."""
    h = sp.csr_matrix((2**L, 2**L), dtype=float)
    for c, a in rules.onsite:
        for i in range(L):
            h = h + c * _embed({i: a}, L)
    for c, a, b in rules.bonds:
        for i in range(L - 1):
            h = h + c * _embed({i: a, i + 1: b}, L)
    for c, a, b, cc in rules.triples:
        for i in range(L - 2):
            h = h + c * _embed({i: a, i + 1: b, i + 2: cc}, L)
    for i, terms in rules.fields.items():
        for c, a in terms:
            h = h + c * _embed({i: a}, L)
    for i, terms in rules.local_bonds.items():
        for c, a, b in terms:
            h = h + c * _embed({i: a, i + 1: b}, L)
    return h.tocsr()


def build(spec: ModelSpec) -> HamiltonianMPO:
    mpo = rules_to_mpo(model_rules(spec), spec.L)
    mpo.spec = spec
    return mpo


def dense_hamiltonian(spec: ModelSpec) -> np.ndarray:
    if spec.L > 14:
        raise MemoryError("dense Hamiltonian limited to L <= 14")
    return rules_to_sparse(model_rules(spec), spec.L).toarray()


def sparse_hamiltonian(spec: ModelSpec) -> sp.csr_matrix:
    return rules_to_sparse(model_rules(spec), spec.L)


def build_xxz(L: int, Jz: float) -> HamiltonianMPO:
    """``H = -sum_i (Sx Sx + Sy Sy + Jz Sz Sz)`` with ``S = sigma/2``."""
    return build(ModelSpec("XXZ", L, {"Jz": Jz}))


def build_tci(L: int, lam: float, convention: str = "pauli") -> HamiltonianMPO:
    """Critical transverse-field Ising chain plus ``lam`` times the three-spin term."""
    return build(ModelSpec("TCI", L, {"lam": lam, "convention": convention}))


def build_ising(L: int, h: float = 1.0, convention: str = "pauli") -> HamiltonianMPO:
    return build(ModelSpec("IsingTF", L, {"h": h, "convention": convention}))


def build_cluster(variant: int, L: int, convention: str = "pauli", edge_field: float = 0.0, **params: float) -> HamiltonianMPO:
    """Cluster-Ising chains.

    1: ``-sum XZX + h sum Z``; 2: variant 1 plus ``D sum ZZ``;
    3: ``-sum XZX + V sum YY``.
    """
    fam = {1: "Cluster1", 2: "Cluster2", 3: "Cluster3"}.get(variant)
    if fam is None:
        raise ValueError(f"unknown cluster variant {variant!r}")
    p = dict(params, convention=convention, edge_field=edge_field)
    return build(ModelSpec(fam, L, p))


def mpo_expectation(mpo: HamiltonianMPO, state) -> float:
    """``<psi|H|psi>`` for an MPS (tensors ``(chi_l, 2, chi_r)``)."""
    env = np.ones((1, 1, 1), dtype=complex)
    for w, a in zip(mpo.tensors, state.tensors):
        env = np.einsum("xwy,xsa->wysa", env, a.conj(), optimize=True)
        env = np.einsum("wysa,wvst->yavt", env, w, optimize=True)
        env = np.einsum("yavt,ytb->avb", env, a, optimize=True)
    return float(env[0, 0, 0].real)
