"""Pauli strings and the one- and two-qubit Clifford groups.

Two-qubit Cliffords are carried both as a signed tableau (the images of
``XI, ZI, IX, IZ`` under conjugation) and as a 4x4 unitary. Qubit 0 is the
most significant tensor factor, i.e. ``kron(A, B)`` acts with ``A`` on the
left site of a bond.

The group is enumerated by closure over ``{H⊗I, I⊗H, S⊗I, I⊗S, CNOT}``;
modulo global phase it has 11520 elements, 720 modulo Pauli factors, and
20 left cosets of ``C1⊗C1``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from functools import cached_property, lru_cache
from importlib import resources
from typing import Iterable, Sequence

import numpy as np

LETTERS = "IXYZ"

PAULI_MATRICES = {
    "I": np.eye(2, dtype=complex),
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "Z": np.array([[1, 0], [0, -1]], dtype=complex),
}

# letter -> (x, z) with Y = i X Z
_XZ = {"I": (0, 0), "X": (1, 0), "Z": (0, 1), "Y": (1, 1)}
_FROM_XZ = {v: k for k, v in _XZ.items()}
# letter code used in tableau encodings: x + 2z  (I=0, X=1, Z=2, Y=3)
_CODE = {"I": 0, "X": 1, "Z": 2, "Y": 3}


class CliffordError(RuntimeError):
    """Raised when the group enumeration is internally inconsistent."""


@dataclass(frozen=True)
class PauliString:
    """A Pauli string ``i**phase * P_0 ⊗ P_1 ⊗ ...`` with letters in IXYZ."""

    letters: str
    phase: int = 0

    def __post_init__(self) -> None:
        if not self.letters or any(c not in LETTERS for c in self.letters):
            raise ValueError(f"invalid Pauli letters {self.letters!r}")
        object.__setattr__(self, "phase", self.phase % 4)

    @classmethod
    def from_xz(cls, x: Sequence[int], z: Sequence[int], phase: int = 0) -> "PauliString":
        """Build ``i**phase * prod_j X_j**x_j Z_j**z_j`` (note the X-before-Z order)."""
        letters = "".join(_FROM_XZ[(int(a) & 1, int(b) & 1)] for a, b in zip(x, z))
        n_y = sum(1 for c in letters if c == "Y")
        # X Z = -i Y, so each Y absorbs a factor i**-1
        return cls(letters, phase - n_y)

    @classmethod
    def single(cls, length: int, site: int, letter: str) -> "PauliString":
        chars = ["I"] * length
        chars[site] = letter
        return cls("".join(chars))

    def __len__(self) -> int:
        return len(self.letters)

    @property
    def x(self) -> np.ndarray:
        return np.array([_XZ[c][0] for c in self.letters], dtype=np.uint8)

    @property
    def z(self) -> np.ndarray:
        return np.array([_XZ[c][1] for c in self.letters], dtype=np.uint8)

    @property
    def xz_phase(self) -> int:
        """Phase exponent in the ``prod X**x Z**z`` representation."""
        return (self.phase + sum(1 for c in self.letters if c == "Y")) % 4

    @property
    def sign(self) -> complex:
        return 1j**self.phase

    @property
    def support(self) -> tuple[int, ...]:
        return tuple(i for i, c in enumerate(self.letters) if c != "I")

    @property
    def is_hermitian(self) -> bool:
        return self.phase % 2 == 0

    def __mul__(self, other: "PauliString") -> "PauliString":
        if len(self) != len(other):
            raise ValueError("length mismatch")
        x1, z1, x2, z2 = self.x, self.z, other.x, other.z
        phase = self.xz_phase + other.xz_phase + 2 * int(np.dot(z1, x2))
        return PauliString.from_xz(x1 ^ x2, z1 ^ z2, phase)

    def equiv(self, other: "PauliString") -> bool:
        """Projective comparison (ignores the phase)."""
        return self.letters == other.letters

    def commutes(self, other: "PauliString") -> bool:
        s = int(np.dot(self.x, other.z) + np.dot(self.z, other.x))
        return s % 2 == 0

    def restrict(self, sites: Sequence[int]) -> "PauliString":
        return PauliString("".join(self.letters[s] for s in sites))

    def replace(self, sites: Sequence[int], sub: "PauliString") -> "PauliString":
        chars = list(self.letters)
        for s, c in zip(sites, sub.letters):
            chars[s] = c
        return PauliString("".join(chars), self.phase + sub.phase)

    def matrix(self) -> np.ndarray:
        out = np.array([[1.0 + 0j]])
        for c in self.letters:
            out = np.kron(out, PAULI_MATRICES[c])
        return self.sign * out

    def __str__(self) -> str:
        prefix = {0: "+", 1: "+i", 2: "-", 3: "-i"}[self.phase]
        return prefix + self.letters


def pauli(spec: str) -> PauliString:
    """Parse strings like ``"XZI"``, ``"-XZ"`` or ``"+iYY"``."""
    phase = 0
    s = spec.strip()
    if s.startswith("-"):
        phase, s = 2, s[1:]
    elif s.startswith("+"):
        s = s[1:]
    if s.startswith("i"):
        phase, s = phase + 1, s[1:]
    return PauliString(s, phase)


_TWO_QUBIT_LABELS = [a + b for a in LETTERS for b in LETTERS]
_TWO_QUBIT_MATS = np.array([np.kron(PAULI_MATRICES[a], PAULI_MATRICES[b]) for a, b in _TWO_QUBIT_LABELS])
_GENERATOR_LABELS = ("XI", "ZI", "IX", "IZ")
_GENERATOR_MATS = np.array([_TWO_QUBIT_MATS[_TWO_QUBIT_LABELS.index(g)] for g in _GENERATOR_LABELS])


def _images_from_unitaries(us: np.ndarray) -> np.ndarray:
    """Tableau rows for a batch of unitaries.

    Returns an int array ``(n, 4, 2)`` holding, for each generator, the index
    of the image in ``_TWO_QUBIT_LABELS`` and its sign bit.
    """
    us = np.asarray(us).reshape(-1, 4, 4)
    q = np.einsum("nij,gjk,nlk->ngil", us, _GENERATOR_MATS, us.conj())
    coeff = np.einsum("pij,ngij->ngp", _TWO_QUBIT_MATS.conj(), q) / 4.0  # Tr(P^dagger q) / 4
    idx = np.argmax(np.abs(coeff), axis=-1)
    c = np.take_along_axis(coeff, idx[..., None], axis=-1)[..., 0]
    if not np.allclose(np.abs(c), 1.0, atol=1e-9) or not np.allclose(c.imag, 0.0, atol=1e-9):
        raise CliffordError("unitary is not Clifford")
    signs = (c.real < 0).astype(int)
    return np.stack([idx, signs], axis=-1)


def _encode(rows: np.ndarray) -> tuple[int, ...]:
    """Lexicographic key of a tableau; the identity is minimal among local Cliffords."""
    out: list[int] = []
    for idx, sgn in rows:
        lab = _TWO_QUBIT_LABELS[int(idx)]
        out.extend((_CODE[lab[0]], _CODE[lab[1]], int(sgn)))
    return tuple(out)


@dataclass(frozen=True, eq=False)
class CliffordGate2:
    """A two-qubit Clifford element.

    ``images`` are the conjugated images of ``XI, ZI, IX, IZ``. The unitary is
    fixed up to a global phase, normalized so that its first non-negligible
    entry is real positive.
    """

    unitary: np.ndarray
    images: tuple[PauliString, PauliString, PauliString, PauliString]
    gate_id: int | None = None
    label: str = ""

    @classmethod
    def from_unitary(cls, u: np.ndarray, gate_id: int | None = None, label: str = "") -> "CliffordGate2":
        u = _normalize_phase(np.asarray(u, dtype=complex).reshape(4, 4))
        rows = _images_from_unitaries(u[None])[0]
        images = tuple(
            PauliString(_TWO_QUBIT_LABELS[int(i)], 2 * int(s)) for i, s in rows
        )
        u.setflags(write=False)
        return cls(u, images, gate_id, label)  # type: ignore[arg-type]

    @cached_property
    def encoding(self) -> tuple[int, ...]:
        rows = [(_TWO_QUBIT_LABELS.index(p.letters), p.phase // 2) for p in self.images]
        return _encode(np.array(rows))

    @cached_property
    def symplectic(self) -> np.ndarray:
        """Binary 4x4 matrix; row k is the (x0, z0, x1, z1) image of generator k."""
        m = np.zeros((4, 4), dtype=np.uint8)
        for k, p in enumerate(self.images):
            m[k] = [p.x[0], p.z[0], p.x[1], p.z[1]]
        return m

    def conjugate(self, p: PauliString) -> PauliString:
        """Return ``U p U^dagger`` for a two-qubit Pauli ``p`` with exact phase."""
        if len(p) != 2:
            raise ValueError("expected a two-qubit Pauli")
        out = PauliString("II", p.xz_phase)
        x, z = p.x, p.z
        for bit, img in zip((x[0], z[0], x[1], z[1]), self.images):
            if bit:
                out = out * img
        return out

    def preserves_commutation(self) -> bool:
        a = self.images
        # XI/ZI and IX/IZ anticommute, every other pair commutes
        for i in range(4):
            for j in range(i + 1, 4):
                should = not ({i, j} in ({0, 1}, {2, 3}))
                if a[i].commutes(a[j]) != should:
                    return False
        return True

    def __eq__(self, other: object) -> bool:
        return isinstance(other, CliffordGate2) and self.encoding == other.encoding

    def __hash__(self) -> int:
        return hash(self.encoding)

    def inverse(self) -> "CliffordGate2":
        return CliffordGate2.from_unitary(self.unitary.conj().T)

    def __matmul__(self, other: "CliffordGate2") -> "CliffordGate2":
        return CliffordGate2.from_unitary(self.unitary @ other.unitary)


def _normalize_phase(u: np.ndarray) -> np.ndarray:
    flat = u.ravel()
    k = int(np.argmax(np.abs(flat) > 1e-9))
    return u * (abs(flat[k]) / flat[k])


def _projective_key(u: np.ndarray) -> bytes:
    v = np.round(_normalize_phase(u), 8) + 0.0  # +0.0 folds -0.0
    return v.tobytes()


H1 = np.array([[1, 1], [1, -1]], dtype=complex) / np.sqrt(2)
S1 = np.diag([1, 1j]).astype(complex)
I1 = np.eye(2, dtype=complex)
CNOT = np.array([[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]], dtype=complex)
CZ = np.diag([1, 1, 1, -1]).astype(complex)
SWAP = np.array([[1, 0, 0, 0], [0, 0, 1, 0], [0, 1, 0, 0], [0, 0, 0, 1]], dtype=complex)


def _closure(generators: Iterable[np.ndarray]) -> list[np.ndarray]:
    gens = list(generators)
    dim = gens[0].shape[0]
    start = np.eye(dim, dtype=complex)
    seen = {_projective_key(start): start}
    frontier = [start]
    while frontier:
        nxt = []
        for u in frontier:
            for g in gens:
                v = g @ u
                key = _projective_key(v)
                if key not in seen:
                    seen[key] = v
                    nxt.append(v)
        frontier = nxt
    return list(seen.values())


@lru_cache(maxsize=None)
def enumerate_c1() -> tuple[np.ndarray, ...]:
    """The 24 single-qubit Cliffords modulo phase, identity first."""
    return tuple(_normalize_phase(u) for u in _closure([H1, S1]))


@lru_cache(maxsize=None)
def _c2_unitaries() -> np.ndarray:
    gens = [np.kron(H1, I1), np.kron(I1, H1), np.kron(S1, I1), np.kron(I1, S1), CNOT]
    us = np.array([_normalize_phase(u) for u in _closure(gens)])
    return us


@lru_cache(maxsize=None)
def enumerate_c2() -> "GateSet":
    """All 11520 two-qubit Cliffords modulo phase, sorted by tableau encoding.

    Gate ids are positions in this ordering, which is platform independent.
    """
    us = _c2_unitaries()
    rows = _images_from_unitaries(us)
    keys = [_encode(r) for r in rows]
    order = sorted(range(len(keys)), key=keys.__getitem__)
    gates = tuple(CliffordGate2.from_unitary(us[k], gate_id=i) for i, k in enumerate(order))
    return GateSet(gates, "full")


def count_mod_pauli(gates: Iterable[CliffordGate2]) -> int:
    """Number of classes modulo Pauli factors (tableau without signs)."""
    return len({g.symplectic.tobytes() for g in gates})


def local_cliffords() -> np.ndarray:
    c1 = enumerate_c1()
    return np.array([np.kron(a, b) for a in c1 for b in c1])


@lru_cache(maxsize=None)
def coset_representatives() -> "GateSet":
    """Representatives of the left cosets ``(S1⊗S2)·V`` of ``C1⊗C1`` in ``C2``.

    Each coset is represented by its element with the smallest tableau
    encoding. The identity coset comes first; the rest follow in encoding
    order. All elements of the group are checked to be covered exactly once.
    """
    us = _c2_unitaries()
    index = {_projective_key(u): k for k, u in enumerate(us)}
    locs = local_cliffords()
    unseen = set(range(len(us)))
    reps: list[tuple[tuple[int, ...], np.ndarray]] = []
    for k in range(len(us)):
        if k not in unseen:
            continue
        orbit = locs @ us[k]
        members = []
        for u in orbit:
            m = index.get(_projective_key(u))
            if m is None:
                raise CliffordError("local multiple left the group")
            members.append(m)
        if len(set(members)) != len(locs):
            raise CliffordError("coset has wrong size")
        if not set(members) <= unseen:
            raise CliffordError("cosets overlap")
        unseen -= set(members)
        rows = _images_from_unitaries(orbit)
        keys = [_encode(r) for r in rows]
        j = min(range(len(keys)), key=keys.__getitem__)
        reps.append((keys[j], orbit[j]))
    if unseen:
        raise CliffordError("factorization failed for some group elements")
    ident = _encode(_images_from_unitaries(np.eye(4)[None])[0])
    reps.sort(key=lambda kv: (kv[0] != ident, kv[0]))
    gates = tuple(CliffordGate2.from_unitary(u, gate_id=i) for i, (_, u) in enumerate(reps))
    if gates[0].encoding != ident:
        raise CliffordError("identity coset is not represented by the identity")
    return GateSet(gates, "coset")


@dataclass(frozen=True)
class GateSet:
    """An ordered, immutable list of two-qubit Cliffords with stable ids."""

    gates: tuple[CliffordGate2, ...]
    tag: str
    unitaries: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        us = np.array([g.unitary for g in self.gates])
        us.setflags(write=False)
        object.__setattr__(self, "unitaries", us)

    def __len__(self) -> int:
        return len(self.gates)

    def __getitem__(self, i: int) -> CliffordGate2:
        return self.gates[i]

    def __iter__(self):
        return iter(self.gates)

    def index_of(self, gate: CliffordGate2) -> int:
        for g in self.gates:
            if g == gate:
                return int(g.gate_id)  # type: ignore[arg-type]
        raise KeyError("gate not in set")


def gate_set(tag: str) -> GateSet:
    if tag == "coset":
        return coset_representatives()
    if tag == "full":
        return enumerate_c2()
    raise ValueError(f"unknown gate set {tag!r}")


def conjugate_pauli(log: Iterable[tuple[int, CliffordGate2]], p: PauliString) -> PauliString:
    """Conjugate ``p`` by the circuit ``C = g_n ... g_1`` given as ``(site, gate)`` pairs.

    ``site`` is the left qubit of the bond the gate acts on.
    """
    out = p
    for site, gate in log:
        if not 0 <= site < len(p) - 1:
            raise ValueError(f"bond {site} out of range")
        sites = (site, site + 1)
        img = gate.conjugate(out.restrict(sites))
        out = out.replace(sites, img)
    return out


def inverse_log(log: Sequence[tuple[int, CliffordGate2]]) -> list[tuple[int, CliffordGate2]]:
    return [(site, gate.inverse()) for site, gate in reversed(log)]


def gate_table(gates: GateSet) -> list[dict]:
    """Serializable id <-> tableau table."""
    return [
        {"id": g.gate_id, "images": [str(p) for p in g.images], "encoding": list(g.encoding)}
        for g in gates
    ]


def load_coset_table() -> list[dict]:
    """The shipped id <-> tableau table for the 20 coset representatives."""
    text = resources.files("stabdis").joinpath("data/coset_gates.json").read_text()
    return json.loads(text)["gates"]
