"""Greedy two-qubit Clifford disentangling of an MPS.

A sweep visits every bond once. At each bond all candidate gates are applied
to the two-site tensor, the one giving the lowest von Neumann entropy at that
bond is kept (ties within ``TIE_TOL`` go to the identity, then the lowest
id), and the state is updated by SVD. The update drops at most a relative
squared weight ``TRUNC_WEIGHT`` per bond, so the Clifford-augmented state
reproduces the input to within the accumulated discarded weight.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Sequence

import numpy as np

from . import io
from .clifford import CliffordGate2, GateSet, gate_set
from .mps import (
    MPS,
    SVD_ZERO,
    apply_two_site_gate,
    canonicalize,
    entropy_from_schmidt,
    overlap,
    svd,
    truncation_rank,
)

TIE_TOL = 1e-12
SCHEDULES = ("alternate", "forward")
# relative squared weight a protocol SVD may drop; keeps replay overlaps above 1 - 1e-8
TRUNC_WEIGHT = 1e-12


@dataclass(frozen=True)
class GateLogEntry:
    sweep: int
    site: int  # left qubit; the gate acts on (site, site + 1)
    gate_id: int
    entropy_before: float
    entropy_after: float

    @property
    def bond(self) -> int:
        """Cut index ``l`` (number of sites to the left of the bond)."""
        return self.site + 1


@dataclass
class CampsRecord:
    """Clifford-augmented MPS: ``|psi> = C^dag |state>`` with ``C`` the logged circuit.

    ``trace[k]`` is the half-chain entropy after sweep ``k + 1``;
    ``initial_half_chain`` is the value before the first sweep.
    """

    state: MPS
    log: list[GateLogEntry]
    trace: list[float]
    gate_tag: str
    initial_half_chain: float
    converged: bool
    initial: MPS | None = None
    meta: dict[str, Any] = field(default_factory=dict)

    @property
    def length(self) -> int:
        return self.state.length

    @property
    def n_sweeps(self) -> int:
        return len(self.trace)

    def gates(self) -> GateSet:
        return gate_set(self.gate_tag)

    def circuit(self, effective: bool = True) -> list[tuple[int, CliffordGate2]]:
        """``(site, gate)`` pairs in application order (identities dropped if ``effective``)."""
        gs = self.gates()
        ident = identity_id(gs)
        return [(e.site, gs[e.gate_id]) for e in self.log if not (effective and e.gate_id == ident)]

    def effective_log(self) -> list[GateLogEntry]:
        ident = identity_id(self.gates())
        return [e for e in self.log if e.gate_id != ident]

    def sweeps_to_converge(self, tol: float = 1e-8) -> int:
        """Number of sweeps after which the half-chain entropy stays within ``tol`` of its final value."""
        final = self.trace[-1]
        for k, v in enumerate(self.trace):
            if abs(v - final) < tol:
                return k + 1
        return len(self.trace)


def identity_id(gates: GateSet) -> int:
    for g in gates:
        if np.allclose(g.unitary, np.eye(4)):
            return int(g.gate_id)
    raise ValueError("gate set has no identity")


def _entropies(svals: np.ndarray) -> np.ndarray:
    """Von Neumann entropies for a stack of singular-value vectors."""
    p = svals**2
    p = p / p.sum(axis=1, keepdims=True)
    with np.errstate(divide="ignore", invalid="ignore"):
        terms = np.where(p > SVD_ZERO**2, -p * np.log(p), 0.0)
    return terms.sum(axis=1)


def candidate_entropies(theta: np.ndarray, gates: GateSet) -> np.ndarray:
    """Entropy at the central cut of ``(U_g theta)`` for every gate ``g``.

    ``theta`` has shape ``(chi_l, 2, 2, chi_r)``.
    """
    chil, _, _, chir = theta.shape
    t = theta.reshape(chil, 4, chir)
    out = np.einsum("gpq,aqb->gapb", gates.unitaries, t)
    mats = out.reshape(len(gates), chil * 2, 2 * chir)
    s = np.linalg.svd(mats, compute_uv=False)
    return _entropies(s)


def select_gate(ent: np.ndarray, ident: int) -> int:
    best = float(ent.min())
    if ent[ident] <= best + TIE_TOL:
        return ident
    return int(np.flatnonzero(ent <= best + TIE_TOL)[0])


def _split(
    theta: np.ndarray, direction: int, trunc_weight: float, chi_max: int | None
) -> tuple[np.ndarray, np.ndarray, np.ndarray, float]:
    chil, _, _, chir = theta.shape
    u, s, vh = svd(theta.reshape(chil * 2, 2 * chir))
    k, discarded, _ = truncation_rank(s, chi_max, trunc_weight)
    s = s[:k] / np.linalg.norm(s[:k])
    if direction > 0:
        a = u[:, :k].reshape(chil, 2, k)
        b = (s[:, None] * vh[:k]).reshape(k, 2, chir)
    else:
        a = (u[:, :k] * s).reshape(chil, 2, k)
        b = vh[:k].reshape(k, 2, chir)
    return a, b, s, discarded


def sweep(
    state: MPS,
    gates: GateSet,
    direction: str = "left-to-right",
    sweep_index: int = 0,
    trunc_weight: float = TRUNC_WEIGHT,
    chi_max: int | None = None,
) -> tuple[MPS, list[GateLogEntry]]:
    """One pass over all bonds.

    A left-to-right pass starts from a right-normalized state (center on
    site 0) and leaves the center on the last site; a right-to-left pass
    does the opposite. The input is brought to the required form if needed.
    Candidate entropies are evaluated on the untruncated two-site tensor;
    the chosen update then drops a relative squared weight of at most
    ``trunc_weight`` (and caps the bond at ``chi_max`` when given).
    """
    L = state.length
    step = +1 if direction == "left-to-right" else -1
    if direction not in ("left-to-right", "right-to-left"):
        raise ValueError(f"unknown direction {direction!r}")
    start_center = 0 if step > 0 else L - 1
    if state.center != start_center or any(s is None for s in state.schmidt):
        state = canonicalize(state, start_center)
    ts = [np.array(t) for t in state.tensors]
    schmidt = list(state.schmidt)
    ident = identity_id(gates)
    log: list[GateLogEntry] = []
    discarded = 0.0
    sites = range(L - 1) if step > 0 else range(L - 2, -1, -1)
    for i in sites:
        theta = np.tensordot(ts[i], ts[i + 1], axes=(2, 0))
        ent = candidate_entropies(theta, gates)
        g = select_gate(ent, ident)
        if g != ident:
            chil, _, _, chir = theta.shape
            theta = np.einsum("pq,aqb->apb", gates.unitaries[g], theta.reshape(chil, 4, chir))
            theta = theta.reshape(chil, 2, 2, chir)
        ts[i], ts[i + 1], s, disc = _split(theta, step, trunc_weight, chi_max)
        discarded += disc
        schmidt[i] = s
        log.append(GateLogEntry(sweep_index, i, g, float(ent[ident]), entropy_from_schmidt(s)))
    center = L - 1 if step > 0 else 0
    return MPS(tuple(ts), tuple(schmidt), center=center, truncation_error=state.truncation_error + discarded), log


def _total_entropy(state: MPS) -> float:
    return float(sum(entropy_from_schmidt(state.singular_values(l)) for l in range(1, state.length)))


def disentangle(
    state: MPS,
    gates: GateSet | str = "coset",
    max_sweeps: int = 10,
    sweep_tol: float = 1e-8,
    keep_initial: bool = True,
    schedule: str = "alternate",
    trunc_weight: float = TRUNC_WEIGHT,
    chi_max: int | None = None,
) -> CampsRecord:
    """Sweeps until the entropies stop dropping.

    A run converges once a sweep lowers both the half-chain entropy and the
    summed profile by less than ``sweep_tol``, or applies only identities.

    ``schedule="alternate"`` reverses direction every sweep;
    ``"forward"`` always sweeps left to right, re-canonicalizing in between.
    """
    if max_sweeps < 1:
        raise ValueError("max_sweeps must be at least 1")
    if schedule not in SCHEDULES:
        raise ValueError(f"schedule must be one of {SCHEDULES}")
    gs = gate_set(gates) if isinstance(gates, str) else gates
    state = canonicalize(state, "right")
    L = state.length
    half = L // 2
    s0 = entropy_from_schmidt(state.singular_values(half))
    cur = state
    log: list[GateLogEntry] = []
    trace: list[float] = []
    ident = identity_id(gs)
    prev, prev_total = s0, _total_entropy(state)
    converged = False
    for k in range(max_sweeps):
        direction = "left-to-right" if schedule == "forward" or k % 2 == 0 else "right-to-left"
        cur, entries = sweep(cur, gs, direction, k, trunc_weight, chi_max)
        log.extend(entries)
        val = entropy_from_schmidt(cur.singular_values(half))
        total = _total_entropy(cur)
        trace.append(val)
        # the half-chain value can stall for a sweep while gates keep acting
        # elsewhere, so the summed profile has to settle as well
        idle = all(e.gate_id == ident for e in entries)
        if k >= 1 and (idle or (prev - val < sweep_tol and prev_total - total < sweep_tol)):
            converged = True
            break
        prev, prev_total = val, total
    return CampsRecord(
        cur, log, trace, gs.tag, s0, converged, state if keep_initial else None, {"schedule": schedule}
    )


# ---------------------------------------------------------------- observables


def smee_profile(record: CampsRecord) -> list[tuple[int, float]]:
    """Stabilizer-minimized entanglement entropy at every cut ``l = 1..L-1``."""
    st = record.state
    if any(s is None for s in st.schmidt):
        st = canonicalize(st)
    return [(b, entropy_from_schmidt(st.singular_values(b))) for b in range(1, st.length)]


@dataclass(frozen=True)
class GainReport:
    ell: int
    L: int
    S_A: float
    S_SM: float

    @property
    def delta(self) -> float:
        return self.S_A - self.S_SM


def entropy_gain(original: MPS, record: CampsRecord, ell: int) -> GainReport:
    """``Delta = S_A - S_A^SM`` at cut ``ell``."""
    if original.length != record.length:
        raise ValueError("state and record have different lengths")
    if any(s is None for s in original.schmidt):
        original = canonicalize(original)
    s_a = entropy_from_schmidt(original.singular_values(ell))
    s_sm = dict(smee_profile(record))[ell]
    return GainReport(ell, original.length, s_a, s_sm)


@dataclass
class GateSelectionMap:
    table: dict[tuple[int, int], int]
    modal_gate: dict[int, int]
    bulk_uniformity: dict[int, float]
    bulk_bonds: tuple[int, int]

    def gates_used(self) -> set[int]:
        return set(self.table.values())


def gate_selection_map(record: CampsRecord, margin: int | None = None) -> GateSelectionMap:
    """``(sweep, bond) -> gate id`` and, per sweep, the modal bulk gate.

    Bulk bonds are ``margin <= l <= L - margin``; the uniformity is the
    fraction of bulk bonds that chose the modal gate.
    """
    L = record.length
    m = max(2, L // 8) if margin is None else margin
    lo, hi = m, L - m
    table = {(e.sweep, e.bond): e.gate_id for e in record.log}
    modal, uni = {}, {}
    for sw in sorted({e.sweep for e in record.log}):
        ids = [g for (s, b), g in table.items() if s == sw and lo <= b <= hi]
        if not ids:
            continue
        vals, counts = np.unique(ids, return_counts=True)
        j = int(np.argmax(counts))
        modal[sw] = int(vals[j])
        uni[sw] = float(counts[j] / len(ids))
    return GateSelectionMap(table, modal, uni, (lo, hi))


def apply_circuit(state: MPS, circuit: Sequence[tuple[int, CliffordGate2]]) -> MPS:
    """Apply ``(site, gate)`` pairs in order, without truncation."""
    for site, g in circuit:
        state = apply_two_site_gate(state, site, g.unitary, chi_max=None, svd_cutoff=0.0)
    return state


def replay(record: CampsRecord) -> MPS:
    """Undo the logged circuit on the final state, recovering the input."""
    inv = [(site, g.inverse()) for site, g in reversed(record.circuit())]
    return canonicalize(apply_circuit(record.state, inv), "right")


def replay_overlap(record: CampsRecord, original: MPS | None = None) -> float:
    ref = original if original is not None else record.initial
    if ref is None:
        raise ValueError("record carries no initial state; pass it explicitly")
    return float(abs(overlap(ref, replay(record))))


# ---------------------------------------------------------------- persistence

_LOG_COLS = ("sweep", "site", "gate_id")


def save_record(path: str | Path, record: CampsRecord) -> Path:
    log = np.array([[e.sweep, e.site, e.gate_id] for e in record.log], dtype=np.int64).reshape(-1, 3)
    ents = np.array([[e.entropy_before, e.entropy_after] for e in record.log], dtype=float).reshape(-1, 2)
    extra: dict[str, np.ndarray] = {"log": log, "log_entropies": ents, "trace": np.array(record.trace)}
    if record.initial is not None:
        for i, t in enumerate(record.initial.tensors):
            extra[f"init_{i:04d}"] = np.asarray(t)
    meta = {
        "gate_tag": record.gate_tag,
        "initial_half_chain": record.initial_half_chain,
        "converged": record.converged,
        "log_columns": list(_LOG_COLS),
        "has_initial": record.initial is not None,
        **record.meta,
    }
    return io.save_container(path, "camps", record.state, meta, extra)


def load_record(path: str | Path) -> CampsRecord:
    state, meta, extra = io.load_container(path, "camps")
    log = [
        GateLogEntry(int(r[0]), int(r[1]), int(r[2]), float(e[0]), float(e[1]))
        for r, e in zip(extra["log"], extra["log_entropies"])
    ]
    initial = None
    if meta.get("has_initial"):
        n = sum(1 for k in extra if k.startswith("init_"))
        initial = canonicalize(MPS(tuple(extra[f"init_{i:04d}"] for i in range(n))), "right")
    known = {"gate_tag", "initial_half_chain", "converged", "log_columns", "has_initial"}
    return CampsRecord(
        state,
        log,
        [float(x) for x in extra["trace"]],
        meta["gate_tag"],
        float(meta["initial_half_chain"]),
        bool(meta["converged"]),
        initial,
        {k: v for k, v in meta.items() if k not in known},
    )


def half_chain_gain(original: MPS, record: CampsRecord) -> float:
    return entropy_gain(original, record, original.length // 2).delta


__all__ = [
    "CampsRecord",
    "GainReport",
    "GateLogEntry",
    "GateSelectionMap",
    "apply_circuit",
    "candidate_entropies",
    "disentangle",
    "entropy_gain",
    "gate_selection_map",
    "half_chain_gain",
    "identity_id",
    "load_record",
    "replay",
    "replay_overlap",
    "save_record",
    "smee_profile",
    "sweep",
]
