"""Two-site DMRG for open chains.

Each sweep is a left-to-right pass followed by a right-to-left pass. The bond
dimension ramps up by doubling from ``chi_init`` to ``chi_max``. The local
problem uses ARPACK through a ``LinearOperator``; small blocks go to dense ``eigh``.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Iterator

import numpy as np
import scipy.sparse.linalg as spla

from . import io
from .models import HamiltonianMPO, ModelSpec, build, mpo_expectation
from .mps import MPS, canonicalize, random_mps, svd, truncation_rank

log = logging.getLogger(__name__)

DENSE_LIMIT = 400
EDGE_PIN = 1e-6


@dataclass
class DMRGResult:
    """Outcome of a ground-state search.

    Unpacks as ``energy, state, converged``.
    """

    energy: float
    state: MPS
    converged: bool
    sweep_energies: list[float] = field(default_factory=list)
    sweep_truncation: list[float] = field(default_factory=list)
    chi_schedule: list[int] = field(default_factory=list)
    gap_estimate: float = float("nan")
    degenerate: bool = False
    meta: dict[str, Any] = field(default_factory=dict)

    def __iter__(self) -> Iterator[Any]:
        return iter((self.energy, self.state, self.converged))


def _left_env(env: np.ndarray, a: np.ndarray, w: np.ndarray) -> np.ndarray:
    """``env[x, w, y]`` with ``x`` bra, ``y`` ket, grown by one site."""
    t = np.tensordot(env, a, axes=(2, 0))  # x w s b
    t = np.tensordot(t, w, axes=([1, 2], [0, 3]))  # x b v o
    return np.tensordot(a.conj(), t, axes=([0, 1], [0, 3]))  # c b v -> (c, v, b) after transpose


def _grow_left(env: np.ndarray, a: np.ndarray, w: np.ndarray) -> np.ndarray:
    return _left_env(env, a, w).transpose(0, 2, 1)


def _grow_right(env: np.ndarray, b: np.ndarray, w: np.ndarray) -> np.ndarray:
    """``env[x, w, y]`` for the sites to the right, grown by one site."""
    t = np.tensordot(b, env, axes=(2, 2))  # a s x w   (ket)
    t = np.tensordot(t, w, axes=([1, 3], [3, 1]))  # a x v o
    return np.tensordot(b.conj(), t, axes=([1, 2], [3, 1])).transpose(0, 2, 1)  # (c, a, v) -> (c, v, a)


def _heff_apply(le: np.ndarray, w1: np.ndarray, w2: np.ndarray, re: np.ndarray, theta: np.ndarray) -> np.ndarray:
    t = np.tensordot(le, theta, axes=(2, 0))  # a w s1 s2 b'
    t = np.tensordot(t, w1, axes=([1, 2], [0, 3]))  # a s2 b' v o1
    t = np.tensordot(t, w2, axes=([1, 3], [3, 0]))  # a b' o1 u o2
    t = np.tensordot(t, re, axes=([1, 3], [2, 1]))  # a o1 o2 b
    return t


def _heff_dense(le, w1, w2, re) -> np.ndarray:
    h = np.einsum("awx,wvst,vuqr,buy->asqbxtry", le, w1, w2, re, optimize=True)
    n = le.shape[0] * 4 * re.shape[0]
    return h.reshape(n, n)


def _local_solve(le, w1, w2, re, theta, tol, k=1):
    shape = theta.shape
    n = theta.size
    if n <= DENSE_LIMIT:
        h = _heff_dense(le, w1, w2, re)
        h = 0.5 * (h + h.conj().T)
        vals, vecs = np.linalg.eigh(h)
        return vals[:k], vecs[:, 0].reshape(shape)
    dtype = np.result_type(theta, le, w1)

    def mv(x):
        return _heff_apply(le, w1, w2, re, x.reshape(shape)).reshape(-1)

    op = spla.LinearOperator((n, n), matvec=mv, dtype=dtype)
    v0 = theta.reshape(-1)
    vals, vecs = spla.eigsh(op, k=k, which="SA", v0=v0, tol=tol, ncv=min(n - 1, max(20, 2 * k + 1)))
    order = np.argsort(vals)
    return vals[order], vecs[:, order[0]].reshape(shape)


def ground_state(
    mpo: HamiltonianMPO,
    chi_max: int = 64,
    n_sweeps: int = 20,
    energy_tol: float = 1e-10,
    seed: int = 0,
    *,
    chi_init: int = 8,
    svd_cutoff: float = 1e-12,
    trunc_tol: float = 1e-7,
    min_sweeps: int = 2,
    eig_tol: float = 1e-12,
    initial_state: MPS | None = None,
    checkpoint: str | Path | None = None,
    history: DMRGResult | None = None,
) -> DMRGResult:
    """Two-site DMRG ground state.

    Args:
        mpo: Hamiltonian.
        chi_max: Largest bond dimension.
        n_sweeps: Sweep budget (one sweep = right pass + left pass).
        energy_tol: Convergence threshold on the per-sweep energy change.
        seed: Seed for the random initial MPS.
        trunc_tol: Largest per-bond discarded weight that still counts as converged.
        initial_state: Start from this MPS instead of a random one.
        checkpoint: If given, the state and sweep history are written here after every sweep.

    Returns:
        A :class:`DMRGResult`; ``converged`` is False if the budget ran out.
    """
    if chi_max < 2:
        raise ValueError("chi_max must be at least 2")
    L = mpo.length
    W = mpo.tensors
    real = all(np.isrealobj(w) for w in W)
    if initial_state is None:
        state = random_mps(L, min(chi_init, chi_max), seed=seed, real=real)
    else:
        state = initial_state
    state = canonicalize(state, "right")
    A = [np.array(t) for t in state.tensors]
    dtype = np.result_type(*A, *W)
    A = [a.astype(dtype) for a in A]

    one = np.ones((1, 1, 1), dtype=dtype)
    Lenv: list[np.ndarray | None] = [None] * (L + 1)
    Renv: list[np.ndarray | None] = [None] * (L + 1)
    Lenv[0] = one
    Renv[L] = one
    for i in range(L - 1, 0, -1):
        Renv[i] = _grow_right(Renv[i + 1], A[i], W[i])

    res = history or DMRGResult(float("nan"), state, False)
    prev = res.sweep_energies[-1] if res.sweep_energies else np.inf
    converged = False
    schmidt: list[np.ndarray | None] = [None] * (L - 1)
    energy = prev
    start_sweep = len(res.sweep_energies)
    for sweep in range(start_sweep, start_sweep + n_sweeps):
        chi = min(chi_max, chi_init * 2 ** (sweep - start_sweep + 1)) if initial_state is None else chi_max
        max_disc = 0.0
        for direction in (+1, -1):
            sites = range(0, L - 1) if direction > 0 else range(L - 2, -1, -1)
            for i in sites:
                theta = np.tensordot(A[i], A[i + 1], axes=(2, 0))
                vals, theta = _local_solve(Lenv[i], W[i], W[i + 1], Renv[i + 2], theta, eig_tol)
                energy = float(vals[0])
                chil, _, _, chir = theta.shape
                u, s, vh = svd(theta.reshape(chil * 2, 2 * chir))
                k, disc, _ = truncation_rank(s, chi, svd_cutoff)
                max_disc = max(max_disc, disc)
                s = s[:k] / np.linalg.norm(s[:k])
                schmidt[i] = s
                if direction > 0:
                    A[i] = u[:, :k].reshape(chil, 2, k)
                    A[i + 1] = (s[:, None] * vh[:k]).reshape(k, 2, chir)
                    Lenv[i + 1] = _grow_left(Lenv[i], A[i], W[i])
                else:
                    A[i] = (u[:, :k] * s).reshape(chil, 2, k)
                    A[i + 1] = vh[:k].reshape(k, 2, chir)
                    Renv[i + 1] = _grow_right(Renv[i + 2], A[i + 1], W[i + 1])
        res.sweep_energies.append(energy)
        res.sweep_truncation.append(max_disc)
        res.chi_schedule.append(chi)
        log.info("sweep %d chi=%d E=%.14f dE=%.3e trunc=%.2e", sweep, chi, energy, energy - prev, max_disc)
        dE = abs(energy - prev)
        prev = energy
        state = MPS(tuple(A), tuple(schmidt), center=0)
        if checkpoint is not None:
            save_checkpoint(checkpoint, state, res, seed)
        at_full_chi = chi == chi_max or max(state.bond_dims) < chi
        if (
            sweep - start_sweep + 1 >= min_sweeps
            and at_full_chi
            and dE < energy_tol
            and max_disc < trunc_tol
        ):
            converged = True
            break

    state = canonicalize(MPS(tuple(A), center=0), "right")
    res.state = state
    res.converged = converged
    res.energy = mpo_expectation(mpo, state)
    res.meta.update({"chi_max": chi_max, "seed": seed, "n_sweeps": len(res.sweep_energies)})
    res.gap_estimate, res.degenerate = _gap_report(state, W)
    if not converged:
        log.warning("DMRG did not converge in %d sweeps", n_sweeps)
    return res


def _gap_report(state: MPS, W) -> tuple[float, bool]:
    """Gap of the two-site effective Hamiltonian at the central bond.

    A near-zero gap signals a (quasi-)degenerate ground space.
    """
    L = state.length
    c = (L - 1) // 2
    A = list(state.tensors)  # right-normalized, center 0
    le = np.ones((1, 1, 1))
    for i in range(c):
        # shift the center to c with QR so the left block is an isometry
        chil, d, chir = A[i].shape
        q, r = np.linalg.qr(A[i].reshape(chil * d, chir))
        A[i] = q.reshape(chil, d, -1)
        A[i + 1] = np.tensordot(r, A[i + 1], axes=(1, 0))
        le = _grow_left(le, A[i], W[i])
    re = np.ones((1, 1, 1))
    for i in range(L - 1, c + 1, -1):
        re = _grow_right(re, A[i], W[i])
    theta = np.tensordot(A[c], A[c + 1], axes=(2, 0))
    if theta.size < 3:
        return float("nan"), False
    vals, _ = _local_solve(le, W[c], W[c + 1], re, theta, 1e-10, k=2)
    gap = float(vals[1] - vals[0]) if len(vals) > 1 else float("nan")
    return gap, bool(gap < 1e-6)


def save_checkpoint(path: str | Path, state: MPS, res: DMRGResult, seed: int) -> Path:
    meta = {
        "sweep_energies": res.sweep_energies,
        "sweep_truncation": res.sweep_truncation,
        "chi_schedule": res.chi_schedule,
        "seed": seed,
    }
    return io.save_container(path, "dmrg-checkpoint", state, meta)


def resume(mpo: HamiltonianMPO, path: str | Path, **kwargs: Any) -> DMRGResult:
    """Continue a run from a checkpoint written by :func:`ground_state`."""
    state, meta, _ = io.load_container(path, "dmrg-checkpoint")
    hist = DMRGResult(
        float("nan"),
        state,
        False,
        list(meta["sweep_energies"]),
        list(meta["sweep_truncation"]),
        list(meta["chi_schedule"]),
    )
    kwargs.setdefault("seed", meta["seed"])
    return ground_state(mpo, initial_state=state, history=hist, **kwargs)


def needs_pin(spec: ModelSpec) -> bool:
    return spec.family.startswith("Cluster") and "edge_field" not in spec.params


def solve(spec: ModelSpec, chi_max: int = 64, **kwargs: Any) -> DMRGResult:
    """Ground state of a model, with the cluster-chain edge pin handled.

    Cluster chains with open ends have a (quasi-)degenerate ground space.
    Unless ``edge_field`` is set explicitly, a field of ``1e-6`` along ``X``
    on the first site (half that on the last) selects one state; the
    reported energy is that of the unpinned Hamiltonian.
    """
    pinned = spec.with_params(edge_field=EDGE_PIN) if needs_pin(spec) else spec
    res = ground_state(build(pinned), chi_max=chi_max, **kwargs)
    if pinned is not spec:
        res.energy = mpo_expectation(build(spec), res.state)
        res.meta["edge_field"] = EDGE_PIN
    res.meta["model"] = spec.to_dict()
    return res


__all__ = ["DMRGResult", "ground_state", "resume", "solve", "save_checkpoint", "needs_pin"]
