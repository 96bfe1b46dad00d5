"""Stabilizer Renyi entropies of MPS.

Estimators:

* ``sre_exact``: every Pauli expectation by batched transfer contractions
  (``4^L`` strings, small chains only).
* ``sre_sample``: perfect Pauli sampling. For a right-normalized MPS the
  marginal weight of a Pauli prefix is ``||E||_F^2 / 2^k`` with ``E`` the
  prefix transfer environment, so letters can be drawn site by site.
* ``sre_mixed_exact``: mixed-state SRE of a region from its exact RDM.
* ``mutual_sre``: Metropolis chains over Pauli strings with stationary law
  ``pi(P) ~ Tr(rho P)^2``. The chain mean of ``Tr(rho P)^2`` is
  ``sum t^4 / sum t^2 = exp(-M2~)``, hence
  ``L_AB = ln E_A + ln E_B - ln E_AB``; the Renyi-2 mutual information is
  exact and ``W_AB = I_AB - L_AB``.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from typing import Any, Sequence

import numpy as np

from .mps import (
    MPS,
    canonicalize,
    compress_to_chi,
    move_center,
    rdm_purity,
    reduced_density_matrix,
)

MAX_EXACT_SITES = 12

_PAULI_C = np.array(
    [
        [[1, 0], [0, 1]],
        [[0, 1], [1, 0]],
        [[0, -1j], [1j, 0]],
        [[1, 0], [0, -1]],
    ],
    dtype=complex,
)
# Y replaced by i*Y; only |Tr(rho P)| is ever used, and for real states
# strings with an odd number of Y have zero expectation anyway.
_PAULI_R = np.array(
    [
        [[1, 0], [0, 1]],
        [[0, 1], [1, 0]],
        [[0, 1], [-1, 0]],
        [[1, 0], [0, -1]],
    ],
    dtype=float,
)


def _paulis(real: bool) -> np.ndarray:
    return _PAULI_R if real else _PAULI_C


def _is_real(state: MPS) -> bool:
    return all(np.isrealobj(t) for t in state.tensors)


@dataclass
class MagicReport:
    """SRE estimate for a state or region.

    ``estimate`` is the total ``M_n``; ``density`` is ``M_n / n_sites``.
    """

    estimate: float
    std_error: float
    n_samples: int
    estimator: str
    renyi_index: float
    n_sites: int
    seed: int | None = None
    extra: dict[str, Any] = field(default_factory=dict)

    @property
    def density(self) -> float:
        return self.estimate / self.n_sites

    @property
    def density_error(self) -> float:
        return self.std_error / self.n_sites

    def to_dict(self) -> dict[str, Any]:
        d = asdict(self)
        d["density"] = self.density
        d["density_error"] = self.density_error
        return d


@dataclass
class MutualSreReport:
    """Mutual SRE and its Renyi-2 mutual information / ``W`` split."""

    L_AB: float
    L_err: float
    I_AB: float
    W_AB: float
    W_err: float
    A: tuple[int, ...]
    B: tuple[int, ...]
    chain_means: dict[str, float] = field(default_factory=dict)
    chain_errors: dict[str, float] = field(default_factory=dict)
    acceptance: dict[str, float] = field(default_factory=dict)
    flags: list[str] = field(default_factory=list)
    n_samples: int = 0
    seed: int | None = None

    def to_dict(self) -> dict[str, Any]:
        return asdict(self)


# ---------------------------------------------------------------- exact


def _batched_transfer(env: np.ndarray, a: np.ndarray, ops: np.ndarray) -> np.ndarray:
    """``env[w]`` (bra, ket) through tensor ``a`` with per-walker operator ``ops[w]``."""
    w, chil, _ = env.shape
    _, d, chir = a.shape
    x = np.matmul(env, a.reshape(chil, d * chir)).reshape(w, chil, d, chir)
    x = np.einsum("wst,watb->wasb", ops, x)
    ah = a.reshape(chil * d, chir).conj().T
    return np.matmul(ah, x.reshape(w, chil * d, chir))


def _all_letters_transfer(env: np.ndarray, a: np.ndarray, paulis: np.ndarray) -> np.ndarray:
    """Every environment in ``env`` extended by each of the four letters."""
    w, chil, _ = env.shape
    _, d, chir = a.shape
    x = np.matmul(env, a.reshape(chil, d * chir)).reshape(w, chil, d, chir)
    x = np.einsum("pst,watb->wpasb", paulis, x)
    ah = a.reshape(chil * d, chir).conj().T
    return np.matmul(ah, x.reshape(w * 4, chil * d, chir))


def pauli_expectations(state: MPS) -> np.ndarray:
    """``|<psi|P|psi>|`` for all ``4^L`` strings, letters ordered I, X, Y, Z.

    Index ``p = sum_i letter_i 4^(L-1-i)``.
    """
    L = state.length
    if L > MAX_EXACT_SITES:
        raise ValueError(f"exact Pauli enumeration is limited to {MAX_EXACT_SITES} sites")
    real = _is_real(state)
    paulis = _paulis(real)
    env = np.ones((1, 1, 1), dtype=float if real else complex)
    for a in state.tensors:
        env = _all_letters_transfer(env, a, paulis)
    return np.abs(env[:, 0, 0])


def sre_exact(state: MPS, n: float = 2) -> MagicReport:
    """``M_n = ln(sum_P <P>^(2n) / 2^L) / (1 - n)``; ``n = 1`` is the Shannon limit."""
    L = state.length
    t = pauli_expectations(state)
    norm2 = np.sum(t**2) / 2**L  # equals <psi|psi>^2
    t = t / math.sqrt(norm2)
    if n == 1:
        xi = t**2 / 2**L
        xi = xi[xi > 0]
        m = float(-np.sum(xi * np.log(xi)) - L * math.log(2))
    else:
        m = float(math.log(math.fsum(t ** (2 * n)) / 2**L) / (1 - n))
    return MagicReport(max(m, 0.0) if abs(m) < 1e-12 else m, 0.0, 4**L, "exact", n, L)


# ---------------------------------------------------------------- perfect sampling


def _jackknife_neglog_mean(x: np.ndarray) -> tuple[float, float]:
    """``-ln(mean x)`` and its delete-one jackknife standard error."""
    n = x.size
    s = math.fsum(x)
    est = -math.log(s / n)
    if n < 2:
        return est, float("nan")
    loo = (s - x) / (n - 1)
    loo = np.where(loo > 0, loo, np.finfo(float).tiny)
    f = -np.log(loo)
    var = (n - 1) / n * np.sum((f - f.mean()) ** 2)
    return est, float(math.sqrt(var))


def sample_paulis(state: MPS, n_samples: int, rng: np.random.Generator, batch: int = 2048) -> tuple[np.ndarray, np.ndarray, int]:
    """Draw strings from ``Xi_P = <P>^2 / 2^L``.

    Returns ``(letters, expectation_squared, n_resampled)`` with ``letters``
    of shape ``(n_samples, L)`` in I, X, Y, Z order.
    """
    state = canonicalize(state, "right")
    L = state.length
    real = _is_real(state)
    paulis = _paulis(real)
    letters = np.empty((n_samples, L), dtype=np.int8)
    logp = np.empty(n_samples)
    resampled = 0
    for start in range(0, n_samples, batch):
        m = min(batch, n_samples - start)
        env = np.ones((m, 1, 1), dtype=float if real else complex)
        lp = np.zeros(m)
        for i, a in enumerate(state.tensors):
            cand = _all_letters_transfer(env, a, paulis)  # (m*4, chi, chi)
            chir = cand.shape[-1]
            cand = cand.reshape(m, 4, chir, chir)
            w = np.sum(np.abs(cand) ** 2, axis=(2, 3))
            tot = w.sum(axis=1)
            # conditionals are w / (2 ||E||^2); E is kept at unit norm
            bad = tot < 1e-300
            if np.any(bad):
                resampled += int(bad.sum())
                w[bad] = 1.0
                tot = w.sum(axis=1)
            p = w / tot[:, None]
            u = rng.random(m)
            choice = np.minimum((np.cumsum(p, axis=1) < u[:, None]).sum(axis=1), 3)
            letters[start : start + m, i] = choice
            lp += np.log(p[np.arange(m), choice])
            sel = cand[np.arange(m), choice]
            nrm = np.sqrt(np.sum(np.abs(sel) ** 2, axis=(1, 2)))
            env = sel / np.where(nrm > 0, nrm, 1.0)[:, None, None]
        logp[start : start + m] = lp
    # Xi_P = <P>^2 / 2^L  =>  <P>^2 = 2^L prod_i p_i
    return letters, np.exp(L * math.log(2) + logp), resampled


def site_conditionals(state: MPS, letters: Sequence[int]) -> list[np.ndarray]:
    """Conditional letter distributions along one given string (diagnostic)."""
    state = canonicalize(state, "right")
    real = _is_real(state)
    paulis = _paulis(real)
    env = np.ones((1, 1, 1), dtype=float if real else complex)
    out = []
    for a, l in zip(state.tensors, letters):
        cand = _all_letters_transfer(env, a, paulis)
        w = np.sum(np.abs(cand) ** 2, axis=(1, 2))
        e2 = np.sum(np.abs(env) ** 2)
        out.append(w / (2 * e2))
        env = cand[l : l + 1]
    return out


def sre_sample(state: MPS, n: int = 2, N_S: int = 1000, seed: int = 0) -> MagicReport:
    """Perfect-sampling estimate of ``M_2`` with a jackknife error."""
    if n != 2:
        raise ValueError("sampling estimator supports n = 2 only")
    rng = np.random.default_rng(seed)
    _, p2, resampled = sample_paulis(state, N_S, rng)
    est, err = _jackknife_neglog_mean(p2)
    extra = {"resampled": resampled} if resampled else {}
    return MagicReport(est, err, N_S, "perfect-sampling", 2, state.length, seed, extra)


def local_magic_chi2(state: MPS, N_S: int = 1000, seed: int = 0, max_sweeps: int = 20) -> MagicReport:
    """SRE of the closest bond-dimension-2 MPS."""
    comp = compress_to_chi(state, 2, max_sweeps=max_sweeps)
    rep = sre_sample(comp.state, 2, N_S, seed)
    rep.estimator = "perfect-sampling-chi2"
    rep.extra.update({"fidelity": comp.fidelity, "compression_converged": comp.converged})
    return rep


# ---------------------------------------------------------------- mixed states


def region_pauli_spectrum(rho: np.ndarray) -> np.ndarray:
    """``Tr(rho P)`` for every Pauli string on ``n`` qubits (real; letters I, X, Y, Z)."""
    d = rho.shape[0]
    n = int(round(math.log2(d)))
    t = np.asarray(rho).reshape((2,) * (2 * n))
    # contract qubit k's (row, column) pair with sigma[col,row]; the new letter axis goes last
    for m in range(n, 0, -1):
        t = np.tensordot(t, _PAULI_C, axes=([0, m], [2, 1]))
    # only letter axes remain, in qubit order
    return np.real(t).reshape(-1)


def sre_mixed_exact(state: MPS, region: Sequence[int]) -> MagicReport:
    """``M2~ = -ln(sum t^4 / sum t^2)`` for the reduced state of ``region``."""
    region = sorted(set(region))
    if len(region) > MAX_EXACT_SITES:
        raise ValueError(f"region larger than {MAX_EXACT_SITES} sites")
    rho = reduced_density_matrix(state, region)
    t2 = region_pauli_spectrum(rho) ** 2
    m = -math.log(math.fsum(t2**2) / math.fsum(t2))
    return MagicReport(m, 0.0, 4 ** len(region), "exact", 2, len(region))


# ---------------------------------------------------------------- Pauli-Markov chains


class RegionEvaluator:
    """Batched ``Tr(rho_R P)`` for Pauli strings supported on a site set.

    The state is put in mixed-canonical form with its center on the first
    region site, so the left boundary is an identity and the right boundary
    a trace. Runs of non-region sites become precomputed identity-transfer
    superoperators when small enough.
    """

    GAP_DENSE_LIMIT = 1 << 24

    def __init__(self, state: MPS, region: Sequence[int]):
        self.region = sorted(set(region))
        if not self.region:
            raise ValueError("empty region")
        state = move_center(canonicalize(state, "right"), self.region[0])
        self.real = _is_real(state)
        self.dtype = float if self.real else complex
        self.paulis = _paulis(self.real)
        self.tensors = [state.tensors[i] for i in self.region]
        self.gaps: list[Any] = []
        for a, b in zip(self.region[:-1], self.region[1:]):
            self.gaps.append(self._gap(state, a + 1, b))
        self.n = len(self.region)

    def _gap(self, state: MPS, lo: int, hi: int):
        ts = state.tensors[lo:hi]
        if not ts:
            return None
        cin = ts[0].shape[0]
        cout = ts[-1].shape[2]
        if cin * cin * cout * cout <= self.GAP_DENSE_LIMIT:
            e = np.eye(cin * cin, dtype=self.dtype).reshape(cin * cin, cin, cin)
            for t in ts:
                e = _batched_transfer(e, t, np.broadcast_to(np.eye(2), (e.shape[0], 2, 2)))
            return ("dense", e.reshape(cin * cin, cout * cout))
        return ("chain", ts)

    def _apply_gap(self, env: np.ndarray, gap) -> np.ndarray:
        if gap is None:
            return env
        kind, g = gap
        w, c, _ = env.shape
        if kind == "dense":
            cout = int(round(math.sqrt(g.shape[1])))
            return (env.reshape(w, c * c) @ g).reshape(w, cout, cout)
        eye = np.broadcast_to(np.eye(2), (w, 2, 2))
        for t in g:
            env = _batched_transfer(env, t, eye)
        return env

    def initial_envs(self, walkers: int) -> list[np.ndarray]:
        chi0 = self.tensors[0].shape[0]
        e0 = np.broadcast_to(np.eye(chi0, dtype=self.dtype), (walkers, chi0, chi0)).copy()
        return [e0] + [None] * self.n  # type: ignore[list-item]

    def evaluate(self, letters: np.ndarray, envs: list[np.ndarray], start: int = 0) -> np.ndarray:
        """Recompute environments from region position ``start``; returns ``t``."""
        for k in range(start, self.n):
            ops = self.paulis[letters[:, k]]
            e = _batched_transfer(envs[k], self.tensors[k], ops)
            if k < self.n - 1:
                e = self._apply_gap(e, self.gaps[k])
            envs[k + 1] = e
        return np.real(np.trace(envs[self.n], axis1=1, axis2=2))


@dataclass
class ChainResult:
    mean: float
    std_error: float
    acceptance: np.ndarray
    samples: np.ndarray


def _batch_means(x: np.ndarray, n_batches: int = 20) -> tuple[float, float]:
    """Mean over chains and batch-means error; ``x`` is ``(chains, samples)``."""
    c, n = x.shape
    nb = max(2, min(n_batches, n))
    size = n // nb
    b = x[:, : nb * size].reshape(c, nb, size).mean(axis=2).reshape(-1)
    mean = math.fsum(x.reshape(-1)) / x.size
    return mean, float(np.std(b, ddof=1) / math.sqrt(b.size))


def pauli_markov_chain(
    state: MPS,
    region: Sequence[int],
    N_S: int = 10_000,
    n_chains: int = 8,
    seed: int = 0,
    burn_in: int = 1000,
    thinning: int = 10,
    evaluator: RegionEvaluator | None = None,
) -> ChainResult:
    """Metropolis sampling of ``pi(P) ~ Tr(rho_R P)^2``; records ``Tr(rho_R P)^2``.

    All chains share the random site schedule (which sites are redrawn at
    each step); letters and acceptances are independent per chain.
    """
    ev = evaluator or RegionEvaluator(state, region)
    rng = np.random.default_rng(seed)
    n = ev.n
    letters = np.zeros((n_chains, n), dtype=np.int64)
    envs = ev.initial_envs(n_chains)
    t = ev.evaluate(letters, envs)
    w = t**2
    accepted = np.zeros(n_chains)
    proposed = 0
    out = np.empty((n_chains, N_S))
    total = burn_in + N_S * thinning
    rec = 0
    for step in range(total):
        k = 1 if n == 1 else int(rng.integers(1, 3))
        sites = np.sort(rng.choice(n, size=k, replace=False))
        new = letters.copy()
        new[:, sites] = rng.integers(0, 4, size=(n_chains, k))
        s0 = int(sites[0])
        new_envs = envs[: s0 + 1] + [None] * (n - s0)
        t_new = ev.evaluate(new, new_envs, s0)
        w_new = t_new**2
        with np.errstate(divide="ignore", invalid="ignore"):
            ratio = np.where(w > 0, w_new / w, 1.0)
        acc = rng.random(n_chains) < ratio
        if step >= burn_in:
            accepted += acc
            proposed += 1
        if np.any(acc):
            letters[acc] = new[acc]
            w = np.where(acc, w_new, w)
            for j in range(s0 + 1, n + 1):
                envs[j] = np.where(acc[:, None, None], new_envs[j], envs[j])
        if step >= burn_in and (step - burn_in) % thinning == thinning - 1:
            out[:, rec] = w
            rec += 1
    mean, err = _batch_means(out)
    return ChainResult(mean, err, accepted / max(proposed, 1), out)


def mutual_sre(
    state: MPS,
    A: Sequence[int],
    B: Sequence[int],
    N_S: int = 10_000,
    n_chains: int = 8,
    seed: int = 0,
    burn_in: int = 1000,
    thinning: int = 10,
) -> MutualSreReport:
    """Mutual SRE ``L_AB = M2~(AB) - M2~(A) - M2~(B)`` by Pauli-Markov chains.

    ``I_AB`` comes from exact purities; each ``M2~`` is minus the log of a
    chain mean, with errors by batch means propagated in quadrature.
    """
    A = tuple(sorted(set(A)))
    B = tuple(sorted(set(B)))
    if set(A) & set(B):
        raise ValueError("regions A and B overlap")
    state = canonicalize(state, "right")
    ss = np.random.SeedSequence(seed).spawn(3)
    means, errs, accs, flags = {}, {}, {}, []
    for name, reg, sq in (("A", A, ss[0]), ("B", B, ss[1]), ("AB", A + B, ss[2])):
        res = pauli_markov_chain(state, reg, N_S, n_chains, int(sq.generate_state(1)[0]), burn_in, thinning)
        means[name], errs[name] = res.mean, res.std_error
        accs[name] = float(res.acceptance.mean())
        if not 0.1 <= accs[name] <= 0.7:
            flags.append(f"acceptance {accs[name]:.3f} outside [0.1, 0.7] for region {name}")
    pa, pb, pab = (rdm_purity(state, r, 2) for r in (A, B, A + B))
    i_ab = -math.log(pa) - math.log(pb) + math.log(pab)
    l_ab = math.log(means["A"]) + math.log(means["B"]) - math.log(means["AB"])
    l_err = math.sqrt(sum((errs[k] / means[k]) ** 2 for k in means))
    return MutualSreReport(
        l_ab, l_err, i_ab, i_ab - l_ab, l_err, A, B, means, errs, accs, flags, N_S * n_chains, seed
    )


def _project_block(tensors: Sequence[np.ndarray], env: np.ndarray, proj: np.ndarray, paulis: np.ndarray,
                   max_entries: int = 1 << 22) -> np.ndarray:
    """Expand ``env`` by every Pauli letter on ``tensors`` and project the final environments.

    Returns ``(n_env * 4^len(tensors), proj.shape[1])``. Expansion is depth-first
    in chunks so that at most about ``max_entries`` environment entries are live.
    """
    if not tensors:
        return env.reshape(env.shape[0], -1) @ proj
    chi_next = tensors[0].shape[2]
    per = 4 * chi_next * chi_next
    if env.shape[0] * per > max_entries and env.shape[0] > 1:
        step = max(1, max_entries // per)
        return np.concatenate(
            [_project_block(tensors, env[i : i + step], proj, paulis, max_entries) for i in range(0, env.shape[0], step)]
        )
    nxt = _all_letters_transfer(env, tensors[0], paulis)
    return _project_block(tensors[1:], nxt, proj, paulis, max_entries)


def _fourth_moment_lowrank(xa: np.ndarray, xb: np.ndarray, block: int = 512) -> tuple[float, float]:
    """``sum_ij T_ij^4`` and ``sum_ij T_ij^2`` for ``T = xa @ xb.T`` without forming ``T``."""
    s4, s2 = [], []
    for i in range(0, xa.shape[0], block):
        t = np.abs(xa[i : i + block] @ xb.T) ** 2
        s2.append(float(t.sum()))
        s4.append(float(np.sum(t * t)))
    return math.fsum(s4), math.fsum(s2)


MAX_BLOCK_SITES = 8


def mixed_sre_two_blocks(state: MPS, A: Sequence[int], B: Sequence[int], rank_tol: float = 1e-12) -> tuple[float, float]:
    """Exact ``sum t^4`` and ``sum t^2`` over ``P_A (x) P_B`` for two contiguous blocks.

    ``Tr(rho P_A P_B) = vec(E_A) . G . vec(R_B)`` where ``E_A``/``R_B`` are the
    block environments and ``G`` the identity transfer across the sites in
    between; a truncated SVD of ``G`` turns the ``4^|A| x 4^|B|`` table into a
    low-rank product whose fourth powers are summed block by block.
    """
    A = sorted(A)
    B = sorted(B)
    if A[-1] - A[0] + 1 != len(A) or B[-1] - B[0] + 1 != len(B) or A[-1] >= B[0]:
        raise ValueError("need contiguous blocks with A left of B")
    if max(len(A), len(B)) > MAX_BLOCK_SITES:
        raise ValueError(f"blocks are limited to {MAX_BLOCK_SITES} sites")
    state = move_center(canonicalize(state, "right"), A[0])
    real = _is_real(state)
    paulis = _paulis(real)
    dtype = float if real else complex
    cb = state.tensors[A[-1]].shape[2]
    cc = state.tensors[B[0]].shape[0]
    # superoperator over the gap: basis matrices in, environments out
    g = np.eye(cb * cb, dtype=dtype).reshape(cb * cb, cb, cb)
    eye = np.broadcast_to(np.eye(2), (cb * cb, 2, 2))
    for i in range(A[-1] + 1, B[0]):
        g = _batched_transfer(g, state.tensors[i], eye)
    g = g.reshape(cb * cb, cc * cc)
    u, s, vh = np.linalg.svd(g, full_matrices=False)
    r = max(1, int(np.sum(s > rank_tol * s[0])))
    chil = state.tensors[A[0]].shape[0]
    left0 = np.eye(chil, dtype=dtype)[None]
    xa = _project_block([state.tensors[i] for i in A], left0, u[:, :r] * s[:r], paulis)
    # the right block is contracted from its right end (trace closure) inward
    chir = state.tensors[B[-1]].shape[2]
    right0 = np.eye(chir, dtype=dtype)[None]
    rev = [state.tensors[i].transpose(2, 1, 0) for i in reversed(B)]
    xb = _project_block(rev, right0, vh[:r].T, paulis)
    return _fourth_moment_lowrank(xa, xb)


def mutual_sre_exact(state: MPS, A: Sequence[int], B: Sequence[int]) -> MutualSreReport:
    """Mutual SRE assembled exactly.

    Small regions (``|A| + |B| <= 12``) use dense RDMs; larger pairs of
    contiguous blocks of up to 8 sites each use :func:`mixed_sre_two_blocks`.
    """
    A = tuple(sorted(set(A)))
    B = tuple(sorted(set(B)))
    if set(A) & set(B):
        raise ValueError("regions A and B overlap")
    ma = sre_mixed_exact(state, A).estimate
    mb = sre_mixed_exact(state, B).estimate
    if len(A) + len(B) <= MAX_EXACT_SITES:
        mab = sre_mixed_exact(state, A + B).estimate
    else:
        lo, hi = (A, B) if A[0] < B[0] else (B, A)
        s4, s2 = mixed_sre_two_blocks(state, lo, hi)
        mab = -math.log(s4 / s2)
    pa, pb, pab = (rdm_purity(state, r, 2) for r in (A, B, A + B))
    i_ab = -math.log(pa) - math.log(pb) + math.log(pab)
    l_ab = mab - ma - mb
    return MutualSreReport(
        l_ab, 0.0, i_ab, i_ab - l_ab, 0.0, A, B,
        {"A": math.exp(-ma), "B": math.exp(-mb), "AB": math.exp(-mab)},
    )
