"""Adaptive learning-tree experiments over an unknown unitary channel.

A Strategy is a depth-T adaptive protocol: for every transcript of
measurement outcomes so far, a chooser returns which query to apply next
(the unknown unitary or its inverse) and the POVM to measure afterwards.
Trees are never materialized; the chooser is the compact encoding, and the
exact walker enumerates transcripts depth first while propagating
unnormalized states rho -> F (Q rho Q^dag) F^dag.

Leaf distributions are plain dicts from outcome tuples to probabilities.
The module also provides the maximally depolarizing reference, total
variation distance, the Le Cam success bound, and a two-ensemble
distinguishability experiment with bootstrap confidence intervals.
"""

from __future__ import annotations

import enum
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .linalg import zero_state
from .otoc import EnsembleKind, sample_ensemble_unitary

Transcript = tuple[int, ...]
LeafDistribution = dict[Transcript, float]

POVM_TOL = 1e-9
MASS_TOL = 1e-9
# Exact enumeration refuses transcript spaces larger than this; sampling
# and the factored ensemble-mean path in hardness_experiment still work.
EXACT_ENUMERATION_CAP = 10**6


class QueryKind(enum.Enum):
    FORWARD = "forward"
    INVERSE = "inverse"


@dataclass(frozen=True)
class RoundSpec:
    """One non-adaptive round: which query to apply and what to measure."""

    kind: QueryKind
    povm: tuple[np.ndarray, ...]


@dataclass(frozen=True)
class Strategy:
    """An adaptive protocol description.

    ``chooser`` maps a transcript (outcomes so far) to the next query kind
    and POVM; it must be pure and deterministic. ``time_ordered`` asserts
    the protocol never queries the inverse. ``rounds`` is set only for
    non-adaptive strategies, where every transcript of the same length gets
    the same round; it enables the factored ensemble-mean computation.
    """

    name: str
    description: str
    depth: int
    dim: int
    time_ordered: bool
    chooser: Callable[[Transcript], tuple[QueryKind, Sequence[np.ndarray]]]
    rounds: tuple[RoundSpec, ...] | None = None


def validate_povm(povm: Sequence[np.ndarray]) -> float:
    """Completeness defect max-norm(sum F^dag F - I); callers treat > 1e-9 as invalid."""
    if len(povm) == 0:
        raise ValueError("POVM must contain at least one element")
    first = np.asarray(povm[0])
    if first.ndim != 2 or first.shape[0] != first.shape[1]:
        raise ValueError(f"POVM elements must be square matrices, got shape {first.shape}")
    dim = first.shape[0]
    total = np.zeros((dim, dim), dtype=complex)
    for f in povm:
        f = np.asarray(f)
        if f.shape != (dim, dim):
            raise ValueError(
                f"POVM elements have mixed dimensions: {f.shape} versus {(dim, dim)}"
            )
        total += f.conj().T @ f
    return float(np.max(np.abs(total - np.eye(dim))))


def _node(strategy: Strategy, transcript: Transcript) -> tuple[QueryKind, np.ndarray]:
    """Chooser output for one node, validated and stacked to (m, d, d)."""
    kind, povm = strategy.chooser(transcript)
    if strategy.time_ordered and kind is QueryKind.INVERSE:
        raise ValueError(
            f"time-ordered strategy {strategy.name!r} emitted an inverse query "
            f"at transcript {transcript}"
        )
    defect = validate_povm(povm)
    if defect > POVM_TOL:
        raise ValueError(
            f"POVM completeness defect {defect:.3e} at transcript prefix {transcript} "
            f"of strategy {strategy.name!r}"
        )
    return kind, np.stack([np.asarray(f, dtype=complex) for f in povm])


def _apply_query(kind: QueryKind, u: np.ndarray, rho: np.ndarray) -> np.ndarray:
    if kind is QueryKind.FORWARD:
        return u @ rho @ u.conj().T
    return u.conj().T @ rho @ u


def _check_inputs(strategy: Strategy, u: np.ndarray, rho0: np.ndarray | None) -> tuple[np.ndarray, np.ndarray]:
    u = np.asarray(u, dtype=complex)
    if u.shape != (strategy.dim, strategy.dim):
        raise ValueError(
            f"unitary shape {u.shape} does not match strategy dimension {strategy.dim}"
        )
    rho = zero_state(strategy.dim) if rho0 is None else np.asarray(rho0, dtype=complex)
    if rho.shape != (strategy.dim, strategy.dim):
        raise ValueError(
            f"initial state shape {rho.shape} does not match strategy dimension {strategy.dim}"
        )
    return u, rho


def _walk_exact(
    strategy: Strategy,
    channel: Callable[[QueryKind, np.ndarray], np.ndarray],
    rho: np.ndarray,
    transcript: Transcript,
    out: LeafDistribution,
) -> None:
    kind, stack = _node(strategy, transcript)
    evolved = channel(kind, rho)
    children = stack @ evolved @ stack.conj().transpose(0, 2, 1)
    if len(transcript) + 1 == strategy.depth:
        if len(out) + len(children) > EXACT_ENUMERATION_CAP:
            raise ValueError(
                f"transcript space of strategy {strategy.name!r} exceeds the exact "
                f"enumeration cap of {EXACT_ENUMERATION_CAP}; use sample_trajectory"
            )
        for i, child in enumerate(children):
            out[transcript + (i,)] = float(np.trace(child).real)
    else:
        for i, child in enumerate(children):
            _walk_exact(strategy, channel, child, transcript + (i,), out)


def run_tree_exact(
    strategy: Strategy, u: np.ndarray, rho0: np.ndarray | None = None
) -> LeafDistribution:
    """Exact probability of every transcript under the unknown unitary ``u``.

    Each leaf's probability is the trace of its unnormalized state
    F_T (Q ... F_1 (Q rho0 Q^dag) F_1^dag ... Q^dag) F_T^dag; the masses
    sum to one up to roundoff.
    """
    u, rho = _check_inputs(strategy, u, rho0)
    out: LeafDistribution = {}
    _walk_exact(strategy, lambda kind, r: _apply_query(kind, u, r), rho, (), out)
    return out


def depolarizing_reference(
    strategy: Strategy, rho0: np.ndarray | None = None
) -> LeafDistribution:
    """Leaf distribution with every query replaced by rho -> tr(rho) I/d.

    Each leaf gets probability prod_t tr(F_t^dag F_t)/d; when all POVM
    elements are rank one with unit trace of F^dag F this is uniform 1/d^T.
    """
    eye = np.eye(strategy.dim, dtype=complex) / strategy.dim
    rho = zero_state(strategy.dim) if rho0 is None else np.asarray(rho0, dtype=complex)
    out: LeafDistribution = {}
    _walk_exact(
        strategy,
        lambda kind, r: float(np.trace(r).real) * eye,
        rho,
        (),
        out,
    )
    return out


def sample_trajectory(
    strategy: Strategy,
    u: np.ndarray,
    rho0: np.ndarray | None,
    rng: np.random.Generator,
) -> Transcript:
    """Sample one root-to-leaf transcript with the exact path distribution."""
    u, rho = _check_inputs(strategy, u, rho0)
    transcript: Transcript = ()
    for _ in range(strategy.depth):
        kind, stack = _node(strategy, transcript)
        evolved = _apply_query(kind, u, rho)
        weighted = stack @ evolved
        probs = np.einsum("ikl,ikl->i", weighted, stack.conj()).real
        probs = np.clip(probs, 0.0, None)
        probs /= probs.sum()
        outcome = int(np.searchsorted(np.cumsum(probs), rng.random()))
        outcome = min(outcome, len(probs) - 1)
        f = stack[outcome]
        child = f @ evolved @ f.conj().T
        rho = child / np.trace(child).real
        transcript += (outcome,)
    return transcript


def _worker_count() -> int:
    raw = os.environ.get("OTOC_LAB_THREADS", "1")
    try:
        count = int(raw)
    except ValueError as exc:
        raise ValueError(f"OTOC_LAB_THREADS must be an integer, got {raw!r}") from exc
    return max(count, 1)


def _map_ordered(fn, items):
    """Map preserving input order, fanning out when OTOC_LAB_THREADS > 1."""
    workers = _worker_count()
    if workers == 1:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


def ensemble_leaf_distribution(
    strategy: Strategy,
    ensemble: EnsembleKind,
    rho0: np.ndarray | None,
    samples: int,
    rng: np.random.Generator,
) -> LeafDistribution:
    """Monte Carlo average of the exact leaf distribution over an ensemble.

    Unitaries are drawn from deterministic per-sample child streams, so the
    result is reproducible for a given generator state and independent of
    worker scheduling.
    """
    if samples < 10:
        raise ValueError(f"need at least 10 ensemble samples, got {samples}")
    n = strategy.dim.bit_length() - 1
    if 2**n != strategy.dim:
        raise ValueError(f"strategy dimension {strategy.dim} is not a power of two")
    seqs = [child.bit_generator.seed_seq for child in rng.spawn(samples)]

    def one(seq) -> LeafDistribution:
        u = sample_ensemble_unitary(ensemble, n, np.random.default_rng(seq))
        return run_tree_exact(strategy, u, rho0)

    accum: dict[Transcript, float] = {}
    for dist in _map_ordered(one, seqs):
        for key, p in dist.items():
            accum[key] = accum.get(key, 0.0) + p
    return {key: total / samples for key, total in accum.items()}


def leaf_mass_defect(dist: LeafDistribution) -> float:
    """Distance of a leaf distribution from a valid probability mass."""
    total = sum(dist.values())
    most_negative = min((p for p in dist.values()), default=0.0)
    return max(abs(total - 1.0), -min(most_negative, 0.0))


def leaf_distribution_to_json(dist: LeafDistribution) -> dict[str, float]:
    """Transcripts become comma-joined strings so the map is JSON safe."""
    return {",".join(map(str, key)): p for key, p in sorted(dist.items())}


def tv_distance(p: LeafDistribution, q: LeafDistribution) -> float:
    """Total variation distance over the union of supports."""
    keys = set(p) | set(q)
    return 0.5 * sum(abs(p.get(key, 0.0) - q.get(key, 0.0)) for key in keys)


def lecam_success_bound(tv: float) -> float:
    """Best distinguishing success probability consistent with the TV distance."""
    if not -1e-12 <= tv <= 1.0 + 1e-12:
        raise ValueError(f"total variation distance must lie in [0, 1], got {tv}")
    return (1.0 + min(max(tv, 0.0), 1.0)) / 2.0


def child_sum_check(strategy: Strategy, probe: np.ndarray) -> float:
    """Maximum defect of the child-sum identities over every reachable node.

    At each node's POVM this checks sum_i tr(F_i^dag F_i probe) == tr(probe)
    and sum_i tr(F_i^dag F_i) == d, returning the largest absolute defect.
    The probe must be positive semi-definite with the strategy's dimension.
    """
    probe = np.asarray(probe, dtype=complex)
    if probe.shape != (strategy.dim, strategy.dim):
        raise ValueError(
            f"probe shape {probe.shape} does not match strategy dimension {strategy.dim}"
        )
    if float(np.max(np.abs(probe - probe.conj().T))) > 1e-9:
        raise ValueError("probe must be Hermitian")
    if float(np.min(np.linalg.eigvalsh((probe + probe.conj().T) / 2))) < -1e-9:
        raise ValueError("probe must be positive semi-definite")

    probe_trace = float(np.trace(probe).real)
    worst = 0.0
    nodes = 0
    stack_of_prefixes: list[Transcript] = [()]
    while stack_of_prefixes:
        prefix = stack_of_prefixes.pop()
        _, stack = _node(strategy, prefix)
        nodes += 1
        if nodes > EXACT_ENUMERATION_CAP:
            raise ValueError(
                f"node count of strategy {strategy.name!r} exceeds the exact "
                f"enumeration cap of {EXACT_ENUMERATION_CAP}"
            )
        gram = np.einsum("ikl,ikm->lm", stack.conj(), stack)
        probe_defect = abs(float(np.trace(gram @ probe).real) - probe_trace)
        dim_defect = abs(float(np.trace(gram).real) - strategy.dim)
        worst = max(worst, probe_defect, dim_defect)
        if len(prefix) + 1 < strategy.depth:
            stack_of_prefixes.extend(prefix + (i,) for i in range(len(stack)))
    return worst


# ---------------------------------------------------------------------------
# Two-ensemble distinguishability with bootstrap confidence intervals.


@dataclass(frozen=True)
class HardnessReport:
    """TV estimate between the two ensembles' mean leaf distributions."""

    tv_estimate: float
    ci_low: float
    ci_high: float
    lecam_bound: float
    samples: int
    n_boot: int
    method: str


# The factored ensemble-mean path accumulates leaf tensors in float32;
# the ~1e-6 relative roundoff is far below the Monte Carlo noise floor.
_CHAIN_DTYPE = np.float32


@dataclass(frozen=True)
class _ChainRound:
    kind: QueryKind
    weights: np.ndarray  # (m,) squared singular values
    kets: np.ndarray  # (m, d) normalized post-measurement states
    bras: np.ndarray  # (m, d) normalized measurement vectors


def _chain_rounds(strategy: Strategy) -> list[_ChainRound] | None:
    """Rank-one factorization of a non-adaptive strategy, or None.

    For rank-one POVM elements F = s |u><v| the post-measurement state is
    |u><u| regardless of the input, so the transcript process is a Markov
    chain and ensemble means factor through per-round transition matrices.
    """
    if strategy.rounds is None:
        return None
    out = []
    for spec in strategy.rounds:
        stack = np.stack([np.asarray(f, dtype=complex) for f in spec.povm])
        m, d = stack.shape[0], stack.shape[1]
        weights = np.empty(m)
        kets = np.empty((m, d), dtype=complex)
        bras = np.empty((m, d), dtype=complex)
        for i, f in enumerate(stack):
            left, sing, right = np.linalg.svd(f)
            if sing[0] == 0.0:
                weights[i] = 0.0
                kets[i] = 0.0
                bras[i] = 0.0
                continue
            if len(sing) > 1 and sing[1] > 1e-10 * sing[0]:
                return None
            weights[i] = sing[0] ** 2
            kets[i] = left[:, 0]
            bras[i] = right[0, :].conj()
        out.append(_ChainRound(kind=spec.kind, weights=weights, kets=kets, bras=bras))
    return out


def _chain_pieces(
    chain: list[_ChainRound], u: np.ndarray, rho0: np.ndarray
) -> tuple[np.ndarray, list[np.ndarray]]:
    """Initial outcome weights and per-round transition matrices for one unitary.

    Transitions are returned transposed, (from_outcome, to_outcome), ready
    for the broadcasting folds below.
    """
    first = chain[0]
    q = u if first.kind is QueryKind.FORWARD else u.conj().T
    evolved = q @ rho0 @ q.conj().T
    b = first.bras.conj()
    nu = first.weights * np.einsum("jk,kl,jl->j", b, evolved, b.conj()).real

    transitions = []
    prev_kets = first.kets
    for rnd in chain[1:]:
        q = u if rnd.kind is QueryKind.FORWARD else u.conj().T
        amps = rnd.bras.conj() @ q @ prev_kets.T
        transition = rnd.weights[:, None] * np.abs(amps) ** 2
        transitions.append(np.ascontiguousarray(transition.T, dtype=_CHAIN_DTYPE))
        prev_kets = rnd.kets
    return nu.astype(_CHAIN_DTYPE), transitions


_CHAIN_CHUNK = 64


def _chain_pieces_for(
    chain: list[_ChainRound],
    ensemble: EnsembleKind,
    n: int,
    rho0: np.ndarray,
    seqs: list,
) -> list[tuple[np.ndarray, list[np.ndarray]]]:
    return [
        _chain_pieces(
            chain, sample_ensemble_unitary(ensemble, n, np.random.default_rng(seq)), rho0
        )
        for seq in seqs
    ]


def _fold_prefix(nu_stack: np.ndarray, trans_stacks: list[np.ndarray]) -> np.ndarray:
    """Batched leaf tensor of all rounds but the last, shaped (C, prefix, m)."""
    chunk_size = nu_stack.shape[0]
    prefix = nu_stack
    for t, trans in enumerate(trans_stacks):
        view = trans.reshape((chunk_size,) + (1,) * t + trans.shape[1:])
        prefix = prefix[..., None] * view
    return prefix.reshape(chunk_size, -1, prefix.shape[-1])


def _chain_mean(pieces: list) -> np.ndarray:
    """Mean leaf tensor over the sampled unitaries.

    The last round is contracted against the sample axis with matrix
    products, chunked so no (samples x leaves) array is materialized.
    """
    shape = (pieces[0][0].shape[0],) + tuple(t.shape[1] for t in pieces[0][1])
    if len(shape) == 1:
        return np.mean([nu for nu, _ in pieces], axis=0)
    m_last_in, m_last = shape[-2], shape[-1]
    flat = np.zeros((int(np.prod(shape[:-2], dtype=np.int64)), m_last_in, m_last))
    for start in range(0, len(pieces), _CHAIN_CHUNK):
        chunk = pieces[start : start + _CHAIN_CHUNK]
        nu_stack = np.stack([nu for nu, _ in chunk])
        trans_stacks = [
            np.stack([trans[t] for _, trans in chunk])
            for t in range(len(chunk[0][1]))
        ]
        prefix = _fold_prefix(nu_stack, trans_stacks[:-1])
        last = trans_stacks[-1]
        for j in range(m_last_in):
            flat[:, j, :] += prefix[:, :, j].T @ last[:, j, :]
    return flat.reshape(shape) / len(pieces)


def _chain_sign_scalars(pieces: list, signs: np.ndarray) -> np.ndarray:
    """Per-unitary sums sum_l signs[l] p_u(l), chunked like _chain_mean."""
    shape = signs.shape
    if len(shape) == 1:
        return np.array([float(signs @ nu) for nu, _ in pieces])
    m_last_in, m_last = shape[-2], shape[-1]
    signs_flat = signs.reshape(-1, m_last_in, m_last)
    out = np.empty(len(pieces))
    for start in range(0, len(pieces), _CHAIN_CHUNK):
        chunk = pieces[start : start + _CHAIN_CHUNK]
        size = len(chunk)
        nu_stack = np.stack([nu for nu, _ in chunk])
        trans_stacks = [
            np.stack([trans[t] for _, trans in chunk])
            for t in range(len(chunk[0][1]))
        ]
        prefix = _fold_prefix(nu_stack, trans_stacks[:-1])
        last = trans_stacks[-1]
        contracted = np.empty_like(prefix)
        for j in range(m_last_in):
            contracted[:, :, j] = last[:, j, :] @ signs_flat[:, j, :].T
        out[start : start + size] = (prefix * contracted).sum(axis=(1, 2))
    return out


def _bootstrap_percentiles(
    replicates: np.ndarray,
) -> tuple[float, float]:
    return (
        float(np.percentile(replicates, 2.5)),
        float(np.percentile(replicates, 97.5)),
    )


def hardness_experiment(
    strategy: Strategy,
    n: int,
    rho0: np.ndarray | None = None,
    samples: int = 500,
    rng: np.random.Generator | None = None,
    n_boot: int = 500,
) -> HardnessReport:
    """Estimate the TV distance between the two ensembles' mean transcripts.

    Draws ``samples`` unitaries from each ensemble, averages the exact leaf
    distributions, and reports the TV distance with a 95% bootstrap
    confidence interval over the unitary draws plus the implied Le Cam
    success bound.

    Non-adaptive rank-one strategies go through the factored chain path,
    which handles transcript spaces beyond the exact-enumeration cap; its
    bootstrap holds the sign pattern of the point estimate fixed, turning
    each replicate into a mean of per-unitary scalars. Other strategies use
    full per-replicate recomputation on the materialized leaf vectors.
    """
    if rng is None:
        raise ValueError("hardness_experiment requires a random source")
    if strategy.dim != 2**n:
        raise ValueError(
            f"strategy dimension {strategy.dim} does not match n={n} (dim {2**n})"
        )
    if samples < 10:
        raise ValueError(f"need at least 10 ensemble samples, got {samples}")
    rho = zero_state(strategy.dim) if rho0 is None else np.asarray(rho0, dtype=complex)

    chain = _chain_rounds(strategy)
    boot_rng = np.random.default_rng(rng.spawn(1)[0].bit_generator.seed_seq)
    global_seqs = [c.bit_generator.seed_seq for c in rng.spawn(samples)]
    product_seqs = [c.bit_generator.seed_seq for c in rng.spawn(samples)]

    if chain is not None:
        pieces_g = _chain_pieces_for(chain, EnsembleKind.GLOBAL_HAAR, n, rho, global_seqs)
        pieces_p = _chain_pieces_for(chain, EnsembleKind.PRODUCT_HAAR, n, rho, product_seqs)
        delta = _chain_mean(pieces_g)
        delta -= _chain_mean(pieces_p)
        tv = 0.5 * float(np.sum(np.abs(delta)))
        signs = np.sign(delta).astype(_CHAIN_DTYPE)
        del delta

        c_global = _chain_sign_scalars(pieces_g, signs)
        c_product = _chain_sign_scalars(pieces_p, signs)
        idx_g = boot_rng.integers(samples, size=(n_boot, samples))
        idx_p = boot_rng.integers(samples, size=(n_boot, samples))
        replicates = 0.5 * (
            c_global[idx_g].mean(axis=1) - c_product[idx_p].mean(axis=1)
        )
        method = "chain-linearized-bootstrap"
    else:
        def side_matrix(ensemble: EnsembleKind, seqs: list) -> list[LeafDistribution]:
            return _map_ordered(
                lambda seq: run_tree_exact(
                    strategy,
                    sample_ensemble_unitary(ensemble, n, np.random.default_rng(seq)),
                    rho,
                ),
                seqs,
            )

        dists_g = side_matrix(EnsembleKind.GLOBAL_HAAR, global_seqs)
        dists_p = side_matrix(EnsembleKind.PRODUCT_HAAR, product_seqs)
        support = sorted(set().union(*dists_g, *dists_p))
        index = {key: i for i, key in enumerate(support)}
        mat_g = np.zeros((samples, len(support)))
        mat_p = np.zeros((samples, len(support)))
        for row, dist in enumerate(dists_g):
            for key, p in dist.items():
                mat_g[row, index[key]] = p
        for row, dist in enumerate(dists_p):
            for key, p in dist.items():
                mat_p[row, index[key]] = p
        delta = mat_g.mean(axis=0) - mat_p.mean(axis=0)
        tv = 0.5 * float(np.sum(np.abs(delta)))

        if len(support) * n_boot <= 5 * 10**7:
            idx_g = boot_rng.integers(samples, size=(n_boot, samples))
            idx_p = boot_rng.integers(samples, size=(n_boot, samples))
            weights_g = np.stack([np.bincount(row, minlength=samples) for row in idx_g])
            weights_p = np.stack([np.bincount(row, minlength=samples) for row in idx_p])
            boot_g = weights_g @ mat_g / samples
            boot_p = weights_p @ mat_p / samples
            replicates = 0.5 * np.sum(np.abs(boot_g - boot_p), axis=1)
            method = "exact-leaf-full-bootstrap"
        else:
            signs = np.sign(delta)
            c_global = mat_g @ signs
            c_product = mat_p @ signs
            idx_g = boot_rng.integers(samples, size=(n_boot, samples))
            idx_p = boot_rng.integers(samples, size=(n_boot, samples))
            replicates = 0.5 * (
                c_global[idx_g].mean(axis=1) - c_product[idx_p].mean(axis=1)
            )
            method = "exact-leaf-linearized-bootstrap"

    ci_low, ci_high = _bootstrap_percentiles(replicates)
    return HardnessReport(
        tv_estimate=tv,
        ci_low=ci_low,
        ci_high=ci_high,
        lecam_bound=lecam_success_bound(min(max(tv, 0.0), 1.0)),
        samples=samples,
        n_boot=n_boot,
        method=method,
    )
