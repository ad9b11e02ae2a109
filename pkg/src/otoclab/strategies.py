"""Built-in learning-tree strategies, addressable by name.

All builders return pure, deterministic Strategy values; randomized
choices are fixed at construction time through the seed, never drawn at
query time, so a chooser always returns the same round for the same
transcript.
"""

from __future__ import annotations

import functools

import numpy as np

from .learning_tree import QueryKind, RoundSpec, Strategy
from .linalg import make_rng, sample_haar_unitary
from .otoc import sigma_x_first_qubit


def _basis_projectors(dim: int) -> tuple[np.ndarray, ...]:
    povm = []
    for i in range(dim):
        f = np.zeros((dim, dim), dtype=complex)
        f[i, i] = 1.0
        povm.append(f)
    return tuple(povm)


def _haar_column_projectors(dim: int, rng: np.random.Generator) -> tuple[np.ndarray, ...]:
    u = sample_haar_unitary(dim, rng)
    return tuple(np.outer(u[:, i], u[:, i].conj()) for i in range(dim))


def _from_rounds(name: str, description: str, dim: int, rounds: tuple[RoundSpec, ...],
                 time_ordered: bool) -> Strategy:
    def chooser(transcript):
        spec = rounds[len(transcript)]
        return spec.kind, spec.povm

    return Strategy(
        name=name,
        description=description,
        depth=len(rounds),
        dim=dim,
        time_ordered=time_ordered,
        chooser=chooser,
        rounds=rounds,
    )


def comp_basis(n: int, depth: int) -> Strategy:
    """Forward query then a full computational-basis measurement, every round."""
    dim = 2**n
    spec = RoundSpec(kind=QueryKind.FORWARD, povm=_basis_projectors(dim))
    return _from_rounds(
        "comp-basis",
        "time-ordered; computational-basis projectors each round",
        dim,
        (spec,) * depth,
        time_ordered=True,
    )


def random_basis(n: int, depth: int, seed: int = 0) -> Strategy:
    """Forward query then a fixed Haar-random orthonormal basis per round."""
    dim = 2**n
    rounds = tuple(
        RoundSpec(
            kind=QueryKind.FORWARD,
            povm=_haar_column_projectors(dim, make_rng(seed, stream=t)),
        )
        for t in range(depth)
    )
    return _from_rounds(
        "random-basis",
        "time-ordered; a seeded Haar-random rank-one basis each round",
        dim,
        rounds,
        time_ordered=True,
    )


def identity_then_measure(n: int, depth: int) -> Strategy:
    """Apply the query unobserved for depth-1 rounds, then measure the basis."""
    dim = 2**n
    idle = RoundSpec(kind=QueryKind.FORWARD, povm=(np.eye(dim, dtype=complex),))
    final = RoundSpec(kind=QueryKind.FORWARD, povm=_basis_projectors(dim))
    return _from_rounds(
        "identity-then-measure",
        "time-ordered; singleton identity POVMs, one final basis measurement",
        dim,
        (idle,) * (depth - 1) + (final,),
        time_ordered=True,
    )


def oto_theorem1(n: int) -> Strategy:
    """The single forward plus single inverse query protocol.

    Round one applies the unknown unitary and the unitary 'measurement'
    sigma_x on qubit 1; round two applies the inverse and measures the
    trailing n/2 qubits in the computational basis. The all-zero outcome
    detects the product ensemble.
    """
    if n < 2 or n % 2 != 0:
        raise ValueError(f"the out-of-time-order protocol needs even n >= 2, got {n}")
    dim = 2**n
    half = 2 ** (n // 2)
    flip = RoundSpec(kind=QueryKind.FORWARD, povm=(sigma_x_first_qubit(n),))
    block_povm = []
    for b in range(half):
        e = np.zeros((half, half), dtype=complex)
        e[b, b] = 1.0
        block_povm.append(np.kron(np.eye(half, dtype=complex), e))
    measure = RoundSpec(kind=QueryKind.INVERSE, povm=tuple(block_povm))
    return _from_rounds(
        "oto-theorem1",
        "out-of-time-order; forward + sigma_x(1), inverse + second-block measurement",
        dim,
        (flip, measure),
        time_ordered=False,
    )


def random_rank_one_strategy(n: int, depth: int, seed: int, oto: bool = False) -> Strategy:
    """An adaptive strategy with a fresh Haar basis at every transcript.

    The basis (and, for the out-of-time-order variant, the query direction)
    at a node is derived from (seed, transcript), so the chooser is pure.
    Used to exercise the tree machinery on genuinely adaptive protocols.
    """
    dim = 2**n

    @functools.lru_cache(maxsize=4096)
    def chooser(transcript):
        node_rng = np.random.default_rng(
            np.random.SeedSequence(seed, spawn_key=(len(transcript),) + transcript)
        )
        kind = QueryKind.FORWARD
        if oto and node_rng.integers(2) == 1:
            kind = QueryKind.INVERSE
        return kind, _haar_column_projectors(dim, node_rng)

    return Strategy(
        name="random-adaptive-oto" if oto else "random-adaptive",
        description="adaptive; per-transcript Haar-random rank-one basis",
        depth=depth,
        dim=dim,
        time_ordered=not oto,
        chooser=chooser,
        rounds=None,
    )


_BUILDERS = {
    "comp-basis": lambda n, depth, seed: comp_basis(n, depth),
    "random-basis": lambda n, depth, seed: random_basis(n, depth, seed),
    "identity-then-measure": lambda n, depth, seed: identity_then_measure(n, depth),
    "oto-theorem1": lambda n, depth, seed: _build_oto(n, depth),
}

_DESCRIPTIONS = {
    "comp-basis": "time-ordered; computational-basis projectors each round",
    "random-basis": "time-ordered; seeded Haar-random rank-one basis each round",
    "identity-then-measure": "time-ordered; idle rounds, one final basis measurement",
    "oto-theorem1": "out-of-time-order single forward + single inverse protocol",
}


def _build_oto(n: int, depth: int | None) -> Strategy:
    if depth is not None and depth != 2:
        raise ValueError(f"oto-theorem1 is a fixed two-round protocol, got depth {depth}")
    return oto_theorem1(n)


def available_strategies() -> list[str]:
    """Names accepted by build_strategy, in stable order."""
    return sorted(_BUILDERS)


def describe_strategy(name: str) -> str:
    return _DESCRIPTIONS[name]


def build_strategy(name: str, n: int, depth: int | None = None, seed: int = 0) -> Strategy:
    """Look up a built-in strategy by name for an n-qubit system."""
    if name not in _BUILDERS:
        raise ValueError(
            f"unknown strategy {name!r}; available: {', '.join(available_strategies())}"
        )
    if name != "oto-theorem1":
        if depth is None or depth < 1:
            raise ValueError(f"strategy {name!r} needs a positive depth, got {depth}")
    if n < 1:
        raise ValueError(f"qubit count must be positive, got {n}")
    return _BUILDERS[name](n, depth, seed)
