"""The distinguishing task: global Haar unitary versus a two-block product.

The scrambling probe is the projector-form correlator

    OTOC(V) = tr( (1 (x) |0><0|^(n/2)) V^dag X1 V |0><0|^n V^dag X1 V )

where X1 is sigma_x on qubit 1 and qubit 1 is the most significant tensor
factor; the "second block" is the trailing n/2 qubits. For any product
V = U1 (x) U2 the second-block factors cancel and the value is exactly 1,
while the global Haar average is (2^(3n/2) - 1) / (2^(2n) - 1), so a single
forward-then-inverse query distinguishes the two ensembles.
"""

from __future__ import annotations

import enum
from fractions import Fraction

import numpy as np

from . import permutations as sg
from .linalg import sample_haar_unitary, tensor_product, zero_ket
from .weingarten import weingarten_table


class EnsembleKind(enum.Enum):
    """Which ensemble the hidden unitary is drawn from."""

    GLOBAL_HAAR = "global-haar"
    PRODUCT_HAAR = "product-haar"


def _check_even(n: int) -> None:
    if n < 2 or n % 2 != 0:
        raise ValueError(f"qubit count n must be a positive even integer, got {n}")


def sigma_x_first_qubit(n: int) -> np.ndarray:
    """sigma_x on qubit 1 (most significant factor), identity elsewhere."""
    if n < 1:
        raise ValueError(f"need at least one qubit, got {n}")
    sx = np.array([[0.0, 1.0], [1.0, 0.0]], dtype=complex)
    return tensor_product(sx, np.eye(2 ** (n - 1), dtype=complex))


def second_block_zero_projector(n: int) -> np.ndarray:
    """Projector onto |0...0> of the trailing n/2 qubits, identity on the rest."""
    _check_even(n)
    half = 2 ** (n // 2)
    block = np.zeros((half, half), dtype=complex)
    block[0, 0] = 1.0
    return tensor_product(np.eye(half, dtype=complex), block)


def sample_ensemble_unitary(kind: EnsembleKind, n: int, rng: np.random.Generator) -> np.ndarray:
    """Draw one hidden unitary: global Haar on 2^n, or a Haar (x) Haar product."""
    _check_even(n)
    if kind is EnsembleKind.GLOBAL_HAAR:
        return sample_haar_unitary(2**n, rng)
    half = 2 ** (n // 2)
    return tensor_product(
        sample_haar_unitary(half, rng), sample_haar_unitary(half, rng)
    )


def otoc_value(v: np.ndarray, n: int) -> float:
    """Evaluate the correlator for one unitary; a real number in [0, 1].

    Equals the probability that, after applying V, flipping qubit 1, and
    applying V^dag to |0>^n, the second block measures all zero.
    """
    _check_even(n)
    v = np.asarray(v)
    dim = 2**n
    if v.shape != (dim, dim):
        raise ValueError(f"unitary shape {v.shape} does not match n={n} (dim {dim})")
    psi = v @ zero_ket(dim)
    # sigma_x on the most significant qubit swaps the two halves of the vector.
    psi = np.concatenate([psi[dim // 2 :], psi[: dim // 2]])
    psi = v.conj().T @ psi
    half = 2 ** (n // 2)
    return float(np.sum(np.abs(psi[::half]) ** 2))


def expected_otoc_exact(n: int) -> Fraction:
    """Closed-form Haar average (2^(3n/2) - 1) / (2^(2n) - 1)."""
    _check_even(n)
    return Fraction(2 ** (3 * n // 2) - 1, 2 ** (2 * n) - 1)


def expected_otoc_weingarten(n: int) -> Fraction:
    """Haar average re-derived from the order-2 Weingarten expansion.

    The correlator is quadratic in U and in conj(U), so its average is a
    four-term sum over S_2 x S_2 in which the fixed operators contract to
    exact integer traces. Must agree with ``expected_otoc_exact``.
    """
    _check_even(n)
    if n > 6:
        raise ValueError(f"weingarten re-derivation is limited to n <= 6, got {n}")
    d = 2**n
    x1 = np.rint(sigma_x_first_qubit(n).real).astype(object)
    proj = np.rint(second_block_zero_projector(n).real).astype(object)
    rho = np.zeros((d, d), dtype=object)
    rho[0, 0] = 1

    ident = sg.identity(2)
    swap = (1, 0)
    # Contraction of the two X1 factors under the row-side permutation, and
    # of the projector/state pair under the column-side permutation.
    x_part = {
        ident: int(np.trace(x1)) ** 2,
        swap: int(np.trace(x1 @ x1)),
    }
    state_part = {
        ident: int(np.trace(proj @ rho)),
        swap: int(np.trace(proj)) * int(np.trace(rho)),
    }
    table = weingarten_table(2, d)
    total = Fraction(0)
    for s in (ident, swap):
        for t in (ident, swap):
            wgval = table.value(sg.compose(s, sg.inverse(t)))
            total += wgval * x_part[s] * state_part[t]
    return total


def monte_carlo_expected_otoc(
    n: int, samples: int, rng: np.random.Generator
) -> tuple[float, float]:
    """Mean and standard error of the correlator over global Haar draws."""
    _check_even(n)
    if samples < 100:
        raise ValueError(f"need at least 100 samples, got {samples}")
    values = np.empty(samples)
    for s in range(samples):
        u = sample_haar_unitary(2**n, rng)
        values[s] = otoc_value(u, n)
    return float(values.mean()), float(values.std(ddof=1) / np.sqrt(samples))


def theorem1_trial(
    kind: EnsembleKind, n: int, rng: np.random.Generator
) -> tuple[EnsembleKind, bool]:
    """One shot of the single-query protocol against a hidden unitary.

    Prepares |0>^n, applies V, flips qubit 1, applies V^dag, and measures
    the second block; the all-zero outcome is a Bernoulli draw with success
    probability otoc_value(V, n). Declares the product ensemble exactly
    when all-zero is observed.
    """
    _check_even(n)
    v = sample_ensemble_unitary(kind, n, rng)
    p_all_zero = otoc_value(v, n)
    observed_all_zero = rng.random() < p_all_zero
    declared = EnsembleKind.PRODUCT_HAAR if observed_all_zero else EnsembleKind.GLOBAL_HAAR
    return declared, declared is kind


def success_probability(
    n: int, trials: int, rng: np.random.Generator
) -> tuple[float, float]:
    """Empirical success rate of the protocol with the hidden kind drawn uniformly.

    Returns the rate and a 95% binomial confidence half-width.
    """
    _check_even(n)
    if trials < 100:
        raise ValueError(f"need at least 100 trials, got {trials}")
    successes = 0
    kinds = (EnsembleKind.GLOBAL_HAAR, EnsembleKind.PRODUCT_HAAR)
    for _ in range(trials):
        hidden = kinds[rng.integers(2)]
        _, correct = theorem1_trial(hidden, n, rng)
        successes += int(correct)
    rate = successes / trials
    halfwidth = 1.96 * float(np.sqrt(rate * (1.0 - rate) / trials))
    return rate, halfwidth
