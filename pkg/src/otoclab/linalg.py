"""Dense complex linear algebra on small Hilbert spaces.

Matrices and states are plain complex numpy arrays, treated as immutable
once built. The module provides the handful of operations the rest of the
package needs: products, adjoints, Kronecker products, seeded Haar-random
unitary sampling, and validity checks for unitaries and density operators.
"""

from __future__ import annotations

import numpy as np

# Max-norm tolerance for "is unitary" / "is a density operator" checks.
UNITARY_TOL = 1e-10
STATE_TOL = 1e-10


def make_rng(seed: int, stream: int = 0) -> np.random.Generator:
    """Deterministic generator for the pair (seed, stream).

    The same pair always reproduces the same draw sequence; distinct stream
    indices give statistically independent child streams of one seed.
    Gaussian variates come from numpy's ziggurat sampler over PCG64, fixed
    here so every run is reproducible per seed.
    """
    if not 0 <= seed < 2**64:
        raise ValueError(f"seed must be a 64-bit unsigned integer, got {seed}")
    if stream < 0:
        raise ValueError(f"stream index must be nonnegative, got {stream}")
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(stream,)))


def multiply(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Matrix product with an explicit shape guard."""
    a = np.asarray(a)
    b = np.asarray(b)
    if a.ndim != 2 or b.ndim != 2 or a.shape[1] != b.shape[0]:
        raise ValueError(f"cannot multiply shapes {a.shape} and {b.shape}")
    return a @ b


def adjoint(a: np.ndarray) -> np.ndarray:
    """Conjugate transpose."""
    return np.asarray(a).conj().T


def tensor_product(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Kronecker product, dimensions multiply."""
    return np.kron(np.asarray(a), np.asarray(b))


def unitarity_defect(u: np.ndarray) -> float:
    """Max-norm of U U^dag - I. Zero exactly when U is unitary."""
    u = np.asarray(u)
    if u.ndim != 2 or u.shape[0] != u.shape[1]:
        raise ValueError(f"unitarity defect needs a square matrix, got shape {u.shape}")
    eye = np.eye(u.shape[0])
    return float(np.max(np.abs(u @ u.conj().T - eye)))


def assert_unitary(u: np.ndarray, tol: float = UNITARY_TOL) -> np.ndarray:
    """Return ``u`` unchanged if its unitarity defect is within ``tol``."""
    defect = unitarity_defect(u)
    if defect > tol:
        raise ValueError(f"matrix is not unitary: defect {defect:.3e} exceeds {tol:.1e}")
    return u


def sample_haar_unitary(dim: int, rng: np.random.Generator) -> np.ndarray:
    """Draw a unitary from the Haar measure on U(dim).

    A Ginibre matrix (i.i.d. standard complex Gaussians) is QR-decomposed
    and the phases of R's diagonal are multiplied back into Q's columns.
    Plain QR is not Haar-distributed; this phase fix makes it exact.
    """
    if dim < 1:
        raise ValueError(f"unitary dimension must be at least 1, got {dim}")
    g = rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))
    q, r = np.linalg.qr(g)
    diag = np.diagonal(r)
    return q * (diag / np.abs(diag))


def zero_ket(dim: int) -> np.ndarray:
    """The computational basis ket |0...0> as a length-dim vector."""
    if dim < 1:
        raise ValueError(f"state dimension must be at least 1, got {dim}")
    ket = np.zeros(dim, dtype=complex)
    ket[0] = 1.0
    return ket


def ket_density(ket: np.ndarray) -> np.ndarray:
    """Density operator |psi><psi| of a pure state vector."""
    ket = np.asarray(ket, dtype=complex)
    norm = np.linalg.norm(ket)
    if abs(norm - 1.0) > STATE_TOL:
        raise ValueError(f"pure state must have unit norm, got {norm!r}")
    return np.outer(ket, ket.conj())


def zero_state(dim: int) -> np.ndarray:
    """Density operator of |0...0>."""
    return ket_density(zero_ket(dim))


def density_defect(rho: np.ndarray) -> float:
    """How far ``rho`` is from a valid density operator.

    Max of the trace deviation from 1, the Hermiticity defect, and the
    magnitude of the most negative eigenvalue.
    """
    rho = np.asarray(rho)
    if rho.ndim != 2 or rho.shape[0] != rho.shape[1]:
        raise ValueError(f"density operator must be square, got shape {rho.shape}")
    trace_dev = abs(complex(np.trace(rho)) - 1.0)
    herm_dev = float(np.max(np.abs(rho - rho.conj().T)))
    eigmin = float(np.min(np.linalg.eigvalsh((rho + rho.conj().T) / 2)))
    return max(trace_dev, herm_dev, -min(eigmin, 0.0))


def assert_density(rho: np.ndarray, tol: float = STATE_TOL) -> np.ndarray:
    """Return ``rho`` unchanged if it is a density operator within ``tol``."""
    defect = density_defect(rho)
    if defect > tol:
        raise ValueError(f"not a density operator: defect {defect:.3e} exceeds {tol:.1e}")
    return rho
