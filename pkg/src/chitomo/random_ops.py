"""Random states, unitaries and channels for tests and sanity checks."""

from __future__ import annotations

import numpy as np

__all__ = [
    "random_unitary",
    "random_state_vector",
    "random_density_matrix",
    "random_trace_preserving_kraus",
]


def _ginibre(rows: int, cols: int, rng: np.random.Generator) -> np.ndarray:
    return rng.standard_normal((rows, cols)) + 1j * rng.standard_normal((rows, cols))


def random_unitary(dim: int, rng: np.random.Generator) -> np.ndarray:
    """Haar-random unitary via QR of a complex Gaussian matrix."""
    q, r = np.linalg.qr(_ginibre(dim, dim, rng))
    phases = np.diag(r).copy()
    phases /= np.abs(phases)
    return q * phases


def random_state_vector(dim: int, rng: np.random.Generator) -> np.ndarray:
    v = _ginibre(dim, 1, rng).ravel()
    return v / np.linalg.norm(v)


def random_density_matrix(
    dim: int, rng: np.random.Generator, rank: int | None = None
) -> np.ndarray:
    """Normalized g g^+ for a dim x rank complex Gaussian g."""
    g = _ginibre(dim, rank or dim, rng)
    rho = g @ g.conj().T
    return rho / rho.trace()


def random_trace_preserving_kraus(
    dim: int, n_ops: int, rng: np.random.Generator
) -> list[np.ndarray]:
    """Random channel with n_ops Kraus operators, built by completing a random
    isometry: the (n_ops*dim) x dim Q-factor of a Gaussian matrix is sliced
    into dim x dim blocks, so sum_k E_k^+ E_k = I exactly up to round-off."""
    q, _ = np.linalg.qr(_ginibre(n_ops * dim, dim, rng))
    return [q[k * dim : (k + 1) * dim, :] for k in range(n_ops)]
