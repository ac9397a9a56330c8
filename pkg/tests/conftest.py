"""Shared oracles: everything here works on dense vectors, independently of
the MPS code paths under test."""

import numpy as np
import pytest


def random_state(n: int, rng: np.random.Generator) -> np.ndarray:
    v = rng.normal(size=2**n) + 1j * rng.normal(size=2**n)
    return v / np.linalg.norm(v)


def dense_apply_two_qubit(vec: np.ndarray, n: int, site: int, u4: np.ndarray) -> np.ndarray:
    """Apply a 4x4 unitary to qubits (site, site+1), qubit 0 most significant."""
    t = vec.reshape(2**site, 4, 2 ** (n - site - 2))
    return np.einsum("st,atb->asb", u4, t).reshape(-1)


def dense_apply_single_qubit(vec: np.ndarray, n: int, site: int, u2: np.ndarray) -> np.ndarray:
    t = vec.reshape(2**site, 2, 2 ** (n - site - 1))
    return np.einsum("st,atb->asb", u2, t).reshape(-1)


def dense_schmidt_values(vec: np.ndarray, n: int, bond: int) -> np.ndarray:
    """Singular values across the cut after qubit ``bond`` (0-based bond index)."""
    mat = vec.reshape(2 ** (bond + 1), -1)
    s = np.linalg.svd(mat, compute_uv=False)
    return s[s > 1e-12]


def phase_aligned_distance(a: np.ndarray, b: np.ndarray) -> float:
    """min over global phase of ||a - e^{i phi} b||.

    Aligns the phase explicitly and differences the vectors; unlike
    sqrt(2 - 2|<a|b>|) this does not square-root the fidelity rounding noise,
    so it resolves distances down to ~1e-13.
    """
    ov = np.vdot(b, a)
    phase = ov / abs(ov) if abs(ov) > 1e-300 else 1.0
    return float(np.linalg.norm(a - phase * b))


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
