"""Entanglement entropies as cost functions, and their gradients.

The per-gate cost of the disentangler is the Rényi entropy of the bond the
gate sits on: a gate on sites (i, i+1) changes only that bond's spectrum, so
nothing else needs weighting.  Entropies use the natural logarithm (nats).

Gradients come in two flavours: central finite differences of the cost (any
α, any θ), and a closed form for α = 2 at θ = 0 built from the Hermitian
transition matrices of the Pauli generators between Schmidt vectors.  The
closed form is exact and cheap; it also powers the trainability statistics
in :mod:`mpsprep.verification`.
"""

from __future__ import annotations

import numpy as np

from .gates import (PAULI_X, PAULI_Y, PAULI_Z, TwoQubitGateParams, gate_matrix,
                    two_site_block)
from .linalg import svdvals_safe, svdvals_stack
from .mps import GammaLambdaMPS, Spectrum

# Schmidt values at or below this are numerical rank noise, not weight
VALUE_FLOOR = 1e-14


def entropies_from_singular_values(s: np.ndarray, alpha: float) -> np.ndarray:
    """Vectorized Rényi entropy over (stacks of) descending singular values.

    Values at or below ``VALUE_FLOOR`` are rank noise and excluded.  The sum
    is evaluated in complement form around the leading weight,

        S = (α log1p(-τ) + log1p(R)) / (1 - α),
        τ = tail weight fraction, R = Σ_{j>=2} q_j^α / (1-τ)^α,

    so that nearly-disentangled spectra (τ down to ~1e-28) keep full
    relative precision instead of rounding against the leading weight.
    """
    s = np.asarray(s, dtype=float)
    scalar = s.ndim == 1
    if scalar:
        s = s[None, :]
    p = np.where(s > VALUE_FLOOR, s, 0.0) ** 2
    p = -np.sort(-p, axis=-1)                     # enforce descending weights
    total = np.sum(p, axis=-1)
    q = p / total[:, None]
    tail = q[:, 1:]
    tau = np.sum(tail, axis=-1)

    if np.isinf(alpha):
        out = -np.log1p(-tau)
    elif abs(alpha - 1.0) < 1e-12:
        with np.errstate(divide="ignore", invalid="ignore"):
            terms = np.where(tail > 0, tail * np.log(np.where(tail > 0, tail, 1.0)), 0.0)
        out = -(1.0 - tau) * np.log1p(-tau) - np.sum(terms, axis=-1)
    else:
        lead = np.exp(alpha * np.log1p(-tau))     # (1-τ)^α
        rest = np.sum(tail**alpha, axis=-1) / lead
        out = (alpha * np.log1p(-tau) + np.log1p(rest)) / (1.0 - alpha)
    out = np.maximum(out, 0.0)
    return out[0] if scalar else out


def _values(spectrum) -> np.ndarray:
    if isinstance(spectrum, Spectrum):
        return spectrum.values
    return np.abs(np.asarray(spectrum, dtype=float))


def renyi_entropy(spectrum, alpha: float) -> float:
    """Rényi entanglement entropy of one Schmidt spectrum, natural log.

    ``alpha`` is any positive real; 1 gives the von Neumann limit
    -sum p log p, infinity gives -log(λ_1²).  Schmidt values at or below
    the rank floor are excluded, which keeps α <= 1 stable on truncated
    spectra.
    """
    if not alpha > 0:
        raise ValueError("the Rényi index must be positive")
    v = _values(spectrum)
    if not np.any(v > VALUE_FLOOR):
        return 0.0
    return float(entropies_from_singular_values(v, alpha))


def tail_weight(spectrum) -> float:
    """Distance-from-product measure of one bond: -log(λ_1²)."""
    v = _values(spectrum)
    if not np.any(v > VALUE_FLOOR):
        return 0.0
    return float(entropies_from_singular_values(v, np.inf))


class BondCostFunction:
    """Post-gate entropy of one bond as a function of the 9 gate angles.

    Precomputes the two-site block Λ_l Γ_i Λ_c Γ_{i+1} Λ_r once; each
    evaluation then only applies a fresh 4x4 gate and reads singular values.
    ``batch`` evaluates many angle vectors with one stacked LAPACK call,
    which is what the finite-difference gradient uses.
    """

    def __init__(self, mps: GammaLambdaMPS, site: int, alpha: float):
        if not 0 <= site <= mps.n - 2:
            raise ValueError(f"site {site} out of range")
        self.alpha = alpha
        block = two_site_block(mps, site)           # (Dl, 2, 2, Dr)
        dl, _, _, dr = block.shape
        # fold to (4, Dl*Dr): gate application becomes a single 4x4 matmul
        self._folded = block.transpose(1, 2, 0, 3).reshape(4, dl * dr)
        self._dl, self._dr = dl, dr

    def spectrum_values(self, theta: np.ndarray) -> np.ndarray:
        g = gate_matrix(TwoQubitGateParams(theta))
        blk = (g @ self._folded).reshape(2, 2, self._dl, self._dr)
        mat = blk.transpose(2, 0, 1, 3).reshape(self._dl * 2, 2 * self._dr)
        return svdvals_safe(mat)

    def __call__(self, theta: np.ndarray) -> float:
        return float(entropies_from_singular_values(self.spectrum_values(theta),
                                                    self.alpha))

    def batch(self, thetas: np.ndarray) -> np.ndarray:
        """Costs for a (m, 9) stack of angle vectors."""
        thetas = np.asarray(thetas, dtype=float)
        gates = np.stack([gate_matrix(TwoQubitGateParams(t)) for t in thetas])
        blk = np.einsum("gst,tx->gsx", gates, self._folded)
        blk = blk.reshape(-1, 2, 2, self._dl, self._dr)
        mats = blk.transpose(0, 3, 1, 2, 4).reshape(-1, self._dl * 2, 2 * self._dr)
        svals = svdvals_stack(mats)
        return entropies_from_singular_values(svals, self.alpha)


def local_cost(mps: GammaLambdaMPS, site: int, params: TwoQubitGateParams,
               alpha: float) -> float:
    """Entropy of the center-bond spectrum after applying the gate (uncommitted)."""
    return BondCostFunction(mps, site, alpha)(params.theta)


def fd_gradient(mps: GammaLambdaMPS, site: int, params: TwoQubitGateParams,
                alpha: float, h: float = 1e-5) -> np.ndarray:
    """Central finite differences of the local cost in each of the 9 angles."""
    if not h > 0:
        raise ValueError("the step size must be positive")
    cost = BondCostFunction(mps, site, alpha)
    return fd_gradient_of(cost, params.theta, h)


def fd_gradient_of(cost: BondCostFunction, theta: np.ndarray, h: float) -> np.ndarray:
    theta = np.asarray(theta, dtype=float)
    shifts = np.zeros((18, 9))
    for j in range(9):
        shifts[2 * j, j] = h
        shifts[2 * j + 1, j] = -h
    vals = cost.batch(theta[None, :] + shifts)
    return (vals[0::2] - vals[1::2]) / (2.0 * h)


# ---------------------------------------------------------------------------
# closed-form gradient at θ = 0 (α = 2)
# ---------------------------------------------------------------------------

def gradient_theta0_from_blocks(a_blocks: np.ndarray, lam: np.ndarray,
                                b_blocks: np.ndarray) -> np.ndarray:
    """∂_j S_2 at θ = 0 from the canonical tensors around one bond.

    ``a_blocks[s]`` are the physical blocks of the left-isometric tensor
    A = Λ_l Γ_l (shape (2, D_left, M)), ``b_blocks[s]`` of the right-isometric
    B = Γ_r Λ_r (shape (2, M, D_right)), and ``lam`` the center spectrum.

    For each generator P (XX, YY, ZZ couplings; 1⊗σ and σ⊗1 singles) the
    derivative of the purity contracts to

        T = sum_{ab} λ_b³ λ_a L_{ba} R_{ba},
        L = transition matrix of σ_left between left Schmidt vectors,
        R = the same for σ_right on the right,

    and ∂_j S_2 = -4 Im(T) / sum λ⁴.  Single-qubit generators have L or R
    equal to the identity, making T real: those six components vanish
    identically, as local unitaries cannot change a Schmidt spectrum.
    """
    lam = np.asarray(lam, dtype=float)
    paulis = (PAULI_X, PAULI_Y, PAULI_Z)
    # L_sigma[b, a] = <u_b| sigma_l |u_a> = sum_{s's} sigma[s', s] (A^{s'†} A^s)_{ba}
    ls = [np.einsum("tmb,ts,sma->ba", a_blocks.conj(), sig, a_blocks)
          for sig in paulis]
    # R_sigma[b, a] = sum_{s's} sigma[s', s] (B^s B^{s'†})_{ab}
    rs = [np.einsum("tbm,ts,sam->ba", b_blocks.conj(), sig, b_blocks)
          for sig in paulis]
    purity = float(np.sum(lam**4))
    w = (lam**3)[:, None] * lam[None, :]
    grad = np.zeros(9)
    for j in range(3):
        t = np.sum(w * ls[j] * rs[j])
        grad[j] = -4.0 * t.imag / purity
    lam4 = lam**4
    for j in range(3):
        # 1 ⊗ sigma (right qubit): L = identity
        grad[3 + j] = -4.0 * np.sum(lam4 * np.diagonal(rs[j])).imag / purity
        # sigma ⊗ 1 (left qubit): R = identity
        grad[6 + j] = -4.0 * np.sum(lam4 * np.diagonal(ls[j])).imag / purity
    return grad


def analytic_gradient_theta0(mps: GammaLambdaMPS, site: int) -> np.ndarray:
    """Closed-form ∂_j S_2 at θ = 0 for a gate on sites (site, site+1)."""
    if not 0 <= site <= mps.n - 2:
        raise ValueError(f"site {site} out of range")
    a = mps.left_tensor(site).transpose(1, 0, 2)     # (2, D_l, M)
    b = mps.right_tensor(site + 1).transpose(1, 0, 2)  # (2, M, D_r)
    return gradient_theta0_from_blocks(a, mps.lambdas[site].values, b)
