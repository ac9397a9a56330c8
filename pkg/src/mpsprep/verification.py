"""Numeric verification of the efficiency and trainability guarantees.

Three families of checks live here:

* ``rank_bound`` — for Rényi index 0 < α < 1, a spectrum with entropy S whose
  weight beyond rank D sums to p obeys
  ``D <= (1-α) α^{α/(1-α)} p^{-α/(1-α)} e^S``; checked by brute force over
  random spectra.
* ``prep_error_bound`` — the compiled-circuit preparation error obeys
  ``|| |ψ> - U†|0> || <= ε + L sqrt(2 (n-1) p_max)`` where ε is the truncated
  reverse-pass error, L the layer count and p_max the largest single
  truncation weight; checked against dense simulation at small n.
* ``gradient_moment_stats`` — with the tensors on both sides of a bond drawn
  as Haar-random isometries and the center spectrum held fixed, the θ=0 cost
  gradient has zero mean, and its second moment is compared against the
  closed form ``8/(2D+1)² (1 - e^{2(S₂-S₃)})``.  For any non-flat spectrum
  that expression is negative (Cauchy-Schwarz gives (Σp²)² <= Σp³) while a
  variance cannot be, so the report carries both numbers and a sign flag
  instead of failing; the Monte-Carlo estimate is treated as ground truth.

The Haar sampler itself is validated against the exact second and fourth
moment formulas of the unitary group.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .entropy import gradient_theta0_from_blocks, renyi_entropy
from .gates import Circuit, gate_matrix
from .linalg import dag
from .mps import DENSE_SITE_CAP, GammaLambdaMPS, to_statevector


# ---------------------------------------------------------------------------
# closed-form bounds
# ---------------------------------------------------------------------------

def rank_bound(entropy: float, alpha: float, tail: float) -> float:
    """Largest rank compatible with entropy value ``entropy`` at cut weight ``tail``.

    Valid for 0 < alpha < 1 and 0 < tail < 1; ``entropy`` is the α-Rényi
    entropy of the full spectrum (natural log).
    """
    if not 0.0 < alpha < 1.0:
        raise ValueError("alpha must lie strictly between 0 and 1")
    if not 0.0 < tail < 1.0:
        raise ValueError("tail weight must lie strictly between 0 and 1")
    if entropy < 0.0:
        raise ValueError("entropy must be nonnegative")
    expo = alpha / (1.0 - alpha)
    return (1.0 - alpha) * alpha**expo / tail**expo * np.exp(entropy)


def prep_error_bound(eps: float, layers: int, n: int, p_max: float) -> float:
    """ε + L sqrt(2 (n-1) p_max): total state-preparation error bound."""
    if min(eps, layers, n, p_max) < 0:
        raise ValueError("all arguments must be nonnegative")
    return float(eps + layers * np.sqrt(2.0 * (n - 1) * p_max))


# ---------------------------------------------------------------------------
# Haar sampling
# ---------------------------------------------------------------------------

def haar_isometry(rows: int, cols: int, seed=None) -> np.ndarray:
    """Column-orthonormal (rows x cols) matrix, Haar-distributed.

    QR of a complex standard-Gaussian matrix with the R-diagonal phase fix
    that makes the factorization unique; the resulting distribution is
    invariant under left multiplication by fixed unitaries.
    """
    if rows < cols:
        raise ValueError("an isometry needs rows >= cols")
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    z = rng.normal(size=(rows, cols)) + 1j * rng.normal(size=(rows, cols))
    q, r = np.linalg.qr(z)
    d = np.diagonal(r)
    return q * (d / np.abs(d))


def haar_unitary(dim: int, seed=None) -> np.ndarray:
    return haar_isometry(dim, dim, seed)


def _haar_stack(rows: int, cols: int, count: int, rng: np.random.Generator) -> np.ndarray:
    """(count, rows, cols) stack of independent Haar isometries."""
    z = rng.normal(size=(count, rows, cols)) + 1j * rng.normal(size=(count, rows, cols))
    q, r = np.linalg.qr(z)
    d = np.diagonal(r, axis1=-2, axis2=-1)
    return q * (d / np.abs(d))[:, None, :]


def second_moment_check(dim: int, samples: int, seed=0, batch: int = 4096) -> dict:
    """E[U_ab conj(U_cd)] against δ_ac δ_bd / dim, reported as z-scores.

    Averages the full moment tensor over ``samples`` Haar unitaries and
    returns the worst |z| over all index tuples, split into the delta
    (nonzero-target) and off-target entries.
    """
    rng = np.random.default_rng(seed)
    mean = np.zeros((dim, dim, dim, dim), dtype=complex)
    sq = np.zeros((dim, dim, dim, dim))
    done = 0
    while done < samples:
        m = min(batch, samples - done)
        u = _haar_stack(dim, dim, m, rng)
        prod = u[:, :, None, :, None] * u.conj()[:, None, :, None, :]  # (m, a, c, b, d)
        prod = prod.transpose(0, 1, 3, 2, 4)                            # (m, a, b, c, d)
        mean += prod.sum(axis=0)
        sq += (np.abs(prod) ** 2).sum(axis=0)
        done += m
    mean /= samples
    var = sq / samples - np.abs(mean) ** 2
    stderr = np.sqrt(np.maximum(var, 1e-300) / samples)
    eye = np.eye(dim)
    # target[a, b, c, d] = δ_ac δ_bd / dim
    target = eye[:, None, :, None] * eye[None, :, None, :] / dim
    z = np.abs(mean - target) / stderr
    on = target != 0
    return {
        "dim": dim,
        "samples": samples,
        "max_z_delta_entries": float(np.max(z[on])),
        "max_z_null_entries": float(np.max(z[~on])),
        "max_z": float(np.max(z)),
    }


_FOURTH_TUPLES = [
    # (a, b, c, d, e, f, g, h) for E[U_ab U_cd conj(U_ef) conj(U_gh)]
    (0, 0, 0, 0, 0, 0, 0, 0),   # E|U_00|^4
    (0, 0, 0, 1, 0, 0, 0, 1),   # E|U_00|^2 |U_01|^2
    (0, 0, 1, 0, 0, 0, 1, 0),   # E|U_00|^2 |U_10|^2
    (0, 0, 1, 1, 0, 0, 1, 1),   # E|U_00|^2 |U_11|^2
    (0, 0, 1, 1, 0, 1, 1, 0),   # E[U_00 U_11 conj(U_01) conj(U_10)]
    (0, 0, 0, 1, 0, 1, 0, 0),   # E[U_00 U_01 conj(U_01) conj(U_00)]
    (0, 1, 1, 0, 0, 0, 1, 1),   # E[U_01 U_10 conj(U_00) conj(U_11)]
]


def fourth_moment_target(dim: int, idx: tuple) -> float:
    """Exact E[U_ab U_cd conj(U_ef) conj(U_gh)] for the unitary group."""
    a, b, c, d, e, f, g, h = idx
    n = dim
    direct = (a == e and b == f and c == g and d == h) + (a == g and b == h and c == e and d == f)
    crossed = (a == e and b == h and c == g and d == f) + (a == g and b == f and c == e and d == h)
    return direct / (n**2 - 1) - crossed / (n * (n**2 - 1))


def fourth_moment_check(dim: int, samples: int, seed=0, batch: int = 4096) -> dict:
    """Sampled fourth moments against the two-term closed form, as z-scores."""
    rng = np.random.default_rng(seed)
    sums = np.zeros(len(_FOURTH_TUPLES), dtype=complex)
    sq = np.zeros(len(_FOURTH_TUPLES))
    done = 0
    while done < samples:
        m = min(batch, samples - done)
        u = _haar_stack(dim, dim, m, rng)
        for j, (a, b, c, d, e, f, g, h) in enumerate(_FOURTH_TUPLES):
            vals = u[:, a, b] * u[:, c, d] * u[:, e, f].conj() * u[:, g, h].conj()
            sums[j] += vals.sum()
            sq[j] += (np.abs(vals) ** 2).sum()
        done += m
    mean = sums / samples
    var = sq / samples - np.abs(mean) ** 2
    stderr = np.sqrt(np.maximum(var, 1e-300) / samples)
    targets = np.array([fourth_moment_target(dim, t) for t in _FOURTH_TUPLES])
    z = np.abs(mean - targets) / stderr
    return {
        "dim": dim,
        "samples": samples,
        "tuples": [list(t) for t in _FOURTH_TUPLES],
        "targets": targets.tolist(),
        "estimates": [[float(v.real), float(v.imag)] for v in mean],
        "z_scores": z.tolist(),
        "max_z": float(np.max(z)),
    }


# ---------------------------------------------------------------------------
# gradient statistics over random isometries
# ---------------------------------------------------------------------------

@dataclass
class GradientMomentStats:
    """Monte-Carlo moments of the θ=0 gradient for one (D, Λ₀) setting."""

    bond_dim: int
    spectrum: np.ndarray
    samples: int
    components: tuple[str, ...]
    means: np.ndarray
    mean_stderr: np.ndarray
    variances: np.ndarray
    variance_stderr: np.ndarray
    closed_form: float
    sign_flag: bool

    def mean_z_scores(self) -> np.ndarray:
        safe = np.where(self.mean_stderr > 0, self.mean_stderr, 1.0)
        z = np.abs(self.means) / safe
        return np.where(self.mean_stderr > 0, z, np.abs(self.means) > 1e-12)

    def to_dict(self) -> dict:
        return {
            "bond_dim": self.bond_dim,
            "spectrum": self.spectrum.tolist(),
            "samples": self.samples,
            "components": list(self.components),
            "means": self.means.tolist(),
            "mean_stderr": self.mean_stderr.tolist(),
            "mean_z_scores": self.mean_z_scores().tolist(),
            "variances": self.variances.tolist(),
            "variance_stderr": self.variance_stderr.tolist(),
            "closed_form": self.closed_form,
            "closed_form_magnitude_ratio": [
                float(v / abs(self.closed_form)) if self.closed_form != 0 else None
                for v in self.variances
            ],
            "sign_flag": self.sign_flag,
        }


def gradient_variance_closed_form(bond_dim: int, spectrum: np.ndarray) -> float:
    """8/(2D+1)² (1 - e^{2(S₂ - S₃)}), evaluated verbatim.

    Negative for every non-flat spectrum; see the module docstring.
    """
    s2 = renyi_entropy(spectrum, 2.0)
    s3 = renyi_entropy(spectrum, 3.0)
    return float(8.0 / (2 * bond_dim + 1) ** 2 * (1.0 - np.exp(2.0 * (s2 - s3))))


def gradient_moment_stats(bond_dim: int, spectrum, samples: int, seed=0,
                          batch: int = 2048) -> GradientMomentStats:
    """Sample the θ=0 gradient over Haar-random surroundings of one bond.

    The left tensor A = Λ_l Γ_l is a Haar (2D x M) isometry and the right
    tensor B = Γ_r Λ_r the adjoint of an independent one, with the center
    spectrum Λ₀ (length M <= 2D) held fixed; this realizes a random state
    with the given bond data.  Components are the XX, YY, ZZ couplings (the
    single-qubit components vanish identically).
    """
    lam = spectrum.values if hasattr(spectrum, "values") else np.asarray(spectrum, dtype=float)
    lam = lam / np.linalg.norm(lam)
    m = len(lam)
    if m > 2 * bond_dim:
        raise ValueError("center spectrum cannot exceed 2*bond_dim values")
    if samples < 1:
        raise ValueError("need a positive sampling budget")
    rng = np.random.default_rng(seed)

    total = np.zeros(3)
    total_sq = np.zeros(3)
    total_quad = np.zeros(3)
    done = 0
    while done < samples:
        cnt = min(batch, samples - done)
        a = _haar_stack(2 * bond_dim, m, cnt, rng)      # rows (d_l, s_l) -> cols M
        w = _haar_stack(2 * bond_dim, m, cnt, rng)
        grads = np.empty((cnt, 3))
        for i in range(cnt):
            a_blocks = a[i].reshape(bond_dim, 2, m).transpose(1, 0, 2)   # (2, D, M)
            b_blocks = dag(w[i]).reshape(m, 2, bond_dim).transpose(1, 0, 2)  # (2, M, D)
            grads[i] = gradient_theta0_from_blocks(a_blocks, lam, b_blocks)[:3]
        total += grads.sum(axis=0)
        total_sq += (grads**2).sum(axis=0)
        total_quad += (grads**4).sum(axis=0)
        done += cnt

    means = total / samples
    second = total_sq / samples
    variances = second - means**2
    mean_stderr = np.sqrt(np.maximum(variances, 0.0) / samples)
    fourth = total_quad / samples
    var_of_sq = np.maximum(fourth - second**2, 0.0)
    variance_stderr = np.sqrt(var_of_sq / samples)

    closed = gradient_variance_closed_form(bond_dim, lam)
    flat = np.allclose(lam**2, lam[0] ** 2, rtol=0, atol=1e-12)
    sign_flag = closed < -1e-15 and not flat
    return GradientMomentStats(
        bond_dim=bond_dim,
        spectrum=lam,
        samples=samples,
        components=("xx", "yy", "zz"),
        means=means,
        mean_stderr=mean_stderr,
        variances=variances,
        variance_stderr=variance_stderr,
        closed_form=closed,
        sign_flag=sign_flag,
    )


# ---------------------------------------------------------------------------
# dense end-to-end support
# ---------------------------------------------------------------------------

def apply_gate_dense(vec: np.ndarray, n: int, site: int, u4: np.ndarray) -> np.ndarray:
    """Apply a 4x4 gate to qubits (site, site+1) of a dense state vector."""
    t = vec.reshape(2**site, 4, -1)
    return np.einsum("st,atb->asb", u4, t).reshape(-1)


def dense_prepared_state(circuit: Circuit) -> np.ndarray:
    """U†|0...0> by exact dense simulation (no truncation)."""
    if circuit.n > DENSE_SITE_CAP:
        raise ValueError(f"n = {circuit.n} exceeds the dense simulation cap")
    vec = np.zeros(2**circuit.n, dtype=complex)
    vec[0] = 1.0
    if circuit.readoff is not None:
        for site, ro in enumerate(circuit.readoff):
            t = vec.reshape(2**site, 2, -1)
            vec = np.einsum("st,atb->asb", ro.prepare_matrix(), t).reshape(-1)
    for layer in reversed(circuit.layers):
        for site, params in reversed(layer.gates):
            vec = apply_gate_dense(vec, circuit.n, site, dag(gate_matrix(params)))
    return vec


def prep_error_check(mps: GammaLambdaMPS, circuit: Circuit, eps: float,
                     p_max: float) -> dict:
    """Dense || |ψ> - U†|0>|| against the ε + L√(2(n-1)p_max) bound."""
    psi = to_statevector(mps)
    prepared = dense_prepared_state(circuit)
    dense_err = float(np.sqrt(max(0.0, 2.0 - 2.0 * abs(np.vdot(psi, prepared)))))
    bound = prep_error_bound(eps, circuit.num_layers, mps.n, p_max)
    return {
        "n": mps.n,
        "layers": circuit.num_layers,
        "eps": eps,
        "p_max": p_max,
        "bound": bound,
        "dense_error": dense_err,
        "slack": bound - dense_err,
        "ok": bool(dense_err <= bound + 1e-12),
    }


def rank_bound_check(trials: int, seed=0, max_rank: int = 64,
                     alphas=(0.1, 0.25, 0.5, 0.75, 0.9)) -> dict:
    """Brute-force search for violations of the rank bound.

    Draws random spectra (mixing flat-ish and power-law-skewed shapes), cuts
    each at every feasible rank, and tests D <= bound for each α.  A small
    relative slack absorbs float rounding in the exactly-tight flat cases.
    """
    rng = np.random.default_rng(seed)
    violations = 0
    worst = 0.0
    checked = 0
    for _ in range(trials):
        rank = int(rng.integers(2, max_rank + 1))
        shape = rng.uniform(0.5, 4.0)
        p = rng.random(rank) ** shape
        p = np.sort(p)[::-1]
        p /= p.sum()
        suffix = np.cumsum(p[::-1])[::-1]
        for alpha in alphas:
            s = renyi_entropy(np.sqrt(p), alpha)
            for cut in range(1, rank):
                tail = float(suffix[cut])
                if not 0.0 < tail < 1.0:
                    continue
                bound = rank_bound(s, alpha, tail)
                checked += 1
                ratio = cut / bound
                worst = max(worst, ratio)
                if ratio > 1.0 + 1e-9:
                    violations += 1
    return {
        "trials": trials,
        "checks": checked,
        "violations": violations,
        "worst_rank_to_bound_ratio": worst,
        "ok": violations == 0,
    }
