"""Matrix product states in the Schmidt-gauge (Vidal) form.

A state on ``n`` qubits is stored as per-site rank-3 tensors ``gammas[k]`` of
shape ``(D_{k-1}, 2, D_k)`` together with per-bond Schmidt spectra
``lambdas[k]`` (``k = 0 .. n-2`` between sites ``k`` and ``k+1``), with
``D_{-1} = D_{n-1} = 1`` at the open boundaries.  This gauge gives local
access to the exact bipartite Schmidt spectrum at every bond, which is what
the disentangling optimizer feeds on.

Conventions
-----------
* Sites and bonds are 0-based throughout the Python API; the JSON file format
  uses the 1-based indices of the documented schema.
* ``A_k = Λ_{k-1} Γ_k`` is left-isometric and ``B_k = Γ_k Λ_k`` is
  right-isometric.  Both identities hold exactly in real arithmetic; in
  floating point the defect of the side that divides by small Schmidt values
  scales like ``eps / λ_min²``, which is why values at or below
  ``ZERO_FLOOR`` are dropped as rank reduction rather than inverted.
* Boundary bond dimensions are fixed to 1 (finite open chains only;
  nontrivial boundary vectors for chunks of infinite systems are out of
  scope).
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .linalg import ZERO_FLOOR, pinv_diag, svd_safe

DENSE_SITE_CAP = 20  # 2**20 complex amplitudes is the dense-oracle budget

NORM_TOL = 1e-10
SPECTRUM_TOL = 1e-12


class InvariantViolation(ValueError):
    """A structural invariant of an MPS (canonical form, norm) is broken."""


@dataclass
class Spectrum:
    """Schmidt values at one bond: strictly positive, descending.

    ``values`` are the Schmidt coefficients λ_j; their squares ``p_j = λ_j²``
    form the weight distribution every entropy in this package is computed
    from.
    """

    values: np.ndarray

    @classmethod
    def from_singular_values(cls, s: np.ndarray, floor: float = ZERO_FLOOR) -> "Spectrum":
        """Drop numerically-zero values and enforce descending order."""
        s = np.asarray(s, dtype=float)
        s = s[s > floor]
        if s.size == 0:
            raise InvariantViolation("spectrum has no values above the zero floor")
        if np.any(np.diff(s) > 0):
            s = np.sort(s)[::-1]
        return cls(s.copy())

    @property
    def squared(self) -> np.ndarray:
        return self.values**2

    def renormalized(self) -> "Spectrum":
        return Spectrum(self.values / np.linalg.norm(self.values))

    def __len__(self) -> int:
        return len(self.values)

    def validate(self, tol: float = SPECTRUM_TOL, require_unit: bool = True) -> None:
        v = self.values
        if np.any(v <= 0):
            raise InvariantViolation("Schmidt values must be strictly positive")
        if np.any(np.diff(v) > tol):
            raise InvariantViolation("Schmidt values must be sorted descending")
        total = float(np.sum(v**2))
        if require_unit:
            if abs(total - 1.0) > tol:
                raise InvariantViolation(f"Schmidt weights sum to {total}, not 1")
        elif total > 1.0 + tol:
            raise InvariantViolation(f"Schmidt weights sum to {total} > 1")


class GammaLambdaMPS:
    """An open-boundary qubit MPS in Schmidt gauge.

    The object is treated as immutable: operations that change the state
    (gates, truncation) return a new instance, sharing the untouched site
    tensors with the input.  Pure contractions (`to_statevector`, `overlap`,
    expectation values) are safe to run concurrently on a shared instance.
    """

    def __init__(self, gammas: list[np.ndarray], lambdas: list[Spectrum]):
        if len(gammas) < 2:
            raise ValueError("an MPS needs at least 2 sites")
        if len(lambdas) != len(gammas) - 1:
            raise ValueError("need exactly one spectrum per bond")
        self.gammas = [np.asarray(g, dtype=complex) for g in gammas]
        self.lambdas = list(lambdas)
        if self.gammas[0].shape[0] != 1 or self.gammas[-1].shape[2] != 1:
            raise ValueError("boundary bond dimensions must be 1")
        for k, g in enumerate(self.gammas):
            if g.ndim != 3 or g.shape[1] != 2:
                raise ValueError(f"site tensor {k} must have shape (Dl, 2, Dr)")
            if k < self.n - 1 and g.shape[2] != len(self.lambdas[k]):
                raise ValueError(f"bond {k}: tensor/spectrum dimension mismatch")
            if k > 0 and g.shape[0] != len(self.lambdas[k - 1]):
                raise ValueError(f"bond {k-1}: tensor/spectrum dimension mismatch")

    # -- basic introspection ------------------------------------------------

    @property
    def n(self) -> int:
        return len(self.gammas)

    @property
    def d(self) -> int:
        return 2

    def bond_dims(self) -> list[int]:
        """Bond dimensions D_0 .. D_{n-2} (internal bonds only)."""
        return [len(s) for s in self.lambdas]

    def copy(self) -> "GammaLambdaMPS":
        return GammaLambdaMPS([g.copy() for g in self.gammas],
                              [Spectrum(s.values.copy()) for s in self.lambdas])

    # -- canonical tensors --------------------------------------------------

    def left_tensor(self, k: int) -> np.ndarray:
        """A_k = Λ_{k-1} Γ_k, left-isometric: sum_s A^s† A^s = 1."""
        g = self.gammas[k]
        if k == 0:
            return g
        return self.lambdas[k - 1].values[:, None, None] * g

    def right_tensor(self, k: int) -> np.ndarray:
        """B_k = Γ_k Λ_k, right-isometric: sum_s B^s B^s† = 1."""
        g = self.gammas[k]
        if k == self.n - 1:
            return g
        return g * self.lambdas[k].values[None, None, :]

    # -- invariants ----------------------------------------------------------

    def isometry_defects(self) -> tuple[float, float]:
        """Max deviation of the left and right isometry conditions."""
        left = 0.0
        right = 0.0
        for k in range(self.n):
            a = self.left_tensor(k)
            m = a.reshape(-1, a.shape[2])
            left = max(left, float(np.max(np.abs(m.conj().T @ m - np.eye(a.shape[2])))))
            b = self.right_tensor(k)
            m = b.reshape(b.shape[0], -1)
            right = max(right, float(np.max(np.abs(m @ m.conj().T - np.eye(b.shape[0])))))
        return left, right

    def norm(self) -> float:
        return float(abs(overlap(self, self)) ** 0.5)

    def validate(self, iso_tol: float = 1e-9, norm_tol: float = NORM_TOL) -> dict:
        """Check all structural invariants, raising InvariantViolation on failure.

        Returns the measured deviations so callers can report diagnostics.
        """
        for s in self.lambdas:
            s.validate()
        left, right = self.isometry_defects()
        nrm = self.norm()
        report = {"left_isometry": left, "right_isometry": right, "norm_deviation": abs(nrm - 1.0)}
        if left > iso_tol or right > iso_tol:
            raise InvariantViolation(f"isometry defect too large: {report}")
        if abs(nrm - 1.0) > norm_tol:
            raise InvariantViolation(f"state norm {nrm} deviates from 1: {report}")
        return report


# ---------------------------------------------------------------------------
# construction
# ---------------------------------------------------------------------------

def product_mps(site_states: list[np.ndarray]) -> GammaLambdaMPS:
    """Bond-dimension-1 MPS for a product state; each entry is a 2-vector."""
    gammas = []
    for v in site_states:
        v = np.asarray(v, dtype=complex)
        nrm = np.linalg.norm(v)
        if nrm < 1e-300:
            raise ValueError("zero single-site state")
        gammas.append((v / nrm).reshape(1, 2, 1))
    lambdas = [Spectrum(np.array([1.0])) for _ in range(len(gammas) - 1)]
    return GammaLambdaMPS(gammas, lambdas)


def zero_state_mps(n: int) -> GammaLambdaMPS:
    """|0...0> on n sites."""
    return product_mps([np.array([1.0, 0.0])] * n)


def canonicalize(statevector: np.ndarray, *, norm_tol: float = NORM_TOL) -> GammaLambdaMPS:
    """Decompose a dense state vector into Schmidt-gauge MPS form.

    Sweeps left to right, splitting one site at a time with an SVD; the
    singular values at each cut are the exact Schmidt spectrum of that
    bipartition, so no further gauging is required.

    The input must be normalized to 1 within ``norm_tol`` and describe at
    most ``DENSE_SITE_CAP`` qubits.
    """
    vec = np.asarray(statevector, dtype=complex).reshape(-1)
    n = int(round(np.log2(vec.size)))
    if 2**n != vec.size or n < 2:
        raise ValueError(f"state vector length {vec.size} is not 2**n with n >= 2")
    if n > DENSE_SITE_CAP:
        raise ValueError(f"n = {n} exceeds the dense conversion cap {DENSE_SITE_CAP}")
    nrm = np.linalg.norm(vec)
    if abs(nrm - 1.0) > norm_tol:
        raise ValueError(f"input norm {nrm} deviates from 1 beyond {norm_tol}")
    vec = vec / nrm

    gammas: list[np.ndarray] = []
    lambdas: list[Spectrum] = []
    prev = np.array([1.0])          # Λ_{k-1}
    rest = vec.reshape(1, -1)       # (D_{k-1}, 2^{n-k})
    for _ in range(n - 1):
        dl = rest.shape[0]
        u, s, vh = svd_safe(rest.reshape(dl * 2, -1))
        keep = s > ZERO_FLOOR
        u, s, vh = u[:, keep], s[keep], vh[keep]
        a = u.reshape(dl, 2, -1)                       # left-isometric A_k
        gammas.append(a * pinv_diag(prev)[:, None, None])
        lambdas.append(Spectrum.from_singular_values(s))
        rest = s[:, None] * vh                          # Λ_k V†, next block
        prev = s
    gammas.append((rest * pinv_diag(prev)[:, None]).reshape(-1, 2, 1))
    return GammaLambdaMPS(gammas, lambdas)


def vidalize(tensors: list[np.ndarray]) -> GammaLambdaMPS:
    """Bring an arbitrary open-boundary MPS (plain site tensors) to Schmidt gauge.

    Left-to-right QR sweep to orthogonalize, then a right-to-left SVD sweep
    that extracts the exact Schmidt spectra.  The state is normalized.
    """
    ms = [np.asarray(t, dtype=complex) for t in tensors]
    n = len(ms)
    if n < 2:
        raise ValueError("need at least 2 sites")
    # left sweep: ms[k] becomes left-isometric
    for k in range(n - 1):
        dl, d, dr = ms[k].shape
        q, r = np.linalg.qr(ms[k].reshape(dl * d, dr))
        ms[k] = q.reshape(dl, d, -1)
        ms[k + 1] = np.tensordot(r, ms[k + 1], axes=(1, 0))
    nrm = np.linalg.norm(ms[-1])
    if nrm < 1e-300:
        raise ValueError("MPS contracts to the zero vector")
    ms[-1] = ms[-1] / nrm

    # right sweep: SVD at each bond, collect Λ and right-isometric B tensors
    lambdas: list[Spectrum | None] = [None] * (n - 1)
    bs: list[np.ndarray | None] = [None] * n
    m = ms[-1]
    for k in range(n - 1, 0, -1):
        dl, d, dr = m.shape
        u, s, vh = svd_safe(m.reshape(dl, d * dr))
        keep = s > ZERO_FLOOR
        u, s, vh = u[:, keep], s[keep], vh[keep]
        s = s / np.linalg.norm(s)   # exact Schmidt spectrum of the normalized state
        lambdas[k - 1] = Spectrum.from_singular_values(s)
        bs[k] = vh.reshape(-1, d, dr)
        m = np.tensordot(ms[k - 1], u * s[None, :], axes=(2, 0))
    bs[0] = m / np.linalg.norm(m)

    gammas = []
    for k in range(n):
        b = bs[k]
        if k < n - 1:
            b = b * pinv_diag(lambdas[k].values)[None, None, :]
        gammas.append(b)
    return GammaLambdaMPS(gammas, [s for s in lambdas])


# ---------------------------------------------------------------------------
# contraction
# ---------------------------------------------------------------------------

def to_statevector(mps: GammaLambdaMPS) -> np.ndarray:
    """Contract the chain into a dense vector (first site = most significant bit)."""
    if mps.n > DENSE_SITE_CAP:
        raise ValueError(f"n = {mps.n} exceeds the dense conversion cap {DENSE_SITE_CAP}")
    vec = mps.left_tensor(0).reshape(2, -1)             # (2^1, D_1)
    for k in range(1, mps.n):
        a = mps.left_tensor(k)                          # (D_{k-1}, 2, D_k)
        vec = np.tensordot(vec, a, axes=(1, 0))         # (2^k, 2, D_k)
        vec = vec.reshape(-1, a.shape[2])
    return vec.reshape(-1)


def overlap(a: GammaLambdaMPS, b: GammaLambdaMPS) -> complex:
    """<a|b> by transfer-matrix contraction, O(n D^3)."""
    if a.n != b.n:
        raise ValueError(f"site count mismatch: {a.n} vs {b.n}")
    env = np.ones((1, 1), dtype=complex)                # (D_a, D_b)
    for k in range(a.n):
        ta = a.left_tensor(k)
        tb = b.left_tensor(k)
        # env' = sum_s ta^s† env tb^s
        tmp = np.tensordot(env, tb, axes=(1, 0))        # (Da, 2, Db')
        env = np.tensordot(ta.conj(), tmp, axes=([0, 1], [0, 1]))
    return complex(env[0, 0])


def expectation_product_operator(mps: GammaLambdaMPS, ops: dict[int, np.ndarray]) -> complex:
    """<psi| prod_k O_k |psi> for single-site operators O_k (identity elsewhere)."""
    env = np.ones((1, 1), dtype=complex)
    for k in range(mps.n):
        t = mps.left_tensor(k)
        tk = t
        if k in ops:
            tk = np.einsum("st,atb->asb", np.asarray(ops[k], dtype=complex), t)
        tmp = np.tensordot(env, tk, axes=(1, 0))
        env = np.tensordot(t.conj(), tmp, axes=([0, 1], [0, 1]))
    return complex(env[0, 0])


def schmidt_spectrum(mps: GammaLambdaMPS, bond: int) -> Spectrum:
    """Schmidt spectrum at ``bond`` (between sites bond and bond+1)."""
    if not 0 <= bond <= mps.n - 2:
        raise ValueError(f"bond {bond} out of range for n = {mps.n}")
    return mps.lambdas[bond]


# ---------------------------------------------------------------------------
# truncation
# ---------------------------------------------------------------------------

def truncation_rank(p_desc: np.ndarray, max_bond: int | None, cutoff: float) -> int:
    """Number of values to keep from descending squared weights.

    Keeps at most ``max_bond`` values and additionally drops the longest
    trailing block whose cumulative weight is at most ``cutoff``.  Always
    keeps at least one value.
    """
    r = len(p_desc)
    if max_bond is not None:
        r = min(r, max(1, int(max_bond)))
    if cutoff > 0.0:
        # suffix[j] = sum of weights from index j on
        suffix = np.cumsum(p_desc[::-1])[::-1]
        droppable = np.nonzero(suffix <= cutoff)[0]
        if droppable.size:
            r = min(r, max(1, int(droppable[0])))
    return r


def truncate(mps: GammaLambdaMPS, max_bond: int | None, cutoff: float = 0.0
             ) -> tuple[GammaLambdaMPS, np.ndarray]:
    """Project onto at most ``max_bond`` Schmidt values per bond.

    Bonds are truncated in site order, each against the current spectrum;
    the discarded squared weight per bond (before renormalization) is
    returned alongside.  Afterwards the chain is re-gauged so the output is
    exactly canonical again.  With ``max_bond=1`` this realizes the closest-
    product-state map.
    """
    if max_bond is not None and max_bond < 1:
        raise ValueError("max_bond must be >= 1")
    if not 0.0 <= cutoff < 1.0:
        raise ValueError("cutoff must lie in [0, 1)")
    gammas = [g for g in mps.gammas]
    lambdas = [s for s in mps.lambdas]
    tail = np.zeros(mps.n - 1)
    changed = False
    for k in range(mps.n - 1):
        lam = lambdas[k].values
        p = lam**2
        r = truncation_rank(p, max_bond, cutoff)
        if r == len(lam):
            continue
        changed = True
        tail[k] = float(np.sum(p[r:]))
        kept = lam[:r] / np.linalg.norm(lam[:r])
        lambdas[k] = Spectrum(kept)
        gammas[k] = gammas[k][:, :, :r]
        gammas[k + 1] = gammas[k + 1][:r, :, :]
    if not changed:
        return mps, tail
    # restore exact canonical form of the truncated state
    plain = [gammas[0] * lambdas[0].values[None, None, :]]
    for k in range(1, mps.n - 1):
        plain.append(gammas[k] * lambdas[k].values[None, None, :])
    plain.append(gammas[-1])
    return vidalize(plain), tail


def plain_tensors(mps: GammaLambdaMPS) -> list[np.ndarray]:
    """Right-canonical plain tensors B_k whose product reproduces the state."""
    return [mps.right_tensor(k) for k in range(mps.n)]


# ---------------------------------------------------------------------------
# structural combinators (used by the state factory)
# ---------------------------------------------------------------------------

def add_tensors(a: list[np.ndarray], b: list[np.ndarray],
                ca: complex = 1.0, cb: complex = 1.0) -> list[np.ndarray]:
    """Plain tensors of ca*|a> + cb*|b> via bond-space direct sums."""
    if len(a) != len(b):
        raise ValueError("site count mismatch")
    n = len(a)
    out = []
    for k in range(n):
        ta = np.asarray(a[k], dtype=complex)
        tb = np.asarray(b[k], dtype=complex)
        if k == 0:
            t = np.concatenate([ca * ta, cb * tb], axis=2)
        elif k == n - 1:
            t = np.concatenate([ta, tb], axis=0)
        else:
            dl = ta.shape[0] + tb.shape[0]
            dr = ta.shape[2] + tb.shape[2]
            t = np.zeros((dl, 2, dr), dtype=complex)
            t[: ta.shape[0], :, : ta.shape[2]] = ta
            t[ta.shape[0]:, :, ta.shape[2]:] = tb
        out.append(t)
    return out


def interleave_tensors(a: list[np.ndarray], b: list[np.ndarray]) -> list[np.ndarray]:
    """Plain tensors of |a> ⊗ |b> with sites interleaved a1 b1 a2 b2 ...

    Both inputs must have the same length m; the result lives on 2m sites.
    Bond spaces are the tensor products of the factors' bond spaces.
    """
    if len(a) != len(b):
        raise ValueError("interleaving needs equally long chains")
    out = []
    for k in range(len(a)):
        ta = np.asarray(a[k], dtype=complex)    # (Da, 2, Da')
        tb = np.asarray(b[k], dtype=complex)    # (Db, 2, Db')
        da, _, dap = ta.shape
        db, _, dbp = tb.shape
        # site a_k acts on the A factor, carrying B's previous bond along
        t1 = np.einsum("asb,cd->acsbd", ta, np.eye(db)).reshape(da * db, 2, dap * db)
        # site b_k acts on the B factor, carrying A's new bond along
        t2 = np.einsum("ab,csd->acsbd", np.eye(dap), tb).reshape(dap * db, 2, dap * dbp)
        out.extend([t1, t2])
    return out


def concatenate_tensors(a: list[np.ndarray], b: list[np.ndarray]) -> list[np.ndarray]:
    """Plain tensors of |a> ⊗ |b> with all a-sites before all b-sites."""
    return [np.asarray(t, dtype=complex) for t in a] + [np.asarray(t, dtype=complex) for t in b]


# ---------------------------------------------------------------------------
# file format
# ---------------------------------------------------------------------------

def mps_to_dict(mps: GammaLambdaMPS) -> dict:
    """JSON-ready dict in the documented MPS schema (1-based site data)."""
    return {
        "n": mps.n,
        "d": 2,
        "gammas": [np.stack([g.real, g.imag], axis=-1).tolist() for g in mps.gammas],
        "lambdas": [s.values.tolist() for s in mps.lambdas],
    }


def mps_from_dict(data: dict) -> GammaLambdaMPS:
    n = int(data["n"])
    if int(data.get("d", 2)) != 2:
        raise ValueError("only local dimension d = 2 is supported")
    if len(data["gammas"]) != n or len(data["lambdas"]) != n - 1:
        raise InvariantViolation("site/bond counts inconsistent with n")
    gammas = []
    for raw in data["gammas"]:
        arr = np.asarray(raw, dtype=float)          # (Dl, 2, Dr, 2)
        if arr.ndim != 4 or arr.shape[1] != 2 or arr.shape[3] != 2:
            raise InvariantViolation("gamma tensor with unexpected shape in file")
        gammas.append(arr[..., 0] + 1j * arr[..., 1])
    lambdas = [Spectrum.from_singular_values(np.asarray(v, dtype=float))
               for v in data["lambdas"]]
    return GammaLambdaMPS(gammas, lambdas)


def save_mps(mps: GammaLambdaMPS, path: str) -> None:
    with open(path, "w") as fh:
        json.dump(mps_to_dict(mps), fh)
        fh.write("\n")


def load_mps(path: str) -> GammaLambdaMPS:
    with open(path) as fh:
        return mps_from_dict(json.load(fh))
