"""Benchmark target states: analytic MPS, ED ground states, encoded Bell pairs.

Everything here produces a canonical :class:`GammaLambdaMPS` at desk scale.
Ground states come from exact diagonalization of dense/sparse Hamiltonians
(qubit counts <= 14); larger analytic families (GHZ, cluster, AKLT) are built
directly as tensor networks and never go through a dense vector.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .gates import PAULIS, TwoQubitGateParams, apply_gate
from .linalg import svd_safe
from .mps import (GammaLambdaMPS, Spectrum, add_tensors, canonicalize,
                  concatenate_tensors, expectation_product_operator,
                  interleave_tensors, plain_tensors, product_mps,
                  to_statevector, vidalize)

ED_QUBIT_CAP = 14


# ---------------------------------------------------------------------------
# analytic families
# ---------------------------------------------------------------------------

def ghz(n: int) -> GammaLambdaMPS:
    """(|0...0> + |1...1>)/sqrt(2) as an exact bond-dimension-2 MPS."""
    if not 2 <= n <= 64:
        raise ValueError("ghz supports 2 <= n <= 64")
    s2 = np.sqrt(2.0)
    first = np.zeros((1, 2, 2), dtype=complex)
    first[0, 0, 0] = 1.0
    first[0, 1, 1] = 1.0
    mid = np.zeros((2, 2, 2), dtype=complex)
    mid[0, 0, 0] = s2          # Γ = Λ^{-1} on the left leg: 1/(1/√2) = √2
    mid[1, 1, 1] = s2
    last = np.zeros((2, 2, 1), dtype=complex)
    last[0, 0, 0] = 1.0
    last[1, 1, 0] = 1.0
    gammas = [first] + [mid.copy() for _ in range(n - 2)] + [last]
    lambdas = [Spectrum(np.array([1.0, 1.0]) / s2) for _ in range(n - 1)]
    return GammaLambdaMPS(gammas, lambdas)


# CZ = diag(1,1,1,-1) up to a global phase: ZZ coupling π/4 with -π/4 Z on both qubits
CZ_PARAMS = TwoQubitGateParams(np.array([0.0, 0.0, np.pi / 4,
                                         0.0, 0.0, -np.pi / 4,
                                         0.0, 0.0, -np.pi / 4]))


def cluster(n: int) -> GammaLambdaMPS:
    """1D cluster state: CZ on every neighboring pair of |+>^n.

    Stabilized by Z_{i-1} X_i Z_{i+1} (with the boundary terms X_1 Z_2 and
    Z_{n-1} X_n); bond dimension 2 exactly.
    """
    if not 3 <= n <= 64:
        raise ValueError("cluster supports 3 <= n <= 64")
    plus = np.array([1.0, 1.0]) / np.sqrt(2.0)
    state = product_mps([plus] * n)
    for i in range(n - 1):
        state, _, _ = apply_gate(state, i, CZ_PARAMS, max_bond=None, cutoff=0.0)
    return state


def _triplet_projector() -> np.ndarray:
    """Projector onto the two-qubit triplet subspace (4x4)."""
    singlet = np.zeros(4, dtype=complex)
    singlet[1] = 1.0 / np.sqrt(2.0)
    singlet[2] = -1.0 / np.sqrt(2.0)
    return np.eye(4, dtype=complex) - np.outer(singlet, singlet.conj())


# singlet written as a 2x2 matrix: |ψ-> = sum_ab EPS[a,b] |ab>
_EPS = np.array([[0.0, 1.0], [-1.0, 0.0]]) / np.sqrt(2.0)

# open-chain edge modes: the two unpaired valence qubits are pinned to
# |0> (left) and |1> (right), an S_z-balanced choice
AKLT_EDGES = (0, 1)


def aklt(n_spin1: int) -> GammaLambdaMPS:
    """Qubit-encoded AKLT chain on ``2 * n_spin1`` qubits.

    Each spin-1 site lives in the triplet subspace of two qubits; singlets
    connect the second qubit of one site to the first qubit of the next, and
    the triplet projector acts within each site pair.  Open chain with the
    edge modes pinned per ``AKLT_EDGES``; the state is normalized.
    """
    if not 2 <= n_spin1 <= 16:
        raise ValueError("aklt supports 2 <= n_spin1 <= 16 spin-1 sites")
    proj = _triplet_projector().reshape(4, 2, 2)    # (phys pair, q_left, q_right)
    e1, e2 = AKLT_EDGES

    site_tensors = []
    for j in range(n_spin1):
        if j == 0:
            t = proj[:, e1, :][:, None, :]           # (4, 1, α)
        else:
            t = proj                                  # (4, β_prev, α)
        if j < n_spin1 - 1:
            t = np.tensordot(t, _EPS, axes=(2, 0))    # absorb the singlet half
        else:
            t = t[:, :, e2:e2 + 1]                    # pin the right edge mode
        site_tensors.append(t)

    qubit_tensors: list[np.ndarray] = []
    for t in site_tensors:
        four, dl, dr = t.shape
        assert four == 4
        blob = t.reshape(2, 2, dl, dr).transpose(2, 0, 1, 3)   # (dl, s1, s2, dr)
        u, s, vh = svd_safe(blob.reshape(dl * 2, 2 * dr))
        keep = s > 1e-14
        u, s, vh = u[:, keep], s[keep], vh[keep]
        qubit_tensors.append(u.reshape(dl, 2, -1))
        qubit_tensors.append((s[:, None] * vh).reshape(-1, 2, dr))
    return vidalize(qubit_tensors)


# ---------------------------------------------------------------------------
# stabilizer codes and logical Bell pairs
# ---------------------------------------------------------------------------

@dataclass
class StabilizerCode:
    """An [n, 1, d] code given by its stabilizer rows as Pauli strings."""

    name: str
    n: int
    stabilizers: list[str]
    logical_x: str
    logical_z: str

    def __post_init__(self):
        for row in self.stabilizers + [self.logical_x, self.logical_z]:
            if len(row) != self.n or any(c not in "IXYZ" for c in row):
                raise ValueError(f"bad Pauli string {row!r} for n = {self.n}")


CODE_5_1_3 = StabilizerCode(
    name="5_1_3",
    n=5,
    stabilizers=["IXZZX", "XZZXI", "ZZXIX", "ZXIXZ"],
    logical_x="XXXXX",
    logical_z="ZZZZZ",
)

CODE_11_1_5 = StabilizerCode(
    name="11_1_5",
    n=11,
    stabilizers=[
        "ZZZZZZIIIII",
        "XXXXXXIIIII",
        "IIIZXYYYYXZ",
        "IIIXYZZZZYX",
        "ZYXIIIZYXII",
        "XZYIIIXZYII",
        "IIIZYXXYZII",
        "IIIXZYZXYII",
        "ZXYIIIZZZXY",
        "YZXIIIYYYZX",
    ],
    logical_x="XXXXXXXXXXX",
    logical_z="ZZZZZZZZZZZ",
)

CODES = {CODE_5_1_3.name: CODE_5_1_3, CODE_11_1_5.name: CODE_11_1_5}


def pauli_string_matrix(string: str) -> np.ndarray:
    """Dense matrix of a Pauli string (first character = most significant qubit)."""
    out = np.array([[1.0 + 0j]])
    for c in string:
        out = np.kron(out, PAULIS[c])
    return out


def codewords(code: StabilizerCode) -> tuple[np.ndarray, np.ndarray]:
    """Dense |0_L> and |1_L>: project a reference state onto the code space.

    |0_L> is the +1 eigenvector of logical Z within the stabilizer subspace;
    |1_L> = X_L |0_L>.  Raises if the projector annihilates the reference
    (wrong stabilizer signs would do that).
    """
    dim = 2**code.n
    vec = np.zeros(dim, dtype=complex)
    vec[0] = 1.0
    for row in code.stabilizers + [code.logical_z]:
        vec = 0.5 * (vec + pauli_string_matrix(row) @ vec)
        if np.linalg.norm(vec) < 1e-12:
            raise ValueError(f"stabilizer projection annihilated the reference ({row})")
    zero_l = vec / np.linalg.norm(vec)
    one_l = pauli_string_matrix(code.logical_x) @ zero_l
    return zero_l, one_l


def _embedded_positions(code: StabilizerCode, layout: str) -> tuple[list[int], list[int]]:
    """Qubit positions of block A and block B in the chosen layout."""
    n = code.n
    if layout == "separated":
        return list(range(n)), list(range(n, 2 * n))
    if layout == "interlaced":
        return list(range(0, 2 * n, 2)), list(range(1, 2 * n, 2))
    raise ValueError("layout must be 'separated' or 'interlaced'")


def embedded_stabilizer_ops(code: StabilizerCode, layout: str) -> list[dict[int, np.ndarray]]:
    """Both blocks' stabilizers as site->operator maps on the 2n-qubit chain."""
    pos_a, pos_b = _embedded_positions(code, layout)
    ops = []
    for positions in (pos_a, pos_b):
        for row in code.stabilizers:
            ops.append({positions[k]: PAULIS[c] for k, c in enumerate(row) if c != "I"})
    return ops


def logical_bell(code: StabilizerCode, layout: str = "separated") -> GammaLambdaMPS:
    """The encoded two-block singlet (|01>_L - |10>_L)/sqrt(2).

    ``layout`` places the two code blocks either one after the other
    ("separated": A1..An B1..Bn) or alternating ("interlaced":
    A1 B1 A2 B2 ...).  Built from the dense single-block codewords, combined
    as MPS tensors, so only 2**n (not 2**2n) amplitudes are ever stored.
    """
    zero_l, one_l = codewords(code)
    t0 = plain_tensors(canonicalize(zero_l))
    t1 = plain_tensors(canonicalize(one_l))
    combine = concatenate_tensors if layout == "separated" else interleave_tensors
    if layout not in ("separated", "interlaced"):
        raise ValueError("layout must be 'separated' or 'interlaced'")
    term01 = combine(t0, t1)
    term10 = combine(t1, t0)
    c = 1.0 / np.sqrt(2.0)
    return vidalize(add_tensors(term01, term10, c, -c))


def stabilizer_expectations(code: StabilizerCode, layout: str,
                            mps: GammaLambdaMPS) -> np.ndarray:
    """<S_i> for all 2k embedded stabilizers (should all be +1)."""
    vals = [expectation_product_operator(mps, ops)
            for ops in embedded_stabilizer_ops(code, layout)]
    return np.array([v.real for v in vals])


# ---------------------------------------------------------------------------
# exact-diagonalization ground states
# ---------------------------------------------------------------------------

@dataclass
class HamiltonianSpec:
    """A supported spin/fermion family with its couplings.

    Families: ``ising`` (couplings hx, hz), ``xy`` (hx), ``xxz`` (jz, hx, hz),
    ``fermi_hubbard`` (t, u, n_up, n_down; ``n_sites`` electronic sites mapped
    to 2*n_sites qubits, spin-up on the left qubit of each pair).
    """

    family: str
    n_sites: int
    couplings: dict = field(default_factory=dict)

    FAMILIES = ("ising", "xy", "xxz", "fermi_hubbard")

    def __post_init__(self):
        if self.family not in self.FAMILIES:
            raise ValueError(f"unknown family {self.family!r}")
        if self.n_qubits > ED_QUBIT_CAP:
            raise ValueError(f"{self.n_qubits} qubits exceeds the ED cap {ED_QUBIT_CAP}")
        if self.n_sites < 2:
            raise ValueError("need at least 2 sites")

    @property
    def n_qubits(self) -> int:
        return 2 * self.n_sites if self.family == "fermi_hubbard" else self.n_sites


def _sparse_pauli(n: int, ops: dict[int, np.ndarray]) -> sp.csr_matrix:
    mat = sp.identity(1, dtype=complex, format="csr")
    for k in range(n):
        local = sp.csr_matrix(ops.get(k, np.eye(2, dtype=complex)))
        mat = sp.kron(mat, local, format="csr")
    return mat


def hamiltonian_matrix(spec: HamiltonianSpec) -> sp.csr_matrix:
    """Sparse Hamiltonian in the computational basis (qubit 0 most significant)."""
    n = spec.n_qubits
    c = spec.couplings
    x, y, z = PAULIS["X"], PAULIS["Y"], PAULIS["Z"]
    terms: list[sp.csr_matrix] = []

    if spec.family == "ising":
        hx, hz = c.get("hx", 0.0), c.get("hz", 0.0)
        for i in range(n - 1):
            terms.append(-0.5 * _sparse_pauli(n, {i: z, i + 1: z}))
        for i in range(n):
            if hx:
                terms.append(hx * _sparse_pauli(n, {i: x}))
            if hz:
                terms.append(hz * _sparse_pauli(n, {i: z}))
    elif spec.family == "xy":
        hx = c.get("hx", 0.0)
        for i in range(n - 1):
            terms.append(-0.5 * _sparse_pauli(n, {i: x, i + 1: x}))
            terms.append(-0.5 * _sparse_pauli(n, {i: y, i + 1: y}))
        for i in range(n):
            if hx:
                terms.append(hx * _sparse_pauli(n, {i: x}))
    elif spec.family == "xxz":
        jz = c.get("jz", 0.0)
        hx, hz = c.get("hx", 0.0), c.get("hz", 0.0)
        for i in range(n - 1):
            terms.append(-0.5 * _sparse_pauli(n, {i: x, i + 1: x}))
            terms.append(-0.5 * _sparse_pauli(n, {i: y, i + 1: y}))
            if jz:
                terms.append(-0.5 * jz * _sparse_pauli(n, {i: z, i + 1: z}))
        for i in range(n):
            if hx:
                terms.append(-hx * _sparse_pauli(n, {i: x}))
            if hz:
                terms.append(-hz * _sparse_pauli(n, {i: z}))
    elif spec.family == "fermi_hubbard":
        # qubit order (1up, 1dn, 2up, 2dn, ...); Jordan-Wigner in that order.
        # Same-spin hopping skips one qubit, leaving a single Z in the string.
        t = c.get("t", 1.0)
        u = c.get("u", 0.0)
        for i in range(spec.n_sites - 1):
            for off in (0, 1):                      # 0 = up modes, 1 = down
                a = 2 * i + off
                b = a + 2
                terms.append(-0.5 * t * _sparse_pauli(n, {a: x, a + 1: z, b: x}))
                terms.append(-0.5 * t * _sparse_pauli(n, {a: y, a + 1: z, b: y}))
        if u:
            for i in range(spec.n_sites):
                a, b = 2 * i, 2 * i + 1
                occ_a = 0.5 * (np.eye(2) - z)
                occ_b = 0.5 * (np.eye(2) - z)
                terms.append(u * _sparse_pauli(n, {a: occ_a, b: occ_b}))

    dim = 2**n
    h = sp.csr_matrix((dim, dim), dtype=complex)
    for term in terms:
        h = h + term
    return h


def _sector_indices(n_sites: int, n_up: int, n_down: int) -> np.ndarray:
    """Basis indices of the fixed (n_up, n_down) occupation sector."""
    n = 2 * n_sites
    idx = np.arange(2**n)
    bits = (idx[:, None] >> np.arange(n - 1, -1, -1)[None, :]) & 1
    ups = bits[:, 0::2].sum(axis=1)
    downs = bits[:, 1::2].sum(axis=1)
    sel = np.nonzero((ups == n_up) & (downs == n_down))[0]
    if sel.size == 0:
        raise ValueError(f"empty particle sector (n_up={n_up}, n_down={n_down})")
    return sel


@dataclass
class EdResult:
    """Ground-state extraction result; ``degenerate`` flags a closed gap."""

    mps: GammaLambdaMPS
    energy: float
    degenerate: bool
    gap: float


DEGENERACY_TOL = 1e-10


def ed_ground_state(spec: HamiltonianSpec) -> EdResult:
    """Lowest eigenvector of the family Hamiltonian as a canonical MPS.

    Fermi-Hubbard diagonalizes within the requested (n_up, n_down) sector.
    Degenerate ground spaces are resolved deterministically (smallest-index
    eigenvector of the symmetric solver) and flagged.
    """
    h = hamiltonian_matrix(spec)
    n = spec.n_qubits
    sector = None
    if spec.family == "fermi_hubbard":
        n_up = int(spec.couplings.get("n_up", spec.n_sites // 2))
        n_down = int(spec.couplings.get("n_down", spec.n_sites // 2))
        sector = _sector_indices(spec.n_sites, n_up, n_down)
        h = h[sector, :][:, sector]

    dim = h.shape[0]
    if dim <= 2048:
        evals, evecs = np.linalg.eigh(h.toarray())
        energy = float(evals[0])
        second = float(evals[1]) if dim > 1 else np.inf
        vec = evecs[:, 0]
    else:
        v0 = np.full(dim, 1.0 / np.sqrt(dim))
        evals, evecs = spla.eigsh(h, k=2, which="SA", v0=v0)
        order = np.argsort(evals)
        energy, second = float(evals[order[0]]), float(evals[order[1]])
        vec = evecs[:, order[0]].astype(complex)

    if sector is not None:
        full = np.zeros(2**n, dtype=complex)
        full[sector] = vec
        vec = full
    vec = vec / np.linalg.norm(vec)
    gap = second - energy
    return EdResult(mps=canonicalize(vec), energy=energy,
                    degenerate=bool(gap < DEGENERACY_TOL), gap=float(gap))


def energy_expectation(spec: HamiltonianSpec, mps: GammaLambdaMPS) -> float:
    """<ψ|H|ψ> via the dense vector (desk-scale check)."""
    vec = to_statevector(mps)
    h = hamiltonian_matrix(spec)
    return float(np.real(np.vdot(vec, h @ vec)))
