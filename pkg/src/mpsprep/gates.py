"""Two-qubit disentangler gates, circuits, and their action on an MPS.

The gate family is the general two-qubit unitary (up to trailing single-qubit
rotations, which cannot change entanglement and are therefore omitted):

    G(θ) = exp(-i(θ1 XX + θ2 YY + θ3 ZZ))
           · [ exp(-i(θ7 X + θ8 Y + θ9 Z)) ⊗ exp(-i(θ4 X + θ5 Y + θ6 Z)) ]

acting on the (left, right) qubit pair, with θ4..θ6 on the right qubit and
θ7..θ9 on the left one.  The two-body factor is diagonal in the Bell basis,
which gives a cheap closed form; tests check it against a dense matrix
exponential.

Applying a gate to sites (i, i+1) of a Schmidt-gauge MPS contracts
Λ_l Γ_i Λ_c Γ_{i+1} Λ_r into a single two-site block, applies the 4x4 matrix,
and re-splits with an SVD; the new center spectrum is read off the singular
values and the new Γ tensors are obtained by dividing the isometries by the
(untouched) outer spectra.  Only Γ_i, Γ_{i+1} and Λ_i change.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .linalg import dag, pinv_diag, svd_safe
from .mps import GammaLambdaMPS, Spectrum, truncation_rank

PAULI_I = np.eye(2, dtype=complex)
PAULI_X = np.array([[0, 1], [1, 0]], dtype=complex)
PAULI_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
PAULI_Z = np.array([[1, 0], [0, -1]], dtype=complex)
PAULIS = {"I": PAULI_I, "X": PAULI_X, "Y": PAULI_Y, "Z": PAULI_Z}

# Bell basis (Φ+, Φ-, Ψ+, Ψ-) as columns; diagonalizes XX, YY and ZZ jointly.
_BELL = np.array([
    [1, 1, 0, 0],
    [0, 0, 1, 1],
    [0, 0, 1, -1],
    [1, -1, 0, 0],
], dtype=float) / np.sqrt(2.0)
# eigenvalues of (XX, YY, ZZ) on the Bell columns above
_BELL_EIG = np.array([
    [1, -1, 1],     # Φ+
    [-1, 1, 1],     # Φ-
    [1, 1, -1],     # Ψ+
    [-1, -1, -1],   # Ψ-
], dtype=float)


@dataclass
class TwoQubitGateParams:
    """The 9 angles of one disentangling gate (radians).

    Order: (θ1, θ2, θ3) XX/YY/ZZ couplings, (θ4, θ5, θ6) X/Y/Z on the right
    qubit, (θ7, θ8, θ9) X/Y/Z on the left qubit.
    """

    theta: np.ndarray

    def __post_init__(self):
        self.theta = np.asarray(self.theta, dtype=float).reshape(-1)
        if self.theta.shape != (9,):
            raise ValueError("a gate needs exactly 9 angles")
        if not np.all(np.isfinite(self.theta)):
            raise ValueError("gate angles must be finite")

    @classmethod
    def identity(cls) -> "TwoQubitGateParams":
        return cls(np.zeros(9))

    def is_identity(self, tol: float = 0.0) -> bool:
        return bool(np.all(np.abs(self.theta) <= tol))


def single_qubit_rotation(ax: float, ay: float, az: float) -> np.ndarray:
    """exp(-i (ax X + ay Y + az Z)) in closed form."""
    r = np.sqrt(ax * ax + ay * ay + az * az)
    # sinc handles r -> 0 smoothly; np.sinc(x) = sin(pi x)/(pi x)
    s = np.sinc(r / np.pi)
    return np.cos(r) * PAULI_I - 1j * s * (ax * PAULI_X + ay * PAULI_Y + az * PAULI_Z)


def coupling_exponential(cxx: float, cyy: float, czz: float) -> np.ndarray:
    """exp(-i (cxx XX + cyy YY + czz ZZ)) via the Bell-basis diagonalization."""
    phases = np.exp(-1j * (_BELL_EIG @ np.array([cxx, cyy, czz])))
    return (_BELL * phases[None, :]) @ _BELL.T


def gate_matrix(params: TwoQubitGateParams) -> np.ndarray:
    """Dense 4x4 unitary of the gate, basis |s_left s_right>."""
    t = params.theta
    singles = np.kron(single_qubit_rotation(t[6], t[7], t[8]),
                      single_qubit_rotation(t[3], t[4], t[5]))
    return coupling_exponential(t[0], t[1], t[2]) @ singles


# ---------------------------------------------------------------------------
# circuits
# ---------------------------------------------------------------------------

@dataclass
class SingleQubitReadoff:
    """Angles of the final single-qubit layer for one site.

    The product state left after disentangling is, per site,
    ``cos(phi_x)|0> + e^{i phi_z} sin(phi_x)|1>`` up to a global phase;
    preparing it from |0> takes one X-type and one Z-type rotation
    (``Rz(phi_z + pi/2) Rx(2 phi_x)`` in the standard gate set).
    """

    phi_x: float
    phi_z: float

    def state(self) -> np.ndarray:
        return np.array([np.cos(self.phi_x),
                         np.exp(1j * self.phi_z) * np.sin(self.phi_x)])

    def prepare_matrix(self) -> np.ndarray:
        """Unitary sending |0> to the site state (|1> to the orthogonal one)."""
        c, s = np.cos(self.phi_x), np.sin(self.phi_x)
        ph = np.exp(1j * self.phi_z)
        return np.array([[c, -s * ph.conjugate()], [s * ph, c]], dtype=complex)


@dataclass
class CircuitLayer:
    """One parity sublayer of the brickwall: disjoint gates on (site, site+1).

    ``parity`` is "odd" or "even" referring to the 1-based left-site index of
    the bricks, i.e. "odd" gates sit at 0-based sites 0, 2, 4, ...
    """

    parity: str
    gates: list[tuple[int, TwoQubitGateParams]] = field(default_factory=list)

    def __post_init__(self):
        if self.parity not in ("odd", "even"):
            raise ValueError("parity must be 'odd' or 'even'")
        sites = [s for s, _ in self.gates]
        offset = 0 if self.parity == "odd" else 1
        if any(s % 2 != offset for s in sites):
            raise ValueError("gate site does not match layer parity")
        if len(set(sites)) != len(sites):
            raise ValueError("overlapping gates within one layer")


@dataclass
class Circuit:
    """Brickwall gate layers plus the final single-qubit readoff layer.

    ``direction`` records the order the layers are stored in:
    "disentangle" (state -> |0...0>, the order the optimizer emits) or
    "prepare".  Reversal never rewrites parameters: the preparation action is
    the exact adjoint, obtained by daggering each gate and walking the layers
    backwards.
    """

    n: int
    layers: list[CircuitLayer] = field(default_factory=list)
    readoff: list[SingleQubitReadoff] | None = None
    direction: str = "disentangle"

    def __post_init__(self):
        if self.direction not in ("disentangle", "prepare"):
            raise ValueError("direction must be 'disentangle' or 'prepare'")
        for layer in self.layers:
            for s, _ in layer.gates:
                if not 0 <= s <= self.n - 2:
                    raise ValueError(f"gate site {s} out of range for n = {self.n}")
        if self.readoff is not None and len(self.readoff) != self.n:
            raise ValueError("readoff layer must cover every site")

    @property
    def num_layers(self) -> int:
        return len(self.layers)

    def gate_count(self) -> int:
        return sum(len(layer.gates) for layer in self.layers)


def layer_sites(parity: str, n: int) -> range:
    """0-based left sites of the bricks in a parity sublayer."""
    return range(0 if parity == "odd" else 1, n - 1, 2)


def parity_of_layer(layer_index: int) -> str:
    """Brickwall parity schedule: layers 1, 3, 5, ... odd; 2, 4, ... even."""
    return "odd" if layer_index % 2 == 1 else "even"


# ---------------------------------------------------------------------------
# MPS updates
# ---------------------------------------------------------------------------

def _outer_spectra(mps: GammaLambdaMPS, i: int):
    lam_l = mps.lambdas[i - 1].values if i > 0 else np.ones(1)
    lam_c = mps.lambdas[i].values
    lam_r = mps.lambdas[i + 1].values if i + 1 < mps.n - 1 else np.ones(1)
    return lam_l, lam_c, lam_r


def two_site_block(mps: GammaLambdaMPS, i: int) -> np.ndarray:
    """Λ_l Γ_i Λ_c Γ_{i+1} Λ_r as a (D_l, 2, 2, D_r) tensor (unit norm)."""
    lam_l, lam_c, lam_r = _outer_spectra(mps, i)
    left = lam_l[:, None, None] * mps.gammas[i] * lam_c[None, None, :]
    right = mps.gammas[i + 1] * lam_r[None, None, :]
    return np.tensordot(left, right, axes=(2, 0))


def apply_gate_block(block: np.ndarray, gate: np.ndarray) -> np.ndarray:
    """Apply a 4x4 gate to the physical legs of a (D_l, 2, 2, D_r) block."""
    dl, _, _, dr = block.shape
    folded = block.reshape(dl, 4, dr)
    return np.einsum("st,atb->asb", gate, folded).reshape(dl, 2, 2, dr)


def apply_gate(mps: GammaLambdaMPS, i: int, gate, max_bond: int | None = None,
               cutoff: float = 0.0) -> tuple[GammaLambdaMPS, Spectrum, float]:
    """Apply a two-qubit gate to sites (i, i+1) with an SVD bond update.

    ``gate`` is either TwoQubitGateParams or an explicit 4x4 unitary.
    Returns (new_mps, new center spectrum, discarded squared weight).  All
    tensors except Γ_i, Γ_{i+1} and Λ_i are shared with the input.
    """
    if not 0 <= i <= mps.n - 2:
        raise ValueError(f"site {i} out of range for a two-qubit gate on n = {mps.n}")
    g = gate_matrix(gate) if isinstance(gate, TwoQubitGateParams) else np.asarray(gate)
    lam_l, _, lam_r = _outer_spectra(mps, i)

    block = apply_gate_block(two_site_block(mps, i), g)
    dl, _, _, dr = block.shape
    u, s, vh = svd_safe(block.reshape(dl * 2, 2 * dr))

    p = s**2
    r = truncation_rank(p[p > 0], max_bond, cutoff)
    r = max(1, min(r, int(np.sum(s > 1e-14))))
    discarded = float(np.sum(p[r:]))
    s = s[:r] / np.linalg.norm(s[:r])
    u = u[:, :r]
    vh = vh[:r, :]

    inv_l = pinv_diag(lam_l)
    inv_r = pinv_diag(lam_r)
    gamma_l = (u.reshape(dl, 2, r) * inv_l[:, None, None])
    gamma_r = (vh.reshape(r, 2, dr) * inv_r[None, None, :])

    gammas = list(mps.gammas)
    lambdas = list(mps.lambdas)
    gammas[i] = gamma_l
    gammas[i + 1] = gamma_r
    spectrum = Spectrum.from_singular_values(s)
    lambdas[i] = spectrum
    return GammaLambdaMPS(gammas, lambdas), spectrum, discarded


def apply_single_qubit(mps: GammaLambdaMPS, site: int, u2: np.ndarray) -> GammaLambdaMPS:
    """Apply a single-qubit unitary; spectra are untouched."""
    gammas = list(mps.gammas)
    gammas[site] = np.einsum("st,atb->asb", np.asarray(u2, dtype=complex), mps.gammas[site])
    return GammaLambdaMPS(gammas, list(mps.lambdas))


def readoff_single_qubit(mps: GammaLambdaMPS) -> list[SingleQubitReadoff]:
    """Read the product-state angles off a bond-dimension-1 MPS.

    Per site, Γ^0 = cos(phi_x) and Γ^1 = e^{i phi_z} sin(phi_x) up to a
    global phase.  Raises if any bond dimension exceeds 1.
    """
    if any(d != 1 for d in mps.bond_dims()):
        raise ValueError("readoff needs a product state (all bond dimensions 1)")
    out = []
    for k in range(mps.n):
        c0, c1 = mps.gammas[k][0, :, 0]
        phi_x = float(np.arctan2(abs(c1), abs(c0)))
        phi_z = float(np.angle(c1) - np.angle(c0)) if abs(c1) > 1e-300 else 0.0
        out.append(SingleQubitReadoff(phi_x=phi_x, phi_z=phi_z))
    return out


def apply_circuit(mps: GammaLambdaMPS, circuit: Circuit, max_bond: int | None = None,
                  cutoff: float = 0.0, reverse: bool = False
                  ) -> tuple[GammaLambdaMPS, list[float]]:
    """Run a circuit over the MPS, truncating after every gate.

    Layers and parameters are always stored in disentangling semantics (the
    ``direction`` field is intent metadata, so files are unambiguous).  With
    ``reverse=False`` this performs the disentangling action: gate layers as
    stored, then the readoff rotations that map the leftover product state to
    |0...0>.  With ``reverse=True`` it performs the preparation action: the
    exact adjoint, i.e. readoff first, then every gate daggered with the
    layers walked backwards.

    Returns the new MPS and the discarded weight of every gate application
    in execution order.
    """
    if circuit.n != mps.n:
        raise ValueError(f"circuit is for n = {circuit.n}, state has n = {mps.n}")
    discards: list[float] = []
    state = mps
    if not reverse:
        for layer in circuit.layers:
            for site, params in layer.gates:
                state, _, w = apply_gate(state, site, params, max_bond, cutoff)
                discards.append(w)
        if circuit.readoff is not None:
            for site, ro in enumerate(circuit.readoff):
                state = apply_single_qubit(state, site, dag(ro.prepare_matrix()))
    else:
        if circuit.readoff is not None:
            for site, ro in enumerate(circuit.readoff):
                state = apply_single_qubit(state, site, ro.prepare_matrix())
        for layer in reversed(circuit.layers):
            for site, params in reversed(layer.gates):
                state, _, w = apply_gate(state, site, dag(gate_matrix(params)),
                                         max_bond, cutoff)
                discards.append(w)
    return state, discards


# ---------------------------------------------------------------------------
# file format and export
# ---------------------------------------------------------------------------

def circuit_to_dict(circuit: Circuit) -> dict:
    """JSON schema with 1-based site indices."""
    return {
        "n": circuit.n,
        "direction": circuit.direction,
        "layers": [
            {
                "parity": layer.parity,
                "gates": [{"site": site + 1, "theta": params.theta.tolist()}
                          for site, params in layer.gates],
            }
            for layer in circuit.layers
        ],
        "readoff": None if circuit.readoff is None else [
            {"phi_x": ro.phi_x, "phi_z": ro.phi_z} for ro in circuit.readoff
        ],
    }


def circuit_from_dict(data: dict) -> Circuit:
    layers = []
    for raw in data["layers"]:
        gates = [(int(g["site"]) - 1, TwoQubitGateParams(np.asarray(g["theta"])))
                 for g in raw["gates"]]
        layers.append(CircuitLayer(parity=raw["parity"], gates=gates))
    readoff = None
    if data.get("readoff") is not None:
        readoff = [SingleQubitReadoff(phi_x=float(r["phi_x"]), phi_z=float(r["phi_z"]))
                   for r in data["readoff"]]
    return Circuit(n=int(data["n"]), layers=layers, readoff=readoff,
                   direction=data.get("direction", "disentangle"))


def save_circuit(circuit: Circuit, path: str) -> None:
    with open(path, "w") as fh:
        json.dump(circuit_to_dict(circuit), fh, indent=1)
        fh.write("\n")


def load_circuit(path: str) -> Circuit:
    with open(path) as fh:
        return circuit_from_dict(json.load(fh))


def _euler_zyz(u: np.ndarray) -> tuple[float, float, float]:
    """Angles (a, b, c) with u ~ Rz(a) Ry(b) Rz(c) up to global phase.

    Rz(φ) = exp(-i φ Z / 2), Ry(β) = exp(-i β Y / 2); then
    u00 = e^{-i(a+c)/2} cos(b/2) and u10 = e^{+i(a-c)/2} sin(b/2).
    """
    # strip the global phase via the determinant
    u = u / np.sqrt(np.linalg.det(u).astype(complex))
    b = 2.0 * np.arctan2(abs(u[1, 0]), abs(u[0, 0]))
    if abs(u[0, 0]) < 1e-12:       # b ~ pi
        a = 2.0 * np.angle(u[1, 0])
        c = 0.0
    elif abs(u[1, 0]) < 1e-12:     # b ~ 0
        a = 2.0 * np.angle(u[1, 1])
        c = 0.0
    else:
        a = np.angle(u[1, 0]) + np.angle(u[1, 1])
        c = np.angle(u[1, 1]) - np.angle(u[1, 0])
    return float(a), float(b), float(c)


def export_gate_list(circuit: Circuit, prepare: bool = True) -> str:
    """Plain-text gate list in the standard set {rxx, ryy, rzz, rx, ry, rz}.

    One instruction per line, ``name site(s) angle``, sites 1-based, applied
    top to bottom.  Conventions (documented in the README): rxx/ryy/rzz carry
    angle phi meaning exp(-i phi PP / 2); rz/ry/rx likewise exp(-i phi P / 2);
    each gate's single-qubit factor is emitted as a ZYZ Euler triple.  With
    ``prepare=True`` the emitted list maps |0...0> to the compiled state,
    otherwise it lists the disentangling action.
    """
    lines = [f"# qubits: {circuit.n}",
             f"# order: {'prepare' if prepare else 'disentangle'}",
             "# convention: rP(phi) = exp(-i phi P / 2); sites are 1-based"]

    def emit_single(site: int, u2: np.ndarray):
        a, b, c = _euler_zyz(u2)
        for name, ang in (("rz", c), ("ry", b), ("rz", a)):
            if abs(ang) > 1e-12:
                lines.append(f"{name} q{site + 1} {ang:.15g}")

    def emit_couplings(site: int, t: np.ndarray):
        for name, ang in (("rxx", 2 * t[0]), ("ryy", 2 * t[1]), ("rzz", 2 * t[2])):
            if abs(ang) > 1e-12:
                lines.append(f"{name} q{site + 1} q{site + 2} {ang:.15g}")

    def emit_gate(site: int, params: TwoQubitGateParams, daggered: bool):
        t = -params.theta if daggered else params.theta
        right = single_qubit_rotation(t[3], t[4], t[5])
        left = single_qubit_rotation(t[6], t[7], t[8])
        if daggered:
            # the adjoint reverses the factor order: couplings first
            emit_couplings(site, t)
            emit_single(site, left)
            emit_single(site + 1, right)
        else:
            emit_single(site, left)
            emit_single(site + 1, right)
            emit_couplings(site, t)

    if prepare:
        if circuit.readoff is not None:
            for site, ro in enumerate(circuit.readoff):
                emit_single(site, ro.prepare_matrix())
        for layer in reversed(circuit.layers):
            for site, params in reversed(layer.gates):
                emit_gate(site, params, daggered=True)
    else:
        for layer in circuit.layers:
            for site, params in layer.gates:
                emit_gate(site, params, daggered=False)
        if circuit.readoff is not None:
            for site, ro in enumerate(circuit.readoff):
                emit_single(site, dag(ro.prepare_matrix()))
    return "\n".join(lines) + "\n"
