import numpy as np
import pytest
import scipy.linalg

from mpsprep.driver import OptimizerOptions, optimize_gate
from mpsprep.entropy import renyi_entropy
from mpsprep.gates import (Circuit, CircuitLayer, SingleQubitReadoff,
                           TwoQubitGateParams, apply_circuit, apply_gate,
                           apply_single_qubit, circuit_from_dict, circuit_to_dict,
                           export_gate_list, gate_matrix, layer_sites, load_circuit,
                           readoff_single_qubit, save_circuit, PAULI_X, PAULI_Y,
                           PAULI_Z)
from mpsprep.mps import canonicalize, overlap, to_statevector, zero_state_mps

from conftest import (dense_apply_two_qubit, phase_aligned_distance, random_state)


def expm_gate(theta):
    """Dense matrix-exponential oracle for the 9-angle gate."""
    t = np.asarray(theta, dtype=float)
    xx = np.kron(PAULI_X, PAULI_X)
    yy = np.kron(PAULI_Y, PAULI_Y)
    zz = np.kron(PAULI_Z, PAULI_Z)
    couple = scipy.linalg.expm(-1j * (t[0] * xx + t[1] * yy + t[2] * zz))
    right = scipy.linalg.expm(-1j * (t[3] * PAULI_X + t[4] * PAULI_Y + t[5] * PAULI_Z))
    left = scipy.linalg.expm(-1j * (t[6] * PAULI_X + t[7] * PAULI_Y + t[8] * PAULI_Z))
    return couple @ np.kron(left, right)


class TestGateMatrix:
    def test_zero_angles_is_identity(self):
        np.testing.assert_allclose(gate_matrix(TwoQubitGateParams.identity()),
                                   np.eye(4), atol=1e-14)

    def test_heisenberg_coupling_against_expm(self):
        theta = np.zeros(9)
        theta[:3] = np.pi / 4
        got = gate_matrix(TwoQubitGateParams(theta))
        np.testing.assert_allclose(got, expm_gate(theta), atol=1e-12)

    @pytest.mark.parametrize("seed", range(5))
    def test_random_angles_against_expm(self, seed):
        theta = np.random.default_rng(seed).normal(size=9)
        got = gate_matrix(TwoQubitGateParams(theta))
        np.testing.assert_allclose(got, expm_gate(theta), atol=1e-12)

    @pytest.mark.parametrize("seed", range(5))
    def test_unitarity(self, seed):
        g = gate_matrix(TwoQubitGateParams(np.random.default_rng(seed).normal(size=9)))
        np.testing.assert_allclose(g @ g.conj().T, np.eye(4), atol=1e-12)

    def test_dagger_is_reversed_negated_exponentials(self):
        theta = np.random.default_rng(7).normal(size=9)
        g = gate_matrix(TwoQubitGateParams(theta))
        t = -theta
        right = scipy.linalg.expm(-1j * (t[3] * PAULI_X + t[4] * PAULI_Y + t[5] * PAULI_Z))
        left = scipy.linalg.expm(-1j * (t[6] * PAULI_X + t[7] * PAULI_Y + t[8] * PAULI_Z))
        xx = np.kron(PAULI_X, PAULI_X)
        yy = np.kron(PAULI_Y, PAULI_Y)
        zz = np.kron(PAULI_Z, PAULI_Z)
        couple = scipy.linalg.expm(-1j * (t[0] * xx + t[1] * yy + t[2] * zz))
        dagger = np.kron(left, right) @ couple          # reversed factor order
        np.testing.assert_allclose(dagger, g.conj().T, atol=1e-12)

    def test_bad_angle_count(self):
        with pytest.raises(ValueError):
            TwoQubitGateParams(np.zeros(8))


class TestApplyGate:
    def test_identity_gate_leaves_state(self, rng):
        mps = canonicalize(random_state(6, rng))
        out, spec, w = apply_gate(mps, 2, TwoQubitGateParams.identity())
        assert w == 0.0
        assert abs(abs(overlap(mps, out)) - 1) < 1e-10
        np.testing.assert_allclose(np.sort(spec.values),
                                   np.sort(mps.lambdas[2].values), atol=1e-10)

    def test_single_qubit_angles_preserve_spectrum(self, rng):
        mps = canonicalize(random_state(6, rng))
        theta = np.zeros(9)
        theta[3:] = rng.normal(size=6)
        _, spec, _ = apply_gate(mps, 2, TwoQubitGateParams(theta))
        np.testing.assert_allclose(np.sort(spec.values),
                                   np.sort(mps.lambdas[2].values), atol=1e-10)

    @pytest.mark.parametrize("site", [0, 3, 6])
    def test_matches_dense_application(self, site, rng):
        v = random_state(8, rng)
        mps = canonicalize(v)
        theta = rng.normal(size=9)
        g = gate_matrix(TwoQubitGateParams(theta))
        out, _, w = apply_gate(mps, site, TwoQubitGateParams(theta))
        assert w < 1e-14
        want = dense_apply_two_qubit(v, 8, site, g)
        assert phase_aligned_distance(to_statevector(out), want) < 1e-10

    def test_locality(self, rng):
        mps = canonicalize(random_state(8, rng))
        out, _, _ = apply_gate(mps, 3, TwoQubitGateParams(rng.normal(size=9)))
        for k in range(7):
            if k == 3:
                continue
            assert out.lambdas[k] is mps.lambdas[k]        # bit-identical
        for k in (0, 1, 2, 5, 6, 7):
            assert out.gammas[k] is mps.gammas[k]

    def test_norm_preserved_without_truncation(self, rng):
        mps = canonicalize(random_state(7, rng))
        out, _, _ = apply_gate(mps, 2, TwoQubitGateParams(rng.normal(size=9)))
        assert abs(out.norm() - 1) < 1e-10

    def test_truncated_norm_renormalized(self, rng):
        mps = canonicalize(random_state(8, rng))
        out, spec, w = apply_gate(mps, 3, TwoQubitGateParams(rng.normal(size=9)),
                                  max_bond=2)
        assert w > 0
        assert abs(np.sum(spec.squared) - 1) < 1e-12

    def test_site_out_of_range(self, rng):
        mps = canonicalize(random_state(4, rng))
        with pytest.raises(ValueError):
            apply_gate(mps, 3, TwoQubitGateParams.identity())


class TestKrausCiracCompleteness:
    def test_disentangles_random_two_qubit_states(self):
        # the 9-angle family must be able to fully disentangle any 2-qubit state
        rng = np.random.default_rng(42)
        opts = OptimizerOptions()
        worst = 0.0
        for trial in range(200):
            mps = canonicalize(random_state(2, rng))
            params = optimize_gate(mps, 0, 2.0, opts, np.random.default_rng(trial))
            _, spec, _ = apply_gate(mps, 0, params)
            worst = max(worst, renyi_entropy(spec, 2.0))
        assert worst < 1e-8, f"max residual entropy {worst}"


class TestReadoff:
    def test_zero_state(self):
        ro = readoff_single_qubit(zero_state_mps(3))
        for r in ro:
            assert r.phi_x == 0.0 and r.phi_z == 0.0

    def test_plus_state(self):
        from mpsprep.mps import product_mps
        plus = np.array([1.0, 1.0]) / np.sqrt(2)
        ro = readoff_single_qubit(product_mps([plus] * 2))
        for r in ro:
            assert abs(r.phi_x - np.pi / 4) < 1e-12
            assert abs(r.phi_z) < 1e-12
            assert phase_aligned_distance(r.state(), plus) < 1e-10

    def test_y_plus_state(self):
        from mpsprep.mps import product_mps
        yplus = np.array([1.0, 1.0j]) / np.sqrt(2)
        ro = readoff_single_qubit(product_mps([yplus, yplus]))
        for r in ro:
            assert abs(r.phi_x - np.pi / 4) < 1e-12
            assert abs(r.phi_z - np.pi / 2) < 1e-12

    def test_random_product_reconstruction(self, rng):
        from mpsprep.mps import product_mps
        states = [rng.normal(size=2) + 1j * rng.normal(size=2) for _ in range(4)]
        states = [s / np.linalg.norm(s) for s in states]
        mps = product_mps(states)
        for r, s in zip(readoff_single_qubit(mps), states):
            assert phase_aligned_distance(r.state(), s) < 1e-10
        # prepare_matrix must map |0> to the site state
        for r, s in zip(readoff_single_qubit(mps), states):
            got = r.prepare_matrix() @ np.array([1.0, 0.0])
            assert phase_aligned_distance(got, s) < 1e-10

    def test_rejects_entangled_input(self, rng):
        mps = canonicalize(random_state(4, rng))
        with pytest.raises(ValueError):
            readoff_single_qubit(mps)


def small_random_circuit(n, rng, layers=3, with_readoff=False):
    lays = []
    for mu in range(1, layers + 1):
        parity = "odd" if mu % 2 == 1 else "even"
        gates = [(s, TwoQubitGateParams(rng.normal(size=9) * 0.4))
                 for s in layer_sites(parity, n)]
        lays.append(CircuitLayer(parity=parity, gates=gates))
    readoff = None
    if with_readoff:
        readoff = [SingleQubitReadoff(phi_x=float(rng.uniform(0, np.pi / 2)),
                                      phi_z=float(rng.uniform(-np.pi, np.pi)))
                   for _ in range(n)]
    return Circuit(n=n, layers=lays, readoff=readoff)


class TestApplyCircuit:
    def test_empty_circuit_is_identity(self, rng):
        mps = canonicalize(random_state(5, rng))
        out, discards = apply_circuit(mps, Circuit(n=5))
        assert discards == []
        assert abs(abs(overlap(mps, out)) - 1) < 1e-12

    def test_forward_then_reverse_is_identity(self, rng):
        mps = canonicalize(random_state(6, rng))
        circ = small_random_circuit(6, rng, with_readoff=True)
        fwd, _ = apply_circuit(mps, circ)
        back, _ = apply_circuit(fwd, circ, reverse=True)
        assert abs(abs(overlap(mps, back)) - 1) < 1e-10

    def test_forward_matches_dense(self, rng):
        v = random_state(6, rng)
        circ = small_random_circuit(6, rng)
        out, _ = apply_circuit(canonicalize(v), circ)
        want = v
        for layer in circ.layers:
            for site, params in layer.gates:
                want = dense_apply_two_qubit(want, 6, site, gate_matrix(params))
        assert phase_aligned_distance(to_statevector(out), want) < 1e-10

    def test_n_mismatch(self, rng):
        with pytest.raises(ValueError):
            apply_circuit(zero_state_mps(4), Circuit(n=5))

    def test_overlapping_gates_rejected(self):
        with pytest.raises(ValueError):
            CircuitLayer(parity="odd", gates=[(0, TwoQubitGateParams.identity()),
                                              (0, TwoQubitGateParams.identity())])

    def test_parity_mismatch_rejected(self):
        with pytest.raises(ValueError):
            CircuitLayer(parity="even", gates=[(0, TwoQubitGateParams.identity())])


class TestCircuitFiles:
    def test_roundtrip(self, tmp_path, rng):
        circ = small_random_circuit(5, rng, with_readoff=True)
        path = tmp_path / "c.circuit.json"
        save_circuit(circ, str(path))
        back = load_circuit(str(path))
        assert back.n == circ.n and back.direction == circ.direction
        for la, lb in zip(circ.layers, back.layers):
            assert la.parity == lb.parity
            for (sa, pa), (sb, pb) in zip(la.gates, lb.gates):
                assert sa == sb
                np.testing.assert_allclose(pa.theta, pb.theta, rtol=1e-15)
        for ra, rb in zip(circ.readoff, back.readoff):
            assert ra.phi_x == rb.phi_x and ra.phi_z == rb.phi_z

    def test_schema_sites_are_one_based(self, rng):
        circ = small_random_circuit(4, rng)
        data = circuit_to_dict(circ)
        odd_sites = [g["site"] for g in data["layers"][0]["gates"]]
        assert all(s % 2 == 1 for s in odd_sites)
        assert circuit_from_dict(data).layers[0].gates[0][0] == 0


class TestExport:
    def _simulate_gate_list(self, text, n):
        """Independent dense interpreter for the exported format."""
        vec = np.zeros(2**n, dtype=complex)
        vec[0] = 1.0
        two = {"rxx": np.kron(PAULI_X, PAULI_X),
               "ryy": np.kron(PAULI_Y, PAULI_Y),
               "rzz": np.kron(PAULI_Z, PAULI_Z)}
        one = {"rx": PAULI_X, "ry": PAULI_Y, "rz": PAULI_Z}
        for line in text.splitlines():
            if not line or line.startswith("#"):
                continue
            parts = line.split()
            name = parts[0]
            if name in two:
                q = int(parts[1][1:]) - 1
                phi = float(parts[3])
                u = scipy.linalg.expm(-0.5j * phi * two[name])
                vec = dense_apply_two_qubit(vec, n, q, u)
            else:
                q = int(parts[1][1:]) - 1
                phi = float(parts[2])
                u = scipy.linalg.expm(-0.5j * phi * one[name])
                t = vec.reshape(2**q, 2, -1)
                vec = np.einsum("st,atb->asb", u, t).reshape(-1)
        return vec

    def test_prepare_list_builds_the_state(self, rng):
        from mpsprep.driver import disentangle, DisentangleConfig
        from mpsprep.states import ghz
        state = ghz(4)
        circ, report, _ = disentangle(state, DisentangleConfig(max_layers=4, max_bond=None,
                                                               cutoff=0.0, seed=3))
        text = export_gate_list(circ, prepare=True)
        got = self._simulate_gate_list(text, 4)
        want = to_statevector(state)
        assert phase_aligned_distance(got, want) < 1e-6


class TestApplySingleQubit:
    def test_matches_dense(self, rng):
        v = random_state(5, rng)
        mps = canonicalize(v)
        u = scipy.linalg.expm(-1j * 0.3 * PAULI_Y)
        out = apply_single_qubit(mps, 2, u)
        t = v.reshape(4, 2, -1)
        want = np.einsum("st,atb->asb", u, t).reshape(-1)
        assert phase_aligned_distance(to_statevector(out), want) < 1e-10
