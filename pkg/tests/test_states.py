import numpy as np
import pytest
import scipy.sparse as sp

from mpsprep.mps import (expectation_product_operator, overlap, schmidt_spectrum,
                         to_statevector)
from mpsprep.states import (AKLT_EDGES, CODE_5_1_3, CODE_11_1_5, EdResult,
                            HamiltonianSpec, aklt, cluster, codewords,
                            ed_ground_state, energy_expectation, ghz,
                            hamiltonian_matrix, logical_bell, pauli_string_matrix,
                            stabilizer_expectations, _triplet_projector)
from mpsprep.gates import PAULIS

from conftest import phase_aligned_distance


class TestGhz:
    def test_bell_at_n2(self):
        vec = to_statevector(ghz(2))
        want = np.zeros(4, dtype=complex)
        want[0] = want[3] = 1 / np.sqrt(2)
        assert phase_aligned_distance(vec, want) < 1e-12

    def test_all_bonds_flat(self):
        state = ghz(4)
        for b in range(3):
            np.testing.assert_allclose(state.lambdas[b].values,
                                       [1 / np.sqrt(2)] * 2, atol=1e-14)

    def test_matches_dense_at_n8(self):
        vec = to_statevector(ghz(8))
        want = np.zeros(256, dtype=complex)
        want[0] = want[255] = 1 / np.sqrt(2)
        assert phase_aligned_distance(vec, want) < 1e-12

    def test_invariants_at_large_n(self):
        ghz(48).validate()

    def test_range_check(self):
        with pytest.raises(ValueError):
            ghz(1)


class TestCluster:
    def test_stabilizers_n3(self):
        state = cluster(3)
        x, z = PAULIS["X"], PAULIS["Z"]
        assert abs(expectation_product_operator(state, {0: z, 1: x, 2: z}) - 1) < 1e-10
        assert abs(expectation_product_operator(state, {0: x, 1: z}) - 1) < 1e-10
        assert abs(expectation_product_operator(state, {1: z, 2: x}) - 1) < 1e-10

    def test_matches_dense_n8(self):
        # dense oracle: CZ on all pairs of |+>^8 built with kron arithmetic
        n = 8
        plus = np.array([1.0, 1.0]) / np.sqrt(2)
        vec = plus
        for _ in range(n - 1):
            vec = np.kron(vec, plus)
        cz = np.diag([1.0, 1.0, 1.0, -1.0])
        for i in range(n - 1):
            op = np.kron(np.eye(2**i), np.kron(cz, np.eye(2 ** (n - i - 2))))
            vec = op @ vec
        assert phase_aligned_distance(to_statevector(cluster(n)), vec) < 1e-10

    def test_all_interior_stabilizers(self):
        n = 8
        state = cluster(n)
        x, z = PAULIS["X"], PAULIS["Z"]
        for i in range(1, n - 1):
            val = expectation_product_operator(state, {i - 1: z, i: x, i + 1: z})
            assert abs(val - 1) < 1e-10

    def test_bond_dims_are_two(self):
        assert max(cluster(12).bond_dims()) == 2


def dense_aklt(n_spin1: int) -> np.ndarray:
    """Dense oracle: edge modes + singlets, triplet projectors, normalize."""
    n = 2 * n_spin1
    e1, e2 = AKLT_EDGES
    singlet = np.zeros(4)
    singlet[1], singlet[2] = 1 / np.sqrt(2), -1 / np.sqrt(2)
    vec = np.zeros(2, dtype=complex)
    vec[e1] = 1.0
    for _ in range(n_spin1 - 1):
        vec = np.kron(vec, singlet.astype(complex))
    edge = np.zeros(2, dtype=complex)
    edge[e2] = 1.0
    vec = np.kron(vec, edge)
    proj = _triplet_projector()
    for j in range(n_spin1):
        q = 2 * j
        op = np.kron(np.eye(2**q), np.kron(proj, np.eye(2 ** (n - q - 2))))
        vec = op @ vec
    return vec / np.linalg.norm(vec)


class TestAklt:
    def test_matches_dense_n4(self):
        got = to_statevector(aklt(4))
        assert phase_aligned_distance(got, dense_aklt(4)) < 1e-10

    def test_annihilated_by_spin2_projector_n2(self):
        # defining property: neighboring spin-1 pairs have no total-spin-2
        # component; check via the dense two-site spin-1 state
        vec = to_statevector(aklt(2))
        # map two qubits to the spin-1 triplet basis (m = +1, 0, -1)
        triplet = np.zeros((3, 4), dtype=complex)
        triplet[0, 0] = 1.0
        triplet[1, 1] = triplet[1, 2] = 1 / np.sqrt(2)
        triplet[2, 3] = 1.0
        enc = np.kron(triplet, triplet)          # (9, 16)
        spin1 = enc @ vec                        # two-spin-1 wavefunction
        # total-spin-2 subspace of two spin-1's via Clebsch-Gordan from raising
        m_states = {2: [(0, 0, 1.0)],
                    1: [(0, 1, 1 / np.sqrt(2)), (1, 0, 1 / np.sqrt(2))]}
        s2m2 = np.zeros(9, dtype=complex)
        s2m2[0] = 1.0
        # build all five S=2 states by applying the lowering operator
        sm = np.diag(np.sqrt([2.0, 2.0]), k=-1)   # spin-1 lowering in m basis
        lower = np.kron(sm, np.eye(3)) + np.kron(np.eye(3), sm)
        basis = [s2m2]
        for _ in range(4):
            nxt = lower @ basis[-1]
            basis.append(nxt / np.linalg.norm(nxt))
        for b in basis:
            assert abs(np.vdot(b, spin1)) < 1e-10

    def test_site_pairs_in_triplet_subspace(self):
        state = aklt(4)
        singlet = np.zeros(4, dtype=complex)
        singlet[1], singlet[2] = 1 / np.sqrt(2), -1 / np.sqrt(2)
        sing_proj = np.outer(singlet, singlet.conj()).reshape(2, 2, 2, 2)
        # <P_singlet> on each encoded pair must vanish
        vec = to_statevector(state)
        n = 8
        for j in range(4):
            q = 2 * j
            op = np.kron(np.eye(2**q),
                         np.kron(sing_proj.reshape(4, 4), np.eye(2 ** (n - q - 2))))
            assert abs(np.vdot(vec, op @ vec)) < 1e-10

    def test_intra_site_spectrum_approaches_flat4(self):
        # squared central intra-site Schmidt weights approach (1/4,...) from
        # above/below monotonically as the chain grows
        devs = []
        for m in (2, 3, 4, 5):
            state = aklt(m)
            bond = 2 * (m // 2) - (1 if m % 2 == 0 else -1)  # central intra-site bond
            lam = schmidt_spectrum(state, bond).values
            p = np.zeros(4)
            p[: len(lam)] = lam**2
            devs.append(np.max(np.abs(p - 0.25)))
        assert all(a > b for a, b in zip(devs, devs[1:])), devs

    def test_range_check(self):
        with pytest.raises(ValueError):
            aklt(1)


class TestStabilizerCodes:
    @pytest.mark.parametrize("code", [CODE_5_1_3, CODE_11_1_5])
    def test_rows_commute(self, code):
        mats = [pauli_string_matrix(r) for r in code.stabilizers]
        for i in range(len(mats)):
            for j in range(i):
                assert np.max(np.abs(mats[i] @ mats[j] - mats[j] @ mats[i])) < 1e-12

    def test_5_1_3_rows_verbatim(self):
        assert CODE_5_1_3.stabilizers == ["IXZZX", "XZZXI", "ZZXIX", "ZXIXZ"]

    def test_11_1_5_row_count(self):
        assert len(CODE_11_1_5.stabilizers) == 10
        assert all(len(r) == 11 for r in CODE_11_1_5.stabilizers)

    @pytest.mark.parametrize("code", [CODE_5_1_3, CODE_11_1_5])
    def test_logicals_commute_with_stabilizers(self, code):
        for logical in (code.logical_x, code.logical_z):
            lm = pauli_string_matrix(logical)
            for r in code.stabilizers:
                rm = pauli_string_matrix(r)
                assert np.max(np.abs(lm @ rm - rm @ lm)) < 1e-12
        lx = pauli_string_matrix(code.logical_x)
        lz = pauli_string_matrix(code.logical_z)
        assert np.max(np.abs(lx @ lz + lz @ lx)) < 1e-12   # anticommute

    @pytest.mark.parametrize("code", [CODE_5_1_3, CODE_11_1_5])
    def test_codewords_stabilized(self, code):
        zero_l, one_l = codewords(code)
        for r in code.stabilizers:
            m = pauli_string_matrix(r)
            assert abs(np.vdot(zero_l, m @ zero_l) - 1) < 1e-10
            assert abs(np.vdot(one_l, m @ one_l) - 1) < 1e-10
        zmat = pauli_string_matrix(code.logical_z)
        assert abs(np.vdot(zero_l, zmat @ zero_l) - 1) < 1e-10
        assert abs(np.vdot(one_l, zmat @ one_l) + 1) < 1e-10


class TestLogicalBell:
    def test_separated_5_1_3_dense_oracle(self):
        zero_l, one_l = codewords(CODE_5_1_3)
        want = (np.kron(zero_l, one_l) - np.kron(one_l, zero_l)) / np.sqrt(2)
        got = to_statevector(logical_bell(CODE_5_1_3, "separated"))
        assert phase_aligned_distance(got, want) < 1e-10

    def test_interlaced_5_1_3_dense_oracle(self):
        zero_l, one_l = codewords(CODE_5_1_3)
        sep = (np.kron(zero_l, one_l) - np.kron(one_l, zero_l)) / np.sqrt(2)
        # permute qubits (A1..A5 B1..B5) -> (A1 B1 A2 B2 ...): output axis k
        # reads source axis perm[k]
        perm = [0, 5, 1, 6, 2, 7, 3, 8, 4, 9]
        t = sep.reshape([2] * 10).transpose(perm).reshape(-1)
        got = to_statevector(logical_bell(CODE_5_1_3, "interlaced"))
        assert phase_aligned_distance(got, t) < 1e-10

    @pytest.mark.parametrize("layout", ["separated", "interlaced"])
    def test_stabilizer_expectations_5_1_3(self, layout):
        state = logical_bell(CODE_5_1_3, layout)
        vals = stabilizer_expectations(CODE_5_1_3, layout, state)
        np.testing.assert_allclose(vals, 1.0, atol=1e-10)
        assert len(vals) == 8

    def test_center_cut_is_bell_like(self):
        state = logical_bell(CODE_5_1_3, "separated")
        lam = schmidt_spectrum(state, 4).values   # cut between the blocks
        np.testing.assert_allclose(lam, [1 / np.sqrt(2)] * 2, atol=1e-10)

    def test_logical_singlet_correlators(self):
        state = logical_bell(CODE_5_1_3, "separated")
        ops_z = {k: PAULIS["Z"] for k in range(10)}
        ops_x = {k: PAULIS["X"] for k in range(10)}
        assert abs(expectation_product_operator(state, ops_z) + 1) < 1e-10
        assert abs(expectation_product_operator(state, ops_x) + 1) < 1e-10

    def test_11_1_5_mps_form(self):
        state = logical_bell(CODE_11_1_5, "separated")
        assert state.n == 22
        state.validate(iso_tol=1e-8)
        vals = stabilizer_expectations(CODE_11_1_5, "separated", state)
        np.testing.assert_allclose(vals, 1.0, atol=1e-8)

    def test_bad_layout(self):
        with pytest.raises(ValueError):
            logical_bell(CODE_5_1_3, "scrambled")


class TestHamiltonians:
    def test_ising_matrix_small(self):
        spec = HamiltonianSpec("ising", 2, {"hx": 0.0, "hz": 0.0})
        h = hamiltonian_matrix(spec).toarray()
        np.testing.assert_allclose(h, np.diag([-0.5, 0.5, 0.5, -0.5]), atol=1e-14)

    def test_xy_hermitian(self):
        h = hamiltonian_matrix(HamiltonianSpec("xy", 4, {"hx": 0.1})).toarray()
        np.testing.assert_allclose(h, h.conj().T, atol=1e-14)

    def test_xxz_signs(self):
        # single-bond XXZ with fields off: eigenvalues of -(XX+YY+Jz ZZ)/2
        h = hamiltonian_matrix(HamiltonianSpec("xxz", 2, {"jz": 0.5})).toarray()
        evals = np.linalg.eigvalsh(h)
        want = np.linalg.eigvalsh(-0.5 * (np.kron(PAULIS["X"], PAULIS["X"])
                                          + np.kron(PAULIS["Y"], PAULIS["Y"])
                                          + 0.5 * np.kron(PAULIS["Z"], PAULIS["Z"])).real)
        np.testing.assert_allclose(evals, want, atol=1e-12)

    def test_fermi_hubbard_number_conservation(self):
        spec = HamiltonianSpec("fermi_hubbard", 3, {"t": 1.0, "u": 2.0})
        h = hamiltonian_matrix(spec)
        n = 6
        n_up = sp.csr_matrix((2**n, 2**n), dtype=complex)
        for i in range(3):
            ops = {2 * i: 0.5 * (np.eye(2) - PAULIS["Z"])}
            from mpsprep.states import _sparse_pauli
            n_up = n_up + _sparse_pauli(n, ops)
        comm = h @ n_up - n_up @ h
        assert abs(comm).max() < 1e-12


class TestEdGroundState:
    def test_ising_two_site_degenerate_manifold(self):
        res = ed_ground_state(HamiltonianSpec("ising", 2, {}))
        assert res.degenerate
        assert abs(res.energy + 0.5) < 1e-12
        assert res.mps.bond_dims() == [1]          # product state

    def test_ising_10_matches_dense(self):
        spec = HamiltonianSpec("ising", 10, {"hx": 0.5, "hz": 0.05})
        res = ed_ground_state(spec)
        h = hamiltonian_matrix(spec).toarray()
        want = np.linalg.eigvalsh(h)[0]
        assert abs(res.energy - want) < 1e-9
        assert abs(energy_expectation(spec, res.mps) - res.energy) < 1e-9

    def test_fermi_hubbard_sector(self):
        spec = HamiltonianSpec("fermi_hubbard", 3,
                               {"t": 1.0, "u": 2.0, "n_up": 1, "n_down": 1})
        res = ed_ground_state(spec)
        # dense oracle within the sector
        from mpsprep.states import _sector_indices
        h = hamiltonian_matrix(spec).toarray()
        idx = _sector_indices(3, 1, 1)
        want = np.linalg.eigvalsh(h[np.ix_(idx, idx)])[0]
        assert abs(res.energy - want) < 1e-9
        # particle numbers are exact on the returned state
        vec = to_statevector(res.mps)
        bits = (np.arange(64)[:, None] >> np.arange(5, -1, -1)[None, :]) & 1
        ups = bits[:, 0::2].sum(axis=1)
        downs = bits[:, 1::2].sum(axis=1)
        p = np.abs(vec) ** 2
        assert abs(np.sum(p * ups) - 1) < 1e-12
        assert abs(np.sum(p * downs) - 1) < 1e-12

    def test_empty_sector_rejected(self):
        spec = HamiltonianSpec("fermi_hubbard", 2, {"n_up": 3, "n_down": 0})
        with pytest.raises(ValueError):
            ed_ground_state(spec)

    def test_qubit_cap(self):
        with pytest.raises(ValueError):
            HamiltonianSpec("ising", 15, {})
        with pytest.raises(ValueError):
            HamiltonianSpec("fermi_hubbard", 8, {})

    def test_factory_outputs_canonical(self):
        for state in (ghz(6), cluster(6), aklt(3),
                      logical_bell(CODE_5_1_3, "separated"),
                      ed_ground_state(HamiltonianSpec("xy", 6, {"hx": 0.1})).mps):
            state.validate(iso_tol=1e-8)
