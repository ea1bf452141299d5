import math

import numpy as np
import pytest
from hypothesis import given, settings
import hypothesis.strategies as st
from scipy.stats import unitary_group

from Simulation.entanglement import (
    DensityMatrix,
    block_entropy,
    concurrence,
    concurrence_of_pair,
    reduce_to_block,
    reduce_to_pair,
    single_qubit_entropy,
    spin_flip,
    von_neumann_entropy,
)
from Simulation.errors import ArgumentError, BasisError, DegenerateTraceError, NumericalDegradationError
from Simulation.oracles import dense_reduced_matrix, werner_state
from Simulation.statevec import StateVector, momentum_eigenstate, qubit_bit, random_state, slot, uniform_state
from Simulation.dynamics import dft_momentum_to_angle


def superposition(n_q, slots):
    amplitudes = np.zeros(2 ** n_q, dtype=np.complex128)
    amplitudes[list(slots)] = 1.0 / math.sqrt(len(slots))
    return StateVector(amplitudes, n_q)


def pair_matrix(vector):
    vector = np.asarray(vector, dtype=np.complex128)
    return DensityMatrix(np.outer(vector, vector.conj()), (1, 2), lsb_first=False)


class TestReduceToPair:
    def test_product_state(self):
        rho = reduce_to_pair(momentum_eigenstate(4, 5), 1, 3)
        expected = np.zeros((4, 4))
        expected[3, 3] = 1.0
        np.testing.assert_allclose(rho.entries, expected, atol=1e-15)

    def test_two_branch_superposition_is_bell_like(self):
        psi = superposition(4, [0, 5])
        rho = reduce_to_pair(psi, 1, 3)
        bell = np.array([1, 0, 0, 1]) / math.sqrt(2)
        np.testing.assert_allclose(rho.entries, np.outer(bell, bell), atol=1e-15)
        assert concurrence(rho).value == pytest.approx(1.0, abs=1e-9)

    @pytest.mark.parametrize("i, j", [(1, 2), (2, 5), (3, 4), (1, 5)])
    def test_matches_dense_projector(self, i, j):
        psi = random_state(5, 77)
        rho = reduce_to_pair(psi, i, j)
        np.testing.assert_allclose(rho.entries, dense_reduced_matrix(psi, (i, j), lsb_first=False), atol=1e-12)

    def test_invariants(self):
        rho = reduce_to_pair(random_state(6, 3), 2, 6)
        np.testing.assert_allclose(rho.entries, rho.entries.conj().T, atol=1e-14)
        assert np.trace(rho.entries).real == pytest.approx(1.0, abs=1e-12)
        rho.validate()

    @pytest.mark.parametrize("i, j", [(3, 1), (2, 2), (0, 1), (1, 6)])
    def test_bad_labels(self, i, j):
        with pytest.raises(ArgumentError):
            reduce_to_pair(random_state(5, 0), i, j)

    def test_angle_basis_rejected(self):
        with pytest.raises(BasisError):
            reduce_to_pair(dft_momentum_to_angle(momentum_eigenstate(3, 0)), 1, 2)


class TestReduceToBlock:
    def test_block_of_product_state_is_pure(self):
        rho = reduce_to_block(momentum_eigenstate(5, 6), (1, 2, 3, 4))
        assert von_neumann_entropy(rho) == pytest.approx(0.0, abs=1e-12)

    def test_uniform_state_blocks_are_pure(self):
        for block in [(1,), (2, 3), (1, 2, 3, 4)]:
            assert block_entropy(uniform_state(5), block) == pytest.approx(0.0, abs=1e-12)

    def test_pair_cross_check(self):
        psi = random_state(5, 21)
        block = reduce_to_block(psi, (2, 4)).entries
        pair = reduce_to_pair(psi, 2, 4).entries
        # block basis has qubit 2 as the low bit, pair basis has it as the high bit
        swap = [0, 2, 1, 3]
        np.testing.assert_allclose(block[np.ix_(swap, swap)], pair, atol=1e-14)

    @pytest.mark.parametrize("block", [(1,), (2, 3), (1, 2, 3), (3, 4, 5), (2, 4)])
    def test_matches_dense_projector(self, block):
        psi = random_state(5, 5)
        np.testing.assert_allclose(reduce_to_block(psi, block).entries, dense_reduced_matrix(psi, block), atol=1e-12)

    def test_whole_register(self):
        with pytest.raises(DegenerateTraceError):
            reduce_to_block(random_state(3, 0), (1, 2, 3))

    def test_unordered_labels(self):
        with pytest.raises(ArgumentError):
            reduce_to_block(random_state(4, 0), (3, 1))

    def test_partial_trace_consistency(self):
        psi = random_state(6, 13)
        big = reduce_to_block(psi, (1, 2, 3, 4))
        for keep in [(2,), (1, 3), (2, 3, 4)]:
            np.testing.assert_allclose(
                big.partial_trace(keep).entries, reduce_to_block(psi, keep).entries, atol=1e-13
            )


class TestConcurrence:
    def test_bell(self):
        result = concurrence(pair_matrix(np.array([1, 0, 0, 1]) / np.sqrt(2)))
        assert result.value == pytest.approx(1.0, abs=1e-9)
        assert list(result.lambdas) == sorted(result.lambdas, reverse=True)

    def test_product(self):
        assert concurrence(pair_matrix([1, 0, 0, 0])).value == pytest.approx(0.0, abs=1e-12)

    def test_werner(self):
        assert concurrence(werner_state(0.8)).value == pytest.approx(0.7, abs=1e-9)

    def test_werner_below_threshold_is_separable(self):
        assert concurrence(werner_state(0.3)).value == 0.0

    def test_negative_eigenvalue_is_reported(self):
        entries = np.diag([0.6, 0.6, -0.2, 0.0]).astype(np.complex128)
        with pytest.raises(NumericalDegradationError):
            concurrence(DensityMatrix(entries, (1, 2), lsb_first=False))

    def test_non_two_qubit_matrix(self):
        with pytest.raises(ArgumentError):
            concurrence(reduce_to_block(random_state(4, 0), (1, 2, 3)))

    def test_ghz_pairs_are_separable(self):
        psi = superposition(3, [0, 7])
        assert concurrence_of_pair(psi, 1, 2) == pytest.approx(0.0, abs=1e-9)

    def test_bell_pair_with_spectator(self):
        psi = superposition(3, [0, 3])
        assert concurrence_of_pair(psi, 1, 2) == pytest.approx(1.0, abs=1e-9)
        assert concurrence_of_pair(psi, 1, 3) == pytest.approx(0.0, abs=1e-12)

    @settings(max_examples=60, deadline=None)
    @given(st.integers(min_value=0, max_value=2 ** 32 - 1), st.sampled_from([(1, 2), (1, 3), (2, 4), (3, 5)]))
    def test_bounds(self, seed, pair):
        value = concurrence_of_pair(random_state(5, seed), *pair)
        assert 0.0 <= value <= 1.0

    @settings(max_examples=30, deadline=None)
    @given(st.integers(min_value=0, max_value=2 ** 32 - 1))
    def test_local_unitary_invariance(self, seed):
        rho = reduce_to_pair(random_state(5, seed), 1, 2)
        local = np.kron(unitary_group.rvs(2, random_state=seed % 2 ** 31),
                        unitary_group.rvs(2, random_state=(seed + 1) % 2 ** 31))
        rotated = DensityMatrix(local @ rho.entries @ local.conj().T, (1, 2), lsb_first=False)
        assert concurrence(rotated).value == pytest.approx(concurrence(rho).value, abs=1e-9)

    @pytest.mark.parametrize("epsilon", [1e-6, 2e-6, 1e-4])
    def test_weakly_entangled_pure_state(self, epsilon):
        a = math.sqrt(1.0 - epsilon ** 2)
        value = concurrence(pair_matrix([a, 0, 0, epsilon])).value
        assert value == pytest.approx(2 * epsilon * a, rel=1e-3)

    @settings(max_examples=40, deadline=None)
    @given(st.integers(min_value=0, max_value=2 ** 32 - 1), st.sampled_from([(1, 2), (1, 4), (3, 5)]))
    def test_lambdas_square_to_trace_of_r(self, seed, pair):
        rho = reduce_to_pair(random_state(5, seed), *pair)
        lambdas = np.array(concurrence(rho).lambdas)
        trace_r = np.trace(rho.entries @ spin_flip(rho)).real
        assert float(np.sum(lambdas ** 2)) == pytest.approx(trace_r, abs=1e-10)


class TestEntropy:
    def test_pure(self):
        assert von_neumann_entropy(pair_matrix([0.6, 0.8j, 0, 0])) == pytest.approx(0.0, abs=1e-12)

    def test_maximally_mixed_qubit(self):
        rho = DensityMatrix(np.eye(2, dtype=np.complex128) / 2, (1,))
        assert von_neumann_entropy(rho) == pytest.approx(1.0, abs=1e-12)

    def test_maximally_mixed_three_qubits(self):
        rho = DensityMatrix(np.eye(8, dtype=np.complex128) / 8, (1, 2, 3))
        assert von_neumann_entropy(rho) == pytest.approx(3.0, abs=1e-12)

    def test_bounded_by_block_size(self):
        psi = random_state(7, 8)
        for m in range(1, 4):
            assert 0.0 <= block_entropy(psi, tuple(range(1, m + 1))) <= m + 1e-12

    def test_complementarity(self):
        n_q = 8
        for seed in range(100):
            psi = random_state(n_q, seed)
            m = 1 + seed % (n_q - 1)
            inside = block_entropy(psi, tuple(range(1, m + 1)))
            outside = block_entropy(psi, tuple(range(m + 1, n_q + 1)))
            assert inside == pytest.approx(outside, abs=1e-9)

    def test_single_qubit_of_bell_pair(self):
        psi = superposition(4, [0, 3])
        assert single_qubit_entropy(psi, 1) == pytest.approx(1.0, abs=1e-12)
        assert single_qubit_entropy(psi, 3) == pytest.approx(0.0, abs=1e-12)


class TestCoding:
    @settings(max_examples=50, deadline=None)
    @given(st.integers(min_value=-31, max_value=32), st.integers(min_value=1, max_value=6))
    def test_eigenstate_qubit_holds_its_bit(self, n, i):
        rho = reduce_to_block(momentum_eigenstate(6, n), (i,))
        expected = np.zeros((2, 2))
        bit = qubit_bit(slot(n, 6), i)
        expected[bit, bit] = 1.0
        np.testing.assert_array_equal(rho.entries, expected)
        assert single_qubit_entropy(momentum_eigenstate(6, n), i) == 0.0
