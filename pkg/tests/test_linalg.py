import numpy as np
import pytest
import scipy.linalg
from hypothesis import given, strategies as st
from hypothesis.extra.numpy import arrays

from noisygates.linalg import (
    DECAY,
    I2,
    PAULI_X,
    PAULI_Y,
    PAULI_Z,
    apply_gate,
    basis_state,
    dagger,
    expm,
    expm_2x2,
    is_hermitian,
    is_unitary,
    kron,
    matmul,
)


def complex_matrices(dim, scale=1.0):
    reals = arrays(np.float64, (dim, dim), elements=st.floats(-scale, scale))
    return st.tuples(reals, reals).map(lambda ab: ab[0] + 1j * ab[1])


class TestMatmul:
    def test_identity(self):
        m = np.array([[1, 2j], [3, 4]], dtype=complex)
        assert np.array_equal(matmul(I2, m), m)

    def test_pauli_involution(self):
        assert np.allclose(matmul(PAULI_X, PAULI_X), I2)

    def test_xy_is_iz(self):
        # hand expansion: [[0,1],[1,0]] @ [[0,-i],[i,0]] = [[i,0],[0,-i]]
        assert np.allclose(matmul(PAULI_X, PAULI_Y), 1j * PAULI_Z)

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError):
            matmul(I2, np.eye(3, dtype=complex))


class TestKron:
    def test_identity_tensor_x(self):
        out = kron(I2, PAULI_X)
        assert np.allclose(out[:2, :2], PAULI_X)
        assert np.allclose(out[2:, 2:], PAULI_X)
        assert np.allclose(out[:2, 2:], 0)

    def test_z_tensor_x(self):
        out = kron(PAULI_Z, PAULI_X)
        assert np.allclose(out[:2, :2], PAULI_X)
        assert np.allclose(out[2:, 2:], -PAULI_X)

    def test_scalar_identity(self):
        m = np.array([[1, 2], [3, 4]], dtype=complex)
        assert np.array_equal(kron(np.array([[1.0]]), m), m)

    @given(complex_matrices(2), complex_matrices(2), complex_matrices(2))
    def test_associativity(self, a, b, c):
        assert np.allclose(kron(kron(a, b), c), kron(a, kron(b, c)), atol=1e-14)


class TestExpm:
    def test_zero(self):
        assert np.allclose(expm(np.zeros((3, 3))), np.eye(3))

    def test_rx_pi_closed_form(self):
        assert np.allclose(expm(-1j * (np.pi / 2) * PAULI_X), -1j * PAULI_X, atol=1e-14)

    def test_diagonal(self):
        out = expm(np.diag([0.3 + 1j, -2.0]))
        assert np.allclose(out, np.diag(np.exp([0.3 + 1j, -2.0])), atol=1e-13)

    def test_against_scipy_norm_up_to_ten(self):
        rng = np.random.default_rng(0)
        for dim in (2, 4, 6):
            a = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
            a *= 10.0 / np.linalg.norm(a, 1)
            want = scipy.linalg.expm(a)
            got = expm(a)
            assert np.abs(got - want).max() / np.abs(want).max() < 1e-12

    def test_non_finite_rejected(self):
        with pytest.raises(ValueError):
            expm(np.array([[np.nan, 0], [0, 0]]))

    @given(complex_matrices(2))
    def test_inverse_property(self, a):
        a *= 2.0 / max(np.linalg.norm(a, 1), 2.0)  # keep norm <= 2
        assert np.abs(expm(a) @ expm(-a) - I2).max() < 1e-10

    @given(complex_matrices(3))
    def test_unitary_for_hermitian_generator(self, h):
        h = 0.5 * (h + dagger(h))
        assert is_unitary(expm(-1j * h))

    def test_closed_form_2x2_agrees_with_pade(self):
        rng = np.random.default_rng(3)
        batch = rng.normal(size=(64, 2, 2)) + 1j * rng.normal(size=(64, 2, 2))
        assert np.abs(expm_2x2(batch) - expm(batch)).max() < 1e-11

    def test_batched_matches_loop(self):
        rng = np.random.default_rng(4)
        batch = rng.normal(size=(5, 4, 4)) + 1j * rng.normal(size=(5, 4, 4))
        stacked = expm(batch)
        for i in range(5):
            assert np.allclose(stacked[i], expm(batch[i]), atol=1e-12)


class TestApplyGate:
    def test_x_on_q0_big_endian(self):
        out = apply_gate(basis_state(2, 0), PAULI_X, [0])
        assert np.argmax(np.abs(out)) == 2  # |00> -> |10>

    def test_identity_leaves_state(self):
        state = np.arange(8, dtype=complex) / np.linalg.norm(np.arange(8))
        assert np.allclose(apply_gate(state, I2, [1]), state)

    def test_cnot_control_q0(self):
        cnot = np.eye(4, dtype=complex)
        cnot[2:, 2:] = PAULI_X
        out = apply_gate(basis_state(2, 2), cnot, [0, 1])
        assert np.argmax(np.abs(out)) == 3  # |10> -> |11>

    def test_duplicate_index_rejected(self):
        with pytest.raises(ValueError):
            apply_gate(basis_state(2), np.eye(4, dtype=complex), [0, 0])

    def test_out_of_range_rejected(self):
        with pytest.raises(ValueError):
            apply_gate(basis_state(2), PAULI_X, [2])

    @given(complex_matrices(2))
    def test_unitary_roundtrip(self, h):
        h = 0.5 * (h + dagger(h))
        u = expm(-1j * h)
        state = basis_state(3, 5)
        back = apply_gate(apply_gate(state, u, [1]), dagger(u), [1])
        assert np.abs(back - state).max() < 1e-12

    def test_batched_states_and_gates(self):
        rng = np.random.default_rng(7)
        states = rng.normal(size=(6, 8)) + 1j * rng.normal(size=(6, 8))
        gates = np.stack([scipy.linalg.expm(-1j * 0.3 * k * PAULI_Y) for k in range(6)])
        out = apply_gate(states, gates, [2])
        for i in range(6):
            assert np.allclose(out[i], apply_gate(states[i], gates[i], [2]))


class TestPredicates:
    def test_is_unitary(self):
        assert is_unitary(PAULI_X)
        assert not is_unitary(DECAY)

    def test_is_hermitian(self):
        assert is_hermitian(PAULI_Y)
        assert not is_hermitian(DECAY)
