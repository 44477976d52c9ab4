import numpy as np
import pytest
import sympy as sp
from hypothesis import given, settings
from hypothesis import strategies as st

from noiselab import quantum as q
from noiselab.quantum import NoiseKind

KINDS = list(NoiseKind)
PLUS = q.pure(q.KET_PLUS)
ZERO = q.pure(q.KET_0)
ONE = q.pure(q.KET_1)


def random_state(rng, dim=2, n_mix=3):
    """Random mixture of random pure states."""
    w = rng.dirichlet(np.ones(n_mix))
    rho = np.zeros((dim, dim), dtype=complex)
    for wi in w:
        v = rng.normal(size=dim) + 1j * rng.normal(size=dim)
        v /= np.linalg.norm(v)
        rho += wi * np.outer(v, v.conj())
    return rho


class TestMakeChannel:
    def test_bit_flip_elements(self):
        ch = q.make_channel(NoiseKind.BIT_FLIP, 0.3)
        np.testing.assert_allclose(ch.elements[0], np.sqrt(0.7) * np.eye(2))
        np.testing.assert_allclose(ch.elements[1], np.sqrt(0.3) * q.SIGMA_X)

    def test_amplitude_damping_zero_is_identity(self):
        ch = q.make_channel(NoiseKind.AMPLITUDE_DAMPING, 0.0)
        np.testing.assert_array_equal(ch.elements[0], np.eye(2))
        np.testing.assert_array_equal(ch.elements[1], np.zeros((2, 2)))

    def test_depolarizing_full_strength(self):
        ch = q.make_channel(NoiseKind.DEPOLARIZING, 1.0)
        for e, pauli in zip(ch.elements, [q.I2, q.SIGMA_X, q.SIGMA_Y, q.SIGMA_Z]):
            np.testing.assert_allclose(e, 0.5 * pauli, atol=1e-15)

    @pytest.mark.parametrize("kind, count", [("bit_flip", 2), ("amplitude_damping", 2), ("depolarizing", 4)])
    def test_element_count(self, kind, count):
        assert len(q.make_channel(kind, 0.4).elements) == count

    @pytest.mark.parametrize("p", [-0.01, 1.01, np.nan])
    def test_out_of_range(self, p):
        with pytest.raises(q.ParameterError):
            q.make_channel("bit_flip", p)

    @pytest.mark.parametrize("kind", KINDS)
    def test_completeness_on_grid(self, kind):
        for p in np.round(np.arange(0, 1.0001, 0.01), 2):
            assert q.make_channel(kind, p).completeness_error() <= 1e-12

    def test_batched_strengths_match_scalar(self):
        ps = np.array([0.0, 0.25, 0.9])
        batch = q.kraus_elements("amplitude_damping", ps)
        assert batch.shape == (3, 2, 2, 2)
        for p, e in zip(ps, batch):
            np.testing.assert_array_equal(e, q.make_channel("amplitude_damping", p).elements)


class TestApplyChannel:
    @pytest.mark.parametrize("p", [0.0, 0.2, 0.7, 1.0])
    def test_bit_flip_on_zero(self, p):
        out = q.apply_channel(ZERO, q.make_channel("bit_flip", p))
        np.testing.assert_allclose(out, np.diag([1 - p, p]), atol=1e-15)

    @pytest.mark.parametrize("p", [0.0, 0.3, 1.0])
    def test_amplitude_damping_fixes_ground_state(self, p):
        out = q.apply_channel(ZERO, q.make_channel("amplitude_damping", p))
        np.testing.assert_allclose(out, ZERO, atol=1e-15)

    def test_amplitude_damping_on_plus_symbolic_oracle(self):
        # independent route: exact symbolic operator sum
        p = sp.Rational(36, 100)
        e0 = sp.Matrix([[1, 0], [0, sp.sqrt(1 - p)]])
        e1 = sp.Matrix([[0, sp.sqrt(p)], [0, 0]])
        rho = sp.Matrix([[1, 1], [1, 1]]) / 2
        exact = e0 * rho * e0.H + e1 * rho * e1.H
        assert exact == sp.Matrix([[sp.Rational(68, 100), sp.Rational(4, 10)], [sp.Rational(4, 10), sp.Rational(32, 100)]])
        out = q.apply_channel(PLUS, q.make_channel("amplitude_damping", 0.36))
        np.testing.assert_allclose(out, [[0.68, 0.4], [0.4, 0.32]], atol=1e-15)

    @pytest.mark.parametrize("p", [0.0, 0.1, 0.5, 1.0])
    def test_depolarizing_on_zero(self, p):
        out = q.apply_channel(ZERO, q.make_channel("depolarizing", p))
        np.testing.assert_allclose(out, np.diag([1 - p / 2, p / 2]), atol=1e-15)

    @pytest.mark.parametrize("p", np.linspace(0, 1, 11))
    def test_bit_flip_leaves_diagonal_states(self, p):
        ch = q.make_channel("bit_flip", p)
        for ket in (q.KET_PLUS, q.KET_MINUS):
            rho = q.pure(ket)
            np.testing.assert_allclose(q.apply_channel(rho, ch), rho, atol=1e-15)

    def test_two_qubit_embedding(self):
        ch = q.make_channel("bit_flip", 1.0)
        rho = np.kron(ZERO, ZERO)
        np.testing.assert_allclose(q.apply_channel(rho, ch, 1), np.kron(ZERO, ONE), atol=1e-15)
        np.testing.assert_allclose(q.apply_channel(rho, ch, 0), np.kron(ONE, ZERO), atol=1e-15)

    def test_dimension_errors(self):
        ch = q.make_channel("bit_flip", 0.1)
        with pytest.raises(q.ShapeError):
            q.apply_channel(np.eye(3) / 3, ch)
        with pytest.raises(q.ShapeError):
            q.apply_channel(ZERO, ch, target=1)

    def test_random_states_stay_valid(self):
        rng = np.random.default_rng(11)
        for _ in range(200):
            rho = random_state(rng, dim=int(rng.choice([2, 4])))
            kind = KINDS[rng.integers(3)]
            p = rng.uniform()
            target = int(rng.integers(rho.shape[0] // 2))
            out = q.apply_channel(rho, q.make_channel(kind, p), target)
            assert q.validity_errors(out, 1e-10, 1e-10, 1e-10) == []


@settings(max_examples=60, deadline=None)
@given(p=st.floats(0, 1), seed=st.integers(0, 2**32 - 1))
def test_depolarizing_identity(p, seed):
    rho = random_state(np.random.default_rng(seed))
    out = q.apply_channel(rho, q.make_channel("depolarizing", p))
    np.testing.assert_allclose(out, (1 - p) * rho + p * np.eye(2) / 2, atol=1e-12)


class TestGates:
    def test_hadamard(self):
        np.testing.assert_allclose(q.apply_gate(ZERO, q.H), PLUS, atol=1e-15)

    def test_x(self):
        np.testing.assert_allclose(q.apply_gate(ZERO, q.X), ONE, atol=1e-15)

    def test_bell_circuit(self):
        rho = q.apply_gate(np.kron(PLUS, ZERO), q.CNOT, (0, 1))
        np.testing.assert_allclose(rho, q.BELL_PHI_PLUS, atol=1e-15)

    @pytest.mark.parametrize("gate", list(q.GATES.values()))
    def test_unitary(self, gate):
        u = gate.matrix
        np.testing.assert_allclose(u.conj().T @ u, np.eye(len(u)), atol=1e-12)

    def test_shape_errors(self):
        with pytest.raises(q.ShapeError):
            q.apply_gate(ZERO, q.CNOT, (0, 1))
        with pytest.raises(q.ShapeError):
            q.apply_gate(np.kron(ZERO, ZERO), q.H, (0, 1))


class TestMeasurement:
    def test_plus_in_diagonal(self):
        assert q.measure_probs(PLUS, "diagonal") == pytest.approx((1.0, 0.0), abs=1e-15)

    def test_maximally_mixed(self):
        assert q.measure_probs(np.eye(2) / 2, "computational") == pytest.approx((0.5, 0.5))

    def test_damped_plus_in_diagonal(self):
        p = 0.36
        rho = q.apply_channel(PLUS, q.make_channel("amplitude_damping", p))
        oracle = ((1 + np.sqrt(1 - p)) / 2, (1 - np.sqrt(1 - p)) / 2)
        assert oracle == pytest.approx((0.9, 0.1))
        assert q.measure_probs(rho, q.Basis.DIAGONAL) == pytest.approx(oracle, abs=1e-12)

    def test_probabilities_sum_to_one(self):
        rng = np.random.default_rng(3)
        for _ in range(100):
            rho = random_state(rng, 4)
            for basis in q.Basis:
                for t in (0, 1):
                    p0, p1 = q.measure_probs(rho, basis, t)
                    assert p0 + p1 == pytest.approx(1.0, abs=1e-12)

    def test_bell_collapse(self):
        post = q.collapse(q.BELL_PHI_PLUS, "computational", 0, 0)
        np.testing.assert_allclose(post, np.kron(ZERO, ZERO), atol=1e-15)
        assert q.measure_probs(post, "computational", 1) == pytest.approx((1.0, 0.0))

    def test_eigenstate_collapse_is_noop(self):
        np.testing.assert_allclose(q.collapse(PLUS, "diagonal", 0, 0), PLUS, atol=1e-15)

    def test_mixed_collapse(self):
        np.testing.assert_allclose(q.collapse(np.eye(2) / 2, "computational", 0, 1), ONE, atol=1e-15)

    def test_zero_probability_collapse(self):
        with pytest.raises(q.InvalidCollapseError):
            q.collapse(ZERO, "computational", 0, 1)

    def test_collapse_then_measure_is_certain(self):
        rng = np.random.default_rng(8)
        for _ in range(50):
            rho = random_state(rng, 4)
            basis = q.Basis.DIAGONAL if rng.uniform() < 0.5 else q.Basis.COMPUTATIONAL
            t, outcome = int(rng.integers(2)), int(rng.integers(2))
            post = q.collapse(rho, basis, t, outcome)
            assert q.measure_probs(post, basis, t)[outcome] == pytest.approx(1.0, abs=1e-12)


class TestDensityMatrix:
    def test_accepts_valid(self):
        dm = q.DensityMatrix.from_ket(q.KET_MINUS)
        assert dm.dim == 2 and dm.n_qubits == 1

    @pytest.mark.parametrize(
        "bad",
        [np.array([[1, 0.5], [0, 0]]), np.eye(2), np.diag([1.5, -0.5]), np.eye(3) / 3],
    )
    def test_rejects_invalid(self, bad):
        with pytest.raises(q.QuantumError):
            q.DensityMatrix(bad)
