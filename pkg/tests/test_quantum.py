import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hqtn_ser.quantum import (
    CapacityError,
    angle_encode,
    apply_cnot,
    apply_ry,
    apply_rz,
    build_mps_circuit,
    expect_z,
    param_shift_jacobian,
    quantum_features,
    run_circuit,
    sample_z_estimates,
    zero_state,
)

import oracles

S2 = 2**-0.5


class TestGates:
    def test_zero_state(self):
        np.testing.assert_array_equal(zero_state(1).amplitudes, [1, 0])
        s = zero_state(3)
        assert len(s.amplitudes) == 8 and s.amplitudes[0] == 1 and s.norm() == 1
        with pytest.raises(CapacityError):
            zero_state(9)
        with pytest.raises(CapacityError):
            zero_state(0)

    def test_ry(self):
        np.testing.assert_allclose(apply_ry(zero_state(1), 0, 0.0).amplitudes, [1, 0])
        np.testing.assert_allclose(apply_ry(zero_state(1), 0, np.pi).amplitudes, [0, 1], atol=1e-15)
        np.testing.assert_allclose(apply_ry(zero_state(1), 0, np.pi / 2).amplitudes, [S2, S2])
        with pytest.raises(IndexError):
            apply_ry(zero_state(2), 2, 0.1)

    def test_rz(self):
        s = apply_ry(zero_state(2), 1, 0.7)
        before = s.copy()
        apply_rz(s, 1, 0.0)
        np.testing.assert_array_equal(s.amplitudes, before.amplitudes)
        apply_rz(s, 1, 1.3)
        assert expect_z(s, 1) == pytest.approx(expect_z(before, 1), abs=1e-14)

    def test_rz_flips_x(self):
        plus = apply_ry(zero_state(1), 0, np.pi / 2)
        out = apply_rz(plus.copy(), 0, np.pi)
        expected = oracles.rz(np.pi) @ np.array([S2, S2])
        np.testing.assert_allclose(out.amplitudes, expected, atol=1e-15)
        X = np.array([[0, 1], [1, 0]])
        x_before = np.vdot(plus.amplitudes, X @ plus.amplitudes).real
        x_after = np.vdot(out.amplitudes, X @ out.amplitudes).real
        assert x_after == pytest.approx(-x_before)

    def test_cnot_truth_table(self):
        s = apply_cnot(zero_state(2), 0, 1)
        np.testing.assert_array_equal(s.amplitudes, [1, 0, 0, 0])
        s = apply_cnot(apply_ry(zero_state(2), 0, np.pi), 0, 1)  # |10> -> |11>
        np.testing.assert_allclose(np.abs(s.amplitudes), [0, 0, 0, 1], atol=1e-15)
        with pytest.raises(ValueError):
            apply_cnot(zero_state(2), 1, 1)

    def test_bell_state(self):
        s = apply_cnot(apply_ry(zero_state(2), 0, np.pi / 2), 0, 1)
        np.testing.assert_allclose(s.amplitudes, [S2, 0, 0, S2], atol=1e-15)
        assert expect_z(s, 0) == pytest.approx(0, abs=1e-15)
        assert expect_z(s, 1) == pytest.approx(0, abs=1e-15)

    @pytest.mark.parametrize("n", [2, 3, 4])
    def test_cnot_matches_permutation_oracle(self, n):
        rng = np.random.default_rng(n)
        psi = rng.normal(size=2**n) + 1j * rng.normal(size=2**n)
        psi /= np.linalg.norm(psi)
        for c in range(n):
            for t in range(n):
                if c == t:
                    continue
                from hqtn_ser.quantum import StateVector

                s = apply_cnot(StateVector(psi.copy(), n), c, t)
                np.testing.assert_allclose(s.amplitudes, oracles.cnot_matrix(c, t, n) @ psi, atol=1e-15)


class TestEncoding:
    def test_zeros(self):
        np.testing.assert_array_equal(angle_encode(np.zeros(3)).amplitudes, zero_state(3).amplitudes)

    def test_flip_first_qubit(self):
        s = angle_encode([np.pi, 0, 0])
        np.testing.assert_allclose(np.abs(s.amplitudes), np.eye(8)[4], atol=1e-15)

    @pytest.mark.parametrize("u", np.linspace(-4, 4, 9))
    def test_single_qubit_cos(self, u):
        assert expect_z(angle_encode([u]), 0) == pytest.approx(np.cos(u), abs=1e-14)


class TestCircuit:
    def test_counts(self):
        c = build_mps_circuit(3, 1)
        assert c.n_params == 6 and c.n_cnots == 2
        c = build_mps_circuit(4, 2)
        assert c.n_params == 16 and c.n_cnots == 6

    def test_plan_n2(self):
        plan = build_mps_circuit(2, 1).gate_plan
        assert [(g.kind, g.qubits) for g in plan] == [
            ("RZ", (0,)), ("RY", (0,)), ("RZ", (1,)), ("RY", (1,)), ("CNOT", (0, 1))
        ]

    def test_nearest_neighbour_only(self):
        for g in build_mps_circuit(6, 3).gate_plan:
            if g.kind == "CNOT":
                assert g.qubits[1] - g.qubits[0] == 1

    def test_invalid(self):
        with pytest.raises(ValueError):
            build_mps_circuit(1, 1)
        with pytest.raises(ValueError):
            run_circuit(build_mps_circuit(3, 1), np.zeros(3), np.zeros(5))

    def test_zero_parameters(self):
        c = build_mps_circuit(3, 1)
        s = run_circuit(c, np.zeros(3), np.zeros(6))
        np.testing.assert_allclose(s.amplitudes, np.eye(8)[0], atol=1e-15)

    def test_zero_theta_is_encoding_plus_cnots(self):
        c = build_mps_circuit(3, 1)
        u = np.array([0.3, -1.1, 2.0])
        s = angle_encode(u)
        apply_cnot(s, 0, 1)
        apply_cnot(s, 1, 2)
        np.testing.assert_allclose(run_circuit(c, u, np.zeros(6)).amplitudes, s.amplitudes, atol=1e-15)

    @pytest.mark.parametrize("seed", range(10))
    def test_dense_oracle(self, seed):
        rng = np.random.default_rng(seed)
        n, L = 3, 1 + seed % 2
        u = rng.uniform(-np.pi, np.pi, n)
        th = rng.uniform(-np.pi, np.pi, 2 * n * L)
        got = run_circuit(build_mps_circuit(n, L), u, th).amplitudes
        np.testing.assert_allclose(got, oracles.circuit_state(n, L, u, th), atol=1e-12)

    def test_features_half_pi_inputs(self):
        # theta = 0, u = pi/2 everywhere: product |+>^n through CNOT(0,1), CNOT(1,2)
        c = build_mps_circuit(3, 1)
        u = np.full(3, np.pi / 2)
        np.testing.assert_allclose(quantum_features(c, u, np.zeros(6)), oracles.z_features(3, 1, u, np.zeros(6)), atol=1e-14)

    def test_features_bounded(self):
        rng = np.random.default_rng(11)
        c = build_mps_circuit(4, 2)
        for _ in range(1000):
            z = quantum_features(c, rng.normal(size=4) * 3, rng.normal(size=16) * 3)
            assert np.all(np.abs(z) <= 1 + 1e-12)


class TestParamShift:
    def test_single_encode_derivative(self):
        # d/du <Z> of RY(u)|0> through a 2-qubit circuit with zero theta on qubit 0
        c = build_mps_circuit(2, 1)
        J = param_shift_jacobian(c, [np.pi / 2, 0.0], np.zeros(4))
        assert J.shape == (2, 6)
        assert J[0, 4] == pytest.approx(-1.0, abs=1e-14)

    @pytest.mark.parametrize("seed", range(10))
    def test_matches_finite_difference(self, seed):
        rng = np.random.default_rng(100 + seed)
        n, L = 2 + seed % 3, 1 + seed % 2
        c = build_mps_circuit(n, L)
        u, th = rng.normal(size=n), rng.normal(size=2 * n * L)
        J = param_shift_jacobian(c, u, th)
        P = c.n_params
        fd_theta = oracles.central_difference(lambda t: quantum_features(c, u, t), th)
        fd_u = oracles.central_difference(lambda v: quantum_features(c, v, th), u)
        np.testing.assert_allclose(J[:, :P], fd_theta, atol=1e-6)
        np.testing.assert_allclose(J[:, P:], fd_u, atol=1e-6)

    def test_stationary_point(self):
        # with u = 0 every RY/RZ starts from |0>; d<Z>/d theta_z vanishes (RZ only adds phase)
        c = build_mps_circuit(3, 1)
        J = param_shift_jacobian(c, np.zeros(3), np.zeros(6))
        np.testing.assert_allclose(J[:, 0], 0.0, atol=1e-15)


class TestSampling:
    def test_deterministic_outcome(self):
        np.testing.assert_array_equal(sample_z_estimates(zero_state(3), 100, 0), [1, 1, 1])

    def test_reproducible(self):
        s = angle_encode([0.4, 1.2, -0.8])
        np.testing.assert_array_equal(sample_z_estimates(s, 1024, 7), sample_z_estimates(s, 1024, 7))

    def test_shots_zero(self):
        with pytest.raises(ValueError):
            sample_z_estimates(zero_state(1), 0, 0)

    def test_large_shot_limit(self):
        s = angle_encode([0.4, 1.2, -0.8])
        est = sample_z_estimates(s, 10**6, 1)
        exact = [expect_z(s, k) for k in range(3)]
        assert np.max(np.abs(est - exact)) <= 0.005


def _random_gate_sequence(rng, n, count):
    ops = []
    for _ in range(count):
        kind = rng.integers(3)
        if kind == 2 and n > 1:
            c = int(rng.integers(n))
            t = int((c + 1 + rng.integers(n - 1)) % n)
            ops.append(("CNOT", c, t))
        else:
            ops.append(("RY" if kind == 0 else "RZ", int(rng.integers(n)), float(rng.uniform(-7, 7))))
    return ops


def _apply(s, op, sign=1.0):
    if op[0] == "CNOT":
        return apply_cnot(s, op[1], op[2])
    fn = apply_ry if op[0] == "RY" else apply_rz
    return fn(s, op[1], sign * op[2])


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 2**31 - 1), n=st.integers(1, 5))
def test_norm_and_inverse_property(seed, n):
    rng = np.random.default_rng(seed)
    s = angle_encode(rng.uniform(-3, 3, n))
    start = s.copy()
    ops = _random_gate_sequence(rng, n, 30)
    for op in ops:
        _apply(s, op)
    assert abs(s.norm() - 1) < 1e-12
    for op in reversed(ops):
        _apply(s, op, -1.0)
    np.testing.assert_allclose(s.amplitudes, start.amplitudes, atol=1e-12)


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 2**31 - 1), phi=st.floats(-10, 10))
def test_rz_never_changes_own_z(seed, phi):
    rng = np.random.default_rng(seed)
    n = 3
    s = run_circuit(build_mps_circuit(n, 1), rng.normal(size=n), rng.normal(size=6))
    k = int(rng.integers(n))
    before = expect_z(s, k)
    assert expect_z(apply_rz(s, k, phi), k) == pytest.approx(before, abs=1e-14)
