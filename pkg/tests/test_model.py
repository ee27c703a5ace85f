import numpy as np
import pytest

from hqtn_ser.model import (
    backward,
    backward_from_logits,
    batch_loss,
    count_params,
    forward,
    init_hybrid,
    loss_and_grads,
)

from oracles import z_features


def fd_check(params, X, y, h=1e-5):
    """Largest |analytic - numeric| / max(1, |numeric|) over every parameter array."""
    _, grads, _ = loss_and_grads(params, X, y)
    worst = {}
    for name, arr in params.arrays().items():
        flat = arr.reshape(-1)
        num = np.zeros_like(flat)
        for j in range(flat.size):
            old = flat[j]
            flat[j] = old + h
            lp = batch_loss(params, X, y)
            flat[j] = old - h
            lm = batch_loss(params, X, y)
            flat[j] = old
            num[j] = (lp - lm) / (2 * h)
        ana = grads[name].reshape(-1)
        worst[name] = float(np.max(np.abs(ana - num) / np.maximum(1.0, np.abs(num))))
    return worst


def test_zero_quantum_branch_gives_plus_ones():
    p = init_hybrid(32, 5)
    p.theta[:] = 0
    p.projection.P[:] = 0
    p.projection.b[:] = 0
    _, cache = forward(p, np.random.default_rng(0).normal(size=32))
    np.testing.assert_allclose(cache.z_q, 1.0, atol=1e-15)


def test_quantum_branch_matches_dense_oracle():
    p = init_hybrid(32, 5, n_qubits=3, n_layers=2, seed=3)
    x = np.random.default_rng(1).normal(size=32)
    _, cache = forward(p, x)
    u = p.projection.P @ x + p.projection.b
    np.testing.assert_allclose(cache.z_q[0], z_features(3, 2, u, p.theta), atol=1e-12)


def test_classical_only_independent_of_theta():
    p = init_hybrid(32, 5, mode="classical_only")
    x = np.random.default_rng(2).normal(size=(4, 32))
    a, _ = forward(p, x)
    p.theta = np.ones(6)  # not part of this mode
    b, _ = forward(p, x)
    np.testing.assert_array_equal(a, b)
    _, grads, _ = loss_and_grads(p, x, [0, 1, 2, 3])
    assert "theta" not in grads


def test_probabilities_sum_to_one():
    p = init_hybrid(32, 7)
    probs, _ = forward(p, np.random.default_rng(3).normal(size=(10, 32)))
    np.testing.assert_allclose(probs.sum(axis=1), 1.0, atol=1e-12)


def test_head_width_per_mode():
    assert init_hybrid(32, 5, mode="hybrid").head.in_features == 19
    assert init_hybrid(32, 5, mode="classical_only").head.in_features == 16
    assert init_hybrid(32, 5, mode="quantum_only").head.in_features == 3
    with pytest.raises(ValueError):
        init_hybrid(32, 5, mode="both")


def test_end_to_end_gradient_seed42():
    rng = np.random.default_rng(42)
    p = init_hybrid(32, 5, n_qubits=3, n_layers=1, seed=42)
    X, y = rng.normal(size=(4, 32)), rng.integers(0, 5, size=4)
    worst = fd_check(p, X, y)
    assert set(worst) >= {"theta", "proj.P", "proj.b", "enc0.W", "enc1.b", "head.W"}
    assert max(worst.values()) <= 1e-5, worst


@pytest.mark.parametrize("n,L,mode", [(2, 1, "hybrid"), (3, 2, "quantum_only"), (4, 1, "hybrid"), (4, 2, "quantum_only")])
def test_end_to_end_gradient_sizes(n, L, mode):
    rng = np.random.default_rng(n * 10 + L)
    p = init_hybrid(8, 3, n_qubits=n, n_layers=L, mode=mode, hidden=(6,), latent=4, seed=n + L)
    X, y = rng.normal(size=(3, 8)), rng.integers(0, 3, size=3)
    assert max(fd_check(p, X, y).values()) <= 1e-5


def test_mode_consistency_with_zeroed_quantum_block():
    h = init_hybrid(32, 5, seed=9)
    c = init_hybrid(32, 5, mode="classical_only", seed=9)
    h.head.weight[:, 16:] = 0
    c.head.weight[...] = h.head.weight[:, :16]
    c.head.bias[...] = h.head.bias
    X = np.random.default_rng(4).normal(size=(6, 32))
    np.testing.assert_allclose(forward(h, X)[0], forward(c, X)[0], atol=1e-12)


def test_zero_upstream_gives_zero_grads():
    p = init_hybrid(32, 5)
    X = np.random.default_rng(5).normal(size=(3, 32))
    _, cache = forward(p, X)
    grads = backward_from_logits(p, cache, np.zeros((3, 5)))
    for name, g in grads.items():
        assert g.shape == p.arrays()[name].shape
        assert not np.any(g), name


def test_backward_matches_loss_and_grads():
    p = init_hybrid(32, 5)
    X = np.random.default_rng(6).normal(size=(3, 32))
    y = [0, 2, 4]
    _, cache = forward(p, X)
    a = backward(p, cache, y)
    _, b, _ = loss_and_grads(p, X, y)
    for k in a:
        np.testing.assert_array_equal(a[k], b[k])


def test_count_params():
    c = count_params(init_hybrid(32, 5, n_qubits=3, n_layers=1))
    assert c["quantum"] == 6 and c["projection"] == 99
    assert c["encoder"] == 32 * 64 + 64 + 64 * 16 + 16
    assert c["head"] == 19 * 5 + 5
    assert c["total"] == 3357
    assert count_params(init_hybrid(32, 8, n_qubits=4, n_layers=2))["quantum"] == 16
    co = count_params(init_hybrid(32, 5, mode="classical_only"))
    assert co["quantum"] == 0 and co["projection"] == 0


def test_deterministic():
    X = np.random.default_rng(7).normal(size=(5, 32))
    a, _ = forward(init_hybrid(32, 5, seed=42), X)
    b, _ = forward(init_hybrid(32, 5, seed=42), X)
    assert a.tobytes() == b.tobytes()


def test_shot_forward_needs_rng():
    p = init_hybrid(32, 5)
    with pytest.raises(ValueError):
        forward(p, np.zeros(32), shots=100)
