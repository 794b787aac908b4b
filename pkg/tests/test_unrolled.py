import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import fd_gradient, kink_distance, ref_forward, ref_ista, tiny_instance
from sparsenas import activations as acts
from sparsenas.datagen import Dictionary, make_dictionary
from sparsenas.errors import ContractError, DivergenceError
from sparsenas.nas import EIGHT_OPS, FOUR_OPS
from sparsenas.solvers import ista
from sparsenas.unrolled import (
    ArchParams,
    UnrolledModel,
    backward,
    binarize,
    build_model,
    forward,
    gradient_step,
    load_checkpoint,
    loss_and_grad,
    mixed_activation,
    mse_loss,
    predict,
    save_checkpoint,
    winning_ops,
)


def one_hot_alpha(rows, J, j, mag=50.0):
    a = np.full((rows, J), -mag)
    a[:, j] = mag
    return a


def random_model(seed, K=5, ops=FOUR_OPS, mode="per-layer", lam=0.05, count=3):
    rng = np.random.default_rng(seed)
    d, Z, X = tiny_instance(seed, count=count)
    m = build_model(d, K, ops, mode, lam=lam)
    return m.with_alpha(rng.standard_normal(m.arch.alpha.shape)), X, Z


def test_gradient_step_examples():
    d = make_dictionary(0, 3, 4)
    x = np.array([1.0, -2.0, 0.5])
    assert np.allclose(gradient_step(np.zeros(4), x, d, 0.1), 0.1 * d.W.T @ x)
    z = np.array([0.2, 0.0, -1.0, 3.0])
    assert np.array_equal(gradient_step(z, d.W @ z, d, 0.1), z)
    hand = Dictionary.from_matrix([[1.0, 0.0, 2.0], [0.0, 1.0, 1.0]])
    # W z - x = [3-1, 1-0] = [2, 1]; W^T [2, 1] = [2, 1, 5]
    out = gradient_step(np.array([1.0, 0.0, 1.0]), np.array([1.0, 0.0]), hand, 0.5)
    assert np.allclose(out, [0.0, -0.5, -1.5])
    with pytest.raises(ContractError):
        gradient_step(np.zeros(3), x, d, 0.1)


def test_mixed_activation_examples():
    u = np.array([-2.0, -0.1, 0.4, 3.0])
    assert np.array_equal(mixed_activation(u, [0.0, 1.0], [acts.RELU, acts.IDENTITY]), u)
    s = acts.shrink(0.3)
    assert np.array_equal(mixed_activation(u, [1.0, 0.0], [s, acts.TANH]), acts.act(s, u))
    assert mixed_activation(np.array([-2.0]), [0.5, 0.5], [acts.RELU, acts.IDENTITY])[0] == -1.0
    with pytest.raises(ContractError):
        mixed_activation(u, [0.5, 0.25, 0.25], [acts.RELU, acts.IDENTITY])


@pytest.mark.parametrize("K", [1, 10, 100])
def test_one_hot_shrink_forward_is_ista(K):
    d, _, X = tiny_instance(3, count=6)
    m = build_model(d, K, FOUR_OPS, lam=1e-3)
    m = m.with_alpha(one_hot_alpha(K, 4, 0))
    z, _ = forward(m, X)
    assert np.max(np.abs(z - ista(X, d, m.lam, m.eta, K))) <= 1e-10
    assert np.allclose(z[:, 0], ref_ista(X[:, 0], d.W, m.lam, m.eta, K), atol=1e-10)


def test_single_identity_layer():
    d, _, X = tiny_instance(4)
    m = build_model(d, 1, FOUR_OPS).with_alpha(one_hot_alpha(1, 4, 3))
    z, _ = forward(m, X[:, 0])
    assert np.allclose(z, m.eta * d.W.T @ X[:, 0], rtol=1e-14, atol=1e-18)


@pytest.mark.parametrize("mode", ["per-layer", "looped"])
def test_zero_signal_is_a_fixed_point(mode):
    ops = ("shrink", "identity", "tanh", "tanhshrink", "relu", "gelu", "elu")
    d = make_dictionary(1, 6, 9)
    m = build_model(d, 7, ops, mode)
    m = m.with_alpha(np.random.default_rng(0).standard_normal(m.arch.alpha.shape))
    z, _ = forward(m, np.zeros((6, 2)))
    assert np.all(z == 0)


@pytest.mark.parametrize("seed", range(4))
def test_forward_matches_reference(seed):
    m, X, _ = random_model(seed, K=6, ops=EIGHT_OPS)
    z, _ = forward(m, X)
    for b in range(X.shape[1]):
        assert np.allclose(z[:, b], ref_forward(m, X[:, b]), rtol=1e-12, atol=1e-15)
    # BLAS may reorder sums for other batch shapes, so chunked output agrees to rounding
    assert np.allclose(predict(m, X, chunk=2), z, rtol=1e-13, atol=1e-16)


def test_forward_vector_and_batch_agree():
    m, X, _ = random_model(7)
    zb, _ = forward(m, X)
    zv, _ = forward(m, X[:, 1])
    assert np.allclose(zv, zb[:, 1], rtol=1e-13, atol=1e-16)


@pytest.mark.filterwarnings("ignore::RuntimeWarning")
def test_forward_divergence_names_layer():
    d, _, X = tiny_instance(2)
    m = build_model(d, 400, FOUR_OPS, eta=1.0).with_alpha(one_hot_alpha(400, 4, 3))
    with pytest.raises(DivergenceError, match=r"layer \d+"):
        forward(m, X)


def test_mse_loss_examples():
    assert mse_loss([1.0, 2.0], [1.0, 2.0]) == 0
    assert mse_loss(np.ones(5) + 3, np.full(5, 3.0)) == 1
    assert mse_loss([1.0, 2.0], [0.0, 0.0]) == 2.5
    with pytest.raises(ContractError):
        mse_loss([1.0], [1.0, 2.0])


def test_gradient_zero_at_exact_fit():
    m, X, _ = random_model(1)
    z, cache = forward(m, X)
    assert np.all(backward(m, cache, z) == 0)


def test_gradient_zero_for_identical_ops():
    d, Z, X = tiny_instance(2, count=4)
    arch = ArchParams("per-layer", (acts.IDENTITY,) * 3, np.random.default_rng(1).standard_normal((4, 3)))
    m = UnrolledModel(d, 4, 1 / d.c, 0.0, arch)
    _, g = loss_and_grad(m, X, Z)
    assert np.all(g == 0)


def test_backward_rejects_foreign_cache():
    m, X, Z = random_model(1)
    other, _, _ = random_model(1, K=4)
    _, cache = forward(other, X)
    with pytest.raises(ContractError):
        backward(m, cache, Z)


@pytest.mark.parametrize("seed,mode,ops", [(0, "per-layer", FOUR_OPS), (1, "looped", FOUR_OPS),
                                           (2, "per-layer", EIGHT_OPS)])
def test_gradient_matches_finite_differences(seed, mode, ops):
    m, X, Z = random_model(seed, K=4, ops=ops, mode=mode, count=2)
    assert kink_distance(m, X) > 1e-4
    _, g = loss_and_grad(m, X, Z)
    fd = fd_gradient(m, X, Z)
    assert np.max(np.abs(g - fd) / np.maximum(np.abs(g), np.abs(fd))) <= 1e-6


@given(st.integers(0, 10**6), st.integers(1, 6))
@settings(max_examples=15, deadline=None)
def test_looped_gradient_is_sum_of_tied_rows(seed, K):
    looped, X, Z = random_model(seed, K=K, mode="looped")
    tied = build_model(looped.dictionary, K, FOUR_OPS, "per-layer", lam=looped.lam)
    tied = tied.with_alpha(np.repeat(looped.arch.alpha, K, axis=0))
    zl, gl = loss_and_grad(looped, X, Z)
    zt, gt = loss_and_grad(tied, X, Z)
    assert zl == zt
    assert np.max(np.abs(gl[0] - gt.sum(axis=0))) <= 1e-12


@given(st.integers(0, 10**6), st.permutations(range(4)))
@settings(max_examples=15, deadline=None)
def test_operator_permutation_equivariance(seed, perm):
    m, X, Z = random_model(seed, K=3)
    perm = list(perm)
    permuted = build_model(m.dictionary, 3, [FOUR_OPS[j] for j in perm], lam=m.lam)
    permuted = permuted.with_alpha(m.arch.alpha[:, perm])
    l1, g1 = loss_and_grad(m, X, Z)
    l2, g2 = loss_and_grad(permuted, X, Z)
    assert l1 == pytest.approx(l2, rel=1e-13)
    assert np.allclose(g2, g1[:, perm], rtol=1e-10, atol=1e-20)


@given(st.integers(0, 10**6), st.floats(-20, 20))
@settings(max_examples=15, deadline=None)
def test_alpha_shift_invariance(seed, shift):
    m, X, Z = random_model(seed, K=3)
    l1, g1 = loss_and_grad(m, X, Z)
    l2, g2 = loss_and_grad(m.with_alpha(m.arch.alpha + shift), X, Z)
    assert l1 == pytest.approx(l2, rel=1e-12)
    # softmax gradients sum to zero across operators
    assert np.allclose(g1.sum(axis=1), 0, atol=1e-15 + 1e-12 * np.abs(g1).max())


def test_binarize_examples():
    arch = ArchParams("per-layer", tuple(acts.from_name(o) for o in FOUR_OPS),
                      np.array([[3.0, 1, 1, 1], [2.0, 2, 0, 0], [0.0, 0, 0, 5]]))
    hard = binarize(arch)
    w = hard.weights
    assert np.all(w[:, 1:3][:2].sum(axis=1) + w[:2, 3] < 1e-40)
    assert np.array_equal(np.argmax(hard.alpha, axis=1), [0, 0, 3])
    assert winning_ops(arch) == ["shrink", "shrink", "identity"]


def test_build_model_defaults():
    d = make_dictionary(0, 5, 8)
    m = build_model(d, 3, FOUR_OPS)
    assert m.eta == 1 / d.c and m.lam == 0.01 / d.c
    assert np.all(m.arch.alpha == 1.0) and m.arch.alpha.shape == (3, 4)
    assert build_model(d, 3, FOUR_OPS, "looped").arch.alpha.shape == (1, 4)
    with pytest.raises(ContractError):
        build_model(d, 0, FOUR_OPS)


def test_checkpoint_round_trip(tmp_path):
    m, X, _ = random_model(5, ops=("relu", "elu", "tanh"), mode="looped")
    save_checkpoint(m, tmp_path / "ck")
    back = load_checkpoint(tmp_path / "ck", m.dictionary)
    assert np.array_equal(back.arch.alpha, m.arch.alpha) and back.arch.ops == m.arch.ops
    assert (back.K, back.eta, back.lam, back.arch.mode) == (m.K, m.eta, m.lam, m.arch.mode)
    assert np.array_equal(predict(back, X), predict(m, X))
