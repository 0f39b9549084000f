"""Finite-difference gradient checks for every differentiable operation,
at 64-bit precision, over multiple random seeds."""

import numpy as np
import pytest

from conftest import fd_check

from paratope.autodiff import (
    BatchNormState,
    Parameter,
    Tensor,
    batch_norm,
    clip,
    concat,
    conv1d_dilated,
    div,
    dropout,
    elu,
    exp,
    gather,
    leaky_relu,
    log,
    matmul,
    mul,
    sigmoid,
    softmax_masked,
    sqrt,
    square,
    tensor_mean,
    tensor_sum,
    transpose,
    weighted_sum,
)

SEEDS = range(10)


def _param(rng, shape, name="p", away_from_zero=False):
    vals = rng.normal(size=shape)
    if away_from_zero:
        # keep inputs off activation kinks so finite differences stay valid
        vals = np.sign(vals) * (np.abs(vals) + 0.1)
    return Parameter(vals, name, dtype=np.float64)


@pytest.mark.parametrize("seed", SEEDS)
def test_matmul_2d(seed):
    rng = np.random.default_rng(seed)
    a = _param(rng, (3, 4), "a")
    b = _param(rng, (4, 2), "b")
    fd_check(lambda: tensor_sum(square(matmul(a, b))), [a, b])


@pytest.mark.parametrize("seed", SEEDS[:4])
def test_matmul_batched(seed):
    rng = np.random.default_rng(seed)
    a = _param(rng, (2, 3, 4), "a")
    w = _param(rng, (4, 5), "w")
    b = _param(rng, (2, 5, 3), "b")
    fd_check(lambda: tensor_sum(square(matmul(matmul(a, w), b))), [a, w, b])


@pytest.mark.parametrize("seed", SEEDS[:4])
def test_elementwise_chain(seed):
    rng = np.random.default_rng(seed)
    a = _param(rng, (4, 3), "a", away_from_zero=True)
    b = _param(rng, (4, 3), "b", away_from_zero=True)
    fd_check(lambda: tensor_sum(div(mul(a, b), square(b) + 1.5)), [a, b])


@pytest.mark.parametrize("seed", SEEDS[:4])
def test_exp_log_sqrt(seed):
    rng = np.random.default_rng(seed)
    a = Parameter(rng.uniform(0.5, 2.0, size=(5,)), "a", dtype=np.float64)
    fd_check(lambda: tensor_sum(mul(log(a), sqrt(exp(a)))), [a])


@pytest.mark.parametrize("seed", SEEDS[:4])
def test_concat_transpose_slice(seed):
    rng = np.random.default_rng(seed)
    a = _param(rng, (3, 2), "a")
    b = _param(rng, (3, 4), "b")

    def loss():
        joined = concat([a, b], axis=1)
        return tensor_sum(square(transpose(joined)[1:4, :2]))

    fd_check(loss, [a, b])


@pytest.mark.parametrize("seed", SEEDS)
def test_activations(seed):
    rng = np.random.default_rng(seed)
    x = _param(rng, (4, 5), "x", away_from_zero=True)
    fd_check(lambda: tensor_sum(elu(x)), [x], tol=1e-6)
    fd_check(lambda: tensor_sum(leaky_relu(x, 0.2)), [x], tol=1e-6)
    fd_check(lambda: tensor_sum(square(sigmoid(x))), [x], tol=1e-6)


def test_elu_gradient_identity_below_zero():
    # d/dx elu(x) = elu(x) + 1 for x < 0
    x = Parameter(np.linspace(-3.0, -0.2, 7), "x", dtype=np.float64)
    out = elu(x)
    tensor_sum(out).backward()
    np.testing.assert_allclose(x.grad, out.data + 1.0, rtol=1e-12)


@pytest.mark.parametrize("seed", SEEDS)
def test_softmax_masked(seed):
    rng = np.random.default_rng(seed)
    logits = _param(rng, (3, 6), "logits")
    mask = (rng.random((3, 6)) > 0.3).astype(float)
    mask[:, 0] = 1.0
    weights = rng.normal(size=(3, 6))
    fd_check(lambda: tensor_sum(mul(softmax_masked(logits, mask), weights)), [logits])


@pytest.mark.parametrize("seed", SEEDS)
@pytest.mark.parametrize("dilation", [1, 2, 4])
def test_conv1d_dilated(seed, dilation):
    rng = np.random.default_rng(seed)
    x = _param(rng, (2, 9, 3), "x")
    kernel = _param(rng, (3, 3, 4), "k")
    fd_check(lambda: tensor_sum(square(conv1d_dilated(x, kernel, dilation))), [x, kernel])


@pytest.mark.parametrize("seed", SEEDS[:4])
def test_batch_norm_train_mode(seed):
    rng = np.random.default_rng(seed)
    x = _param(rng, (3, 4, 2), "x")
    gamma = Parameter(rng.uniform(0.5, 1.5, size=2), "gamma", dtype=np.float64)
    beta = _param(rng, (2,), "beta")
    mask = np.ones((3, 4))
    mask[1, 2:] = 0.0
    weights = rng.normal(size=(3, 4, 2))

    def loss():
        out = batch_norm(x, gamma, beta, BatchNormState(2, np.float64),
                         train=True, mask=mask)
        return tensor_sum(mul(out, weights))

    fd_check(loss, [x, gamma, beta])


@pytest.mark.parametrize("seed", SEEDS[:4])
def test_batch_norm_infer_mode(seed):
    rng = np.random.default_rng(seed)
    x = _param(rng, (2, 3, 2), "x")
    gamma = Parameter(rng.uniform(0.5, 1.5, size=2), "gamma", dtype=np.float64)
    beta = _param(rng, (2,), "beta")
    state = BatchNormState(2, np.float64)
    state.running_mean = rng.normal(size=2)
    state.running_var = rng.uniform(0.5, 2.0, size=2)
    fd_check(lambda: tensor_sum(square(batch_norm(x, gamma, beta, state, train=False))),
             [x, gamma, beta])


@pytest.mark.parametrize("seed", SEEDS[:4])
def test_dropout_fixed_mask(seed):
    rng = np.random.default_rng(seed)
    x = _param(rng, (4, 5), "x")
    fd_check(lambda: tensor_sum(square(dropout(x, 0.4, train=True,
                                               rng=np.random.default_rng(123)))), [x])


@pytest.mark.parametrize("seed", SEEDS[:4])
def test_gather_and_weighted_sum(seed):
    rng = np.random.default_rng(seed)
    values = _param(rng, (2, 6, 3), "values")
    scores = _param(rng, (2, 6), "scores")
    index = rng.integers(0, 6, size=(2, 4, 3))
    weights = _param(rng, (2, 4, 3), "weights")

    def loss():
        picked = gather(values, index)           # [2, 4, 3, 3]
        srow = gather(scores, index)             # [2, 4, 3]
        return tensor_sum(square(weighted_sum(mul(weights, srow), picked)))

    fd_check(loss, [values, scores, weights])


@pytest.mark.parametrize("seed", SEEDS[:4])
def test_clip_and_mean(seed):
    rng = np.random.default_rng(seed)
    x = Parameter(rng.uniform(0.2, 0.8, size=(6,)), "x", dtype=np.float64)
    fd_check(lambda: tensor_mean(square(clip(x, 0.05, 0.95))), [x])


class TestConvAgainstDirectSummation:
    """The shifted-matmul convolution must equal a brute-force oracle."""

    @staticmethod
    def direct_conv(x, kernel, dilation):
        B, L, c_in = x.shape
        K, _, c_out = kernel.shape
        out = np.zeros((B, L, c_out))
        for b in range(B):
            for t in range(L):
                for k in range(K):
                    src = t + (k - (K - 1) // 2) * dilation
                    if 0 <= src < L:
                        out[b, t] += x[b, src] @ kernel[k]
        return out

    @pytest.mark.parametrize("dilation", [1, 2, 3, 4])
    @pytest.mark.parametrize("length", [1, 5, 16])
    def test_matches_oracle(self, dilation, length):
        rng = np.random.default_rng(dilation * 100 + length)
        x = rng.normal(size=(2, length, 3))
        kernel = rng.normal(size=(3, 3, 5))
        got = conv1d_dilated(Tensor(x), Tensor(kernel), dilation).data
        np.testing.assert_allclose(got, self.direct_conv(x, kernel, dilation), atol=1e-12)
