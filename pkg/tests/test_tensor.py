"""Semantics of the tensor core: shapes, values, masking, and the backward
contract.  Gradient accuracy lives in test_gradcheck.py."""

import numpy as np
import pytest

from paratope.autodiff import (
    Parameter,
    Tensor,
    batch_norm,
    BatchNormState,
    concat,
    conv1d_dilated,
    dropout,
    elu,
    leaky_relu,
    matmul,
    mul,
    no_grad,
    sigmoid,
    softmax_masked,
    tensor_sum,
    xavier_init,
)
from paratope.errors import NumericError


class TestArithmetic:
    def test_identity_matmul(self):
        x = Tensor(np.arange(12, dtype=np.float64).reshape(3, 4))
        eye = Tensor(np.eye(3))
        np.testing.assert_array_equal(matmul(eye, x).data, x.data)

    def test_matmul_shape_error_names_both_shapes(self):
        a = Tensor(np.zeros((2, 3)))
        b = Tensor(np.zeros((4, 2)))
        with pytest.raises(ValueError, match=r"\(2, 3\).*\(4, 2\)"):
            matmul(a, b)

    def test_concat_last_axis(self):
        a = Tensor(np.ones((2, 3)))
        b = Tensor(np.ones((2, 4)))
        assert concat([a, b], axis=-1).shape == (2, 7)

    def test_concat_gradient_splits(self):
        a = Parameter(np.ones((2, 3)), "a", dtype=np.float64)
        b = Parameter(np.ones((2, 4)), "b", dtype=np.float64)
        out = tensor_sum(mul(concat([a, b], axis=1), 2.0))
        out.backward()
        np.testing.assert_array_equal(a.grad, np.full((2, 3), 2.0))
        np.testing.assert_array_equal(b.grad, np.full((2, 4), 2.0))

    def test_broadcast_add_reduces_gradient(self):
        x = Parameter(np.zeros((2, 5, 3)), "x", dtype=np.float64)
        bias = Parameter(np.zeros(3), "bias", dtype=np.float64)
        (x + bias).sum().backward()
        np.testing.assert_array_equal(bias.grad, np.full(3, 10.0))


class TestActivations:
    def test_leaky_relu_negative_slope(self):
        x = Tensor(np.array([-1.0]))
        assert leaky_relu(x, 0.2).data[0] == pytest.approx(-0.2)

    def test_elu_and_sigmoid_at_zero(self):
        assert elu(Tensor(np.array([0.0]))).data[0] == 0.0
        assert sigmoid(Tensor(np.array([0.0]))).data[0] == pytest.approx(0.5)

    def test_elu_negative_matches_expm1(self):
        x = np.array([-2.0, -0.5])
        np.testing.assert_allclose(elu(Tensor(x)).data, np.expm1(x), rtol=1e-6)


class TestSoftmaxMasked:
    def test_uniform_logits(self):
        logits = Tensor(np.zeros((1, 4)))
        out = softmax_masked(logits, np.ones((1, 4)))
        np.testing.assert_allclose(out.data, 0.25)

    def test_single_unmasked_entry(self):
        logits = Tensor(np.array([[5.0, -3.0, 2.0]]))
        mask = np.array([[0.0, 1.0, 0.0]])
        np.testing.assert_array_equal(softmax_masked(logits, mask).data,
                                      np.array([[0.0, 1.0, 0.0]]))

    def test_shift_invariance(self):
        rng = np.random.default_rng(0)
        logits = rng.normal(size=(3, 6))
        mask = np.ones((3, 6))
        a = softmax_masked(Tensor(logits), mask).data
        b = softmax_masked(Tensor(logits + 123.4), mask).data
        np.testing.assert_allclose(a, b, atol=1e-12)

    def test_rows_sum_to_one_and_masked_exactly_zero(self):
        rng = np.random.default_rng(1)
        logits = Tensor(rng.normal(size=(5, 8)))
        mask = (rng.random((5, 8)) > 0.4).astype(float)
        mask[:, 0] = 1.0
        out = softmax_masked(logits, mask).data
        assert np.all(out[mask == 0] == 0.0)
        np.testing.assert_allclose(out.sum(axis=-1), 1.0, atol=1e-6)

    def test_fully_masked_row_rejected(self):
        with pytest.raises(ValueError, match="fully masked"):
            softmax_masked(Tensor(np.zeros((2, 3))), np.array([[1, 1, 1], [0, 0, 0]]))


class TestConv:
    def test_pointwise_identity_kernel(self):
        rng = np.random.default_rng(2)
        x = Tensor(rng.normal(size=(2, 9, 4)))
        kernel = Tensor(np.eye(4)[None, :, :])  # K=1
        np.testing.assert_allclose(conv1d_dilated(x, kernel, 1).data, x.data, atol=1e-12)

    def test_delta_input_dilation_4(self):
        # A unit impulse at the center spreads only to offsets {-4, 0, +4}.
        L = 16
        x = np.zeros((1, L, 1))
        x[0, 8, 0] = 1.0
        kernel = Tensor(np.ones((3, 1, 1)))
        out = conv1d_dilated(Tensor(x), kernel, dilation=4).data[0, :, 0]
        # input at position 8 contributes to outputs at 8 -+ 4
        assert set(np.nonzero(out)[0]) == {4, 8, 12}

    def test_even_kernel_rejected(self):
        with pytest.raises(ValueError, match="odd"):
            conv1d_dilated(Tensor(np.zeros((1, 4, 2))), Tensor(np.zeros((2, 2, 2))), 1)

    def test_shape_mismatch_rejected(self):
        with pytest.raises(ValueError, match="incompatible"):
            conv1d_dilated(Tensor(np.zeros((1, 4, 3))), Tensor(np.zeros((3, 2, 2))), 1)


class TestBatchNorm:
    def test_train_mode_normalizes(self):
        rng = np.random.default_rng(3)
        x = Tensor(rng.normal(2.0, 3.0, size=(4, 6, 5)))
        gamma = Tensor(np.ones(5))
        beta = Tensor(np.zeros(5))
        out = batch_norm(x, gamma, beta, BatchNormState(5), train=True).data
        np.testing.assert_allclose(out.mean(axis=(0, 1)), 0.0, atol=1e-5)
        np.testing.assert_allclose(out.reshape(-1, 5).var(axis=0), 1.0, atol=1e-4)

    def test_infer_mode_identity_with_unit_stats(self):
        x = Tensor(np.linspace(-1, 1, 24).reshape(2, 4, 3))
        gamma = Tensor(np.ones(3))
        beta = Tensor(np.zeros(3))
        out = batch_norm(x, gamma, beta, BatchNormState(3), train=False).data
        np.testing.assert_allclose(out, x.data, atol=1e-4)

    def test_batch_of_one_rejected_in_train_mode(self):
        x = Tensor(np.zeros((1, 4, 3)))
        with pytest.raises(ValueError, match="batch size"):
            batch_norm(x, Tensor(np.ones(3)), Tensor(np.zeros(3)),
                       BatchNormState(3), train=True)

    def test_masked_positions_do_not_affect_statistics(self):
        rng = np.random.default_rng(4)
        x = rng.normal(size=(3, 5, 2))
        mask = np.ones((3, 5))
        mask[:, 3:] = 0.0
        state_a = BatchNormState(2)
        a = batch_norm(Tensor(x), Tensor(np.ones(2)), Tensor(np.zeros(2)),
                       state_a, train=True, mask=mask).data
        x2 = x.copy()
        x2[:, 3:] = 99.0  # mutate only masked positions
        state_b = BatchNormState(2)
        b = batch_norm(Tensor(x2), Tensor(np.ones(2)), Tensor(np.zeros(2)),
                       state_b, train=True, mask=mask).data
        np.testing.assert_allclose(a[:, :3], b[:, :3], atol=1e-12)
        np.testing.assert_array_equal(state_a.running_mean, state_b.running_mean)


class TestDropout:
    def test_p_zero_is_identity(self):
        x = Tensor(np.ones((3, 3)))
        assert dropout(x, 0.0, train=True, rng=np.random.default_rng(0)) is x

    def test_infer_mode_is_identity(self):
        x = Tensor(np.ones((3, 3)))
        assert dropout(x, 0.9, train=False) is x

    def test_empirical_drop_fraction(self):
        rng = np.random.default_rng(5)
        x = Tensor(np.ones(1_000_000))
        out = dropout(x, 0.3, train=True, rng=rng).data
        assert abs((out == 0).mean() - 0.3) < 0.01
        # survivors are scaled so the expectation is preserved
        np.testing.assert_allclose(out[out != 0], 1.0 / 0.7, rtol=1e-6)

    def test_invalid_rate_rejected(self):
        with pytest.raises(ValueError, match="rate"):
            dropout(Tensor(np.ones(3)), 1.0, train=True, rng=np.random.default_rng(0))

    def test_deterministic_given_seed(self):
        x = Tensor(np.ones((100,)))
        a = dropout(x, 0.5, train=True, rng=np.random.default_rng(7)).data
        b = dropout(x, 0.5, train=True, rng=np.random.default_rng(7)).data
        np.testing.assert_array_equal(a, b)


class TestXavierInit:
    def test_bound(self):
        vals = xavier_init((100, 100), np.random.default_rng(0))
        bound = np.sqrt(6.0 / 200.0)
        assert np.all(np.abs(vals) <= bound)

    def test_same_seed_identical(self):
        a = xavier_init((4, 7, 9), np.random.default_rng(11))
        b = xavier_init((4, 7, 9), np.random.default_rng(11))
        np.testing.assert_array_equal(a, b)

    def test_sample_variance(self):
        # variance of U(-b, b) is b^2/3 = 2 / (fan_in + fan_out)
        vals = xavier_init((500, 200), np.random.default_rng(3))
        expect = 2.0 / 700.0
        assert abs(vals.var() / expect - 1.0) < 0.05


class TestBackward:
    def test_non_scalar_root_rejected(self):
        t = Parameter(np.ones((2, 2)), "t")
        with pytest.raises(ValueError, match="scalar"):
            (t + 1.0).backward()

    def test_gradients_accumulate_across_calls(self):
        w = Parameter(np.ones(3), "w", dtype=np.float64)
        tensor_sum(mul(w, 2.0)).backward()
        tensor_sum(mul(w, 2.0)).backward()
        np.testing.assert_array_equal(w.grad, np.full(3, 4.0))

    def test_off_path_parameter_gets_no_gradient(self):
        used = Parameter(np.ones(2), "used", dtype=np.float64)
        unused = Parameter(np.ones(2), "unused", dtype=np.float64)
        tensor_sum(used).backward()
        assert unused.grad is None

    def test_linear_map_gradient_matches_hand_result(self):
        # loss = sum(W @ x) => dL/dW[i, j] = x[j]
        W = Parameter(np.zeros((2, 2)), "W", dtype=np.float64)
        x = Tensor(np.array([[3.0], [5.0]]))
        tensor_sum(matmul(W, x)).backward()
        np.testing.assert_array_equal(W.grad, np.array([[3.0, 5.0], [3.0, 5.0]]))

    def test_no_grad_suppresses_recording(self):
        w = Parameter(np.ones(3), "w", dtype=np.float64)
        with no_grad():
            out = tensor_sum(mul(w, 2.0))
        assert not out.requires_grad

    def test_identical_runs_produce_bit_identical_gradients(self):
        rng = np.random.default_rng(9)
        data = rng.normal(size=(4, 4))
        grads = []
        for _ in range(2):
            w = Parameter(data.copy(), "w", dtype=np.float64)
            tensor_sum(elu(matmul(w, w))).backward()
            grads.append(w.grad.copy())
        np.testing.assert_array_equal(grads[0], grads[1])


class TestDebugNaN:
    def test_detects_non_finite(self):
        from paratope.autodiff import set_debug_nan
        set_debug_nan(True)
        try:
            with np.errstate(over="ignore"), pytest.raises(NumericError):
                mul(Tensor(np.array([1e308])), Tensor(np.array([1e308])))
        finally:
            set_debug_nan(False)
