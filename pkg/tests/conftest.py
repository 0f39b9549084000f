"""Shared fixtures and the finite-difference gradient checker."""

import numpy as np
import pytest

from paratope.data import default_meiler_table


@pytest.fixture(scope="session")
def meiler():
    return default_meiler_table()


def relative_error(a: float, b: float) -> float:
    """Elementwise error with an absolute floor below magnitude 1."""
    return abs(a - b) / max(1.0, abs(a), abs(b))


def fd_check(make_loss, tensors, h: float = 1e-5, tol: float = 1e-4,
             max_elements: int | None = None, rng: np.random.Generator | None = None):
    """Compare autodiff gradients of a scalar loss against central differences.

    ``make_loss`` rebuilds the graph from the tensors' current buffers on
    every call, so nudging a buffer element re-evaluates the whole loss.
    When ``max_elements`` is set, a random subset of each tensor's elements
    is checked (the sampling rng must be supplied).
    """
    for t in tensors:
        t.zero_grad()
    loss = make_loss()
    assert loss.dtype == np.float64, "gradient checks must run at 64-bit"
    loss.backward()
    worst = 0.0
    for t in tensors:
        grad = t.grad if t.grad is not None else np.zeros_like(t.data)
        flat_indices = np.arange(t.data.size)
        if max_elements is not None and t.data.size > max_elements:
            flat_indices = rng.choice(t.data.size, size=max_elements, replace=False)
        flat = t.data.reshape(-1)
        grad_flat = grad.reshape(-1)
        for idx in flat_indices:
            original = flat[idx]
            flat[idx] = original + h
            f_plus = make_loss().item()
            flat[idx] = original - h
            f_minus = make_loss().item()
            flat[idx] = original
            numeric = (f_plus - f_minus) / (2.0 * h)
            err = relative_error(grad_flat[idx], numeric)
            worst = max(worst, err)
            assert err < tol, (
                f"gradient mismatch at element {idx}: autodiff {grad_flat[idx]:.8e} "
                f"vs numeric {numeric:.8e} (err {err:.2e})")
    return worst
