"""Dense tensors with reverse-mode automatic differentiation.

numpy owns the buffers; this module adds just enough bookkeeping to
differentiate the operations the models need.  Each ``Tensor`` produced by
an operation remembers its parents together with one vector-Jacobian
product (VJP) callback per parent.  ``backward`` walks the recorded graph
once, in reverse topological order, accumulating gradients into every
tensor that requires them.

Only float32 (training) and float64 (gradient checking) buffers are
supported.  Limited numpy-style broadcasting is available on elementwise
operations; gradients of broadcast operands are reduced back to the
operand shape.
"""

from __future__ import annotations

import threading

import numpy as np

from ..errors import NumericError

_FLOAT_DTYPES = (np.float32, np.float64)

_local = threading.local()

# Debug switch: when on, every op output is checked for NaN/Inf.
_debug_nan = False


def set_debug_nan(enabled: bool) -> None:
    """Enable or disable NaN/Inf detection on every op output."""
    global _debug_nan
    _debug_nan = bool(enabled)


def grad_enabled() -> bool:
    return getattr(_local, "grad_enabled", True)


class no_grad:
    """Context manager that disables graph recording (thread-local)."""

    def __enter__(self):
        self._prev = grad_enabled()
        _local.grad_enabled = False
        return self

    def __exit__(self, *exc):
        _local.grad_enabled = self._prev
        return False


def _as_array(value, dtype=None) -> np.ndarray:
    arr = np.asarray(value)
    if dtype is not None:
        arr = arr.astype(dtype, copy=False)
    elif arr.dtype not in _FLOAT_DTYPES:
        arr = arr.astype(np.float32)
    return arr


def unbroadcast(grad: np.ndarray, shape: tuple[int, ...]) -> np.ndarray:
    """Sum ``grad`` down to ``shape``, undoing numpy broadcasting."""
    if grad.shape == shape:
        return grad
    extra = grad.ndim - len(shape)
    if extra > 0:
        grad = grad.sum(axis=tuple(range(extra)))
    axes = tuple(i for i, n in enumerate(shape) if n == 1 and grad.shape[i] != 1)
    if axes:
        grad = grad.sum(axis=axes, keepdims=True)
    return grad.reshape(shape)


class Tensor:
    """A dense array participating in a reverse-mode gradient graph."""

    __slots__ = ("data", "grad", "requires_grad", "_parents", "_vjps")

    def __init__(self, data, dtype=None, requires_grad: bool = False):
        self.data = _as_array(data, dtype)
        self.grad: np.ndarray | None = None
        self.requires_grad = bool(requires_grad)
        self._parents: tuple[Tensor, ...] = ()
        self._vjps: tuple = ()

    # -- structural properties -------------------------------------------
    @property
    def shape(self) -> tuple[int, ...]:
        return self.data.shape

    @property
    def ndim(self) -> int:
        return self.data.ndim

    @property
    def dtype(self):
        return self.data.dtype

    @property
    def size(self) -> int:
        return self.data.size

    def __repr__(self):
        flag = ", requires_grad=True" if self.requires_grad else ""
        return f"Tensor(shape={self.shape}, dtype={self.dtype.name}{flag})"

    def item(self) -> float:
        return float(self.data)

    def numpy(self) -> np.ndarray:
        return self.data

    def detach(self) -> "Tensor":
        return Tensor(self.data)

    def astype(self, dtype) -> "Tensor":
        return _from_op(self.data.astype(dtype), [(self, lambda g: g.astype(self.data.dtype))])

    def zero_grad(self) -> None:
        self.grad = None

    # -- graph ------------------------------------------------------------
    def backward(self) -> None:
        """Backpropagate from this scalar through the recorded graph.

        Gradients accumulate into ``.grad`` of every reachable tensor with
        ``requires_grad``; repeated calls without ``zero_grad`` keep adding.
        """
        if self.data.size != 1:
            raise ValueError(f"backward requires a scalar root, got shape {self.shape}")
        order = _toposort(self)
        if self.grad is None:
            self.grad = np.zeros_like(self.data)
        self.grad = self.grad + np.ones_like(self.data)
        for node in order:
            g = node.grad
            if g is None:
                continue
            for parent, vjp in zip(node._parents, node._vjps):
                contrib = vjp(g)
                if parent.grad is None:
                    parent.grad = np.zeros_like(parent.data)
                parent.grad = parent.grad + contrib
            if node is not self and node._parents:
                node.grad = None  # intermediate value: release after use

    # -- operator sugar ----------------------------------------------------
    def __add__(self, other):
        return add(self, other)

    __radd__ = __add__

    def __sub__(self, other):
        return sub(self, other)

    def __rsub__(self, other):
        return sub(other, self)

    def __mul__(self, other):
        return mul(self, other)

    __rmul__ = __mul__

    def __truediv__(self, other):
        return div(self, other)

    def __rtruediv__(self, other):
        return div(other, self)

    def __neg__(self):
        return mul(self, -1.0)

    def __matmul__(self, other):
        return matmul(self, other)

    def __getitem__(self, key):
        return getitem(self, key)

    def reshape(self, *shape):
        return reshape(self, shape if len(shape) > 1 else shape[0])

    def transpose(self, axes=None):
        return transpose(self, axes)

    def sum(self, axis=None, keepdims=False):
        return tensor_sum(self, axis, keepdims)

    def mean(self, axis=None, keepdims=False):
        return tensor_mean(self, axis, keepdims)


class Parameter(Tensor):
    """A named, trainable tensor (gradient slot always allocated on demand)."""

    __slots__ = ("name",)

    def __init__(self, data, name: str, dtype=None):
        super().__init__(data, dtype=dtype, requires_grad=True)
        self.name = name

    def __repr__(self):
        return f"Parameter({self.name!r}, shape={self.shape}, dtype={self.dtype.name})"


def _toposort(root: Tensor) -> list[Tensor]:
    """Reverse topological order of the graph above ``root`` (iterative)."""
    order: list[Tensor] = []
    seen: set[int] = set()
    stack: list[tuple[Tensor, bool]] = [(root, False)]
    while stack:
        node, expanded = stack.pop()
        if expanded:
            order.append(node)
            continue
        if id(node) in seen:
            continue
        seen.add(id(node))
        stack.append((node, True))
        for parent in node._parents:
            if id(parent) not in seen:
                stack.append((parent, False))
    order.reverse()
    return order


def _from_op(data: np.ndarray, parent_vjps) -> Tensor:
    """Build an op output, recording VJPs for parents that require grad."""
    if _debug_nan and not np.all(np.isfinite(data)):
        raise NumericError("non-finite value produced by tensor op")
    out = Tensor(data)
    if grad_enabled():
        parents = []
        vjps = []
        for parent, vjp in parent_vjps:
            if isinstance(parent, Tensor) and parent.requires_grad:
                parents.append(parent)
                vjps.append(vjp)
        if parents:
            out.requires_grad = True
            out._parents = tuple(parents)
            out._vjps = tuple(vjps)
    return out


def _coerce(value, like: Tensor) -> Tensor:
    if isinstance(value, Tensor):
        return value
    return Tensor(np.asarray(value, dtype=like.dtype))


# ---------------------------------------------------------------------------
# elementwise arithmetic
# ---------------------------------------------------------------------------

def add(a, b) -> Tensor:
    a = a if isinstance(a, Tensor) else Tensor(a)
    b = _coerce(b, a)
    data = a.data + b.data
    return _from_op(data, [
        (a, lambda g: unbroadcast(g, a.shape)),
        (b, lambda g: unbroadcast(g, b.shape)),
    ])


def sub(a, b) -> Tensor:
    a = a if isinstance(a, Tensor) else Tensor(a)
    b = _coerce(b, a)
    data = a.data - b.data
    return _from_op(data, [
        (a, lambda g: unbroadcast(g, a.shape)),
        (b, lambda g: unbroadcast(-g, b.shape)),
    ])


def mul(a, b) -> Tensor:
    a = a if isinstance(a, Tensor) else Tensor(a)
    b = _coerce(b, a)
    data = a.data * b.data
    return _from_op(data, [
        (a, lambda g: unbroadcast(g * b.data, a.shape)),
        (b, lambda g: unbroadcast(g * a.data, b.shape)),
    ])


def div(a, b) -> Tensor:
    a = a if isinstance(a, Tensor) else Tensor(a)
    b = _coerce(b, a)
    data = a.data / b.data
    return _from_op(data, [
        (a, lambda g: unbroadcast(g / b.data, a.shape)),
        (b, lambda g: unbroadcast(-g * a.data / (b.data * b.data), b.shape)),
    ])


def square(a: Tensor) -> Tensor:
    return _from_op(a.data * a.data, [(a, lambda g: g * (2.0 * a.data))])


def exp(a: Tensor) -> Tensor:
    data = np.exp(a.data)
    return _from_op(data, [(a, lambda g: g * data)])


def log(a: Tensor) -> Tensor:
    return _from_op(np.log(a.data), [(a, lambda g: g / a.data)])


def sqrt(a: Tensor) -> Tensor:
    data = np.sqrt(a.data)
    return _from_op(data, [(a, lambda g: g / (2.0 * data))])


def clip(a: Tensor, lo: float, hi: float) -> Tensor:
    data = np.clip(a.data, lo, hi)
    inside = ((a.data > lo) & (a.data < hi)).astype(a.dtype)
    return _from_op(data, [(a, lambda g: g * inside)])


# ---------------------------------------------------------------------------
# linear algebra / structure
# ---------------------------------------------------------------------------

def matmul(a: Tensor, b: Tensor) -> Tensor:
    """Matrix product with optional leading batch dimensions.

    Supports the combinations the layers use: [m,k]@[k,n], [B,L,k]@[k,n]
    and [B,m,k]@[B,k,n].  Gradients of batched operands are reduced over
    broadcast batch dimensions.
    """
    a = a if isinstance(a, Tensor) else Tensor(a)
    b = _coerce(b, a)
    if a.ndim < 2 or b.ndim < 2:
        raise ValueError(f"matmul needs >=2-dim operands, got {a.shape} and {b.shape}")
    if a.shape[-1] != b.shape[-2]:
        raise ValueError(f"matmul shape mismatch: {a.shape} @ {b.shape}")
    data = np.matmul(a.data, b.data)

    def vjp_a(g):
        return unbroadcast(np.matmul(g, np.swapaxes(b.data, -1, -2)), a.shape)

    def vjp_b(g):
        return unbroadcast(np.matmul(np.swapaxes(a.data, -1, -2), g), b.shape)

    return _from_op(data, [(a, vjp_a), (b, vjp_b)])


def transpose(a: Tensor, axes=None) -> Tensor:
    data = np.transpose(a.data, axes)
    if axes is None:
        inv = None
    else:
        inv = np.argsort(axes)
    return _from_op(data, [(a, lambda g: np.transpose(g, inv))])


def reshape(a: Tensor, shape) -> Tensor:
    data = a.data.reshape(shape)
    return _from_op(data, [(a, lambda g: g.reshape(a.shape))])


def concat(tensors, axis: int = -1) -> Tensor:
    tensors = [t if isinstance(t, Tensor) else Tensor(t) for t in tensors]
    data = np.concatenate([t.data for t in tensors], axis=axis)
    sizes = [t.shape[axis] for t in tensors]
    offsets = np.cumsum([0] + sizes)

    def make_vjp(i):
        def vjp(g):
            index = [slice(None)] * g.ndim
            index[axis] = slice(offsets[i], offsets[i + 1])
            return g[tuple(index)]
        return vjp

    return _from_op(data, [(t, make_vjp(i)) for i, t in enumerate(tensors)])


def getitem(a: Tensor, key) -> Tensor:
    data = a.data[key]

    def vjp(g):
        out = np.zeros_like(a.data)
        np.add.at(out, key, g)
        return out

    return _from_op(data, [(a, vjp)])


def gather(values: Tensor, index: np.ndarray) -> Tensor:
    """Pick rows of ``values`` along axis 1: out[b, ...] = values[b, index[b, ...]].

    ``values`` is [B, N] or [B, N, C]; ``index`` is an integer array whose
    first dimension is B.  The gradient scatter-adds back into ``values``.
    """
    index = np.asarray(index)
    batch = np.arange(values.shape[0]).reshape((-1,) + (1,) * (index.ndim - 1))
    data = values.data[batch, index]

    def vjp(g):
        out = np.zeros_like(values.data)
        np.add.at(out, (batch, index), g)
        return out

    return _from_op(data, [(values, vjp)])


def weighted_sum(weights: Tensor, values: Tensor) -> Tensor:
    """Contract per-slot weights with gathered values.

    out[b, m, d] = sum_c weights[b, m, c] * values[b, m, c, d]
    """
    if weights.shape != values.shape[:-1]:
        raise ValueError(
            f"weighted_sum shape mismatch: weights {weights.shape} vs values {values.shape}")
    data = np.einsum("bmc,bmcd->bmd", weights.data, values.data)

    def vjp_w(g):
        return np.einsum("bmd,bmcd->bmc", g, values.data)

    def vjp_v(g):
        return np.einsum("bmc,bmd->bmcd", weights.data, g)

    return _from_op(data, [(weights, vjp_w), (values, vjp_v)])


# ---------------------------------------------------------------------------
# reductions
# ---------------------------------------------------------------------------

def tensor_sum(a: Tensor, axis=None, keepdims: bool = False) -> Tensor:
    data = a.data.sum(axis=axis, keepdims=keepdims)

    def vjp(g):
        if axis is None:
            return np.broadcast_to(g, a.shape).astype(a.dtype, copy=False)
        g_exp = g if keepdims else np.expand_dims(g, axis)
        return np.broadcast_to(g_exp, a.shape).astype(a.dtype, copy=False)

    return _from_op(data, [(a, vjp)])


def tensor_mean(a: Tensor, axis=None, keepdims: bool = False) -> Tensor:
    count = a.size if axis is None else np.prod(
        [a.shape[ax] for ax in (axis if isinstance(axis, tuple) else (axis,))])
    return mul(tensor_sum(a, axis, keepdims), 1.0 / float(count))
