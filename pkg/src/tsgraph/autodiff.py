"""Minimal dense-tensor reverse-mode differentiation on numpy float64 buffers."""

from __future__ import annotations

from contextlib import contextmanager

import numpy as np

from .errors import ShapeError, StateError

_grad_enabled = True


@contextmanager
def no_grad():
    """Disable graph recording (forward values only); used by finite differencing."""
    global _grad_enabled
    saved = _grad_enabled
    _grad_enabled = False
    try:
        yield
    finally:
        _grad_enabled = saved


def _unbroadcast(grad: np.ndarray, shape: tuple) -> np.ndarray:
    while grad.ndim > len(shape):
        grad = grad.sum(axis=0)
    for axis, size in enumerate(shape):
        if size == 1 and grad.shape[axis] != 1:
            grad = grad.sum(axis=axis, keepdims=True)
    return grad


class Tensor:
    __slots__ = ("data", "grad", "requires_grad", "_parents", "_backward")

    def __init__(self, data, requires_grad=False):
        self.data = np.asarray(data, dtype=np.float64)
        self.grad = None
        self.requires_grad = bool(requires_grad)
        self._parents = ()
        self._backward = None

    @property
    def shape(self):
        return self.data.shape

    def __repr__(self):
        return f"Tensor(shape={self.data.shape}, requires_grad={self.requires_grad})"

    # -- graph construction ------------------------------------------------

    @staticmethod
    def _lift(x) -> "Tensor":
        return x if isinstance(x, Tensor) else Tensor(x)

    @staticmethod
    def _node(data, parents, backward) -> "Tensor":
        out = Tensor(data)
        if _grad_enabled and any(p.requires_grad for p in parents):
            out.requires_grad = True
            out._parents = tuple(parents)
            out._backward = backward
        return out

    def _accumulate(self, g: np.ndarray):
        if self.grad is None:
            self.grad = np.zeros_like(self.data)
        self.grad += g

    def backward(self, seed=None):
        if self._backward is None and not self._parents:
            raise StateError("backward called on a tensor with no recorded graph")
        if seed is None:
            if self.data.size != 1:
                raise ShapeError("backward without a seed requires a scalar")
            seed = np.ones_like(self.data)
        topo, visited, stack = [], set(), [(self, False)]
        while stack:
            node, processed = stack.pop()
            if processed:
                topo.append(node)
                continue
            if id(node) in visited:
                continue
            visited.add(id(node))
            stack.append((node, True))
            for p in node._parents:
                if id(p) not in visited and (p._parents or p.requires_grad):
                    stack.append((p, False))
        self._accumulate(np.asarray(seed, dtype=np.float64))
        for node in reversed(topo):
            if node._backward is not None and node.grad is not None:
                node._backward(node.grad)

    def zero_grad(self):
        self.grad = None

    # -- arithmetic --------------------------------------------------------

    def __add__(self, other):
        other = self._lift(other)
        out = self._node(
            self.data + other.data,
            (self, other),
            lambda g: (
                self._accumulate(_unbroadcast(g, self.data.shape)) if self.requires_grad else None,
                other._accumulate(_unbroadcast(g, other.data.shape)) if other.requires_grad else None,
            ),
        )
        return out

    __radd__ = __add__

    def __neg__(self):
        return self._node(
            -self.data,
            (self,),
            lambda g: self._accumulate(-g) if self.requires_grad else None,
        )

    def __sub__(self, other):
        other = self._lift(other)
        return self._node(
            self.data - other.data,
            (self, other),
            lambda g: (
                self._accumulate(_unbroadcast(g, self.data.shape)) if self.requires_grad else None,
                other._accumulate(_unbroadcast(-g, other.data.shape)) if other.requires_grad else None,
            ),
        )

    def __rsub__(self, other):
        return self._lift(other) - self

    def __mul__(self, other):
        other = self._lift(other)
        return self._node(
            self.data * other.data,
            (self, other),
            lambda g: (
                self._accumulate(_unbroadcast(g * other.data, self.data.shape))
                if self.requires_grad
                else None,
                other._accumulate(_unbroadcast(g * self.data, other.data.shape))
                if other.requires_grad
                else None,
            ),
        )

    __rmul__ = __mul__

    def __truediv__(self, other):
        other = self._lift(other)
        return self._node(
            self.data / other.data,
            (self, other),
            lambda g: (
                self._accumulate(_unbroadcast(g / other.data, self.data.shape))
                if self.requires_grad
                else None,
                other._accumulate(
                    _unbroadcast(-g * self.data / (other.data * other.data), other.data.shape)
                )
                if other.requires_grad
                else None,
            ),
        )

    def __matmul__(self, other):
        other = self._lift(other)
        if self.data.ndim != 2 or other.data.ndim != 2:
            raise ShapeError("matmul supports 2-D operands only")
        if self.data.shape[1] != other.data.shape[0]:
            raise ShapeError(f"matmul shapes {self.data.shape} x {other.data.shape}")
        return self._node(
            self.data @ other.data,
            (self, other),
            lambda g: (
                self._accumulate(g @ other.data.T) if self.requires_grad else None,
                other._accumulate(self.data.T @ g) if other.requires_grad else None,
            ),
        )

    @property
    def T(self):
        return self._node(
            self.data.T.copy(),
            (self,),
            lambda g: self._accumulate(g.T) if self.requires_grad else None,
        )

    def reshape(self, *shape):
        orig = self.data.shape
        return self._node(
            self.data.reshape(*shape),
            (self,),
            lambda g: self._accumulate(g.reshape(orig)) if self.requires_grad else None,
        )

    def __getitem__(self, idx):
        def back(g):
            if self.requires_grad:
                z = np.zeros_like(self.data)
                np.add.at(z, idx, g)
                self._accumulate(z)

        return self._node(self.data[idx], (self,), back)

    def sum(self, axis=None, keepdims=False):
        orig = self.data.shape

        def back(g):
            if not self.requires_grad:
                return
            gg = np.asarray(g)
            if axis is not None and not keepdims:
                gg = np.expand_dims(gg, axis)
            self._accumulate(np.broadcast_to(gg, orig).copy())

        return self._node(self.data.sum(axis=axis, keepdims=keepdims), (self,), back)

    def mean(self, axis=None, keepdims=False):
        n = self.data.size if axis is None else self.data.shape[axis]
        return self.sum(axis=axis, keepdims=keepdims) * (1.0 / n)


def concat(tensors, axis=0):
    tensors = [Tensor._lift(t) for t in tensors]
    sizes = [t.data.shape[axis] for t in tensors]
    splits = np.cumsum(sizes)[:-1]

    def back(g):
        for t, piece in zip(tensors, np.split(g, splits, axis=axis)):
            if t.requires_grad:
                t._accumulate(piece)

    return Tensor._node(np.concatenate([t.data for t in tensors], axis=axis), tuple(tensors), back)


def exp(t):
    t = Tensor._lift(t)
    out_data = np.exp(t.data)
    return Tensor._node(
        out_data, (t,), lambda g: t._accumulate(g * out_data) if t.requires_grad else None
    )


def log(t):
    t = Tensor._lift(t)
    return Tensor._node(
        np.log(t.data), (t,), lambda g: t._accumulate(g / t.data) if t.requires_grad else None
    )


def tanh(t):
    t = Tensor._lift(t)
    out_data = np.tanh(t.data)
    return Tensor._node(
        out_data,
        (t,),
        lambda g: t._accumulate(g * (1.0 - out_data * out_data)) if t.requires_grad else None,
    )


def sigmoid(t):
    t = Tensor._lift(t)
    out_data = 1.0 / (1.0 + np.exp(-t.data))
    return Tensor._node(
        out_data,
        (t,),
        lambda g: t._accumulate(g * out_data * (1.0 - out_data)) if t.requires_grad else None,
    )


def leaky_relu(t, slope=0.2):
    t = Tensor._lift(t)
    factor = np.where(t.data >= 0, 1.0, slope)
    return Tensor._node(
        t.data * factor, (t,), lambda g: t._accumulate(g * factor) if t.requires_grad else None
    )


def elu(t, alpha=1.0):
    t = Tensor._lift(t)
    neg = alpha * np.expm1(t.data)
    out_data = np.where(t.data > 0, t.data, neg)
    deriv = np.where(t.data > 0, 1.0, neg + alpha)
    return Tensor._node(
        out_data, (t,), lambda g: t._accumulate(g * deriv) if t.requires_grad else None
    )


def log_softmax_rows(t):
    """Row-wise log-softmax; the row max enters as a constant shift, which leaves
    both the value and the gradient exact."""
    t = Tensor._lift(t)
    m = t.data.max(axis=1, keepdims=True)
    shifted = t - m
    return shifted - log(exp(shifted).sum(axis=1, keepdims=True))


class Adam:
    """Standard Adam with bias correction; optional classic L2 weight decay."""

    def __init__(self, params, lr=1e-3, beta1=0.9, beta2=0.999, eps=1e-8, weight_decay=0.0):
        self.params = list(params)
        self.lr, self.beta1, self.beta2, self.eps = lr, beta1, beta2, eps
        self.weight_decay = weight_decay
        self.t = 0
        self.m = [np.zeros_like(p.data) for p in self.params]
        self.v = [np.zeros_like(p.data) for p in self.params]

    def step(self):
        self.t += 1
        b1, b2 = self.beta1, self.beta2
        for p, m, v in zip(self.params, self.m, self.v):
            g = p.grad if p.grad is not None else np.zeros_like(p.data)
            if self.weight_decay:
                g = g + self.weight_decay * p.data
            m *= b1
            m += (1 - b1) * g
            v *= b2
            v += (1 - b2) * (g * g)
            mhat = m / (1 - b1**self.t)
            vhat = v / (1 - b2**self.t)
            p.data -= self.lr * mhat / (np.sqrt(vhat) + self.eps)

    def zero_grad(self):
        for p in self.params:
            p.grad = None
