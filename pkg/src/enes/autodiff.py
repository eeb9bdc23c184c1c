"""Reverse-mode automatic differentiation over small dense float64 matrices.

Every value is 2-D. A Tape records nodes in creation order, so parents always
precede children and the backward sweep is a single reverse pass.

    tape = Tape()
    x = tape.param(np.array([[1.0, 2.0]]), "x")
    loss = dot(x, x)
    grads = backward(tape, loss)   # {"x": [[2., 4.]]}
"""

from __future__ import annotations

from typing import Callable

import numpy as np


class Node:
    __slots__ = ("tape", "id", "value", "parents", "op", "name", "_vjp")

    def __init__(self, tape, value, parents, op, vjp, name=None):
        self.tape = tape
        self.value = value
        self.parents = parents
        self.op = op
        self.name = name
        self._vjp = vjp
        self.id = len(tape.nodes)
        tape.nodes.append(self)

    @property
    def shape(self):
        return self.value.shape

    def __repr__(self):
        return f"Node(id={self.id}, op={self.op}, shape={self.shape})"

    def __add__(self, other):
        return add(self, other) if isinstance(other, Node) else add_scalar(self, other)

    __radd__ = __add__

    def __sub__(self, other):
        return sub(self, other) if isinstance(other, Node) else add_scalar(self, -other)

    def __rsub__(self, other):
        return add_scalar(scalar_mul(self, -1.0), other)

    def __mul__(self, other):
        return hadamard(self, other) if isinstance(other, Node) else scalar_mul(self, other)

    __rmul__ = __mul__

    def __neg__(self):
        return scalar_mul(self, -1.0)

    def __matmul__(self, other):
        return matmul(self, other)

    def __truediv__(self, other):
        return div(self, other) if isinstance(other, Node) else scalar_mul(self, 1.0 / other)


class Tape:
    def __init__(self, check_finite: bool = False):
        self.nodes: list[Node] = []
        self.check_finite = check_finite

    def param(self, value, name: str) -> Node:
        return Node(self, _as2d(value).copy(), (), "param", None, name)

    def const(self, value) -> Node:
        return Node(self, _as2d(value), (), "const", None)

    def params(self) -> list[Node]:
        return [n for n in self.nodes if n.op == "param"]


def _as2d(value) -> np.ndarray:
    arr = np.asarray(value, dtype=np.float64)
    if arr.ndim == 0:
        return arr.reshape(1, 1)
    if arr.ndim == 1:
        return arr.reshape(1, -1)
    if arr.ndim != 2:
        raise ValueError(f"tensors are at most 2-D, got shape {arr.shape}")
    return arr


def _record(op: str, value: np.ndarray, parents: tuple[Node, ...], vjp: Callable) -> Node:
    tape = parents[0].tape
    if any(p.tape is not tape for p in parents):
        raise ValueError(f"{op}: operands belong to different tapes")
    if tape.check_finite and not np.isfinite(value).all():
        raise FloatingPointError(f"{op} produced non-finite values")
    return Node(tape, value, parents, op, vjp)


def _same_shape(op: str, a: Node, b: Node):
    if a.shape != b.shape:
        raise ValueError(f"{op}: shape mismatch {a.shape} vs {b.shape}")


def _broadcastable(op: str, a: Node, b: Node) -> bool:
    """Same shape, or b is a row vector added to every row of a."""
    if a.shape == b.shape:
        return False
    if b.shape[0] == 1 and b.shape[1] == a.shape[1]:
        return True
    raise ValueError(f"{op}: shape mismatch {a.shape} vs {b.shape}")


def matmul(a: Node, b: Node) -> Node:
    if a.shape[1] != b.shape[0]:
        raise ValueError(f"matmul: shape mismatch {a.shape} vs {b.shape}")
    return _record("matmul", a.value @ b.value, (a, b), lambda g: (g @ b.value.T, a.value.T @ g))


def add(a: Node, b: Node) -> Node:
    row = _broadcastable("add", a, b)
    return _record("add", a.value + b.value, (a, b), lambda g: (g, g.sum(axis=0, keepdims=True) if row else g))


def sub(a: Node, b: Node) -> Node:
    row = _broadcastable("sub", a, b)
    return _record("sub", a.value - b.value, (a, b), lambda g: (g, -(g.sum(axis=0, keepdims=True) if row else g)))


def hadamard(a: Node, b: Node) -> Node:
    _same_shape("hadamard", a, b)
    return _record("hadamard", a.value * b.value, (a, b), lambda g: (g * b.value, g * a.value))


def div(a: Node, b: Node) -> Node:
    _same_shape("div", a, b)
    out = a.value / b.value
    return _record("div", out, (a, b), lambda g: (g / b.value, -g * out / b.value))


def scalar_mul(a: Node, s: float) -> Node:
    s = float(s)
    return _record("scalar_mul", a.value * s, (a,), lambda g: (g * s,))


def add_scalar(a: Node, s: float) -> Node:
    return _record("add_scalar", a.value + float(s), (a,), lambda g: (g,))


def tanh(a: Node) -> Node:
    out = np.tanh(a.value)
    return _record("tanh", out, (a,), lambda g: (g * (1.0 - out * out),))


def sine(a: Node) -> Node:
    return _record("sine", np.sin(a.value), (a,), lambda g: (g * np.cos(a.value),))


def square(a: Node) -> Node:
    return _record("square", a.value * a.value, (a,), lambda g: (2.0 * g * a.value,))


def sigmoid(a: Node) -> Node:
    x = a.value
    e = np.exp(-np.abs(x))
    out = np.where(x >= 0, 1.0 / (1.0 + e), e / (1.0 + e))
    return _record("sigmoid", out, (a,), lambda g: (g * out * (1.0 - out),))


def softmax_rows(a: Node) -> Node:
    z = a.value - a.value.max(axis=1, keepdims=True)
    e = np.exp(z)
    out = e / e.sum(axis=1, keepdims=True)

    def vjp(g):
        return (out * (g - (g * out).sum(axis=1, keepdims=True)),)

    return _record("softmax_rows", out, (a,), vjp)


def log(a: Node) -> Node:
    return _record("log", np.log(a.value), (a,), lambda g: (g / a.value,))


def sqrt(a: Node) -> Node:
    out = np.sqrt(a.value)
    safe = np.where(out > 0, out, 1.0)
    return _record("sqrt", out, (a,), lambda g: (np.where(out > 0, 0.5 * g / safe, 0.0),))


def clamp_min(a: Node, lo: float) -> Node:
    keep = a.value >= lo
    return _record("clamp_min", np.maximum(a.value, lo), (a,), lambda g: (g * keep,))


def sum(a: Node) -> Node:  # noqa: A001
    return _record("sum", np.array([[a.value.sum()]]), (a,), lambda g: (np.full(a.shape, g[0, 0]),))


def mean(a: Node) -> Node:
    n = a.value.size
    return _record("mean", np.array([[a.value.mean()]]), (a,), lambda g: (np.full(a.shape, g[0, 0] / n),))


def dot(a: Node, b: Node) -> Node:
    _same_shape("dot", a, b)
    return _record("dot", np.array([[np.vdot(a.value, b.value)]]), (a, b), lambda g: (g[0, 0] * b.value, g[0, 0] * a.value))


def l2_norm(a: Node) -> Node:
    nrm = float(np.linalg.norm(a.value))
    return _record("l2_norm", np.array([[nrm]]), (a,), lambda g: (g[0, 0] * a.value / nrm if nrm > 0 else np.zeros(a.shape),))


def backward(tape: Tape, loss: Node) -> dict[str, np.ndarray]:
    """Gradients of a scalar loss with respect to every named parameter on the tape."""
    if loss.shape != (1, 1):
        raise ValueError(f"backward needs a scalar loss, got shape {loss.shape}")
    grads: dict[int, np.ndarray] = {loss.id: np.ones((1, 1))}
    for node in reversed(tape.nodes[: loss.id + 1]):
        g = grads.pop(node.id, None)
        if node._vjp is None:
            if g is not None:
                grads[node.id] = g
            continue
        if g is None:
            continue
        for parent, pg in zip(node.parents, node._vjp(g)):
            if parent.id in grads:
                grads[parent.id] = grads[parent.id] + pg
            else:
                grads[parent.id] = pg
    return {n.name: grads.get(n.id, np.zeros(n.shape)) for n in tape.params()}
