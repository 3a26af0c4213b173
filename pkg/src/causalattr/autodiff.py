"""Reverse-mode differentiation on numpy arrays, twice.

A tiny dynamically recorded tape.  Every propagation rule is written in terms
of recorded operations, so the adjoints returned by `backward` are themselves
differentiable: calling `backward` on them yields exact second derivatives.
Adjoint seeds may carry one leading batch axis, which pushes a whole block of
rows through in a single sweep (a full Hessian costs one batched pass instead
of k separate ones).

Only the operations the network layers need are implemented, and variable ops
never broadcast against each other: elementwise operands must share a shape.
Constants (python scalars or ndarrays) may broadcast freely since they carry
no adjoint.
"""
from __future__ import annotations

import numpy as np

from .activations import sigmoid as _sigmoid_value

__all__ = ["Var", "backward", "tanh", "sigmoid", "softplus", "relu"]


class Var:
    """A node in the expression graph: a float64 ndarray plus provenance."""

    __slots__ = ("value", "_parents", "_vjp")
    __array_ufunc__ = None  # keep numpy from hijacking reflected operators

    def __init__(self, value, _parents=(), _vjp=None):
        self.value = np.asarray(value, dtype=np.float64)
        self._parents = _parents
        self._vjp = _vjp

    # -- arithmetic ---------------------------------------------------------

    def __add__(self, other):
        if isinstance(other, Var):
            out = Var(self.value + other.value, (self, other))
            out._vjp = lambda adj: (adj, adj)
            return out
        c = np.asarray(other, dtype=np.float64)
        out = Var(self.value + c, (self,))
        out._vjp = lambda adj: (adj,)
        return out

    __radd__ = __add__

    def __neg__(self):
        out = Var(-self.value, (self,))
        out._vjp = lambda adj: (-adj,)
        return out

    def __sub__(self, other):
        if isinstance(other, Var):
            out = Var(self.value - other.value, (self, other))
            out._vjp = lambda adj: (adj, -adj)
            return out
        return self + (-np.asarray(other, dtype=np.float64))

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if isinstance(other, Var):
            out = Var(self.value * other.value, (self, other))
            out._vjp = lambda adj: (adj * other, adj * self)
            return out
        c = np.asarray(other, dtype=np.float64)
        out = Var(self.value * c, (self,))
        out._vjp = lambda adj: (adj * c,)
        return out

    __rmul__ = __mul__

    def __matmul__(self, other):
        # Var @ constant matrix
        m = np.asarray(other, dtype=np.float64)
        if self.value.ndim == 1 and m.ndim == 1:
            raise TypeError(
                "vector @ vector is not taped; use a (k, 1) projection matrix"
            )
        out = Var(self.value @ m, (self,))
        out._vjp = lambda adj: (adj @ m.T,)
        return out

    def __rmatmul__(self, other):
        # constant matrix @ Var
        m = np.asarray(other, dtype=np.float64)
        if self.value.ndim == 1 and m.ndim == 1:
            raise TypeError(
                "vector @ vector is not taped; use a (k, 1) projection matrix"
            )
        out = Var(m @ self.value, (self,))
        out._vjp = lambda adj: (adj @ m,)
        return out

    def __repr__(self):
        return f"Var({self.value!r})"


# -- nonlinear primitives ---------------------------------------------------

def tanh(x: Var) -> Var:
    out = Var(np.tanh(x.value), (x,))
    out._vjp = lambda adj: (adj * (1.0 - out * out),)
    return out


def sigmoid(x: Var) -> Var:
    out = Var(_sigmoid_value(x.value), (x,))
    out._vjp = lambda adj: (adj * (out * (1.0 - out)),)
    return out


def softplus(x: Var) -> Var:
    out = Var(np.logaddexp(0.0, x.value), (x,))
    out._vjp = lambda adj: (adj * sigmoid(x),)
    return out


def relu(x: Var) -> Var:
    mask = (x.value > 0.0).astype(np.float64)
    out = Var(x.value * mask, (x,))
    out._vjp = lambda adj: (adj * mask,)
    return out


def _toposort(root: Var) -> list[Var]:
    """Nodes reachable from root, children before parents."""
    seen: set[int] = set()
    order: list[Var] = []
    stack: list[tuple[Var, bool]] = [(root, False)]
    while stack:
        node, expanded = stack.pop()
        if expanded:
            order.append(node)
            continue
        if id(node) in seen:
            continue
        seen.add(id(node))
        stack.append((node, True))
        for p in node._parents:
            if id(p) not in seen:
                stack.append((p, False))
    order.reverse()
    return order


def backward(output: Var, seed, wrt: list[Var]) -> list[Var]:
    """Pull the adjoint `seed` of `output` back to each Var in `wrt`.

    seed has shape output.shape or (batch,) + output.shape.  The returned
    adjoints are Vars built from recorded operations, so a second call to
    `backward` on any of them differentiates once more.
    """
    if not isinstance(seed, Var):
        seed = Var(seed)
    order = _toposort(output)
    adjoints: dict[int, Var] = {id(output): seed}
    for node in order:
        adj = adjoints.get(id(node))
        if adj is None or node._vjp is None:
            continue
        for parent, contrib in zip(node._parents, node._vjp(adj)):
            prev = adjoints.get(id(parent))
            adjoints[id(parent)] = contrib if prev is None else prev + contrib
    batch = seed.value.shape[: seed.value.ndim - output.value.ndim]
    results = []
    for w in wrt:
        a = adjoints.get(id(w))
        if a is None:
            a = Var(np.zeros(batch + w.value.shape))
        results.append(a)
    return results
