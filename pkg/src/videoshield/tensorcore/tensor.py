"""Tensor, tape, and the reverse-mode sweep."""

from __future__ import annotations

import contextvars
from dataclasses import dataclass, field
from typing import Any, Callable, Sequence

import numpy as np

from ..errors import ContractError, GraphError, NumericError

_ACTIVE_TAPE: contextvars.ContextVar["Tape | None"] = contextvars.ContextVar(
    "videoshield_active_tape", default=None
)


def _as_float_array(data, dtype=None) -> np.ndarray:
    # np.asarray(order="C") keeps 0-d arrays 0-d, unlike ascontiguousarray
    if dtype is not None:
        return np.asarray(data, dtype=dtype, order="C")
    if not isinstance(data, (np.ndarray, np.generic)):
        # python scalars and lists land in float32; float64 only when asked for
        return np.asarray(data, dtype=np.float32, order="C")
    arr = data
    if arr.dtype not in (np.float32, np.float64):
        arr = arr.astype(np.float32)
    return np.asarray(arr, order="C")


class Tensor:
    """An immutable dense array that may participate in a tape.

    Storage defaults to float32. float64 is kept when supplied, which is how
    the finite-difference harness runs the same code at higher precision.
    """

    __slots__ = ("data", "requires_grad", "name", "__weakref__")

    def __init__(self, data, requires_grad: bool = False, name: str | None = None, dtype=None):
        arr = _as_float_array(data, dtype).view()
        arr.setflags(write=False)
        self.data = arr
        self.requires_grad = requires_grad
        self.name = name

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

    def numpy(self) -> np.ndarray:
        return self.data

    def item(self) -> float:
        if self.data.size != 1:
            raise ContractError(f"item() needs a single element, got shape {self.shape}")
        return float(self.data.reshape(()))

    def __repr__(self) -> str:
        flag = ", requires_grad=True" if self.requires_grad else ""
        return f"Tensor(shape={self.shape}, dtype={self.dtype}{flag})"

    # operator sugar; the primitives live in ops
    def __add__(self, other):
        from . import ops
        return ops.add(self, other)

    __radd__ = __add__

    def __sub__(self, other):
        from . import ops
        return ops.sub(self, other)

    def __rsub__(self, other):
        from . import ops
        return ops.sub(other, self)

    def __mul__(self, other):
        from . import ops
        if isinstance(other, (int, float)):
            return ops.scale(self, float(other))
        return ops.mul(self, other)

    __rmul__ = __mul__

    def __neg__(self):
        from . import ops
        return ops.scale(self, -1.0)

    def __matmul__(self, other):
        from . import ops
        return ops.matmul(self, other)

    def __getitem__(self, index):
        from . import ops
        return ops.slice(self, index)

    def sum(self, axis=None, keepdims=False):
        from . import ops
        return ops.sum(self, axis=axis, keepdims=keepdims)

    def mean(self, axis=None, keepdims=False):
        from . import ops
        return ops.mean(self, axis=axis, keepdims=keepdims)

    def reshape(self, *shape):
        from . import ops
        if len(shape) == 1 and isinstance(shape[0], (tuple, list)):
            shape = tuple(shape[0])
        return ops.reshape(self, shape)

    def permute(self, *axes):
        from . import ops
        if len(axes) == 1 and isinstance(axes[0], (tuple, list)):
            axes = tuple(axes[0])
        return ops.permute(self, axes)


def as_tensor(value) -> Tensor:
    return value if isinstance(value, Tensor) else Tensor(value)


@dataclass(frozen=True)
class Primitive:
    """A differentiable operation.

    ``forward(*arrays, **attrs) -> (out, ctx)`` and
    ``backward(ctx, grad_out, **attrs) -> tuple`` with one entry per input
    (``None`` where no gradient flows).
    """

    name: str
    forward: Callable[..., Any]
    backward: Callable[..., Sequence[np.ndarray | None]]


REGISTRY: dict[str, Primitive] = {}


def register(name: str, forward, backward) -> Primitive:
    prim = Primitive(name, forward, backward)
    REGISTRY[name] = prim
    return prim


@dataclass
class Node:
    prim: Primitive
    inputs: tuple[Tensor, ...]
    output: Tensor
    ctx: Any
    attrs: dict = field(default_factory=dict)


class Tape:
    """Ordered record of primitive applications.

    Used as a context manager; while active, every primitive with at least
    one gradient-requiring input is appended in execution order.
    """

    def __init__(self):
        self.nodes: list[Node] = []
        self._produced: dict[int, Node] = {}
        self._token = None

    def __enter__(self) -> "Tape":
        self._token = _ACTIVE_TAPE.set(self)
        return self

    def __exit__(self, *exc) -> None:
        _ACTIVE_TAPE.reset(self._token)
        self._token = None

    def __len__(self) -> int:
        return len(self.nodes)

    def watch(self, data, name: str | None = None) -> Tensor:
        """Create a leaf tensor whose gradient can be requested."""
        return Tensor(data.data if isinstance(data, Tensor) else data, requires_grad=True, name=name)

    def record(self, node: Node) -> None:
        self.nodes.append(node)
        self._produced[id(node.output)] = node

    def is_leaf(self, t: Tensor) -> bool:
        return id(t) not in self._produced

    def produced(self, t: Tensor) -> bool:
        return id(t) in self._produced

    def replay(self) -> bool:
        """Re-run every recorded forward and compare outputs bit-exactly."""
        for node in self.nodes:
            out, _ = node.prim.forward(*(t.data for t in node.inputs), **node.attrs)
            if out.dtype != node.output.data.dtype or not np.array_equal(out, node.output.data):
                return False
        return True


def active_tape() -> Tape | None:
    return _ACTIVE_TAPE.get()


class no_grad:
    """Suspend recording inside the block."""

    def __enter__(self):
        self._token = _ACTIVE_TAPE.set(None)
        return self

    def __exit__(self, *exc):
        _ACTIVE_TAPE.reset(self._token)


def apply(prim: Primitive, *inputs: Tensor, **attrs) -> Tensor:
    out_data, ctx = prim.forward(*(t.data for t in inputs), **attrs)
    if not np.all(np.isfinite(out_data)):
        raise NumericError(f"{prim.name}: non-finite value in output")
    tape = _ACTIVE_TAPE.get()
    track = tape is not None and any(t.requires_grad for t in inputs)
    out = Tensor(out_data, requires_grad=track)
    if track:
        tape.record(Node(prim, tuple(inputs), out, ctx, attrs))
    return out


def backward(tape: Tape, root: Tensor, wrt: Sequence[Tensor]) -> list[Tensor]:
    """Gradients of scalar ``root`` with respect to each leaf in ``wrt``.

    Fan-out contributions are summed. Leaves the root does not depend on
    receive zero tensors.
    """
    if root.data.size != 1:
        raise ContractError(f"backward root must be scalar, got shape {root.shape}")
    if not tape.produced(root):
        raise GraphError("backward root was not produced on this tape")
    for w in wrt:
        if not tape.is_leaf(w):
            raise GraphError("gradients can only be requested for tape leaves")

    grads: dict[int, np.ndarray] = {id(root): np.ones(root.shape, dtype=root.dtype)}
    for node in reversed(tape.nodes):
        g = grads.pop(id(node.output), None)
        if g is None:
            continue
        in_grads = node.prim.backward(node.ctx, g, **node.attrs)
        for t, gi in zip(node.inputs, in_grads):
            if gi is None or not t.requires_grad:
                continue
            gi = np.asarray(gi, dtype=t.data.dtype)
            key = id(t)
            if key in grads:
                grads[key] = grads[key] + gi
            else:
                grads[key] = gi
    out = []
    for w in wrt:
        g = grads.get(id(w))
        if g is None:
            out.append(Tensor(np.zeros(w.shape, dtype=w.dtype)))
        else:
            out.append(Tensor(np.asarray(g, dtype=w.dtype).reshape(w.shape)))
    return out


def grad(fn: Callable[..., Tensor], *leaves) -> tuple[Tensor, list[Tensor]]:
    """Evaluate ``fn`` on fresh leaves and return (value, gradients)."""
    with Tape() as tape:
        ts = [tape.watch(x) for x in leaves]
        value = fn(*ts)
    return value, backward(tape, value, ts)
