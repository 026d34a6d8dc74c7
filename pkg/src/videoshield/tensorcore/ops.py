"""Differentiable primitives and a few composites built from them.

Broadcasting is limited to the trailing-axis case: the smaller operand is a
scalar or matches the trailing axes of the larger one. Anything else must be
reshaped explicitly.
"""

from __future__ import annotations

import numpy as np

from ..errors import DimensionError, EmptyTargetError, TokenIndexError
from . import kernels
from .tensor import Tensor, apply, as_tensor, register


def _broadcast_ok(big, small) -> bool:
    if small == big or int(np.prod(small)) == 1 and len(small) <= len(big):
        return True
    return len(small) <= len(big) and tuple(big[len(big) - len(small):]) == tuple(small)


def _check_broadcast(name, sa, sb):
    if not (_broadcast_ok(sa, sb) or _broadcast_ok(sb, sa)):
        raise DimensionError(f"{name}: shapes {sa} and {sb} do not broadcast (trailing-axis only)")


def _unbroadcast(g, shape):
    if g.shape == tuple(shape):
        return g
    if int(np.prod(shape)) == 1:
        return np.asarray(g.sum()).reshape(shape)
    return g.reshape((-1,) + tuple(shape)).sum(axis=0)


# -- elementwise arithmetic ---------------------------------------------------

def _add_fwd(a, b):
    _check_broadcast("add", a.shape, b.shape)
    return a + b, (a.shape, b.shape)


def _add_bwd(ctx, g):
    sa, sb = ctx
    return _unbroadcast(g, sa), _unbroadcast(g, sb)


def _sub_fwd(a, b):
    _check_broadcast("sub", a.shape, b.shape)
    return a - b, (a.shape, b.shape)


def _sub_bwd(ctx, g):
    sa, sb = ctx
    return _unbroadcast(g, sa), -_unbroadcast(g, sb)


def _mul_fwd(a, b):
    _check_broadcast("mul", a.shape, b.shape)
    return a * b, (a, b)


def _mul_bwd(ctx, g):
    a, b = ctx
    return _unbroadcast(g * b, a.shape), _unbroadcast(g * a, b.shape)


def _scale_fwd(a, c):
    return (a * np.asarray(c, dtype=a.dtype)).astype(a.dtype, copy=False), None


def _scale_bwd(ctx, g, c):
    return (g * c,)


ADD = register("add", _add_fwd, _add_bwd)
SUB = register("sub", _sub_fwd, _sub_bwd)
MUL = register("mul", _mul_fwd, _mul_bwd)
SCALE = register("scale", _scale_fwd, _scale_bwd)


def add(a, b) -> Tensor:
    return apply(ADD, as_tensor(a), as_tensor(b))


def sub(a, b) -> Tensor:
    return apply(SUB, as_tensor(a), as_tensor(b))


def mul(a, b) -> Tensor:
    return apply(MUL, as_tensor(a), as_tensor(b))


def scale(a, c: float) -> Tensor:
    return apply(SCALE, as_tensor(a), c=float(c))


# -- matmul -------------------------------------------------------------------

def _matmul_fwd(a, b):
    if a.ndim < 2 or b.ndim < 2:
        raise DimensionError(f"matmul: operands need rank >= 2, got {a.shape} and {b.shape}")
    if a.shape[-1] != b.shape[-2]:
        raise DimensionError(f"matmul: inner dimensions differ, {a.shape} @ {b.shape}")
    ba, bb = a.shape[:-2], b.shape[:-2]
    if ba and bb and ba != bb:
        raise DimensionError(f"matmul: batch dimensions differ, {a.shape} @ {b.shape}")
    return np.matmul(a, b), (a, b)


def _matmul_bwd(ctx, g):
    a, b = ctx
    ga = np.matmul(g, np.swapaxes(b, -1, -2))
    gb = np.matmul(np.swapaxes(a, -1, -2), g)
    if ga.shape != a.shape:
        ga = ga.reshape((-1,) + a.shape).sum(axis=0)
    if gb.shape != b.shape:
        gb = gb.reshape((-1,) + b.shape).sum(axis=0)
    return ga, gb


MATMUL = register("matmul", _matmul_fwd, _matmul_bwd)


def matmul(a, b) -> Tensor:
    return apply(MATMUL, as_tensor(a), as_tensor(b))


# -- shape manipulation ---------------------------------------------------------

def _reshape_fwd(a, shape):
    try:
        return a.reshape(shape), a.shape
    except ValueError as exc:
        raise DimensionError(f"reshape: cannot reshape {a.shape} to {shape}") from exc


def _reshape_bwd(ctx, g, shape):
    return (g.reshape(ctx),)


def _permute_fwd(a, axes):
    if sorted(axes) != list(range(a.ndim)):
        raise DimensionError(f"permute: axes {axes} invalid for rank {a.ndim}")
    return np.ascontiguousarray(np.transpose(a, axes)), None


def _permute_bwd(ctx, g, axes):
    return (np.transpose(g, np.argsort(axes)),)


def _slice_fwd(a, index):
    try:
        out = a[index]
    except IndexError as exc:
        raise DimensionError(f"slice: index {index!r} invalid for shape {a.shape}") from exc
    return np.asarray(out, order="C"), a.shape


def _slice_bwd(ctx, g, index):
    z = np.zeros(ctx, dtype=g.dtype)
    z[index] = g
    return (z,)


def _concat_fwd(*arrays, axis):
    ref = arrays[0]
    ax = axis % ref.ndim
    for arr in arrays[1:]:
        if arr.ndim != ref.ndim or any(
            arr.shape[i] != ref.shape[i] for i in range(ref.ndim) if i != ax
        ):
            raise DimensionError(f"concat: shapes {[x.shape for x in arrays]} differ off axis {axis}")
    sizes = [arr.shape[ax] for arr in arrays]
    return np.concatenate(arrays, axis=ax), (ax, sizes)


def _concat_bwd(ctx, g, axis):
    ax, sizes = ctx
    cuts = np.cumsum(sizes)[:-1]
    return tuple(np.split(g, cuts, axis=ax))


RESHAPE = register("reshape", _reshape_fwd, _reshape_bwd)
PERMUTE = register("permute", _permute_fwd, _permute_bwd)
SLICE = register("slice", _slice_fwd, _slice_bwd)
CONCAT = register("concat", _concat_fwd, _concat_bwd)


def reshape(a, shape) -> Tensor:
    return apply(RESHAPE, as_tensor(a), shape=tuple(int(s) for s in shape))


def permute(a, axes) -> Tensor:
    return apply(PERMUTE, as_tensor(a), axes=tuple(int(x) for x in axes))


def transpose(a) -> Tensor:
    """Swap the last two axes."""
    a = as_tensor(a)
    axes = list(range(a.ndim))
    axes[-1], axes[-2] = axes[-2], axes[-1]
    return permute(a, axes)


def slice(a, index) -> Tensor:  # noqa: A001 - mirrors the primitive name
    if not isinstance(index, tuple):
        index = (index,)
    return apply(SLICE, as_tensor(a), index=index)


def concat(tensors, axis: int = 0) -> Tensor:
    return apply(CONCAT, *(as_tensor(t) for t in tensors), axis=axis)


# -- reductions -----------------------------------------------------------------

def _sum_fwd(a, axis, keepdims):
    out = np.sum(a, axis=axis, keepdims=keepdims, dtype=np.float64).astype(a.dtype)
    return np.asarray(out), a.shape


def _sum_bwd(ctx, g, axis, keepdims):
    shape = ctx
    if axis is not None and not keepdims:
        g = np.expand_dims(g, axis)
    return (np.broadcast_to(g, shape),)


def _mean_fwd(a, axis, keepdims):
    out = np.mean(a, axis=axis, keepdims=keepdims, dtype=np.float64).astype(a.dtype)
    count = a.size if axis is None else int(np.prod([a.shape[x] for x in np.atleast_1d(axis)]))
    return np.asarray(out), (a.shape, count)


def _mean_bwd(ctx, g, axis, keepdims):
    shape, count = ctx
    if axis is not None and not keepdims:
        g = np.expand_dims(g, axis)
    return (np.broadcast_to(g / count, shape),)


SUM = register("sum", _sum_fwd, _sum_bwd)
MEAN = register("mean", _mean_fwd, _mean_bwd)


def _axis_attr(axis):
    if axis is None or isinstance(axis, int):
        return axis
    return tuple(int(x) for x in axis)


def sum(a, axis=None, keepdims: bool = False) -> Tensor:  # noqa: A001
    return apply(SUM, as_tensor(a), axis=_axis_attr(axis), keepdims=keepdims)


def mean(a, axis=None, keepdims: bool = False) -> Tensor:
    return apply(MEAN, as_tensor(a), axis=_axis_attr(axis), keepdims=keepdims)


# -- nonlinearities and normalisation -------------------------------------------

def _gelu_fwd(a):
    return kernels.gelu_forward(a), a


def _gelu_bwd(ctx, g):
    return (kernels.gelu_backward(ctx, g),)


def _layer_norm_fwd(x, gamma, beta, eps):
    if gamma.shape != (x.shape[-1],) or beta.shape != (x.shape[-1],):
        raise DimensionError(
            f"layer_norm: gain/bias shapes {gamma.shape}, {beta.shape} do not match last axis {x.shape[-1]}"
        )
    y, xhat, rstd = kernels.layer_norm_forward(x, gamma, beta, eps)
    return y, (xhat, rstd, gamma, x.shape)


def _layer_norm_bwd(ctx, g, eps):
    xhat, rstd, gamma, shape = ctx
    gx, ggamma, gbeta = kernels.layer_norm_backward(g, xhat, rstd, gamma)
    return gx.reshape(shape), ggamma, gbeta


def _last_axis(fn, x, axis):
    if axis in (-1, x.ndim - 1):
        return fn(x)
    return np.moveaxis(fn(np.moveaxis(x, axis, -1)), -1, axis)


def _softmax_fwd(x, axis):
    if not -x.ndim <= axis < x.ndim:
        raise DimensionError(f"softmax: axis {axis} invalid for shape {x.shape}")
    y = _last_axis(kernels.softmax_forward, x, axis)
    return np.ascontiguousarray(y), y


def _softmax_bwd(ctx, g, axis):
    y = ctx
    if axis in (-1, y.ndim - 1):
        return (kernels.softmax_backward(y, g),)
    out = kernels.softmax_backward(np.moveaxis(y, axis, -1), np.moveaxis(g, axis, -1))
    return (np.moveaxis(out, -1, axis),)


def _log_softmax_fwd(x, axis):
    if not -x.ndim <= axis < x.ndim:
        raise DimensionError(f"log_softmax: axis {axis} invalid for shape {x.shape}")
    y = _last_axis(kernels.log_softmax_forward, x, axis)
    return np.ascontiguousarray(y), y


def _log_softmax_bwd(ctx, g, axis):
    y = ctx
    if axis in (-1, y.ndim - 1):
        return (kernels.log_softmax_backward(y, g),)
    out = kernels.log_softmax_backward(np.moveaxis(y, axis, -1), np.moveaxis(g, axis, -1))
    return (np.moveaxis(out, -1, axis),)


GELU = register("gelu", _gelu_fwd, _gelu_bwd)
LAYER_NORM = register("layer_norm", _layer_norm_fwd, _layer_norm_bwd)
SOFTMAX = register("softmax", _softmax_fwd, _softmax_bwd)
LOG_SOFTMAX = register("log_softmax", _log_softmax_fwd, _log_softmax_bwd)


def gelu(a) -> Tensor:
    return apply(GELU, as_tensor(a))


def layer_norm(x, gamma, beta, eps: float = 1e-5) -> Tensor:
    return apply(LAYER_NORM, as_tensor(x), as_tensor(gamma), as_tensor(beta), eps=float(eps))


def softmax(x, axis: int = -1) -> Tensor:
    return apply(SOFTMAX, as_tensor(x), axis=int(axis))


def log_softmax(x, axis: int = -1) -> Tensor:
    return apply(LOG_SOFTMAX, as_tensor(x), axis=int(axis))


# -- indexing -------------------------------------------------------------------

def _embedding_fwd(table, indices):
    if table.ndim != 2:
        raise DimensionError(f"embedding: table must be 2-D, got {table.shape}")
    if indices.size and (indices.min() < 0 or indices.max() >= table.shape[0]):
        bad = indices[(indices < 0) | (indices >= table.shape[0])].ravel()[0]
        raise TokenIndexError(f"embedding: index {int(bad)} outside vocabulary of {table.shape[0]}")
    return table[indices], table.shape


def _embedding_bwd(ctx, g, indices):
    z = np.zeros(ctx, dtype=g.dtype)
    np.add.at(z, indices.ravel(), g.reshape(-1, ctx[1]))
    return (z,)


def _pick_fwd(x, indices):
    if indices.shape != x.shape[:-1]:
        raise DimensionError(f"pick: index shape {indices.shape} does not match {x.shape[:-1]}")
    if indices.size and (indices.min() < 0 or indices.max() >= x.shape[-1]):
        raise TokenIndexError(f"pick: index outside last axis of size {x.shape[-1]}")
    return np.take_along_axis(x, indices[..., None], axis=-1)[..., 0], x.shape


def _pick_bwd(ctx, g, indices):
    z = np.zeros(ctx, dtype=g.dtype)
    np.put_along_axis(z, indices[..., None], g[..., None], axis=-1)
    return (z,)


EMBEDDING = register("embedding", _embedding_fwd, _embedding_bwd)
PICK = register("pick", _pick_fwd, _pick_bwd)


def embedding(table, indices) -> Tensor:
    idx = np.asarray(indices)
    if idx.dtype.kind not in "iu":
        raise TokenIndexError(f"embedding: indices must be integers, got {idx.dtype}")
    return apply(EMBEDDING, as_tensor(table), indices=idx.astype(np.int64))


def pick(x, indices) -> Tensor:
    """Select one entry along the last axis for every leading position."""
    return apply(PICK, as_tensor(x), indices=np.asarray(indices, dtype=np.int64))


# -- composites -----------------------------------------------------------------

IGNORE_INDEX = -100


def cross_entropy(logits, targets, ignore_index: int = IGNORE_INDEX) -> Tensor:
    """Mean negative log-likelihood over positions whose target is not ignored."""
    logits = as_tensor(logits)
    t = np.asarray(targets, dtype=np.int64)
    if logits.shape[:-1] != t.shape:
        raise DimensionError(
            f"cross_entropy: {t.shape} targets for logits of shape {logits.shape}"
        )
    keep = t != ignore_index
    count = int(keep.sum())
    if count == 0:
        raise EmptyTargetError("cross_entropy: every target position is ignored")
    safe = np.where(keep, t, 0)
    logp = log_softmax(logits, axis=-1)
    picked = pick(logp, safe)
    weights = Tensor(keep.astype(logits.dtype) / count, dtype=logits.dtype)
    return scale(sum(mul(picked, weights)), -1.0)


def mse(a, b) -> Tensor:
    d = sub(a, b)
    return mean(mul(d, d))


def square_norm(a) -> Tensor:
    a = as_tensor(a)
    return sum(mul(a, a))
