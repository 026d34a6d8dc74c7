"""Row-wise kernel dispatch: compiled extension when importable, numpy otherwise.

Set ``VIDEOSHIELD_PURE_PYTHON=1`` to force the numpy fallback. Wrappers
accept arrays of any rank and treat the last axis as the row axis.
"""

import os

import numpy as np

from . import _kernels_py

_compiled = None
if os.environ.get("VIDEOSHIELD_PURE_PYTHON", "") not in ("1", "true", "yes"):
    try:
        from . import _kernels as _compiled  # type: ignore[attr-defined]
    except ImportError:  # extension not built
        _compiled = None

BACKEND = "cython" if _compiled is not None else "python"


def _impl(backend=None):
    if backend is None:
        return _compiled if _compiled is not None else _kernels_py
    if backend == "python":
        return _kernels_py
    if backend == "cython":
        if _compiled is None:
            raise RuntimeError("compiled kernels are not available")
        return _compiled
    raise ValueError(f"unknown kernel backend {backend!r}")


def _rows(a, dtype):
    return np.ascontiguousarray(a, dtype=dtype).reshape(-1, a.shape[-1])


def _float_dtype(a):
    return a.dtype if a.dtype in (np.float32, np.float64) else np.dtype(np.float32)


def gelu_forward(x, backend=None):
    dt = _float_dtype(x)
    return _impl(backend).gelu_forward(_rows(x, dt)).reshape(x.shape)


def gelu_backward(x, g, backend=None):
    dt = _float_dtype(x)
    return _impl(backend).gelu_backward(_rows(x, dt), _rows(g, dt)).reshape(x.shape)


def layer_norm_forward(x, gamma, beta, eps=1e-5, backend=None):
    dt = _float_dtype(x)
    y, xhat, rstd = _impl(backend).layer_norm_forward(
        _rows(x, dt),
        np.ascontiguousarray(gamma, dtype=dt),
        np.ascontiguousarray(beta, dtype=dt),
        float(eps),
    )
    return y.reshape(x.shape), xhat, rstd


def layer_norm_backward(g, xhat, rstd, gamma, backend=None):
    dt = xhat.dtype
    gx, ggamma, gbeta = _impl(backend).layer_norm_backward(
        _rows(g, dt), xhat, rstd, np.ascontiguousarray(gamma, dtype=dt)
    )
    return gx.reshape(g.shape), ggamma, gbeta


def softmax_forward(x, backend=None):
    dt = _float_dtype(x)
    return _impl(backend).softmax_forward(_rows(x, dt)).reshape(x.shape)


def log_softmax_forward(x, backend=None):
    dt = _float_dtype(x)
    return _impl(backend).log_softmax_forward(_rows(x, dt)).reshape(x.shape)


def softmax_backward(y, g, backend=None):
    return _impl(backend).softmax_backward(_rows(y, y.dtype), _rows(g, np.float64)).reshape(y.shape)


def log_softmax_backward(logp, g, backend=None):
    return _impl(backend).log_softmax_backward(
        _rows(logp, logp.dtype), _rows(g, np.float64)
    ).reshape(logp.shape)
