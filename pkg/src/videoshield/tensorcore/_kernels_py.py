"""Pure-numpy reference kernels.

Every function takes 2-D C-contiguous arrays whose rows are independent
and returns arrays of the input dtype. Row statistics (means, variances,
log-sum-exp) accumulate in float64.
"""

import numpy as np

_GELU_C = np.sqrt(2.0 / np.pi)
_GELU_K = 0.044715


def gelu_forward(x):
    x64 = x.astype(np.float64)
    t = np.tanh(_GELU_C * (x64 + _GELU_K * x64 ** 3))
    return (0.5 * x64 * (1.0 + t)).astype(x.dtype)


def gelu_backward(x, g):
    x64 = x.astype(np.float64)
    t = np.tanh(_GELU_C * (x64 + _GELU_K * x64 ** 3))
    dt = (1.0 - t * t) * _GELU_C * (1.0 + 3.0 * _GELU_K * x64 * x64)
    return (g * (0.5 * (1.0 + t) + 0.5 * x64 * dt)).astype(x.dtype)


def layer_norm_forward(x, gamma, beta, eps):
    x64 = x.astype(np.float64)
    mu = x64.mean(axis=1, keepdims=True)
    xc = x64 - mu
    var = (xc * xc).mean(axis=1, keepdims=True)
    rstd = 1.0 / np.sqrt(var + eps)
    xhat = xc * rstd
    y = xhat * gamma + beta
    return y.astype(x.dtype), xhat.astype(x.dtype), rstd[:, 0].astype(x.dtype)


def layer_norm_backward(g, xhat, rstd, gamma):
    g64 = g.astype(np.float64)
    xh = xhat.astype(np.float64)
    n = xh.shape[1]
    ggamma = (g64 * xh).sum(axis=0)
    gbeta = g64.sum(axis=0)
    gx_hat = g64 * gamma.astype(np.float64)
    s1 = gx_hat.sum(axis=1, keepdims=True)
    s2 = (gx_hat * xh).sum(axis=1, keepdims=True)
    gx = (rstd.astype(np.float64)[:, None] / n) * (n * gx_hat - s1 - xh * s2)
    return gx.astype(g.dtype), ggamma.astype(g.dtype), gbeta.astype(g.dtype)


def softmax_forward(x):
    x64 = x.astype(np.float64)
    z = x64 - x64.max(axis=1, keepdims=True)
    e = np.exp(z)
    return (e / e.sum(axis=1, keepdims=True)).astype(x.dtype)


def log_softmax_forward(x):
    x64 = x.astype(np.float64)
    z = x64 - x64.max(axis=1, keepdims=True)
    lse = np.log(np.exp(z).sum(axis=1, keepdims=True))
    return (z - lse).astype(x.dtype)


def softmax_backward(y, g):
    y64 = y.astype(np.float64)
    dot = (g * y64).sum(axis=1, keepdims=True)
    return (y64 * (g - dot)).astype(y.dtype)


def log_softmax_backward(logp, g):
    g64 = g.astype(np.float64)
    s = g64.sum(axis=1, keepdims=True)
    return (g64 - np.exp(logp.astype(np.float64)) * s).astype(logp.dtype)
