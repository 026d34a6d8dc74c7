# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled row-wise kernels; same contracts as ``_kernels_py``."""

import numpy as np
cimport cython
from libc.math cimport exp, log, sqrt

ctypedef fused real:
    float
    double

cdef double GELU_C = 0.7978845608028654
cdef double GELU_K = 0.044715


cdef inline double _tanh(double u) nogil:
    # libm tanh is several times slower; exp overflow to inf still gives +-1
    return 1.0 - 2.0 / (exp(2.0 * u) + 1.0)


def gelu_forward(const real[:, ::1] x):
    cdef Py_ssize_t n = x.shape[0], m = x.shape[1], i, j
    cdef double v, t
    out = np.empty((n, m), dtype=np.asarray(x).dtype)
    cdef real[:, ::1] y = out
    for i in range(n):
        for j in range(m):
            v = x[i, j]
            t = _tanh(GELU_C * (v + GELU_K * v * v * v))
            y[i, j] = <real>(0.5 * v * (1.0 + t))
    return out


def gelu_backward(const real[:, ::1] x, const real[:, ::1] g):
    cdef Py_ssize_t n = x.shape[0], m = x.shape[1], i, j
    cdef double v, t, dt
    out = np.empty((n, m), dtype=np.asarray(x).dtype)
    cdef real[:, ::1] gx = out
    for i in range(n):
        for j in range(m):
            v = x[i, j]
            t = _tanh(GELU_C * (v + GELU_K * v * v * v))
            dt = (1.0 - t * t) * GELU_C * (1.0 + 3.0 * GELU_K * v * v)
            gx[i, j] = <real>(g[i, j] * (0.5 * (1.0 + t) + 0.5 * v * dt))
    return out


def layer_norm_forward(const real[:, ::1] x, const real[::1] gamma, const real[::1] beta, double eps):
    cdef Py_ssize_t n = x.shape[0], m = x.shape[1], i, j
    cdef double mu, var, d, r, xh
    dt = np.asarray(x).dtype
    out = np.empty((n, m), dtype=dt)
    xhat_arr = np.empty((n, m), dtype=dt)
    rstd_arr = np.empty(n, dtype=dt)
    cdef real[:, ::1] y = out
    cdef real[:, ::1] xhat = xhat_arr
    cdef real[::1] rstd = rstd_arr
    for i in range(n):
        mu = 0.0
        for j in range(m):
            mu += x[i, j]
        mu /= m
        var = 0.0
        for j in range(m):
            d = x[i, j] - mu
            var += d * d
        var /= m
        r = 1.0 / sqrt(var + eps)
        rstd[i] = <real>r
        for j in range(m):
            xh = (x[i, j] - mu) * r
            xhat[i, j] = <real>xh
            y[i, j] = <real>(xh * gamma[j] + beta[j])
    return out, xhat_arr, rstd_arr


def layer_norm_backward(const real[:, ::1] g, const real[:, ::1] xhat, const real[::1] rstd, const real[::1] gamma):
    cdef Py_ssize_t n = g.shape[0], m = g.shape[1], i, j
    cdef double s1, s2, gh
    dt = np.asarray(g).dtype
    gx_arr = np.empty((n, m), dtype=dt)
    acc_gamma = np.zeros(m, dtype=np.float64)
    acc_beta = np.zeros(m, dtype=np.float64)
    cdef double[::1] gg = acc_gamma
    cdef double[::1] gb = acc_beta
    cdef real[:, ::1] gx = gx_arr
    for i in range(n):
        s1 = 0.0
        s2 = 0.0
        for j in range(m):
            gg[j] += <double>g[i, j] * xhat[i, j]
            gb[j] += g[i, j]
            gh = <double>g[i, j] * gamma[j]
            s1 += gh
            s2 += gh * xhat[i, j]
        for j in range(m):
            gh = <double>g[i, j] * gamma[j]
            gx[i, j] = <real>((<double>rstd[i] / m) * (m * gh - s1 - xhat[i, j] * s2))
    return gx_arr, acc_gamma.astype(dt), acc_beta.astype(dt)


def softmax_forward(const real[:, ::1] x):
    cdef Py_ssize_t n = x.shape[0], m = x.shape[1], i, j
    cdef double mx, s
    out = np.empty((n, m), dtype=np.asarray(x).dtype)
    buf_arr = np.empty(m, dtype=np.float64)
    cdef double[::1] buf = buf_arr
    cdef real[:, ::1] y = out
    for i in range(n):
        mx = x[i, 0]
        for j in range(1, m):
            if x[i, j] > mx:
                mx = x[i, j]
        s = 0.0
        for j in range(m):
            buf[j] = exp(x[i, j] - mx)
            s += buf[j]
        for j in range(m):
            y[i, j] = <real>(buf[j] / s)
    return out


def log_softmax_forward(const real[:, ::1] x):
    cdef Py_ssize_t n = x.shape[0], m = x.shape[1], i, j
    cdef double mx, s, lse
    out = np.empty((n, m), dtype=np.asarray(x).dtype)
    cdef real[:, ::1] y = out
    for i in range(n):
        mx = x[i, 0]
        for j in range(1, m):
            if x[i, j] > mx:
                mx = x[i, j]
        s = 0.0
        for j in range(m):
            s += exp(x[i, j] - mx)
        lse = log(s)
        for j in range(m):
            y[i, j] = <real>((x[i, j] - mx) - lse)
    return out


def softmax_backward(const real[:, ::1] y, const double[:, ::1] g):
    cdef Py_ssize_t n = y.shape[0], m = y.shape[1], i, j
    cdef double dot
    out = np.empty((n, m), dtype=np.asarray(y).dtype)
    cdef real[:, ::1] gx = out
    for i in range(n):
        dot = 0.0
        for j in range(m):
            dot += g[i, j] * y[i, j]
        for j in range(m):
            gx[i, j] = <real>(y[i, j] * (g[i, j] - dot))
    return out


def log_softmax_backward(const real[:, ::1] logp, const double[:, ::1] g):
    cdef Py_ssize_t n = logp.shape[0], m = logp.shape[1], i, j
    cdef double s
    out = np.empty((n, m), dtype=np.asarray(logp).dtype)
    cdef real[:, ::1] gx = out
    for i in range(n):
        s = 0.0
        for j in range(m):
            s += g[i, j]
        for j in range(m):
            gx[i, j] = <real>(g[i, j] - exp(logp[i, j]) * s)
    return out
