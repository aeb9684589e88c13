# cython: boundscheck=False, wraparound=False, initializedcheck=False, cdivision=True
"""Compiled per-pair kernels; same contract as `bibow.kernels.py_inner`."""

import numpy as np

from libc.math cimport exp, log1p, tanh

COMPILED = True


cdef inline double _softplus(double a) noexcept nogil:
    if a > 0.0:
        return a + log1p(exp(-a))
    return log1p(exp(a))


cdef inline double _sigmoid(double a) noexcept nogil:
    cdef double ea
    if a >= 0.0:
        return 1.0 / (1.0 + exp(-a))
    ea = exp(a)
    return ea / (1.0 + ea)


cdef void _encode(double[:, ::1] W, double[::1] c, int[::1] idx,
                  int use_tanh, double[::1] hidden) noexcept nogil:
    cdef Py_ssize_t d, i, col
    cdef Py_ssize_t D = c.shape[0]
    for d in range(D):
        hidden[d] = c[d]
    for i in range(idx.shape[0]):
        col = idx[i]
        for d in range(D):
            hidden[d] += W[d, col]
    if use_tanh:
        for d in range(D):
            hidden[d] = tanh(hidden[d])


cdef double _score_task(double[::1] hidden, double[::1] b, double[:, ::1] U,
                        int[::1] nodes, double[::1] bits) noexcept nogil:
    cdef Py_ssize_t k, d, n
    cdef Py_ssize_t D = hidden.shape[0]
    cdef double a, loss = 0.0
    for k in range(nodes.shape[0]):
        n = nodes[k]
        a = b[n]
        for d in range(D):
            a += U[n, d] * hidden[d]
        loss += _softplus(a) - bits[k] * a
    return loss


cdef double _decode_task(double[::1] hidden, double[::1] b, double[:, ::1] U,
                         int[::1] nodes, double[::1] bits, double weight,
                         double[::1] g_out, double[::1] gh) noexcept nogil:
    # unweighted loss; weighted traversal gradients into g_out, hidden
    # gradient accumulated into gh; reads only, so later tasks still see
    # the pre-step parameters
    cdef Py_ssize_t k, d, n
    cdef Py_ssize_t D = hidden.shape[0]
    cdef double a, g, loss = 0.0
    for k in range(nodes.shape[0]):
        n = nodes[k]
        a = b[n]
        for d in range(D):
            a += U[n, d] * hidden[d]
        loss += _softplus(a) - bits[k] * a
        g = weight * (_sigmoid(a) - bits[k])
        g_out[k] = g
        for d in range(D):
            gh[d] += g * U[n, d]
    return loss


cdef void _apply_decoder(double[::1] b, double[:, ::1] U, int[::1] nodes,
                         double[::1] g, double[::1] hidden, double lr) noexcept nogil:
    cdef Py_ssize_t k, d, n
    cdef Py_ssize_t D = hidden.shape[0]
    for k in range(nodes.shape[0]):
        n = nodes[k]
        b[n] -= lr * g[k]
        for d in range(D):
            U[n, d] -= lr * g[k] * hidden[d]


cdef void _apply_embedding(double[:, ::1] W, int[::1] idx, double[::1] gpre,
                           double lr) noexcept nogil:
    cdef Py_ssize_t i, d, col
    cdef Py_ssize_t D = gpre.shape[0]
    for i in range(idx.shape[0]):
        col = idx[i]
        for d in range(D):
            W[d, col] -= lr * gpre[d]


def score_pair(double[:, ::1] Wx, double[:, ::1] Wy, double[::1] c,
               double[::1] bx, double[:, ::1] Ux,
               double[::1] by, double[:, ::1] Uy,
               int[::1] x_idx, int[::1] y_idx,
               int[::1] x_nodes, double[::1] x_bits,
               int[::1] y_nodes, double[::1] y_bits,
               int use_tanh, double[::1] parts_out):
    cdef Py_ssize_t D = c.shape[0]
    hx_arr = np.empty(D)
    hy_arr = np.empty(D)
    cdef double[::1] hx = hx_arr
    cdef double[::1] hy = hy_arr
    with nogil:
        _encode(Wx, c, x_idx, use_tanh, hx)
        _encode(Wy, c, y_idx, use_tanh, hy)
        parts_out[0] = _score_task(hx, bx, Ux, x_nodes, x_bits)
        parts_out[1] = _score_task(hy, by, Uy, y_nodes, y_bits)
        parts_out[2] = _score_task(hx, by, Uy, y_nodes, y_bits)
        parts_out[3] = _score_task(hy, bx, Ux, x_nodes, x_bits)


def train_pair(double[:, ::1] Wx, double[:, ::1] Wy, double[::1] c,
               double[::1] bx, double[:, ::1] Ux,
               double[::1] by, double[:, ::1] Uy,
               int[::1] x_idx, int[::1] y_idx,
               int[::1] x_nodes, double[::1] x_bits,
               int[::1] y_nodes, double[::1] y_bits,
               double[::1] weights, double lr,
               int use_tanh, double[::1] parts_out):
    cdef Py_ssize_t D = c.shape[0]
    cdef Py_ssize_t nx = x_nodes.shape[0]
    cdef Py_ssize_t ny = y_nodes.shape[0]

    hx_arr = np.empty(D)
    hy_arr = np.empty(D)
    gh_x_arr = np.zeros(D)
    gh_y_arr = np.zeros(D)
    gpre_x_arr = np.empty(D)
    gpre_y_arr = np.empty(D)
    g_xx_arr = np.empty(nx)
    g_yy_arr = np.empty(ny)
    g_xy_arr = np.empty(ny)
    g_yx_arr = np.empty(nx)

    cdef double[::1] hx = hx_arr, hy = hy_arr
    cdef double[::1] gh_x = gh_x_arr, gh_y = gh_y_arr
    cdef double[::1] gpre_x = gpre_x_arr, gpre_y = gpre_y_arr
    cdef double[::1] g_xx = g_xx_arr, g_yy = g_yy_arr
    cdef double[::1] g_xy = g_xy_arr, g_yx = g_yx_arr
    cdef Py_ssize_t d

    with nogil:
        _encode(Wx, c, x_idx, use_tanh, hx)
        _encode(Wy, c, y_idx, use_tanh, hy)

        parts_out[0] = _decode_task(hx, bx, Ux, x_nodes, x_bits, weights[0], g_xx, gh_x)
        parts_out[1] = _decode_task(hy, by, Uy, y_nodes, y_bits, weights[1], g_yy, gh_y)
        parts_out[2] = _decode_task(hx, by, Uy, y_nodes, y_bits, weights[2], g_xy, gh_x)
        parts_out[3] = _decode_task(hy, bx, Ux, x_nodes, x_bits, weights[3], g_yx, gh_y)

        if use_tanh:
            for d in range(D):
                gpre_x[d] = gh_x[d] * (1.0 - hx[d] * hx[d])
                gpre_y[d] = gh_y[d] * (1.0 - hy[d] * hy[d])
        else:
            for d in range(D):
                gpre_x[d] = gh_x[d]
                gpre_y[d] = gh_y[d]

        for d in range(D):
            c[d] -= lr * (gpre_x[d] + gpre_y[d])
        _apply_embedding(Wx, x_idx, gpre_x, lr)
        _apply_embedding(Wy, y_idx, gpre_y, lr)
        _apply_decoder(bx, Ux, x_nodes, g_xx, hx, lr)
        _apply_decoder(by, Uy, y_nodes, g_yy, hy, lr)
        _apply_decoder(by, Uy, y_nodes, g_xy, hx, lr)
        _apply_decoder(bx, Ux, x_nodes, g_yx, hy, lr)
