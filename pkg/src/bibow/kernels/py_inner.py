"""Pure NumPy per-pair kernels; fallback when the compiled extension is absent.

Both backends implement the same two entry points over raw arrays:

  score_pair(...)  loss parts only, parameters untouched
  train_pair(...)  loss parts + one in-place SGD step on the weighted objective

The caller supplies each bag as sorted int32 indices plus the concatenation of
the tree paths of its tokens (`nodes` int32, `bits` float64), so the kernels
never walk a tree themselves. `parts_out` receives the four unweighted task
losses [x->x, y->y, x->y, y->x]; `weights` scales the gradient of each task.

Gradients of the four tasks are computed against the pre-step parameters and
applied as one combined update.
"""

from __future__ import annotations

import numpy as np

COMPILED = False


def _expit(a):
    out = np.empty_like(a)
    pos = a >= 0.0
    out[pos] = 1.0 / (1.0 + np.exp(-a[pos]))
    ea = np.exp(a[~pos])
    out[~pos] = ea / (1.0 + ea)
    return out


def _encode(W, c, idx, use_tanh):
    z = c.copy()
    for i in idx:
        z += W[:, i]
    return np.tanh(z) if use_tanh else z


def _task_loss(hidden, b, U, nodes, bits):
    a = b[nodes] + U[nodes] @ hidden
    return float(np.sum(np.logaddexp(0.0, a) - bits * a))


def score_pair(Wx, Wy, c, bx, Ux, by, Uy,
               x_idx, y_idx, x_nodes, x_bits, y_nodes, y_bits,
               use_tanh, parts_out):
    hx = _encode(Wx, c, x_idx, use_tanh)
    hy = _encode(Wy, c, y_idx, use_tanh)
    parts_out[0] = _task_loss(hx, bx, Ux, x_nodes, x_bits)
    parts_out[1] = _task_loss(hy, by, Uy, y_nodes, y_bits)
    parts_out[2] = _task_loss(hx, by, Uy, y_nodes, y_bits)
    parts_out[3] = _task_loss(hy, bx, Ux, x_nodes, x_bits)


def train_pair(Wx, Wy, c, bx, Ux, by, Uy,
               x_idx, y_idx, x_nodes, x_bits, y_nodes, y_bits,
               weights, lr, use_tanh, parts_out):
    hx = _encode(Wx, c, x_idx, use_tanh)
    hy = _encode(Wy, c, y_idx, use_tanh)

    gh_x = np.zeros_like(c)
    gh_y = np.zeros_like(c)

    # phase A: losses and traversal gradients against pre-step parameters
    def decode(hidden, b, U, nodes, bits, weight, gh):
        a = b[nodes] + U[nodes] @ hidden
        loss = float(np.sum(np.logaddexp(0.0, a) - bits * a))
        g = weight * (_expit(a) - bits)
        gh += U[nodes].T @ g
        return loss, g

    parts_out[0], g_xx = decode(hx, bx, Ux, x_nodes, x_bits, weights[0], gh_x)
    parts_out[1], g_yy = decode(hy, by, Uy, y_nodes, y_bits, weights[1], gh_y)
    parts_out[2], g_xy = decode(hx, by, Uy, y_nodes, y_bits, weights[2], gh_x)
    parts_out[3], g_yx = decode(hy, bx, Ux, x_nodes, x_bits, weights[3], gh_y)

    gpre_x = gh_x * (1.0 - hx * hx) if use_tanh else gh_x
    gpre_y = gh_y * (1.0 - hy * hy) if use_tanh else gh_y

    # phase B: one combined update
    c -= lr * (gpre_x + gpre_y)
    np.add.at(Wx.T, x_idx, -lr * gpre_x)
    np.add.at(Wy.T, y_idx, -lr * gpre_y)
    for b, U, nodes, g, hidden in (
        (bx, Ux, x_nodes, g_xx, hx),
        (by, Uy, y_nodes, g_yy, hy),
        (by, Uy, y_nodes, g_xy, hx),
        (bx, Ux, x_nodes, g_yx, hy),
    ):
        np.add.at(b, nodes, -lr * g)
        np.add.at(U, nodes, (-lr * g)[:, None] * hidden[None, :])
