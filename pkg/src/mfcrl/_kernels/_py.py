"""Pure numpy implementations of the moment kernels.

Reference path for the compiled extension in ``_ext.pyx``; both must agree
to rounding.
"""

import numpy as np


def powers(x, order):
    """Table ``pw[..., i, e] = x[..., i] ** e`` for ``e = 0..order``.

    Built by repeated multiplication so that ``0 ** 0 == 1`` and small
    integer powers are exact.
    """
    pw = np.empty(x.shape + (order + 1,))
    pw[..., 0] = 1.0
    for e in range(1, order + 1):
        pw[..., e] = pw[..., e - 1] * x
    return pw


def _gather_product(pw, exps):
    # exps: (..., d) integer array over the trailing coordinate axis
    d = pw.shape[-2]
    out = pw[..., 0, exps[..., 0]]
    for k in range(1, d):
        out = out * pw[..., k, exps[..., k]]
    return out


def monomials(x, exps):
    """Evaluate every monomial ``prod_i x_i ** l_i`` at every point of ``x``."""
    exps = np.asarray(exps)
    pw = powers(np.asarray(x, dtype=float), int(exps.max()))
    return _gather_product(pw, exps)


def batched_moments(x, exps):
    """Empirical moments of a batch of clouds ``x`` of shape (B, M, d) -> (B, L)."""
    x = np.asarray(x, dtype=float)
    return monomials(x, exps).sum(axis=1) / x.shape[1]


def derivative_tables(exps):
    """Coefficients and reduced exponents of the first and second partials.

    Returns ``(c1, e1, c2, e2)`` with shapes (L, d), (L, d, d), (L, d, d) and
    (L, d, d, d) such that

        d/dx_i  x**l        = c1[l, i]    * prod_k x_k ** e1[l, i, k]
        d2/dx_i dx_j  x**l  = c2[l, i, j] * prod_k x_k ** e2[l, i, j, k]

    Exponents that would go negative carry a zero coefficient and are
    clipped to 0.
    """
    exps = np.asarray(exps, dtype=np.int64)
    n_idx, d = exps.shape
    eye = np.eye(d, dtype=np.int64)
    c1 = exps.astype(float)
    e1 = np.maximum(exps[:, None, :] - eye[None, :, :], 0)
    c2 = exps[:, :, None] * exps[:, None, :] - np.einsum("li,ij->lij", exps, eye)
    c2 = c2.astype(float)
    e2 = exps[:, None, None, :] - eye[None, :, None, :] - eye[None, None, :, :]
    e2 = np.maximum(e2, 0)
    return c1, e1, c2, e2


def d1_d2(x, exps):
    """Dense D1 (..., L, d) and D2 (..., L, d, d) tensors at every point of ``x``."""
    exps = np.asarray(exps, dtype=np.int64)
    c1, e1, c2, e2 = derivative_tables(exps)
    pw = powers(np.asarray(x, dtype=float), max(int(exps.max()), 1))
    d1 = c1 * _gather_product(pw, e1)
    d2 = c2 * _gather_product(pw, e2)
    return d1, d2


def lions_weights(x, exps, gbar):
    """Contract D1 and D2 at each particle with per-cloud moment weights.

    ``x`` is (B, M, d) and ``gbar`` is (B, L). Returns ``w1`` (B, M, d) with
    ``w1[b, j, i] = sum_l D1(x_bj)[l, i] gbar[b, l]`` and ``w2`` (B, M, d, d)
    with ``w2[b, j, i, k] = sum_l D2(x_bj)[l, i, k] gbar[b, l]``.
    """
    d1, d2 = d1_d2(x, exps)
    gbar = np.asarray(gbar, dtype=float)
    w1 = np.einsum("bmli,bl->bmi", d1, gbar)
    w2 = np.einsum("bmlij,bl->bmij", d2, gbar)
    return w1, w2
