"""Multi-indices, empirical moments and the moment-derivative tensors.

A moment network sees a measure only through the vector of its mixed
moments ``E[prod_i xi_i ** l_i]`` over a fixed set of multi-indices ``l``.
This module owns that set, computes the moments of particle clouds, and
provides the first and second derivatives of the monomial map that turn a
gradient in moment space into a Lions derivative.
"""

from dataclasses import dataclass, field
from itertools import product
from math import comb

import numpy as np

from . import _kernels


def _graded_lex(d, order):
    out = []
    for degree in range(1, order + 1):
        level = [ell for ell in product(range(degree + 1), repeat=d) if sum(ell) == degree]
        level.sort(reverse=True)
        out.extend(level)
    return out


@dataclass(frozen=True)
class MultiIndexSet:
    """All nonzero multi-indices of total degree at most ``order`` in ``d`` variables.

    Ordered by degree, then reverse-lexicographically within a degree, so for
    d=2, order=2 the moments are (E x1, E x2, E x1^2, E x1 x2, E x2^2).
    """

    d: int
    order: int
    exponents: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if self.d < 1 or self.order < 1:
            raise ValueError(f"need d >= 1 and order >= 1, got d={self.d}, order={self.order}")
        exps = np.array(_graded_lex(self.d, self.order), dtype=np.int64).reshape(-1, self.d)
        exps.setflags(write=False)
        object.__setattr__(self, "exponents", exps)

    @property
    def size(self):
        return len(self.exponents)

    def __len__(self):
        return self.size

    @property
    def indices(self):
        return [tuple(int(v) for v in row) for row in self.exponents]

    def first_order_positions(self):
        """Positions of E[x_i] for i = 0..d-1."""
        return list(range(self.d))

    def position(self, ell):
        ell = tuple(ell)
        for pos, row in enumerate(self.indices):
            if row == ell:
                return pos
        raise KeyError(ell)


def build_multi_index_set(d, order):
    idx = MultiIndexSet(d, order)
    assert idx.size == comb(d + order, d) - 1
    return idx


def empirical_moments(cloud, idx):
    """Plain particle average of every monomial in ``idx``.

    ``cloud`` is (M, d) for one measure or (N, M, d) for a batch; the result
    is (L,) or (N, L) accordingly.
    """
    cloud = np.asarray(cloud, dtype=float)
    if not np.all(np.isfinite(cloud)):
        raise ValueError("particle cloud has non-finite entries")
    if cloud.ndim == 2:
        return _kernels.batched_moments(cloud[None], idx.exponents)[0]
    if cloud.ndim != 3:
        raise ValueError(f"expected (M, d) or (N, M, d) cloud, got shape {cloud.shape}")
    return _kernels.batched_moments(cloud, idx.exponents)


def d1_tensor(xi, idx):
    """``D1(xi)[l, i] = d/dxi_i prod_k xi_k ** l_k`` as an (L, d) matrix."""
    xi = np.asarray(xi, dtype=float).reshape(idx.d)
    return _kernels.d1_d2(xi, idx.exponents)[0]


def d2_tensor(xi, idx):
    """``D2(xi)[l, i, j]``: second partials of the monomial map, (L, d, d)."""
    xi = np.asarray(xi, dtype=float).reshape(idx.d)
    return _kernels.d1_d2(xi, idx.exponents)[1]


def lions_weights(cloud, idx, moment_grad):
    """Lions-derivative weights of a moment-space gradient at every particle.

    For clouds (N, M, d) and per-cloud gradients ``moment_grad`` (N, L) with
    respect to the moment vector, returns ``D1(x)^T g`` (N, M, d) and
    ``sum_l D2(x)[l] g[l]`` (N, M, d, d).
    """
    return _kernels.lions_weights(cloud, idx.exponents, moment_grad)
