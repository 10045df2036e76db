"""Reference-cell Lagrange shape functions and Gauss-Legendre rules on [-1, 1]^dim."""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

MAX_GAUSS_POINTS = 6


@dataclass(frozen=True)
class QuadratureRule:
    points: np.ndarray  # (n_points, dim)
    weights: np.ndarray  # (n_points,)

    @property
    def dim(self) -> int:
        return self.points.shape[1]

    def __len__(self) -> int:
        return len(self.weights)


@dataclass(frozen=True)
class ShapeSet:
    """Shape function values (..., n_basis) and reference gradients (..., n_basis, dim)."""

    values: np.ndarray
    gradients: np.ndarray


def _lex_product(arrays, dim):
    # x index fastest, matching mesh node order
    combos = itertools.product(*([arrays] * dim))
    return [c[::-1] for c in combos]


def gauss_rule(points_per_axis: int, dim: int) -> QuadratureRule:
    """Tensor-product Gauss-Legendre rule, exact to degree 2n-1 per axis."""
    n = int(points_per_axis)
    if not 1 <= n <= MAX_GAUSS_POINTS:
        raise ValueError(f"points_per_axis must be in 1..{MAX_GAUSS_POINTS}, got {points_per_axis}")
    if dim not in (1, 2, 3):
        raise ValueError(f"dim must be 1, 2 or 3, got {dim}")
    x, w = np.polynomial.legendre.leggauss(n)
    pts = np.array(_lex_product(list(x), dim), dtype=float).reshape(-1, dim)
    wts = np.prod(np.array(_lex_product(list(w), dim), dtype=float).reshape(-1, dim), axis=1)
    return QuadratureRule(pts, wts)


def _lagrange_1d(nodes: np.ndarray, x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """1D Lagrange basis through ``nodes`` and its derivative, shape (len(x), len(nodes))."""
    x = np.asarray(x, dtype=float)[..., None]
    k = len(nodes)
    vals = np.ones(x.shape[:-1] + (k,))
    ders = np.zeros(x.shape[:-1] + (k,))
    for i in range(k):
        others = [nodes[j] for j in range(k) if j != i]
        denom = np.prod([nodes[i] - o for o in others])
        factors = [x[..., 0] - o for o in others]
        vals[..., i] = np.prod(factors, axis=0) / denom
        d = np.zeros(x.shape[:-1])
        for a in range(len(factors)):
            d = d + np.prod([f for b, f in enumerate(factors) if b != a], axis=0)
        ders[..., i] = d / denom
    return vals, ders


def _tensor_shapes(nodes_1d: np.ndarray, ref_point) -> ShapeSet:
    ref = np.asarray(ref_point, dtype=float)
    dim = ref.shape[-1]
    k = len(nodes_1d)
    per_axis = [_lagrange_1d(nodes_1d, ref[..., d]) for d in range(dim)]
    # basis index a = a0 + k*a1 + k^2*a2 (x fastest)
    multi = np.array(_lex_product(list(range(k)), dim), dtype=np.int64).reshape(-1, dim)
    values = np.ones(ref.shape[:-1] + (len(multi),))
    for d in range(dim):
        values = values * per_axis[d][0][..., multi[:, d]]
    grads = np.ones(ref.shape[:-1] + (len(multi), dim))
    for g in range(dim):
        for d in range(dim):
            table = per_axis[d][1] if d == g else per_axis[d][0]
            grads[..., g] = grads[..., g] * table[..., multi[:, d]]
    return ShapeSet(values, grads)


def q1_shapes(ref_point) -> ShapeSet:
    """Bilinear/trilinear nodal basis at ``ref_point`` (shape (dim,) or (n, dim)).

    Evaluation outside the reference cell is allowed.
    """
    return _tensor_shapes(np.array([-1.0, 1.0]), ref_point)


def q2_shapes(ref_point) -> ShapeSet:
    """Biquadratic/triquadratic nodal basis on the 3**dim grid {-1, 0, 1}^dim."""
    return _tensor_shapes(np.array([-1.0, 0.0, 1.0]), ref_point)


def q1_reference_nodes(dim: int) -> np.ndarray:
    return np.array(_lex_product([-1.0, 1.0], dim)).reshape(-1, dim)


def q2_reference_nodes(dim: int) -> np.ndarray:
    return np.array(_lex_product([-1.0, 0.0, 1.0], dim)).reshape(-1, dim)
