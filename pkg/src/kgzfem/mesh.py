"""Uniform tensor-product meshes of rectangles (2D) and cuboids (3D).

Nodes are numbered lexicographically with the x index running fastest, so
node ``(i, j, k)`` has flat index ``i + (Mx+1) * (j + (My+1) * k)``.  Element
corners follow the same ordering on the reference cell ``[-1, 1]^dim``.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np


class PostprocessingUnavailable(ValueError):
    """Raised when macro patches are requested on a mesh with an odd subdivision."""


def corner_offsets(dim: int) -> np.ndarray:
    """Corner offsets of a cell in {0,1}^dim, lexicographic with x fastest."""
    # itertools.product varies the last slot fastest; reverse to put x first
    return np.array([c[::-1] for c in itertools.product((0, 1), repeat=dim)], dtype=np.int64)


@dataclass(frozen=True)
class TensorMesh:
    dim: int
    origin: tuple[float, ...]
    extent: tuple[float, ...]
    subdivisions: tuple[int, ...]
    h: tuple[float, ...] = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, "h", tuple(e / m for e, m in zip(self.extent, self.subdivisions)))

    @property
    def shape(self) -> tuple[int, ...]:
        """Number of nodes per axis."""
        return tuple(m + 1 for m in self.subdivisions)

    @property
    def n_nodes(self) -> int:
        return int(np.prod(self.shape))

    @property
    def n_elements(self) -> int:
        return int(np.prod(self.subdivisions))

    @property
    def cell_volume(self) -> float:
        return float(np.prod(self.h))

    @property
    def volume(self) -> float:
        return float(np.prod(self.extent))

    def flat_index(self, idx) -> np.ndarray:
        """Map grid indices of shape (..., dim) to flat node indices."""
        idx = np.asarray(idx, dtype=np.int64)
        flat = np.zeros(idx.shape[:-1], dtype=np.int64)
        stride = 1
        for d in range(self.dim):
            flat = flat + idx[..., d] * stride
            stride *= self.shape[d]
        return flat

    def grid_index(self, flat) -> np.ndarray:
        """Inverse of :meth:`flat_index`."""
        flat = np.asarray(flat, dtype=np.int64)
        out = np.empty(flat.shape + (self.dim,), dtype=np.int64)
        rem = flat.copy()
        for d in range(self.dim):
            out[..., d] = rem % self.shape[d]
            rem = rem // self.shape[d]
        return out

    @cached_property
    def axes(self) -> list[np.ndarray]:
        return [self.origin[d] + self.h[d] * np.arange(self.shape[d]) for d in range(self.dim)]

    @cached_property
    def nodes(self) -> np.ndarray:
        """Node coordinates, shape (n_nodes, dim)."""
        grids = np.meshgrid(*self.axes, indexing="ij")
        # ravel in Fortran order so that x varies fastest
        return np.stack([g.ravel(order="F") for g in grids], axis=-1)

    @cached_property
    def element_index(self) -> np.ndarray:
        """Grid index of the lower corner of each element, shape (n_elements, dim)."""
        grids = np.meshgrid(*[np.arange(m) for m in self.subdivisions], indexing="ij")
        return np.stack([g.ravel(order="F") for g in grids], axis=-1)

    @cached_property
    def elements(self) -> np.ndarray:
        """Element-to-node connectivity, shape (n_elements, 2**dim)."""
        corners = self.element_index[:, None, :] + corner_offsets(self.dim)[None, :, :]
        return self.flat_index(corners)

    @cached_property
    def element_origin(self) -> np.ndarray:
        """Coordinates of the lower corner of each element."""
        return np.asarray(self.origin) + self.element_index * np.asarray(self.h)

    @cached_property
    def boundary_mask(self) -> np.ndarray:
        idx = self.grid_index(np.arange(self.n_nodes))
        upper = np.asarray(self.subdivisions)
        return np.any((idx == 0) | (idx == upper), axis=-1)

    @cached_property
    def interior(self) -> np.ndarray:
        """Flat indices of interior nodes, increasing."""
        return np.flatnonzero(~self.boundary_mask)

    @property
    def n_interior(self) -> int:
        return int(self.interior.size)

    def restrict(self, field: np.ndarray) -> np.ndarray:
        return np.asarray(field)[self.interior]

    def extend(self, values: np.ndarray) -> np.ndarray:
        """Embed interior values into a full nodal vector with zero boundary."""
        values = np.asarray(values)
        out = np.zeros(self.n_nodes, dtype=values.dtype)
        out[self.interior] = values
        return out

    def locate(self, points: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Element index and reference coordinates in [-1,1]^dim of each point.

        Points on an interior face go to the element above; points outside the
        domain are clamped to the nearest boundary element.
        """
        points = np.atleast_2d(points)
        rel = (points - np.asarray(self.origin)) / np.asarray(self.h)
        cell = np.clip(np.floor(rel).astype(np.int64), 0, np.asarray(self.subdivisions) - 1)
        ref = 2.0 * (rel - cell) - 1.0
        stride = np.cumprod((1,) + self.subdivisions[:-1])
        return cell @ stride, ref


def build_mesh(dim: int, origin, extent, subdivisions) -> TensorMesh:
    """Build a uniform tensor mesh; per-axis sizes may differ."""
    if dim not in (2, 3):
        raise ValueError(f"dim must be 2 or 3, got {dim}")
    origin = tuple(float(o) for o in np.broadcast_to(np.asarray(origin, dtype=float), (dim,)))
    extent = tuple(float(e) for e in np.broadcast_to(np.asarray(extent, dtype=float), (dim,)))
    subdivisions = tuple(int(m) for m in np.broadcast_to(np.asarray(subdivisions), (dim,)))
    if any(not e > 0 for e in extent):
        raise ValueError(f"extent must be positive on every axis, got {extent}")
    if any(m < 2 for m in subdivisions):
        raise ValueError(f"need at least 2 subdivisions per axis, got {subdivisions}")
    return TensorMesh(dim, origin, extent, subdivisions)


def unit_mesh(dim: int, m: int) -> TensorMesh:
    return build_mesh(dim, (0.0,) * dim, (1.0,) * dim, (m,) * dim)


@dataclass(frozen=True)
class MacroPatchSet:
    """2x2 (or 2x2x2) element groups used by the postprocessing interpolant.

    ``nodes[q]`` lists the 3**dim nodes of patch ``q`` lexicographically and
    ``elements[q]`` its 2**dim elements.  ``origin[q]`` is the patch's lower
    corner in grid-index units.
    """

    mesh: TensorMesh
    nodes: np.ndarray
    elements: np.ndarray
    origin: np.ndarray

    def __len__(self) -> int:
        return len(self.nodes)

    def patch_of_element(self) -> np.ndarray:
        out = np.empty(self.mesh.n_elements, dtype=np.int64)
        out[self.elements] = np.arange(len(self))[:, None]
        return out


def macro_patches(mesh: TensorMesh) -> MacroPatchSet:
    if any(m % 2 for m in mesh.subdivisions):
        raise PostprocessingUnavailable(
            f"postprocessing unavailable: subdivisions {mesh.subdivisions} must all be even"
        )
    dim = mesh.dim
    coarse = [np.arange(0, m, 2) for m in mesh.subdivisions]
    grids = np.meshgrid(*coarse, indexing="ij")
    origin = np.stack([g.ravel(order="F") for g in grids], axis=-1)

    offsets3 = np.array([c[::-1] for c in itertools.product((0, 1, 2), repeat=dim)], dtype=np.int64)
    nodes = mesh.flat_index(origin[:, None, :] + offsets3[None, :, :])

    offsets2 = corner_offsets(dim)
    el_idx = origin[:, None, :] + offsets2[None, :, :]
    stride = np.cumprod((1,) + mesh.subdivisions[:-1])
    elements = el_idx @ stride
    return MacroPatchSet(mesh, nodes, elements, origin)
