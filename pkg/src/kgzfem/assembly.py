"""Global Q1 mass/stiffness matrices, load vectors and the scheme's nonlinear vectors.

Matrices are scipy CSR restricted to interior nodes (homogeneous Dirichlet).
Fields passed in are full nodal vectors (boundary entries zero); vectors
returned are indexed by interior node.  Complex fields are numpy complex arrays;
every complex form is evaluated as two real assemblies.
"""

from __future__ import annotations

from functools import cached_property, lru_cache

import numpy as np
import scipy.sparse as sp

from .basis import QuadratureRule, gauss_rule, q1_shapes
from .mesh import TensorMesh

DEFAULT_QUAD_ORDER = 3


class Q1Space:
    """Q1 finite element space on a tensor mesh with a fixed quadrature rule.

    All integrals computed here (matrices, loads, nonlinear terms) use the same
    rule, which is what makes the discrete energy telescope exactly.
    """

    def __init__(self, mesh: TensorMesh, quad_order: int = DEFAULT_QUAD_ORDER):
        self.mesh = mesh
        self.quad_order = quad_order
        self.rule: QuadratureRule = gauss_rule(quad_order, mesh.dim)
        shapes = q1_shapes(self.rule.points)
        self.phi_q = shapes.values  # (n_qp, n_basis)
        scale = 2.0 / np.asarray(mesh.h)
        self.dphi_q = shapes.gradients * scale  # physical gradients
        self.w_q = self.rule.weights * (mesh.cell_volume / 2**mesh.dim)

    @property
    def n(self) -> int:
        return self.mesh.n_interior

    # -- local matrices -------------------------------------------------
    @cached_property
    def local_mass(self) -> np.ndarray:
        return np.einsum("q,qa,qb->ab", self.w_q, self.phi_q, self.phi_q)

    @cached_property
    def local_stiffness(self) -> np.ndarray:
        return np.einsum("q,qad,qbd->ab", self.w_q, self.dphi_q, self.dphi_q)

    def _global(self, local: np.ndarray) -> sp.csr_matrix:
        el = self.mesh.elements
        nb = el.shape[1]
        rows = np.repeat(el, nb, axis=1).ravel()
        cols = np.tile(el, (1, nb)).ravel()
        data = np.broadcast_to(local.ravel(), (el.shape[0], nb * nb)).ravel()
        n = self.mesh.n_nodes
        return sp.coo_matrix((data, (rows, cols)), shape=(n, n)).tocsr()

    @cached_property
    def mass_full(self) -> sp.csr_matrix:
        return self._global(self.local_mass)

    @cached_property
    def stiffness_full(self) -> sp.csr_matrix:
        return self._global(self.local_stiffness)

    def _restrict(self, mat: sp.csr_matrix) -> sp.csr_matrix:
        idx = self.mesh.interior
        out = mat[idx][:, idx].tocsr()
        out.sort_indices()
        return out

    @cached_property
    def mass(self) -> sp.csr_matrix:
        return self._restrict(self.mass_full)

    @cached_property
    def stiffness(self) -> sp.csr_matrix:
        return self._restrict(self.stiffness_full)

    # -- quadrature-point evaluation -----------------------------------
    @cached_property
    def qp_coords(self) -> np.ndarray:
        """Physical quadrature points, shape (n_elements, n_qp, dim)."""
        ref = (self.rule.points + 1.0) * 0.5 * np.asarray(self.mesh.h)
        return self.mesh.element_origin[:, None, :] + ref[None, :, :]

    def at_qp(self, field: np.ndarray, elements=slice(None)) -> np.ndarray:
        """Q1 interpolant of a full nodal field at quadrature points, (n_el, n_qp)."""
        return np.asarray(field)[self.mesh.elements[elements]] @ self.phi_q.T

    def grad_at_qp(self, field: np.ndarray, elements=slice(None)) -> np.ndarray:
        """Gradient of the Q1 interpolant at quadrature points, (n_el, n_qp, dim)."""
        return np.einsum("ea,qad->eqd", np.asarray(field)[self.mesh.elements[elements]], self.dphi_q)

    def integrate(self, values_q: np.ndarray) -> float | complex:
        return np.sum(values_q @ self.w_q)

    def test_against_basis(self, values_q: np.ndarray) -> np.ndarray:
        """Interior vector (g, l_j) for an integrand sampled at quadrature points."""
        values_q = np.asarray(values_q)
        if np.iscomplexobj(values_q):
            return self.test_against_basis(values_q.real) + 1j * self.test_against_basis(values_q.imag)
        local = (values_q * self.w_q) @ self.phi_q  # (n_el, n_basis)
        full = np.bincount(self.mesh.elements.ravel(), weights=local.ravel(),
                           minlength=self.mesh.n_nodes)
        return full[self.mesh.interior]

    def test_gradient_against_basis(self, grads_q: np.ndarray) -> np.ndarray:
        """Interior vector (G, grad l_j) for a vector integrand at quadrature points."""
        grads_q = np.asarray(grads_q)
        if np.iscomplexobj(grads_q):
            return (self.test_gradient_against_basis(grads_q.real)
                    + 1j * self.test_gradient_against_basis(grads_q.imag))
        local = np.einsum("eqd,q,qad->ea", grads_q, self.w_q, self.dphi_q)
        full = np.bincount(self.mesh.elements.ravel(), weights=local.ravel(),
                           minlength=self.mesh.n_nodes)
        return full[self.mesh.interior]

    # -- scheme vectors -------------------------------------------------
    def load(self, f, t: float | None = None) -> np.ndarray:
        """(f, l_j) for a spatial function ``f(x)`` or ``f(x, t)``; x has shape (..., dim)."""
        x = self.qp_coords
        values = f(x) if t is None else f(x, t)
        return self.test_against_basis(np.broadcast_to(values, x.shape[:-1]))

    def nonlinear_u(self, u_new, u_old, varphi_avg) -> np.ndarray:
        """(varphi_avg * u_mid + (|u_new|^2 + |u_old|^2)/2 * u_mid, l_j), u_mid = (u_new+u_old)/2."""
        un = self.at_qp(u_new)
        uo = self.at_qp(u_old)
        mid = 0.5 * (un + uo)
        sq = 0.5 * (un.real**2 + un.imag**2 + uo.real**2 + uo.imag**2)
        return self.test_against_basis((self.at_qp(varphi_avg) + sq) * mid)

    def nonlinear_sq(self, u_new, u_old) -> np.ndarray:
        """((|u_new|^2 + |u_old|^2)/2, l_j)."""
        un = self.at_qp(u_new)
        uo = self.at_qp(u_old)
        return self.test_against_basis(0.5 * (un.real**2 + un.imag**2 + uo.real**2 + uo.imag**2))


@lru_cache(maxsize=8)
def space_for(mesh: TensorMesh, quad_order: int = DEFAULT_QUAD_ORDER) -> Q1Space:
    """Cached :class:`Q1Space`, so A and B are assembled once per mesh."""
    return Q1Space(mesh, quad_order)


def assemble_mass(mesh: TensorMesh, quad_order: int = DEFAULT_QUAD_ORDER) -> sp.csr_matrix:
    return space_for(mesh, quad_order).mass


def assemble_stiffness(mesh: TensorMesh, quad_order: int = DEFAULT_QUAD_ORDER) -> sp.csr_matrix:
    return space_for(mesh, quad_order).stiffness


def load_vector(mesh: TensorMesh, f, quad_order: int = DEFAULT_QUAD_ORDER) -> np.ndarray:
    return space_for(mesh, quad_order).load(f)


def nonlinear_u_vector(mesh, u_new, u_old, varphi_avg, quad_order: int = DEFAULT_QUAD_ORDER):
    return space_for(mesh, quad_order).nonlinear_u(u_new, u_old, varphi_avg)


def nonlinear_sq_vector(mesh, u_new, u_old, quad_order: int = DEFAULT_QUAD_ORDER):
    return space_for(mesh, quad_order).nonlinear_sq(u_new, u_old)
