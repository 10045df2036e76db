"""Discrete energy, error norms, nodal interpolation and the 2h postprocessing interpolant."""

from __future__ import annotations

import math
from dataclasses import dataclass, field, fields

import numpy as np

from .assembly import Q1Space, space_for
from .basis import q2_shapes
from .mesh import MacroPatchSet, TensorMesh, macro_patches

ERROR_QUAD_ORDER = 5
EXACT_THRESHOLD = 1e-9

MEASURES = ("err_Ihu_H1", "err_I2hu_H1", "err_Ihphi_H1", "err_I2hphi_H1", "err_p_L2", "err_varphi_L2")


@dataclass(frozen=True)
class EnergyBreakdown:
    grad_u: float
    l2_u: float
    l2_p: float
    half_l2_varphi: float
    half_grad_phi: float
    half_l4_u: float
    cross: float

    @property
    def parts(self) -> tuple[float, ...]:
        return tuple(getattr(self, f.name) for f in fields(self))

    @property
    def total(self) -> float:
        return math.fsum(self.parts)


def _cquad(vec, mat):
    """Re(v^H M v) for a complex (or real) interior vector."""
    if np.iscomplexobj(vec):
        return float(vec.real @ (mat @ vec.real) + vec.imag @ (mat @ vec.imag))
    return float(vec @ (mat @ vec))


def energy(state, space: Q1Space) -> EnergyBreakdown:
    """Seven-term discrete energy of a state, using ``space``'s quadrature rule.

    The gradient term is the H1 seminorm; only this reading telescopes under
    the scheme.
    """
    mesh = space.mesh
    A, B = space.mass, space.stiffness
    u, p = mesh.restrict(state.u), mesh.restrict(state.p)
    phi, varphi = mesh.restrict(state.phi), mesh.restrict(state.varphi)
    uq = space.at_qp(state.u)
    mod2 = uq.real**2 + uq.imag**2
    return EnergyBreakdown(
        grad_u=_cquad(u, B),
        l2_u=_cquad(u, A),
        l2_p=_cquad(p, A),
        half_l2_varphi=0.5 * _cquad(varphi, A),
        half_grad_phi=0.5 * _cquad(phi, B),
        half_l4_u=0.5 * float(space.integrate(mod2**2)),
        cross=float(space.integrate(space.at_qp(state.varphi) * mod2)),
    )


def interpolate(mesh: TensorMesh, g, t: float | None = None) -> np.ndarray:
    """Nodal interpolant I_h g; boundary nodes are clamped to zero."""
    vals = np.asarray(g(mesh.nodes) if t is None else g(mesh.nodes, t))
    out = np.array(np.broadcast_to(vals, (mesh.n_nodes,)))
    out[mesh.boundary_mask] = 0
    return out


class PatchInterpolant:
    """Piecewise Q2 interpolant of a nodal field on 2x2(x2) macro patches."""

    def __init__(self, field: np.ndarray, mesh: TensorMesh, patches: MacroPatchSet | None = None):
        if patches is None:
            patches = macro_patches(mesh)
        self.mesh = mesh
        self.patches = patches
        self.coef = np.asarray(field)[patches.nodes]  # (n_patches, 3**dim)
        self._patch_of_element = patches.patch_of_element()

    def evaluate(self, points: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Values (...,) and gradients (..., dim) at physical points."""
        points = np.asarray(points, dtype=float)
        lead = points.shape[:-1]
        flat = points.reshape(-1, self.mesh.dim)
        h = np.asarray(self.mesh.h)
        el, _ = self.mesh.locate(flat)
        q = self._patch_of_element[el]
        lower = np.asarray(self.mesh.origin) + self.patches.origin[q] * h
        ref = (flat - lower) / h - 1.0  # patch spans 2h per axis
        shapes = q2_shapes(ref)
        coef = self.coef[q]
        vals = np.sum(coef * shapes.values, axis=-1)
        grads = np.einsum("pa,pad->pd", coef, shapes.gradients) / h
        return vals.reshape(lead), grads.reshape(lead + (self.mesh.dim,))


def postprocess_I2h(field: np.ndarray, mesh: TensorMesh, patches: MacroPatchSet | None = None):
    return PatchInterpolant(field, mesh, patches)


def _field_at_qp(field, space: Q1Space, chunk: slice):
    if isinstance(field, PatchInterpolant):
        return field.evaluate(space.qp_coords[chunk])
    if callable(field):
        return field(space.qp_coords[chunk])
    return space.at_qp(field, chunk), space.grad_at_qp(field, chunk)


# elements per block when sampling fields at error-quadrature points
_CHUNK = 4096


def error_norm(field, exact, grad_exact, mesh: TensorMesh, which: str = "L2",
               quad_order: int = ERROR_QUAD_ORDER) -> float:
    """Norm of ``field - exact`` by quadrature.

    ``field`` is a full nodal vector (Q1), a :class:`PatchInterpolant`, or a
    callable returning (values, gradients) at points.  ``exact`` and
    ``grad_exact`` are spatial callables or None for zero.
    """
    if which not in ("L2", "H1semi", "H1", "L4"):
        raise ValueError(f"unknown norm {which!r}: expected L2, H1semi, H1 or L4")
    space = space_for(mesh, quad_order)
    total = 0.0
    for start in range(0, mesh.n_elements, _CHUNK):
        chunk = slice(start, start + _CHUNK)
        x = space.qp_coords[chunk]
        vals, grads = _field_at_qp(field, space, chunk)
        ev = vals - (exact(x) if exact is not None else 0.0)
        if which == "L4":
            total += float(space.integrate(np.abs(ev) ** 4))
            continue
        if which in ("L2", "H1"):
            total += float(space.integrate(np.abs(ev) ** 2))
        if which in ("H1semi", "H1"):
            eg = grads - (grad_exact(x) if grad_exact is not None else 0.0)
            total += float(space.integrate(np.sum(np.abs(eg) ** 2, axis=-1)))
    return total ** 0.25 if which == "L4" else math.sqrt(total)


def discrete_h1(nodal: np.ndarray, space: Q1Space) -> float:
    """Exact H1 norm of a Q1 field from its nodal coefficients."""
    v = space.mesh.restrict(nodal)
    return math.sqrt(_cquad(v, space.mass) + _cquad(v, space.stiffness))


def observed_order(e_coarse: float, e_fine: float, h_coarse: float, h_fine: float) -> float | None:
    if e_coarse < EXACT_THRESHOLD or e_fine < EXACT_THRESHOLD:
        return None
    return math.log(e_coarse / e_fine) / math.log(h_coarse / h_fine)


@dataclass
class ConvergenceRow:
    M: int
    h: float
    tau: float
    errors: dict[str, float]
    orders: dict[str, float | None] = field(default_factory=dict)
    # plain ||u - u_h||_1, reported alongside to expose the supercloseness gap
    err_u_H1: float = float("nan")
    order_u_H1: float | None = None

    def is_exact(self, measure: str) -> bool:
        return self.errors[measure] < EXACT_THRESHOLD


def resolve_tau(rule: str, h: float) -> float:
    """Time step from a rule: ``h``, ``h/2`` or ``const:<value>`` (a leading ``tau=`` is ignored)."""
    rule = rule.strip()
    if rule.startswith("tau="):
        rule = rule[4:]
    if rule == "h":
        return h
    if rule == "h/2":
        return 0.5 * h
    if rule.startswith("const:"):
        tau = float(rule[6:])
    else:
        try:
            tau = float(rule)
        except ValueError:
            raise ValueError(f"unknown tau rule {rule!r}: use h, h/2 or const:<value>") from None
    if not tau > 0:
        raise ValueError(f"time step must be positive, got {tau}")
    return tau


def measure_errors(state, problem, mesh: TensorMesh, quad_order: int = 3) -> dict[str, float]:
    """The six error measures (plus the plain H1 error of u) at ``state.time``."""
    sol, t = problem.exact, state.time
    space = space_for(mesh, quad_order)
    Ihu = interpolate(mesh, lambda x: sol.u(x, t))
    Ihphi = interpolate(mesh, lambda x: sol.phi(x, t))
    patches = macro_patches(mesh)
    out = {
        "err_Ihu_H1": discrete_h1(Ihu - state.u, space),
        "err_I2hu_H1": error_norm(PatchInterpolant(state.u, mesh, patches),
                                  lambda x: sol.u(x, t), lambda x: sol.grad_u(x, t), mesh, "H1"),
        "err_Ihphi_H1": discrete_h1(Ihphi - state.phi, space),
        "err_I2hphi_H1": error_norm(PatchInterpolant(state.phi, mesh, patches),
                                    lambda x: sol.phi(x, t), lambda x: sol.grad_phi(x, t), mesh, "H1"),
        "err_p_L2": error_norm(state.p, lambda x: sol.p(x, t), None, mesh, "L2"),
        "err_varphi_L2": error_norm(state.varphi, lambda x: sol.varphi(x, t), None, mesh, "L2"),
        "err_u_H1": error_norm(state.u, lambda x: sol.u(x, t), lambda x: sol.grad_u(x, t), mesh, "H1"),
    }
    return out


def convergence_study(problem, M_list, tau_rule: str = "h", T: float | None = None,
                      quad_order: int = 3, **tolerances) -> list[ConvergenceRow]:
    """Run ``problem`` on each mesh in ``M_list`` and tabulate errors and observed orders."""
    from .mesh import build_mesh
    from .scheme import TimeGrid, run

    if problem.exact is None:
        raise ValueError(f"problem {problem.name!r} has no exact solution")
    M_list = [int(m) for m in M_list]
    if not M_list:
        raise ValueError("need at least one mesh size")
    if any(b <= a for a, b in zip(M_list, M_list[1:])):
        raise ValueError(f"mesh sizes must increase, got {M_list}")
    T = problem.T if T is None else T

    rows: list[ConvergenceRow] = []
    for M in M_list:
        mesh = build_mesh(problem.dim, problem.origin, problem.extent, (M,) * problem.dim)
        h = max(mesh.h)
        tau = resolve_tau(tau_rule, h)
        space = space_for(mesh, quad_order)
        traj = run(space, TimeGrid.from_final_time(T, tau), problem, track_energy=False, **tolerances)
        errs = measure_errors(traj.final, problem, mesh, quad_order)
        plain = errs.pop("err_u_H1")
        rows.append(ConvergenceRow(M, h, tau, errs, err_u_H1=plain))

    for prev, row in zip(rows, rows[1:]):
        row.orders = {k: observed_order(prev.errors[k], row.errors[k], prev.h, row.h) for k in MEASURES}
        row.order_u_H1 = observed_order(prev.err_u_H1, row.err_u_H1, prev.h, row.h)
    return rows
