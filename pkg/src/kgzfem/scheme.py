"""Energy-conserving Crank-Nicolson step for the KGZ system and its time loop.

One step seeks (u^n, p^n, phi^n, varphi^n) with, for all test functions,

    (a) (p_mid, v)            = ((u^n - u^{n-1}) / tau, v)
    (b) ((p^n - p^{n-1}) / tau, v) + (grad u_mid, grad v) + (u_mid, v)
          + (varphi_mid u_mid, v) + (|u|^2_avg u_mid, v)   = (f_u, v)
    (c) (grad phi_mid, grad w) = -((varphi^n - varphi^{n-1}) / tau, w)
    (d) ((phi^n - phi^{n-1}) / tau, w) - (varphi_mid, w) - (|u|^2_avg, w) = (f_w, w)

where ``x_mid = (x^n + x^{n-1})/2`` and ``|u|^2_avg = (|u^n|^2 + |u^{n-1}|^2)/2``.
The nonlinear terms are frozen at the current iterate (U, X) of (u^n, varphi^n)
and the remaining linear problem is reduced to two SPD solves:

    (2A + tau^2/2 (A+B)) P = 2A p0 - 2 tau (A+B) u0 - tau^2/2 (A+B) p0 + 2 tau (F_u - N),
    U = u0 + tau/2 (P + p0),
    (2A + tau^2/2 B) Y = 2A phi0 + 2 tau A varphi0 - tau^2/2 B phi0 + 2 tau (S + F_w),
    X = varphi0 - tau/2 A^{-1} B (Y + phi0).
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from .assembly import Q1Space
from .linalg import DEFAULT_CG_TOL, SolverError, cg_solve, jacobi_precondition
from .problems import Forcing, ProblemSpec

log = logging.getLogger(__name__)

DEFAULT_PICARD_TOL = 1e-12
DEFAULT_MAX_PICARD = 100


class StepFailure(RuntimeError):
    """Picard iteration did not converge; carries the report (and partial trajectory in :func:`run`)."""

    def __init__(self, message, report=None):
        super().__init__(message)
        self.report = report
        self.trajectory = None


@dataclass
class StepState:
    """Full nodal vectors (boundary entries zero) at time ``time``."""

    u: np.ndarray  # complex
    p: np.ndarray  # complex
    phi: np.ndarray  # potential
    varphi: np.ndarray  # ion density deviation
    time: float = 0.0

    def copy(self) -> "StepState":
        return StepState(self.u.copy(), self.p.copy(), self.phi.copy(), self.varphi.copy(), self.time)

    def conjugate(self) -> "StepState":
        return StepState(self.u.conj(), self.p.conj(), self.phi.copy(), self.varphi.copy(), self.time)

    @classmethod
    def zeros(cls, n_nodes: int, time: float = 0.0) -> "StepState":
        return cls(np.zeros(n_nodes, complex), np.zeros(n_nodes, complex),
                   np.zeros(n_nodes), np.zeros(n_nodes), time)


@dataclass(frozen=True)
class TimeGrid:
    tau: float
    N: int

    def __post_init__(self):
        if not self.tau > 0:
            raise ValueError(f"time step must be positive, got {self.tau}")
        if self.N < 0:
            raise ValueError(f"step count must be non-negative, got {self.N}")

    @property
    def T(self) -> float:
        return self.N * self.tau

    @classmethod
    def from_final_time(cls, T: float, tau: float) -> "TimeGrid":
        if not tau > 0:
            raise ValueError(f"time step must be positive, got {tau}")
        return cls(tau, int(round(T / tau)))


@dataclass
class PicardReport:
    iterations: int = 0
    update_norm: float = np.inf
    update_history: list[float] = field(default_factory=list)
    cg_iterations: list[tuple[int, int, int, int]] = field(default_factory=list)
    converged: bool = False


# -- Ritz projection and initial state ---------------------------------------

def ritz_project(space: Q1Space, g, grad_g, cg_tol: float = DEFAULT_CG_TOL) -> np.ndarray:
    """Full nodal field r in V_h with (grad r, grad v) = (grad g, grad v) for all v.

    ``g`` itself is not needed beyond its gradient; complex g is projected
    componentwise.
    """
    rhs = space.test_gradient_against_basis(grad_g(space.qp_coords))
    return space.mesh.extend(_solve_maybe_complex(space.stiffness, rhs, cg_tol))


def poisson_potential(space: Q1Space, source, cg_tol: float = DEFAULT_CG_TOL) -> np.ndarray:
    """Discrete solution of lap(phi) = source with zero boundary values.

    For smooth data this coincides with the Ritz projection of the continuous
    potential, since (grad phi, grad w) = -(source, w).
    """
    rhs = -space.load(source)
    return space.mesh.extend(_solve_maybe_complex(space.stiffness, rhs, cg_tol))


def _solve_maybe_complex(A, rhs, tol, x0=None, M=None):
    if np.iscomplexobj(rhs):
        x0r = x0i = None
        if x0 is not None:
            x0r, x0i = x0.real, x0.imag
        re = cg_solve(A, rhs.real, tol, x0=x0r, preconditioner=M)
        im = cg_solve(A, rhs.imag, tol, x0=x0i, preconditioner=M)
        return re.x + 1j * im.x
    return cg_solve(A, rhs, tol, x0=x0, preconditioner=M).x


def initialize(space: Q1Space, problem: ProblemSpec, cg_tol: float = DEFAULT_CG_TOL) -> StepState:
    """Ritz projections of the initial data; potential from lap(phi0) = varphi1."""
    u = ritz_project(space, problem.u0, problem.grad_u0, cg_tol).astype(complex)
    p = ritz_project(space, problem.u1, problem.grad_u1, cg_tol).astype(complex)
    varphi = ritz_project(space, problem.varphi0, problem.grad_varphi0, cg_tol)
    if problem.phi0 is not None:
        phi = ritz_project(space, problem.phi0, problem.grad_phi0, cg_tol)
    else:
        phi = poisson_potential(space, problem.varphi1, cg_tol)
    return StepState(u, p, phi, varphi, 0.0)


# -- the step ----------------------------------------------------------------

class CrankNicolsonStepper:
    """Fixed step size stepper; caches the two reduced system matrices."""

    def __init__(self, space: Q1Space, tau: float, forcing: Forcing | None = None,
                 picard_tol: float = DEFAULT_PICARD_TOL, cg_tol: float = DEFAULT_CG_TOL,
                 max_picard_iters: int = DEFAULT_MAX_PICARD):
        if not tau > 0:
            raise ValueError(f"time step must be positive, got {tau}")
        self.space = space
        self.tau = float(tau)
        self.forcing = forcing
        self.picard_tol = picard_tol
        self.cg_tol = cg_tol
        self.max_picard_iters = max_picard_iters

        A, B = space.mass, space.stiffness
        self.A, self.B = A, B
        self.K = (A + B).tocsr()
        self.Mp = (2.0 * A + 0.5 * tau**2 * self.K).tocsr()
        self.My = (2.0 * A + 0.5 * tau**2 * B).tocsr()
        self.prec_p = jacobi_precondition(self.Mp)
        self.prec_y = jacobi_precondition(self.My)
        self.prec_a = jacobi_precondition(A)

    def _cg(self, mat, rhs, x0, prec):
        res = cg_solve(mat, rhs, self.cg_tol, x0=x0, preconditioner=prec)
        return res.x, res.iterations

    def step(self, state: StepState) -> tuple[StepState, PicardReport]:
        sp_, mesh, tau = self.space, self.space.mesh, self.tau
        A, B = self.A, self.B
        u0, p0 = mesh.restrict(state.u), mesh.restrict(state.p)
        phi0, vphi0 = mesh.restrict(state.phi), mesh.restrict(state.varphi)

        rhs_p = 2.0 * (A @ p0) - 2.0 * tau * (self.K @ u0) - 0.5 * tau**2 * (self.K @ p0)
        rhs_y = 2.0 * (A @ phi0) + 2.0 * tau * (A @ vphi0) - 0.5 * tau**2 * (B @ phi0)
        if self.forcing is not None:
            t_mid = state.time + 0.5 * tau
            rhs_p = rhs_p + 2.0 * tau * sp_.load(self.forcing.f_u, t_mid)
            rhs_y = rhs_y + 2.0 * tau * sp_.load(self.forcing.f_w, t_mid)

        U, X = u0.copy(), vphi0.copy()
        P, Y = p0.copy(), phi0.copy()
        Z = np.zeros_like(vphi0)  # A^{-1} B (Y + phi0), warm start
        u_old_full, vphi_old_full = state.u, state.varphi
        report = PicardReport()

        for it in range(1, self.max_picard_iters + 1):
            U_full = mesh.extend(U)
            N = sp_.nonlinear_u(U_full, u_old_full, 0.5 * (mesh.extend(X) + vphi_old_full))
            S = sp_.nonlinear_sq(U_full, u_old_full)

            b = rhs_p - 2.0 * tau * N
            Pr, nr = self._cg(self.Mp, b.real, P.real, self.prec_p)
            Pi, ni = self._cg(self.Mp, b.imag, P.imag, self.prec_p)
            P = Pr + 1j * Pi
            U_new = u0 + 0.5 * tau * (P + p0)

            Y, ny = self._cg(self.My, rhs_y + 2.0 * tau * S, Y, self.prec_y)
            Z, nz = self._cg(A, B @ (Y + phi0), Z, self.prec_a)
            X_new = vphi0 - 0.5 * tau * Z

            upd = max(np.max(np.abs(U_new - U), initial=0.0), np.max(np.abs(X_new - X), initial=0.0))
            scale = max(1.0, np.max(np.abs(U_new), initial=0.0), np.max(np.abs(X_new), initial=0.0))
            U, X = U_new, X_new
            report.iterations = it
            report.update_norm = upd
            report.update_history.append(upd)
            report.cg_iterations.append((nr, ni, ny, nz))
            if upd <= self.picard_tol * scale:
                report.converged = True
                break

        if not report.converged:
            raise StepFailure(
                f"Picard iteration did not converge in {self.max_picard_iters} iterations at "
                f"t={state.time + tau:.6g} (last update {report.update_norm:.3e})", report)

        new = StepState(mesh.extend(U), mesh.extend(P), mesh.extend(Y), mesh.extend(X),
                        state.time + tau)
        return new, report


def picard_step(space: Q1Space, state: StepState, tau: float, forcing: Forcing | None = None,
                **tolerances) -> tuple[StepState, PicardReport]:
    return CrankNicolsonStepper(space, tau, forcing, **tolerances).step(state)


def scheme_residuals(space: Q1Space, old: StepState, new: StepState, tau: float,
                     forcing: Forcing | None = None) -> dict[str, np.ndarray]:
    """Residual vectors of equations (a)-(d) above, tested against every interior basis function."""
    mesh = space.mesh
    A, B = space.mass, space.stiffness
    r = mesh.restrict
    u0, u1 = r(old.u), r(new.u)
    p0, p1 = r(old.p), r(new.p)
    phi0, phi1 = r(old.phi), r(new.phi)
    v0, v1 = r(old.varphi), r(new.varphi)
    N = space.nonlinear_u(new.u, old.u, 0.5 * (new.varphi + old.varphi))
    S = space.nonlinear_sq(new.u, old.u)
    fu = fw = 0.0
    if forcing is not None:
        t_mid = old.time + 0.5 * tau
        fu = space.load(forcing.f_u, t_mid)
        fw = space.load(forcing.f_w, t_mid)
    umid = 0.5 * (u0 + u1)
    return {
        "a": A @ (0.5 * (p0 + p1)) - A @ (u1 - u0) / tau,
        "b": A @ (p1 - p0) / tau + B @ umid + A @ umid + N - fu,
        "c": B @ (0.5 * (phi0 + phi1)) + A @ (v1 - v0) / tau,
        "d": A @ (phi1 - phi0) / tau - A @ (0.5 * (v0 + v1)) - S - fw,
    }


# -- time loop ---------------------------------------------------------------

@dataclass
class Trajectory:
    times: list[float] = field(default_factory=list)
    energies: list = field(default_factory=list)
    reports: list[PicardReport] = field(default_factory=list)
    snapshots: dict[float, StepState] = field(default_factory=dict)
    final: StepState | None = None


def run(space: Q1Space, grid: TimeGrid, problem: ProblemSpec | None = None,
        forcing: Forcing | None = None, initial: StepState | None = None,
        snapshot_times=(), observers=(), track_energy: bool = True,
        energy_space: Q1Space | None = None, **tolerances) -> Trajectory:
    """Advance ``grid.N`` steps from ``initial`` (or the Ritz-projected data of ``problem``).

    ``observers`` are called as ``obs(n, state, energy, report)`` after every
    step (``report`` is None for n=0).  Snapshots are kept at the time levels
    nearest to ``snapshot_times``.  On a step failure the partial trajectory is
    attached to the raised :class:`StepFailure`.
    """
    from .analysis import energy as energy_of

    if initial is None:
        if problem is None:
            raise ValueError("need either a problem or an initial state")
        initial = initialize(space, problem, tolerances.get("cg_tol", DEFAULT_CG_TOL))
        if forcing is None and not problem.conservative:
            forcing = problem.forcing
    espace = energy_space or space
    snap_steps = {int(round(t / grid.tau)): t for t in snapshot_times}

    traj = Trajectory()
    state = initial.copy()

    def record(n, st, report):
        e = energy_of(st, espace) if track_energy else None
        traj.times.append(st.time)
        traj.energies.append(e)
        if report is not None:
            traj.reports.append(report)
        if n in snap_steps:
            traj.snapshots[snap_steps[n]] = st.copy()
        for obs in observers:
            obs(n, st, e, report)

    record(0, state, None)
    stepper = CrankNicolsonStepper(space, grid.tau, forcing, **tolerances)
    for n in range(1, grid.N + 1):
        try:
            state, report = stepper.step(state)
        except (StepFailure, SolverError) as exc:
            traj.final = state
            exc.trajectory = traj
            raise
        log.debug("step %d t=%.4f picard=%d update=%.2e", n, state.time, report.iterations,
                  report.update_norm)
        record(n, state, report)
    traj.final = state
    return traj


__all__ = [
    "StepState", "TimeGrid", "PicardReport", "StepFailure", "CrankNicolsonStepper",
    "ritz_project", "poisson_potential", "initialize", "picard_step", "scheme_residuals",
    "run", "Trajectory",
]
