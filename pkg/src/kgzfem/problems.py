"""Built-in problem catalog.

Spatial callables take points of shape (..., dim); time-dependent ones take
``(x, t)``.  Gradients return shape (..., dim).  ``varphi`` is the ion density
deviation and ``phi`` the potential with ``laplace(phi) = d/dt varphi``.

Manufactured problems carry forcing terms closing the first-order system

    p_t - lap u + u + varphi u + |u|^2 u = f_u
    phi_t - varphi - |u|^2              = f_w

while ``p = u_t`` and ``lap phi = varphi_t`` hold exactly.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

PI = np.pi


@dataclass(frozen=True)
class SineMode:
    """``coef * exp(-rate * t) * prod_d sin(k_d pi x_d)`` on the unit box."""

    coef: float
    rate: float
    k: tuple[int, ...]

    @property
    def laplace_factor(self) -> float:
        return -PI**2 * sum(kk * kk for kk in self.k)

    def amplitude(self, t, order: int = 0):
        return self.coef * (-self.rate) ** order * np.exp(-self.rate * t)

    def shape(self, x):
        x = np.asarray(x, dtype=float)
        out = np.ones(x.shape[:-1])
        for d, kk in enumerate(self.k):
            out = out * np.sin(kk * PI * x[..., d])
        return out

    def shape_grad(self, x):
        x = np.asarray(x, dtype=float)
        s = [np.sin(kk * PI * x[..., d]) for d, kk in enumerate(self.k)]
        c = [kk * PI * np.cos(kk * PI * x[..., d]) for d, kk in enumerate(self.k)]
        g = []
        for d in range(len(self.k)):
            term = c[d]
            for e in range(len(self.k)):
                if e != d:
                    term = term * s[e]
            g.append(term)
        return np.stack(g, axis=-1)

    def value(self, x, t, order: int = 0):
        return self.amplitude(t, order) * self.shape(x)

    def grad(self, x, t, order: int = 0):
        return self.amplitude(t, order) * self.shape_grad(x)

    def potential(self) -> "SineMode":
        # lap(phi) = d/dt of this mode
        return SineMode(-self.rate * self.coef / self.laplace_factor, self.rate, self.k)


class ModalSolution:
    """Exact solution u = re + i*im, varphi = density, each a single sine mode."""

    def __init__(self, re: SineMode, im: SineMode, density: SineMode):
        self.re, self.im, self.density = re, im, density
        self.pot = density.potential()

    def u(self, x, t):
        return self.re.value(x, t) + 1j * self.im.value(x, t)

    def grad_u(self, x, t):
        return self.re.grad(x, t) + 1j * self.im.grad(x, t)

    def p(self, x, t):
        return self.re.value(x, t, 1) + 1j * self.im.value(x, t, 1)

    def grad_p(self, x, t):
        return self.re.grad(x, t, 1) + 1j * self.im.grad(x, t, 1)

    def u_tt(self, x, t):
        return self.re.value(x, t, 2) + 1j * self.im.value(x, t, 2)

    def laplace_u(self, x, t):
        return (self.re.laplace_factor * self.re.value(x, t)
                + 1j * self.im.laplace_factor * self.im.value(x, t))

    def varphi(self, x, t):
        return self.density.value(x, t)

    def grad_varphi(self, x, t):
        return self.density.grad(x, t)

    def varphi_t(self, x, t):
        return self.density.value(x, t, 1)

    def phi(self, x, t):
        return self.pot.value(x, t)

    def grad_phi(self, x, t):
        return self.pot.grad(x, t)

    def phi_t(self, x, t):
        return self.pot.value(x, t, 1)

    def f_u(self, x, t):
        u = self.u(x, t)
        return (self.u_tt(x, t) - self.laplace_u(x, t) + u
                + self.varphi(x, t) * u + (u.real**2 + u.imag**2) * u)

    def f_w(self, x, t):
        u = self.u(x, t)
        return self.phi_t(x, t) - self.varphi(x, t) - (u.real**2 + u.imag**2)


@dataclass
class ProblemSpec:
    name: str
    dim: int
    origin: tuple[float, ...]
    extent: tuple[float, ...]
    T: float
    u0: Callable
    grad_u0: Callable
    u1: Callable
    grad_u1: Callable
    varphi0: Callable
    grad_varphi0: Callable
    varphi1: Callable
    # closed-form initial potential; None means solve lap(phi0) = varphi1 discretely
    phi0: Callable | None = None
    grad_phi0: Callable | None = None
    exact: ModalSolution | None = None
    default_M: int = 16
    default_tau: float | None = None  # None: tau = h
    description: str = ""

    @property
    def conservative(self) -> bool:
        return self.exact is None

    @property
    def forcing(self):
        if self.exact is None:
            return None
        return Forcing(self.exact.f_u, self.exact.f_w)


@dataclass(frozen=True)
class Forcing:
    f_u: Callable  # complex, added to the p_t equation
    f_w: Callable  # real, added to the phi_t equation


def _from_exact(name, dim, sol: ModalSolution, **kw) -> ProblemSpec:
    return ProblemSpec(
        name=name, dim=dim, origin=(0.0,) * dim, extent=(1.0,) * dim,
        u0=lambda x: sol.u(x, 0.0), grad_u0=lambda x: sol.grad_u(x, 0.0),
        u1=lambda x: sol.p(x, 0.0), grad_u1=lambda x: sol.grad_p(x, 0.0),
        varphi0=lambda x: sol.varphi(x, 0.0), grad_varphi0=lambda x: sol.grad_varphi(x, 0.0),
        varphi1=lambda x: sol.varphi_t(x, 0.0),
        phi0=lambda x: sol.phi(x, 0.0), grad_phi0=lambda x: sol.grad_phi(x, 0.0),
        exact=sol, **kw,
    )


def _mms2d() -> ProblemSpec:
    sol = ModalSolution(SineMode(1.0, 2.0, (3, 3)), SineMode(1.0, 3.0, (2, 2)),
                        SineMode(18 * PI**2, 1.0, (3, 3)))
    return _from_exact("mms2d", 2, sol, T=1.0, default_M=16,
                       description="2D manufactured solution on the unit square")


def _mms3d() -> ProblemSpec:
    sol = ModalSolution(SineMode(1.0, 2.0, (1, 1, 1)), SineMode(1.0, 3.0, (1, 1, 1)),
                        SineMode(3 * PI**2, 1.0, (1, 1, 1)))
    return _from_exact("mms3d", 3, sol, T=1.0, default_M=8,
                       description="3D manufactured solution on the unit cube")


def _energy2d() -> ProblemSpec:
    # same t=0 data as mms2d, run without forcing
    base = _mms2d()
    return ProblemSpec(
        name="energy2d", dim=2, origin=(0.0, 0.0), extent=(1.0, 1.0), T=5.0,
        u0=base.u0, grad_u0=base.grad_u0, u1=base.u1, grad_u1=base.grad_u1,
        varphi0=base.varphi0, grad_varphi0=base.grad_varphi0, varphi1=base.varphi1,
        phi0=base.phi0, grad_phi0=base.grad_phi0,
        default_M=16, default_tau=0.01,
        description="conservative run from sine-mode data on the unit square",
    )


def _gauss(x, centre):
    r2 = np.sum((np.asarray(x) - centre) ** 2, axis=-1)
    return np.exp(-r2)


def _gauss_grad(x, centre):
    d = np.asarray(x) - centre
    return -2.0 * d * np.exp(-np.sum(d**2, axis=-1))[..., None]


def _sech_r2(x, centre):
    r2 = np.sum((np.asarray(x) - centre) ** 2, axis=-1)
    return 1.0 / np.cosh(r2)


def _sech_r2_grad(x, centre):
    d = np.asarray(x) - centre
    r2 = np.sum(d**2, axis=-1)
    return (-np.tanh(r2) / np.cosh(r2))[..., None] * 2.0 * d


def _waves(dim: int) -> ProblemSpec:
    amp = 1.0 + 0.5j

    def c(*v):
        return np.array(v + (0.0,) * (dim - len(v)))

    u_centres = [c(-2.0), c(2.0)]
    v_centres = [c(0.0, -2.0), c(0.0, 2.0)]
    zero = c()

    def u0(x):
        return amp * sum(_gauss(x, q) for q in u_centres)

    def grad_u0(x):
        return amp * sum(_gauss_grad(x, q) for q in u_centres)

    def varphi0(x):
        return sum(_sech_r2(x, q) for q in v_centres)

    def grad_varphi0(x):
        return sum(_sech_r2_grad(x, q) for q in v_centres)

    if dim == 2:
        kw = dict(name="waves2d", origin=(-10.0, -10.0), extent=(20.0, 20.0), T=5.0,
                  default_M=160, default_tau=0.01,
                  description="Gaussian/sech wave interaction on (-10,10)^2")
    else:
        kw = dict(name="waves3d", origin=(-5.0,) * 3, extent=(10.0,) * 3, T=1.5,
                  default_M=64, default_tau=0.05,
                  description="Gaussian/sech wave interaction on (-5,5)^3")
    return ProblemSpec(
        dim=dim, u0=u0, grad_u0=grad_u0,
        u1=lambda x: amp * _gauss(x, zero), grad_u1=lambda x: amp * _gauss_grad(x, zero),
        varphi0=varphi0, grad_varphi0=grad_varphi0,
        varphi1=lambda x: _sech_r2(x, zero), **kw,
    )


_CATALOG = {
    "mms2d": _mms2d,
    "mms3d": _mms3d,
    "energy2d": _energy2d,
    "waves2d": lambda: _waves(2),
    "waves3d": lambda: _waves(3),
}

PROBLEM_NAMES = tuple(_CATALOG)


def catalog(name: str) -> ProblemSpec:
    try:
        return _CATALOG[name]()
    except KeyError:
        raise KeyError(f"unknown problem {name!r}; available: {', '.join(PROBLEM_NAMES)}") from None
