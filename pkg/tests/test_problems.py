import numpy as np
import pytest
import sympy as sy

from kgzfem.problems import PROBLEM_NAMES, catalog

x, y, z, t = sy.symbols("x y z t", real=True)
pi = sy.pi


def symbolic(name):
    """Exact fields written out independently of the catalog's modal machinery."""
    if name == "mms2d":
        s3 = sy.sin(3 * pi * x) * sy.sin(3 * pi * y)
        ur = sy.exp(-2 * t) * s3
        ui = sy.exp(-3 * t) * sy.sin(2 * pi * x) * sy.sin(2 * pi * y)
        vp = 18 * pi**2 * sy.exp(-t) * s3
        return (x, y), ur, ui, vp, sy.exp(-t) * s3
    s1 = sy.sin(pi * x) * sy.sin(pi * y) * sy.sin(pi * z)
    return (x, y, z), sy.exp(-2 * t) * s1, sy.exp(-3 * t) * s1, 3 * pi**2 * sy.exp(-t) * s1, sy.exp(-t) * s1


def lap(f, xs):
    return sum(sy.diff(f, v, 2) for v in xs)


@pytest.mark.parametrize("name", ["mms2d", "mms3d"])
def test_forcing_self_consistency(name):
    xs, ur, ui, vp, pot = symbolic(name)
    mod2 = ur**2 + ui**2
    fu_r = sy.diff(ur, t, 2) - lap(ur, xs) + ur + vp * ur + mod2 * ur
    fu_i = sy.diff(ui, t, 2) - lap(ui, xs) + ui + vp * ui + mod2 * ui
    fw = sy.diff(pot, t) - vp - mod2
    args = (*xs, t)
    f_num = {k: sy.lambdify(args, e, "numpy") for k, e in
             dict(fur=fu_r, fui=fu_i, fw=fw, u_r=ur, u_i=ui, vp=vp, pot=pot).items()}

    prob = catalog(name)
    sol = prob.exact
    rng = np.random.default_rng(7)
    pts = rng.uniform(0, 1, size=(100, len(xs)))
    ts = rng.uniform(0, 1, size=100)
    for pt, tt in zip(pts, ts):
        a = (*pt, tt)
        fu = sol.f_u(pt, tt)
        assert abs(fu.real - f_num["fur"](*a)) <= 1e-10 * max(1, abs(fu))
        assert abs(fu.imag - f_num["fui"](*a)) <= 1e-10 * max(1, abs(fu))
        assert abs(sol.f_w(pt, tt) - f_num["fw"](*a)) <= 1e-10 * max(1, abs(sol.f_w(pt, tt)))
        assert abs(sol.u(pt, tt) - (f_num["u_r"](*a) + 1j * f_num["u_i"](*a))) <= 1e-12
        assert abs(sol.varphi(pt, tt) - f_num["vp"](*a)) <= 1e-10
        assert abs(sol.phi(pt, tt) - f_num["pot"](*a)) <= 1e-12


@pytest.mark.parametrize("name", ["mms2d", "mms3d"])
def test_potential_consistency(name):
    xs, *_, vp, pot = symbolic(name)
    assert sy.simplify(lap(pot, xs) - sy.diff(vp, t)) == 0
    sol = catalog(name).exact
    rng = np.random.default_rng(3)
    pts = rng.uniform(0, 1, size=(100, len(xs)))
    ts = rng.uniform(0, 1, size=100)
    lap_phi = sol.pot.laplace_factor * sol.phi(pts, ts)
    assert np.max(np.abs(lap_phi - sol.varphi_t(pts, ts))) <= 1e-10


@pytest.mark.parametrize("name", ["mms2d", "mms3d"])
def test_gradients_and_time_derivatives(name):
    xs, ur, ui, vp, pot = symbolic(name)
    sol = catalog(name).exact
    grads_u = [sy.lambdify((*xs, t), sy.diff(ur, v) + sy.I * sy.diff(ui, v)) for v in xs]
    grads_phi = [sy.lambdify((*xs, t), sy.diff(pot, v)) for v in xs]
    p = sy.lambdify((*xs, t), sy.diff(ur, t) + sy.I * sy.diff(ui, t))
    rng = np.random.default_rng(11)
    for _ in range(20):
        pt, tt = rng.uniform(0, 1, len(xs)), rng.uniform(0, 1)
        a = (*pt, tt)
        assert np.allclose(sol.grad_u(pt, tt), [g(*a) for g in grads_u], atol=1e-12)
        assert np.allclose(sol.grad_phi(pt, tt), [g(*a) for g in grads_phi], atol=1e-12)
        assert abs(sol.p(pt, tt) - p(*a)) < 1e-12


def test_mms2d_initial_potential():
    sol = catalog("mms2d").exact
    pts = np.random.default_rng(0).uniform(0, 1, (20, 2))
    s3 = np.sin(3 * np.pi * pts[:, 0]) * np.sin(3 * np.pi * pts[:, 1])
    assert np.allclose(sol.phi(pts, 0.0), s3, atol=1e-14)
    assert np.allclose(-18 * np.pi**2 * sol.phi(pts, 0.0), sol.varphi_t(pts, 0.0), atol=1e-10)


def test_catalog_names_and_unknown():
    assert set(PROBLEM_NAMES) == {"mms2d", "mms3d", "energy2d", "waves2d", "waves3d"}
    with pytest.raises(KeyError) as info:
        catalog("mms4d")
    for n in PROBLEM_NAMES:
        assert n in str(info.value)


@pytest.mark.parametrize("name", PROBLEM_NAMES)
def test_catalog_structure(name):
    prob = catalog(name)
    assert len(prob.origin) == len(prob.extent) == prob.dim
    assert prob.conservative == (name not in ("mms2d", "mms3d"))
    assert (prob.forcing is None) == prob.conservative


def test_waves_initial_peak_and_boundary():
    p2 = catalog("waves2d")
    assert (p2.origin, p2.extent, p2.T) == ((-10.0, -10.0), (20.0, 20.0), 5.0)
    peak = np.abs(p2.u0(np.array([[2.0, 0.0], [-2.0, 0.0]])))
    # the two Gaussians overlap by exp(-16)
    assert np.allclose(peak, np.sqrt(1.25), rtol=1e-6)
    edge = np.array([[-10.0, 0.0], [10.0, 3.0], [0.0, 10.0]])
    assert np.max(np.abs(p2.u0(edge))) < 4e-18
    assert np.max(np.abs(p2.varphi0(edge))) < 4e-18

    p3 = catalog("waves3d")
    assert p3.dim == 3 and p3.T == 1.5
    pts = np.array([[2.0, 0, 0], [-2.0, 0, 0]])
    assert np.allclose(np.abs(p3.u0(pts)), np.sqrt(1.25), rtol=1e-6)  # symmetric twins


def test_energy2d_shares_mms2d_data():
    e, m = catalog("energy2d"), catalog("mms2d")
    pts = np.random.default_rng(1).uniform(0, 1, (10, 2))
    for attr in ("u0", "u1", "varphi0", "phi0"):
        assert np.allclose(getattr(e, attr)(pts), getattr(m, attr)(pts))
    assert e.exact is None and e.default_tau == 0.01
