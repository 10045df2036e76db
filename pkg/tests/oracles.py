"""Independent dense reference implementations used as test oracles.

Deliberately naive: explicit per-element Python loops, hard-coded Gauss
nodes and closed-form bilinear/trilinear basis functions.  Nothing here
imports the assembly or basis modules.
"""

import itertools
import math

import numpy as np

# 3-point Gauss-Legendre on [-1, 1]
GAUSS3 = ([-math.sqrt(3 / 5), 0.0, math.sqrt(3 / 5)], [5 / 9, 8 / 9, 5 / 9])


def corners(dim):
    # x fastest
    return [c[::-1] for c in itertools.product((0, 1), repeat=dim)]


def q1(dim, xi):
    """Values and reference gradients of the 2**dim corner functions at xi."""
    vals, grads = [], []
    for c in corners(dim):
        s = [(-1.0 if ci == 0 else 1.0) for ci in c]
        f = [0.5 * (1 + s[d] * xi[d]) for d in range(dim)]
        vals.append(np.prod(f))
        g = []
        for d in range(dim):
            term = 0.5 * s[d]
            for e in range(dim):
                if e != d:
                    term *= f[e]
            g.append(term)
        grads.append(g)
    return np.array(vals), np.array(grads)


def element_loop(mesh, dim):
    """Yield (global node ids, quadrature list of (weight*detJ, values, phys grads))."""
    m = mesh.subdivisions
    h = mesh.h
    shape = [mi + 1 for mi in m]
    pts, wts = GAUSS3
    qlist = []
    for idx in itertools.product(range(3), repeat=dim):
        xi = [pts[i] for i in idx]
        w = np.prod([wts[i] for i in idx]) * np.prod(h) / 2**dim
        v, g = q1(dim, xi)
        qlist.append((w, v, g * (2.0 / np.array(h))))
    for lower in itertools.product(*[range(mi) for mi in m]):
        nodes = []
        for c in corners(dim):
            gi = [lower[d] + c[d] for d in range(dim)]
            flat, stride = 0, 1
            for d in range(dim):
                flat += gi[d] * stride
                stride *= shape[d]
            nodes.append(flat)
        yield nodes, qlist


def dense_mass_stiffness(mesh):
    n = mesh.n_nodes
    A = np.zeros((n, n))
    B = np.zeros((n, n))
    for nodes, qlist in element_loop(mesh, mesh.dim):
        for w, v, g in qlist:
            for a, na in enumerate(nodes):
                for b, nb in enumerate(nodes):
                    A[na, nb] += w * v[a] * v[b]
                    B[na, nb] += w * g[a] @ g[b]
    return A, B


def dense_nonlinear(mesh, u_new, u_old, varphi_avg):
    """Both nonlinear vectors (full length) for real/imag parts given as separate real arrays.

    ``u_new`` and ``u_old`` are pairs (re, im).  Works with complex-step
    perturbed inputs since only +, * are used.
    """
    n = mesh.n_nodes
    dtype = np.result_type(u_new[0], u_new[1], u_old[0], varphi_avg)
    Nr = np.zeros(n, dtype)
    Ni = np.zeros(n, dtype)
    S = np.zeros(n, dtype)
    for nodes, qlist in element_loop(mesh, mesh.dim):
        for w, v, _ in qlist:
            unr = sum(v[a] * u_new[0][na] for a, na in enumerate(nodes))
            uni = sum(v[a] * u_new[1][na] for a, na in enumerate(nodes))
            uor = sum(v[a] * u_old[0][na] for a, na in enumerate(nodes))
            uoi = sum(v[a] * u_old[1][na] for a, na in enumerate(nodes))
            ph = sum(v[a] * varphi_avg[na] for a, na in enumerate(nodes))
            sq = 0.5 * (unr * unr + uni * uni + uor * uor + uoi * uoi)
            mr, mi = 0.5 * (unr + uor), 0.5 * (uni + uoi)
            for a, na in enumerate(nodes):
                Nr[na] += w * (ph + sq) * mr * v[a]
                Ni[na] += w * (ph + sq) * mi * v[a]
                S[na] += w * sq * v[a]
    return Nr, Ni, S


def newton_step(mesh, old, tau, tol=1e-14, max_iter=30):
    """Solve one step of the coupled nonlinear scheme by Newton with a complex-step Jacobian.

    ``old`` holds full nodal arrays ur, ui, pr, pi, phi, varphi (boundary 0).
    Returns the same dict at the new level.
    """
    A, B = dense_mass_stiffness(mesh)
    I = np.flatnonzero(~mesh.boundary_mask)
    Ai, Bi = A[np.ix_(I, I)], B[np.ix_(I, I)]
    k = len(I)
    names = ["ur", "ui", "pr", "pi", "phi", "varphi"]
    o = {nm: np.asarray(old[nm], float)[I] for nm in names}

    def full(v):
        out = np.zeros(mesh.n_nodes, dtype=v.dtype)
        out[I] = v
        return out

    def residual(z):
        n = {nm: z[i * k:(i + 1) * k] for i, nm in enumerate(names)}
        Nr, Ni, S = dense_nonlinear(
            mesh, (full(n["ur"]), full(n["ui"])), (full(o["ur"]).astype(z.dtype), full(o["ui"]).astype(z.dtype)),
            full(0.5 * (n["varphi"] + o["varphi"])))
        Nr, Ni, S = Nr[I], Ni[I], S[I]
        res = []
        for c, N in (("r", Nr), ("i", Ni)):
            u1, u0 = n["u" + c], o["u" + c]
            p1, p0 = n["p" + c], o["p" + c]
            res.append(Ai @ (0.5 * (p1 + p0)) - Ai @ (u1 - u0) / tau)
            um = 0.5 * (u1 + u0)
            res.append(Ai @ (p1 - p0) / tau + Bi @ um + Ai @ um + N)
        res.append(Bi @ (0.5 * (n["phi"] + o["phi"])) + Ai @ (n["varphi"] - o["varphi"]) / tau)
        res.append(Ai @ (n["phi"] - o["phi"]) / tau - Ai @ (0.5 * (n["varphi"] + o["varphi"])) - S)
        return np.concatenate(res)

    z = np.concatenate([o[nm] for nm in names])
    h = 1e-30
    for _ in range(max_iter):
        F = residual(z)
        if np.max(np.abs(F)) < tol:
            break
        J = np.empty((len(z), len(z)))
        for j in range(len(z)):
            zp = z.astype(complex)
            zp[j] += 1j * h
            J[:, j] = residual(zp).imag / h
        z = z - np.linalg.solve(J, F)
    else:
        raise RuntimeError("Newton oracle did not converge")
    return {nm: full(z[i * k:(i + 1) * k]) for i, nm in enumerate(names)}
