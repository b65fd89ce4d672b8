"""Independent oracles shared between unit and acceptance tests.

Everything here is deliberately written the slow, obvious way (dense
loops, finite differences, multinomial expansion) so it exercises none of
the package's vectorized assembly or symbolic-derivative code paths.
"""

import math
from itertools import product

import numpy as np

from peterlin_fem import manufactured


# --- finite-difference forcing oracle -----------------------------------

def fd_forcing(pts, t, nu, eps, h1=1e-6, h2=1e-3):
    """Evaluate the forcing terms from the model equations by central
    differences of the exact solution only (no analytic derivatives).

    First derivatives use 2-point central differences with step h1; the
    Laplacians use the 4th-order 5-point stencil with the larger step h2,
    keeping both truncation and roundoff well below the 1e-6 tolerance.
    Returns (f, F) with shapes (n, 2) and (n, 3).
    """
    pts = np.asarray(pts, dtype=float)

    def dx(fn, i, h):
        e = np.zeros(2)
        e[i] = h
        return (np.asarray(fn(pts + e, t)) - np.asarray(fn(pts - e, t))) / (2 * h)

    def ddt(fn, h):
        return (np.asarray(fn(pts, t + h)) - np.asarray(fn(pts, t - h))) / (2 * h)

    def lap(fn, h):
        out = -60.0 * np.asarray(fn(pts, t))
        for i in range(2):
            e = np.zeros(2)
            e[i] = h
            out = out + 16.0 * (np.asarray(fn(pts + e, t)) + np.asarray(fn(pts - e, t)))
            out = out - (np.asarray(fn(pts + 2 * e, t)) + np.asarray(fn(pts - 2 * e, t)))
        return out / (12.0 * h ** 2)

    u = manufactured.velocity(pts, t)                 # (n, 2)
    C3 = manufactured.conformation(pts, t)            # (n, 3)
    tr = C3[:, 0] + C3[:, 2]

    u_t = ddt(manufactured.velocity, h1)
    du_dx = dx(manufactured.velocity, 0, h1)          # (n, 2) = du_i/dx1
    du_dy = dx(manufactured.velocity, 1, h1)
    conv_u = u[:, :1] * du_dx + u[:, 1:2] * du_dy
    lap_u = lap(manufactured.velocity, h2)
    grad_p = np.stack([dx(manufactured.pressure, i, h1) for i in range(2)], axis=-1)

    def trcc(xy, tt):
        c = manufactured.conformation(xy, tt)
        trace = c[..., 0] + c[..., 2]
        return trace[..., None] * c                   # components of (tr C) C

    div_tcc3 = dx(trcc, 0, h1), dx(trcc, 1, h1)
    # rows of div[(tr C) C]: row i = d(G_i1)/dx1 + d(G_i2)/dx2
    div_tcc = np.stack([div_tcc3[0][:, 0] + div_tcc3[1][:, 1],
                        div_tcc3[0][:, 1] + div_tcc3[1][:, 2]], axis=-1)

    f = u_t + conv_u - nu * lap_u + grad_p - div_tcc

    C_t = ddt(manufactured.conformation, h1)
    dC_dx = dx(manufactured.conformation, 0, h1)
    dC_dy = dx(manufactured.conformation, 1, h1)
    conv_C = u[:, :1] * dC_dx + u[:, 1:2] * dC_dy
    lap_C = lap(manufactured.conformation, h2)

    gu = np.empty(pts.shape[:1] + (2, 2))
    gu[:, :, 0] = du_dx
    gu[:, :, 1] = du_dy
    Cm = np.empty(pts.shape[:1] + (2, 2))
    Cm[:, 0, 0] = C3[:, 0]
    Cm[:, 0, 1] = Cm[:, 1, 0] = C3[:, 1]
    Cm[:, 1, 1] = C3[:, 2]
    stretch = gu @ Cm + Cm @ np.swapaxes(gu, -1, -2)
    stretch3 = np.stack([stretch[:, 0, 0], stretch[:, 0, 1], stretch[:, 1, 1]], axis=-1)

    iden3 = np.array([1.0, 0.0, 1.0])
    F = (C_t + conv_C - eps * lap_C - stretch3
         + (tr ** 2)[:, None] * C3 - tr[:, None] * iden3)
    return f, F


# --- exact monomial integrals over triangles -----------------------------

def triangle_monomial_integral(verts, p, q):
    """Integral of x^p y^q over the triangle with the given (3, 2) vertices.

    Expands x = sum_a lambda_a x_a (same for y) multinomially and uses
    int_T lambda^i lambda^j lambda^k dT = 2 |T| i! j! k! / (i+j+k+2)!.
    """
    verts = np.asarray(verts, dtype=float)
    xs, ys = verts[:, 0], verts[:, 1]
    area = 0.5 * abs((xs[1] - xs[0]) * (ys[2] - ys[0]) - (xs[2] - xs[0]) * (ys[1] - ys[0]))

    def expansions(coords, deg):
        terms = {}
        for combo in product(range(deg + 1), repeat=3):
            if sum(combo) != deg:
                continue
            coeff = math.factorial(deg)
            for a, e in zip(range(3), combo):
                coeff /= math.factorial(e)
                coeff *= coords[a] ** e
            terms[combo] = terms.get(combo, 0.0) + coeff
        return terms

    total = 0.0
    for ex, cx in expansions(xs, p).items():
        for ey, cy in expansions(ys, q).items():
            i, j, k = (ex[0] + ey[0], ex[1] + ey[1], ex[2] + ey[2])
            total += cx * cy * (2.0 * area * math.factorial(i) * math.factorial(j)
                                * math.factorial(k) / math.factorial(i + j + k + 2))
    return total


# --- dense brute-force assembly of the monolithic step matrix ------------

_E = [np.array([[1.0, 0.0], [0.0, 0.0]]),
      np.array([[0.0, 1.0], [1.0, 0.0]]),
      np.array([[0.0, 0.0], [0.0, 1.0]])]


def dense_step_matrix(mesh, quad, params, dofmap, prev_C):
    """Brute-force dense assembly of the coupled step matrix.

    Loops over elements, local basis-function pairs and quadrature points;
    tensor test/trial functions are handled as full 2x2 symmetric matrices
    so the doubled off-diagonal weight emerges from the matrix inner
    product rather than being coded in.
    """
    dm = dofmap
    A = np.zeros((dm.ndof, dm.ndof))
    lam, wq = quad.points, quad.weights
    nq = lam.shape[0]
    dt, nu, eps, delta0 = params.dt, params.nu, params.eps, params.delta0

    for e in range(mesh.element_count):
        verts = mesh.elements[e]
        area = mesh.areas[e]
        g = mesh.grads[e]              # (3, 2)
        hK = mesh.sizes[e]

        # previous conformation tensor at the quadrature points
        Cq = np.zeros((nq, 2, 2))
        for q in range(nq):
            c3 = sum(lam[q, a] * prev_C[verts[a]] for a in range(3))
            Cq[q] = [[c3[0], c3[1]], [c3[1], c3[2]]]
        trq = Cq[:, 0, 0] + Cq[:, 1, 1]

        mass = np.zeros((3, 3))
        for a in range(3):
            for b in range(3):
                mass[a, b] = area * sum(wq[q] * lam[q, a] * lam[q, b] for q in range(nq))

        for a in range(3):
            for k in range(2):
                row = dm.u_index[verts[a], k]
                if row < 0:
                    continue
                Dv = np.zeros((2, 2))
                for i in range(2):
                    for j in range(2):
                        Dv[i, j] = 0.5 * (g[a, j] * (i == k) + g[a, i] * (j == k))
                for b in range(3):
                    for m in range(2):
                        col = dm.u_index[verts[b], m]
                        if col < 0:
                            continue
                        Du = np.zeros((2, 2))
                        for i in range(2):
                            for j in range(2):
                                Du[i, j] = 0.5 * (g[b, j] * (i == m) + g[b, i] * (j == m))
                        val = (k == m) * mass[a, b] / dt
                        val += 2.0 * nu * area * np.sum(Dv * Du)
                        A[row, col] += val
                    # -(div v, p)
                    A[row, dm.p_offset + verts[b]] -= area * sum(
                        wq[q] * g[a, k] * lam[q, b] for q in range(nq))
                    # ((tr C^n) C^{n-1}, grad v): trace couples to C11 and C22
                    cpl = area * sum(wq[q] * lam[q, b] * (Cq[q, k, :] @ g[a])
                                     for q in range(nq))
                    A[row, dm.c_offsets[0] + verts[b]] += cpl
                    A[row, dm.c_offsets[2] + verts[b]] += cpl

        for a in range(3):
            row = dm.p_offset + verts[a]
            for b in range(3):
                for m in range(2):
                    col = dm.u_index[verts[b], m]
                    if col >= 0:
                        A[row, col] -= area * sum(
                            wq[q] * lam[q, a] * g[b, m] for q in range(nq))
                A[row, dm.p_offset + verts[b]] -= delta0 * hK ** 2 * area * (g[a] @ g[b])
            phi_int = area * sum(wq[q] * lam[q, a] for q in range(nq))
            A[row, dm.multiplier] += phi_int
            A[dm.multiplier, row] += phi_int

        for a in range(3):
            for c in range(3):
                row = dm.c_offsets[c] + verts[a]
                Ec = _E[c]
                for b in range(3):
                    for c2 in range(3):
                        pair = np.sum(_E[c2] * Ec)
                        val = pair * mass[a, b] / dt
                        val += eps * pair * area * (g[a] @ g[b])
                        val += pair * area * sum(
                            wq[q] * trq[q] ** 2 * lam[q, a] * lam[q, b] for q in range(nq))
                        A[row, dm.c_offsets[c2] + verts[b]] += val
                    # -((grad u) C^{n-1} + C^{n-1} (grad u)^T, D)
                    for m in range(2):
                        col = dm.u_index[verts[b], m]
                        if col < 0:
                            continue
                        val = 0.0
                        for q in range(nq):
                            Gu = np.zeros((2, 2))
                            Gu[m, :] = g[b]
                            M = Gu @ Cq[q] + Cq[q] @ Gu.T
                            val -= wq[q] * lam[q, a] * np.sum(M * Ec)
                        A[row, col] += area * val
    return A
