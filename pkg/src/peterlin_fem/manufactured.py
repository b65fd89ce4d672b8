"""Closed-form exact solution, transport velocity and forcing terms.

The velocity derives from a stream function, so it is divergence free and
vanishes on the boundary; the conformation tensor carries sin^2 factors so
its normal derivative vanishes on the boundary.  The forcings f and F are
obtained by substituting the exact solution into the model equations with
the transport velocity taken equal to the exact velocity.

All derivatives are generated symbolically once at import time and
compiled to vectorized numpy callables; a finite-difference oracle in the
test suite guards the generated expressions.
"""

import numpy as np
import sympy as sym


def _build():
    x, y, t, nu, eps = sym.symbols("x y t nu eps", real=True)
    pi = sym.pi
    sx2 = sym.sin(pi * x) ** 2
    sy2 = sym.sin(pi * y) ** 2

    psi = sym.sqrt(3) / (2 * pi) * sx2 * sy2 * sym.sin(pi * (x + y + t))
    u1 = sym.diff(psi, y)
    u2 = -sym.diff(psi, x)
    p = sym.sin(pi * (x + 2 * y + t))
    c11 = sx2 * sy2 * sym.sin(pi * (x + t)) / 2 + 1
    c22 = sx2 * sy2 * sym.sin(pi * (y + t)) / 2 + 1
    c12 = sx2 * sy2 * sym.sin(pi * (x + y + t)) / 2

    u = [u1, u2]
    C = [[c11, c12], [c12, c22]]
    trC = c11 + c22

    def mat_deriv(g):
        return sym.diff(g, t) + u1 * sym.diff(g, x) + u2 * sym.diff(g, y)

    def lap(g):
        return sym.diff(g, x, 2) + sym.diff(g, y, 2)

    grad_u = [[sym.diff(ui, v) for v in (x, y)] for ui in u]

    # momentum forcing: f = Du/Dt - nu*Lap(u) + grad p - div[(tr C) C]
    f_expr = []
    for i in range(2):
        div_tcc = sym.diff(trC * C[i][0], x) + sym.diff(trC * C[i][1], y)
        f_expr.append(mat_deriv(u[i]) - nu * lap(u[i]) + sym.diff(p, (x, y)[i]) - div_tcc)

    # conformation forcing:
    # F = DC/Dt - eps*Lap(C) - (grad u)C - C(grad u)^T + (tr C)^2 C - (tr C) I
    stretch = [[sum(grad_u[i][k] * C[k][j] + C[i][k] * grad_u[j][k] for k in range(2))
                for j in range(2)] for i in range(2)]
    F_expr = []
    for (i, j) in ((0, 0), (0, 1), (1, 1)):
        F_expr.append(mat_deriv(C[i][j]) - eps * lap(C[i][j]) - stretch[i][j]
                      + trC ** 2 * C[i][j] - trC * sym.KroneckerDelta(i, j))

    def lam(args, exprs):
        return sym.lambdify(args, exprs, modules="numpy", cse=True)

    fns = {
        "psi": lam((x, y, t), psi),
        "u": lam((x, y, t), u),
        "p": lam((x, y, t), p),
        "C": lam((x, y, t), [c11, c12, c22]),
        "grad_u": lam((x, y, t), [g for row in grad_u for g in row]),
        "grad_p": lam((x, y, t), [sym.diff(p, x), sym.diff(p, y)]),
        "grad_C": lam((x, y, t), [sym.diff(c, v) for c in (c11, c12, c22) for v in (x, y)]),
        "f": lam((x, y, t, nu), f_expr),
        "F": lam((x, y, t, eps), F_expr),
    }
    return fns


_FNS = _build()


def _split(xy):
    xy = np.asarray(xy, dtype=float)
    return xy[..., 0], xy[..., 1]


def _stack(parts, x):
    return np.stack([np.broadcast_to(np.asarray(c, dtype=float), x.shape) for c in parts], axis=-1)


def stream_function(xy, t):
    x, y = _split(xy)
    return np.asarray(_FNS["psi"](x, y, t), dtype=float)


def velocity(xy, t):
    """Exact velocity u(x, t), shape (..., 2)."""
    x, y = _split(xy)
    return _stack(_FNS["u"](x, y, t), x)


def pressure(xy, t):
    x, y = _split(xy)
    return np.broadcast_to(np.asarray(_FNS["p"](x, y, t), dtype=float), x.shape).copy()


def conformation(xy, t):
    """Exact conformation tensor, components (C11, C12, C22), shape (..., 3)."""
    x, y = _split(xy)
    return _stack(_FNS["C"](x, y, t), x)


def velocity_gradient(xy, t):
    """grad u with entries [i, j] = du_i/dx_j, shape (..., 2, 2)."""
    x, y = _split(xy)
    flat = _stack(_FNS["grad_u"](x, y, t), x)
    return flat.reshape(flat.shape[:-1] + (2, 2))


def pressure_gradient(xy, t):
    x, y = _split(xy)
    return _stack(_FNS["grad_p"](x, y, t), x)


def conformation_gradient(xy, t):
    """Spatial gradients of (C11, C12, C22), shape (..., 3, 2)."""
    x, y = _split(xy)
    flat = _stack(_FNS["grad_C"](x, y, t), x)
    return flat.reshape(flat.shape[:-1] + (3, 2))


def forcing_f(xy, t, nu):
    """Momentum forcing, shape (..., 2)."""
    x, y = _split(xy)
    return _stack(_FNS["f"](x, y, t, nu), x)


def forcing_F(xy, t, eps):
    """Conformation forcing, components (F11, F12, F22), shape (..., 3)."""
    x, y = _split(xy)
    return _stack(_FNS["F"](x, y, t, eps), x)


def given_velocity_w(xy, t):
    """The prescribed transport velocity: the exact velocity itself."""
    return velocity(xy, t)
