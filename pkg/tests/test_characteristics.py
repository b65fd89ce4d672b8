import numpy as np
import pytest

from peterlin_fem import characteristics, manufactured
from peterlin_fem.characteristics import (CourantStatus, build_upwind_table,
                                          check_courant, eval_composed, upwind_point)
from peterlin_fem.errors import UpwindEscapeError
from peterlin_fem.fields import interpolate
from peterlin_fem.mesh import build_unit_square_mesh
from peterlin_fem.quadrature import physical_points, quad_rule


def test_upwind_point_basics():
    x = np.array([0.5, 0.5])
    assert np.allclose(upwind_point(x, (0.0, 0.0), 0.3), x)
    assert np.allclose(upwind_point(x, (1.0, 0.0), 0.1), (0.4, 0.5))
    assert np.allclose(upwind_point(x, (1.0, 2.0), 0.0), x)


def test_upwind_point_linear_in_dt():
    x = np.array([0.3, 0.8])
    w = np.array([0.2, -0.4])
    a = upwind_point(x, w, 0.1)
    b = upwind_point(x, w, 0.2)
    assert np.allclose(b - x, 2.0 * (a - x), atol=1e-15)


def test_check_courant_thresholds():
    mesh = build_unit_square_mesh(8)
    zero = np.zeros((mesh.node_count, 2))
    assert check_courant(mesh, zero, 0.0, 10.0).status is CourantStatus.OK

    # w = (2 x1, 0) has |w|_{1,inf} = 2 exactly for the P1 interpolant
    shear = np.column_stack([2.0 * mesh.nodes[:, 0], np.zeros(mesh.node_count)])
    warn = check_courant(mesh, shear, 0.0, 0.3)
    assert warn.status is CourantStatus.WARN_JACOBIAN
    assert warn.product == pytest.approx(0.6, rel=1e-12)

    bad = check_courant(mesh, shear, 0.0, 0.6)
    assert bad.status is CourantStatus.WARN_BIJECTIVE
    assert bad.product == pytest.approx(1.2, rel=1e-12)


def test_zero_velocity_table_is_identity():
    mesh = build_unit_square_mesh(4)
    quad = quad_rule(5)
    w = lambda xy, t: np.zeros(np.asarray(xy).shape)
    table = build_upwind_table(mesh, quad, w, 0.0, 0.25)
    assert np.allclose(table.upwind_points, table.points)
    assert table.clamped == 0

    rng = np.random.default_rng(1)
    values = rng.standard_normal(mesh.node_count)
    composed = eval_composed(values, mesh, table)
    direct = np.einsum("qi,ei->eq", quad.points, values[mesh.elements])
    assert np.abs(composed - direct).max() < 1e-13


def test_constant_advection_shifts_linear_field():
    mesh = build_unit_square_mesh(8)
    quad = quad_rule(5)
    c, dt = 0.3, 0.5
    w = lambda xy, t: np.stack([np.full(np.asarray(xy).shape[:-1], c),
                                np.zeros(np.asarray(xy).shape[:-1])], axis=-1)
    # near the inflow boundary the shifted points exit the domain and are
    # clamped; exactness is asserted away from them
    table = build_upwind_table(mesh, quad, w, 0.0, dt, tol_clamp=c * dt + 1e-12)
    g = interpolate(lambda xy, t: xy[..., 0], mesh, 0.0)
    composed = eval_composed(g.values, mesh, table)
    x = physical_points(mesh, quad)
    interior = x[..., 0] - c * dt >= 0.0
    assert np.abs(composed[interior] - (x[..., 0] - c * dt)[interior]).max() < 1e-13


def test_manufactured_velocity_no_clamping():
    mesh = build_unit_square_mesh(16)
    quad = quad_rule(5)
    dt = 1.0 / 32.0
    check = check_courant(mesh, manufactured.given_velocity_w, 0.0, dt)
    assert check.status is CourantStatus.OK
    table = build_upwind_table(mesh, quad, manufactured.given_velocity_w, dt, dt)
    assert table.clamped == 0
    assert np.all(table.upwind_points >= 0.0) and np.all(table.upwind_points <= 1.0)


def test_upwind_escape_raises():
    mesh = build_unit_square_mesh(4)
    quad = quad_rule(5)
    w = lambda xy, t: np.stack([np.ones(np.asarray(xy).shape[:-1]),
                                np.zeros(np.asarray(xy).shape[:-1])], axis=-1)
    with pytest.raises(UpwindEscapeError) as err:
        build_upwind_table(mesh, quad, w, 0.0, 0.5)
    assert err.value.point is not None


def test_nodal_velocity_table_matches_callable_for_p1_field():
    mesh = build_unit_square_mesh(6)
    quad = quad_rule(5)
    dt = 0.05
    nodal = np.column_stack([0.2 * mesh.nodes[:, 1], -0.1 * mesh.nodes[:, 0]])
    w = lambda xy, t: np.stack([0.2 * xy[..., 1], -0.1 * xy[..., 0]], axis=-1)
    t1 = build_upwind_table(mesh, quad, nodal, 0.0, dt)
    t2 = build_upwind_table(mesh, quad, w, 0.0, dt)
    assert np.abs(t1.upwind_points - t2.upwind_points).max() < 1e-13
