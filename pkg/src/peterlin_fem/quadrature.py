"""Numerical quadrature rules on triangles in barycentric form.

Weights are relative to the element area:

    int_K f dx ~= area(K) * sum_i w_i f(a_i).
"""

from dataclasses import dataclass

import numpy as np

from .errors import UnsupportedDegreeError


@dataclass(frozen=True)
class QuadratureRule:
    degree: int
    points: np.ndarray   # (nq, 3) barycentric coordinates
    weights: np.ndarray  # (nq,), sums to 1


def _orbit3(a):
    """The three permutations of (a, b, b) with b = (1 - a) / 2."""
    b = (1.0 - a) / 2.0
    return [(a, b, b), (b, a, b), (b, b, a)]


def _make_rule(degree, pts, wts):
    points = np.array(pts, dtype=float)
    weights = np.array(wts, dtype=float)
    return QuadratureRule(degree=degree, points=points, weights=weights)


_CENTROID = _make_rule(1, [(1 / 3, 1 / 3, 1 / 3)], [1.0])

_MIDPOINTS = _make_rule(2, [(0.5, 0.5, 0.0), (0.0, 0.5, 0.5), (0.5, 0.0, 0.5)], [1 / 3] * 3)

_FOUR_POINT = _make_rule(3, [(1 / 3, 1 / 3, 1 / 3)] + _orbit3(0.6),
                         [-27 / 48] + [25 / 48] * 3)

# Classical degree-5 rule: centroid weight 9/40 plus two three-point orbits.
_S15 = np.sqrt(15.0)
_SEVEN_POINT = _make_rule(
    5,
    [(1 / 3, 1 / 3, 1 / 3)] + _orbit3(1.0 - 2.0 * (6.0 + _S15) / 21.0) + _orbit3(1.0 - 2.0 * (6.0 - _S15) / 21.0),
    [9 / 40] + [(155.0 + _S15) / 1200.0] * 3 + [(155.0 - _S15) / 1200.0] * 3,
)

_RULES = {1: _CENTROID, 2: _MIDPOINTS, 3: _FOUR_POINT, 4: _SEVEN_POINT, 5: _SEVEN_POINT}


def quad_rule(min_degree):
    """A rule exact for all polynomials of degree <= min_degree (max 5)."""
    if min_degree not in _RULES:
        raise UnsupportedDegreeError(f"no quadrature rule of degree {min_degree} (supported: 1..5)")
    return _RULES[min_degree]


def physical_points(mesh, rule):
    """Physical coordinates of all quadrature points, shape (ne, nq, 2)."""
    return np.einsum("qi,eik->eqk", rule.points, mesh.nodes[mesh.elements])
