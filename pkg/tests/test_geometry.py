import json
import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from disperse.geometry import (GeometryError, Polytope, boundary_distance, builtin, contains, disp_from_dp,
                               distance, dp_from_disp, is_unit_square, load_polytope, segment, square,
                               unit_cube)

unit = st.floats(0.0, 1.0, allow_nan=False)


def test_distance_examples():
    assert distance((0,), (1,)) == 1
    assert distance((0, 0), (0.6, 0.8)) == pytest.approx(1.0, abs=1e-15)
    assert distance((0.3, 0.7), (0.3, 0.7)) == 0


def test_boundary_distance_examples():
    assert boundary_distance((0.5, 0.5), square()) == 0.5
    assert boundary_distance((0.6,), segment()) == pytest.approx(0.4)
    x = 1 / (3 + 4 * 1.271)
    assert boundary_distance((x, x), square()) == pytest.approx(0.12370, abs=5e-6)


def test_contains_examples():
    assert contains((0.5, 0.5), square())
    assert not contains((2, 0), square())
    assert contains((1, 1), square())


def test_boundary_distance_outside_raises():
    with pytest.raises(GeometryError):
        square().boundary_distance((1.5, 0.5))


def test_triangle_boundary_distance():
    # right triangle x, y >= 0, x + y <= 1; its inradius is 1 - 1/sqrt(2)
    tri = Polytope(A=[[-1, 0], [0, -1], [1, 1]], b=[0, 0, 1], lo=[0, 0], hi=[1, 1], name="tri")
    r = 1 - 1 / math.sqrt(2)
    assert tri.boundary_distance((r, r)) == pytest.approx(r, abs=1e-12)
    assert not tri.contains((0.8, 0.8))


def test_dp_examples():
    assert disp_from_dp(0.5, 0.5) == 0.5
    assert disp_from_dp(0.0, 0.5) == 0.0
    assert dp_from_disp(0.5, 0.5) == 0.5
    assert dp_from_disp(1 / 3, 0.5) == pytest.approx(0.25)
    with pytest.raises(GeometryError):
        dp_from_disp(1.0, 0.5)


def test_dp_for_two_point_square_value():
    # inverting 2x*dp/(x+dp) = 0.36940 at x = 1/2 gives dp = 0.29290 (2 - sqrt 2 family)
    dp = dp_from_disp(0.36940, 0.5)
    assert dp == pytest.approx(0.29290, abs=5e-6)
    assert disp_from_dp(dp, 0.5) == pytest.approx(0.36940, rel=1e-12)


@given(st.floats(1e-3, 1.0), st.floats(1e-3, 0.999))
def test_dp_round_trip(x, frac):
    d = 2 * x * frac
    assert disp_from_dp(dp_from_disp(d, x), x) == pytest.approx(d, rel=1e-12)


@given(unit, unit, unit, unit)
def test_boundary_distance_lipschitz(a, b, c, d):
    P = square()
    assert abs(P.boundary_distance((a, b)) - P.boundary_distance((c, d))) <= distance((a, b), (c, d)) + 1e-12


@given(st.floats(-0.5, 1.5), st.floats(-0.5, 1.5))
def test_positive_boundary_distance_implies_inside(a, b):
    bd = float(square().boundary_distances(np.array([[a, b]]))[0])
    if bd > 0:
        assert contains((a, b), square())


def test_json_round_trip(tmp_path):
    P = unit_cube(3, "cube3")
    path = tmp_path / "cube.json"
    path.write_text(json.dumps(P.to_json()))
    Q = load_polytope(path)
    assert Q.dim == 3 and Q.covering_rate == 1.0
    assert np.array_equal(Q.A, P.A) and np.array_equal(Q.b, P.b)


def test_builtins_and_recognition():
    assert is_unit_square(builtin("square"))
    assert builtin("cube3").dim == 3
    with pytest.raises(GeometryError):
        builtin("sphere")


def test_polytope_is_immutable():
    P = square()
    with pytest.raises(ValueError):
        P.A[0, 0] = 5.0
