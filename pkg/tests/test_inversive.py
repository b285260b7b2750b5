import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from polypack.inversive import (
    P,
    OrientedCircle,
    Relation,
    apply_mobius,
    cap_to_circle,
    circle_from_center_radius,
    circle_to_cap,
    classify,
    inverse_stereographic,
    invert_circle,
    inversion_matrix,
    is_form_preserving,
    line_from_point_normal,
    mobius_matrix,
    pairing,
    stereographic,
    translation_matrix,
)

coord = st.floats(-4.0, 4.0, allow_nan=False)
radius = st.floats(0.05, 4.0, allow_nan=False)
side = st.sampled_from(["inward", "outward"])


@st.composite
def circles(draw):
    if draw(st.integers(0, 9)) == 0:
        t = draw(st.floats(0, 2 * math.pi))
        return line_from_point_normal((draw(coord), draw(coord)), (math.cos(t), math.sin(t))).vector
    return circle_from_center_radius((draw(coord), draw(coord)), draw(radius), draw(side)).vector


def test_form_is_symmetric_with_signature_3_1():
    assert np.array_equal(P, P.T)
    ev = np.linalg.eigvalsh(P)
    assert (ev > 0).sum() == 3 and (ev < 0).sum() == 1


@pytest.mark.parametrize(
    "center, r, orient, expected",
    [
        ((0, 0), 1, "inward", (-1, 1, 0, 0)),
        ((2, 0), 1, "inward", (3, 1, 2, 0)),
        ((0, 0), 1, "outward", (1, -1, 0, 0)),
    ],
)
def test_circle_from_center_radius(center, r, orient, expected):
    c = circle_from_center_radius(center, r, orient)
    np.testing.assert_allclose(c.vector, expected, atol=1e-15)
    c.check()


@pytest.mark.parametrize("bad", [0.0, -1.0])
def test_nonpositive_radius_rejected(bad):
    with pytest.raises(ValueError):
        circle_from_center_radius((0, 0), bad)


@pytest.mark.parametrize(
    "point, normal, expected",
    [
        ((0, 0), (0, -1), (0, 0, 0, -1)),
        ((0, 1), (0, 1), (2, 0, 0, 1)),
        ((0, 0), (1, 0), (0, 0, 1, 0)),
    ],
)
def test_lines(point, normal, expected):
    c = line_from_point_normal(point, normal)
    np.testing.assert_allclose(c.vector, expected, atol=1e-15)
    assert c.is_line and c.radius == math.inf


def test_line_needs_unit_normal():
    with pytest.raises(ValueError):
        line_from_point_normal((0, 0), (1, 1))


def test_pairing_examples():
    assert pairing((0, 0, 0, -1), (2, 0, 0, 1)) == pytest.approx(-1.0, abs=1e-15)
    assert pairing((-1, 1, 0, 0), (-1, 1, 0, 0)) == pytest.approx(1.0, abs=1e-15)
    assert pairing((-1, 1, 0, 0), (3, 1, 2, 0)) == pytest.approx(-1.0, abs=1e-15)


def test_invert_examples():
    np.testing.assert_allclose(invert_circle((0, 0, 1, 0), (3, 1, 2, 0)), (3, 1, -2, 0))
    d = circle_from_center_radius((0.3, -0.2), 1.5).vector
    np.testing.assert_allclose(invert_circle(d, d), -d)
    # a circle centered on the mirror line is orthogonal to it
    c = circle_from_center_radius((0, 5), 2).vector
    np.testing.assert_allclose(invert_circle((0, 0, 1, 0), c), c)


def test_invert_keeps_type():
    out = invert_circle(OrientedCircle(0, 0, 1, 0), OrientedCircle(3, 1, 2, 0))
    assert isinstance(out, OrientedCircle)


def test_mobius_examples():
    c = (-1.0, 1.0, 0.0, 0.0)
    np.testing.assert_allclose(apply_mobius(np.eye(4), c), c)
    d = circle_from_center_radius((0.5, 0.5), 2.0).vector
    np.testing.assert_allclose(apply_mobius(inversion_matrix(d), c), invert_circle(d, c), atol=1e-12)
    np.testing.assert_allclose(apply_mobius(translation_matrix((1, 0)), c), (0, 1, 1, 0), atol=1e-12)


def test_mobius_rejects_non_form_preserving():
    with pytest.raises(ValueError):
        apply_mobius(np.diag([2.0, 1, 1, 1]), (-1, 1, 0, 0))


def test_mobius_matrix_moves_circle_as_expected():
    # z -> 2z + i doubles the radius and moves the center
    M = mobius_matrix(2.0, 1j, 0.0, 1.0)
    assert is_form_preserving(M)
    c = circle_from_center_radius((1.0, 0.0), 0.5)
    out = OrientedCircle.from_vector(apply_mobius(M, c))
    np.testing.assert_allclose(out.center, (2.0, 1.0), atol=1e-12)
    assert out.radius == pytest.approx(1.0)


def test_classification_table():
    a = circle_from_center_radius((0, 0), 1)
    cases = [
        (circle_from_center_radius((3, 0), 1), Relation.DISJOINT_EXTERNAL),
        (circle_from_center_radius((2, 0), 1), Relation.TANGENT_EXTERNAL),
        (circle_from_center_radius((math.sqrt(2), 0), 1), Relation.ORTHOGONAL),
        (circle_from_center_radius((1, 0), 1), Relation.CROSSING),
        (circle_from_center_radius((0.5, 0), 0.5), Relation.TANGENT_NESTED),
        (circle_from_center_radius((0.2, 0), 0.5), Relation.DISJOINT_NESTED),
    ]
    for c, rel in cases:
        assert classify(pairing(a, c))[0] is rel
    rel, angle = classify(pairing(a, circle_from_center_radius((1, 0), 1)))
    assert angle == pytest.approx(math.pi / 3)


def test_caps_and_stereographic_round_trip():
    n = np.array([0.3, -0.4, 0.866])
    c = cap_to_circle(n, 0.25)
    assert pairing(c, c) == pytest.approx(1.0)
    n2, k2 = circle_to_cap(c)
    np.testing.assert_allclose(n2, n / np.linalg.norm(n))
    assert k2 == pytest.approx(0.25)
    w = np.array([[0.3, -1.2], [2.0, 0.5]])
    np.testing.assert_allclose(stereographic(inverse_stereographic(w)), w)
    with pytest.raises(ValueError):
        cap_to_circle(n, 1.0)


@settings(max_examples=200, deadline=None)
@given(circles(), circles())
def test_pairing_symmetric(a, b):
    assert pairing(a, b) == pairing(b, a)


@settings(max_examples=200, deadline=None)
@given(circles())
def test_self_pairing_is_one(c):
    assert pairing(c, c) == pytest.approx(1.0, abs=1e-9 * max(1.0, np.abs(c).max() ** 2))


@settings(max_examples=200, deadline=None)
@given(circles(), circles())
def test_inversion_is_involution(d, c):
    back = invert_circle(d, invert_circle(d, c))
    scale = max(1.0, np.abs(d).max()) ** 2 * max(1.0, np.abs(c).max())
    np.testing.assert_allclose(back, c, atol=1e-12 * scale)


@settings(max_examples=200, deadline=None)
@given(circles(), circles(), circles())
def test_inversion_preserves_pairings(d, a, b):
    scale = (max(1.0, np.abs(d).max()) ** 2 * max(1.0, np.abs(a).max(), np.abs(b).max())) ** 2
    got = pairing(invert_circle(d, a), invert_circle(d, b))
    assert got == pytest.approx(pairing(a, b), abs=1e-10 * scale)
    assert is_form_preserving(inversion_matrix(d), tol=1e-9)


@settings(max_examples=100, deadline=None)
@given(circles(), circles())
def test_orientation_flip(a, b):
    assert pairing(-a, b) == -pairing(a, b)
    assert pairing(-a, -a) == pairing(a, a)
