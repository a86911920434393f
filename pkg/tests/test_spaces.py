"""Space parameters, distances and ball volumes."""
import math

import numpy as np
import pytest
from scipy.integrate import quad

from src.errors import DomainError, SpaceError, UnsupportedSpaceError
from src.pointsets import sample_uniform
from src.spaces import (
    Family,
    ProjVec,
    SphereVec,
    SpaceKind,
    as_components,
    ball_volume,
    ball_volume_bounds,
    distance,
    field_inner_sq,
    load_distance_matrix,
    pairwise_cosines,
    pairwise_distances,
    parse_numeric_rows,
    quaternion_multiply,
    radial_density,
    space_params,
)
from src.specfun import JacobiParams, jacobi_eval

FIVE_SPACES = [
    SpaceKind.sphere(2),
    SpaceKind.sphere(4),
    SpaceKind.projective("real", 2),
    SpaceKind.projective("complex", 2),
    SpaceKind.projective("quaternion", 2),
]


@pytest.mark.parametrize(
    "space, expected",
    [
        (SpaceKind.sphere(2), (2, 2, 0.0, 0.0, 1.0)),
        (SpaceKind.sphere(3), (3, 3, 0.5, 0.5, 8 / math.pi)),
        (SpaceKind.projective("real", 2), (2, 1, 0.0, -0.5, 0.5)),
        (SpaceKind.projective("complex", 2), (4, 2, 1.0, 0.0, 2.0)),
        (SpaceKind.projective("quaternion", 2), (8, 4, 3.0, 1.0, 20.0)),
        (SpaceKind.projective("octonion"), (16, 8, 7.0, 3.0, 1320.0)),
    ],
)
def test_space_params_table(space, expected):
    d, d0, a, b, c_ab = expected
    params = space_params(space)
    assert (params.d, params.d0) == (d, d0)
    assert params.a == pytest.approx(a)
    assert params.b == pytest.approx(b)
    assert params.c_ab == pytest.approx(c_ab, rel=1e-12)


def test_parse_compact_and_family_names():
    assert SpaceKind.parse("sphere2") == SpaceKind.sphere(2)
    assert SpaceKind.parse("cp", 3) == SpaceKind.projective("complex", 3)
    assert SpaceKind.parse("projquaternion2").family is Family.PROJ_QUATERNION
    assert SpaceKind.parse("octonion").n == 2
    with pytest.raises(SpaceError):
        SpaceKind.parse("sphere2", 3)
    with pytest.raises(SpaceError):
        SpaceKind.parse("torus2")
    with pytest.raises(SpaceError):
        SpaceKind.parse("sphere")


def test_invalid_spaces_are_rejected():
    with pytest.raises(SpaceError):
        SpaceKind.sphere(0)
    with pytest.raises(SpaceError):
        SpaceKind.projective("complex", 1)
    with pytest.raises(SpaceError):
        SpaceKind(Family.PROJ_OCTONION, 3)
    with pytest.raises(SpaceError):
        SpaceKind(Family.ABSTRACT)


def test_octonion_and_abstract_have_no_vector_model():
    for space in (SpaceKind.projective("octonion"), SpaceKind.abstract(6, 2)):
        assert not space.has_vector_model
        with pytest.raises(UnsupportedSpaceError):
            _ = space.vector_shape
    assert space_params(SpaceKind.abstract(6, 2)).a == pytest.approx(2.0)


@pytest.mark.parametrize("space", FIVE_SPACES + [SpaceKind.projective("octonion")])
def test_radial_density_integrates_to_ball_volume(space):
    total, _ = quad(lambda r: radial_density(space, r), 0.0, math.pi)
    assert total == pytest.approx(1.0, abs=1e-9)
    for r in (0.3, 1.0, 2.5):
        partial, _ = quad(lambda t: radial_density(space, t), 0.0, r)
        assert ball_volume(space, r) == pytest.approx(partial, abs=1e-10)


def test_sphere_ball_volume_closed_form_and_endpoints():
    space = SpaceKind.sphere(2)
    assert ball_volume(space, math.pi / 3) == pytest.approx(0.25, abs=1e-15)
    assert ball_volume(space, 0.0) == 0.0
    assert ball_volume(space, math.pi) == 1.0
    with pytest.raises(DomainError):
        ball_volume(space, 3.5)


def test_ball_volume_bounds_on_s2():
    c1, c2 = ball_volume_bounds(SpaceKind.sphere(2))
    assert c1 == pytest.approx(1 / math.pi**2, rel=1e-6)
    assert c2 == pytest.approx(0.25, rel=1e-6)


def test_sphere_distances():
    space = SpaceKind.sphere(2)
    e1, e2 = np.eye(3)[0], np.eye(3)[1]
    assert distance(space, SphereVec(e1), SphereVec(e2)) == pytest.approx(math.pi / 2)
    assert distance(space, SphereVec(e1), SphereVec(-e1)) == pytest.approx(math.pi)
    assert distance(space, SphereVec(e1), SphereVec(e1)) == 0.0
    with pytest.raises(SpaceError):
        distance(space, SphereVec(np.array([1.0, 1.0, 0.0])), SphereVec(e1))


def test_complex_projective_distance_ignores_phase():
    space = SpaceKind.projective("complex", 2)
    rng = np.random.default_rng(3)
    z = rng.normal(size=3) + 1j * rng.normal(size=3)
    z /= np.linalg.norm(z)
    x = as_components(z, space)
    y = as_components(np.exp(0.7j) * z, space)
    assert distance(space, ProjVec(x), ProjVec(y)) == pytest.approx(0.0, abs=1e-7)
    e1 = as_components(np.array([1, 0, 0], dtype=complex), space)
    e2 = as_components(np.array([0, 1j, 0], dtype=complex), space)
    assert distance(space, ProjVec(e1), ProjVec(e2)) == pytest.approx(math.pi)


def test_field_inner_sq_matches_complex_vdot():
    space = SpaceKind.projective("complex", 3)
    rng = np.random.default_rng(11)
    u = rng.normal(size=(5, 4)) + 1j * rng.normal(size=(5, 4))
    v = rng.normal(size=(7, 4)) + 1j * rng.normal(size=(7, 4))
    ours = field_inner_sq(as_components(u, space), as_components(v, space))
    expected = np.abs(np.conj(u) @ v.T) ** 2
    np.testing.assert_allclose(ours, expected, rtol=1e-12, atol=1e-12)


def test_quaternion_product_and_right_phase_invariance():
    i, j, k = np.eye(4)[1], np.eye(4)[2], np.eye(4)[3]
    np.testing.assert_allclose(quaternion_multiply(i, j), k)
    np.testing.assert_allclose(quaternion_multiply(j, i), -k)

    rng = np.random.default_rng(5)
    x = rng.normal(size=(1, 3, 4))
    y = rng.normal(size=(1, 3, 4))
    q = rng.normal(size=4)
    q /= np.linalg.norm(q)
    y_turned = quaternion_multiply(y, q)
    np.testing.assert_allclose(field_inner_sq(x, y), field_inner_sq(x, y_turned), rtol=1e-12)


def test_quaternion_projective_distances():
    space = SpaceKind.projective("quaternion", 2)
    x = np.zeros((3, 4))
    x[0, 0] = 1.0
    y = np.zeros((3, 4))
    y[0] = [0.5, 0.5, 0.5, 0.5]
    z = np.zeros((3, 4))
    z[2, 3] = 1.0
    assert distance(space, ProjVec(x), ProjVec(y)) == pytest.approx(0.0, abs=1e-7)
    assert distance(space, ProjVec(x), ProjVec(z)) == pytest.approx(math.pi)


def test_pairwise_distances_zero_diagonal_and_symmetry():
    rng = np.random.default_rng(1)
    pts = rng.normal(size=(6, 3))
    pts /= np.linalg.norm(pts, axis=1, keepdims=True)
    dist = pairwise_distances(SpaceKind.sphere(2), pts)
    assert np.all(np.diag(dist) == 0.0)
    np.testing.assert_allclose(dist, dist.T)
    assert dist.max() <= math.pi


def test_parse_numeric_rows_handles_comments_and_separators():
    rows = parse_numeric_rows("# header\n1, 2; 3\n\n4 5 6  # trailing\n-1e-3\t.5\tinf\n")
    assert rows[0] == [1.0, 2.0, 3.0]
    assert rows[1] == [4.0, 5.0, 6.0]
    assert rows[2][:2] == [-1e-3, 0.5]
    with pytest.raises(SpaceError):
        parse_numeric_rows("1 2 x\n")


def test_load_distance_matrix_text_and_json(tmp_path):
    text_path = tmp_path / "dist.txt"
    text_path.write_text("0 1.5\n1.5 0\n", encoding="utf-8")
    np.testing.assert_allclose(load_distance_matrix(text_path), [[0, 1.5], [1.5, 0]])

    json_path = tmp_path / "dist.json"
    json_path.write_text('{"distance_matrix": [[0, 3.0], [3.0, 0]]}', encoding="utf-8")
    assert load_distance_matrix(json_path)[0, 1] == 3.0

    bad = tmp_path / "bad.txt"
    bad.write_text("0 1\n2 0\n", encoding="utf-8")
    with pytest.raises(SpaceError):
        load_distance_matrix(bad)
    far = tmp_path / "far.txt"
    far.write_text("0 4\n4 0\n", encoding="utf-8")
    with pytest.raises(SpaceError):
        load_distance_matrix(far)


@pytest.mark.parametrize(
    "space",
    [
        SpaceKind.sphere(2),
        SpaceKind.sphere(3),
        SpaceKind.projective("real", 2),
        SpaceKind.projective("complex", 2),
        SpaceKind.projective("quaternion", 2),
    ],
)
def test_zonal_polynomials_average_to_zero_over_random_pairs(space):
    params = space_params(space)
    count, block = 4000, 500
    x = sample_uniform(space, count, seed=1).coords
    y = sample_uniform(space, count, seed=2).coords
    cos = np.concatenate(
        [np.diag(pairwise_cosines(space, x[i : i + block], y[i : i + block])) for i in range(0, count, block)]
    )
    for m in (1, 2, 3):
        values = jacobi_eval(JacobiParams(params.a, params.b, m), cos)
        stderr = values.std(ddof=1) / math.sqrt(count)
        assert abs(values.mean()) <= 4 * stderr
