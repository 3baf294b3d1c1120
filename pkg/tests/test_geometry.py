import math
from fractions import Fraction

import numpy as np
import pytest

from hardballs.ball_config import hat_configuration
from hardballs.errors import ContactError, OverlapError
from hardballs.geometry import (BallConfiguration, PolyhedralCone, cone_membership, contact_pairs,
                                gram_of_normals, tangent_cone, wall_normal)
from hardballs.numeric import EXACT, Numeric


def test_contact_pairs_hat():
    assert contact_pairs(hat_configuration(4), tol=0) == [(1, 2), (2, 3), (2, 4)]
    assert contact_pairs(hat_configuration(5), tol=0) == [(1, 2), (2, 3), (2, 4), (4, 5)]


def test_contact_pairs_far_apart():
    assert contact_pairs(BallConfiguration([[0, 0, 0], [3, 0, 0]])) == []


def test_overlap_is_rejected():
    with pytest.raises(OverlapError):
        contact_pairs(BallConfiguration([[0, 0], [0.5, 0]]))


def test_wall_normal_1d():
    nu = wall_normal(BallConfiguration([[0.0], [1.0]]), 1, 2)
    assert np.allclose(nu, [-1 / math.sqrt(2), 1 / math.sqrt(2)], atol=1e-15)
    # order of the pair is irrelevant
    assert np.allclose(wall_normal(BallConfiguration([[0.0], [1.0]]), 2, 1), nu)


def test_wall_normal_needs_contact():
    with pytest.raises(ContactError):
        wall_normal(BallConfiguration([[0.0], [2.0]]), 1, 2)


def test_interior_point_identity():
    cfg = hat_configuration(7, Numeric("float"))
    q = cfg.flat()
    for p in contact_pairs(cfg):
        assert abs(np.dot(q, wall_normal(cfg, *p)) - 1 / math.sqrt(2)) < 1e-12


def test_orthogonal_neighbours():
    cfg = hat_configuration(3, Numeric("float"))
    assert abs(np.dot(wall_normal(cfg, 1, 2), wall_normal(cfg, 2, 3))) < 1e-15


@pytest.mark.parametrize("n", [2, 3, 8, 17, 32])
def test_hat_gram_is_identity(n):
    G = gram_of_normals(hat_configuration(n, EXACT), tol=0)
    assert G.shape == (n - 1, n - 1)
    assert (G == np.eye(n - 1, dtype=object)).all()


def test_gram_shared_ball_formula():
    # balls 1 and 3 both touch ball 2 at an angle alpha
    alpha = 1.2
    cfg = BallConfiguration([[1, 0, 0], [0, 0, 0], [math.cos(alpha), math.sin(alpha), 0]])
    G = gram_of_normals(cfg)
    assert abs(G[0, 1] - math.cos(alpha) / 2) < 1e-15
    assert G[0, 0] == pytest.approx(1)


def test_tangent_cone_hat3():
    cone = tangent_cone(hat_configuration(3, Numeric("float")))
    assert cone.m == 2 and cone.dim == 9
    assert np.allclose(cone.gram, np.eye(2))
    cone.check()


def test_empty_cone():
    cone = tangent_cone(BallConfiguration([[0, 0, 0], [5, 0, 0]]))
    assert cone.m == 0
    assert cone_membership(cone, np.ones(6))


def test_cone_membership():
    cfg = hat_configuration(5, Numeric("float"))
    cone = tangent_cone(cfg)
    q = cfg.flat()
    assert cone_membership(cone, q)
    assert not cone_membership(cone, -q)
    assert cone_membership(cone, np.zeros_like(q))


def test_exact_gram_stays_rational():
    cfg = hat_configuration(5, EXACT)
    G = gram_of_normals(cfg, tol=0, check_tol=0)
    assert all(isinstance(x, Fraction) for x in G.reshape(-1))
    # the normals themselves carry a factor 1/sqrt(2)
    with pytest.raises(ValueError):
        tangent_cone(cfg, tol=0)


def test_json_round_trip():
    cfg = BallConfiguration([[0.1, 0.2, 0.3], [1.1, 0.2, 0.3]])
    back = BallConfiguration.from_json(cfg.to_json())
    assert np.array_equal(back.centers, cfg.centers)
    exact = hat_configuration(4)
    assert (BallConfiguration.from_json(exact.to_json()).centers == exact.centers).all()


def test_csv_round_trip():
    cfg = hat_configuration(6, Numeric("float"))
    back = BallConfiguration.from_csv(cfg.to_csv())
    assert np.array_equal(back.centers, cfg.centers)


def test_cone_from_normals_and_json():
    cone = PolyhedralCone.from_normals([[1.0, 0.0], [0.0, 1.0]])
    assert np.array_equal(cone.gram, np.eye(2))
    assert '"normals"' in cone.to_json()
