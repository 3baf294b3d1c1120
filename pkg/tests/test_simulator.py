from fractions import Fraction as F

import numpy as np
import pytest

from hardballs.cone_billiard import ConeTrajectory, lift_from_gram
from hardballs.errors import ContactError, RealizationError, SingularCollisionError
from hardballs.geometry import BallConfiguration, tangent_cone, wall_normal
from hardballs.atraj import PLTrajectory
from hardballs.numeric import EXACT, Numeric
from hardballs.simulator import (BallSystemState, VerifyParams, apply_elastic, final_state,
                                 next_collision, realize_from_cone, simulate, verify_exponential)


def line(positions, velocities, numeric=Numeric("float")):
    return BallSystemState([[p] for p in positions], [[v] for v in velocities], 0, numeric)


def test_two_balls_head_on():
    s = BallSystemState([[0, 0, 0], [3, 0, 0]], [[1, 0, 0], [-1, 0, 0]])
    dt, pair, simultaneous = next_collision(s)
    assert dt == pytest.approx(1.0) and pair == (1, 2) and not simultaneous


def test_no_collision_at_rest_or_receding():
    assert next_collision(BallSystemState([[0, 0], [3, 0]], [[0, 0], [0, 0]])) is None
    assert next_collision(BallSystemState([[0, 0], [3, 0]], [[-1, 0], [1, 0]])) is None


def test_head_on_exchange():
    s = BallSystemState([[0.0], [1.0]], [[1.0], [-1.0]])
    after = apply_elastic(s, (1, 2))
    assert after.velocities.tolist() == [[-1.0], [1.0]]


def test_grazing_contact_unchanged():
    s = BallSystemState([[0.0, 0.0], [1.0, 0.0]], [[0.0, 1.0], [0.0, -1.0]])
    after = apply_elastic(s, (1, 2))
    assert np.array_equal(after.velocities, s.velocities)


def test_elastic_needs_contact():
    with pytest.raises(ContactError):
        apply_elastic(BallSystemState([[0.0], [2.0]], [[0.0], [0.0]]), (1, 2))


def test_elastic_matches_reflection_law():
    rng = np.random.default_rng(1)
    for _ in range(50):
        d = rng.normal(size=3)
        d /= np.linalg.norm(d)
        q = np.array([np.zeros(3), d])
        v = rng.normal(size=(2, 3))
        s = BallSystemState(q, v)
        after = apply_elastic(s, (1, 2))
        nu = wall_normal(BallConfiguration(q), 1, 2)
        w = v.reshape(-1)
        expected = w - 2 * np.dot(w, nu) * nu
        assert np.abs(after.velocities.reshape(-1) - expected).max() <= 1e-12 * max(1, np.abs(w).max())


def test_three_balls_on_a_line():
    log = simulate(line([-3.5, 0, 3], [1, 0, -1]))
    assert log.times() == pytest.approx([2, 2.25, 2.5])
    assert len(log) == 3


def test_three_balls_on_a_line_exact():
    s = line([F(-7, 2), 0, 3], [1, 0, -1], EXACT)
    log = simulate(s)
    assert log.times() == [2, F(9, 4), F(5, 2)]
    end = final_state(s, log)
    assert end.momentum().tolist() == s.momentum().tolist()
    assert end.energy() == s.energy()


def test_single_ball_and_pair():
    assert len(simulate(BallSystemState([[0.0, 0.0]], [[1.0, 1.0]]))) == 0
    log = simulate(line([0, 2], [1, -1]))
    assert len(log) == 1 and log.indices() == [(1, 2)]


def test_horizon_and_max_events():
    s = line([-3.5, 0, 3], [1, 0, -1])
    assert len(simulate(s, horizon=2.1)) == 1
    assert len(simulate(s, max_events=2)) == 2


def test_simultaneous_collision_is_reported():
    s = line([-2, 0, 2], [1, 0, -1])
    with pytest.raises(SingularCollisionError) as info:
        simulate(s)
    assert info.value.state is not None


def test_state_json_round_trip():
    s = BallSystemState([[0.5, 1], [2, 3]], [[1, 0], [0, -1]], 0.25)
    back = BallSystemState.from_json(s.to_json())
    assert np.array_equal(back.positions, s.positions) and back.time == s.time
    e = line([F(1, 3), 2], [F(1, 7), 0], EXACT)
    assert (BallSystemState.from_json(e.to_json()).positions == e.positions).all()


def test_reversibility():
    s = BallSystemState([[0, 0], [1.7, 0.3], [3.2, -0.4], [1.5, 2.2]],
                        [[1, 0.1], [0, 0], [-1, 0.05], [0.1, -1]])
    log = simulate(s, horizon=10)
    assert len(log) >= 2
    end = final_state(s, log)
    back = BallSystemState(end.positions, -end.velocities, -end.time)
    rlog = simulate(back, horizon=-s.time)
    assert [-t for t in rlog.times()][1:] == pytest.approx(log.times()[::-1][1:], abs=1e-9)


def test_realize_single_wall():
    q = BallConfiguration([[0.0], [1.0]])
    cone = tangent_cone(q)
    f = PLTrajectory(F(-1), F(1), [F(1)], [F(0)], [[F(-1)], [F(1)]])
    traj = lift_from_gram(cone, f)
    state = realize_from_cone(q, traj, 8)
    assert np.array_equal(state.velocities.reshape(-1), traj.velocity0)
    log = simulate(state)
    assert log.indices() == [(1, 2)]
    assert log.times()[0] == pytest.approx(0.0, abs=1e-15)


def test_realize_large_scale_tends_to_q():
    q = BallConfiguration([[0.0], [1.0]])
    cone = tangent_cone(q)
    traj = ConeTrajectory(-1.0, np.array([-0.7, 0.7]), [np.array([0.7, -0.7])])
    far = realize_from_cone(q, traj, 2.0**40)
    assert np.abs(far.positions - q.centers).max() < 1e-12
    assert cone.m == 1


def test_realize_rejects_overlap():
    q = BallConfiguration([[0.0], [1.0]])
    traj = ConeTrajectory(0.0, np.array([0.5, -0.5]), [np.array([0.0, 0.0])])
    with pytest.raises(RealizationError):
        realize_from_cone(q, traj, 4)


def test_realize_speed_normalization():
    q = BallConfiguration([[0.0], [1.0]])
    traj = ConeTrajectory(0.0, np.array([-1.0, 1.0]), [np.array([3.0, 4.0])])
    s = realize_from_cone(q, traj, 4, normalize_speed=True)
    assert np.linalg.norm(s.velocities) == pytest.approx(1.0)


@pytest.mark.parametrize("n,expected", [(3, 3), (4, 7), (5, 12)])
def test_verify_small(n, expected):
    rep = verify_exponential(n)
    assert rep.matched and rep.observed == expected >= 2 ** (n // 2)


def test_verify_rejects_large_ratio():
    with pytest.raises(ValueError):
        verify_exponential(4, VerifyParams(lambda_ratio=F(1, 4), theta=0.3))
