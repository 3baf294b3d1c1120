from fractions import Fraction as F

import pytest

from hardballs import atraj
from hardballs.atraj import (GENERALIZED, GENUINE, AdmissibleMatrix, PLTrajectory, build_Am,
                             build_Atilde, build_inductive, closed_form_count, collision_count_formula,
                             edge_set, perturb_to_genuine, propagate, rescale, validate)
from hardballs.errors import InadmissibleEventError


def abs_t():
    """f(t) = |t| on [-1, 1]."""
    return PLTrajectory(F(-1), F(1), [F(1)], [F(0)], [[F(-1)], [F(1)]])


def test_edge_sets():
    assert set(edge_set(1)) == set()
    assert set(edge_set(3)) == {(1, 2), (2, 3), (1, 3)}
    assert set(edge_set(5)) == {(1, 2), (2, 3), (3, 4), (4, 5), (1, 3), (3, 5)}


def test_build_Am():
    assert build_Am(1).to_json() == [["1"]]
    A3 = build_Am(3)
    assert [[A3[i, j] for j in range(3)] for i in range(3)] == [[1, -1, -1], [0, 1, -1], [0, 0, 1]]


def test_Am_nested():
    A5, A6 = build_Am(5), build_Am(6)
    assert all(A5[i, j] == A6[i, j] for i in range(5) for j in range(5))


def test_Atilde_example():
    At = build_Atilde(2, [F(1), F(1, 10)])
    assert [[At[i, j] for j in range(2)] for i in range(2)] == [[1, -1], [F(-1, 100), 1]]


def test_Atilde_equal_lambda_and_zeros():
    m = 5
    At = build_Atilde(m, [F(1)] * m)
    E = edge_set(m)
    for i in range(1, m + 1):
        for j in range(1, m + 1):
            if i == j:
                assert At[i - 1, j - 1] == 1
            elif (i, j) in E or (j, i) in E:
                assert At[i - 1, j - 1] == -1
            else:
                assert At[i - 1, j - 1] == 0


def test_rescale():
    lam = [F(1), F(1, 10)]
    B = rescale(build_Atilde(2, lam), lam)
    assert [[B[i, j] for j in range(2)] for i in range(2)] == [[1, F(-1, 10)], [F(-1, 10), 1]]
    assert B.is_symmetric()
    A = build_Am(4)
    assert rescale(A, [1, 1, 1, 1]).to_json() == A.to_json()


def test_diagonal_must_be_one():
    with pytest.raises(ValueError):
        AdmissibleMatrix([[2]])


def test_inductive_small_cases():
    f, s = build_inductive(1)
    assert s[0].elements() == [0] and f.collision_count() == 1
    f, s = build_inductive(3)
    assert s[1].elements() == [F(-1, 2), F(1, 2)]
    assert s[2].elements() == [F(-3, 4), F(-1, 4), F(1, 4), F(3, 4)]
    assert f.collision_count() == 7


def test_inductive_m4_simultaneous_roots():
    f, s = build_inductive(4)
    assert s[3].elements() == [-1, F(-1, 2), 0, F(1, 2), 1]
    A = build_Am(4)
    shared = [(t, z) for t, z in f.collisions() if len(z) > 1]
    assert {t for t, _ in shared} == {F(-1, 2), 0, F(1, 2)}
    for _, z in shared:
        for a in z:
            for b in z:
                if a != b:
                    assert A[a, b] == 0 and A[b, a] == 0
    assert validate(f, A, GENERALIZED).ok
    assert not validate(f, A, GENUINE).ok


def test_count_formula():
    assert collision_count_formula(3) == 7
    assert collision_count_formula(4) == 12
    assert collision_count_formula(5) == 22
    assert [len(p) for p in build_inductive(5)[1].progressions] == [1, 2, 4, 5, 10]
    assert closed_form_count(1) == 1
    with pytest.raises(ValueError):
        collision_count_formula(1)


def test_count_values():
    assert [collision_count_formula(m) for m in range(2, 13)] == [3, 7, 12, 22, 33, 55, 78, 124, 171, 265, 360]


def test_slopes_are_unit():
    f, _ = build_inductive(7)
    assert {abs(s) for row in f.slopes for s in row} == {1}


def test_interleaving():
    _, s = build_inductive(10)
    for i in range(1, 10, 2):  # 0-based index of T_{2k}
        x, y = s[i - 1].elements(), s[i].elements()
        assert len(y) == len(x) + 1
        merged = [v for pair in zip(y, x) for v in pair] + [y[-1]]
        assert all(a < b for a, b in zip(merged, merged[1:]))


def test_validate_abs():
    rep = validate(abs_t(), AdmissibleMatrix([[1]]), GENUINE)
    assert rep.ok and rep.collisions == 1


def test_validate_detects_tampering():
    f, _ = build_inductive(3)
    slopes = [list(r) for r in f.slopes]
    slopes[3][1] += F(1, 1000)
    bad = PLTrajectory(f.t_start, f.t_end, f.start, f.events, slopes)
    rep = validate(bad, build_Am(3), GENERALIZED)
    assert not rep.ok and rep.event is not None


def test_validate_rejects_endpoint_collision():
    f = PLTrajectory(F(0), F(1), [F(0)], [], [[F(1)]])
    assert not validate(f, AdmissibleMatrix([[1]])).ok


def test_propagate_single_reflection():
    g = propagate(AdmissibleMatrix([[1]]), [F(1)], [F(-1)], F(3))
    assert g.events == (1,) and g.slopes[-1] == (1,)


def test_propagate_reproduces_inductive():
    for m in range(1, 8):
        f, _ = build_inductive(m)
        t0, x, v = atraj.initial_data(f)
        g = propagate(build_Am(m), x, v, f.t_end, t_start=t0)
        assert g.collisions() == f.collisions()
        assert g.slopes == f.slopes


def test_propagate_rejects_forbidden_simultaneity():
    with pytest.raises(InadmissibleEventError):
        propagate(build_Am(2), [F(1), F(1)], [F(-1), F(-1)], F(5))


def test_perturb_identity_when_genuine():
    f = abs_t()
    assert perturb_to_genuine(f, AdmissibleMatrix([[1]]), jitter=0) is f


def test_perturb_m4():
    f, _ = build_inductive(4)
    A = build_Am(4)
    g = perturb_to_genuine(f, A, seed=3)
    assert validate(g, A, GENUINE).ok
    times = [t for t, _ in g.collisions()]
    assert len(times) == len(set(times)) == 12


def test_root_formula():
    # coordinate at 1 moving with slope -2 from tau = 0 reaches 0 at 1/2
    g = propagate(AdmissibleMatrix([[1]]), [F(1)], [F(-2)], F(1), t_start=F(0))
    assert g.events == (F(1, 2),)


def test_lambda_ratio_keeps_collisions():
    f, _ = build_inductive(4)
    g = perturb_to_genuine(f, build_Am(4))
    r = atraj.find_lambda_ratio(g)
    assert 0 < r <= F(1, 2)
    for ratio in (r, r / 2, r / 8):
        assert atraj.keeps_collisions(build_Atilde(4, atraj.geometric_lambda(4, ratio)), g)


def test_json_round_trip():
    f, s = build_inductive(4)
    assert PLTrajectory.from_json(f.to_json()) == f
    assert atraj.RootSchedule.from_json(s.to_json()) == s


def test_csv_has_one_row_per_root():
    f, _ = build_inductive(4)
    assert len(f.to_csv().strip().splitlines()) == 1 + 12
