"""Reference chain configuration in R^3 and its angle-perturbed variants.

The reference configuration has ``m = n - 1`` touching pairs whose
segments meet at right angles.  Segments are numbered ``u_1 = [q1, q2]``,
``u_2k = [q_2k, q_2k+1]``, ``u_2k+1 = [q_2k, q_2k+2]``; two segments meet
exactly when their indices form an edge of :func:`hardballs.atraj.edge_set`.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from .atraj import edge_set
from .geometry import BallConfiguration
from .numeric import EXACT, FLOAT, Numeric

NONCONTACT_MARGIN = 1e-6


def _hat_point(i: int) -> tuple:
    if i == 1:
        return (0, 0, 0)
    r = i % 4
    if r == 2:
        k = (i + 2) // 4
        return (k, k - 1, 0)
    if r == 3:
        k = (i + 1) // 4
        return (k, k - 1, -1)
    if r == 0:
        k = i // 4
        return (k, k, 0)
    k = (i - 1) // 4
    return (k, k, 1)


def hat_configuration(n: int, numeric: Numeric = EXACT) -> BallConfiguration:
    """Right-angled reference chain of ``n`` balls (integer coordinates)."""
    if n < 2:
        raise ValueError("need at least two balls")
    return BallConfiguration([_hat_point(i) for i in range(1, n + 1)], numeric)


@dataclass(frozen=True)
class ContactChain:
    n: int
    segments: tuple

    @property
    def m(self) -> int:
        return len(self.segments)

    def adjacency(self) -> set:
        """Segment index pairs ``(i, j)``, 1-based, that share a ball."""
        out = set()
        for a in range(self.m):
            for b in range(a + 1, self.m):
                if set(self.segments[a]) & set(self.segments[b]):
                    out.add((a + 1, b + 1))
        return out


def _segment(i: int) -> tuple:
    if i == 1:
        return (1, 2)
    return (i, i + 1) if i % 2 == 0 else (i - 1, i + 1)


def chain_segments(n: int) -> ContactChain:
    if n < 2:
        raise ValueError("need at least two balls")
    return ContactChain(n, tuple(_segment(i) for i in range(1, n)))


@dataclass(frozen=True)
class AngleAssignment:
    """Angles between meeting segments, stored by their cosines.

    Only cosines enter the construction, so keeping them avoids an
    ``acos``/``cos`` round trip (and keeps right angles exact).
    """

    cosines: dict
    numeric: Numeric = FLOAT

    @classmethod
    def from_radians(cls, angles: dict, numeric: Numeric = FLOAT) -> "AngleAssignment":
        half_pi = numeric.pi / 2
        cos = {}
        for key, a in angles.items():
            a = numeric.num(a)
            cos[tuple(key)] = numeric.num(0) if a == half_pi else numeric.cos(a)
        return cls(cos, numeric)

    @classmethod
    def right_angles(cls, m: int, numeric: Numeric = FLOAT) -> "AngleAssignment":
        return cls({e: numeric.num(0) for e in edge_set(m)}, numeric)

    def angle(self, i: int, j: int):
        return self.numeric.acos(self.cosines[(i, j)])

    def max_deviation(self):
        """Largest ``|alpha - pi/2|`` over all stored pairs."""
        half_pi = self.numeric.pi / 2
        return max((abs(self.angle(*k) - half_pi) for k in self.cosines), default=0)

    def to_json(self) -> str:
        return json.dumps({f"{i},{j}": self.numeric.to_str(self.angle(i, j))
                           for (i, j) in sorted(self.cosines)})

    @classmethod
    def from_json(cls, text: str, numeric: Numeric = FLOAT) -> "AngleAssignment":
        data = json.loads(text)
        return cls.from_radians(
            {tuple(int(p) for p in k.split(",")): numeric.parse(v) for k, v in data.items()}, numeric)


def angles_from_lambda(lam, theta=None, numeric: Numeric = FLOAT) -> AngleAssignment:
    """Angles with ``cos(alpha_ij) = -2 lam_j / lam_i`` on the edge set.

    With ``theta`` given, every ratio must be below ``sin(theta)/2`` so that
    all angles stay within ``theta`` of a right angle.
    """
    m = len(lam)
    if any(x <= 0 for x in lam):
        raise ValueError("lambda must be positive")
    cos = {}
    for i, j in edge_set(m):
        ratio = lam[j - 1] / lam[i - 1]
        if theta is not None and not numeric.num(ratio) < numeric.sin(numeric.num(theta)) / 2:
            raise ValueError(f"lambda ratio {float(ratio):.3g} on ({i},{j}) is too large for theta={float(theta):.3g}")
        cos[(i, j)] = numeric.num(-2 * ratio)
    return AngleAssignment(cos, numeric)


def _cross2(a, b):
    return a[0] * b[1] - a[1] * b[0]


def perturbed_configuration(n: int, angles: AngleAssignment, theta=None) -> BallConfiguration:
    """Chain configuration with prescribed angles between meeting segments.

    Even-indexed centers stay in the xy-plane (chosen by the skip-one angles,
    turning the same way as the reference chain); odd-indexed centers are
    lifted out of the plane to satisfy the two remaining angles, on the same
    side as in the reference chain.
    """
    num = angles.numeric
    m = n - 1
    if m < 1:
        raise ValueError("need at least two balls")
    cos = dict(angles.cosines)
    missing = [e for e in edge_set(m) if e not in cos]
    if missing:
        raise ValueError(f"missing angles for {missing}")
    if theta is not None:
        if not theta < math.pi / 6:
            raise ValueError("theta must be below pi/6")
        if angles.max_deviation() >= num.num(theta):
            raise ValueError("an angle is not within theta of a right angle")
    mm = m
    if m % 2 == 0:
        # extend to an odd chain with right angles at the extra ball, then drop it
        mm = m + 1
        cos[(m, m + 1)] = num.num(0)
        cos[(m - 1, m + 1)] = num.num(0)
    zero, one = num.num(0), num.num(1)
    hat = {i: _hat_point(i) for i in range(1, mm + 2)}
    q = {1: num.array([0, 0, 0]), 2: num.array([1, 0, 0])}

    def unit(v):
        return v / num.norm(v)

    for i in range(3, mm + 1, 2):
        s = i - 1
        p = 1 if i == 3 else i - 3
        d = unit(q[p] - q[s])
        hs, hp, ht = (np.array(hat[k][:2]) for k in (s, p, i + 1))
        sigma = 1 if _cross2(hp - hs, ht - hs) > 0 else -1
        c = cos[(i - 2, i)]
        sn = num.sqrt(one - c * c)
        q[i + 1] = q[s] + num.array([c * d[0] - sigma * sn * d[1], sigma * sn * d[0] + c * d[1], zero])

    for i in range(2, mm, 2):
        a = unit(q[1 if i == 2 else i - 2] - q[i])
        b = unit(q[i + 2] - q[i])
        ca, cb = cos[(i - 1, i)], cos[(i, i + 1)]
        det = a[0] * b[1] - a[1] * b[0]
        wx = (ca * b[1] - cb * a[1]) / det
        wy = (a[0] * cb - b[0] * ca) / det
        rest = one - wx * wx - wy * wy
        if not rest > 0:
            raise ValueError(f"angles at ball {i} are not realizable")
        wz = num.sqrt(rest) * (1 if hat[i + 1][2] > 0 else -1)
        q[i + 1] = q[i] + num.array([wx, wy, wz])

    config = BallConfiguration([q[k] for k in range(1, n + 1)], num)
    _check_combinatorics(config)
    return config


def _check_combinatorics(config: BallConfiguration, margin=NONCONTACT_MARGIN) -> None:
    chain = set(chain_segments(config.n).segments)
    lo = (1 + margin) ** 2
    for i in range(1, config.n + 1):
        for j in range(i + 1, config.n + 1):
            sq = config.sq_dist(i, j)
            if (i, j) in chain:
                if abs(sq - 1) > 1e-9:
                    raise ValueError(f"chain pair ({i},{j}) lost contact")
            elif not sq > lo:
                raise ValueError(f"balls {i},{j} are too close ({float(sq) ** 0.5:.6g}); theta too large for n={config.n}")


def find_theta(n: int, start=math.pi / 8, shrink=0.8, samples: int = 8, seed: int = 0) -> float:
    """Largest ``start * shrink**k`` for which extreme angle choices keep the
    non-chain distances above ``1 + 1e-6``.

    Tests all-plus, all-minus, alternating, and random sign patterns at
    ``pi/2 +- 0.999 theta``; this is an empirical stand-in for the
    existential bound.
    """
    m = n - 1
    edges = list(edge_set(m))
    rng = np.random.default_rng(seed)
    theta = start
    for _ in range(60):
        patterns = [[1] * len(edges), [-1] * len(edges), [(-1) ** k for k in range(len(edges))]]
        patterns += [list(rng.choice([-1, 1], size=len(edges))) for _ in range(samples)]
        ok = True
        for signs in patterns:
            angles = AngleAssignment.from_radians(
                {e: math.pi / 2 + s * 0.999 * theta for e, s in zip(edges, signs)})
            try:
                perturbed_configuration(n, angles)
            except ValueError:
                ok = False
                break
        if ok:
            return theta
        theta *= shrink
    raise ValueError("no admissible theta found")
