"""Billiards in polyhedral cones.

Includes the face-distance ("Gram") coordinates that turn a cone billiard
into matrix dynamics, their inverse, the near-orthogonal doubling
construction, and its realization as a ball configuration in R^(n-1).
"""
from __future__ import annotations

import math
from fractions import Fraction
from dataclasses import dataclass, field

import numpy as np

from .atraj import PLTrajectory
from .errors import SingularCollisionError
from .events import EventLog, EventRecord
from .geometry import BallConfiguration, PolyhedralCone, tangent_cone

ESCAPE = "escape"
MAX_EVENTS = "max_events"
HORIZON = "horizon"


@dataclass
class ConeTrajectory:
    """Straight segments joined by specular reflections.

    ``velocities[k]`` is the velocity after the ``k``-th event
    (``velocities[0]`` is the initial one); ``walls`` are 0-based.
    """

    t_start: object
    position0: np.ndarray
    velocities: list
    times: list = field(default_factory=list)
    walls: list = field(default_factory=list)
    t_end: object = None
    status: str = ESCAPE

    @property
    def n_events(self) -> int:
        return len(self.times)

    @property
    def velocity0(self) -> np.ndarray:
        return self.velocities[0]

    def positions(self) -> list:
        """Positions at each event."""
        out = []
        x, t = self.position0, self.t_start
        for k, tk in enumerate(self.times):
            x = x + (tk - t) * self.velocities[k]
            t = tk
            out.append(x)
        return out

    def position_at(self, t) -> np.ndarray:
        x, prev = self.position0, self.t_start
        for k, tk in enumerate(self.times):
            if t <= tk:
                break
            x = x + (tk - prev) * self.velocities[k]
            prev = tk
        else:
            k = len(self.times)
        return x + (t - prev) * self.velocities[k]

    def event_log(self) -> EventLog:
        log = EventLog()
        for k, (t, x) in enumerate(zip(self.times, self.positions())):
            log.append(EventRecord(t, self.walls[k] + 1, tuple(x),
                                   tuple(self.velocities[k]), tuple(self.velocities[k + 1])))
        return log


def _check_interior(cone: PolyhedralCone, x):
    for k, nu in enumerate(cone.normals):
        if not np.dot(nu, x) > 0:
            raise ValueError(f"start point is not strictly inside the cone (wall {k + 1})")


def simulate_cone(cone: PolyhedralCone, x0, v0, max_events: int = 10**6, t0=0,
                  horizon=None, tie_tol=1e-12) -> ConeTrajectory:
    """Event-driven billiard in ``cone`` from ``x0`` with velocity ``v0``.

    Stops on escape (no wall ahead), at ``max_events`` or at ``horizon``.
    Two walls reached within ``tie_tol * max(1, dt)`` of each other raise
    :class:`SingularCollisionError`.
    """
    num = cone.numeric
    x = num.array(x0).reshape(-1)
    v = num.array(v0).reshape(-1)
    if x.shape[0] != cone.dim or v.shape[0] != cone.dim:
        raise ValueError("initial data does not match the cone dimension")
    _check_interior(cone, x)
    t = num.num(t0)
    traj = ConeTrajectory(t, x, [v])
    last = None
    while traj.n_events < max_events:
        hits = []
        for i, nu in enumerate(cone.normals):
            if i == last:
                continue
            w = np.dot(nu, v)
            if w < 0:
                hits.append((np.dot(nu, x) / -w, i))
        if not hits:
            traj.status = ESCAPE
            break
        hits.sort(key=lambda h: h[0])
        dt, wall = hits[0]
        if dt < 0:
            dt = dt * 0
        if horizon is not None and t + dt >= horizon:
            traj.status = HORIZON
            break
        if len(hits) > 1 and hits[1][0] - dt <= tie_tol * max(1, abs(dt)):
            raise SingularCollisionError(
                f"walls {wall + 1} and {hits[1][1] + 1} hit together at t={t + dt}",
                state=(t + dt, x + dt * v, v))
        x = x + dt * v
        t = t + dt
        nu = cone.normals[wall]
        v = v - 2 * np.dot(v, nu) * nu
        traj.times.append(t)
        traj.walls.append(wall)
        traj.velocities.append(v)
        last = wall
    else:
        traj.status = MAX_EVENTS
    if horizon is not None and traj.status == HORIZON:
        traj.t_end = num.num(horizon)
    elif traj.times:
        gaps = [b - a for a, b in zip([traj.t_start, *traj.times], traj.times)]
        traj.t_end = traj.times[-1] + max(max(gaps), 1)
    else:
        traj.t_end = t + 1
    return traj


def _require_independent(cone: PolyhedralCone, tol=1e-12):
    if cone.m == 0:
        return
    eig = np.linalg.eigvalsh(np.asarray(cone.gram, dtype=float))
    if eig.min() <= tol:
        raise np.linalg.LinAlgError("cone normals are linearly dependent")


def gram_coordinates(cone: PolyhedralCone, traj: ConeTrajectory) -> PLTrajectory:
    """Face distances ``f_i(t) = <gamma(t), nu_i>`` as a piecewise-linear map."""
    _require_independent(cone)
    N = cone.normals
    return PLTrajectory(
        traj.t_start,
        traj.t_end,
        list(N @ traj.position0),
        list(traj.times),
        [list(N @ v) for v in traj.velocities],
    )


def lift_from_gram(cone: PolyhedralCone, f: PLTrajectory, tol=1e-10, zero_tol=None) -> ConeTrajectory:
    """Ambient trajectory in the span of the normals with face distances ``f``.

    Each event of ``f`` must be a single-coordinate collision (a genuine
    trajectory).  Rational input is checked for exact zeros (or values within
    ``zero_tol``); floating input picks the approaching coordinate with the
    smallest time-to-zero and requires it alone to be within ``sqrt(eps)``
    of the domain length.
    """
    _require_independent(cone)
    num = cone.numeric
    if f.m != cone.m:
        raise ValueError("trajectory and cone have different numbers of faces")
    vals = f.knot_values()[1:-1]
    walls = []
    if zero_tol is None and not isinstance(f.t_start, Fraction):
        # distance in time to the wall, |f_i / f_i'|, is free of the size of f
        span = float(f.t_end - f.t_start)
        limit = math.sqrt(float(num.eps)) * span
        for k, (t, row) in enumerate(zip(f.events, vals)):
            lag = sorted((abs(float(x) / float(s)), i)
                         for i, (x, s) in enumerate(zip(row, f.slopes[k])) if s < 0)
            if not lag or lag[0][0] > limit or (len(lag) > 1 and lag[1][0] <= limit):
                raise ValueError(f"event at t={t} is not a single-wall collision")
            walls.append(lag[0][1])
    else:
        zero_tol = zero_tol or 0
        for t, row in zip(f.events, vals):
            zero = [i for i, x in enumerate(row) if abs(x) <= zero_tol]
            if len(zero) != 1:
                raise ValueError(f"event at t={t} has {len(zero)} vanishing coordinates")
            walls.append(zero[0])
    f = f.converted(num.num)
    N = cone.normals
    G = cone.gram

    def lift(xi):
        c = num.solve(G, xi)
        y = N.T @ c
        resid = max(abs(r) for r in (N @ y - num.array(xi)))
        scale = max(1, max(abs(x) for x in xi))
        if resid > tol * scale:
            raise ValueError(f"lift residual {float(resid):.3g} above tolerance")
        return y

    return ConeTrajectory(f.t_start, lift(f.start), [lift(s) for s in f.slopes],
                          list(f.events), walls, f.t_end, ESCAPE)


# ---------------------------------------------------------------------------
# Doubling construction
# ---------------------------------------------------------------------------

@dataclass
class ConeExample:
    cone: PolyhedralCone
    x0: np.ndarray
    v0: np.ndarray
    t0: float
    trajectory: ConeTrajectory

    @property
    def expected(self) -> int:
        return 2**self.cone.m - 1


def build_right_angle_example(m: int, eps: float) -> ConeExample:
    """Cone in R^m with face angles within ``eps`` of pi/2 and a trajectory
    with ``2^m - 1`` collisions.

    Each step appends a coordinate moving as ``C1 - C0 t``, adds the wall
    orthogonal to the final velocity (``C0`` the least power of two putting
    that wall within ``eps/2`` of the new axis, ``C1`` the least power of
    two keeping the extended path inside one time unit past the last
    collision), and folds the path at the orthogonal hit.
    """
    if m < 1:
        raise ValueError("m must be positive")
    if not 0 < eps < math.pi / 4:
        raise ValueError("eps must lie in (0, pi/4)")
    normals = np.array([[1.0]])
    t0 = -1.0
    x0 = np.array([1.0])
    times = [0.0]
    walls = [0]
    vel = [np.array([-1.0]), np.array([1.0])]
    for level in range(1, m):
        vN = vel[-1]
        speed = float(np.linalg.norm(vN))
        c0 = 1.0
        while math.atan2(speed, c0) >= eps / 2:
            c0 *= 2
        L = math.hypot(speed, c0)
        w = np.append(-vN, c0) / L
        old = ConeTrajectory(t0, x0, vel, times, walls)
        tN = times[-1]
        end_pos = old.position_at(tN + 1)
        c1 = 1.0
        while not (np.dot(end_pos, w[:-1]) + (c1 - c0 * (tN + 1)) * w[-1]) > 0:
            c1 *= 2
        p_tN = np.append(old.position_at(tN), c1 - c0 * tN)
        t_hit = tN + np.dot(p_tN, w) / L
        bar = [np.append(u, -c0) for u in vel]
        normals = np.vstack([np.hstack([normals, np.zeros((level, 1))]), w])
        x0 = np.append(x0, c1 - c0 * t0)
        times = times + [t_hit] + [2 * t_hit - t for t in reversed(times)]
        walls = walls + [level] + list(reversed(walls))
        vel = bar + [-u for u in reversed(bar)]
    cone = PolyhedralCone.from_normals(normals)
    traj = ConeTrajectory(t0, x0, vel, times, walls, times[-1] + 1.0)
    return ConeExample(cone, x0, vel[0], t0, traj)


@dataclass
class NdimBallExample:
    config: BallConfiguration
    cone: PolyhedralCone
    x0: np.ndarray
    v0: np.ndarray
    source: ConeExample


def ndim_ball_example(n: int, eps: float) -> NdimBallExample:
    """``n`` balls in R^(n-1): ball ``n`` at the origin touches the others.

    Centers ``q_1..q_{n-1}`` are the rows of the symmetric square root of
    ``2 * Gram(u)`` with unit diagonal, so the tangent cone is isometric to
    the doubling cone (times a linear factor).  The doubling trajectory is
    carried over through face-distance coordinates.
    """
    if n < 2:
        raise ValueError("need at least two balls")
    ex = build_right_angle_example(n - 1, eps)
    G = 2 * np.asarray(ex.cone.gram, dtype=float)
    np.fill_diagonal(G, 1.0)
    w, V = np.linalg.eigh(G)
    if w.min() <= 0:
        raise np.linalg.LinAlgError("eps too large: target Gram matrix is not positive definite")
    F = V @ np.diag(np.sqrt(w)) @ V.T
    centers = np.vstack([F, np.zeros((1, n - 1))])
    config = BallConfiguration(centers)
    for i in range(n - 1):
        for j in range(i + 1, n - 1):
            if not np.linalg.norm(F[i] - F[j]) > 1:
                raise ValueError(f"balls {i + 1} and {j + 1} touch or overlap; eps too large")
    cone = tangent_cone(config, [(i, n) for i in range(1, n)])
    f = gram_coordinates(ex.cone, ex.trajectory)
    lifted = lift_from_gram(cone, f)
    return NdimBallExample(config, cone, lifted.position0, lifted.velocity0, ex)
