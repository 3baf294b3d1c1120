"""Event-driven dynamics of equal hard balls and the realization of cone
trajectories as ball trajectories near a contact configuration."""
from __future__ import annotations

import json
import math
import time as _time
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import combinations

import numpy as np

from . import atraj
from .ball_config import angles_from_lambda, chain_segments, find_theta, perturbed_configuration
from .cone_billiard import ConeTrajectory, lift_from_gram, simulate_cone
from .errors import (ContactError, OverlapError, PerturbationError, RealizationError,
                     SingularCollisionError)
from .events import EventLog, EventRecord
from .geometry import BallConfiguration, tangent_cone
from .numeric import FLOAT, Numeric

TIE_TOL = 1e-12
CONTACT_TOL = 1e-9


@dataclass(frozen=True)
class BallSystemState:
    """Centers and velocities as ``(n, d)`` arrays at time ``time``."""

    positions: np.ndarray
    velocities: np.ndarray
    time: object = 0.0
    numeric: Numeric = FLOAT

    def __post_init__(self):
        q = self.numeric.array(self.positions)
        v = self.numeric.array(self.velocities)
        if q.ndim != 2 or q.shape != v.shape:
            raise ValueError("positions and velocities must be (n, d) arrays of one shape")
        object.__setattr__(self, "positions", q)
        object.__setattr__(self, "velocities", v)
        object.__setattr__(self, "time", self.numeric.num(self.time))

    @property
    def n(self) -> int:
        return self.positions.shape[0]

    @property
    def d(self) -> int:
        return self.positions.shape[1]

    def config(self) -> BallConfiguration:
        return BallConfiguration(self.positions, self.numeric)

    def advanced(self, dt) -> "BallSystemState":
        return BallSystemState(self.positions + dt * self.velocities, self.velocities,
                               self.time + dt, self.numeric)

    def momentum(self) -> np.ndarray:
        return self.velocities.sum(axis=0)

    def energy(self):
        return (self.velocities * self.velocities).sum() / 2

    def check(self, tol=CONTACT_TOL) -> None:
        lo = (1 - tol) ** 2
        for i, j in combinations(range(self.n), 2):
            d = self.positions[i] - self.positions[j]
            if np.dot(d, d) < lo:
                raise OverlapError(f"balls {i + 1} and {j + 1} overlap")

    def to_json(self) -> str:
        fmt = (lambda x: float(x)) if self.numeric.kind == "float" else self.numeric.to_str
        return json.dumps({
            "d": self.d,
            "n": self.n,
            "numeric": {"kind": self.numeric.kind, "bits": self.numeric.bits},
            "positions": [[fmt(x) for x in row] for row in self.positions],
            "velocities": [[fmt(x) for x in row] for row in self.velocities],
            "time": fmt(self.time),
        })

    @classmethod
    def from_json(cls, text: str) -> "BallSystemState":
        data = json.loads(text)
        kind_info = data.get("numeric", {"kind": "float", "bits": 53})
        num = FLOAT if kind_info["kind"] == "float" else Numeric(kind_info["kind"], kind_info["bits"])
        state = cls([[num.parse(x) for x in r] for r in data["positions"]],
                    [[num.parse(x) for x in r] for r in data["velocities"]],
                    num.parse(data.get("time", 0)), num)
        if state.n != data["n"] or state.d != data["d"]:
            raise ValueError("header does not match the arrays")
        return state


def _pair_time(dq, dv, num: Numeric):
    """First ``t > 0`` with ``|dq + t dv| = 1`` for approaching balls, else None."""
    b = np.dot(dq, dv)
    if not b < 0:
        return None
    a = np.dot(dv, dv)
    c = np.dot(dq, dq) - 1
    disc = b * b - a * c
    if disc < 0:
        return None
    # c / (-b + sqrt(disc)) is the smaller root without cancellation
    return c / (-b + num.sqrt(disc))


def next_collision(state: BallSystemState, tie_tol=TIE_TOL):
    """``(dt, (i, j), simultaneous)`` for the earliest collision, or None.

    ``dt`` is measured from ``state.time``; pairs are 1-based.  The
    runner-up counts as simultaneous when it comes within
    ``tie_tol * dt2`` of the winner, ``dt2`` being its own delay.
    """
    num = state.numeric
    best = []
    for i, j in combinations(range(state.n), 2):
        t = _pair_time(state.positions[i] - state.positions[j],
                       state.velocities[i] - state.velocities[j], num)
        if t is not None:
            best.append((t, (i + 1, j + 1)))
    if not best:
        return None
    best.sort(key=lambda h: h[0])
    t, pair = best[0]
    simultaneous = len(best) > 1 and best[1][0] - t <= tie_tol * abs(best[1][0])
    return t, pair, simultaneous


def apply_elastic(state: BallSystemState, pair, tol=CONTACT_TOL) -> BallSystemState:
    """Exchange the normal velocity components of a touching pair (equal masses)."""
    i, j = pair[0] - 1, pair[1] - 1
    num = state.numeric
    d = state.positions[i] - state.positions[j]
    sq = np.dot(d, d)
    if abs(sq - 1) > 2 * tol + tol * tol:
        raise ContactError(f"balls {pair[0]} and {pair[1]} are not in contact")
    # with |d| = 1 up to rounding, divide by |d|^2 to keep the update rational
    w = np.dot(state.velocities[i] - state.velocities[j], d) / sq
    v = state.velocities.copy()
    v[i] = v[i] - w * d
    v[j] = v[j] + w * d
    return BallSystemState(state.positions, v, state.time, num)


def simulate(state: BallSystemState, horizon=None, max_events: int = 10**6,
             tie_tol=TIE_TOL) -> EventLog:
    """Collide balls until ``horizon`` (absolute time), ``max_events`` or free flight.

    Raises :class:`SingularCollisionError` carrying the state just before a
    simultaneous collision.
    """
    log = EventLog()
    state.check()
    while len(log) < max_events:
        hit = next_collision(state, tie_tol)
        if hit is None:
            break
        dt, pair, simultaneous = hit
        if horizon is not None and state.time + dt > horizon:
            break
        if simultaneous or (len(log) and not dt > 0):
            raise SingularCollisionError(
                f"simultaneous collisions near t={state.time + dt}", state=state)
        moved = state.advanced(dt)
        after = apply_elastic(moved, pair)
        log.append(EventRecord(moved.time, pair, tuple(moved.positions.reshape(-1)),
                               tuple(moved.velocities.reshape(-1)),
                               tuple(after.velocities.reshape(-1))))
        state = after
    return log


def final_state(state: BallSystemState, log: EventLog) -> BallSystemState:
    """State right after the last logged event (or ``state`` if none)."""
    if not len(log):
        return state
    r = log[-1]
    shape = state.positions.shape
    return BallSystemState(np.array(r.position, dtype=state.numeric.dtype).reshape(shape),
                           np.array(r.velocity_post, dtype=state.numeric.dtype).reshape(shape),
                           r.time, state.numeric)


def realize_from_cone(q: BallConfiguration, traj: ConeTrajectory, lam_scale, t0=None,
                      normalize_speed: bool = False) -> BallSystemState:
    """Ball state ``q + gamma(t0)/lam`` with velocity ``gamma'(t0)``.

    Ball time ``s`` corresponds to cone time ``lam * s``.  With
    ``normalize_speed`` the velocity is scaled to unit length instead.
    """
    num = q.numeric
    if not lam_scale > 0:
        raise ValueError("lam_scale must be positive")
    lam = num.num(lam_scale)
    t0 = traj.t_start if t0 is None else t0
    gamma = traj.position_at(t0)
    k = sum(1 for t in traj.times if t < t0)
    vel = traj.velocities[k]
    if gamma.shape[0] != q.n * q.d:
        raise ValueError("cone trajectory does not live in R^(dn) of this configuration")
    pos = q.centers + (num.array(gamma) / lam).reshape(q.n, q.d)
    vel = num.array(vel)
    if normalize_speed:
        vel = vel / num.norm(vel)
    state = BallSystemState(pos, vel.reshape(q.n, q.d), num.num(t0) / lam, num)
    for i, j in combinations(range(q.n), 2):
        d = pos[i] - pos[j]
        if not np.dot(d, d) > 1:
            raise RealizationError(f"balls {i + 1} and {j + 1} are not separated at the start")
    return state


# ---------------------------------------------------------------------------
# End-to-end pipeline
# ---------------------------------------------------------------------------

@dataclass
class VerifyParams:
    precision_bits: int | None = None   # None: 53 for n <= 5, 128 above
    lambda_ratio: Fraction | None = None  # None: half the largest stable ratio
    theta: float | None = None          # None: empirical search
    jitter: Fraction | None = None      # None: from the collision spacing
    seed: int = 0
    lam_start: int = 2**10
    lam_cap: int = 2**60
    max_events: int = 10**5
    retries: int = 3


@dataclass
class VerifyReport:
    n: int
    m: int
    predicted: int
    observed: int
    bound: int
    matched: bool
    lam_scale: int | None
    lambda_ratio: Fraction
    delta: Fraction
    theta: float
    precision_bits: int
    seed: int
    jitter: object
    prefix: int
    extra_events: int
    cone_events: int
    seconds: float
    message: str = ""
    artifacts: dict = field(default_factory=dict, repr=False)

    def summary(self) -> dict:
        return {
            "n": self.n, "m": self.m, "N_predicted": self.predicted, "N_observed": self.observed,
            "bound": self.bound, "match": self.matched,
            "lambda_scale": self.lam_scale, "lambda_ratio": str(self.lambda_ratio),
            "delta": str(self.delta), "theta": self.theta, "precision_bits": self.precision_bits,
            "seed": self.seed, "jitter": None if self.jitter is None else str(self.jitter),
            "matched_prefix": self.prefix, "extra_events": self.extra_events,
            "cone_events": self.cone_events, "seconds": round(self.seconds, 3),
            "message": self.message,
        }


def _auto_ratio(found: Fraction, theta: float) -> Fraction:
    r = found / 2
    while not 2 * r < math.sin(theta):
        r /= 2
    return r


def _matched_prefix(pairs: list, target: list) -> int:
    k = 0
    while k < min(len(pairs), len(target)) and pairs[k] == target[k]:
        k += 1
    return k


def verify_exponential(n: int, params: VerifyParams | None = None) -> VerifyReport:
    """Build the ``n``-ball example in R^3 and count its collisions by simulation.

    Steps: generalized trajectory for the upper-triangular matrix, jitter to
    a genuine one, perturb the matrix with ratios ``lam_{i+1}/lam_i = r``
    and rescale to a symmetric Gram matrix, realize that Gram matrix by a
    chain of balls, lift to its tangent cone and finally place the balls at
    ``q + gamma/Lambda`` for ``Lambda = 2^10, 2^11, ...`` until the
    simulated pair sequence equals the cone's wall sequence.
    """
    if n < 3:
        raise ValueError("n must be at least 3")
    p = params or VerifyParams()
    clock = _time.perf_counter()
    m = n - 1
    bits = p.precision_bits or (53 if n <= 5 else 128)
    num = Numeric.for_bits(bits)
    predicted = atraj.collision_count_formula(m)
    bound = 2 ** (n // 2)

    f, _ = atraj.build_inductive(m)
    A = atraj.build_Am(m)
    theta = p.theta if p.theta is not None else find_theta(n)
    seed = p.seed
    last_error = None
    for attempt in range(p.retries):
        try:
            g = atraj.perturb_to_genuine(f, A, jitter=p.jitter, seed=seed)
            if p.lambda_ratio is None:
                ratio = _auto_ratio(atraj.find_lambda_ratio(g), theta)
            else:
                ratio = Fraction(p.lambda_ratio)
                if not 2 * ratio < math.sin(theta):
                    raise ValueError(f"lambda ratio {ratio} too large for theta={theta:.4g}")
            lam = atraj.geometric_lambda(m, ratio)
            At = atraj.build_Atilde(m, lam)
            t0, x, v = atraj.initial_data(g)
            h = atraj.propagate(At, x, v, g.t_end, t_start=t0)
            report = atraj.validate(h, At, atraj.GENUINE)
            if not report.ok or h.collision_count() != predicted:
                raise PerturbationError(f"perturbed matrix loses collisions: {report.message}")
            B = atraj.rescale(At, lam)
            hb = h.scaled(lam)

            angles = angles_from_lambda([num.num(l) for l in lam], theta, num)
            q = perturbed_configuration(n, angles, theta)
            pairs = list(chain_segments(n).segments)
            cone = tangent_cone(q, pairs)
            gram_err = max(abs(float(cone.gram[i, j] - num.num(B[i, j])))
                           for i in range(m) for j in range(m))
            if gram_err > 1e-9:
                raise RealizationError(f"chain Gram differs from B by {gram_err:.3g}")
            lifted = lift_from_gram(cone, hb)
            check = simulate_cone(cone, lifted.position0, lifted.velocity0,
                                  t0=lifted.t_start, horizon=lifted.t_end, tie_tol=0)
            target = [pairs[w] for w in lifted.walls]
            if [pairs[w] for w in check.walls] != target:
                raise SingularCollisionError("cone simulation disagrees with the lifted trajectory")

            best = (0, None, None)
            lam_scale = p.lam_start
            while lam_scale <= p.lam_cap:
                try:
                    state = realize_from_cone(q, lifted, lam_scale)
                    horizon = num.num(lifted.t_end) / lam_scale
                    log = simulate(state, horizon=horizon, max_events=p.max_events)
                except (SingularCollisionError, RealizationError):
                    lam_scale *= 2
                    continue
                got = log.indices()
                k = _matched_prefix(got, target)
                if k > best[0]:
                    best = (k, lam_scale, log)
                if k == len(target):
                    break
                lam_scale *= 2
            k, scale, log = best
            matched = k == len(target) == predicted
            observed = k
            extra = (len(log) - k) if log is not None else 0
            msg = "" if matched else f"matched {k} of {len(target)} collisions up to Lambda=2^{int(math.log2(p.lam_cap))}"
            return VerifyReport(
                n, m, predicted, observed, bound, matched, scale, ratio, ratio * ratio, theta,
                bits, seed, p.jitter, k, extra, check.n_events, _time.perf_counter() - clock, msg,
                artifacts={"config": q, "cone": cone, "cone_trajectory": lifted, "gram_trajectory": hb,
                           "matrix": B, "log": log,
                           "state": realize_from_cone(q, lifted, scale) if scale else None},
            )
        except (SingularCollisionError, PerturbationError) as exc:
            last_error = exc
            seed += 1
    raise SingularCollisionError(f"gave up after {p.retries} jitter seeds: {last_error}")
