"""Admissible matrices and piecewise-linear A-trajectories.

A trajectory here is a nonnegative piecewise-linear map ``f: [t_start, t_end]
-> R^m`` whose slopes jump only where some coordinate vanishes.  When
coordinate ``i`` vanishes, every slope changes as

    f_j'(t+) = f_j'(t-) - 2 * sum_{i vanishing} a_ij f_i'(t-)

for the admissible matrix ``A = (a_ij)`` (unit diagonal).  Several
coordinates may vanish together ("generalized" trajectories) only when the
matrix entries between them are zero in both directions.

Everything in this module is generic over the scalar type: construction and
validation run on :class:`fractions.Fraction`; floats and mpmath numbers are
accepted with a tolerance.
"""
from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import numpy as np

from .errors import InadmissibleEventError, PerturbationError

GENUINE = "genuine"
GENERALIZED = "generalized"


# ---------------------------------------------------------------------------
# Matrices and the edge set
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class EdgeSet:
    """Pairs ``(i, j)``, 1-based, with ``j = i+1`` or ``i`` odd and ``j = i+2``."""

    m: int
    pairs: frozenset

    def __post_init__(self):
        for i, j in self.pairs:
            if not (1 <= i < j <= self.m and (j == i + 1 or (i % 2 == 1 and j == i + 2))):
                raise ValueError(f"({i}, {j}) is not an edge for m={self.m}")

    def __contains__(self, pair) -> bool:
        return tuple(pair) in self.pairs

    def __iter__(self):
        return iter(sorted(self.pairs))

    def __len__(self) -> int:
        return len(self.pairs)


def edge_set(m: int) -> EdgeSet:
    if m < 1:
        raise ValueError("m must be positive")
    pairs = {(i, i + 1) for i in range(1, m)}
    pairs |= {(i, i + 2) for i in range(1, m - 1, 2)}
    return EdgeSet(m, frozenset(pairs))


@dataclass(frozen=True)
class AdmissibleMatrix:
    """Square matrix with unit diagonal; indexed 0-based as ``A[i, j]``."""

    entries: tuple

    def __post_init__(self):
        rows = tuple(tuple(r) for r in self.entries)
        object.__setattr__(self, "entries", rows)
        m = len(rows)
        if any(len(r) != m for r in rows):
            raise ValueError("admissible matrix must be square")
        for i in range(m):
            if rows[i][i] != 1:
                raise ValueError(f"diagonal entry {i + 1} is {rows[i][i]}, not 1")

    @property
    def m(self) -> int:
        return len(self.entries)

    def __getitem__(self, ij):
        i, j = ij
        return self.entries[i][j]

    def distance(self, other: "AdmissibleMatrix"):
        """Max-entry norm of the difference."""
        return max(abs(a - b) for ra, rb in zip(self.entries, other.entries) for a, b in zip(ra, rb))

    def is_symmetric(self) -> bool:
        m = self.m
        return all(self[i, j] == self[j, i] for i in range(m) for j in range(i))

    def to_array(self, dtype=object) -> np.ndarray:
        return np.array(self.entries, dtype=dtype)

    def to_json(self) -> list:
        return [[str(x) for x in row] for row in self.entries]


def build_Am(m: int) -> AdmissibleMatrix:
    """Upper-triangular matrix: 1 on the diagonal, -1 on the edge set."""
    edges = edge_set(m)
    rows = [[Fraction(0)] * m for _ in range(m)]
    for i in range(m):
        rows[i][i] = Fraction(1)
    for i, j in edges:
        rows[i - 1][j - 1] = Fraction(-1)
    return AdmissibleMatrix(rows)


def build_Atilde(m: int, lam: Sequence) -> AdmissibleMatrix:
    """``A_m`` plus ``-lam_i^2/lam_j^2`` at the transposed edge positions.

    The distance ``build_Atilde(m, lam).distance(build_Am(m))`` is the
    perturbation size that has to stay below the stability threshold.
    """
    if len(lam) != m or any(x <= 0 for x in lam):
        raise ValueError("lambda must be m positive numbers")
    one = lam[0] / lam[0]
    rows = [[one * 0] * m for _ in range(m)]
    for i in range(m):
        rows[i][i] = one
    for i, j in edge_set(m):
        rows[i - 1][j - 1] = -one
        rows[j - 1][i - 1] = -(lam[j - 1] ** 2) / lam[i - 1] ** 2
    return AdmissibleMatrix(rows)


def rescale(A: AdmissibleMatrix, lam: Sequence) -> AdmissibleMatrix:
    """Entrywise ``a_ij * lam_j / lam_i``; maps A-trajectories ``f`` to ``lam * f``."""
    m = A.m
    if len(lam) != m or any(x <= 0 for x in lam):
        raise ValueError("lambda must be m positive numbers")
    rows = [[A[i, j] if i == j else A[i, j] * lam[j] / lam[i] for j in range(m)] for i in range(m)]
    return AdmissibleMatrix(rows)


def geometric_lambda(m: int, ratio) -> list:
    """``(1, r, r^2, ..., r^(m-1))``."""
    one = ratio / ratio
    return [one * ratio**i for i in range(m)]


# ---------------------------------------------------------------------------
# Root schedules
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ArithmeticProgression:
    first: Fraction
    diff: Fraction
    length: int

    def __len__(self) -> int:
        return self.length

    @property
    def last(self):
        return self.first + (self.length - 1) * self.diff

    def elements(self) -> list:
        return [self.first + s * self.diff for s in range(self.length)]

    def nearest(self, t):
        s = round((t - self.first) / self.diff)
        s = min(max(s, 0), self.length - 1)
        return self.first + s * self.diff


@dataclass(frozen=True)
class RootSchedule:
    """Root set of each coordinate of the inductive construction."""

    progressions: tuple

    def __len__(self) -> int:
        return len(self.progressions)

    def __getitem__(self, i) -> ArithmeticProgression:
        return self.progressions[i]

    def total(self) -> int:
        return sum(len(p) for p in self.progressions)

    def to_json(self) -> dict:
        return {
            str(i + 1): {"first": str(p.first), "diff": str(p.diff), "len": p.length}
            for i, p in enumerate(self.progressions)
        }

    @classmethod
    def from_json(cls, data: dict) -> "RootSchedule":
        items = sorted(data.items(), key=lambda kv: int(kv[0]))
        return cls(tuple(
            ArithmeticProgression(Fraction(v["first"]), Fraction(v["diff"]), int(v["len"]))
            for _, v in items
        ))


# ---------------------------------------------------------------------------
# Piecewise-linear trajectories
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class PLTrajectory:
    """Piecewise-linear map on ``[t_start, t_end]``.

    ``slopes[k]`` is the slope vector on the segment after ``events[k-1]``
    (``slopes[0]`` before the first event), so there is one more slope
    vector than there are events.
    """

    t_start: object
    t_end: object
    start: tuple
    events: tuple
    slopes: tuple

    def __post_init__(self):
        object.__setattr__(self, "start", tuple(self.start))
        object.__setattr__(self, "events", tuple(self.events))
        object.__setattr__(self, "slopes", tuple(tuple(s) for s in self.slopes))

    @property
    def m(self) -> int:
        return len(self.start)

    def breakpoints(self) -> list:
        return [self.t_start, *self.events, self.t_end]

    def knot_values(self) -> list:
        """Values at ``t_start``, every event, and ``t_end``."""
        out = [self.start]
        cur = list(self.start)
        knots = self.breakpoints()
        for k in range(len(knots) - 1):
            dt = knots[k + 1] - knots[k]
            cur = [c + dt * s for c, s in zip(cur, self.slopes[k])]
            out.append(tuple(cur))
        return out

    def value(self, t) -> tuple:
        if t < self.t_start or t > self.t_end:
            raise ValueError("time outside the trajectory domain")
        knots = self.breakpoints()
        values = self.knot_values()
        k = 0
        while k + 1 < len(knots) - 1 and knots[k + 1] <= t:
            k += 1
        return tuple(v + (t - knots[k]) * s for v, s in zip(values[k], self.slopes[k]))

    def collisions(self, tol=0) -> list:
        """``(time, vanishing indices)`` for every event with a vanishing coordinate."""
        values = self.knot_values()[1:-1]
        out = []
        for t, vals in zip(self.events, values):
            zero = tuple(i for i, x in enumerate(vals) if abs(x) <= tol)
            if zero:
                out.append((t, zero))
        return out

    def collision_count(self, tol=0) -> int:
        return sum(len(z) for _, z in self.collisions(tol))

    def collision_sequence(self, tol=0) -> list:
        """Coordinate indices (0-based) in order of collision."""
        return [i for _, z in self.collisions(tol) for i in z]

    def roots(self, i: int, tol=0) -> list:
        return [t for t, z in self.collisions(tol) if i in z]

    def scaled(self, lam: Sequence) -> "PLTrajectory":
        """Coordinatewise ``lam_i * f_i``."""
        return PLTrajectory(
            self.t_start,
            self.t_end,
            [l * x for l, x in zip(lam, self.start)],
            self.events,
            [[l * s for l, s in zip(lam, row)] for row in self.slopes],
        )

    def converted(self, conv) -> "PLTrajectory":
        """Apply ``conv`` to every stored scalar (e.g. ``Numeric.num``)."""
        return PLTrajectory(
            conv(self.t_start),
            conv(self.t_end),
            [conv(x) for x in self.start],
            [conv(t) for t in self.events],
            [[conv(s) for s in row] for row in self.slopes],
        )

    # -- export -----------------------------------------------------------
    def to_json(self, fmt=str) -> dict:
        return {
            "m": self.m,
            "t_start": fmt(self.t_start),
            "t_end": fmt(self.t_end),
            "start": [fmt(x) for x in self.start],
            "events": [fmt(t) for t in self.events],
            "slopes": [[fmt(s) for s in row] for row in self.slopes],
        }

    @classmethod
    def from_json(cls, data: dict, parse=Fraction) -> "PLTrajectory":
        return cls(
            parse(data["t_start"]),
            parse(data["t_end"]),
            [parse(x) for x in data["start"]],
            [parse(t) for t in data["events"]],
            [[parse(s) for s in row] for row in data["slopes"]],
        )

    def to_csv(self, tol=0, fmt=str) -> str:
        """One row per (event, vanishing coordinate); indices are 1-based."""
        m = self.m
        buf = io.StringIO()
        writer = csv.writer(buf)
        writer.writerow(
            ["t_event", "coordinate_index"]
            + [f"pre_slope_{j + 1}" for j in range(m)]
            + [f"post_slope_{j + 1}" for j in range(m)]
        )
        index = {t: k for k, t in enumerate(self.events)}
        for t, zero in self.collisions(tol):
            k = index[t]
            for i in zero:
                writer.writerow(
                    [fmt(t), i + 1]
                    + [fmt(s) for s in self.slopes[k]]
                    + [fmt(s) for s in self.slopes[k + 1]]
                )
        return buf.getvalue()


# ---------------------------------------------------------------------------
# Validation
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ValidationReport:
    ok: bool
    mode: str
    collisions: int
    kind: str | None = None  # "structure" or "rule"
    event: int | None = None  # 0-based event index of the first violation
    message: str = ""

    def __bool__(self) -> bool:
        return self.ok


def validate(f: PLTrajectory, A: AdmissibleMatrix, mode: str = GENERALIZED, tol=0) -> ValidationReport:
    """Check that ``f`` is a (generalized) A-trajectory.

    With ``tol=0`` every comparison is exact, which is the intended use
    with rational data.
    """
    if mode not in (GENUINE, GENERALIZED):
        raise ValueError(f"unknown mode {mode!r}")

    def structure(msg, event=None):
        return ValidationReport(False, mode, 0, "structure", event, msg)

    m = f.m
    if A.m != m:
        return structure(f"matrix order {A.m} does not match {m} coordinates")
    if len(f.slopes) != len(f.events) + 1:
        return structure("need exactly one more slope vector than events")
    if any(len(row) != m for row in f.slopes):
        return structure("slope vector of wrong length")
    knots = f.breakpoints()
    for k in range(len(knots) - 1):
        if not knots[k] < knots[k + 1]:
            return structure("breakpoints are not strictly increasing", max(k - 1, 0))

    values = f.knot_values()
    count = 0

    def rule(msg, event):
        return ValidationReport(False, mode, count, "rule", event, msg)

    for end, vals in (("start", values[0]), ("end", values[-1])):
        if any(x <= tol for x in vals):
            return rule(f"a coordinate vanishes at the {end} of the domain", None)
    for k, vals in enumerate(values):
        if any(x < -tol for x in vals):
            return rule("negative coordinate", k - 1 if 0 < k <= len(f.events) else None)
    for k in range(len(values) - 1):
        for i in range(m):
            if abs(values[k][i]) <= tol and abs(values[k + 1][i]) <= tol:
                return rule(f"coordinate {i + 1} stays at zero", k)

    for k, t in enumerate(f.events):
        vals = values[k + 1]
        pre, post = f.slopes[k], f.slopes[k + 1]
        zero = [i for i in range(m) if abs(vals[i]) <= tol]
        if not zero:
            if any(abs(a - b) > tol for a, b in zip(pre, post)):
                return rule(f"slope changes at t={t} with no coordinate at zero", k)
            continue
        if mode == GENUINE and len(zero) > 1:
            return rule(f"simultaneous collisions of {[i + 1 for i in zero]} at t={t}", k)
        for a in zero:
            for b in zero:
                if a != b and (abs(A[a, b]) > tol or abs(A[b, a]) > tol):
                    return rule(f"coordinates {a + 1},{b + 1} vanish together but interact", k)
        for j in range(m):
            expected = pre[j] - 2 * sum(A[i, j] * pre[i] for i in zero)
            if abs(post[j] - expected) > tol:
                return rule(f"reflection rule fails for coordinate {j + 1} at t={t}", k)
        count += len(zero)
    return ValidationReport(True, mode, count)


# ---------------------------------------------------------------------------
# Inductive construction
# ---------------------------------------------------------------------------

def root_schedule(m: int) -> RootSchedule:
    """Root progressions ``T_1..T_m`` of the doubling construction."""
    if m < 1:
        raise ValueError("m must be positive")
    progs = [ArithmeticProgression(Fraction(0), Fraction(1), 1)]
    while len(progs) < m:
        x = progs[-1]
        beta, M = x.diff, x.length
        # new roots sit between (and around) the previous ones
        y = ArithmeticProgression(x.first - beta / 2, beta, M + 1)
        progs.append(y)
        if len(progs) == m:
            break
        progs.append(ArithmeticProgression(y.first - beta / 4, beta / 2, 2 * M + 2))
    return RootSchedule(tuple(progs))


def _dist_slope(p: ArithmeticProgression, t) -> int:
    return 1 if t > p.nearest(t) else -1


def build_inductive(m: int) -> tuple[PLTrajectory, RootSchedule]:
    """Generalized ``A_m``-trajectory ``f_i(t) = dist(t, T_i)`` in exact arithmetic.

    The domain is the hull of all roots widened by the smallest common
    difference on both sides, so no coordinate vanishes at an endpoint.
    """
    schedule = root_schedule(m)
    times = sorted({t for p in schedule.progressions for t in p.elements()})
    margin = min(p.diff for p in schedule.progressions)
    t_start, t_end = times[0] - margin, times[-1] + margin
    start = [abs(t_start - p.nearest(t_start)) for p in schedule.progressions]
    knots = [t_start, *times, t_end]
    slopes = []
    for a, b in zip(knots, knots[1:]):
        mid = (a + b) / 2
        slopes.append([Fraction(_dist_slope(p, mid)) for p in schedule.progressions])
    return PLTrajectory(t_start, t_end, start, times, slopes), schedule


def collision_count_formula(m: int) -> int:
    """Closed-form total number of roots of the inductive construction (m >= 2)."""
    if m < 2:
        raise ValueError("the closed form holds for m >= 2")
    n = closed_form_count(m)
    k = (m + 1) // 2
    assert n >= 2**k, (m, n)
    return n


def closed_form_count(m: int) -> int:
    """The same closed form without the range check (it gives 1 at m = 1)."""
    k = (m + 1) // 2
    if m % 2:
        return 2 ** (k + 2) + 2 ** (k - 1) - 3 * k - 5
    return 2 ** (k + 2) + 2 ** (k + 1) - 3 * k - 6


# ---------------------------------------------------------------------------
# Forward dynamics
# ---------------------------------------------------------------------------

def propagate(A: AdmissibleMatrix, x: Sequence, v: Sequence, horizon, t_start=None,
              tie_tol=None, max_events: int = 10**6) -> PLTrajectory:
    """Event-driven evolution of the matrix dynamics from ``(x, v)`` at ``t_start``.

    Roots closer than ``tie_tol`` are merged into one simultaneous event
    (exact equality for rationals; default 1e-12 otherwise).
    """
    m = A.m
    x = list(x)
    v = list(v)
    if len(x) != m or len(v) != m:
        raise ValueError("initial data has the wrong dimension")
    if any(xi <= 0 for xi in x):
        raise ValueError("initial position must be strictly positive")
    zero = x[0] * 0
    t = zero if t_start is None else t_start
    if tie_tol is None:
        tie_tol = 0 if isinstance(x[0], Fraction) else 1e-12
    t0, x0 = t, tuple(x)
    events, slopes = [], [tuple(v)]
    while len(events) < max_events:
        hits = [(t - x[i] / v[i], i) for i in range(m) if v[i] < 0]
        if not hits:
            break
        tmin = min(h[0] for h in hits)
        if tmin >= horizon:
            break
        S = sorted(i for th, i in hits if th - tmin <= tie_tol)
        for a in S:
            for b in S:
                if a != b and (A[a, b] != 0 or A[b, a] != 0):
                    raise InadmissibleEventError(
                        f"coordinates {a + 1} and {b + 1} vanish together at t={tmin}")
        dt = tmin - t
        x = [xi + dt * vi for xi, vi in zip(x, v)]
        for i in S:
            x[i] = zero
        v = [v[j] - 2 * sum(A[i, j] * v[i] for i in S) for j in range(m)]
        t = tmin
        events.append(t)
        slopes.append(tuple(v))
    return PLTrajectory(t0, horizon, x0, events, slopes)


def initial_data(f: PLTrajectory) -> tuple:
    """``(t_start, f(t_start), f'(t_start))``."""
    return f.t_start, f.start, f.slopes[0]


# ---------------------------------------------------------------------------
# De-generalization
# ---------------------------------------------------------------------------

def _sample_jitter(rng, jitter, exact: bool, like):
    if exact:
        scale = 2**20
        return Fraction(int(rng.integers(-scale, scale + 1)), scale) * Fraction(jitter)
    return like * 0 + float(rng.uniform(-1.0, 1.0)) * jitter


def min_collision_gap(f: PLTrajectory, tol=0):
    times = [t for t, _ in f.collisions(tol)]
    knots = [f.t_start, *times, f.t_end]
    return min(b - a for a, b in zip(knots, knots[1:]))


def perturb_to_genuine(f: PLTrajectory, A: AdmissibleMatrix, jitter=None, seed=0,
                       max_attempts: int = 20, tol=0) -> PLTrajectory:
    """Split simultaneous collisions by jittering the initial data.

    The collision moments ``t_1 < ... < t_M`` of ``f`` are separated by
    checkpoints ``tau_k``; on each window the jittered trajectory is written
    in closed form (every vanishing coordinate ``i`` has a single root at
    ``tau - x_i/v_i``), and the window is accepted only if it has the same
    vanishing set with pairwise distinct roots and every other coordinate
    stays positive.  ``jitter=None`` picks a size from the collision spacing
    and halves it after a failed attempt.
    """
    report = validate(f, A, GENERALIZED, tol)
    if not report.ok:
        raise ValueError(f"input is not a generalized trajectory: {report.message}")
    exact = isinstance(f.t_start, Fraction)
    if jitter == 0:
        if validate(f, A, GENUINE, tol).ok:
            return f
        raise PerturbationError("zero jitter cannot split simultaneous collisions")

    collisions = f.collisions(tol)
    times = [t for t, _ in collisions]
    taus = [f.t_start] + [(a + b) / 2 for a, b in zip(times, times[1:])] + [f.t_end]
    auto = jitter is None
    if auto:
        jitter = min_collision_gap(f, tol) / 16
    rng = np.random.default_rng(seed)
    m = f.m
    last_error = "no attempt made"
    for _ in range(max_attempts):
        x = [xi + _sample_jitter(rng, jitter, exact, xi) for xi in f.start]
        v = [vi + _sample_jitter(rng, jitter, exact, vi) for vi in f.slopes[0]]
        try:
            return _closed_form_windows(A, x, v, taus, collisions, f.t_end, m)
        except PerturbationError as exc:
            last_error = str(exc)
            if auto and "order" in last_error:
                jitter = jitter / 2
    raise PerturbationError(f"gave up after {max_attempts} attempts: {last_error}")


def _closed_form_windows(A, x, v, taus, collisions, t_end, m) -> PLTrajectory:
    if any(xi <= 0 for xi in x):
        raise PerturbationError("jitter destroys event ordering: nonpositive start")
    x0, t0 = tuple(x), taus[0]
    events, slopes = [], [tuple(v)]
    for k, (_, J) in enumerate(collisions):
        lo, hi = taus[k], taus[k + 1]
        roots = []
        for i in J:
            if not v[i] < 0:
                raise PerturbationError(f"jitter destroys event ordering: coordinate {i + 1} not approaching")
            r = lo - x[i] / v[i]
            if not lo < r < hi:
                raise PerturbationError(f"jitter destroys event ordering: root of {i + 1} left its window")
            roots.append((r, i))
        roots.sort()
        if len({r for r, _ in roots}) != len(roots):
            raise PerturbationError("roots still coincide")
        # a_ij = 0 inside J, so the vanishing coordinates do not see each other
        new_x, new_v = [], []
        for j in range(m):
            if j in J:
                new_x.append(abs(x[j] + (hi - lo) * v[j]))
                new_v.append(-v[j])
                continue
            xj = x[j] + (hi - lo) * v[j]
            vj = v[j]
            for r, i in roots:
                # v_i * (hi - r) == v_i * (hi - lo) + x_i: no division
                xj -= 2 * A[i, j] * (v[i] * (hi - lo) + x[i])
                vj -= 2 * A[i, j] * v[i]
            new_x.append(xj)
            new_v.append(vj)
        # the other coordinates must stay positive at every kink of the window
        cur_x, cur_v, cur_t = list(x), list(v), lo
        for r, i in roots:
            cur_x = [cx + (r - cur_t) * cv for cx, cv in zip(cur_x, cur_v)]
            cur_x[i] = cur_x[i] * 0
            cur_v = [cur_v[j] - 2 * A[i, j] * v[i] for j in range(m)]
            cur_t = r
            if any(cur_x[j] <= 0 for j in range(m) if j not in J):
                raise PerturbationError("jitter destroys event ordering: extra collision")
            events.append(r)
            slopes.append(tuple(cur_v))
        if any(xj <= 0 for xj in new_x):
            raise PerturbationError("jitter destroys event ordering: extra collision")
        x, v = new_x, new_v
    return PLTrajectory(t0, t_end, x0, events, slopes)


# ---------------------------------------------------------------------------
# Stability threshold search
# ---------------------------------------------------------------------------

def keeps_collisions(A: AdmissibleMatrix, f: PLTrajectory, tie_tol=None) -> bool:
    """Whether the ``A``-dynamics from ``f``'s initial data repeats its collision sequence."""
    t0, x, v = initial_data(f)
    try:
        g = propagate(A, x, v, f.t_end, t_start=t0, tie_tol=tie_tol,
                      max_events=len(f.events) + 1)
    except InadmissibleEventError:
        return False
    if len(g.events) > len(f.events):
        return False
    if not validate(g, A, GENUINE).ok:
        return False
    return g.collision_sequence() == f.collision_sequence()


def find_lambda_ratio(f: PLTrajectory, hi=Fraction(1, 2), iterations: int = 24,
                      checks: int = 4) -> Fraction:
    """Largest dyadic ratio ``r <= hi`` (by bisection) for which the perturbed
    matrix built from ``lam = (1, r, r^2, ...)`` keeps every collision of the
    genuine ``A_m``-trajectory ``f``.

    ``r**2`` is then an empirical perturbation threshold.  Bisection assumes
    monotonicity, so ``checks`` further halvings are confirmed as well.
    """
    m = f.m

    def ok(r):
        return keeps_collisions(build_Atilde(m, geometric_lambda(m, r)), f)

    if ok(hi):
        good = hi
    else:
        lo_r, hi_r = Fraction(0), Fraction(hi)
        for _ in range(iterations):
            mid = (lo_r + hi_r) / 2
            if ok(mid):
                lo_r = mid
            else:
                hi_r = mid
        good = lo_r
        if good == 0:
            raise PerturbationError("no positive ratio keeps the collisions")
    r = good
    for _ in range(checks):
        r /= 2
        if not ok(r):
            raise PerturbationError(f"stability is not monotone below r={good}")
    return good
