"""Configuration space of n balls of diameter 1 in R^d.

A point of the configuration space is stored as an ``(n, d)`` array of
centers, i.e. ``n`` blocks of length ``d`` of a vector in ``R^{dn}``.
Pair indices passed to and returned from the public functions are 1-based.
"""
from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field
from itertools import combinations
from typing import Sequence

import numpy as np

from .errors import ContactError, OverlapError
from .numeric import FLOAT, Numeric

CONTACT_TOL = 1e-9


@dataclass(frozen=True)
class BallConfiguration:
    centers: np.ndarray
    numeric: Numeric = FLOAT

    def __post_init__(self):
        arr = self.numeric.array(self.centers)
        if arr.ndim != 2 or arr.shape[0] < 1 or arr.shape[1] < 1:
            raise ValueError("centers must be a nonempty (n, d) array")
        object.__setattr__(self, "centers", arr)

    @property
    def n(self) -> int:
        return self.centers.shape[0]

    @property
    def d(self) -> int:
        return self.centers.shape[1]

    def flat(self) -> np.ndarray:
        return self.centers.reshape(-1)

    def sq_dist(self, i: int, j: int):
        """Squared distance between centers ``i`` and ``j`` (1-based)."""
        diff = self.centers[i - 1] - self.centers[j - 1]
        return np.dot(diff, diff)

    def dist(self, i: int, j: int):
        return self.numeric.sqrt(self.sq_dist(i, j))

    def displaced(self, delta) -> "BallConfiguration":
        return BallConfiguration(self.centers + np.asarray(delta).reshape(self.n, self.d), self.numeric)

    # -- serialization ----------------------------------------------------
    def to_json(self) -> str:
        fmt = (lambda x: float(x)) if self.numeric.kind == "float" else self.numeric.to_str
        return json.dumps({
            "d": self.d,
            "n": self.n,
            "numeric": {"kind": self.numeric.kind, "bits": self.numeric.bits},
            "centers": [[fmt(x) for x in row] for row in self.centers],
        })

    @classmethod
    def from_json(cls, text: str) -> "BallConfiguration":
        data = json.loads(text)
        kind_info = data.get("numeric", {"kind": "float", "bits": 53})
        num = Numeric(kind_info["kind"], kind_info["bits"]) if kind_info["kind"] != "float" else FLOAT
        centers = [[num.parse(x) for x in row] for row in data["centers"]]
        cfg = cls(centers, num)
        if cfg.n != data["n"] or cfg.d != data["d"]:
            raise ValueError("header does not match the centers")
        return cfg

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf)
        writer.writerow([f"x{k + 1}" for k in range(self.d)])
        for row in self.centers:
            writer.writerow([self.numeric.to_str(x) for x in row])
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str, numeric: Numeric = FLOAT) -> "BallConfiguration":
        rows = list(csv.reader(io.StringIO(text)))
        return cls([[numeric.parse(x) for x in row] for row in rows[1:] if row], numeric)


@dataclass(frozen=True)
class PolyhedralCone:
    """``{x : <x, nu_i> >= 0 for all i}`` with unit normals as rows of ``normals``."""

    normals: np.ndarray
    gram: np.ndarray
    numeric: Numeric = FLOAT
    labels: tuple = field(default=())

    @property
    def m(self) -> int:
        return self.normals.shape[0]

    @property
    def dim(self) -> int:
        return self.normals.shape[1]

    @classmethod
    def from_normals(cls, normals, numeric: Numeric = FLOAT, labels=()) -> "PolyhedralCone":
        nrm = numeric.array(normals)
        if nrm.ndim != 2:
            raise ValueError("normals must be a 2D array")
        return cls(nrm, nrm @ nrm.T, numeric, tuple(labels))

    def check(self, tol=1e-12) -> None:
        for k, nu in enumerate(self.normals):
            if abs(np.dot(nu, nu) - 1) > tol:
                raise ValueError(f"normal {k + 1} is not a unit vector")
        brute = self.normals @ self.normals.T
        if self.m and np.max(np.abs(np.asarray(brute - self.gram, dtype=float))) > tol:
            raise ValueError("stored Gram matrix does not match the normals")

    def to_json(self) -> str:
        fmt = self.numeric.to_str
        return json.dumps({
            "normals": [[fmt(x) for x in row] for row in self.normals],
            "gram": [[fmt(x) for x in row] for row in self.gram],
            "labels": [list(l) if isinstance(l, tuple) else l for l in self.labels],
        })


def contact_pairs(config: BallConfiguration, tol=CONTACT_TOL) -> list:
    """Pairs ``(i, j)``, ``i < j``, at unit distance within ``tol``.

    Raises :class:`OverlapError` if some pair is closer than ``1 - tol``.
    Comparisons are made on squared distances, so exact configurations are
    handled exactly with ``tol=0``.
    """
    out = []
    lo, hi = (1 - tol) ** 2, (1 + tol) ** 2
    for i, j in combinations(range(1, config.n + 1), 2):
        sq = config.sq_dist(i, j)
        if sq < lo:
            raise OverlapError(f"balls {i} and {j} overlap (squared distance {sq})")
        if sq <= hi:
            out.append((i, j))
    return out


def _raw_normal(config: BallConfiguration, i: int, j: int) -> np.ndarray:
    """``sqrt(2)`` times the wall normal; exact for rational centers."""
    v = np.zeros((config.n, config.d), dtype=config.numeric.dtype)
    v[:] = config.numeric.num(0)
    diff = config.centers[i - 1] - config.centers[j - 1]
    v[i - 1] = diff
    v[j - 1] = -diff
    return v.reshape(-1)


def _require_contact(config, i, j, tol):
    if i == j:
        raise ContactError("a ball does not touch itself")
    if abs(config.sq_dist(i, j) - 1) > 2 * tol + tol * tol:
        raise ContactError(f"balls {i} and {j} are not in contact")


def wall_normal(config: BallConfiguration, i: int, j: int, tol=CONTACT_TOL) -> np.ndarray:
    """Unit outer normal in ``R^{dn}`` of the cylinder ``|q_i - q_j| < 1`` at ``config``.

    Block ``i`` is ``(q_i - q_j)/sqrt(2)``, block ``j`` its negative; the
    order of ``i`` and ``j`` does not matter.
    """
    _require_contact(config, i, j, tol)
    return _raw_normal(config, i, j) / config.numeric.sqrt(2)


def _pair_product(config, p, r):
    """Half the inner product of the blocks of two contact pairs."""
    shared = set(p) & set(r)
    if not shared:
        return config.numeric.num(0)
    if len(shared) == 2:
        return config.sq_dist(*p)
    (s,) = shared
    a = p[0] if p[1] == s else p[1]
    b = r[0] if r[1] == s else r[1]
    qs = config.centers[s - 1]
    return np.dot(config.centers[a - 1] - qs, config.centers[b - 1] - qs) / 2


def gram_of_normals(config: BallConfiguration, pairs: Sequence | None = None,
                    tol=CONTACT_TOL, check_tol=1e-12) -> np.ndarray:
    """Gram matrix of the wall normals from the shared-ball formula.

    Disjoint pairs give 0; pairs sharing ball ``s`` give
    ``<q_a - q_s, q_b - q_s>/2``.  The result is cross-checked against
    brute-force products of the ``R^{dn}`` normals.
    """
    if pairs is None:
        pairs = contact_pairs(config, tol)
    pairs = [tuple(p) for p in pairs]
    for p in pairs:
        _require_contact(config, *p, tol)
    m = len(pairs)
    G = np.empty((m, m), dtype=config.numeric.dtype)
    for a in range(m):
        for b in range(m):
            G[a, b] = _pair_product(config, pairs[a], pairs[b])
    if m:
        raw = np.array([_raw_normal(config, *p) for p in pairs])
        brute = (raw @ raw.T) / 2
        err = max(abs(x) for x in (brute - G).reshape(-1))
        if err > check_tol:
            raise AssertionError(f"Gram cross-check failed: {err}")
    return G


def tangent_cone(config: BallConfiguration, pairs: Sequence | None = None,
                 tol=CONTACT_TOL) -> PolyhedralCone:
    """Tangent cone of the configuration space; one face per contact pair."""
    if pairs is None:
        pairs = contact_pairs(config, tol)
    pairs = [tuple(p) for p in pairs]
    dim = config.n * config.d
    if pairs:
        normals = np.array([wall_normal(config, *p, tol=tol) for p in pairs])
    else:
        normals = np.empty((0, dim), dtype=config.numeric.dtype)
    gram = gram_of_normals(config, pairs, tol)
    return PolyhedralCone(normals, gram, config.numeric, tuple(pairs))


def cone_membership(cone: PolyhedralCone, x, tol=0) -> bool:
    x = np.asarray(x).reshape(-1)
    if x.shape[0] != cone.dim:
        raise ValueError(f"vector of length {x.shape[0]} in a cone of dimension {cone.dim}")
    return all(np.dot(nu, x) >= -tol for nu in cone.normals)
