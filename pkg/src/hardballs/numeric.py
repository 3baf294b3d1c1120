"""Number tower used across the package.

Three kinds of scalars are supported:

* ``"exact"`` -- :class:`fractions.Fraction`, used for constructions and
  validation of piecewise-linear trajectories;
* ``"float"`` -- IEEE double;
* ``"mp"`` -- :mod:`mpmath` floats at a configurable bit precision, each
  :class:`Numeric` owning a private ``MPContext`` so precisions never leak.

Vectors are numpy arrays: ``float64`` for doubles, ``object`` otherwise.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Iterable

import mpmath
import numpy as np


@dataclass(frozen=True)
class Numeric:
    kind: str = "float"
    bits: int = 53
    _mp: Any = field(default=None, init=False, repr=False, compare=False)

    def __post_init__(self):
        if self.kind not in ("float", "exact", "mp"):
            raise ValueError(f"unknown numeric kind {self.kind!r}")
        if self.kind == "mp":
            ctx = mpmath.MPContext()
            ctx.prec = self.bits
            object.__setattr__(self, "_mp", ctx)

    # -- constructors -----------------------------------------------------
    @classmethod
    def for_bits(cls, bits: int | None) -> "Numeric":
        """Double for ``bits`` in (None, 53), mpmath above that."""
        if bits is None or bits == 53:
            return FLOAT
        if bits < 53:
            raise ValueError("precision below 53 bits is not supported")
        return cls("mp", bits)

    @property
    def is_exact(self) -> bool:
        return self.kind == "exact"

    @property
    def eps(self):
        if self.kind == "exact":
            return Fraction(0)
        return self.num(2) ** (1 - self.bits)

    @property
    def dtype(self):
        return np.float64 if self.kind == "float" else object

    def num(self, x):
        if self.kind == "float":
            return float(x)
        if self.kind == "exact":
            if isinstance(x, float):
                return Fraction(x)
            return Fraction(x)
        if isinstance(x, Fraction):
            return self._mp.mpf(x.numerator) / x.denominator
        return self._mp.mpf(x)

    def array(self, values: Iterable) -> np.ndarray:
        vals = np.asarray(values, dtype=object)
        out = np.empty(vals.shape, dtype=self.dtype)
        for idx, v in np.ndenumerate(vals):
            out[idx] = self.num(v)
        return out

    # -- elementary functions ---------------------------------------------
    def sqrt(self, x):
        if self.kind == "float":
            return math.sqrt(x)
        if self.kind == "exact":
            x = Fraction(x)
            p, q = math.isqrt(x.numerator), math.isqrt(x.denominator)
            if x >= 0 and p * p == x.numerator and q * q == x.denominator:
                return Fraction(p, q)
            raise ValueError(f"sqrt({x}) is irrational; use a floating mode")
        return self._mp.sqrt(x)

    def _transcendental(self, name, x):
        if self.kind == "float":
            return getattr(math, name)(x)
        if self.kind == "exact":
            raise ValueError(f"{name} is unavailable in exact mode")
        return getattr(self._mp, name)(x)

    def cos(self, x):
        return self._transcendental("cos", x)

    def sin(self, x):
        return self._transcendental("sin", x)

    def acos(self, x):
        return self._transcendental("acos", x)

    def atan2(self, y, x):
        if self.kind == "float":
            return math.atan2(y, x)
        if self.kind == "exact":
            raise ValueError("atan2 is unavailable in exact mode")
        return self._mp.atan2(y, x)

    @property
    def pi(self):
        if self.kind == "float":
            return math.pi
        if self.kind == "exact":
            raise ValueError("pi is irrational")
        return +self._mp.pi

    def norm(self, v) -> Any:
        return self.sqrt(np.dot(v, v))

    # -- text round-trip --------------------------------------------------
    def to_str(self, x) -> str:
        if self.kind == "float":
            return repr(float(x))
        if self.kind == "exact":
            return str(Fraction(x))
        digits = int(math.ceil(self.bits * math.log10(2))) + 3
        return self._mp.nstr(x, digits, strip_zeros=False)

    def parse(self, s):
        if isinstance(s, (int, float)) and self.kind != "exact":
            return self.num(s)
        if self.kind == "exact":
            return Fraction(s)
        if self.kind == "float":
            return float(Fraction(s)) if "/" in str(s) else float(s)
        if isinstance(s, str) and "/" in s:
            return self.num(Fraction(s))
        return self._mp.mpf(s)

    def solve(self, matrix, rhs) -> np.ndarray:
        """Solve ``matrix @ x = rhs`` (square, nonsingular)."""
        if self.kind == "float":
            return np.linalg.solve(np.asarray(matrix, dtype=float), np.asarray(rhs, dtype=float))
        a = [[self.num(x) for x in row] for row in matrix]
        b = [self.num(x) for x in rhs]
        n = len(a)
        for col in range(n):
            piv = max(range(col, n), key=lambda r: abs(a[r][col]))
            if a[piv][col] == 0:
                raise np.linalg.LinAlgError("singular matrix")
            a[col], a[piv] = a[piv], a[col]
            b[col], b[piv] = b[piv], b[col]
            for r in range(col + 1, n):
                factor = a[r][col] / a[col][col]
                if factor != 0:
                    for c in range(col, n):
                        a[r][c] -= factor * a[col][c]
                    b[r] -= factor * b[col]
        x = [None] * n
        for r in range(n - 1, -1, -1):
            acc = b[r]
            for c in range(r + 1, n):
                acc -= a[r][c] * x[c]
            x[r] = acc / a[r][r]
        return self.array(x)


FLOAT = Numeric("float")
EXACT = Numeric("exact")


def infer(value) -> Numeric:
    """Best-effort numeric kind of a scalar."""
    if isinstance(value, Fraction) or isinstance(value, int):
        return EXACT
    if isinstance(value, (float, np.floating)):
        return FLOAT
    if isinstance(value, mpmath.ctx_mp_python.mpf):
        return Numeric("mp", value.context.prec)
    raise TypeError(f"cannot infer numeric kind of {type(value).__name__}")
