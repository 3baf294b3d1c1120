from fractions import Fraction as F

import numpy as np
import pytest

from hardballs.numeric import EXACT, FLOAT, Numeric


def test_for_bits():
    assert Numeric.for_bits(None) is FLOAT
    assert Numeric.for_bits(128).kind == "mp"
    with pytest.raises(ValueError):
        Numeric.for_bits(20)


def test_exact_sqrt():
    assert EXACT.sqrt(F(9, 4)) == F(3, 2)
    with pytest.raises(ValueError):
        EXACT.sqrt(2)


def test_private_precision():
    lo, hi = Numeric("mp", 64), Numeric("mp", 256)
    assert abs(hi.sqrt(2) ** 2 - 2) < hi.num(2) ** -250
    assert abs(lo.sqrt(2) ** 2 - 2) > hi.num(2) ** -250


def test_text_round_trip():
    num = Numeric("mp", 128)
    x = num.sqrt(3)
    assert num.parse(num.to_str(x)) == x
    assert EXACT.parse(EXACT.to_str(F(-7, 3))) == F(-7, 3)
    assert FLOAT.parse(FLOAT.to_str(0.1)) == 0.1


@pytest.mark.parametrize("num", [FLOAT, EXACT, Numeric("mp", 100)])
def test_solve(num):
    A = [[2, 1, 0], [1, 3, 1], [0, 1, 4]]
    b = [1, 2, 3]
    x = num.solve(A, b)
    resid = np.array(A, dtype=object) @ x - np.array(b)
    assert max(abs(r) for r in resid) < 1e-12
    if num is EXACT:
        assert all(r == 0 for r in resid)
