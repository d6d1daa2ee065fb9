import math
from fractions import Fraction as F

import pytest
from hypothesis import given, strategies as st

from hmmsprt.errors import FactorizationCapExceeded
from hmmsprt.logexpr import FACTOR_INPUT_CAP, NEG_INF, ZERO_EXPR, LogExpr, linear_combination, logexpr_equal

positive = st.fractions(min_value=F(1, 10**4), max_value=10**4, max_denominator=10**4).filter(lambda x: x > 0)


def test_structural_identities():
    assert LogExpr.log(4) == LogExpr.log(2).scale(2)
    assert LogExpr.log(6) == LogExpr.log(2) + LogExpr.log(3)
    assert LogExpr.log(1) == ZERO_EXPR and ZERO_EXPR.is_zero
    assert LogExpr.log(F(1, 2)) == -LogExpr.log(2)
    assert LogExpr.log(8).scale(F(1, 3)) == LogExpr.log(2)
    assert LogExpr.log(0) is NEG_INF
    assert NEG_INF + LogExpr.log(7) == NEG_INF
    assert NEG_INF.scale(0) == ZERO_EXPR
    assert logexpr_equal(LogExpr.log(F(9, 4)).scale(F(1, 2)), LogExpr.log(F(3, 2)))
    assert LogExpr.log(2) != LogExpr.log(3)


def test_linear_combination():
    e = linear_combination([F(1, 2), F(1, 2)], [LogExpr.log(F(2, 3)), LogExpr.log(F(4, 3))])
    assert e == LogExpr.log(F(8, 9)).scale(F(1, 2))
    assert str(e) == "(3/2) ln 2 + (-1) ln 3"


def test_sign_of_close_values():
    # 2^10 = 1024 vs 1025: the difference is tiny but nonzero
    d = LogExpr.log(1025) - LogExpr.log(2).scale(10)
    assert d.sign() == 1 and (-d).sign() == -1
    big = LogExpr.log(3**40 + 2) - LogExpr.log(3).scale(40)
    assert big.sign() == 1
    assert ZERO_EXPR.sign() == 0 and NEG_INF.sign() == -1
    assert LogExpr.log(F(1, 2)) < ZERO_EXPR < LogExpr.log(2)
    assert NEG_INF < LogExpr.log(F(1, 10**9))


def test_float_accuracy():
    assert float(LogExpr.log(F(8, 9)).scale(F(1, 2))) == pytest.approx(0.5 * math.log(8 / 9), rel=1e-15)
    assert float(NEG_INF) == -math.inf and float(ZERO_EXPR) == 0.0
    d = LogExpr.log(1025) - LogExpr.log(2).scale(10)
    assert float(d) == pytest.approx(math.log1p(1 / 1024), rel=1e-14)


def test_factorisation_cap():
    LogExpr.log(FACTOR_INPUT_CAP)
    with pytest.raises(FactorizationCapExceeded):
        LogExpr.log(FACTOR_INPUT_CAP + 1)
    with pytest.raises(FactorizationCapExceeded):
        LogExpr.log(F(1, 2**65))


def test_negative_inputs_rejected():
    with pytest.raises(ValueError):
        LogExpr.log(-1)
    with pytest.raises(ValueError):
        LogExpr.log(2).scale(-1)


@given(positive, positive)
def test_log_of_product(x, y):
    assert LogExpr.log(x * y) == LogExpr.log(x) + LogExpr.log(y)
    assert float(LogExpr.log(x)) == pytest.approx(math.log(x), rel=1e-12, abs=1e-15)


@given(positive, st.fractions(min_value=0, max_value=20, max_denominator=12))
def test_scale_matches_float(x, k):
    assert float(LogExpr.log(x).scale(k)) == pytest.approx(float(k) * math.log(x), rel=1e-12, abs=1e-12)


@given(positive, positive)
def test_order_matches_floats(x, y):
    if x != y:
        assert (LogExpr.log(x) < LogExpr.log(y)) == (x < y)
