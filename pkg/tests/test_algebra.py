"""Field arithmetic tests.

Expected conjugate values are computed by an independent quadratic-formula
oracle (math.sqrt) and frozen below; the field code never sees floats on its
decision paths, so agreement here is meaningful.
"""

import math
from fractions import Fraction as Q

import pytest
from hypothesis import given, settings, strategies as st

from tilekit.algebra import (
    FamilyCheck,
    embed,
    field_make,
    is_pisot,
    min_poly_of,
    modulus_vs_one,
    _isolate_all_roots,
    pisot_family_check,
    poly_from_ints,
)
from tilekit.errors import (
    MultipleRootsInInterval,
    NoRootInInterval,
    ReduciblePolynomial,
)

# oracle: roots of x^2 - x - 1 by the quadratic formula
PHI = (1 + math.sqrt(5)) / 2            # 1.618033988749895
PHI_CONJ = (1 - math.sqrt(5)) / 2       # -0.618033988749895
# oracle: roots of x^2 - 2x - 2
R_2X2 = 1 + math.sqrt(3)                # 2.732050807568877
R_2X2_CONJ = 1 - math.sqrt(3)           # -0.732050807568877
SQRT2 = math.sqrt(2)


def golden():
    return field_make([-1, -1, 1], (1, 2))


def sqrt2_field():
    return field_make([-2, 0, 1], (1, 2))


def test_field_make_rejects_reducible():
    with pytest.raises(ReduciblePolynomial):
        field_make([-2, -1, 1], (1, 3))  # x^2 - x - 2 = (x-2)(x+1)


def test_field_make_rejects_empty_bracket():
    with pytest.raises(NoRootInInterval):
        field_make([-1, -1, 1], (3, 4))


def test_field_make_rejects_wide_bracket():
    with pytest.raises(MultipleRootsInInterval):
        field_make([-2, 0, 1], (-2, 2))  # both of +-sqrt(2)


def test_distinguished_root_value():
    K = golden()
    iv = K.theta().interval(precision=40)
    assert iv.lo <= Q(PHI).limit_denominator(10**9) <= iv.hi or abs(float(iv.mid) - PHI) < 1e-10


def test_conjugate_enumeration_golden():
    K = golden()
    assert K.conjugate_count == 2
    boxes = [K.conjugate_box(i, Q(1, 2**30)) for i in range(2)]
    vals = sorted(float(b.re.mid) for b in boxes)
    assert abs(vals[0] - PHI_CONJ) < 1e-8
    assert abs(vals[1] - PHI) < 1e-8


def test_conjugate_enumeration_shifted_quadratic():
    K = field_make([-2, -2, 1], (2, 3))  # x^2 - 2x - 2, root 1 + sqrt(3)
    vals = sorted(float(K.conjugate_box(i, Q(1, 2**30)).re.mid)
                  for i in range(K.conjugate_count))
    assert abs(vals[0] - R_2X2_CONJ) < 1e-8
    assert abs(vals[1] - R_2X2) < 1e-8


def test_embed_distinguished_and_other_root():
    K = sqrt2_field()
    e = K.one + K.theta()            # 1 + sqrt(2)
    b = embed(e, precision=40)
    assert abs(float(b.re.mid) - (1 + SQRT2)) < 1e-10
    assert b.im.lo == 0 == b.im.hi
    other = 1 - K.root_index
    b2 = embed(e, root_index=other, precision=40)
    assert abs(float(b2.re.mid) - (1 - SQRT2)) < 1e-10


def test_embed_golden_conjugate():
    K = golden()
    other = 1 - K.root_index
    b = embed(K.theta(), root_index=other, precision=48)
    assert abs(float(b.re.mid) - PHI_CONJ) < 1e-12
    assert float(b.re.width) <= 2.0 ** -48


def test_product_reduces_mod_min_poly():
    K = sqrt2_field()
    t = K.theta()
    prod = (K.one + t) * (K.from_rational(2) - t)   # (1+r)(2-r) = r for r = sqrt(2)
    assert prod == t


def test_inverse_of_golden_ratio():
    K = golden()
    phi = K.theta()
    assert phi.inverse() == phi - K.one             # 1/phi = phi - 1
    assert phi * phi == phi + K.one                 # phi^2 = phi + 1


def test_sign_decisions_near_zero():
    K = golden()
    phi = K.theta()
    # phi^2 - phi - 1 is exactly zero
    assert (phi * phi - phi - K.one).sign() == 0
    # tiny but nonzero: phi - 1.618 = phi - 809/500
    d = phi - K.from_rational(Q(809, 500))
    assert d.sign() == 1 and d > 0
    d2 = phi - K.from_rational(Q(1619, 1000))
    assert d2.sign() == -1


def test_total_order_matches_float_oracle():
    K = field_make([-3, 0, 1], (1, 2))  # sqrt(3)
    vals = [K.element([a, b]) for a in range(-3, 4) for b in range(-2, 3)]
    floats = [a + b * math.sqrt(3) for a in range(-3, 4) for b in range(-2, 3)]
    order = sorted(range(len(vals)), key=lambda i: vals[i])
    order_f = sorted(range(len(vals)), key=lambda i: floats[i])
    assert order == order_f


def test_min_poly_of_element():
    K = golden()
    phi = K.theta()
    assert min_poly_of(phi) == poly_from_ints([-1, -1, 1])
    assert min_poly_of(K.from_rational(2)) == poly_from_ints([-2, 1])
    assert min_poly_of(phi + 1) == poly_from_ints([1, -3, 1])  # x^2-3x+1, roots phi+1 and conj+1


def test_is_pisot_golden_and_integers():
    K = golden()
    assert is_pisot(K.theta()) is True
    K2 = field_make([-2, 1], (2, 2))
    assert is_pisot(K2.theta()) is True   # rational integer 2


def test_is_pisot_rejects_sqrt2():
    K = sqrt2_field()
    assert is_pisot(K.theta()) is False   # conjugate -sqrt(2) has modulus >= 1


def test_is_pisot_tribonacci():
    K = field_make([-1, -1, -1, 1], (1, 2))  # x^3 - x^2 - x - 1
    assert is_pisot(K.theta()) is True


def test_modulus_decision_on_unit_circle():
    # x^2 + x + 1: primitive cube roots of unity, |z| = 1 exactly
    p = poly_from_ints([1, 1, 1])
    states = _isolate_all_roots(p)
    assert len(states) == 2
    assert modulus_vs_one(p, states, 0) == 0
    assert modulus_vs_one(p, states, 1) == 0


def test_modulus_decision_off_circle():
    p = poly_from_ints([2, 0, 1])  # x^2 + 2, |z| = sqrt(2)
    states = _isolate_all_roots(p)
    assert all(modulus_vs_one(p, states, i) == 1 for i in range(2))
    p2 = poly_from_ints([-1, -1, 1])
    states2 = _isolate_all_roots(p2)
    signs = sorted(modulus_vs_one(p2, states2, i) for i in range(2))
    assert signs == [-1, 1]


def test_pisot_family_accepts_golden_singleton():
    K = golden()
    chk = pisot_family_check([K.theta()])
    assert isinstance(chk, FamilyCheck) and chk.is_family
    assert chk.violations == []


def test_pisot_family_accepts_rational():
    K = field_make([-2, 1], (2, 2))
    assert pisot_family_check([K.theta(), K.theta()]).is_family


def test_pisot_family_reports_missing_conjugate():
    # {sqrt(2)} alone: the conjugate -sqrt(2) has modulus >= 1 and is omitted
    K = sqrt2_field()
    chk = pisot_family_check([K.theta()])
    assert not chk.is_family
    assert len(chk.violations) == 1
    v = chk.violations[0]
    assert abs(float(v.conj_box.re.mid) + SQRT2) < 1e-6


def test_pisot_family_satisfied_when_conjugate_listed():
    K = sqrt2_field()
    minus = -K.theta()
    # sqrt(2) together with -sqrt(2): closed under conjugation
    assert pisot_family_check([K.theta(), minus]).is_family


def test_decimal_rendering():
    K = golden()
    assert K.theta().decimal(10) == "1.6180339887"
    assert K.from_rational(Q(1, 3)).decimal(6) == "0.333333"
    assert (-K.theta()).decimal(4) == "-1.6180"


small_q = st.fractions(min_value=-4, max_value=4, max_denominator=8)


@settings(max_examples=60, deadline=None)
@given(a0=small_q, a1=small_q, b0=small_q, b1=small_q, c0=small_q, c1=small_q)
def test_ring_axioms_golden(a0, a1, b0, b1, c0, c1):
    K = golden()
    a, b, c = K.element([a0, a1]), K.element([b0, b1]), K.element([c0, c1])
    assert (a + b) * c == a * c + b * c
    assert (a * b) * c == a * (b * c)
    assert a + b == b + a
    if not b.is_zero():
        assert (a / b) * b == a


@settings(max_examples=60, deadline=None)
@given(a0=small_q, a1=small_q)
def test_sign_agrees_with_float_oracle(a0, a1):
    K = golden()
    e = K.element([a0, a1])
    f = float(a0) + float(a1) * PHI
    if abs(f) > 1e-9:
        assert e.sign() == (1 if f > 0 else -1)
