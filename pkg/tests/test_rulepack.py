"""Built-in rules: exact validation, frozen matrices, documented metadata."""

from fractions import Fraction

import pytest

from tilekit.errors import UnknownRule
from tilekit.rulepack import EXPECTED, NAMES, builtin, point_from_data
from tilekit.substitution import return_vectors, validate

# frozen from the rule definitions: columns follow alphabet order
MATRICES = {
    "fibonacci": [[1, 1], [1, 0]],
    "period_doubling": [[1, 2], [1, 0]],
    "chair": [[2, 1, 0, 1], [1, 2, 1, 0], [0, 1, 2, 1], [1, 0, 1, 2]],
    "table": [[2, 2], [2, 2]],
}

PRIMITIVITY_EXPONENT = {
    "fibonacci": 2,
    "period_doubling": 2,
    "chair": 2,
    "table": 1,
    "sphinx": 4,
}


@pytest.mark.parametrize("name", NAMES)
def test_builtin_validates(name):
    rep = validate(builtin(name))
    assert rep.ok, rep.summary()
    assert rep.primitive
    assert rep.primitivity_exponent == PRIMITIVITY_EXPONENT[name]


@pytest.mark.parametrize("name", sorted(MATRICES))
def test_substitution_matrix_frozen(name):
    assert builtin(name).substitution_matrix() == MATRICES[name]


def test_sphinx_matrix_column_sums():
    mat = builtin("sphinx").substitution_matrix()
    m = len(mat)
    assert m == 12
    assert all(sum(mat[i][j] for i in range(m)) == 4 for j in range(m))


def test_prototile_areas_exact():
    ch = builtin("chair")
    three = ch.field.from_rational(3)
    for label in ch.alphabet:
        assert ch.prototile(label).area() == three

    tb = builtin("table")
    for label in tb.alphabet:
        assert tb.prototile(label).area() == tb.field.from_rational(2)

    fib = builtin("fibonacci")
    assert fib.prototile("a").area() == fib.field.theta()
    assert fib.prototile("b").area() == fib.field.one

    sp = builtin("sphinx")
    want = sp.field.element([0, Fraction(3, 2)])  # (3/2) * sqrt(3)
    for label in sp.alphabet:
        assert sp.prototile(label).area() == want


def test_sphinx_base_children_frozen():
    sp = builtin("sphinx")
    kids = sorted((t.label, t.position.approx()) for t in sp.images["R0"])
    # lattice offsets (0,2), (3,0), (6,0), (5,1) in cartesian form
    assert [k[0] for k in kids] == ["L0", "L3", "L3", "R2"]
    flat = {lbl: pos for lbl, pos in kids if lbl != "L3"}
    assert flat["L0"] == pytest.approx((1.0, 3 ** 0.5))
    assert flat["R2"] == pytest.approx((5.5, 3 ** 0.5 / 2))


def test_unknown_rule():
    with pytest.raises(UnknownRule):
        builtin("penrose")


def test_builtin_instances_shared():
    assert builtin("chair") is builtin("chair")


@pytest.mark.parametrize("name", NAMES)
def test_documented_basis_vectors_are_return_vectors(name):
    rule = builtin(name)
    meta = EXPECTED[name]
    xi = return_vectors(rule, meta["basis_level"])
    for data in meta["spectrum_basis"]:
        assert point_from_data(rule.field, data) in xi


def test_point_from_data_decodes_field_coeffs():
    fib = builtin("fibonacci")
    phi = point_from_data(fib.field, ((0, 1),))
    assert phi.coords[0] == fib.field.theta()
    half = point_from_data(fib.field, ((Fraction(1, 2), 1),))
    assert half.coords[0] == fib.field.theta() + Fraction(1, 2)
