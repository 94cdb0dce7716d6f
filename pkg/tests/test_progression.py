"""Arithmetic progressions, lattice inclusion, digit sums, full-rank verdicts.

The AP oracle here recomputes maximal runs from raw label positions with a
plain set walk, independent of the anchored occurrence search.  Digit
decompositions are checked by exact resummation and by re-locating every
endpoint pair inside the witness supertile.
"""

import random
from fractions import Fraction

import pytest

from tilekit.errors import (
    EigenConditionFails,
    NotABasis,
    PatchNotFound,
)
from tilekit.geometry import PointK, point
from tilekit.progression import (
    APQuery,
    EigenData,
    LatticeK,
    digit_decompose,
    find_ap_of_length,
    fullrank_verdict,
    lattice_condition,
    max_ap_length,
)
from tilekit.rulepack import builtin
from tilekit.substitution import single_tile_patch, supertile


def brute_max_run(rule, label, x, level):
    """Longest run of label positions spaced by x, by raw set walking."""
    pos = set(supertile(rule, rule.alphabet[0], level).positions(label))
    best = 0
    for p in pos:
        if p - x in pos:
            continue
        n = 0
        q = p
        while q in pos:
            n += 1
            q = q + x
        best = max(best, n)
    return best


# --- maximal AP length -------------------------------------------------------

def test_chair_diagonal_doubles_each_level():
    ch = builtin("chair")
    p0 = single_tile_patch(ch, "C0")
    diag = point(ch.field, 1, 1)
    want_occ = [2, 6, 20, 72, 272]
    for k in range(1, 6):
        q = APQuery(p0, diag, k)
        r = max_ap_length(ch, q)
        assert r.length == 2 ** k
        assert r.anchor.approx() == (-1.0, -1.0)
        assert r.occurrences == want_occ[k - 1]
        assert r.verify(ch, q)
        assert r.length == brute_max_run(ch, "C0", diag, k)


def test_table_row_runs_double_each_level():
    tb = builtin("table")
    pv = single_tile_patch(tb, "V")
    x = point(tb.field, 1, 0)
    lengths = [max_ap_length(tb, APQuery(pv, x, k)).length for k in range(1, 7)]
    assert lengths == [1, 2, 4, 8, 16, 32]
    assert lengths == sorted(lengths)  # strictly grows: no finite ceiling


def test_fibonacci_run_length_caps_at_three():
    fib = builtin("fibonacci")
    pa = single_tile_patch(fib, "a")
    x = point(fib.field, (1, 1))  # 1 + phi
    for k in (4, 5, 6, 7, 8):
        r = max_ap_length(fib, APQuery(pa, x, k))
        assert r.length == 3
        assert r.length == brute_max_run(fib, "a", x, k)
    # occurrence counts follow the tile census
    assert [max_ap_length(fib, APQuery(pa, x, k)).occurrences
            for k in (4, 5, 6, 7, 8)] == [5, 8, 13, 21, 34]


def test_ap_query_validation():
    ch = builtin("chair")
    p0 = single_tile_patch(ch, "C0")
    with pytest.raises(ValueError):
        APQuery(p0, point(ch.field, 0, 0), 2)
    with pytest.raises(PatchNotFound):
        # needle larger than the region has no occurrence
        max_ap_length(ch, APQuery(supertile(ch, "C0", 3),
                                  point(ch.field, 1, 1), 1))


def test_find_ap_of_length_follows_hint():
    ch = builtin("chair")
    p0 = single_tile_patch(ch, "C0")
    got = find_ap_of_length(ch, p0, 8, direction_hint=point(ch.field, 1, 1))
    assert got.difference.approx() == (1.0, 1.0)
    assert got.anchor.approx() == (-1.0, -1.0)
    assert got.length == 8
    assert got.region_used == 3


def test_find_ap_of_length_one_dimensional():
    fib = builtin("fibonacci")
    pa = single_tile_patch(fib, "a")
    got = find_ap_of_length(fib, pa, 3)
    assert got.difference.coords[0].coeffs == (-1, -1)  # -(1 + phi)
    assert got.region_used == 4
    hinted = find_ap_of_length(fib, pa, 3, direction_hint=point(fib.field, 1))
    assert hinted.difference.coords[0].coeffs == (1, 1)


# --- lattice condition -------------------------------------------------------

def test_chair_lattice_condition_frozen():
    ch = builtin("chair")
    rep = lattice_condition(ch, [point(ch.field, 1, 0), point(ch.field, 0, 1)])
    assert rep.holds
    assert rep.power == 2
    assert sorted(g.approx() for g in rep.generators) == \
        [(0.0, 4.0), (4.0, 0.0)]
    assert (rep.first_k, rep.first_m) == (2, 1)
    assert rep.level_used == 4
    assert rep.combo_window == 2


def test_period_doubling_lattice_condition_immediate():
    pd = builtin("period_doubling")
    rep = lattice_condition(pd, [point(pd.field, 1)])
    assert rep.holds and rep.power == 0
    assert [g.approx() for g in rep.generators] == [(1.0,)]
    assert rep.level_used == 2


def test_fibonacci_lattice_condition_needs_two_powers():
    # Q^2(1) = 1 + phi is a return vector even though 1 itself is not
    fib = builtin("fibonacci")
    rep = lattice_condition(fib, [point(fib.field, 1)])
    assert rep.holds and rep.power == 2
    assert [g.coords[0].coeffs for g in rep.generators] == [(1, 1)]


def test_lattice_k_rejects_rank_deficiency():
    ch = builtin("chair")
    with pytest.raises(NotABasis):
        LatticeK((point(ch.field, 2, 0), point(ch.field, 4, 0)))
    with pytest.raises(NotABasis):
        LatticeK((point(ch.field, 2, 2),))


# --- digit decomposition -----------------------------------------------------

def chair_squared_eigen():
    ch = builtin("chair")
    return ch.power(2), [EigenData(point(ch.field, 4, 0), 4),
                         EigenData(point(ch.field, 0, 4), 4)]


def test_digit_decompose_frozen_example():
    ch2, eigen = chair_squared_eigen()
    dec = digit_decompose(ch2, eigen, [5, -13])
    assert [v.approx() for v in dec.vectors] == \
        [(20.0, 0.0), (0.0, -20.0), (0.0, -16.0), (0.0, -16.0)]
    assert dec.base_label == "C0"
    assert dec.depth == 2
    assert dec.total(ch2.field).approx() == (20.0, -52.0)
    assert dec.verify(ch2)


def test_digit_decompose_single_axis():
    ch2, eigen = chair_squared_eigen()
    # 11 in base 4 is 23: thresholds give 5 + 5 + 1 chain weights
    dec = digit_decompose(ch2, eigen, [11, 0])
    assert [v.approx() for v in dec.vectors] == \
        [(20.0, 0.0), (20.0, 0.0), (4.0, 0.0)]


def test_digit_decompose_zero_target_is_empty():
    ch2, eigen = chair_squared_eigen()
    dec = digit_decompose(ch2, eigen, [0, 0])
    assert len(dec) == 0


def test_digit_decompose_random_targets_resum_exactly():
    ch2, eigen = chair_squared_eigen()
    f = ch2.field
    rng = random.Random(77)
    for _ in range(20):
        k1, k2 = rng.randint(-20, 20), rng.randint(-20, 20)
        dec = digit_decompose(ch2, eigen, [k1, k2])
        want = (eigen[0].vector.scale(f.from_rational(k1)) +
                eigen[1].vector.scale(f.from_rational(k2)))
        assert dec.total(f) == want
        assert len(dec) <= 2 * 4  # e * max n_i
        assert dec.verify(ch2)


def test_digit_decompose_rejects_bad_eigen_data():
    ch2, _ = chair_squared_eigen()
    ch = builtin("chair")
    with pytest.raises(EigenConditionFails):
        digit_decompose(ch2, [EigenData(point(ch.field, 1, 1), 3)], [2])
    with pytest.raises(EigenConditionFails):
        digit_decompose(ch2, [EigenData(point(ch.field, 4, 0), 1)], [2])
    fib = builtin("fibonacci")
    with pytest.raises(EigenConditionFails):
        # Q scales by phi, never by an integer
        digit_decompose(fib, [EigenData(point(fib.field, (0, 1)), 2)], [3])


# --- full-rank verdicts ------------------------------------------------------

def test_fibonacci_fullrank_nonexistence():
    v = fullrank_verdict(builtin("fibonacci"))
    assert v.kind == "nonexistence_certificate"
    assert v.exists is False
    assert v.theorem == "irrational-expansion-excludes-full-rank"
    assert not v.expansion_scalar.is_rational()
    assert v.spectrum is None  # excluded before any spectral work


def test_period_doubling_fullrank_exists_with_complete_window():
    v = fullrank_verdict(builtin("period_doubling"))
    assert v.kind == "fullrank_theorem"
    assert v.exists is True
    assert v.theorem == "integer-expansion-pure-discrete-implies-full-rank"
    assert [g.approx() for g in v.lattice] == [(2.0,)]
    assert v.lattice_power == 1
    assert (v.tile_label, v.tile_position.approx()) == ("a", (12.0,))
    assert v.verified_translates == v.window_size == 12
    assert v.window_complete


def test_table_fullrank_nonexistence_via_spectrum():
    v = fullrank_verdict(builtin("table"))
    assert v.kind == "nonexistence_certificate"
    assert v.exists is False
    assert v.theorem == "full-rank-progression-implies-pure-discrete"
    assert v.spectrum is not None and not v.spectrum.pure_discrete
    assert v.expansion_scalar.as_fraction() == Fraction(2)


def test_chair_fullrank_exists_with_complete_window():
    v = fullrank_verdict(builtin("chair"))
    assert v.kind == "fullrank_theorem"
    assert v.exists is True
    assert sorted(g.approx() for g in v.lattice) == [(0.0, 8.0), (8.0, 0.0)]
    assert v.lattice_power == 3
    assert (v.tile_label, v.tile_position.approx()) == ("C0", (48.0, 52.0))
    assert v.verified_translates == v.window_size == 168
    assert v.window_complete
    assert v.spectrum.pure_discrete


def test_fullrank_undecided_for_non_scalar_expansion():
    from tilekit.geometry import LinearMapK, PolygonK
    from tilekit.substitution import SubstitutionRule, Tile, validate
    f = builtin("chair").field
    sq = PolygonK([point(f, 0, 0), point(f, 1, 0),
                   point(f, 1, 1), point(f, 0, 1)])
    expansion = LinearMapK(((f.from_rational(2), f.zero),
                            (f.zero, f.from_rational(3))))
    images = {"s": [Tile("s", point(f, i, j))
                    for i in range(2) for j in range(3)]}
    rule = SubstitutionRule(f, 2, {"s": sq}, expansion, images, name="grid23")
    assert validate(rule).ok
    v = fullrank_verdict(rule)
    assert v.kind == "undecided"
    assert v.exists is None
