"""Overlap classes, the subdivision graph, and the density machinery.

The main oracle is a naive quadratic scan: every ordered tile pair of a
supertile region is classified with the exact geometric predicate, no
spatial index, no prefilter.  Frozen values (class counts, graph sizes,
density fractions) were computed once from that oracle and pinned.
"""

from fractions import Fraction

import pytest

from tilekit.errors import (
    EmptyRegion,
    NotABasis,
    PreconditionNotEstablished,
)
from tilekit.geometry import interior_overlap, point
from tilekit.overlap import (
    build_graph,
    coincidence_reachability,
    contraction_factor,
    density_series,
    export_graph_text,
    limit_periodic_report,
    observed_return_level,
    overlap_class,
    overlaps_from_shift,
    pure_discrete_verdict,
    subdivision_children,
    volume_frequencies,
)
from tilekit.rulepack import builtin
from tilekit.substitution import supertile


def naive_overlap_scan(rule, x, level, seed=None):
    """All-pairs reference scan: no grid, no box prefilter."""
    seed = seed if seed is not None else rule.alphabet[0]
    patch = supertile(rule, seed, level)
    tiles = list(patch)
    reps, counts = {}, {}
    for t in tiles:
        for s in tiles:
            shift = t.position + x - s.position
            kind, area = interior_overlap(rule.prototile(t.label),
                                          rule.prototile(s.label), shift)
            if kind != "overlap":
                continue
            cls = overlap_class(rule, t.label, s.label, shift)
            counts[cls.key] = counts.get(cls.key, 0) + 1
            reps[cls.key] = cls
    return reps, counts


@pytest.mark.parametrize("name,coords,level", [
    ("fibonacci", ((0, 1),), 5),
    ("period_doubling", (1,), 5),
    ("chair", (2, 0), 3),
    ("table", (1, 0), 3),
    ("sphinx", (6, 0), 2),
])
def test_indexed_scan_matches_naive_quadratic(name, coords, level):
    rule = builtin(name)
    x = point(rule.field, *coords)
    rs = overlaps_from_shift(rule, x, region_level=level)
    reps, counts = naive_overlap_scan(rule, x, level)
    assert set(rs.keys()) == set(reps)
    assert rs.counts == counts


def test_zero_shift_yields_exactly_the_coincidences():
    for name, want in [("chair", 4), ("fibonacci", 2), ("table", 2)]:
        rule = builtin(name)
        z = point(rule.field, *([0] * rule.dimension))
        rs = overlaps_from_shift(rule, z)
        assert len(rs.classes) == want
        assert all(c.is_coincidence for c in rs.classes)
        assert sorted(c.label_t for c in rs.classes) == sorted(rule.alphabet)


def test_empty_region_raises():
    ch = builtin("chair")
    with pytest.raises(EmptyRegion):
        overlaps_from_shift(ch, point(ch.field, 1000, 1000), region_level=2)


@pytest.mark.parametrize("name,coords", [
    ("chair", (2, 0)), ("table", (1, 0)), ("fibonacci", ((0, 1),)),
])
def test_child_areas_sum_to_det_times_parent(name, coords):
    # one subdivision maps the overlap region onto D copies of itself
    rule = builtin(name)
    g = build_graph(rule, overlaps_from_shift(rule, point(rule.field, *coords)).classes)
    D = rule.det_abs()
    for key in g.order:
        parent = g.classes[key]
        total = rule.field.zero
        for child_key, mult in g.edges[key]:
            total = total + g.classes[child_key].support_area * \
                rule.field.from_rational(mult)
        assert total == D * parent.support_area


def test_children_of_coincidence_are_coincidences():
    ch = builtin("chair")
    z = point(ch.field, 0, 0)
    for c in overlaps_from_shift(ch, z).classes:
        kids = subdivision_children(ch, c)
        assert kids and all(k.is_coincidence for k, _ in kids)


# --- frozen chair (2,0) survey ----------------------------------------------

def test_chair_shift20_root_set_frozen():
    ch = builtin("chair")
    rs = overlaps_from_shift(ch, point(ch.field, 2, 0))
    assert len(rs.classes) == 32
    assert rs.region_level == 5
    assert sum(rs.counts.values()) == 2208
    assert rs.stabilized


def test_chair_shift20_graph_frozen():
    ch = builtin("chair")
    g = build_graph(ch, overlaps_from_shift(ch, point(ch.field, 2, 0)).classes)
    assert (g.n_vertices, g.n_edges) == (48, 140)
    assert len(g.coincidence_keys()) == 4
    reach = coincidence_reachability(g)
    assert reach.all_reach and not reach.failing_vertices


def test_chair_shift20_density_series_exact():
    ch = builtin("chair")
    ds = density_series(ch, point(ch.field, 2, 0), 8)
    want = [Fraction(0), Fraction(3, 8), Fraction(21, 32), Fraction(105, 128),
            Fraction(465, 512), Fraction(1953, 2048), Fraction(8001, 8192),
            Fraction(32385, 32768), Fraction(130305, 131072)]
    assert [v.as_fraction() for v in ds.values] == want
    assert ds.values == tuple(sorted(ds.values))


def test_chair_gap_ratios_below_guaranteed_contraction():
    ch = builtin("chair")
    bound = contraction_factor(ch)
    assert bound.as_fraction() == Fraction(3, 4)
    gaps = density_series(ch, point(ch.field, 2, 0), 8).gaps()
    for a, b in zip(gaps, gaps[1:]):
        assert a.sign() > 0
        assert (bound - b / a).sign() >= 0  # exact rational comparison


def test_period_doubling_density_series_exact():
    pd = builtin("period_doubling")
    ds = density_series(pd, point(pd.field, 1), 6)
    assert [str(v.as_fraction()) for v in ds.values] == \
        ["2/7", "9/14", "23/28", "51/56", "107/112", "219/224", "443/448"]
    # gap exactly halves each step, matching the 1/2 contraction bound
    assert contraction_factor(pd).as_fraction() == Fraction(1, 2)
    gaps = ds.gaps()
    for a, b in zip(gaps, gaps[1:]):
        assert (b + b) == a


# --- spectrum verdicts -------------------------------------------------------

def test_fibonacci_verdict_frozen():
    fib = builtin("fibonacci")
    v = pure_discrete_verdict(fib, [point(fib.field, (0, 1))])
    assert v.pure_discrete
    assert v.basis_levels == (3,)
    assert v.graph.n_vertices == 8
    assert len(v.graph.coincidence_keys()) == 2
    assert v.theorem == "overlap-coincidence-criterion"
    for root_key in v.graph.roots:
        path = v.witness_paths[root_key]
        assert v.graph.classes[path[-1]].is_coincidence


def test_period_doubling_verdict_frozen():
    pd = builtin("period_doubling")
    v = pure_discrete_verdict(pd, [point(pd.field, 1)])
    assert v.pure_discrete
    assert v.graph.n_vertices == 4
    assert len(v.graph.coincidence_keys()) == 2


def test_chair_verdict_frozen():
    ch = builtin("chair")
    v = pure_discrete_verdict(ch, [point(ch.field, 4, 0), point(ch.field, 0, 4)])
    assert v.pure_discrete
    assert v.basis_levels == (2, 2)
    assert v.graph.n_vertices == 36
    assert len(v.graph.coincidence_keys()) == 4


def test_chair_verdict_basis_invariant():
    ch = builtin("chair")
    a = pure_discrete_verdict(ch, [point(ch.field, 4, 0), point(ch.field, 0, 4)])
    b = pure_discrete_verdict(ch, [point(ch.field, 1, 1), point(ch.field, 4, 0)])
    assert a.pure_discrete and b.pure_discrete
    assert b.basis_levels == (1, 2)
    assert b.graph.n_vertices == 42  # graphs differ, the verdict does not


def test_table_verdict_fails_with_frozen_classes():
    tb = builtin("table")
    v = pure_discrete_verdict(tb, [point(tb.field, 1, 0), point(tb.field, 0, 1)])
    assert not v.pure_discrete
    assert v.graph.n_vertices == 14
    assert len(v.failing) == 12
    got = sorted((c.label_t, c.label_s,
                  tuple(x.as_fraction() for x in c.shift.coords))
                 for c in v.failing)
    assert got == [
        ("H", "H", (-1, 0)), ("H", "H", (1, 0)),
        ("H", "V", (-1, 0)), ("H", "V", (-1, 1)),
        ("H", "V", (0, 0)), ("H", "V", (0, 1)),
        ("V", "H", (0, -1)), ("V", "H", (0, 0)),
        ("V", "H", (1, -1)), ("V", "H", (1, 0)),
        ("V", "V", (0, -1)), ("V", "V", (0, 1)),
    ]
    assert not v.witness_paths


def test_verdict_requires_a_genuine_basis():
    ch = builtin("chair")
    fib = builtin("fibonacci")
    with pytest.raises(NotABasis):
        pure_discrete_verdict(ch, [point(ch.field, 2, 0)])
    with pytest.raises(NotABasis):
        pure_discrete_verdict(ch, [point(ch.field, 2, 0), point(ch.field, 4, 0)])
    with pytest.raises(NotABasis):
        # rational 2 is not a fibonacci return vector
        pure_discrete_verdict(fib, [point(fib.field, 2)])


def test_observed_return_levels():
    ch = builtin("chair")
    assert observed_return_level(ch, point(ch.field, 1, 1), max_level=5) == 1
    assert observed_return_level(ch, point(ch.field, 4, 0), max_level=5) == 2
    # (2,0) is a legal density shift but never a return vector
    assert observed_return_level(ch, point(ch.field, 2, 0), max_level=5) is None


# --- determinism and export --------------------------------------------------

def test_export_graph_text_period_doubling_golden():
    pd = builtin("period_doubling")
    g = build_graph(pd, overlaps_from_shift(pd, point(pd.field, 1)).classes)
    assert export_graph_text(g) == (
        "vertex 0 a a [0] coincidence\n"
        "vertex 1 a b [0]\n"
        "vertex 2 b a [0]\n"
        "vertex 3 b b [0] coincidence\n"
        "edge 0 -> 0 x1\n"
        "edge 0 -> 3 x1\n"
        "edge 1 -> 0 x1\n"
        "edge 1 -> 2 x1\n"
        "edge 2 -> 0 x1\n"
        "edge 2 -> 1 x1\n"
        "edge 3 -> 0 x2\n")


def test_graph_build_is_deterministic():
    ch = builtin("chair")
    x = point(ch.field, 2, 0)
    t1 = export_graph_text(build_graph(ch, overlaps_from_shift(ch, x).classes))
    t2 = export_graph_text(build_graph(ch, overlaps_from_shift(ch, x).classes))
    assert t1 == t2


# --- Perron volume weights ---------------------------------------------------

def test_volume_frequencies_frozen():
    assert {l: v.as_fraction() for l, v in
            volume_frequencies(builtin("chair")).items()} == \
        {"C0": Fraction(1, 4), "C1": Fraction(1, 4),
         "C2": Fraction(1, 4), "C3": Fraction(1, 4)}
    assert {l: v.as_fraction() for l, v in
            volume_frequencies(builtin("period_doubling")).items()} == \
        {"a": Fraction(2, 3), "b": Fraction(1, 3)}
    assert {l: v.as_fraction() for l, v in
            volume_frequencies(builtin("table")).items()} == \
        {"H": Fraction(1, 2), "V": Fraction(1, 2)}
    sph = volume_frequencies(builtin("sphinx"))
    assert all(v.as_fraction() == Fraction(1, 12) for v in sph.values())


def test_fibonacci_volume_frequencies_sum_to_one():
    fib = builtin("fibonacci")
    vf = volume_frequencies(fib)
    # a carries (2 + phi)/5 of the length, b the rest
    assert vf["a"].coeffs == (Fraction(2, 5), Fraction(1, 5))
    assert vf["b"].coeffs == (Fraction(3, 5), Fraction(-1, 5))
    assert (vf["a"] + vf["b"]) == fib.field.one


# --- limit-periodic report ---------------------------------------------------

def test_chair_limit_periodic_frozen():
    ch = builtin("chair")
    rep = limit_periodic_report(
        ch, [point(ch.field, 1, 0), point(ch.field, 0, 1)], 6)
    assert rep.power == 2
    assert rep.survey_scale == 2
    assert sorted(g.approx() for g in rep.generators) == \
        [(0.0, 8.0), (8.0, 0.0)]
    assert rep.joint_states == 11
    assert [str(v.as_fraction()) for v in rep.densities] == \
        ["11/21", "3/4", "293/336", "419/448", "743/768", "7051/7168",
         "85313/86016"]
    assert rep.verdict.pure_discrete
    assert rep.contraction.as_fraction() == Fraction(3, 4)
    assert rep.evidence == "empirical-within-region"
    # the headline number: within 1e-2 of full density by k = 6
    assert 1 - rep.densities[-1].approx() <= 1e-2


def test_period_doubling_limit_periodic_frozen():
    pd = builtin("period_doubling")
    rep = limit_periodic_report(pd, [point(pd.field, 1)], 6)
    assert rep.power == 0
    assert [g.approx() for g in rep.generators] == [(2.0,)]
    assert rep.joint_states == 6
    assert [str(v.as_fraction()) for v in rep.densities] == \
        ["7/12", "19/24", "43/48", "91/96", "187/192", "379/384", "763/768"]


def test_limit_periodic_densities_monotone():
    ch = builtin("chair")
    rep = limit_periodic_report(
        ch, [point(ch.field, 1, 0), point(ch.field, 0, 1)], 6)
    assert list(rep.densities) == sorted(rep.densities)
    assert all(0 <= v.approx() <= 1 for v in rep.densities)


def test_limit_periodic_preconditions_guarded():
    fib = builtin("fibonacci")
    with pytest.raises(PreconditionNotEstablished):
        # the expansion does not fix any rational lattice chain
        limit_periodic_report(fib, [point(fib.field, 1)], 2)
    tb = builtin("table")
    with pytest.raises(PreconditionNotEstablished):
        # not pure discrete, so no density claim is made
        limit_periodic_report(tb, [point(tb.field, 1, 0),
                                   point(tb.field, 0, 1)], 2)
