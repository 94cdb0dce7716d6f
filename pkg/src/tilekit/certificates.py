"""Non-existence certificates and the assembled per-rule report.

Two separate arguments rule out unbounded single-tile progressions.  The
internal-space route picks a conjugate embedding that contracts the
expansion scalar; control-point coordinates then land in a bounded set,
so a progression with fixed difference x cannot run longer than
diameter / |Phi(x)|.  The one-dimensional route shows that an
irreducible primitive substitution on more than one letter never repeats
a tile along a fixed difference forever, because the tile lengths form a
Perron left eigenvector with rationally independent entries.  Everything
is certified with exact arithmetic: modulus comparisons refine certified
root enclosures and detect ties through field identities, never floats.

assemble_verdict runs every analysis a rule supports, shares the heavy
spectral verdict between consumers, and emits one JSON-ready dictionary
whose claims carry theorem keys and evidence tags.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from math import isqrt
from typing import Dict, List, Optional, Tuple

from .algebra import (FieldElement, NumberField, box_from_iv, embed,
                      irreducible_over_q, min_poly_of, pisot_family_check,
                      _isolate_all_roots, Iv)
from .errors import (HypothesisFailure, NoContractingConjugate, NotABasis,
                     NotOneDimensional, NotPrimitive, PhiVanishes,
                     PreconditionNotEstablished, ReducibleCharPoly,
                     SingularMap)
from .geometry import PointK
from .overlap import (OverlapClass, PureDiscreteVerdict, limit_periodic_report,
                      pure_discrete_verdict)
from .progression import (FullRankVerdict, _shortest_basis_from_xi,
                          canonical_lattice, fullrank_verdict)
from .substitution import (SubstitutionRule, _primitivity_exponent,
                           control_points, return_vectors, validate)

Q = Fraction


# --- exact modulus comparisons at a conjugate embedding ---

def _sqrt_upper(x: Fraction, bits: int = 48) -> Fraction:
    """Rational upper bound on sqrt(x), within 2^-bits of it."""
    if x <= 0:
        return Q(0)
    n = x * (1 << (2 * bits))
    c = -(-n.numerator // n.denominator)
    r = isqrt(c)
    if r * r < c:
        r += 1
    return Q(r, 1 << bits)


def _sqrt_lower(x: Fraction, bits: int = 48) -> Fraction:
    if x <= 0:
        return Q(0)
    n = x * (1 << (2 * bits))
    return Q(isqrt(n.numerator // n.denominator), 1 << bits)


# stored bounds are snapped to a coarse dyadic grid in the sound
# direction, so they do not depend on how far shared root enclosures
# happened to be refined by earlier queries
_GRID = 1 << 40


def _snap_up(x: Fraction) -> Fraction:
    return Q(-(-x.numerator * _GRID // x.denominator), _GRID)


def _snap_down(x: Fraction) -> Fraction:
    return Q(x.numerator * _GRID // x.denominator, _GRID)


def _sign_at(e: FieldElement, idx: int) -> int:
    """Sign of the real embedding sigma_idx(e), e nonzero."""
    prec = 24
    while True:
        iv = embed(e, root_index=idx, precision=prec).re
        if iv.hi < 0:
            return -1
        if iv.lo > 0:
            return 1
        prec += 16


def _circle_associated(p, q: Fraction) -> bool:
    """Whether the root set of p is closed under z -> q / conj(z)."""
    a0 = p[0]
    if a0 == 0:
        return False
    g = len(p) - 1
    s = [p[g - m] * q ** (g - m) for m in range(g + 1)]
    return all(sm == a0 * pm for sm, pm in zip(s, p))


def _cmp_abs_sq(e: FieldElement, idx: int, q: Fraction) -> int:
    """Exact sign of |sigma_idx(e)|^2 - q for rational q.

    Real embeddings reduce to the sign of the field element e^2 - q, with
    equality decided by the field identity itself.  Complex embeddings
    refine the certified box; a tie |sigma(e)|^2 = q can only occur when
    the minimal polynomial of e is closed under z -> q / conj(z), and is
    then proven by trapping q / conj(sigma(e)) in the same isolating box.
    """
    if e.is_zero():
        return 0 if q == 0 else -1
    if q <= 0:
        return 1
    fld = e.field
    if fld.conjugate_box(idx).is_real():
        diff = e * e - q
        if diff.is_zero():
            return 0
        return _sign_at(diff, idx)
    mp = min_poly_of(e)
    tie_possible = _circle_associated(mp, q)
    states = _isolate_all_roots(mp) if tie_possible else None
    prec = 24
    while True:
        box = embed(e, root_index=idx, precision=prec)
        s = box.abs_sq()
        if s.hi < q:
            return -1
        if s.lo > q:
            return 1
        if tie_possible and not box.contains_zero():
            cand = box_from_iv(Iv(q, q)) * box.conj().recip()
            own = [j for j, st in enumerate(states)
                   if box.intersects(st.as_box())]
            hit = [j for j, st in enumerate(states)
                   if cand.intersects(st.as_box())]
            if len(own) == 1 and hit == own:
                return 0
            for st in states:
                st.refine()
        prec += 16


# --- internal space certificate ---

@dataclass(frozen=True)
class InternalSpaceCertificate:
    """Contraction bound for control-point coordinates.

    conjugate_index picks the field embedding sigma with a certified
    modulus bound beta_abs_lo <= |sigma(expansion_scalar)| <= beta_abs_hi
    < 1.  f_set lists the level-one displacement coordinates; summing
    their images down the contracting geometric series bounds the
    internal image of every control-point difference by diameter_bound.
    """
    field: NumberField
    expansion_scalar: FieldElement
    conjugate_index: int
    beta_abs_lo: Fraction
    beta_abs_hi: Fraction
    f_set: Tuple[FieldElement, ...]
    f_max_abs: Fraction
    diameter_bound: Fraction
    theorem: str = "internal-space-contraction-bounds-progressions"

    def n0(self, x: PointK) -> int:
        return no_long_ap_bound(self, x)


def internal_space_certificate(rule: SubstitutionRule
                               ) -> InternalSpaceCertificate:
    """Certificate bounding every fixed-difference progression length.

    Requires a scalar expansion (the embedding must act coordinatewise)
    and a conjugate embedding that contracts the scalar; otherwise
    HypothesisFailure or NoContractingConjugate.  Integer scalars have
    no conjugates at all, so rules like the chair are turned away here
    even though they carry arbitrarily long progressions.
    """
    qmap = rule.expansion
    if not qmap.is_scalar():
        raise HypothesisFailure(
            "expansion is not a scalar multiple of the identity; the "
            "coordinatewise conjugate embedding needs Q = lambda I")
    lam = qmap.scalar()
    f = rule.field
    beta_idx = None
    for i in range(f.conjugate_count):
        if i == f.root_index:
            continue
        if _cmp_abs_sq(lam, i, Q(1)) < 0:
            beta_idx = i
            break
    if beta_idx is None:
        raise NoContractingConjugate(
            "no conjugate embedding sends the expansion scalar strictly "
            "inside the unit circle")

    # certified |beta| bounds, upper bound strictly below one
    prec = 48
    while True:
        s = embed(lam, root_index=beta_idx, precision=prec).abs_sq()
        beta_hi = _sqrt_upper(s.hi)
        if beta_hi < 1:
            beta_lo = _sqrt_lower(s.lo)
            break
        prec += 16
    snapped_hi = _snap_up(beta_hi)
    if snapped_hi >= 1:
        snapped_hi = beta_hi
    snapped_lo = _snap_down(beta_lo)
    if snapped_lo < 0:
        snapped_lo = Q(0)

    # level-one displacements: child control points against the expanded
    # parent point, and child pairs inside one supertile
    cpm = control_points(rule)
    elems = set()
    for label in rule.alphabet:
        expanded = qmap.apply(cpm.points[label])
        kid_points = [cpm.points[t.label] + t.position
                      for t in rule.images[label]]
        for kc in kid_points:
            elems.update((kc - expanded).coords)
        for a in kid_points:
            for b in kid_points:
                if a != b:
                    elems.update((a - b).coords)
    f_set = tuple(sorted(elems, key=lambda e: e.coeffs))

    wmax_sq = Q(0)
    for w in f_set:
        if w.is_zero():
            continue
        s = embed(w, root_index=beta_idx, precision=48).abs_sq()
        if s.hi > wmax_sq:
            wmax_sq = s.hi
    f_max = _snap_up(_sqrt_upper(wmax_sq)) if wmax_sq > 0 else Q(0)
    diameter = _snap_up(2 * f_max / (1 - snapped_hi))
    return InternalSpaceCertificate(
        field=f, expansion_scalar=lam, conjugate_index=beta_idx,
        beta_abs_lo=snapped_lo, beta_abs_hi=snapped_hi,
        f_set=f_set, f_max_abs=f_max, diameter_bound=diameter)


def no_long_ap_bound(cert: InternalSpaceCertificate, x: PointK) -> int:
    """Least n whose scaled internal image escapes the bounded set.

    Returns the smallest n with n * |Phi(x)| strictly above the
    certificate's diameter bound, measuring Phi in the sup norm over
    coordinates; no single-tile progression with difference x can be
    longer.  The comparisons are exact, so a shift sitting precisely on
    the bound still gets the correct strict answer.
    """
    if x.is_zero():
        raise PhiVanishes(
            "internal image of the zero shift vanishes; the embedding is "
            "injective on coordinates, so only x = 0 lands on zero")
    bound = cert.diameter_bound
    idx = cert.conjugate_index
    n = 1
    while True:
        target = (bound / n) ** 2
        if any(_cmp_abs_sq(c, idx, target) > 0 for c in x.coords):
            return n
        n += 1


# --- one-dimensional Perron-Frobenius certificate ---

@dataclass(frozen=True)
class PFCertificate:
    """Irreducible primitive one-dimensional certificate.

    Records the verified hypotheses: integer substitution matrix,
    irreducible characteristic polynomial, primitivity with its
    exponent, the exact left-eigenvector identity for the tile
    lengths, and their rational independence.
    """
    matrix: Tuple[Tuple[int, ...], ...]
    char_poly: Tuple[int, ...]
    irreducible: bool
    primitive: bool
    primitivity_exponent: int
    eigenvalue: FieldElement
    lengths: Tuple[FieldElement, ...]
    rational_independence: bool
    theorem: str = "irreducible-primitive-one-dimensional-excludes-infinite-ap"
    verdict: str = "no-fixed-difference-infinite-ap"


def _char_poly_ints(mat: List[List[int]]) -> Tuple[int, ...]:
    """Characteristic polynomial by trace recursion, ascending integers."""
    n = len(mat)
    a = [[Q(v) for v in row] for row in mat]
    cur = [[Q(int(i == j)) for j in range(n)] for i in range(n)]
    tail: List[Fraction] = []
    for k in range(1, n + 1):
        am = [[sum(a[i][t] * cur[t][j] for t in range(n)) for j in range(n)]
              for i in range(n)]
        ck = -sum(am[i][i] for i in range(n)) / k
        tail.append(ck)
        cur = [[am[i][j] + (ck if i == j else 0) for j in range(n)]
               for i in range(n)]
    asc = list(reversed([Q(1)] + tail))
    for c in asc:
        assert c.denominator == 1  # integer matrix
    return tuple(int(c) for c in asc)


def _rational_rank(rows: List[List[Fraction]]) -> int:
    m = [[Q(v) for v in r] for r in rows]
    rank = 0
    for c in range(len(m[0]) if m else 0):
        piv = next((r for r in range(rank, len(m)) if m[r][c] != 0), None)
        if piv is None:
            continue
        m[rank], m[piv] = m[piv], m[rank]
        lead = m[rank][c]
        m[rank] = [v / lead for v in m[rank]]
        for r in range(len(m)):
            if r != rank and m[r][c] != 0:
                factor = m[r][c]
                m[r] = [x - factor * y for x, y in zip(m[r], m[rank])]
        rank += 1
    return rank


def pf_certificate(rule: SubstitutionRule) -> PFCertificate:
    """Certificate that no single tile repeats along a fixed difference
    forever, for one-dimensional rules with more than one letter.

    Verifies primitivity, irreducibility of the characteristic
    polynomial, that the expansion scalar is a characteristic root, and
    the exact left-eigenvector identity lengths * M = lambda * lengths.
    A reducible characteristic polynomial withholds the certificate by
    raising ReducibleCharPoly, which carries the polynomial.
    """
    if rule.dimension != 1:
        raise NotOneDimensional(
            "the eigenvector argument works on interval tiles only")
    if len(rule.alphabet) < 2:
        raise HypothesisFailure(
            "an alphabet of size one cannot exclude progressions")
    mat = rule.substitution_matrix()
    expo = _primitivity_exponent(mat)
    if expo is None:
        raise NotPrimitive("substitution matrix is not primitive")
    cp = _char_poly_ints(mat)
    if not irreducible_over_q(cp):
        raise ReducibleCharPoly(
            cp, "characteristic polynomial with ascending coefficients "
                "%r factors over the rationals" % (cp,))
    lam = rule.expansion.scalar()
    f = rule.field
    acc = f.zero
    power = f.one
    for c in cp:
        acc = acc + power * c
        power = power * lam
    if not acc.is_zero():
        raise HypothesisFailure(
            "expansion scalar is not a characteristic root of the "
            "substitution matrix")
    lengths = tuple(rule.prototile(l).area() for l in rule.alphabet)
    m = len(rule.alphabet)
    for j in range(m):
        lhs = f.zero
        for i in range(m):
            if mat[i][j]:
                lhs = lhs + lengths[i] * mat[i][j]
        if lhs != lam * lengths[j]:
            raise HypothesisFailure(
                "tile lengths do not form a left eigenvector of the "
                "substitution matrix")
    independent = _rational_rank([list(e.coeffs) for e in lengths]) == m
    return PFCertificate(
        matrix=tuple(tuple(r) for r in mat), char_poly=cp,
        irreducible=True, primitive=True, primitivity_exponent=expo,
        eigenvalue=lam, lengths=lengths,
        rational_independence=independent)


# --- assembled report ---

def _fmt_decimal(v: float) -> str:
    s = "%.12f" % v
    return "0.000000000000" if s == "-0.000000000000" else s


def _elem_value(e: FieldElement) -> float:
    if e.is_rational():
        return float(e.as_fraction())
    return float(e.interval(64).mid)


def _fmt_elem(e: FieldElement) -> dict:
    return {"coeffs": [str(c) for c in e.coeffs],
            "decimal": _fmt_decimal(_elem_value(e))}


def _fmt_point(p: PointK) -> list:
    return [_fmt_elem(c) for c in p.coords]


def _fmt_fraction(x: Fraction) -> dict:
    return {"exact": str(x), "decimal": _fmt_decimal(float(x))}


def _fmt_class(c: OverlapClass) -> dict:
    return {"moving": c.label_t, "static": c.label_s,
            "shift": _fmt_point(c.shift)}


def _rule_section(rule: SubstitutionRule) -> dict:
    return {
        "name": rule.name,
        "alphabet": list(rule.alphabet),
        "dimension": rule.dimension,
        "field_min_poly": [str(c) for c in rule.field.min_poly],
        "expansion": [[_fmt_elem(e) for e in row]
                      for row in rule.expansion.rows],
        "prototile_volumes": {l: _fmt_elem(rule.prototile(l).area())
                              for l in rule.alphabet},
        "children": {l: len(rule.images[l]) for l in rule.alphabet},
    }


def _validation_section(rep) -> dict:
    return {
        "ok": rep.ok,
        "failures": [{"code": c, "where": w, "detail": d}
                     for c, w, d in rep.failures],
        "matrix": [list(r) for r in rep.matrix],
        "column_sums": list(rep.column_sums),
        "primitive": rep.primitive,
        "primitivity_exponent": rep.primitivity_exponent,
    }


def _meyer_section(rule: SubstitutionRule) -> dict:
    eigs = rule.expansion.eigenvalues_in_field()
    if eigs is None:
        return {"applicable": False,
                "reason": "expansion eigenvalues are not available inside "
                          "the coordinate field"}
    fam = pisot_family_check(eigs)
    sec = {
        "applicable": True,
        "is_pisot_family": bool(fam),
        "eigenvalues": [_fmt_elem(e) for e in eigs],
        "theorem": "pisot-family-implies-meyer",
        "evidence": "proof-by-theorem",
    }
    if fam.violations:
        sec["violations"] = [{"eigen_index": v.eigen_index,
                              "min_poly": [str(c) for c in v.min_poly]}
                             for v in fam.violations]
    return sec


def _spectral_section(v: PureDiscreteVerdict) -> dict:
    return {
        "pure_discrete": v.pure_discrete,
        "theorem": v.theorem,
        "evidence": "empirical-within-region",
        "basis": [_fmt_point(p) for p in v.basis],
        "basis_levels": list(v.basis_levels),
        "classes": v.graph.n_vertices,
        "edges": v.graph.n_edges,
        "coincidences": len(v.graph.coincidence_keys()),
        "failing": [_fmt_class(c) for c in v.failing],
    }


def _fullrank_section(fr: FullRankVerdict) -> dict:
    if fr.kind == "undecided":
        evidence = "undecided"
    elif fr.theorem == "full-rank-progression-implies-pure-discrete":
        evidence = "empirical-within-region"
    else:
        evidence = "proof-by-theorem"
    sec = {
        "kind": fr.kind,
        "exists": fr.exists,
        "theorem": fr.theorem,
        "evidence": evidence,
        "detail": fr.detail,
        "window": fr.window,
        "verified_translates": fr.verified_translates,
        "window_size": fr.window_size,
        "window_complete": fr.window_complete,
    }
    if fr.expansion_scalar is not None:
        sec["expansion_scalar"] = _fmt_elem(fr.expansion_scalar)
    if fr.lattice:
        sec["lattice"] = [_fmt_point(p) for p in fr.lattice]
        sec["lattice_power"] = fr.lattice_power
    if fr.tile_label is not None:
        sec["tile_label"] = fr.tile_label
        sec["tile_position"] = _fmt_point(fr.tile_position)
    return sec


def _limit_periodic_section(rule, density_steps, seed, cap, spectrum) -> dict:
    k_max = density_steps if density_steps is not None else 0
    try:
        lp = limit_periodic_report(rule, canonical_lattice(rule, seed=seed),
                                   k_max, seed=seed, cap=cap,
                                   spectrum=spectrum)
    except (PreconditionNotEstablished, NotABasis, SingularMap) as exc:
        return {"applicable": False, "holds": False,
                "error": type(exc).__name__, "reason": str(exc)}
    return {
        "applicable": True,
        "holds": True,
        "theorem": lp.theorem,
        "evidence": lp.evidence,
        "lattice": [_fmt_point(p) for p in lp.lattice],
        "lattice_power": lp.power,
        "survey_scale": lp.survey_scale,
        "region_level": lp.region_level,
        "generators": [_fmt_point(g) for g in lp.generators],
        "joint_states": lp.joint_states,
        "contraction_factor": _fmt_elem(lp.contraction),
        "densities": [_fmt_elem(v) for v in lp.densities],
    }


def _internal_space_section(rule: SubstitutionRule,
                            seed: Optional[str]) -> dict:
    try:
        cert = internal_space_certificate(rule)
    except (NoContractingConjugate, HypothesisFailure, SingularMap) as exc:
        return {"available": False, "error": type(exc).__name__,
                "reason": str(exc)}
    shifts = sorted((v for v in return_vectors(rule, 3, seed=seed)
                     if not v.is_zero()), key=lambda p: p.key())
    return {
        "available": True,
        "theorem": cert.theorem,
        "evidence": "proof-by-theorem",
        "conjugate_index": cert.conjugate_index,
        "expansion_scalar": _fmt_elem(cert.expansion_scalar),
        "beta_abs": {"lo": str(cert.beta_abs_lo),
                     "hi": str(cert.beta_abs_hi),
                     "decimal": _fmt_decimal(float(cert.beta_abs_hi))},
        "f_set": [_fmt_elem(w) for w in cert.f_set],
        "f_max_abs": _fmt_fraction(cert.f_max_abs),
        "diameter_bound": _fmt_fraction(cert.diameter_bound),
        "progression_bounds": [{"shift": _fmt_point(x),
                                "n0": no_long_ap_bound(cert, x)}
                               for x in shifts[:12]],
    }


def _pf_section(rule: SubstitutionRule) -> dict:
    try:
        pf = pf_certificate(rule)
    except ReducibleCharPoly as exc:
        return {"available": False, "error": "ReducibleCharPoly",
                "reason": str(exc), "char_poly": list(exc.char_poly)}
    except (NotOneDimensional, NotPrimitive, HypothesisFailure) as exc:
        return {"available": False, "error": type(exc).__name__,
                "reason": str(exc)}
    return {
        "available": True,
        "theorem": pf.theorem,
        "verdict": pf.verdict,
        "evidence": "proof-by-theorem",
        "matrix": [list(r) for r in pf.matrix],
        "char_poly": list(pf.char_poly),
        "irreducible": pf.irreducible,
        "primitive": pf.primitive,
        "primitivity_exponent": pf.primitivity_exponent,
        "eigenvalue": _fmt_elem(pf.eigenvalue),
        "lengths": [_fmt_elem(e) for e in pf.lengths],
        "rational_independence": pf.rational_independence,
    }


def assemble_verdict(rule: SubstitutionRule,
                     density_steps: Optional[int] = None,
                     seed: Optional[str] = None,
                     cap: Optional[int] = None) -> dict:
    """One deterministic report covering every analysis the rule supports.

    The spectral verdict is computed once and shared by the full-rank
    and limit-periodic sections.  density_steps sets how many
    limit-periodic density values to tabulate; None establishes the
    preconditions only.  The result contains only JSON-safe values and
    every claim carries its theorem key and evidence tag.
    """
    rep = validate(rule)
    out = {
        "schema": "tilekit-report-1",
        "rule": _rule_section(rule),
        "validation": _validation_section(rep),
    }
    if not rep.ok:
        out["analyses"] = "skipped: rule failed validation"
        return out
    out["meyer"] = _meyer_section(rule)
    basis = _shortest_basis_from_xi(rule, seed=seed)
    spectrum = pure_discrete_verdict(rule, basis, cap=cap, seed=seed)
    out["spectral"] = _spectral_section(spectrum)
    fr = fullrank_verdict(rule, cap=cap, seed=seed, spectrum=spectrum)
    out["fullrank"] = _fullrank_section(fr)
    out["limit_periodic"] = _limit_periodic_section(rule, density_steps,
                                                    seed, cap, spectrum)
    out["certificates"] = {
        "internal_space": _internal_space_section(rule, seed),
        "pf_one_dimensional": _pf_section(rule),
    }
    out["summary"] = {
        "pure_discrete": spectrum.pure_discrete,
        "full_rank_progression": fr.exists,
        "limit_periodic": out["limit_periodic"]["holds"]
        if out["limit_periodic"]["applicable"] else False,
        "meyer": out["meyer"].get("is_pisot_family"),
    }
    return out
