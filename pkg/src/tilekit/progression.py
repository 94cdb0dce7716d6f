"""Arithmetic progressions, lattice conditions, and digit decompositions.

A one-dimensional arithmetic progression is a patch repeated along
multiples of a fixed difference; a full-rank one repeats a single tile
along a whole lattice.  This module searches supertile regions for the
finite kind, decides the lattice inclusions Xi >= Q^K(L) that feed the
full-rank existence theorems, and implements the constructive digit
decomposition writing any integer combination of expansion eigenvectors
as a short exact sum of return vectors.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from itertools import product
from math import atan2, gcd, hypot, pi
from typing import Dict, List, Optional, Sequence, Tuple

from .algebra import FieldElement
from .errors import (BudgetExhausted, EigenConditionFails, NotABasis,
                     PatchNotFound, WitnessNotFound)
from .geometry import PointK
from .overlap import PureDiscreteVerdict, _exact_rank, pure_discrete_verdict
from .substitution import (Patch, SubstitutionRule, control_points,
                           find_occurrences, return_vectors, supertile)


# --- one-dimensional progressions ---

@dataclass(frozen=True)
class APQuery:
    """A patch, a nonzero step, and the supertile level to scan."""
    patch: Patch
    difference: PointK
    region_level: int

    def __post_init__(self):
        if self.difference.is_zero():
            raise ValueError("difference must be nonzero")
        if len(self.patch) == 0:
            raise ValueError("patch must be nonempty")


@dataclass(frozen=True)
class APLengthResult:
    """Longest run patch+a+x, patch+a+2x, ... found in the region.

    anchor is the translation a, so the k-th member of the progression is
    the patch translated by a + k * difference for k = 1..length.
    """
    kind: str
    length: int
    anchor: PointK
    region_used: int
    occurrences: int

    def verify(self, rule: SubstitutionRule, query: APQuery,
               seed: Optional[str] = None) -> bool:
        region = supertile(rule, seed or rule.alphabet[0], self.region_used)
        occ = find_occurrences(region, query.patch)
        step = query.difference
        pos = self.anchor
        for _ in range(self.length):
            pos = pos + step
            if pos not in occ:
                return False
        return True


def max_ap_length(rule: SubstitutionRule, query: APQuery,
                  seed: Optional[str] = None) -> APLengthResult:
    """Longest arithmetic progression of the patch inside one supertile.

    Scans all occurrences in the level-n supertile and measures maximal
    runs along the difference.  Nondecreasing in the region level;
    PatchNotFound when the patch does not occur at all.
    """
    seed = seed or rule.alphabet[0]
    region = supertile(rule, seed, query.region_level)
    occ = find_occurrences(region, query.patch)
    if not occ:
        raise PatchNotFound(
            f"patch has no occurrence in level {query.region_level} supertile")
    x = query.difference
    best_len = 0
    best_anchor = None
    for o in sorted(occ, key=lambda p: p.key()):
        if (o - x) in occ:
            continue  # not a run start
        m = 1
        cur = o + x
        while cur in occ:
            m += 1
            cur = cur + x
        if m > best_len:
            best_len = m
            best_anchor = o - x
    return APLengthResult("max_length_in_region", best_len, best_anchor,
                          query.region_level, len(occ))


@dataclass(frozen=True)
class APFound:
    kind: str
    difference: PointK
    anchor: PointK
    length: int
    region_used: int


def _angle_gap(z: PointK, hint: Optional[PointK]) -> float:
    if hint is None:
        return 0.0
    zx, hx = z.approx(), hint.approx()
    if len(zx) == 1:
        return 0.0 if (zx[0] >= 0) == (hx[0] >= 0) else pi
    a = atan2(zx[1], zx[0]) - atan2(hx[1], hx[0])
    while a <= -pi:
        a += 2 * pi
    while a > pi:
        a -= 2 * pi
    return abs(a)


def find_ap_of_length(rule: SubstitutionRule, patch: Patch, n: int,
                      direction_hint: Optional[PointK] = None,
                      max_level: int = 10,
                      seed: Optional[str] = None) -> APFound:
    """Find some difference z giving a progression of length n.

    Candidate differences are taken from pairs of occurrences in growing
    supertiles; among successes the one closest in angle to the hint wins,
    ties by length of z.  BudgetExhausted past max_level.
    """
    if n < 1:
        raise ValueError("n must be positive")
    seed = seed or rule.alphabet[0]
    for level in range(1, max_level + 1):
        region = supertile(rule, seed, level)
        occ = find_occurrences(region, patch)
        if len(occ) < 2:
            continue
        anchors = sorted(occ, key=lambda p: p.key())
        candidates = {}
        for i, a in enumerate(anchors):
            for b in anchors[i + 1:]:
                for z in (b - a, a - b):
                    candidates.setdefault(z.key(), z)
        by_norm = sorted(candidates.values(),
                         key=lambda z: (sum(c * c for c in z.approx()),
                                        z.key()))
        hits = []
        for z in by_norm:
            for o in anchors:
                if (o - z) in occ:
                    continue
                m = 1
                cur = o + z
                while m < n and cur in occ:
                    m += 1
                    cur = cur + z
                if m >= n:
                    hits.append((z, o - z))
                    break
            if len(hits) >= 32:
                break  # enough material to rank; keeps large regions cheap
        if hits:
            def rank(item):
                z, _ = item
                return (_angle_gap(z, direction_hint),
                        hypot(*z.approx()) if len(z.approx()) > 1
                        else abs(z.approx()[0]),
                        z.key())
            z, anchor = min(hits, key=rank)
            return APFound("found_in_region", z, anchor, n, level)
    raise BudgetExhausted(
        f"no progression of length {n} found through level {max_level}")


# --- lattice conditions ---

@dataclass(frozen=True)
class LatticeK:
    """Full-rank lattice given by d independent basis vectors."""
    basis: Tuple[PointK, ...]

    def __post_init__(self):
        d = self.basis[0].dim
        if len(self.basis) != d or _exact_rank(self.basis, d) != d:
            raise NotABasis("lattice basis must be full rank")


@dataclass(frozen=True)
class LatticeConditionReport:
    """Outcome of searching for Xi >= Q^K(L) and its summed variants.

    power is the smallest K with every window combination of Q^K basis
    vectors observed as a plain return vector (None when not found:
    that is a budget statement, not a disproof).  first_k / first_m is
    the lexicographically smallest (K, summand count) over the relaxed
    condition Xi + ... + Xi >= Q^K(L).
    """
    holds: bool
    power: Optional[int]
    generators: Tuple[PointK, ...]
    first_k: Optional[int]
    first_m: Optional[int]
    level_used: int
    combo_window: int
    detail: str


def _lattice_basis(lattice) -> Tuple[PointK, ...]:
    if isinstance(lattice, LatticeK):
        return lattice.basis
    return LatticeK(tuple(lattice)).basis


def _window_combos(basis: Sequence[PointK], window: int) -> List[PointK]:
    d = len(basis)
    f = basis[0].coords[0].field
    out = []
    for combo in product(range(-window, window + 1), repeat=d):
        if all(c == 0 for c in combo):
            continue
        acc = basis[0].scale(f.from_rational(combo[0]))
        for i in range(1, d):
            acc = acc + basis[i].scale(f.from_rational(combo[i]))
        out.append(acc)
    return out


def lattice_condition(rule: SubstitutionRule, lattice,
                      level_budget: Optional[int] = None,
                      k_budget: int = 4, combo_window: int = 2,
                      sum_budget: int = 2,
                      seed: Optional[str] = None) -> LatticeConditionReport:
    """Search observed return vectors for the inclusion Xi >= Q^K(L).

    The infinite inclusion is tested on the window of lattice combinations
    with coefficients up to combo_window; a miss at every K up to k_budget
    is reported as not-found within budget, never as a disproof.  The
    relaxed inclusion with sums of up to sum_budget return vectors is
    searched as well and reported separately.
    """
    basis = _lattice_basis(lattice)
    if level_budget is None:
        level_budget = 6 if rule.dimension >= 2 else 10
    seed = seed or rule.alphabet[0]

    powers = []
    scaled = list(basis)
    for _ in range(k_budget + 1):
        powers.append(tuple(scaled))
        scaled = [rule.expansion.apply(v) for v in scaled]

    level = 0
    xi = frozenset()
    plain_k = None
    for lv in range(1, level_budget + 1):
        xi = return_vectors(rule, lv, seed=seed)
        level = lv
        for k in range(k_budget + 1):
            if all(v in xi for v in _window_combos(powers[k], combo_window)):
                plain_k = k
                break
        if plain_k is not None:
            break

    first = (plain_k, 1) if plain_k is not None else None
    if first is None and sum_budget >= 2:
        # two-term sums only: v in Xi+Xi iff v - a lands in Xi for some a
        for k in range(k_budget + 1):
            need = _window_combos(powers[k], combo_window)
            if all(any((v - a) in xi for a in xi) for v in need):
                first = (k, 2)
                break

    holds = plain_k is not None
    gens = powers[plain_k] if plain_k is not None else ()
    if holds:
        detail = (f"window combinations of Q^{plain_k} generators observed "
                  f"as return vectors at level {level}")
    elif first is not None:
        detail = (f"only the {first[1]}-fold sum condition holds, at "
                  f"K = {first[0]}")
    else:
        detail = (f"no inclusion found through K = {k_budget} at return "
                  f"vector level {level}")
    return LatticeConditionReport(holds, plain_k, gens,
                                  first[0] if first else None,
                                  first[1] if first else None,
                                  level, combo_window, detail)


# --- digit decomposition of lattice vectors into return-vector sums ---

@dataclass(frozen=True)
class EigenData:
    """An expansion eigenvector with integer eigenvalue, Q v = n v."""
    vector: PointK
    eigenvalue: int


@dataclass(frozen=True)
class DigitDecomposition:
    """Return vectors whose exact sum is the requested combination.

    Each vector is a difference of two same-type tile positions inside
    the depth-level supertile of base_label, built by walking witness
    children and re-verifiable there by occurrence search.
    """
    vectors: Tuple[PointK, ...]
    base_label: str
    depth: int
    pairs: Tuple[Tuple[PointK, PointK], ...]

    def __iter__(self):
        return iter(self.vectors)

    def __len__(self):
        return len(self.vectors)

    def total(self, field, dim: Optional[int] = None) -> PointK:
        d = self.pairs[0][0].dim if self.pairs else (dim or 1)
        acc = PointK(tuple([field.zero] * d))
        for v in self.vectors:
            acc = acc + v
        return acc

    def verify(self, rule: SubstitutionRule) -> bool:
        patch = supertile(rule, self.base_label, self.depth)
        pos = frozenset(patch.positions(self.base_label))
        return all(a in pos and b in pos for a, b in self.pairs)


def _witness_offsets(rule: SubstitutionRule,
                     vectors: Sequence[PointK]) -> Tuple[str, Dict, PointK]:
    """Find one label whose substitution contains same-type children
    realizing control-point increment 0 and every requested eigenvector."""
    cps = control_points(rule)
    q = rule.expansion
    for label in rule.alphabet:
        c0 = cps.points[label]
        incr = {}
        for child in rule.images[label]:
            if child.label != label:
                continue
            delta = child.position + c0 - q.apply(c0)
            incr.setdefault(delta.key(), child.position)
        zero_key = (c0 - c0).key()
        if zero_key in incr and all(v.key() in incr for v in vectors):
            offsets = {v.key(): incr[v.key()] for v in vectors}
            return label, offsets, incr[zero_key]
    raise WitnessNotFound(
        "no prototile has same-type children realizing a zero increment "
        "and every eigenvector increment")


def _digits(value: int, base: int) -> List[int]:
    out = []
    v = value
    while v:
        out.append(v % base)
        v //= base
    return out or [0]


def digit_decompose(rule: SubstitutionRule, eigen: Sequence, target: Sequence[int],
                    seed: Optional[str] = None) -> DigitDecomposition:
    """Write sum(k_i * v_i) as an exact sum of at most e * max(n_i)
    return vectors.

    Each eigenvector contributes one chain per digit threshold: walking the
    supertile of the base label, every step descends into the witness child
    with increment v_i when the current digit clears the threshold and into
    the zero-increment child otherwise.  The chain endpoint minus the all-
    zero chain endpoint telescopes to the base-n_i digit expansion, and both
    endpoints are genuine same-type tiles of one supertile.
    """
    eigen = [e if isinstance(e, EigenData) else EigenData(*e[:2])
             for e in eigen]
    if len(target) != len(eigen):
        raise ValueError("one integer coefficient per eigenvector required")
    q = rule.expansion
    for e in eigen:
        if e.eigenvalue < 2:
            raise EigenConditionFails(f"eigenvalue {e.eigenvalue} must be >= 2")
        lhs = q.apply(e.vector)
        rhs = e.vector.scale(rule.field.from_rational(e.eigenvalue))
        if lhs != rhs:
            raise EigenConditionFails(
                f"Q does not scale {e.vector} by {e.eigenvalue}")

    label, offsets, zero_off = _witness_offsets(rule, [e.vector for e in eigen])
    digit_rows = [_digits(abs(k), e.eigenvalue)
                  for e, k in zip(eigen, target)]
    depth = max(len(r) for r in digit_rows)

    f = rule.field
    d = rule.dimension

    def chain_end(choices: List[Optional[PointK]]) -> PointK:
        # child positions accumulate as p -> Q p + offset, starting at 0
        p = PointK(tuple([f.zero] * d))
        for off in choices:
            p = q.apply(p) + (off if off is not None else zero_off)
        return p

    zero_end = chain_end([None] * depth)
    vectors = []
    pairs = []
    for e, k, digits in zip(eigen, target, digit_rows):
        if k == 0:
            continue
        # big-endian digits left-padded to depth: step j carries weight
        # n^(depth-1-j), so the least significant digit sits last
        padded = [0] * (depth - len(digits)) + list(reversed(digits))
        off = offsets[e.vector.key()]
        for threshold in range(1, e.eigenvalue):
            choices = [off if digit >= threshold else None
                       for digit in padded]
            end = chain_end(choices)
            xi = end - zero_end
            if xi.is_zero():
                continue
            if k > 0:
                vectors.append(xi)
                pairs.append((end, zero_end))
            else:
                vectors.append(zero_end - end)
                pairs.append((zero_end, end))
    return DigitDecomposition(tuple(vectors), label, depth, tuple(pairs))


# --- the full-rank verdict ---

@dataclass(frozen=True)
class FullRankVerdict:
    """Existence verdict for full-rank infinite arithmetic progressions.

    kind is one of fullrank_theorem, nonexistence_certificate, undecided.
    For the theorem branch the lattice, its power, and an empirically
    verified tile window are attached; for nonexistence the reason is
    either an irrational expansion factor or a failed spectral verdict.
    """
    kind: str
    exists: Optional[bool]
    theorem: Optional[str]
    detail: str
    expansion_scalar: Optional[FieldElement] = None
    spectrum: Optional[PureDiscreteVerdict] = None
    lattice: Tuple[PointK, ...] = ()
    lattice_power: Optional[int] = None
    tile_label: Optional[str] = None
    tile_position: Optional[PointK] = None
    window: int = 0
    verified_translates: int = 0
    window_size: int = 0
    window_complete: bool = False


def _is_rational(x: FieldElement) -> bool:
    return all(c == 0 for c in x.coeffs[1:])


def _shortest_basis_from_xi(rule: SubstitutionRule, max_level: int = 6,
                            seed: Optional[str] = None) -> Tuple[PointK, ...]:
    d = rule.dimension
    for level in range(1, max_level + 1):
        xi = return_vectors(rule, level, seed=seed)
        cands = sorted((v for v in xi if not v.is_zero()),
                       key=lambda v: (sum(c * c for c in v.approx()), v.key()))
        chosen: List[PointK] = []
        for v in cands:
            if _exact_rank(chosen + [v], d) == len(chosen) + 1:
                chosen.append(v)
                if len(chosen) == d:
                    return tuple(chosen)
    raise NotABasis(f"return vectors span less than {d} dimensions "
                    f"through level {max_level}")


def _integral_coords(vectors) -> bool:
    for v in vectors:
        for c in v.coords:
            coeffs = c.coeffs
            if any(x != 0 for x in coeffs[1:]) or coeffs[0].denominator != 1:
                return False
    return True


def _xi_group_basis(rule: SubstitutionRule, level: int = 4,
                    seed: Optional[str] = None) -> Tuple[PointK, ...]:
    """Basis of the group generated by observed return vectors.

    Return vectors get rational coordinates in a frame of short return
    vectors (any full-rank pair of group members works for that); the
    integer span is then reduced to echelon form by exact gcd sweeps.
    """
    d = rule.dimension
    frame = _shortest_basis_from_xi(rule, seed=seed)
    xi = sorted((v for v in return_vectors(rule, level, seed=seed)
                 if not v.is_zero()), key=lambda v: v.key())
    rows = []
    f = rule.field
    for v in xi:
        # solve sum a_j frame_j = v over the field, keep rational solutions
        mat = [[frame[j].coords[i] for j in range(d)] + [v.coords[i]]
               for i in range(d)]
        for col in range(d):
            piv = next(r for r in range(col, d) if mat[r][col].sign() != 0)
            mat[col], mat[piv] = mat[piv], mat[col]
            inv = mat[col][col].inverse()
            mat[col] = [x * inv for x in mat[col]]
            for r in range(d):
                if r != col and mat[r][col].sign() != 0:
                    fac = mat[r][col]
                    mat[r] = [x - fac * y for x, y in zip(mat[r], mat[col])]
        coords = []
        for i in range(d):
            c = mat[i][d]
            if any(x != 0 for x in c.coeffs[1:]):
                coords = None
                break
            coords.append(c.coeffs[0])
        if coords is not None:
            rows.append(coords)
    if not rows:
        raise NotABasis("no rational coordinates found for return vectors")
    den = 1
    for row in rows:
        for x in row:
            den = den * x.denominator // gcd(den, x.denominator)
    work = [[int(x * den) for x in row] for row in rows]
    # column echelon by gcd sweeps: each pass leaves at most one row with a
    # nonzero entry in the pivot column, moved out before the next column
    basis_rows: List[List[int]] = []
    for col in range(d):
        while True:
            here = [r for r in work if r[col] != 0]
            if len(here) <= 1:
                break
            here.sort(key=lambda r: abs(r[col]))
            piv = here[0]
            for r in here[1:]:
                t = r[col] // piv[col]
                for i in range(d):
                    r[i] -= t * piv[i]
        piv = next((r for r in work if r[col] != 0), None)
        if piv is not None:
            basis_rows.append(piv)
            work = [r for r in work if r is not piv]
    if len(basis_rows) != d:
        raise NotABasis("return vectors generate a rank-deficient group")
    out = []
    for row in basis_rows:
        acc = frame[0].scale(f.from_rational(Fraction(row[0], den)))
        for i in range(1, d):
            acc = acc + frame[i].scale(f.from_rational(Fraction(row[i], den)))
        out.append(acc)
    return tuple(out)


def canonical_lattice(rule: SubstitutionRule,
                      seed: Optional[str] = None) -> Tuple[PointK, ...]:
    """Default progression lattice: the integer lattice when observed return
    vectors are integral, else a basis of the group they generate."""
    if _integral_coords(return_vectors(rule, 3, seed=seed)):
        f = rule.field
        d = rule.dimension
        return tuple(PointK(tuple(f.one if i == j else f.zero
                                  for i in range(d))) for j in range(d))
    return _xi_group_basis(rule, seed=seed)


def fullrank_verdict(rule: SubstitutionRule, window: int = 6,
                     cap: Optional[int] = None,
                     seed: Optional[str] = None,
                     spectrum: Optional[PureDiscreteVerdict] = None
                     ) -> FullRankVerdict:
    """Decide existence of full-rank infinite arithmetic progressions.

    Self-similar rules split on the expansion factor: an irrational factor
    excludes them outright; an integer factor reduces the question to the
    spectral verdict, with a lattice of translates exhibited empirically
    in a window when it holds.  Anything else is reported undecided.
    A precomputed spectral verdict may be passed in; the outcome does not
    depend on which spanning basis produced it.
    """
    q = rule.expansion
    if not q.is_scalar():
        return FullRankVerdict(
            "undecided", None, None,
            "expansion map is not scalar; outside the decided cases")
    lam = q.scalar()
    if not _is_rational(lam):
        return FullRankVerdict(
            "nonexistence_certificate", False,
            "irrational-expansion-excludes-full-rank",
            "irrational expansion factor: two lattices of translates with "
            "incommensurate spacing would force overlapping distinct tiles",
            expansion_scalar=lam)
    n_frac = lam.coeffs[0]
    if n_frac.denominator != 1 or n_frac < 2:
        return FullRankVerdict(
            "undecided", None, None,
            f"rational non-integer expansion factor {n_frac}",
            expansion_scalar=lam)

    if spectrum is None:
        basis = _shortest_basis_from_xi(rule, seed=seed)
        spectrum = pure_discrete_verdict(rule, basis, cap=cap, seed=seed)
    if not spectrum.pure_discrete:
        return FullRankVerdict(
            "nonexistence_certificate", False,
            "full-rank-progression-implies-pure-discrete",
            "a full-rank progression lattice would force pure discrete "
            "spectrum, but overlap classes fail to reach coincidence",
            expansion_scalar=lam, spectrum=spectrum)

    lat = canonical_lattice(rule, seed=seed)
    cond = lattice_condition(rule, lat, seed=seed)
    power = cond.power if cond.power is not None else 0

    best = None
    for extra in range(0, 4):
        got = _verify_tile_window(rule, lat, power + extra, window, seed=seed)
        if got is None:
            continue
        label, pos, count, total, _ = got
        if best is None or count > best[3]:
            best = (power + extra, label, pos, count, total)
        if count == total:
            break
    theorem = "integer-expansion-pure-discrete-implies-full-rank"
    if best is None:
        return FullRankVerdict(
            "fullrank_theorem", True, theorem,
            "existence follows from the spectral verdict; no window "
            "verification region was large enough",
            expansion_scalar=lam, spectrum=spectrum, lattice=lat,
            lattice_power=cond.power, window=window)
    pw, label, pos, count, total = best
    gens = lat
    for _ in range(pw):
        gens = tuple(rule.expansion.apply(v) for v in gens)
    return FullRankVerdict(
        "fullrank_theorem", True, theorem,
        f"tile {label} repeats along the verified lattice window",
        expansion_scalar=lam, spectrum=spectrum, lattice=gens,
        lattice_power=pw, tile_label=label, tile_position=pos,
        window=window, verified_translates=count, window_size=total,
        window_complete=(count == total))


def _verify_tile_window(rule: SubstitutionRule, lat: Sequence[PointK],
                        power: int, window: int,
                        seed: Optional[str] = None,
                        max_level: Optional[int] = None):
    """Best tile whose lattice-window translates all appear in one region.

    Returns (label, position, count, window size, level) for the tile
    seeing the most translates, or None when no region is large enough.
    Only positions whose whole window fits inside the region bounding box
    are candidates, so a miss means a genuinely absent translate.  Levels
    are scanned upward because the complete tile may sit far from the
    supertile corner; the first complete hit wins.
    """
    gens = list(lat)
    for _ in range(power):
        gens = [rule.expansion.apply(v) for v in gens]
    shifts = _window_combos(gens, window)
    d = rule.dimension
    if max_level is None:
        max_level = 7 if d >= 2 else 11
    smin = [min(s.approx()[i] for s in shifts) for i in range(d)]
    smax = [max(s.approx()[i] for s in shifts) for i in range(d)]
    seed = seed or rule.alphabet[0]
    best = None
    for lv in range(2, max_level + 1):
        patch = supertile(rule, seed, lv)
        pts = [t.position.approx() for t in patch]
        lo = [min(p[i] for p in pts) for i in range(d)]
        hi = [max(p[i] for p in pts) for i in range(d)]
        if any(hi[i] - lo[i] <= smax[i] - smin[i] for i in range(d)):
            continue  # no position fits the whole window yet
        for label in rule.alphabet:
            pos = patch.positions(label)
            keys = frozenset(p.key() for p in pos)
            inner = [p for p in pos
                     if all(lo[i] - 1e-9 <= p.approx()[i] + smin[i]
                            and p.approx()[i] + smax[i] <= hi[i] + 1e-9
                            for i in range(d))]
            for p in sorted(inner, key=lambda v: v.key()):
                count = sum(1 for s in shifts if (p + s).key() in keys)
                if best is None or count > best[2]:
                    best = (label, p, count, len(shifts), lv)
                if count == len(shifts):
                    return best
    return best
