"""Substitution rules over exact coordinates: supertile generation, the
subdivision map, control points, return vectors and occurrence search.

A rule carries one prototile polygon per label, an expansive linear map Q and,
for every label, the list of children tiles covering the expanded support.
Everything downstream (overlap graphs, progression searches, certificates)
works on the patches produced here, so positions stay exact field vectors and
patch membership is a hash lookup, never a float comparison.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

from .algebra import FieldElement, NumberField
from .errors import (
    BadExpansion,
    CoverGap,
    CoverOverlap,
    NotPrimitive,
    PatchNotFound,
    SingularMap,
)
from .geometry import LinearMapK, PointK, PolygonK, interior_overlap, supports_touch


@dataclass(frozen=True)
class Tile:
    """A labeled prototile translated to an exact position."""

    label: str
    position: PointK

    def translate(self, v: PointK) -> "Tile":
        return Tile(self.label, self.position + v)

    def key(self):
        return (self.label, self.position.key())

    def __repr__(self):
        return "Tile(%r, %s)" % (self.label, self.position)


class Patch:
    """Finite set of tiles with pairwise disjoint interiors.

    Tiles are kept in a canonical order (label, then coefficient-lex
    position), and an index keyed by exact positions makes membership and
    occurrence queries O(1) per probe.
    """

    __slots__ = ("rule", "tiles", "_index", "_hash")

    def __init__(self, rule: "SubstitutionRule", tiles: Iterable[Tile],
                 check: bool = False):
        self.rule = rule
        self.tiles: Tuple[Tile, ...] = tuple(sorted(tiles, key=Tile.key))
        index: Dict[str, Dict[tuple, Tile]] = {}
        for t in self.tiles:
            index.setdefault(t.label, {})[t.position.key()] = t
        self._index = index
        self._hash = None
        if check:
            self.check_disjoint()

    def __len__(self) -> int:
        return len(self.tiles)

    def __iter__(self):
        return iter(self.tiles)

    def __contains__(self, tile: Tile) -> bool:
        bucket = self._index.get(tile.label)
        return bucket is not None and tile.position.key() in bucket

    def __eq__(self, o):
        return isinstance(o, Patch) and self.tiles == o.tiles

    def __hash__(self):
        if self._hash is None:
            self._hash = hash(tuple(t.key() for t in self.tiles))
        return self._hash

    def labels(self) -> Tuple[str, ...]:
        return tuple(sorted(self._index))

    def positions(self, label: str) -> Tuple[PointK, ...]:
        bucket = self._index.get(label, {})
        return tuple(t.position for t in sorted(bucket.values(), key=Tile.key))

    def translate(self, v: PointK) -> "Patch":
        return Patch(self.rule, (t.translate(v) for t in self.tiles))

    def support_area(self) -> FieldElement:
        total = self.rule.field.zero
        for t in self.tiles:
            total = total + self.rule.prototile(t.label).area()
        return total

    def supports(self) -> List[PolygonK]:
        return [self.rule.support(t) for t in self.tiles]

    def meet(self, region: PolygonK) -> "Patch":
        """Tiles whose support intersects the region, boundary included."""
        keep = [t for t in self.tiles
                if supports_touch(self.rule.prototile(t.label), region,
                                  shift=t.position)]
        return Patch(self.rule, keep)

    def inside(self, region: PolygonK) -> "Patch":
        """Tiles whose support is contained in the region."""
        keep = []
        for t in self.tiles:
            proto = self.rule.prototile(t.label)
            kind, shared = interior_overlap(proto, region, shift=t.position)
            if kind == "overlap" and shared == proto.area():
                keep.append(t)
        return Patch(self.rule, keep)

    def check_disjoint(self) -> None:
        """Raise CoverOverlap if two tile interiors share volume."""
        order = sorted(range(len(self.tiles)),
                       key=lambda i: self.rule.support(self.tiles[i]).fbox()[0])
        boxes = [self.rule.support(self.tiles[i]).fbox() for i in order]
        margin = 1e-6
        for a in range(len(order)):
            xa0, ya0, xa1, ya1 = boxes[a]
            for b in range(a + 1, len(order)):
                xb0, yb0, xb1, yb1 = boxes[b]
                if xb0 > xa1 + margin:
                    break
                if yb0 > ya1 + margin or ya0 > yb1 + margin:
                    continue
                ti = self.tiles[order[a]]
                tj = self.tiles[order[b]]
                kind, shared = interior_overlap(
                    self.rule.prototile(ti.label),
                    self.rule.prototile(tj.label),
                    shift=ti.position - tj.position)
                if kind == "overlap":
                    err = CoverOverlap(
                        "tiles %r and %r share interior volume %s"
                        % (ti, tj, shared))
                    err.pair = (ti, tj)
                    err.area = shared
                    raise err

    def __repr__(self):
        return "Patch(%d tiles)" % len(self.tiles)


class SubstitutionRule:
    """Alphabet of prototiles, expansion map Q and per-label child lists."""

    def __init__(self, field: NumberField, dimension: int,
                 prototiles: Dict[str, PolygonK], expansion: LinearMapK,
                 images: Dict[str, Sequence[Tile]], name: str = ""):
        if set(prototiles) != set(images):
            raise ValueError("prototiles and images must share labels")
        self.field = field
        self.dimension = dimension
        self.alphabet: Tuple[str, ...] = tuple(prototiles)
        self._prototiles = dict(prototiles)
        self.expansion = expansion
        self.images: Dict[str, Tuple[Tile, ...]] = {
            l: tuple(images[l]) for l in self.alphabet}
        self.name = name
        self._supertiles: Dict[Tuple[str, int], Patch] = {}
        self._matrix: Optional[List[List[int]]] = None
        self._det_abs: Optional[FieldElement] = None
        self._return_cache: Dict[Tuple[str, int], frozenset] = {}

    def prototile(self, label: str) -> PolygonK:
        return self._prototiles[label]

    def support(self, tile: Tile) -> PolygonK:
        return self._prototiles[tile.label].translate(tile.position)

    def det_abs(self) -> FieldElement:
        if self._det_abs is None:
            det = self.expansion.det()
            self._det_abs = -det if det.sign() < 0 else det
        return self._det_abs

    def substitute(self, tile: Tile) -> Patch:
        """One substitution step: children at Q(position) + child offset."""
        base = self.expansion.apply(tile.position)
        return Patch(self, (c.translate(base) for c in self.images[tile.label]))

    def substitution_matrix(self) -> List[List[int]]:
        """M[i][j] = multiplicity of label i among the children of label j."""
        if self._matrix is None:
            idx = {l: i for i, l in enumerate(self.alphabet)}
            m = len(self.alphabet)
            mat = [[0] * m for _ in range(m)]
            for j, l in enumerate(self.alphabet):
                for child in self.images[l]:
                    mat[idx[child.label]][j] += 1
            self._matrix = mat
        return self._matrix

    def power(self, k: int) -> "SubstitutionRule":
        """The rule for omega^k (children composed, expansion Q^k)."""
        if k < 1:
            raise ValueError("power requires k >= 1")
        rule = self
        for _ in range(k - 1):
            images: Dict[str, List[Tile]] = {}
            for l in self.alphabet:
                kids: List[Tile] = []
                for mid in rule.images[l]:
                    base = self.expansion.apply(mid.position)
                    kids.extend(c.translate(base) for c in self.images[mid.label])
                images[l] = kids
            rule = SubstitutionRule(self.field, self.dimension,
                                    self._prototiles,
                                    self.expansion.compose(rule.expansion),
                                    images, name=self.name)
        if k > 1 and self.name:
            rule.name = "%s^%d" % (self.name, k)
        return rule

    def __repr__(self):
        return "SubstitutionRule(%r, %d prototiles)" % (self.name,
                                                        len(self.alphabet))


def supertile(rule: SubstitutionRule, label: str, n: int) -> Patch:
    """The patch omega^n applied to the prototile at the origin.

    Memoized on (label, n): level n is assembled from translated level n-1
    patches, so the cost is linear in the output size.
    """
    if label not in rule._prototiles:
        raise KeyError(label)
    if n < 0:
        raise ValueError("level must be nonnegative")
    key = (label, n)
    got = rule._supertiles.get(key)
    if got is not None:
        return got
    if n == 0:
        zero = PointK(tuple(rule.field.zero for _ in range(rule.dimension)))
        patch = Patch(rule, [Tile(label, zero)])
    else:
        qpow = rule.expansion.power(n - 1)
        tiles: List[Tile] = []
        for child in rule.images[label]:
            shift = qpow.apply(child.position)
            tiles.extend(t.translate(shift)
                         for t in supertile(rule, child.label, n - 1))
        patch = Patch(rule, tiles)
    rule._supertiles[key] = patch
    return patch


def subdivide(rule: SubstitutionRule, label: str, n: int) -> Tuple[Tuple[str, PointK], ...]:
    """Subdivision without expansion: label/position pairs of sigma^n.

    Positions are Q^{-n} images of the supertile positions, so applying Q^n
    recovers supertile(rule, label, n) tile for tile, and the pieces tile the
    original prototile support at scale Q^{-n}.
    """
    inv = rule.expansion.inverse().power(n) if n else None
    out = []
    for t in supertile(rule, label, n):
        pos = inv.apply(t.position) if inv is not None else t.position
        out.append((t.label, pos))
    return tuple(out)


@dataclass
class ValidationReport:
    ok: bool
    failures: List[Tuple[str, str, str]]
    matrix: List[List[int]]
    column_sums: List[int]
    primitive: bool
    primitivity_exponent: Optional[int]

    def summary(self) -> str:
        if self.ok:
            return "valid (column sums %s)" % (self.column_sums,)
        return "; ".join("%s[%s]: %s" % f for f in self.failures)


_ERROR_TYPES = {
    "BadExpansion": BadExpansion,
    "CoverGap": CoverGap,
    "CoverOverlap": CoverOverlap,
    "NotPrimitive": NotPrimitive,
}


def validate(rule: SubstitutionRule, strict: bool = False) -> ValidationReport:
    """Check the rule invariants exactly: expansive Q, exact child cover of
    each expanded prototile, and primitivity of the substitution matrix.

    With strict=True the first failure is raised as its exception type;
    otherwise every failure is collected into the report.
    """
    failures: List[Tuple[str, str, str]] = []

    def fail(code: str, label: str, detail: str, **attrs):
        failures.append((code, label, detail))
        if strict:
            err = _ERROR_TYPES[code]("%s: %s" % (label, detail) if label else detail)
            for k, v in attrs.items():
                setattr(err, k, v)
            raise err

    try:
        rule.expansion.check_expansion()
        expansion_ok = True
    except BadExpansion as e:
        expansion_ok = False
        fail("BadExpansion", "", str(e))

    det_abs = rule.det_abs() if expansion_ok else None
    for label in rule.alphabet:
        proto = rule.prototile(label)
        children = rule.images[label]
        expanded = proto.apply_map(rule.expansion)
        total = rule.field.zero
        for child in children:
            csupp = rule.prototile(child.label)
            total = total + csupp.area()
            kind, shared = interior_overlap(csupp, expanded, shift=child.position)
            if not (kind == "overlap" and shared == csupp.area()):
                fail("CoverGap", label,
                     "child %r leaves the expanded support" % (child,),
                     child=child)
        for i in range(len(children)):
            for j in range(i + 1, len(children)):
                a, b = children[i], children[j]
                kind, shared = interior_overlap(
                    rule.prototile(a.label), rule.prototile(b.label),
                    shift=a.position - b.position)
                if kind == "overlap":
                    fail("CoverOverlap", label,
                         "children %r and %r overlap with area %s"
                         % (a, b, shared), pair=(a, b), area=shared)
        if det_abs is not None:
            want = det_abs * proto.area()
            if total != want:
                deficit = want - total
                fail("CoverGap", label,
                     "child areas sum to %s, expected %s (deficit %s)"
                     % (total.decimal(6), want.decimal(6), deficit.decimal(6)),
                     deficit=deficit)

    mat = rule.substitution_matrix()
    m = len(mat)
    col_sums = [sum(mat[i][j] for i in range(m)) for j in range(m)]
    exponent = _primitivity_exponent(mat)
    if exponent is None:
        fail("NotPrimitive", "",
             "no power of the substitution matrix up to the Wielandt bound "
             "is strictly positive")

    return ValidationReport(ok=not failures, failures=failures, matrix=mat,
                            column_sums=col_sums,
                            primitive=exponent is not None,
                            primitivity_exponent=exponent)


def _primitivity_exponent(mat: List[List[int]]) -> Optional[int]:
    """Least k <= (m-1)^2 + 1 with mat^k strictly positive, else None."""
    m = len(mat)
    bound = (m - 1) * (m - 1) + 1
    power = [row[:] for row in mat]
    for k in range(1, bound + 1):
        if all(all(v > 0 for v in row) for row in power):
            return k
        if k < bound:
            power = _mat_mul_int(power, mat)
    return None


def _mat_mul_int(a: List[List[int]], b: List[List[int]]) -> List[List[int]]:
    n = len(a)
    return [[sum(a[i][k] * b[k][j] for k in range(n)) for j in range(n)]
            for i in range(n)]


@dataclass(frozen=True)
class ControlPointMap:
    """Designated-child map f and the exact fixed points c it induces."""

    tile_map: Dict[str, int]
    points: Dict[str, PointK]

    def point(self, tile: Tile) -> PointK:
        return self.points[tile.label] + tile.position

    def designated_child(self, rule: SubstitutionRule, label: str) -> Tile:
        return rule.images[label][self.tile_map[label]]


def control_points(rule: SubstitutionRule,
                   tile_map: Optional[Dict[str, int]] = None) -> ControlPointMap:
    """Solve Q c(P) = c(child of f(P)) + offset exactly for every prototile.

    The default designated child per label is the first whose translated
    support contains the fixed point of x -> Q^{-1}(x + offset); any explicit
    tile_map (label -> child index) overrides it.  The solved points always
    land inside their prototile supports because children nest into the
    expanded parent.
    """
    f = rule.field
    d = rule.dimension
    qi = rule.expansion
    chosen: Dict[str, int] = {}
    ident = [[f.one if i == j else f.zero for j in range(d)] for i in range(d)]
    qmi = LinearMapK([[qi.rows[i][j] - ident[i][j] for j in range(d)]
                      for i in range(d)])
    try:
        qmi_inv = qmi.inverse()
    except SingularMap:
        raise SingularMap("expansion has eigenvalue 1; control points undefined")
    for label in rule.alphabet:
        if tile_map is not None and label in tile_map:
            chosen[label] = tile_map[label]
            continue
        pick = 0
        for idx, child in enumerate(rule.images[label]):
            fx = qmi_inv.apply(child.position)
            if rule.prototile(child.label).contains_point(fx - child.position):
                pick = idx
                break
        chosen[label] = pick

    # one linear system over the field: unknowns are the m*d coordinates of c
    labels = rule.alphabet
    offset_of = {l: i * d for i, l in enumerate(labels)}
    n = len(labels) * d
    rows: List[List[FieldElement]] = []
    rhs: List[FieldElement] = []
    for l in labels:
        child = rule.images[l][chosen[l]]
        for r in range(d):
            row = [f.zero] * n
            for cidx in range(d):
                row[offset_of[l] + cidx] = row[offset_of[l] + cidx] + qi.rows[r][cidx]
            row[offset_of[child.label] + r] = row[offset_of[child.label] + r] - f.one
            rows.append(row)
            rhs.append(child.position.coords[r])
    sol = _solve_field(f, rows, rhs)
    points = {l: PointK(tuple(sol[offset_of[l] + r] for r in range(d)))
              for l in labels}
    for l in labels:
        child = rule.images[l][chosen[l]]
        assert qi.apply(points[l]) == points[child.label] + child.position
        assert rule.prototile(l).contains_point(points[l])
    return ControlPointMap(tile_map=chosen, points=points)


def _solve_field(f: NumberField, rows: List[List[FieldElement]],
                 rhs: List[FieldElement]) -> List[FieldElement]:
    """Gaussian elimination over the field; raises SingularMap if singular."""
    n = len(rows)
    a = [rows[i][:] + [rhs[i]] for i in range(n)]
    for col in range(n):
        piv = next((r for r in range(col, n) if not a[r][col].is_zero()), None)
        if piv is None:
            raise SingularMap("tile-map system is singular")
        a[col], a[piv] = a[piv], a[col]
        inv = a[col][col].inverse()
        a[col] = [v * inv for v in a[col]]
        for r in range(n):
            if r != col and not a[r][col].is_zero():
                factor = a[r][col]
                a[r] = [x - factor * y for x, y in zip(a[r], a[col])]
    return [a[i][n] for i in range(n)]


def return_vectors(rule: SubstitutionRule, level: int,
                   seed: Optional[str] = None) -> frozenset:
    """Differences between same-label tile positions in a level-n supertile.

    Contains 0, is closed under negation, and grows monotonically with the
    level.  This is the finite window into the return-vector set that the
    progression and overlap analyses quantify over.
    """
    if level < 0:
        raise ValueError("level must be nonnegative")
    seed = seed if seed is not None else rule.alphabet[0]
    key = (seed, level)
    got = rule._return_cache.get(key)
    if got is not None:
        return got
    patch = supertile(rule, seed, level)
    vecs = set()
    for label in patch.labels():
        pos = patch.positions(label)
        for i in range(len(pos)):
            for j in range(len(pos)):
                vecs.add(pos[j] - pos[i])
    out = frozenset(vecs)
    rule._return_cache[key] = out
    return out


def find_occurrences(haystack: Patch, needle: Patch) -> frozenset:
    """All exact translations t with needle + t contained in haystack."""
    if len(needle) == 0:
        raise PatchNotFound("empty needle")
    anchor = needle.tiles[0]
    rest = needle.tiles[1:]
    hits = []
    for t in haystack.positions(anchor.label):
        shift = t - anchor.position
        if all(Tile(r.label, r.position + shift) in haystack for r in rest):
            hits.append(shift)
    return frozenset(hits)


def single_tile_patch(rule: SubstitutionRule, label: str) -> Patch:
    zero = PointK(tuple(rule.field.zero for _ in range(rule.dimension)))
    return Patch(rule, [Tile(label, zero)])


def two_tile_configurations(rule: SubstitutionRule, level: int,
                            seed: Optional[str] = None) -> frozenset:
    """Unordered pairs of touching tiles up to translation, as class keys."""
    seed = seed if seed is not None else rule.alphabet[0]
    patch = supertile(rule, seed, level)
    tiles = patch.tiles
    boxes = [rule.support(t).fbox() for t in tiles]
    order = sorted(range(len(tiles)), key=lambda i: boxes[i][0])
    margin = 1e-6
    configs = set()
    for ai in range(len(order)):
        i = order[ai]
        xa0, ya0, xa1, ya1 = boxes[i]
        for bi in range(ai + 1, len(order)):
            j = order[bi]
            xb0, yb0, xb1, yb1 = boxes[j]
            if xb0 > xa1 + margin:
                break
            if yb0 > ya1 + margin or ya0 > yb1 + margin:
                continue
            a, b = tiles[i], tiles[j]
            if b.key() < a.key():
                a, b = b, a
            if supports_touch(rule.prototile(a.label), rule.prototile(b.label),
                              shift=a.position - b.position):
                configs.add((a.label, b.label, (b.position - a.position).key()))
    return frozenset(configs)


def flc_survey(rule: SubstitutionRule, max_level: int,
               seed: Optional[str] = None) -> List[int]:
    """Two-tile configuration counts per level; stabilization witnesses FLC."""
    return [len(two_tile_configurations(rule, n, seed))
            for n in range(1, max_level + 1)]
