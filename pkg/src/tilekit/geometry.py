"""Exact polygon geometry over a number field, for ambient dimension 1 or 2.

Vertices are field-element coordinate tuples, areas come from the shoelace
formula, intersection areas from ear-clipping triangulation plus convex
clipping of triangle pairs.  Every predicate (orientation, containment,
segment intersection) reduces to exact sign decisions in the field, so two
supports either genuinely share interior volume or they do not; there is no
epsilon anywhere.

One-dimensional "polygons" are segments stored as a two-vertex list; the same
public operations apply with interval arithmetic underneath.
"""

from __future__ import annotations

from fractions import Fraction
from typing import Iterable, Sequence

from .algebra import FieldElement, NumberField, Q
from .errors import BadExpansion, DegeneratePolygon, SingularMap


class PointK:
    """Point with field-element coordinates; hashable, exactly comparable."""

    __slots__ = ("coords", "_hash")

    def __init__(self, coords: Sequence[FieldElement]):
        self.coords = tuple(coords)
        self._hash = None

    @property
    def dim(self) -> int:
        return len(self.coords)

    def __add__(self, o: "PointK") -> "PointK":
        return PointK(tuple(a + b for a, b in zip(self.coords, o.coords)))

    def __sub__(self, o: "PointK") -> "PointK":
        return PointK(tuple(a - b for a, b in zip(self.coords, o.coords)))

    def __neg__(self) -> "PointK":
        return PointK(tuple(-a for a in self.coords))

    def scale(self, s: FieldElement) -> "PointK":
        return PointK(tuple(s * a for a in self.coords))

    def is_zero(self) -> bool:
        return all(c.is_zero() for c in self.coords)

    def __eq__(self, o):
        return isinstance(o, PointK) and self.coords == o.coords

    def __hash__(self):
        if self._hash is None:
            self._hash = hash(tuple(c.coeffs for c in self.coords))
        return self._hash

    def key(self):
        """Deterministic sort key (coefficient-lexicographic, not geometric)."""
        return tuple(c.coeffs for c in self.coords)

    def approx(self) -> tuple[float, ...]:
        return tuple(c.approx() for c in self.coords)

    def __repr__(self):
        return "PointK(" + ", ".join(repr([str(x) for x in c.coeffs]) for c in self.coords) + ")"


def point(field: NumberField, *coords) -> PointK:
    """Convenience constructor: each coordinate is a rational or a coefficient list."""
    out = []
    for c in coords:
        if isinstance(c, FieldElement):
            out.append(c)
        elif isinstance(c, (list, tuple)):
            out.append(field.element(c))
        else:
            out.append(field.from_rational(Fraction(c)))
    return PointK(tuple(out))


class LinearMapK:
    """Square matrix (d <= 2) of field elements."""

    __slots__ = ("rows", "_det")

    def __init__(self, rows: Sequence[Sequence[FieldElement]]):
        self.rows = tuple(tuple(r) for r in rows)
        d = len(self.rows)
        if any(len(r) != d for r in self.rows) or d not in (1, 2):
            raise ValueError("LinearMapK must be 1x1 or 2x2")
        self._det = None

    @property
    def dim(self) -> int:
        return len(self.rows)

    def apply(self, p: PointK) -> PointK:
        return PointK(tuple(
            sum((self.rows[i][j] * p.coords[j] for j in range(self.dim)),
                start=self.rows[0][0].field.zero)
            for i in range(self.dim)))

    def compose(self, o: "LinearMapK") -> "LinearMapK":
        d = self.dim
        z = self.rows[0][0].field.zero
        return LinearMapK([[sum((self.rows[i][k] * o.rows[k][j] for k in range(d)), start=z)
                            for j in range(d)] for i in range(d)])

    def det(self) -> FieldElement:
        if self._det is None:
            if self.dim == 1:
                self._det = self.rows[0][0]
            else:
                a, b = self.rows[0]
                c, d = self.rows[1]
                self._det = a * d - b * c
        return self._det

    def trace(self) -> FieldElement:
        t = self.rows[0][0]
        if self.dim == 2:
            t = t + self.rows[1][1]
        return t

    def inverse(self) -> "LinearMapK":
        dt = self.det()
        if dt.is_zero():
            raise SingularMap("matrix has zero determinant")
        if self.dim == 1:
            return LinearMapK([[dt.inverse()]])
        a, b = self.rows[0]
        c, d = self.rows[1]
        inv = dt.inverse()
        return LinearMapK([[d * inv, -b * inv], [-c * inv, a * inv]])

    def power(self, n: int) -> "LinearMapK":
        if n < 0:
            return self.inverse().power(-n)
        fld = self.rows[0][0].field
        r = identity_map(fld, self.dim)
        b = self
        while n:
            if n & 1:
                r = r.compose(b)
            b = b.compose(b)
            n >>= 1
        return r

    def is_scalar(self) -> bool:
        if self.dim == 1:
            return True
        return (self.rows[0][1].is_zero() and self.rows[1][0].is_zero()
                and self.rows[0][0] == self.rows[1][1])

    def scalar(self) -> FieldElement:
        if not self.is_scalar():
            raise ValueError("map is not scalar")
        return self.rows[0][0]

    def eigenvalues_in_field(self) -> list[FieldElement] | None:
        """Eigenvalues as field elements when they live in the field, else None.

        Covers the desk-scale cases: dimension one, scalar maps, and rational
        matrices whose discriminant is a rational perfect square.
        """
        if self.dim == 1:
            return [self.rows[0][0]]
        tr, dt = self.trace(), self.det()
        disc = tr * tr - dt * 4
        if disc.is_zero():
            half = tr / 2
            return [half, half]
        if disc.is_rational():
            d = disc.as_fraction()
            if d > 0:
                num, den = d.numerator, d.denominator
                rn, rd = _isqrt_exact(num), _isqrt_exact(den)
                if rn is not None and rd is not None:
                    s = tr.field.from_rational(Fraction(rn, rd))
                    return [(tr + s) / 2, (tr - s) / 2]
            return None
        return None

    def check_expansion(self):
        """Raise BadExpansion unless every eigenvalue has modulus > 1.

        Decided exactly: dimension one compares q^2 with 1; dimension two
        splits on the sign of the discriminant (complex pair has modulus^2 =
        det, real pair is located against +-1 by comparing sqrt(disc) with
        rational offsets of the trace, all inside the field).
        """
        if self.dim == 1:
            q = self.rows[0][0]
            if not (q * q > 1):
                raise BadExpansion(f"1d expansion factor {q!r} has modulus <= 1")
            return
        tr, dt = self.trace(), self.det()
        disc = tr * tr - dt * 4
        if disc < 0:
            if not (dt > 1):
                raise BadExpansion("complex eigenvalue pair has modulus <= 1")
            return

        def cmp_sqrt(c: FieldElement) -> int:
            # sign of sqrt(disc) - c   (disc >= 0 here)
            if c < 0:
                return 1
            return (disc - c * c).sign()

        two = tr.field.from_rational(2)
        # lam+ = (tr + s)/2 : outside [-1,1] iff s > 2 - tr or s < -2 - tr
        plus_ok = cmp_sqrt(two - tr) > 0 or cmp_sqrt(-two - tr) < 0
        # lam- = (tr - s)/2 : outside [-1,1] iff s > 2 + tr or s < tr - 2
        minus_ok = cmp_sqrt(two + tr) > 0 or cmp_sqrt(tr - two) < 0
        if not (plus_ok and minus_ok):
            raise BadExpansion("real eigenvalue with modulus <= 1")

    def __eq__(self, o):
        return isinstance(o, LinearMapK) and self.rows == o.rows

    def __hash__(self):
        return hash(tuple(tuple(c.coeffs for c in r) for r in self.rows))

    def __repr__(self):
        return f"LinearMapK({[[ [str(x) for x in c.coeffs] for c in r] for r in self.rows]})"


def identity_map(field: NumberField, d: int) -> LinearMapK:
    if d == 1:
        return LinearMapK([[field.one]])
    return LinearMapK([[field.one, field.zero], [field.zero, field.one]])


def scalar_map(lam: FieldElement, d: int) -> LinearMapK:
    f = lam.field
    if d == 1:
        return LinearMapK([[lam]])
    return LinearMapK([[lam, f.zero], [f.zero, lam]])


def _isqrt_exact(n: int) -> int | None:
    import math
    if n < 0:
        return None
    r = math.isqrt(n)
    return r if r * r == n else None


# ----------------------------------------------------------------------------
# predicates
# ----------------------------------------------------------------------------

def cross(o: PointK, a: PointK, b: PointK) -> FieldElement:
    (ox, oy), (ax, ay), (bx, by) = o.coords, a.coords, b.coords
    return (ax - ox) * (by - oy) - (ay - oy) * (bx - ox)


def _on_segment(a: PointK, b: PointK, p: PointK) -> bool:
    """p collinear with ab assumed; is p within the closed segment box?"""
    for pa, aa, bb in zip(p.coords, a.coords, b.coords):
        lo, hi = (aa, bb) if aa <= bb else (bb, aa)
        if pa < lo or pa > hi:
            return False
    return True


def segments_intersect(a: PointK, b: PointK, c: PointK, d: PointK) -> bool:
    """Closed-segment intersection test, collinear overlaps included."""
    d1 = cross(c, d, a).sign()
    d2 = cross(c, d, b).sign()
    d3 = cross(a, b, c).sign()
    d4 = cross(a, b, d).sign()
    if ((d1 > 0 and d2 < 0) or (d1 < 0 and d2 > 0)) and \
       ((d3 > 0 and d4 < 0) or (d3 < 0 and d4 > 0)):
        return True
    if d1 == 0 and _on_segment(c, d, a):
        return True
    if d2 == 0 and _on_segment(c, d, b):
        return True
    if d3 == 0 and _on_segment(a, b, c):
        return True
    if d4 == 0 and _on_segment(a, b, d):
        return True
    return False


def _point_in_triangle(p: PointK, a: PointK, b: PointK, c: PointK,
                       strict: bool = False) -> bool:
    s1 = cross(a, b, p).sign()
    s2 = cross(b, c, p).sign()
    s3 = cross(c, a, p).sign()
    if strict:
        return s1 > 0 and s2 > 0 and s3 > 0
    return s1 >= 0 and s2 >= 0 and s3 >= 0


# ----------------------------------------------------------------------------
# polygons
# ----------------------------------------------------------------------------

class PolygonK:
    """Simple polygon with positive area (or a 1d segment), immutable."""

    __slots__ = ("vertices", "_area", "_tris", "_bbox", "_fbox")

    def __init__(self, vertices: Sequence[PointK], validate: bool = True):
        vs = list(vertices)
        if not vs:
            raise DegeneratePolygon("no vertices")
        d = vs[0].dim
        if d == 1:
            if len(vs) != 2:
                raise DegeneratePolygon("1d support needs exactly two endpoints")
            if validate and not (vs[0].coords[0] < vs[1].coords[0]):
                raise DegeneratePolygon("1d support must have positive length")
            self.vertices = tuple(vs)
        else:
            vs = _strip_collinear(vs)
            if len(vs) < 3:
                raise DegeneratePolygon("fewer than three effective vertices")
            if _signed_area2(vs).sign() < 0:
                vs.reverse()
            if validate:
                if _signed_area2(vs).sign() <= 0:
                    raise DegeneratePolygon("zero signed area")
                _check_simple(vs)
            self.vertices = tuple(vs)
        self._area = None
        self._tris = None
        self._bbox = None
        self._fbox = None

    @property
    def dim(self) -> int:
        return self.vertices[0].dim

    def area(self) -> FieldElement:
        if self._area is None:
            if self.dim == 1:
                self._area = self.vertices[1].coords[0] - self.vertices[0].coords[0]
            else:
                two = self.vertices[0].coords[0].field.from_rational(2)
                self._area = _signed_area2(list(self.vertices)) / two
        return self._area

    def triangulate(self) -> list[tuple[PointK, PointK, PointK]]:
        """Ear-clipping with exact predicates; cached."""
        if self.dim == 1:
            raise ValueError("no triangulation in dimension one")
        if self._tris is None:
            self._tris = _ear_clip(list(self.vertices))
        return self._tris

    def bbox(self):
        if self._bbox is None:
            d = self.dim
            self._bbox = tuple(
                (min((v.coords[i] for v in self.vertices)),
                 max((v.coords[i] for v in self.vertices)))
            for i in range(d))
        return self._bbox

    def fbox(self) -> tuple[float, float, float, float]:
        """Float bounding box, for candidate prefiltering only."""
        if self._fbox is None:
            bb = self.bbox()
            if self.dim == 1:
                lo, hi = bb[0]
                self._fbox = (lo.approx(), 0.0, hi.approx(), 0.0)
            else:
                self._fbox = (bb[0][0].approx(), bb[1][0].approx(),
                              bb[0][1].approx(), bb[1][1].approx())
        return self._fbox

    def translate(self, v: PointK) -> "PolygonK":
        p = PolygonK.__new__(PolygonK)
        p.vertices = tuple(w + v for w in self.vertices)
        p._area = self._area
        p._tris = None
        p._bbox = None
        p._fbox = None
        return p

    def apply_map(self, m: LinearMapK) -> "PolygonK":
        vs = [m.apply(v) for v in self.vertices]
        if self.dim == 1:
            if vs[0].coords[0] > vs[1].coords[0]:
                vs.reverse()
            return PolygonK(vs, validate=False)
        if m.det().sign() < 0:
            vs.reverse()
        out = PolygonK.__new__(PolygonK)
        out.vertices = tuple(vs)
        out._area = None if self._area is None else self._area * abs(m.det())
        out._tris = None
        out._bbox = None
        out._fbox = None
        return out

    def contains_point(self, p: PointK, strict: bool = False) -> bool:
        if self.dim == 1:
            a, b = self.vertices[0].coords[0], self.vertices[1].coords[0]
            x = p.coords[0]
            return (a < x < b) if strict else (a <= x <= b)
        if strict:
            # strictly inside iff inside the closed region and not on an edge
            if not self.contains_point(p, strict=False):
                return False
            n = len(self.vertices)
            for i in range(n):
                a, b = self.vertices[i], self.vertices[(i + 1) % n]
                if cross(a, b, p).sign() == 0 and _on_segment(a, b, p):
                    return False
            return True
        return any(_point_in_triangle(p, *t) for t in self.triangulate())

    def __eq__(self, o):
        return isinstance(o, PolygonK) and self.vertices == o.vertices

    def __hash__(self):
        return hash(self.vertices)

    def __repr__(self):
        return f"PolygonK({len(self.vertices)} vertices, d={self.dim})"


def _strip_collinear(vs: list[PointK]) -> list[PointK]:
    # remove repeated points, then vertices with collinear neighbours
    out = [v for i, v in enumerate(vs) if v != vs[(i + 1) % len(vs)]]
    changed = True
    while changed and len(out) >= 3:
        changed = False
        for i in range(len(out)):
            a = out[(i - 1) % len(out)]
            b = out[i]
            c = out[(i + 1) % len(out)]
            if cross(a, b, c).sign() == 0:
                out.pop(i)
                changed = True
                break
    return out


def _signed_area2(vs: list[PointK]) -> FieldElement:
    f = vs[0].coords[0].field
    s = f.zero
    n = len(vs)
    for i in range(n):
        (x1, y1) = vs[i].coords
        (x2, y2) = vs[(i + 1) % n].coords
        s = s + (x1 * y2 - x2 * y1)
    return s


def _check_simple(vs: list[PointK]):
    n = len(vs)
    if len({v for v in vs}) != n:
        raise DegeneratePolygon("repeated vertex")
    for i in range(n):
        a, b = vs[i], vs[(i + 1) % n]
        for j in range(i + 1, n):
            if j == i or (j + 1) % n == i or (i + 1) % n == j:
                continue
            c, d = vs[j], vs[(j + 1) % n]
            if segments_intersect(a, b, c, d):
                raise DegeneratePolygon(f"edges {i} and {j} intersect")


def _ear_clip(vs: list[PointK]) -> list[tuple[PointK, PointK, PointK]]:
    tris = []
    work = list(vs)
    # conservative pass rejects ears with any vertex on the closed candidate
    # triangle; if that stalls, allow boundary contact (still exact)
    for strict_pass in (False, True):
        progress = True
        while len(work) > 3 and progress:
            progress = False
            n = len(work)
            for i in range(n):
                a, b, c = work[(i - 1) % n], work[i], work[(i + 1) % n]
                if cross(a, b, c).sign() <= 0:
                    continue
                blocked = False
                for u in work:
                    if u in (a, b, c):
                        continue
                    if _point_in_triangle(u, a, b, c, strict=strict_pass):
                        blocked = True
                        break
                if not blocked:
                    tris.append((a, b, c))
                    work.pop(i)
                    progress = True
                    break
        if len(work) == 3:
            break
    if len(work) != 3:
        raise DegeneratePolygon("ear clipping failed on a non-simple polygon")
    tris.append(tuple(work))
    return tris


# ----------------------------------------------------------------------------
# intersection of supports
# ----------------------------------------------------------------------------

def _clip_convex(subject: list[PointK], a: PointK, b: PointK) -> list[PointK]:
    """Keep the part of a convex polygon on the left of directed line ab."""
    out: list[PointK] = []
    n = len(subject)
    if n == 0:
        return out
    prev = subject[-1]
    prev_side = cross(a, b, prev).sign()
    for cur in subject:
        cur_side = cross(a, b, cur).sign()
        if cur_side >= 0:
            if prev_side < 0:
                out.append(_line_intersect(a, b, prev, cur))
            out.append(cur)
        elif prev_side >= 0:
            out.append(_line_intersect(a, b, prev, cur))
        prev, prev_side = cur, cur_side
    if not out:
        return out
    # drop consecutive duplicates
    return [p for i, p in enumerate(out) if p != out[(i + 1) % len(out)]]


def _line_intersect(a: PointK, b: PointK, p: PointK, q: PointK) -> PointK:
    """Intersection of line ab with segment pq (signs guarantee crossing)."""
    t_num = cross(a, b, p)
    t_den = t_num - cross(a, b, q)
    t = t_num / t_den
    return PointK(tuple(pc + t * (qc - pc) for pc, qc in zip(p.coords, q.coords)))


def _tri_pair_area(t1, t2) -> FieldElement:
    f = t1[0].coords[0].field
    poly = _clip_convex(list(t1), t2[0], t2[1])
    if len(poly) >= 3:
        poly = _clip_convex(poly, t2[1], t2[2])
    if len(poly) >= 3:
        poly = _clip_convex(poly, t2[2], t2[0])
    if len(poly) < 3:
        return f.zero
    two = f.from_rational(2)
    return _signed_area2(poly) / two


def interior_overlap(p: PolygonK, q: PolygonK, shift: PointK | None = None):
    """Classify the intersection of supp(p)+shift with supp(q).

    Returns (kind, area) with kind in {"disjoint", "boundary_only",
    "overlap"}; area is the exact shared interior volume (zero unless kind is
    "overlap").
    """
    f = p.vertices[0].coords[0].field
    if p.dim == 1:
        a1 = p.vertices[0].coords[0]
        b1 = p.vertices[1].coords[0]
        if shift is not None:
            a1, b1 = a1 + shift.coords[0], b1 + shift.coords[0]
        a2, b2 = q.vertices[0].coords[0], q.vertices[1].coords[0]
        lo = a1 if a1 > a2 else a2
        hi = b1 if b1 < b2 else b2
        s = (hi - lo).sign()
        if s > 0:
            return "overlap", hi - lo
        return ("boundary_only", f.zero) if s == 0 else ("disjoint", f.zero)

    # float prefilter: reject only when boxes are apart by a clear margin,
    # so double rounding can never hide a true contact
    pf, qf = p.fbox(), q.fbox()
    sx, sy = shift.approx() if shift is not None else (0.0, 0.0)
    if (pf[2] + sx < qf[0] - 1e-6 or qf[2] < pf[0] + sx - 1e-6
            or pf[3] + sy < qf[1] - 1e-6 or qf[3] < pf[1] + sy - 1e-6):
        return "disjoint", f.zero

    # bbox reject (exact comparisons, shift applied to p's box)
    pb, qb = p.bbox(), q.bbox()
    for i in range(2):
        plo, phi = pb[i]
        if shift is not None:
            plo, phi = plo + shift.coords[i], phi + shift.coords[i]
        if phi < qb[i][0] or qb[i][1] < plo:
            return "disjoint", f.zero
    # reuse cached triangulations; translate p's triangles on the fly
    tris_p = p.triangulate()
    if shift is not None:
        tris_p = [(a + shift, b + shift, c + shift) for (a, b, c) in tris_p]
    total = f.zero
    for t1 in tris_p:
        for t2 in q.triangulate():
            total = total + _tri_pair_area(t1, t2)
    if total.sign() > 0:
        return "overlap", total
    # area zero: boundary contact or genuinely apart
    pverts = [v + shift for v in p.vertices] if shift is not None else list(p.vertices)
    for v in pverts:
        if q.contains_point(v):
            return "boundary_only", f.zero
    tris_p_closed = tris_p
    for v in q.vertices:
        if any(_point_in_triangle(v, *t) for t in tris_p_closed):
            return "boundary_only", f.zero
    n, m = len(pverts), len(q.vertices)
    for i in range(n):
        a, b = pverts[i], pverts[(i + 1) % n]
        for j in range(m):
            c, d = q.vertices[j], q.vertices[(j + 1) % m]
            if segments_intersect(a, b, c, d):
                return "boundary_only", f.zero
    return "disjoint", f.zero


def supports_touch(p: PolygonK, q: PolygonK, shift: PointK | None = None) -> bool:
    kind, _ = interior_overlap(p, q, shift)
    return kind != "disjoint"
