"""Exact arithmetic in a real algebraic number field Q(theta).

An element of Q(theta) is a degree-g vector of rationals over the power basis
1, theta, ..., theta^{g-1}, reduced modulo the monic irreducible minimal
polynomial of theta.  The distinguished real root gives the geometric
embedding; the remaining conjugates are kept as certified isolating boxes so
modulus comparisons (Pisot tests, internal-space bounds) are decided exactly.

Sign decisions never rely on floating point: a nonzero coefficient vector
cannot vanish at theta (the power basis is a basis), so adaptive refinement of
the isolating interval always terminates.  Floating point appears only as a
seed for complex root isolation (numpy.roots); every box is then certified by
an interval Newton step over rational intervals.
"""

from __future__ import annotations

from fractions import Fraction
from typing import Iterable, Sequence

import numpy as np

from .errors import (
    MultipleRootsInInterval,
    NoRootInInterval,
    NotAlgebraicInteger,
    ReduciblePolynomial,
)

Q = Fraction


def _frac(x) -> Fraction:
    if isinstance(x, Fraction):
        return x
    if isinstance(x, int):
        return Fraction(x)
    if isinstance(x, str):
        return Fraction(x)
    raise TypeError(f"cannot coerce {x!r} to a rational")


# ----------------------------------------------------------------------------
# dense rational polynomials, ascending coefficients
# ----------------------------------------------------------------------------

def poly_trim(c: Sequence[Fraction]) -> tuple[Fraction, ...]:
    c = list(c)
    while c and c[-1] == 0:
        c.pop()
    return tuple(c)


def poly_add(a, b):
    n = max(len(a), len(b))
    return poly_trim([(a[i] if i < len(a) else 0) + (b[i] if i < len(b) else 0)
                      for i in range(n)])


def poly_sub(a, b):
    n = max(len(a), len(b))
    return poly_trim([(a[i] if i < len(a) else 0) - (b[i] if i < len(b) else 0)
                      for i in range(n)])


def poly_mul(a, b):
    if not a or not b:
        return ()
    out = [Q(0)] * (len(a) + len(b) - 1)
    for i, ai in enumerate(a):
        if ai:
            for j, bj in enumerate(b):
                out[i + j] += ai * bj
    return poly_trim(out)


def poly_scale(a, s):
    return poly_trim([ai * s for ai in a])


def poly_divmod(a, b):
    """Quotient and remainder in Q[x]; b must be nonzero."""
    a = list(a)
    q = [Q(0)] * max(0, len(a) - len(b) + 1)
    inv = 1 / b[-1]
    while len(a) >= len(b) and poly_trim(a):
        if a[-1] == 0:
            a.pop()
            continue
        k = len(a) - len(b)
        f = a[-1] * inv
        q[k] = f
        for i, bi in enumerate(b):
            a[i + k] -= f * bi
        a.pop()
    return poly_trim(q), poly_trim(a)


def poly_gcd_monic(a, b):
    a, b = poly_trim(a), poly_trim(b)
    while b:
        a, b = b, poly_divmod(a, b)[1]
    if not a:
        return ()
    return poly_scale(a, 1 / a[-1])


def poly_eval(c, x: Fraction) -> Fraction:
    r = Q(0)
    for ci in reversed(c):
        r = r * x + ci
    return r


def poly_deriv(c):
    return poly_trim([i * c[i] for i in range(1, len(c))])


def poly_from_ints(coeffs: Iterable) -> tuple[Fraction, ...]:
    return poly_trim([_frac(c) for c in coeffs])


# ----------------------------------------------------------------------------
# rational intervals and complex boxes
# ----------------------------------------------------------------------------

class Iv:
    """Closed rational interval [lo, hi]."""

    __slots__ = ("lo", "hi")

    def __init__(self, lo, hi):
        self.lo = _frac(lo)
        self.hi = _frac(hi)
        if self.lo > self.hi:
            raise ValueError("empty interval")

    def __repr__(self):
        return f"Iv({self.lo}, {self.hi})"

    @property
    def width(self) -> Fraction:
        return self.hi - self.lo

    @property
    def mid(self) -> Fraction:
        return (self.lo + self.hi) / 2

    def __neg__(self):
        return Iv(-self.hi, -self.lo)

    def __add__(self, o):
        o = _as_iv(o)
        return Iv(self.lo + o.lo, self.hi + o.hi)

    def __sub__(self, o):
        o = _as_iv(o)
        return Iv(self.lo - o.hi, self.hi - o.lo)

    def __mul__(self, o):
        o = _as_iv(o)
        ps = (self.lo * o.lo, self.lo * o.hi, self.hi * o.lo, self.hi * o.hi)
        return Iv(min(ps), max(ps))

    def sq(self) -> "Iv":
        # tighter than self * self when 0 is inside
        a, b = abs(self.lo), abs(self.hi)
        hi = max(a, b) ** 2
        lo = Q(0) if self.lo <= 0 <= self.hi else min(a, b) ** 2
        return Iv(lo, hi)

    def contains_zero(self) -> bool:
        return self.lo <= 0 <= self.hi

    def contains(self, x: Fraction) -> bool:
        return self.lo <= x <= self.hi

    def intersects(self, o: "Iv") -> bool:
        return self.lo <= o.hi and o.lo <= self.hi

    def strictly_inside(self, o: "Iv") -> bool:
        return o.lo < self.lo and self.hi < o.hi

    def recip(self) -> "Iv":
        if self.contains_zero():
            raise ZeroDivisionError("interval contains zero")
        return Iv(1 / self.hi, 1 / self.lo)


def _as_iv(x) -> Iv:
    if isinstance(x, Iv):
        return x
    f = _frac(x)
    return Iv(f, f)


class Box:
    """Rectangle re x im in the complex plane with rational corners."""

    __slots__ = ("re", "im")

    def __init__(self, re: Iv, im: Iv):
        self.re = re
        self.im = im

    def __repr__(self):
        return f"Box({self.re}, {self.im})"

    @property
    def width(self) -> Fraction:
        return max(self.re.width, self.im.width)

    def __add__(self, o):
        return Box(self.re + o.re, self.im + o.im)

    def __sub__(self, o):
        return Box(self.re - o.re, self.im - o.im)

    def __mul__(self, o):
        return Box(self.re * o.re - self.im * o.im,
                   self.re * o.im + self.im * o.re)

    def conj(self) -> "Box":
        return Box(self.re, -self.im)

    def abs_sq(self) -> Iv:
        return self.re.sq() + self.im.sq()

    def contains_zero(self) -> bool:
        return self.re.contains_zero() and self.im.contains_zero()

    def recip(self) -> "Box":
        d = self.abs_sq()
        r = d.recip()
        return Box(self.re * r, (-self.im) * r)

    def intersects(self, o: "Box") -> bool:
        return self.re.intersects(o.re) and self.im.intersects(o.im)

    def strictly_inside(self, o: "Box") -> bool:
        return self.re.strictly_inside(o.re) and self.im.strictly_inside(o.im)

    def intersect(self, o: "Box") -> "Box":
        return Box(Iv(max(self.re.lo, o.re.lo), min(self.re.hi, o.re.hi)),
                   Iv(max(self.im.lo, o.im.lo), min(self.im.hi, o.im.hi)))

    def is_real(self) -> bool:
        return self.im.lo == 0 == self.im.hi


def box_from_iv(iv: Iv) -> Box:
    return Box(iv, Iv(0, 0))


def poly_eval_iv(c, x: Iv) -> Iv:
    r = _as_iv(Q(0))
    for ci in reversed(c):
        r = r * x + _as_iv(ci)
    return r


def poly_eval_box(c, x: Box) -> Box:
    r = Box(Iv(0, 0), Iv(0, 0))
    for ci in reversed(c):
        r = r * x + Box(_as_iv(ci), Iv(0, 0))
    return r


def _poly_eval_cplx(c, re: Fraction, im: Fraction) -> tuple[Fraction, Fraction]:
    rr, ri = Q(0), Q(0)
    for ci in reversed(c):
        rr, ri = rr * re - ri * im + ci, rr * im + ri * re
    return rr, ri


# ----------------------------------------------------------------------------
# real root isolation (Sturm) and complex root certification (interval Newton)
# ----------------------------------------------------------------------------

def sturm_sequence(p):
    seq = [poly_trim(p), poly_deriv(p)]
    while seq[-1]:
        r = poly_divmod(seq[-2], seq[-1])[1]
        if not r:
            break
        seq.append(poly_scale(r, -1))
    return seq


def _sign_changes(seq, x: Fraction) -> int:
    signs = []
    for s in seq:
        v = poly_eval(s, x)
        if v != 0:
            signs.append(1 if v > 0 else -1)
    return sum(1 for a, b in zip(signs, signs[1:]) if a != b)


def count_real_roots(p, lo: Fraction, hi: Fraction) -> int:
    """Distinct real roots in (lo, hi]; p squarefree is assumed."""
    seq = sturm_sequence(p)
    return _sign_changes(seq, lo) - _sign_changes(seq, hi)


def root_bound(p) -> Fraction:
    lead = p[-1]
    return 1 + max((abs(c / lead) for c in p[:-1]), default=Q(0))


def isolate_real_roots(p) -> list[Iv]:
    """Disjoint isolating intervals for all real roots, ascending.

    Rational roots (degree one only, for irreducible input) come back as
    point intervals; all other roots are interior to their interval.
    """
    p = poly_trim(p)
    if len(p) == 2:
        r = -p[0] / p[1]
        return [Iv(r, r)]
    b = root_bound(p)
    lo, hi = -b - 1, b + 1
    seq = sturm_sequence(p)

    def count(a, c):
        return _sign_changes(seq, a) - _sign_changes(seq, c)

    out: list[Iv] = []

    def rec(a, c, n):
        if n == 0:
            return
        if n == 1:
            out.append(Iv(a, c))
            return
        m = (a + c) / 2
        while poly_eval(p, m) == 0:
            # rational root sitting on the cut; shift the cut
            m = (a + m) / 2
        rec(a, m, count(a, m))
        rec(m, c, count(m, c))

    rec(lo, hi, count(lo, hi))
    return out


def refine_real_root(p, iv: Iv, steps: int = 1) -> Iv:
    """Bisection keeping exactly one root inside; exact signs only."""
    lo, hi = iv.lo, iv.hi
    flo = poly_eval(p, lo)
    if flo == 0:  # endpoint root can only happen for degree-1 data
        return Iv(lo, lo)
    slo = flo > 0
    for _ in range(steps):
        if lo == hi:
            break
        m = (lo + hi) / 2
        fm = poly_eval(p, m)
        if fm == 0:
            lo = hi = m
            break
        if (fm > 0) == slo:
            lo = m
        else:
            hi = m
    return Iv(lo, hi)


def _newton_certify(p, dp, box: Box) -> Box | None:
    """One interval Newton step; returns a contracted certified box or None."""
    mre, mim = box.re.mid, box.im.mid
    pr, pi = _poly_eval_cplx(p, mre, mim)
    dpx = poly_eval_box(dp, box)
    if dpx.contains_zero():
        return None
    quot = Box(_as_iv(pr), _as_iv(pi)) * dpx.recip()
    n = Box(_as_iv(mre), _as_iv(mim)) - quot
    if n.strictly_inside(box):
        return n.intersect(box)
    return None


def isolate_complex_roots(p) -> list[Box]:
    """Certified disjoint boxes for the strictly complex roots (upper and
    lower half planes both included), using numpy seeds plus interval Newton."""
    p = poly_trim(p)
    g = len(p) - 1
    n_real = count_real_roots(p, -root_bound(p) - 1, root_bound(p) + 1)
    n_cplx = g - n_real
    if n_cplx == 0:
        return []
    dp = poly_deriv(p)
    coeffs = [float(c) for c in reversed(p)]
    seeds = [z for z in np.roots(coeffs) if abs(z.imag) > 1e-9]
    if len(seeds) != n_cplx:
        # seeds too close to the axis; keep those farthest from it
        allz = sorted(np.roots(coeffs), key=lambda z: -abs(z.imag))
        seeds = list(allz[:n_cplx])
    # polish seeds with plain Newton so the certification radius can be generous
    def pf(z):
        r = 0j
        for c in coeffs:
            r = r * z + c
        return r

    def dpf(z):
        r = 0j
        dco = [float(c) for c in reversed(dp)]
        for c in dco:
            r = r * z + c
        return r

    boxes: list[Box] = []
    for z in seeds:
        for _ in range(40):
            d = dpf(z)
            if d == 0:
                break
            step = pf(z) / d
            z -= step
            if abs(step) < 1e-14:
                break
        sep = min((abs(z - w) for w in seeds if abs(z - w) > 1e-9), default=1.0)
        radius = Q(min(sep / 4, 0.25)).limit_denominator(10 ** 6)
        cre, cim = Q(z.real).limit_denominator(10 ** 12), Q(z.imag).limit_denominator(10 ** 12)
        box = None
        r = radius
        for _ in range(60):
            cand = Box(Iv(cre - r, cre + r), Iv(cim - r, cim + r))
            got = _newton_certify(p, dp, cand)
            if got is not None:
                box = got
                break
            r = r / 2
        if box is None:
            raise ArithmeticError("complex root certification failed")
        boxes.append(box)
    # tighten until pairwise disjoint
    changed = True
    while changed:
        changed = False
        for i in range(len(boxes)):
            for j in range(i + 1, len(boxes)):
                if boxes[i].intersects(boxes[j]):
                    boxes[i] = _newton_certify(p, dp, boxes[i]) or boxes[i]
                    boxes[j] = _newton_certify(p, dp, boxes[j]) or boxes[j]
                    changed = True
    return boxes


# ----------------------------------------------------------------------------
# number field
# ----------------------------------------------------------------------------

class _RootState:
    """Mutable isolating region for one conjugate; refinement is monotone, so
    sharing between threads is benign (worst case repeated work)."""

    __slots__ = ("poly", "dpoly", "iv", "box", "is_real")

    def __init__(self, poly, iv=None, box=None):
        self.poly = poly
        self.dpoly = poly_deriv(poly)
        self.iv = iv
        self.box = box
        self.is_real = iv is not None

    def as_box(self) -> Box:
        return box_from_iv(self.iv) if self.is_real else self.box

    def refine(self):
        if self.is_real:
            self.iv = refine_real_root(self.poly, self.iv, steps=4)
        else:
            got = _newton_certify(self.poly, self.dpoly, self.box)
            if got is not None and got.width < self.box.width:
                self.box = got
            else:
                # bisect the wider side and re-certify the half that works
                b = self.box
                if b.re.width >= b.im.width:
                    m = b.re.mid
                    halves = [Box(Iv(b.re.lo, m), b.im), Box(Iv(m, b.re.hi), b.im)]
                else:
                    m = b.im.mid
                    halves = [Box(b.re, Iv(b.im.lo, m)), Box(b.re, Iv(m, b.im.hi))]
                for h in halves:
                    got = _newton_certify(self.poly, self.dpoly, h)
                    if got is not None:
                        self.box = got
                        return
                raise ArithmeticError("box refinement stalled")


def _isolate_all_roots(poly) -> list[_RootState]:
    states = [_RootState(poly, iv=iv) for iv in isolate_real_roots(poly)]
    states += [_RootState(poly, box=b) for b in isolate_complex_roots(poly)]
    states.sort(key=lambda s: (s.as_box().re.lo, s.as_box().im.lo))
    return states


def _is_irreducible(p) -> bool:
    """Irreducibility over Q for monic integer p of desk-scale degree.

    Strategy: strip rational roots, then try to reconstruct an integer factor
    of degree k <= deg/2 from every subset of numerically approximated roots;
    candidates are verified by exact division, so there are no false positives,
    and at these degrees the double-precision roots are accurate enough that a
    true factor is always recovered.
    """
    p = poly_trim(p)
    g = len(p) - 1
    if g <= 1:
        return True
    # rational root test (monic: integer roots divide the constant term)
    c0 = p[0]
    if c0 == 0:
        return False
    for r in _int_divisors(int(c0)):
        if poly_eval(p, Q(r)) == 0:
            return False
    if g <= 3:
        return True  # no rational root and degree <= 3
    roots = np.roots([float(c) for c in reversed(p)])
    n = len(roots)
    from itertools import combinations
    for k in range(2, g // 2 + 1):
        for idx in combinations(range(n), k):
            prod = np.poly1d([1.0])
            for i in idx:
                prod = prod * np.poly1d([1.0, -roots[i]])
            cand = [c.real if hasattr(c, "real") else c for c in prod.coeffs]
            if any(abs(c - round(c.real if hasattr(c, 'real') else c)) > 1e-6 for c in cand):
                continue
            cand_poly = poly_from_ints([int(round(c.real if hasattr(c, 'real') else c))
                                        for c in reversed(list(prod.coeffs))])
            if len(cand_poly) - 1 != k:
                continue
            q, r = poly_divmod(p, cand_poly)
            if not r and len(q) > 1:
                return False
    return True


def irreducible_over_q(p) -> bool:
    """Public face of the irreducibility test for monic integer polynomials
    given as ascending coefficient sequences."""
    return _is_irreducible(poly_trim(tuple(_frac(c) for c in p)))


def _int_divisors(n: int):
    n = abs(n)
    out = []
    d = 1
    while d * d <= n:
        if n % d == 0:
            out += [d, -d, n // d, -(n // d)]
        d += 1
    return sorted(set(out))


class NumberField:
    """Q(theta) for a distinguished real root theta of a monic irreducible
    integer polynomial.  Construct through field_make()."""

    def __init__(self, min_poly: tuple[Fraction, ...], root_states: list[_RootState],
                 distinguished: int):
        self.min_poly = min_poly
        self.degree = len(min_poly) - 1
        self._roots = root_states
        self.root_index = distinguished
        # reduction table: theta^k for k = 0 .. 2g-2 as basis vectors
        g = self.degree
        table = []
        cur = [Q(0)] * g
        if g > 0:
            cur[0] = Q(1)
        table.append(tuple(cur))
        for _ in range(2 * g - 2):
            nxt = [Q(0)] * (g + 1)
            for i, c in enumerate(cur):
                nxt[i + 1] = c
            if nxt[g]:
                lead = nxt[g]
                for i in range(g):
                    nxt[i] -= lead * min_poly[i]
            cur = nxt[:g]
            table.append(tuple(cur))
        self._pow_table = table
        self._zero = FieldElement(self, tuple([Q(0)] * g))
        self._one = self.from_rational(1) if g else self._zero

    # --- constructors ---

    def element(self, coeffs) -> "FieldElement":
        cs = [_frac(c) for c in coeffs]
        if len(cs) > self.degree:
            raise ValueError("coefficient vector longer than field degree")
        cs += [Q(0)] * (self.degree - len(cs))
        return FieldElement(self, tuple(cs))

    def from_rational(self, r) -> "FieldElement":
        cs = [Q(0)] * self.degree
        cs[0] = _frac(r)
        return FieldElement(self, tuple(cs))

    def theta(self) -> "FieldElement":
        if self.degree == 1:
            return self.from_rational(-self.min_poly[0])
        cs = [Q(0)] * self.degree
        cs[1] = Q(1)
        return FieldElement(self, tuple(cs))

    @property
    def zero(self):
        return self._zero

    @property
    def one(self):
        return self._one

    # --- conjugate data ---

    @property
    def conjugate_count(self) -> int:
        return len(self._roots)

    def conjugate_box(self, i: int, max_width: Fraction | None = None) -> Box:
        st = self._roots[i]
        if max_width is not None:
            while st.as_box().width > max_width:
                st.refine()
        return st.as_box()

    def distinguished_interval(self, max_width: Fraction | None = None) -> Iv:
        st = self._roots[self.root_index]
        if max_width is not None:
            while st.iv.width > max_width:
                st.refine()
        return st.iv

    def refine_distinguished(self):
        self._roots[self.root_index].refine()

    def root_float(self) -> float:
        return float(self.distinguished_interval(Q(1, 10 ** 12)).mid)

    # --- reduction ---

    def reduce_product(self, conv: list[Fraction]) -> tuple[Fraction, ...]:
        g = self.degree
        out = [Q(0)] * g
        for k, c in enumerate(conv):
            if c:
                row = self._pow_table[k]
                for i in range(g):
                    if row[i]:
                        out[i] += c * row[i]
        return tuple(out)

    def __repr__(self):
        return f"NumberField(deg={self.degree}, poly={[str(c) for c in self.min_poly]})"

    def __eq__(self, other):
        return isinstance(other, NumberField) and self.min_poly == other.min_poly \
            and self.root_index == other.root_index

    def __hash__(self):
        return hash((self.min_poly, self.root_index))


def field_make(min_poly: Sequence, root_hint: tuple) -> NumberField:
    """Build Q(theta) from integer minimal-polynomial coefficients (ascending)
    and a rational bracketing interval isolating the distinguished real root.

    Raises ReduciblePolynomial / NoRootInInterval / MultipleRootsInInterval.
    """
    p = poly_from_ints(min_poly)
    if len(p) < 2:
        raise ReduciblePolynomial("minimal polynomial must have positive degree")
    if p[-1] != 1:
        raise ReduciblePolynomial("minimal polynomial must be monic")
    if any(c.denominator != 1 for c in p):
        raise NotAlgebraicInteger("minimal polynomial must have integer coefficients")
    if not _is_irreducible(p):
        raise ReduciblePolynomial(f"{[str(c) for c in p]} factors over Q")
    lo, hi = _frac(root_hint[0]), _frac(root_hint[1])
    if lo == hi:
        if poly_eval(p, lo) != 0:
            raise NoRootInInterval(f"no root at {lo}")
    else:
        n = count_real_roots(p, lo, hi)
        if poly_eval(p, lo) == 0:
            n += 1  # count_real_roots uses half-open (lo, hi]
        if n == 0:
            raise NoRootInInterval(f"no root in [{lo}, {hi}]")
        if n > 1:
            raise MultipleRootsInInterval(f"{n} roots in [{lo}, {hi}]")
    states = _isolate_all_roots(p)
    distinguished = None
    for i, st in enumerate(states):
        if not st.is_real:
            continue
        # point intervals are exact rational roots; otherwise shrink until the
        # interval falls inside the hint or provably misses it (the root is
        # irrational while the hint endpoints are rational, so one happens)
        while True:
            if st.iv.width == 0:
                if lo <= st.iv.lo <= hi:
                    distinguished = i
                break
            if lo <= st.iv.lo and st.iv.hi <= hi:
                distinguished = i
                break
            if st.iv.hi < lo or hi < st.iv.lo:
                break
            st.refine()
        if distinguished is not None:
            break
    if distinguished is None:
        raise NoRootInInterval(f"no conjugate isolates inside [{lo}, {hi}]")
    return NumberField(p, states, distinguished)


# ----------------------------------------------------------------------------
# field elements
# ----------------------------------------------------------------------------

class FieldElement:
    """Immutable vector over the power basis; total order through the
    distinguished real embedding."""

    __slots__ = ("field", "coeffs", "_sign", "_hash")

    def __init__(self, field: NumberField, coeffs: tuple[Fraction, ...]):
        self.field = field
        self.coeffs = coeffs
        self._sign = None
        self._hash = None

    # --- arithmetic ---

    def _coerce(self, other) -> "FieldElement":
        if isinstance(other, FieldElement):
            if other.field is not self.field and other.field != self.field:
                raise ValueError("elements from different fields")
            return other
        return self.field.from_rational(_frac(other))

    def __add__(self, other):
        o = self._coerce(other)
        return FieldElement(self.field, tuple(a + b for a, b in zip(self.coeffs, o.coeffs)))

    __radd__ = __add__

    def __sub__(self, other):
        o = self._coerce(other)
        return FieldElement(self.field, tuple(a - b for a, b in zip(self.coeffs, o.coeffs)))

    def __rsub__(self, other):
        return self._coerce(other) - self

    def __neg__(self):
        return FieldElement(self.field, tuple(-a for a in self.coeffs))

    def __mul__(self, other):
        o = self._coerce(other)
        a, b = self.coeffs, o.coeffs
        g = self.field.degree
        conv = [Q(0)] * (2 * g - 1 if g > 1 else 1)
        for i, ai in enumerate(a):
            if ai:
                for j, bj in enumerate(b):
                    if bj:
                        conv[i + j] += ai * bj
        return FieldElement(self.field, self.field.reduce_product(conv))

    __rmul__ = __mul__

    def inverse(self) -> "FieldElement":
        if self.is_zero():
            raise ZeroDivisionError("field element is zero")
        # extended Euclid in Q[x] against the minimal polynomial
        p = self.field.min_poly
        a = poly_trim(self.coeffs)
        r0, r1 = p, a
        s0, s1 = (), (Q(1),)
        while r1:
            q, r = poly_divmod(r0, r1)
            r0, r1 = r1, r
            s0, s1 = s1, poly_sub(s0, poly_mul(q, s1))
        # r0 = gcd (a nonzero constant since min_poly is irreducible)
        c = r0[0]
        inv = poly_scale(s0, 1 / c)
        _, rem = poly_divmod(inv, p)
        return self.field.element(rem)

    def __truediv__(self, other):
        return self * self._coerce(other).inverse()

    def __rtruediv__(self, other):
        return self._coerce(other) / self

    def __pow__(self, n: int):
        if n < 0:
            return self.inverse() ** (-n)
        r = self.field.one
        b = self
        while n:
            if n & 1:
                r = r * b
            b = b * b
            n >>= 1
        return r

    # --- decisions ---

    def is_zero(self) -> bool:
        return all(c == 0 for c in self.coeffs)

    def is_rational(self) -> bool:
        return all(c == 0 for c in self.coeffs[1:])

    def as_fraction(self) -> Fraction:
        if not self.is_rational():
            raise ValueError("element is irrational")
        return self.coeffs[0]

    def sign(self) -> int:
        if self._sign is not None:
            return self._sign
        if self.is_zero():
            self._sign = 0
            return 0
        if self.is_rational():
            self._sign = 1 if self.coeffs[0] > 0 else -1
            return self._sign
        fld = self.field
        iv = fld.distinguished_interval(Q(1, 2 ** 40))
        for _ in range(10_000):
            v = poly_eval_iv(poly_trim(self.coeffs), iv)
            if not v.contains_zero():
                self._sign = 1 if v.lo > 0 else -1
                return self._sign
            fld.refine_distinguished()
            iv = fld.distinguished_interval()
        raise ArithmeticError("sign refinement did not terminate")  # unreachable

    def __eq__(self, other):
        if not isinstance(other, (FieldElement, int, Fraction)):
            return NotImplemented
        o = self._coerce(other)
        return self.coeffs == o.coeffs

    def __lt__(self, other):
        return (self - other).sign() < 0

    def __le__(self, other):
        return (self - other).sign() <= 0

    def __gt__(self, other):
        return (self - other).sign() > 0

    def __ge__(self, other):
        return (self - other).sign() >= 0

    def __abs__(self):
        return -self if self.sign() < 0 else self

    def __hash__(self):
        if self._hash is None:
            self._hash = hash(self.coeffs)
        return self._hash

    # --- embeddings ---

    def interval(self, precision: int = 53) -> Iv:
        """Certified interval of the distinguished embedding, width <= 2^-precision."""
        tol = Q(1, 2 ** precision)
        fld = self.field
        iv = fld.distinguished_interval(Q(1, 2 ** 20))
        while True:
            v = poly_eval_iv(poly_trim(self.coeffs) or (Q(0),), iv)
            if v.width <= tol:
                return v
            fld.refine_distinguished()
            iv = fld.distinguished_interval()

    def approx(self) -> float:
        x = self.field.root_float()
        r = 0.0
        for c in reversed(self.coeffs):
            r = r * x + float(c)
        return r

    def __float__(self):
        return self.approx()

    def __repr__(self):
        return f"FieldElement({[str(c) for c in self.coeffs]})"

    def decimal(self, digits: int = 12) -> str:
        """Deterministic decimal rendering from a certified interval."""
        iv = self.interval(precision=int(digits * 3.33) + 16)
        scaled = iv.mid * 10 ** digits
        n = scaled.numerator // scaled.denominator
        if 2 * (scaled.numerator - n * scaled.denominator) >= scaled.denominator:
            n += 1
        sign = "-" if n < 0 else ""
        n = abs(n)
        whole, frac = divmod(n, 10 ** digits)
        return f"{sign}{whole}.{str(frac).zfill(digits)}"


def embed(e: FieldElement, root_index: int | None = None, precision: int = 53) -> Box:
    """Certified box for the image of e under the chosen conjugate embedding.

    root_index defaults to the distinguished real root; the box width is at
    most 2^-precision in both coordinates.
    """
    fld = e.field
    i = fld.root_index if root_index is None else root_index
    tol = Q(1, 2 ** precision)
    box = fld.conjugate_box(i, Q(1, 2 ** 20))
    p = poly_trim(e.coeffs) or (Q(0),)
    while True:
        v = poly_eval_box(p, box)
        if v.width <= tol:
            return v
        fld._roots[i].refine()
        box = fld.conjugate_box(i)


# ----------------------------------------------------------------------------
# minimal polynomials of elements, Pisot tests
# ----------------------------------------------------------------------------

def min_poly_of(e: FieldElement) -> tuple[Fraction, ...]:
    """Monic minimal polynomial of e over Q (coefficients ascending)."""
    g = e.field.degree
    powers = [e.field.one]
    for _ in range(g):
        powers.append(powers[-1] * e)
    # find the least k with 1, e, ..., e^k linearly dependent
    for k in range(1, g + 1):
        # solve sum_{i<k} x_i e^i = e^k
        rows = [[powers[i].coeffs[j] for i in range(k)] + [powers[k].coeffs[j]]
                for j in range(g)]
        sol = _solve_rational(rows, k)
        if sol is not None:
            return poly_trim([-s for s in sol] + [Q(1)])
    raise ArithmeticError("no minimal polynomial found")  # unreachable


def _solve_rational(rows: list[list[Fraction]], ncols: int):
    """Solve an overdetermined consistent system by elimination; None if
    inconsistent."""
    m = [list(r) for r in rows]
    nr = len(m)
    piv_rows = []
    r = 0
    for c in range(ncols):
        pr = next((i for i in range(r, nr) if m[i][c] != 0), None)
        if pr is None:
            continue
        m[r], m[pr] = m[pr], m[r]
        lead = m[r][c]
        m[r] = [x / lead for x in m[r]]
        for i in range(nr):
            if i != r and m[i][c] != 0:
                f = m[i][c]
                m[i] = [a - f * b for a, b in zip(m[i], m[r])]
        piv_rows.append(c)
        r += 1
    for i in range(r, nr):
        if m[i][ncols] != 0:
            return None
    sol = [Q(0)] * ncols
    for i, c in enumerate(piv_rows):
        sol[c] = m[i][ncols]
    return sol


def _reciprocal_associated(p) -> bool:
    """True when x^g p(1/x) is a rational multiple of p (root set closed under
    z -> 1/z)."""
    rev = poly_trim(tuple(reversed(p)))
    if len(rev) != len(p):
        return False
    c = rev[-1]  # p is monic, so rev = c * p requires rev's lead = c
    return rev == poly_scale(p, c)


def modulus_vs_one(poly, states: list[_RootState], idx: int) -> int:
    """Sign of |root| - 1, decided exactly.

    Interval refinement decides every root off the unit circle; for roots on
    it the reciprocal 1/conj(z) is again a root, and once its enclosure meets
    only this root's box the equality |z| = 1 is proven.
    """
    st = states[idx]
    if st.is_real:
        for x in (Q(1), Q(-1)):
            if poly_eval(poly, x) == 0 and st.iv.contains(x):
                # irreducible => poly is x -+ 1 and the root is exactly +-1
                return 0
        while True:
            iv = st.iv
            lo, hi = abs(iv.lo), abs(iv.hi)
            if iv.contains_zero():
                m = max(lo, hi)
                if m < 1:
                    return -1
            else:
                a, b = min(lo, hi), max(lo, hi)
                if b < 1:
                    return -1
                if a > 1:
                    return 1
            st.refine()
    recip_closed = _reciprocal_associated(poly)
    while True:
        s = st.box.abs_sq()
        if s.hi < 1:
            return -1
        if s.lo > 1:
            return 1
        if recip_closed and not st.box.contains_zero():
            cand = st.box.conj().recip()
            hits = [j for j, o in enumerate(states) if cand.intersects(o.as_box())]
            if hits == [idx]:
                return 0
        st.refine()


class FamilyViolation:
    """A conjugate of modulus >= 1 missing from the eigenvalue list."""

    def __init__(self, eigen_index: int, min_poly, conj_box: Box):
        self.eigen_index = eigen_index
        self.min_poly = min_poly
        self.conj_box = conj_box

    def __repr__(self):
        b = self.conj_box
        return (f"FamilyViolation(eigenvalue #{self.eigen_index}, conjugate near "
                f"{float(b.re.mid):.6f}{float(b.im.mid):+.6f}i)")


class FamilyCheck:
    def __init__(self, is_family: bool, violations: list[FamilyViolation]):
        self.is_family = is_family
        self.violations = violations

    def __bool__(self):
        return self.is_family


def _match_real_root(e: FieldElement, states: list[_RootState]) -> int:
    """Index of the conjugate of min_poly_of(e) equal to e's real embedding."""
    prec = 20
    while True:
        iv = e.interval(precision=prec)
        cands = [i for i, st in enumerate(states)
                 if st.is_real and st.iv.intersects(iv)]
        if len(cands) == 1:
            return cands[0]
        for i in cands:
            states[i].refine()
        prec += 10
        if prec > 2000:
            raise ArithmeticError("could not match embedding to a conjugate")


def is_pisot(lam: FieldElement) -> bool:
    """Pisot test: lam real > 1, an algebraic integer, all other conjugates of
    modulus < 1.  Rational integers >= 2 pass vacuously."""
    mp = min_poly_of(lam)
    if any(c.denominator != 1 for c in mp):
        raise NotAlgebraicInteger(f"minimal polynomial {[str(c) for c in mp]} not integral")
    if not (lam > 1):
        raise ValueError("Pisot test requires lam > 1")
    states = _isolate_all_roots(mp)
    own = _match_real_root(lam, states)
    for i in range(len(states)):
        if i == own:
            continue
        if modulus_vs_one(mp, states, i) >= 0:
            return False
    return True


def pisot_family_check(eigenvalues: list[FieldElement]) -> FamilyCheck:
    """Check the eigenvalue set is closed under algebraic conjugation
    restricted to conjugates of modulus >= 1 (the Meyer-property criterion
    for the expansion spectrum).

    Conjugates are matched to listed eigenvalues through certified isolating
    regions; complex conjugates of modulus >= 1 can never match a real
    eigenvalue and are reported as violations directly.
    """
    violations: list[FamilyViolation] = []
    for k, lam in enumerate(eigenvalues):
        mp = min_poly_of(lam)
        states = _isolate_all_roots(mp)
        listed: set[int] = set()
        for e in eigenvalues:
            if min_poly_of(e) == mp:
                listed.add(_match_real_root(e, states))
        for i in range(len(states)):
            if i in listed:
                continue
            if modulus_vs_one(mp, states, i) >= 0:
                while states[i].as_box().width > Q(1, 2 ** 24):
                    states[i].refine()
                violations.append(FamilyViolation(k, mp, states[i].as_box()))
    return FamilyCheck(not violations, violations)
