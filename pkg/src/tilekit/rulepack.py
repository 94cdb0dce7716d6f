"""Built-in substitution rules.

Each builder returns a fully specified SubstitutionRule over an exact ground
field.  `builtin(name)` caches instances so supertile memos are shared across
callers.  EXPECTED records the documented properties of each rule (spectrum
basis, progression seeds, eigen data) as plain rational data; use
point_from_data to turn entries into exact points.
"""

from __future__ import annotations

from fractions import Fraction
from functools import lru_cache
from typing import Dict, List, Sequence, Tuple

from .algebra import NumberField, field_make
from .errors import UnknownRule
from .geometry import LinearMapK, PointK, PolygonK, point, scalar_map
from .substitution import SubstitutionRule, Tile

NAMES = ("fibonacci", "period_doubling", "chair", "table", "sphinx")


def point_from_data(field: NumberField, data: Sequence[Sequence]) -> PointK:
    """Decode ((c0, c1, ...), ...) per-coordinate power-basis coefficients."""
    coords = []
    for coeffs in data:
        e = field.zero
        for k, c in enumerate(coeffs):
            e = e + field.element([Fraction(0)] * k + [Fraction(c)])
        coords.append(e)
    return PointK(tuple(coords))


def _rational_field() -> NumberField:
    return field_make([-1, 1], (1, 1))


def fibonacci() -> SubstitutionRule:
    """One-dimensional golden-ratio rule: a -> ab, b -> a, with |a| = phi."""
    f = field_make([-1, -1, 1], (1, 2))
    phi = f.theta()
    proto = {
        "a": PolygonK([point(f, 0), PointK((phi,))]),
        "b": PolygonK([point(f, 0), point(f, 1)]),
    }
    images = {
        "a": [Tile("a", point(f, 0)), Tile("b", PointK((phi,)))],
        "b": [Tile("a", point(f, 0))],
    }
    return SubstitutionRule(f, 1, proto, scalar_map(phi, 1), images,
                            name="fibonacci")


def period_doubling() -> SubstitutionRule:
    """a -> ab, b -> aa on unit intervals with expansion 2."""
    f = _rational_field()
    proto = {
        "a": PolygonK([point(f, 0), point(f, 1)]),
        "b": PolygonK([point(f, 0), point(f, 1)]),
    }
    images = {
        "a": [Tile("a", point(f, 0)), Tile("b", point(f, 1))],
        "b": [Tile("a", point(f, 0)), Tile("a", point(f, 1))],
    }
    return SubstitutionRule(f, 1, proto, scalar_map(f.from_rational(2), 1),
                            images, name="period_doubling")


# The chair prototiles are the four rotations of an L-shaped hexomino half,
# anchored so every support sits inside [0,2]^2.  C_k = rot90^k(C_0) + t_k.
_CHAIR_T = ((0, 0), (2, 0), (2, 2), (0, 2))
_CHAIR_BASE = ((0, 0), (2, 0), (2, 1), (1, 1), (1, 2), (0, 2))
_CHAIR_CHILDREN = ((0, (0, 0)), (0, (1, 1)), (1, (2, 0)), (3, (0, 2)))


def _rot90(k: int, v: Tuple[Fraction, Fraction]) -> Tuple[Fraction, Fraction]:
    x, y = Fraction(v[0]), Fraction(v[1])
    for _ in range(k % 4):
        x, y = -y, x
    return (x, y)


def chair() -> SubstitutionRule:
    f = _rational_field()
    proto: Dict[str, PolygonK] = {}
    images: Dict[str, List[Tile]] = {}
    for k in range(4):
        tk = _CHAIR_T[k]
        verts = []
        for v in _CHAIR_BASE:
            x, y = _rot90(k, v)
            verts.append(point(f, x + tk[0], y + tk[1]))
        proto["C%d" % k] = PolygonK(verts)
        kids = []
        for j, off in _CHAIR_CHILDREN:
            jk = (j + k) % 4
            x, y = _rot90(k, (off[0] + _CHAIR_T[j][0], off[1] + _CHAIR_T[j][1]))
            px = x - _CHAIR_T[jk][0] + 2 * tk[0]
            py = y - _CHAIR_T[jk][1] + 2 * tk[1]
            kids.append(Tile("C%d" % jk, point(f, px, py)))
        kids.sort(key=Tile.key)
        images["C%d" % k] = kids
    return SubstitutionRule(f, 2, proto, scalar_map(f.from_rational(2), 2),
                            images, name="chair")


def table() -> SubstitutionRule:
    """Two 2x1 rectangles; each supertile is a tabletop across two upright
    legs.  The offset tabletops keep the two halves of every overlap from
    ever locking into agreement, which is what kills overlap coincidence."""
    f = _rational_field()
    proto = {
        "H": PolygonK([point(f, x, y)
                       for x, y in ((0, 0), (2, 0), (2, 1), (0, 1))]),
        "V": PolygonK([point(f, x, y)
                       for x, y in ((0, 0), (1, 0), (1, 2), (0, 2))]),
    }
    images = {
        "H": [Tile("V", point(f, 0, 0)), Tile("H", point(f, 1, 0)),
              Tile("H", point(f, 1, 1)), Tile("V", point(f, 3, 0))],
        "V": [Tile("H", point(f, 0, 0)), Tile("V", point(f, 0, 1)),
              Tile("V", point(f, 1, 1)), Tile("H", point(f, 0, 3))],
    }
    return SubstitutionRule(f, 2, proto, scalar_map(f.from_rational(2), 2),
                            images, name="table")


# Sphinx data lives on the triangular lattice u = (1, 0), v = (1/2, sqrt3/2).
# Labels are R0..R5 (rotations of the base sphinx by 60 degrees) and L0..L5
# (the same rotations of the mirrored sphinx).  Composition uses the
# dihedral relation mirror . rot = rot^-1 . mirror.
_SPHINX_OUTLINE = ((0, 0), (3, 0), (1, 2), (1, 1), (0, 1))
_SPHINX_CHILDREN = (("L0", (0, 2)), ("L3", (3, 0)), ("L3", (6, 0)),
                    ("R2", (5, 1)))


def _sphinx_elem(label: str) -> Tuple[int, int]:
    return (int(label[1]), 1 if label[0] == "L" else 0)


def _sphinx_label(k: int, s: int) -> str:
    return ("L" if s else "R") + str(k % 6)


def _sphinx_compose(a: Tuple[int, int], b: Tuple[int, int]) -> Tuple[int, int]:
    k1, s1 = a
    k2, s2 = b
    return ((k1 - k2 if s1 else k1 + k2) % 6, s1 ^ s2)


def _sphinx_act(elem: Tuple[int, int], ab: Tuple[int, int]) -> Tuple[int, int]:
    a, b = ab
    k, s = elem
    if s:
        a, b = a + b, -b
    for _ in range(k):
        a, b = -b, a + b
    return (a, b)


def sphinx() -> SubstitutionRule:
    f = field_make([-3, 0, 1], (1, 2))
    half = f.from_rational(Fraction(1, 2))
    halftheta = f.element([0, Fraction(1, 2)])

    def cart(ab):
        a, b = ab
        return (half * (2 * a + b), halftheta * b)

    proto: Dict[str, PolygonK] = {}
    images: Dict[str, List[Tile]] = {}
    for s in range(2):
        for k in range(6):
            label = _sphinx_label(k, s)
            elem = (k, s)
            verts = [PointK(cart(_sphinx_act(elem, v))) for v in _SPHINX_OUTLINE]
            proto[label] = PolygonK(verts)
            kids = []
            for cl, off in _SPHINX_CHILDREN:
                ck = _sphinx_compose(elem, _sphinx_elem(cl))
                kids.append(Tile(_sphinx_label(*ck),
                                 PointK(cart(_sphinx_act(elem, off)))))
            kids.sort(key=Tile.key)
            images[label] = kids
    return SubstitutionRule(f, 2, proto, scalar_map(f.from_rational(2), 2),
                            images, name="sphinx")


_BUILDERS = {
    "fibonacci": fibonacci,
    "period_doubling": period_doubling,
    "chair": chair,
    "table": table,
    "sphinx": sphinx,
}


@lru_cache(maxsize=None)
def builtin(name: str) -> SubstitutionRule:
    """Shared instance of a named built-in rule.

    Instances are cached so supertile and overlap caches accumulate across
    callers; rules are read-only by convention, so sharing is safe.
    """
    try:
        builder = _BUILDERS[name]
    except KeyError:
        raise UnknownRule("unknown rule %r; available: %s"
                          % (name, ", ".join(NAMES))) from None
    return builder()


# Documented expected behaviour, used by the CLI report and the test suite.
# Vectors are per-coordinate power-basis coefficient tuples.
EXPECTED: Dict[str, dict] = {
    "fibonacci": {
        "pure_discrete": True,
        "spectrum_basis": (((0, 1),),),
        "basis_level": 3,
        "ap": {"label": "a", "step": ((0, 1),)},
        "certificate_steps": ((((0, 1),), 6), (((1, 1),), 9)),
    },
    "period_doubling": {
        "pure_discrete": True,
        "spectrum_basis": (((1,),),),
        "basis_level": 2,
        "ap": {"label": "a", "step": ((1,),)},
        "lattice": (((1,),),),
    },
    "chair": {
        "pure_discrete": True,
        "spectrum_basis": (((4,), (0,)), ((0,), (4,))),
        "basis_level": 2,
        "ap": {"label": "C0", "step": ((1,), (1,))},
        "eigen": {"square": True, "modulus": 4,
                  "vectors": (((4,), (0,)), ((0,), (4,)))},
        "density_shift": ((2,), (0,)),
        "lattice": (((1,), (0,)), ((0,), (1,))),
    },
    "table": {
        "pure_discrete": False,
        "spectrum_basis": (((1,), (0,)), ((0,), (1,))),
        "basis_level": 2,
        "ap": {"label": "V", "step": ((1,), (0,))},
        "lattice": (((1,), (0,)), ((0,), (1,))),
    },
    "sphinx": {
        "pure_discrete": True,
        "spectrum_basis": (((3,), (0,)),
                           ((Fraction(3, 2),), (0, Fraction(3, 2)))),
        "basis_level": 3,
        "ap": {"label": "L3", "step": ((3,), (0,))},
        "lattice": (((3,), (0,)), ((Fraction(3, 2),), (0, Fraction(3, 2)))),
    },
}
