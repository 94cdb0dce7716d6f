"""Exception taxonomy shared across the toolkit.

Every failure mode that a caller can act on gets its own class; anything else
is a plain ValueError.  All toolkit exceptions derive from TilingError so CLI
entry points can catch one base class.
"""


class TilingError(Exception):
    """Base class for all toolkit errors."""


# --- number field construction ---

class ReduciblePolynomial(TilingError):
    """Minimal polynomial factors over the rationals."""


class NoRootInInterval(TilingError):
    """The bracketing interval contains no root of the minimal polynomial."""


class MultipleRootsInInterval(TilingError):
    """The bracketing interval contains more than one real root."""


class NotAlgebraicInteger(TilingError):
    """Element's minimal polynomial is not monic with integer coefficients."""


# --- geometry ---

class DegeneratePolygon(TilingError):
    """Fewer than d+1 effective vertices, zero area, or a self-intersection."""


class SingularMap(TilingError):
    """Linear map with zero determinant where an invertible one is required."""


# --- substitution rules ---

class CoverGap(TilingError):
    """Substitution images fail to cover the inflated prototile."""


class CoverOverlap(TilingError):
    """Two substitution children share interior volume."""


class NotPrimitive(TilingError):
    """Substitution matrix is not primitive."""


class BadExpansion(TilingError):
    """Expansion map has an eigenvalue of modulus <= 1."""


class EmptyRegion(TilingError):
    """Requested region contains no tile pair for the query."""


# --- overlap analysis ---

class CapExceeded(TilingError):
    """Subdivision graph closure exceeded the vertex cap."""

    def __init__(self, cap, message=None):
        self.cap = cap
        super().__init__(message or f"overlap subdivision graph exceeded {cap} vertices")


class NotABasis(TilingError):
    """Vectors do not form a basis of the ambient space, or are not observed
    return vectors."""


class PreconditionNotEstablished(TilingError):
    """A theorem precondition (pure discreteness, lattice condition) was not
    established before a dependent computation was requested."""


# --- progression searches ---

class PatchNotFound(TilingError):
    """Seed patch has no occurrence in the searched region."""


class WitnessNotFound(TilingError):
    """No eigen-witness children available for the digit decomposition."""


class EigenConditionFails(TilingError):
    """Claimed eigenvector data does not satisfy Q v = n v exactly."""


class BudgetExhausted(TilingError):
    """Search budget (levels, candidates) exhausted without an answer."""


# --- certificates ---

class NoContractingConjugate(TilingError):
    """Expansion factor has no algebraic conjugate of modulus < 1."""


class HypothesisFailure(TilingError):
    """Certificate hypotheses (diagonalisability, coordinate form) not met."""


class NotOneDimensional(TilingError):
    """Operation defined only for one-dimensional rules."""


class ReducibleCharPoly(TilingError):
    """Characteristic polynomial of the substitution matrix factors over Q,
    so the irreducibility hypothesis fails and the certificate is withheld.
    Carries char_poly as an ascending integer coefficient tuple."""

    def __init__(self, char_poly, message: str):
        super().__init__(message)
        self.char_poly = tuple(char_poly)


class PhiVanishes(TilingError):
    """Internal-space image of a nonzero vector vanished: the rule's coordinate
    form violates the integer-polynomial assumption."""


# --- rule files / CLI ---

class UnknownRule(TilingError):
    """Requested built-in rule name does not exist."""


class ParseError(TilingError):
    """Rule file is malformed."""
