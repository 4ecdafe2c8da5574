"""Exception hierarchy shared by all modules."""


class CharfunError(Exception):
    """Base class for every error raised by ``charfun_kit``."""


# numerics
class NonSquare(CharfunError):
    pass


class NonHermitian(CharfunError):
    pass


class NoConvergence(CharfunError):
    pass


class NotPSD(CharfunError):
    pass


# tuples
class DimensionMismatch(CharfunError):
    pass


class NotCoisometric(CharfunError):
    pass


class NoVectorState(CharfunError):
    pass


class EigenvectorMismatch(CharfunError):
    pass


class NotErgodic(CharfunError):
    pass


class Inconclusive(CharfunError):
    """Decay test stalled although the fixed-point space is one-dimensional."""


class GenerationFailed(CharfunError):
    pass


# fock / charfun
class BudgetExceeded(CharfunError):
    """Word enumeration would exceed the configured budget."""


class FrameMembership(CharfunError):
    pass


class NotStarStable(CharfunError):
    pass


class NotIsometric(CharfunError):
    pass


# equivalence
class FrameMismatch(CharfunError):
    pass


class NotComparable(CharfunError):
    pass


class NotUnitary(CharfunError):
    pass


# cli / io
class ParseError(CharfunError):
    pass


class UnknownName(CharfunError):
    pass
