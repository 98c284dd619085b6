"""Error types shared across the package."""


class QuatselError(Exception):
    pass


class NotARingError(QuatselError):
    """Lattice is not multiplicatively closed; args carry an offending pair."""


class NoUnityError(QuatselError):
    pass


class PrecisionUnstableError(QuatselError):
    """A local computation disagreed with its precision-escalated rerun."""


class NotLocallyPrincipalError(QuatselError):
    pass


class NotSameGenusError(QuatselError):
    pass


class NotEmbeddableError(QuatselError):
    pass


class ConditionStarFailsError(QuatselError):
    """Some local optimal embedding count vanishes."""


class HypothesisViolationError(QuatselError):
    pass


class MassShortfallError(QuatselError):
    pass


class IndefiniteAlgebraError(QuatselError):
    pass


class SearchInconclusiveError(QuatselError):
    """A bounded local search could not certify its answer."""
