"""Exception types shared across the package."""


class IdentTestError(Exception):
    """Base class for all identest errors."""


class MissingColumn(IdentTestError):
    """A named column role is absent from the input."""


class NonBinary(IdentTestError):
    """Treatment or instrument column contains a value outside {0, 1}."""


class NonFinite(IdentTestError):
    """Outcome or covariate column contains NaN or infinity."""


class EmptyData(IdentTestError):
    """The input has zero rows."""


class EmptyArm(IdentTestError):
    """The selected treatment arm contains no observations."""


class DegenerateDesign(IdentTestError):
    """Design matrix unusable for fitting (e.g. zero rows)."""


class SingleClass(IdentTestError):
    """Binary response is constant, so a logistic model cannot be fit."""


class TooFewObservations(IdentTestError):
    """Not enough observations for the requested split or estimate."""


class DegenerateFold(IdentTestError):
    """A cross-fitting training split has a constant instrument."""


class ZeroVariance(IdentTestError):
    """All scores (or all leaf scores) are identical."""


class EmptyLeaf(IdentTestError):
    """A partition leaf has fewer than two usable observations."""


class DegenerateVariable(IdentTestError):
    """Split variable has fewer distinct values than requested bins."""


class ParseError(IdentTestError):
    """Malformed input table."""
