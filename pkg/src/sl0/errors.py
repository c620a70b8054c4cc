"""Exception hierarchy shared by all modules."""


class SL0Error(ValueError):
    """Base class for every refusal raised by the package."""


class RankDeficient(SL0Error):
    pass


class CapExceeded(SL0Error):
    """An enumeration or dense-basis size limit would be exceeded."""


class NotOrthonormalized(SL0Error):
    pass


class SparsityTooHigh(SL0Error):
    pass


class DeltaTooSmall(SL0Error):
    pass


class DegenerateInput(SL0Error):
    pass


class InvalidKPrime(SL0Error):
    pass


class NonFinite(SL0Error):
    pass


class PreconditionViolated(SL0Error):
    pass


class NoSparseSolution(SL0Error):
    pass
