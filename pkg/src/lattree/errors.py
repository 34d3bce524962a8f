"""Exception hierarchy shared by every tree variant and the harness."""


class LatError(Exception):
    """Base class for errors raised by this package."""


class InvalidConfig(LatError, ValueError):
    pass


class KeyOutOfRange(LatError, KeyError):
    def __str__(self):
        # KeyError repr-quotes its argument; keep the message readable.
        return str(self.args[0]) if self.args else ""


class CapacityOverflow(LatError, OverflowError):
    pass


class CorruptionError(LatError, AssertionError):
    """A structural invariant was found broken by ``validate()``."""


class UnknownStructure(LatError, ValueError):
    pass


class UnsupportedCombination(LatError, ValueError):
    pass


class IoFailure(LatError, OSError):
    pass
