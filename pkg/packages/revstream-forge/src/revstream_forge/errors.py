from revstream_core.errors import RevstreamError


class ForgeError(RevstreamError):
    """A function pair cannot be turned into a trajectory record."""


class IdenticalPair(ForgeError, ValueError):
    pass


class EmptySource(ForgeError, ValueError):
    pass


class SentinelInSource(ForgeError, ValueError):
    pass


class ScopeAmbiguityUnresolvable(ForgeError):
    """Leftward extension reached the function start and the scope still matches further right."""


class RoundTripMismatch(ForgeError):
    """Rendering the built trajectory does not reproduce the patched text."""
