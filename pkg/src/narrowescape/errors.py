"""Exception hierarchy with machine-readable codes.

Every error raised by the library derives from :class:`NarrowEscapeError` and
carries a short ``code`` string that the command-line front end reports
alongside the human message.
"""


class NarrowEscapeError(Exception):
    code = "error"

    def __init__(self, message, **details):
        super().__init__(message)
        self.details = details


class DomainError(NarrowEscapeError, ValueError):
    """A point lies outside the admissible region of a domain."""
    code = "domain"


class SingularityError(NarrowEscapeError, ValueError):
    """Evaluation at (or too close to) a logarithmic singularity."""
    code = "singularity"


class DegenerateConfigError(NarrowEscapeError, ValueError):
    """Duplicate centers, overlapping patches and similar layout faults."""
    code = "degenerate-configuration"


class PoleError(NarrowEscapeError, ValueError):
    """Evaluation of C(mu) or g_mu at a pole -mu_{2k}."""
    code = "pole"

    def __init__(self, message, index=None, **details):
        super().__init__(message, index=index, **details)
        self.index = index


class InadmissibleError(NarrowEscapeError, ValueError):
    """Targets too large for the small-target asymptotics."""
    code = "asymptotics-inadmissible"


class ResonanceError(NarrowEscapeError, ValueError):
    """A restriction series is evaluated too close to one of its poles."""
    code = "resonance"


class RootError(NarrowEscapeError, RuntimeError):
    """Bracketed root search failed."""
    code = "root"


class NumericalError(NarrowEscapeError, RuntimeError):
    """Non-finite assembly, failed eigensolve or internal consistency check."""
    code = "numerical"


class ResolutionError(NarrowEscapeError, RuntimeError):
    """The collocation system is too ill-conditioned for the chosen order."""
    code = "resolution"


class McTimeoutError(NarrowEscapeError, RuntimeError):
    """Some random walkers exceeded the step guard."""
    code = "mc-timeout"


class UnsupportedError(NarrowEscapeError, ValueError):
    """The requested computation is not defined for this scene."""
    code = "unsupported"


class SceneError(NarrowEscapeError, ValueError):
    """Malformed scene description."""
    code = "scene"


class AsymptoticsWarning(UserWarning):
    """Result returned, but outside the regime where the asymptotics are sharp."""
