"""Exception hierarchy.

Every rejection carries a stable machine-readable ``code`` so batch runners
and tests can dispatch on the failure kind without parsing prose.
"""


class ToolkitError(Exception):
    """Base class for all toolkit errors."""

    code = "error"

    def __init__(self, message: str):
        super().__init__(message)
        self.message = message


class FormatError(ToolkitError):
    """File container or codec outside the documented contract."""

    code = "format"


class RateError(ToolkitError):
    """Audio sample rate other than the pipeline rate."""

    code = "rate"


class TruncationError(ToolkitError):
    """File payload shorter than its declared dimensions."""

    code = "truncation"


class SizeError(ToolkitError):
    """Array/grid dimensions inconsistent between operands."""

    code = "size"


class ValidationError(ToolkitError):
    """Scene descriptor violates a constraint of its configuration."""

    code = "validation"


class GeometryError(ToolkitError):
    """Source or microphone placed outside the room."""

    code = "geometry"


class InfeasibilityError(ToolkitError):
    """Requested acoustics cannot be realised (e.g. RT60 too short)."""

    code = "infeasible"


class SamplingError(ToolkitError):
    """Rejection sampler exhausted its attempt budget."""

    code = "sampling"


class DegenerateInputError(ToolkitError):
    """Input signal carries no usable energy."""

    code = "degenerate"


class ConditioningError(ToolkitError):
    """Linear-algebra factorisation failed on an ill-conditioned matrix."""

    code = "conditioning"


class ProtocolError(ToolkitError):
    """Exchange protocol invariant broken (missing node, bad ordering)."""

    code = "protocol"


class ResolutionError(ToolkitError):
    """External mask file could not be resolved for (scene, node, step)."""

    code = "resolution"


class PairingError(ToolkitError):
    """Corpus and run directory do not describe the same scenes."""

    code = "pairing"


class InputError(ToolkitError):
    """CLI input directory empty or unusable."""

    code = "input"
