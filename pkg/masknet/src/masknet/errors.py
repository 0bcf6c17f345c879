"""Exception hierarchy, mirroring the stable-``code`` idiom of the consumer."""


class MasknetError(Exception):
    """Base class for all errors raised by this package."""

    code = "error"

    def __init__(self, message: str):
        super().__init__(message)
        self.message = message


class FormatError(MasknetError):
    """File container, codec or sample rate outside the documented contract."""

    code = "format"


class SizeError(MasknetError):
    """Grid or window dimensions inconsistent between operands."""

    code = "size"


class DatasetError(MasknetError):
    """Recipe and corpus disagree (missing runs, masks or scenes)."""

    code = "dataset"


class TrainingError(MasknetError):
    """Optimisation diverged (non-finite loss)."""

    code = "training"


class InputError(MasknetError):
    """CLI arguments or manifest unusable."""

    code = "input"
