"""Exception hierarchy shared by every module of the package."""


class MpcaError(Exception):
    """Base class for all package errors."""

    #: process exit status used by the CLI
    exit_code = 2


class FormatError(MpcaError):
    """Malformed input file (bad header, unparseable timestamp, ...)."""


class EmptyDatasetError(MpcaError):
    """No samples survived ingestion or cleaning."""


class UnsupportedVersionError(MpcaError):
    """Model bank written with an unknown ``format_version``."""


class CorruptionError(MpcaError):
    """Model bank checksum does not match its payload."""


class TooFewSamplesError(MpcaError):
    pass


class DegenerateColumnError(MpcaError):
    """A variable has zero variance where a spread is required."""


class InsufficientSamplesError(MpcaError):
    """Fewer samples than variables for a PCA fit."""


class DataError(MpcaError):
    """Non-finite or otherwise unusable numeric input."""


class SingularModelError(MpcaError):
    pass


class DegenerateResidualError(MpcaError):
    """Residual subspace carries (numerically) no variance."""


class ModelNotFinalizedError(MpcaError):
    pass


class ParameterError(MpcaError, ValueError):
    """Invalid argument value (alpha out of range, bad degrees of freedom)."""

    exit_code = 1


class PriorKnowledgeError(MpcaError):
    """Required prior-knowledge tags missing from a dataset."""


class SchemaError(MpcaError):
    """Variable names or dimensions do not line up."""
