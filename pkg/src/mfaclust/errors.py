"""Exception hierarchy.

Three broad families matter for the CLI exit codes: configuration
problems (exit 2), data problems (exit 3) and numerical failures
(exit 4).  Everything derives from MfaclustError so library users can
catch one base class.
"""


class MfaclustError(Exception):
    pass


class ConfigError(MfaclustError):
    """Invalid run configuration (bad flag, bad bound, bad schedule)."""


class DataError(MfaclustError):
    """Unusable input data."""


class NumericalError(MfaclustError):
    """Numerical failure during sampling or evaluation."""


# -- configuration ----------------------------------------------------------

class QTooLarge(ConfigError):
    """Factor dimension exceeds the Ledermann bound for this p."""


class KMaxTooSmall(ConfigError):
    """Overfitted mixture needs at least two components."""


class GammaViolatesEmptying(ConfigError):
    """Dirichlet mass per component must stay below d/2, otherwise the
    redundant components are not emptied asymptotically."""


class NonPositiveAlpha(ConfigError):
    """Dirichlet parameters must be strictly positive."""


class NonPositiveParam(ConfigError):
    """Gamma shape/rate must be strictly positive."""


# -- data -------------------------------------------------------------------

class ZeroVarianceColumn(DataError):
    """A column has zero sample variance and cannot be standardized."""


class RaggedRows(DataError):
    """CSV rows have inconsistent lengths."""


class NonNumericCell(DataError):
    """A body cell could not be parsed as a number."""


class FileNotFound(DataError, FileNotFoundError):
    """Input file does not exist."""


class LengthMismatch(DataError):
    """Two label vectors have different lengths."""


# -- numerics ---------------------------------------------------------------

class NonFiniteInput(NumericalError):
    """NaN or infinity where a finite value is required."""


class CholeskyFailure(NumericalError):
    """A matrix that should be positive definite is not; usually signals
    corrupted state (collapsed variance)."""


class AllWeightsZero(NumericalError):
    """Every allocation probability underflowed to zero for some row."""


class NonFiniteLoglik(NumericalError):
    """Observed-data log-likelihood evaluated to NaN or infinity."""


class EmptyTrace(MfaclustError):
    """Posterior trace holds no retained draws."""


class NoIterationsAtKMap(MfaclustError):
    """No retained draw has the requested number of alive components."""


class AllModelsFailed(NumericalError):
    """Every model in the grid failed; nothing to select."""
