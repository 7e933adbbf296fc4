"""qamsy exception hierarchy.

Every error raised by the library derives from QamError. The CLI maps the
`exit_code` of an uncaught error onto the process exit status.
"""


class QamError(Exception):
    """Base class for all qamsy errors."""

    exit_code = 1


# Layout


class LayoutError(QamError):
    """Invalid Hilbert-space decomposition."""


class ZeroBasin(LayoutError):
    """A pattern was declared with an empty decaying subspace."""


class DimensionOverflow(LayoutError):
    """Declared block dimensions do not fit the total dimension."""


class UnknownBlock(LayoutError):
    """A block label is not part of the layout."""


class LengthMismatch(LayoutError):
    """A block-local vector does not match the block dimension."""


class InconsistentLayout(LayoutError):
    """A pattern set does not match the layout it is paired with."""


# States, channels, measurements


class QuantumError(QamError):
    """Invalid state, operator or channel."""


class DimMismatch(QuantumError):
    """Operand dimensions do not agree."""


class InvalidState(QuantumError):
    """A matrix is not a valid density operator."""


class NotCptp(QuantumError):
    """A channel fails the completeness relation."""

    exit_code = 2


class InvalidPovm(QuantumError):
    """POVM effects are not positive or do not sum to the identity."""


class SingularFrame(QuantumError):
    """The frame operator of a state ensemble cannot be inverted on its span."""


class NotAProjector(QuantumError):
    """An operator expected to be an orthogonal projector is not one."""


class BadProbability(QuantumError):
    """A probability lies outside [0, 1]."""


# Learning rule


class BuildError(QamError):
    """A pattern set cannot be turned into a QAM channel."""


class InvalidPatternSet(BuildError):
    """Pattern set violates its invariants."""


class RateOutOfRange(BuildError):
    """A transfer rate lies outside (0, 1]."""


class TooManyPatterns(BuildError):
    """More GUS patterns than decaying basis states."""


# Dynamics


class DynamicsError(QamError):
    """Invalid generator or failed dynamical computation."""


class NonHermitianH(DynamicsError):
    """The Hamiltonian is not Hermitian."""


class EigensolverFailure(DynamicsError):
    """Liouvillian diagonalization failed or lost biorthogonality."""


class NoGapFound(DynamicsError):
    """No spectral gap separates a metastable manifold."""


class NotClassical(DynamicsError):
    """The metastable manifold is not a mixture of disjoint phases."""


class StepTooLarge(DynamicsError):
    """A trajectory step could not be made accurate by halving dt."""


# Concrete systems


class ModelError(QamError):
    """Invalid model parameters."""


class DuplicatePatterns(ModelError):
    """The same pattern was declared twice."""


class TruncationTooSmall(ModelError):
    """The Fock-space truncation loses population."""


class GridTooCoarse(ModelError):
    """A phase-space quadrature grid is too coarse."""


class NotSpinVector(ModelError):
    """A Hopfield state or pattern has entries other than +1 and -1."""


# Configuration and experiments


class ConfigError(QamError):
    """Invalid experiment configuration."""

    exit_code = 3


class ConfigParse(ConfigError):
    """The config file cannot be parsed or fails the schema."""


class UnknownExperiment(ConfigError):
    """The requested experiment or model does not exist."""


class ValidationFailed(QamError):
    """A validation experiment produced a failing report."""

    exit_code = 2
