"""Exception hierarchy.

Everything raised on purpose by the library derives from ``CausalRewireError``.
``ValidationError`` subclasses mark bad inputs/config (CLI exit code 1);
everything else is a runtime stage failure (exit code 2).
"""


class CausalRewireError(Exception):
    pass


class ValidationError(CausalRewireError, ValueError):
    pass


# signal store
class MissingFile(ValidationError, FileNotFoundError):
    pass


class RaggedRows(ValidationError):
    def __init__(self, row_index, expected, got):
        self.row_index = row_index
        super().__init__(f"row {row_index} has {got} samples, expected {expected}")


class NonNumericCell(ValidationError):
    def __init__(self, row, col, cell):
        self.row, self.col = row, col
        super().__init__(f"non-numeric cell {cell!r} at row {row}, column {col}")


class TooFewTimesteps(ValidationError):
    pass


class UnstableCoupling(ValidationError):
    pass


class BadDims(ValidationError):
    pass


class TooFewSamples(ValidationError):
    pass


class SingleClassDataset(ValidationError):
    pass


# entropy engine
class BadBinCount(ValidationError):
    pass


class UnnormalizedDistribution(ValidationError):
    pass


class LengthMismatch(ValidationError):
    pass


class SeriesTooShort(ValidationError):
    pass


# causal graph
class NegativeThreshold(ValidationError):
    pass


class SerializationError(CausalRewireError):
    pass


class SchemaMismatch(SerializationError):
    pass


class EmptyGraph(CausalRewireError):
    pass


class BadFraction(ValidationError):
    pass


# curvature / rewiring
class NotAnEdge(ValidationError):
    pass


class CandidateAlreadyEdge(ValidationError):
    pass


class NoCandidates(CausalRewireError):
    pass


class EmptyCandidates(ValidationError):
    pass


# classifier
class AsymmetricInput(ValidationError):
    pass


class ShapeMismatch(ValidationError):
    pass


class IndivisibleWidth(ValidationError):
    pass


class WidthMismatchWithoutProjection(ValidationError):
    pass


class EmptySplit(ValidationError):
    pass


class SingleClassSplit(CausalRewireError):
    pass


class DivergedToNaN(CausalRewireError):
    def __init__(self, step, where=""):
        self.step = step
        super().__init__(f"non-finite value at step {step}{': ' + where if where else ''}")


# pipeline
class ConfigError(ValidationError):
    def __init__(self, key_path, message):
        self.key_path = key_path
        super().__init__(f"{key_path}: {message}")


class UnknownVariant(ValidationError):
    pass


class EmptySweep(ValidationError):
    pass


class MissingArtifact(ValidationError):
    pass


class StageError(CausalRewireError):
    def __init__(self, stage, cause):
        self.stage = stage
        self.cause = cause
        super().__init__(f"stage '{stage}' failed: {cause}")
