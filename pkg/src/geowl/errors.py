"""Exception hierarchy shared by all geowl modules."""


class GeoWLError(Exception):
    """Base class for every error raised by geowl."""


# geometry
class InvalidCloud(GeoWLError):
    pass


class DuplicatePoints(InvalidCloud):
    pass


class SizeMismatch(GeoWLError):
    pass


class TooLargeForExhaustive(GeoWLError):
    pass


class CollinearBase(GeoWLError):
    pass


class NotRealizable(GeoWLError):
    pass


class ParseError(GeoWLError):
    pass


# refinement
class NoConvergence(GeoWLError):
    pass


class DepthExceedsRounds(GeoWLError):
    pass


# reconstruct
class ReconstructionError(GeoWLError):
    pass


class NoNonDegenerateTuple(ReconstructionError):
    pass


class MalformedTranscript(ReconstructionError):
    pass


class CEAbsentFromSignature(MalformedTranscript):
    pass


class ImpossibleHistogram(MalformedTranscript):
    pass


class InconsistentPairs(MalformedTranscript):
    pass


class UnrealizableExternal(ReconstructionError):
    pass


class AmbiguousNode(ReconstructionError):
    pass


class CountMismatch(ReconstructionError):
    pass


class CertificateMismatch(ReconstructionError):
    pass


# grouping / generate
class BudgetExceeded(GeoWLError):
    pass


class BadIndices(GeoWLError):
    pass
