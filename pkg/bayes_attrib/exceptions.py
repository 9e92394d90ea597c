#!/usr/bin/env python3
"""
Exceptions
Error hierarchy shared by every service; the CLI maps it to exit statuses
"""


class AttributionError(Exception):
    """Base class for every error raised by bayes_attrib"""


class UsageError(AttributionError):
    """Invalid flag, unknown class label or invalid configuration"""


class DataFormatError(AttributionError):
    """Unreadable or malformed CSV input"""


class EncodingError(DataFormatError):
    """A value cannot be mapped onto a part of its variable"""


class ModelFormatError(AttributionError):
    """Malformed model file or model invariant violation"""


class ModelVersionError(ModelFormatError):
    """Model file written with an unknown format version"""


class FitError(AttributionError):
    """Training data cannot produce a valid model"""


class OracleBudgetError(UsageError):
    """Exhaustive enumeration requested beyond the supported size"""


class UndefinedCorrelationError(AttributionError):
    """Correlation denominator is zero"""


class ZeroSumAttributionError(AttributionError):
    """Attribution vector sums to zero and cannot be normalized"""


class VerificationError(AttributionError):
    """Analytic and exhaustive attributions disagree beyond tolerance"""
