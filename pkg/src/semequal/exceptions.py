"""
This module defines custom exception classes for semequal.

Classes:
    - SemEqualError: Base exception class for all semequal errors.
    - ConfigError: Raised when an experiment configuration is invalid.
    - ShapeMismatch: Raised when tensor or latent shapes do not agree.
    - NonFiniteError: Raised when a forward op produces NaN or Inf.
    - IncompatibleSize: Raised when an image does not fit a codec configuration.
    - ZeroNormRow: Raised when a scaled projection has an all-zero weight row.
    - ImageFormatError: Raised when image bytes cannot be parsed.
    - UnsupportedFormat: Raised for image formats other than binary PPM.
    - IllegalPartition: Raised for partition strategies illegal for a layout.
    - InconsistentUnits: Raised when units, masks and specs disagree.
    - FramingError: Base class for wire format errors.
    - BadMagic, BadVersion, BadLength, ChecksumMismatch: Specific framing errors.
    - MixedSession: Raised when packets from different sessions are combined.
    - FragmentationError: Raised when a packet would exceed the MTU.
    - TransportError: Raised when a socket operation fails.
    - EmptyInput: Raised when an operation receives nothing to work on.
    - TrainingDiverged: Raised when training produces non-finite values.
    - CheckpointError: Raised when a parameter file is malformed.
    - ReportError: Raised when a report cannot be produced.
    - HashMismatch: Raised when report inputs come from different configurations.
"""


class SemEqualError(Exception):
    """
    Base exception class for semequal errors.

    Every error raised on purpose by this package derives from this class.
    """


class ConfigError(SemEqualError):
    """Raised when there is an error in the experiment configuration."""


class ShapeMismatch(SemEqualError):
    """Raised when tensor or latent shapes do not agree."""


class NonFiniteError(SemEqualError):
    """Raised when a forward op produces NaN or Inf values."""


class IncompatibleSize(SemEqualError):
    """Raised when an image size does not fit a codec configuration."""


class ZeroNormRow(SemEqualError):
    """Raised when a scaled projection weight row is the zero vector."""


class ImageFormatError(SemEqualError):
    """Raised when image bytes are malformed or truncated."""


class UnsupportedFormat(ImageFormatError):
    """Raised when the image is not a binary P6 PPM with maxval 255."""


class IllegalPartition(SemEqualError):
    """Raised when a partition strategy does not fit the latent layout."""


class InconsistentUnits(SemEqualError):
    """Raised when a unit list, loss mask and partition spec disagree."""


class FramingError(SemEqualError):
    """Raised when a packet cannot be framed or deframed."""


class BadMagic(FramingError):
    """Raised when a datagram does not start with the packet magic."""


class BadVersion(FramingError):
    """Raised when a datagram carries an unknown wire version."""


class BadLength(FramingError):
    """Raised when a datagram length disagrees with its header."""


class ChecksumMismatch(FramingError):
    """Raised when the CRC-32 of a datagram does not validate."""


class MixedSession(SemEqualError):
    """Raised when packets of different sessions or seeds are combined."""


class FragmentationError(SemEqualError):
    """Raised when a packet payload is larger than the configured MTU."""


class TransportError(SemEqualError):
    """Raised when a socket operation fails."""


class EmptyInput(SemEqualError):
    """Raised when an operation receives an empty input."""


class TrainingDiverged(SemEqualError):
    """Raised when training produces NaN or Inf values."""


class CheckpointError(SemEqualError):
    """Raised when a parameter checkpoint file is malformed."""


class ReportError(SemEqualError):
    """Raised when an experiment report cannot be produced."""


class HashMismatch(ReportError):
    """Raised when report inputs were produced by different configurations."""
