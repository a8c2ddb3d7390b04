"""Exception hierarchy shared by all clipsampler modules.

The CLI maps these onto process exit codes: configuration problems exit
with 1, data/manifest problems with 2, and numeric failures (non-finite
losses) with 3.
"""

from __future__ import annotations


class ClipSamplerError(Exception):
    """Base class for all errors raised by this package."""


class ConfigError(ClipSamplerError):
    """Invalid configuration value or an unusable combination of options."""


class DataError(ClipSamplerError):
    """A dataset, file, or record violates its contract."""


class ManifestError(DataError):
    """Manifest file is malformed or inconsistent with its feature files."""


class ContainerError(DataError):
    """Binary container file is malformed (bad magic, version, or size)."""


class MissingModalityError(DataError):
    """A requested modality is not present on a video record."""


class LabelSpaceMismatchError(DataError):
    """Classifier and dataset disagree on the number of classes."""


class NumericError(ClipSamplerError):
    """Training produced a non-finite loss or parameters."""
