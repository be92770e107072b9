"""Exception taxonomy shared by every fraudkit module.

The CLI maps these onto exit codes: ConfigError -> 2, DataError -> 3,
ModelError -> 4.
"""

from __future__ import annotations


class FraudkitError(Exception):
    """Base class for all toolkit errors."""


class ConfigError(FraudkitError):
    """Invalid configuration: bad parameter names/values, inconsistent sections."""


class DataError(FraudkitError):
    """Unusable data: schema mismatch, unknown category, empty result, bad labels."""


class ModelError(FraudkitError):
    """Modeling failure: divergence, degenerate inputs, unfit model misuse."""
