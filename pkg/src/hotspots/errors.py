"""Exception hierarchy; ``exit_code`` maps each family onto the CLI status."""


class HotspotError(Exception):
    exit_code = 2


class ParameterError(HotspotError, ValueError):
    """A numeric parameter violates its invariant (names the parameter)."""

    exit_code = 1


class ConfigError(HotspotError):
    exit_code = 1


class DataError(HotspotError):
    exit_code = 2


class SchemaError(DataError):
    """A required column or feature name is unknown."""


class EmptyInputError(DataError):
    pass


class UndefinedScoreError(DataError):
    """Silhouette needs at least two non-noise clusters."""


class ProjectionDomainError(DataError, ValueError):
    pass


class InputError(HotspotError):
    """Unreadable stream or missing upstream artifact."""

    exit_code = 3
