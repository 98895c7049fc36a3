"""Exception types shared across the package."""


class InputError(ValueError):
    """An argument is outside the accepted range or shape."""


class DomainError(ValueError):
    """A formula was evaluated outside its mathematical domain."""


class DataIntegrityError(RuntimeError):
    """Bundled or loaded data is incomplete or inconsistent."""


class ConfigError(ValueError):
    """An experiment configuration is invalid."""
