"""Exception types shared across the package."""


class ConfigError(ValueError):
    """Invalid model, study or CLI configuration (CLI exit code 2)."""


class NumericalError(RuntimeError):
    """A numerical routine failed (factorization, quadrature; CLI exit code 3)."""


class TiesError(ValueError):
    """A sample column contains ties, so ranks are not well defined."""
