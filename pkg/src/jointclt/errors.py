"""Exception types raised across the package."""


class ParameterDomainError(ValueError):
    """A parameter lies outside the domain where the model is defined."""


class DegenerateDesignError(ValueError):
    """All units fall in a single treatment arm, so the arm weights are undefined."""


class DegenerateVarianceError(ValueError):
    """A variance that must be strictly positive evaluated to zero."""


class DatasetParseError(ValueError):
    """A dataset file is malformed. The message carries the path and line number."""
