"""Exception types shared across the package.

The CLI maps :class:`InputError` to exit code 2 and :class:`SolverError`
to exit code 3; everything else is a bug.
"""


class InputError(ValueError):
    """Invalid user input: malformed data, bad config, violated precondition."""


class SolverError(RuntimeError):
    """A numerical routine failed to produce a trustworthy result."""


class DegenerateInputWarning(RuntimeWarning):
    """Emitted when a metric is computed on degenerate input (e.g. an
    individual equidistant at zero from every counterpart) and a defined
    fallback value is returned instead of raising."""
