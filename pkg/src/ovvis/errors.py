"""Exception types shared across the package.

The CLI maps :class:`InputError` (and subclasses) to exit code 1 and
:class:`OSError` (including :class:`BundleIOError`) to exit code 2.
"""


class InputError(ValueError):
    """Malformed or inconsistent input."""


class ShapeError(InputError):
    """Array dimensions do not agree."""


class CapacityError(InputError):
    """More targets than candidates in an assignment."""


class UndefinedMetricError(InputError):
    """A metric was requested on data for which it is not defined."""


class GenerationError(InputError):
    """A synthetic scenario could not be generated."""


class BundleIOError(OSError):
    """A bundle file is missing or unreadable."""
