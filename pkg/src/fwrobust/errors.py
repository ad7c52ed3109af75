"""Exception types; the CLI maps them onto exit codes 2, 3 and 4."""


class GaugeError(ValueError):
    """An invalid gauge description (names the violated invariant)."""


class InputError(ValueError):
    """Malformed input data: samples, descriptors, files."""


class PreconditionError(ValueError):
    """A documented precondition of an operation does not hold."""


class InvariantError(RuntimeError):
    """An internal consistency check failed."""
