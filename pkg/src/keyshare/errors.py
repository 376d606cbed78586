"""Exception types shared across the package.

The CLI maps these onto its exit-code contract: validation problems
(bad inputs, capacity guards) exit 1, computation failures exit 2.
"""


class ValidationError(ValueError):
    """Invalid user input: bad spec fields, malformed files, out-of-range args."""


class CapacityError(ValidationError):
    """Instance too large for the chosen (dense / exhaustive) representation."""


class SolverError(RuntimeError):
    """Numerical solver failed to produce a usable answer."""


class ConsistencyError(RuntimeError):
    """Internal numerical invariant violated (e.g. entropy below -1e-12)."""
