"""Typed errors shared across the package."""


class CapacityError(ValueError):
    """Requested exact computation exceeds the enumeration size bound."""


class DegenerateMagnetizationError(ValueError):
    """|M| = 1 (unanimous spins): artanh diverges, no field estimate exists."""


class DegenerateObjectiveError(ValueError):
    """Both quadratic-objective coefficients vanish; no branch can be chosen."""


class RootFindError(RuntimeError):
    """Stationarity equation has no bracketed root on the search grid."""


class ConvergenceError(RuntimeError):
    """Iterative fit failed to reach the requested gradient tolerance."""
