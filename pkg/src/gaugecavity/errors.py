"""Exception types shared across the package.

The CLI maps these onto its exit codes: ConfigError -> 1,
NumericalError (and subclasses) -> 2, ValidationError -> 3.
"""


class ConfigError(ValueError):
    """Invalid run configuration (unknown key, bad value, unphysical parameter)."""

    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class NumericalError(RuntimeError):
    """A run had to be aborted for numerical reasons."""


class BoundaryEscapeError(NumericalError):
    def __init__(self, t, mass, representation):
        self.t = t
        self.mass = mass
        self.representation = representation
        super().__init__(
            f"wave packet reached the grid edge in {representation} at t={t:.6g} ns "
            f"(edge mass {mass:.3e})"
        )


class NonFiniteError(NumericalError):
    def __init__(self, t):
        self.t = t
        super().__init__(f"non-finite amplitudes at t={t:.6g} ns")


class BandCrossingError(NumericalError):
    def __init__(self, angle, gap, pair):
        self.angle = angle
        self.gap = gap
        self.pair = pair
        super().__init__(
            f"bands {pair[0]} and {pair[1]} come within {gap:.3e} of each other "
            f"at loop angle {angle:.6f} rad"
        )


class DegeneracyError(NumericalError):
    def __init__(self, pair, gap, point):
        self.pair = pair
        self.gap = gap
        self.point = point
        super().__init__(
            f"surfaces {pair[0]} and {pair[1]} are degenerate (gap {gap:.3e}) at p={point}"
        )


class TruncationError(NumericalError):
    """Fock-space truncation insufficient: population leaked into the top levels."""


class ValidationError(RuntimeError):
    pass
