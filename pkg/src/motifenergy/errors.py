"""Exception hierarchy shared across the package."""


class MotifEnergyError(Exception):
    """Base class for all package errors."""


class GraphParseError(MotifEnergyError):
    """Malformed input file; carries the offending line number when known."""

    def __init__(self, message, line_number=None):
        if line_number is not None:
            message = f"line {line_number}: {message}"
        super().__init__(message)
        self.line_number = line_number


class InvalidNodeSetError(MotifEnergyError):
    """A k-node set with duplicates, out-of-range ids, or wrong size."""


class DisconnectedSetError(InvalidNodeSetError):
    """A node set that must induce a connected subgraph but does not."""


class OracleCapError(MotifEnergyError):
    """Exact enumeration refused: estimated CIS count exceeds the cap."""

    def __init__(self, bound, cap):
        super().__init__(
            f"refusing exact enumeration: estimated CIS count {bound} exceeds cap {cap}"
        )
        self.bound = bound
        self.cap = cap


class SupernodeError(MotifEnergyError):
    """Supernode construction failed (e.g. no connected k-subgraph reachable)."""


class TourTruncationError(MotifEnergyError):
    """A tour exceeded the hard step cap; partial trace attached, never used."""

    def __init__(self, cap, partial_length):
        super().__init__(
            f"tour exceeded hard cap of {cap} steps (partial length {partial_length}); "
            "raise the supernode budget to shorten tours"
        )
        self.cap = cap
        self.partial_length = partial_length


class NumericError(MotifEnergyError):
    """A non-finite value appeared; message names the offending stage or set."""


class ConfigError(MotifEnergyError):
    """Invalid configuration field; message names the field."""
