"""Exception types shared across the package."""


class HetPlatoonError(Exception):
    """Base class."""


class InvalidParameterError(HetPlatoonError, ValueError):
    pass


class ConfigError(HetPlatoonError, ValueError):
    """Bad config file. ``path`` is the dotted key path that failed."""

    def __init__(self, path, message):
        self.path = path
        super().__init__(f"{path or '<root>'}: {message}")


class InfeasibleCrossingError(HetPlatoonError):
    """A vehicle is scheduled to cross earlier than free flow allows."""


class ControlRegionTooShortError(HetPlatoonError):
    """Deceleration would have to start before the vehicle enters the region.

    ``required_x0`` is the smallest control length that makes it feasible.
    """

    def __init__(self, vehicle, required_x0, x0):
        self.vehicle = vehicle
        self.required_x0 = float(required_x0)
        self.x0 = float(x0)
        super().__init__(
            f"vehicle {vehicle}: control region {x0:g} m too short, "
            f"needs x0 >= {required_x0:.6f} m"
        )


class ScheduleViolationError(HetPlatoonError):
    """Delays inside a platoon are not non-increasing."""


class MisclassificationError(HetPlatoonError):
    """Derived switch speed fell outside its admissible range."""


class CorruptedScheduleError(HetPlatoonError):
    pass


class OutOfDomainError(HetPlatoonError, ValueError):
    pass


class ResolutionTooCoarseError(HetPlatoonError, ValueError):
    pass


class NoFiniteRateError(HetPlatoonError, ValueError):
    """Requested load is unreachable for any finite arrival rate."""
