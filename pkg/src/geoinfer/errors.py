class GeometryError(ValueError):
    """Query or parameters outside an operation's domain."""


class MedialAxisError(GeometryError):
    """Raised when a query point has more than one projection (within slack)."""


class InputError(GeometryError):
    """Malformed user input: point files, shape descriptions, run configs."""
