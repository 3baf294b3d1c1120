"""Exception types shared by the dynamics engines."""


class HardBallsError(Exception):
    """Base class for all package errors."""


class OverlapError(HardBallsError):
    """Two balls overlap beyond tolerance."""


class ContactError(HardBallsError):
    """A pair expected to be in contact is not."""


class SingularCollisionError(HardBallsError):
    """Two or more walls are hit at the same moment.

    ``state`` carries whatever diagnostic snapshot the raising engine had.
    """

    def __init__(self, message, state=None):
        super().__init__(message)
        self.state = state


class InadmissibleEventError(HardBallsError):
    """Simultaneous roots of coordinates that interact through the matrix."""


class PerturbationError(HardBallsError):
    """A jittered trajectory lost or reordered collisions."""


class RealizationError(HardBallsError):
    """The ball system did not reproduce the cone trajectory."""
