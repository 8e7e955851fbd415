"""Exception types raised by the beamforming library."""


class InvalidArgumentError(ValueError):
    """Input violates a documented precondition."""


class DegenerateChannelError(ValueError):
    """Channel (or its stationary covariance) is numerically zero."""


class UnsupportedSamplingError(TypeError):
    """Phase model has no joint distribution to sample from."""


class InfeasibleZFError(RuntimeError):
    """Zero forcing leaves no degrees of freedom for a user.

    :param user: zero-based index of the blocked user
    """

    def __init__(self, user: int, message: str | None = None):
        self.user = user
        super().__init__(message or f"zero forcing infeasible for user index {user}: "
                                    "its signatures lie in the span of the interferers")
