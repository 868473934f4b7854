"""Exception types raised by the solver stack."""


class DimensionMismatch(ValueError):
    """Array shapes are inconsistent with the problem dimensions."""


class ConfigError(ValueError):
    """A configuration file or key could not be interpreted.

    Attributes:
        key: Name of the offending key, when known.
    """

    def __init__(self, message: str, key: str | None = None):
        super().__init__(message)
        self.key = key


class NotPositiveDefinite(RuntimeError):
    """Factorization of the regularized control Hessian failed.

    Attributes:
        node: Time index at which the factorization failed.
    """

    def __init__(self, node: int):
        super().__init__(f"control Hessian not positive definite at node {node}")
        self.node = node


class RolloutDiverged(RuntimeError):
    """A forward simulation produced a non-finite or absurdly large state.

    Attributes:
        node: Time index at which divergence was detected.
    """

    def __init__(self, node: int):
        super().__init__(f"roll-out diverged at node {node}")
        self.node = node
