"""Exception hierarchy shared by the rpasfa modules."""


class RpasfaError(Exception):
    """Base class for all errors raised by this package."""


class ModelError(RpasfaError, ValueError):
    """The model specification violates one of its invariants."""


class NonStationary(ModelError):
    def __init__(self, channel: int, modulus: float):
        self.channel = channel
        self.modulus = modulus
        super().__init__(
            f"NonStationary: channel {channel} has an AR root of modulus {modulus:.6g} (must be < 1)"
        )


class NonPositiveVariance(ModelError):
    def __init__(self, what: str, value: float):
        self.what = what
        self.value = value
        super().__init__(f"NonPositiveVariance: {what} = {value!r} must be strictly positive")


class DimensionMismatch(ModelError):
    def __init__(self, message: str):
        super().__init__(f"DimensionMismatch: {message}")


class InvalidLag(RpasfaError, ValueError):
    def __init__(self, k: int, lag: int):
        super().__init__(f"InvalidLag: lag {lag} must satisfy 0 <= lag <= k = {k}")


class NonFinite(RpasfaError, ValueError):
    def __init__(self, message: str):
        super().__init__(f"NonFinite: {message}")


class SingularInnovationCovariance(RpasfaError, ArithmeticError):
    def __init__(self, k: int):
        super().__init__(f"SingularInnovationCovariance: innovation covariance at k = {k} is not positive definite")


class CapExceeded(RpasfaError, ValueError):
    def __init__(self, horizon: int, cap: int):
        self.horizon = horizon
        self.cap = cap
        super().__init__(f"CapExceeded: horizon {horizon} exceeds the batch oracle cap of {cap}")


class ShapeMismatch(RpasfaError, ValueError):
    def __init__(self, a: tuple, b: tuple):
        super().__init__(f"ShapeMismatch: {a} vs {b}")


class DegenerateVariance(RpasfaError, ValueError):
    def __init__(self, channel: int):
        super().__init__(f"DegenerateVariance: channel {channel} has zero variance")
