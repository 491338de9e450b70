"""Exception types raised across the package."""


class InvalidArgument(ValueError):
    pass


class MissingPrimeValue(KeyError):
    """A prime factor lies beyond the range of sampled prime values."""


class InfeasibleParameters(ValueError):
    pass


class NumericSingularity(ArithmeticError):
    pass


class UnsupportedMethod(ValueError):
    pass


class InvalidProcess(RuntimeError):
    """A simulated process violated one of its declared invariants."""


class InsufficientConditioningMass(RuntimeError):
    pass
