"""Exception hierarchy shared by the library and the CLI."""


class BiworldError(Exception):
    """Base class for every error raised by this package."""


class FormulaSyntaxError(BiworldError):
    def __init__(self, message: str, position: int):
        super().__init__(f"{message} at position {position}")
        self.position = position


class UndeclaredSymbol(BiworldError):
    pass


class EmptyGroup(BiworldError):
    pass


class PrecisionConflict(BiworldError):
    """Both t and f were joined in the precision order."""


class CapExceeded(BiworldError):
    def __init__(self, level: int, count: int, cap: int | None = None):
        msg = f"level {level} holds {count} biworlds"
        if cap is not None:
            msg += f", above the cap of {cap}"
        super().__init__(msg)
        self.level = level
        self.count = count
        self.cap = cap


class UnbuiltLevel(BiworldError):
    def __init__(self, level: int, built: int):
        super().__init__(f"level {level} is not registered (universe built through {built})")
        self.level = level
        self.built = built


class NotCompleted(BiworldError):
    pass


class InvalidBiworld(BiworldError):
    """A structure violates the union or the intersection condition."""

    def __init__(self, message: str, condition: str):
        super().__init__(message)
        self.condition = condition


class ForeignBiworld(BiworldError):
    pass


class DepthExceeded(BiworldError):
    pass


class SampledStructure(BiworldError):
    pass


class InfiniteDepth(BiworldError):
    pass


class UnknownFamily(BiworldError):
    pass


class UnsupportedRule(BiworldError):
    pass
