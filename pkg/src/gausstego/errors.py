"""Exception types shared across the package."""


class CodecError(Exception):
    """Base class for codec failures."""


class CapacityError(CodecError):
    """Message does not fit the available symbol capacity."""


class CorruptionError(CodecError):
    """Decoded header is inconsistent (wrong key or damaged carrier)."""


class InfeasibleGeometryError(CodecError):
    """An adjusted sampling interval has collapsed to non-positive width."""

    def __init__(self, symbol: int, width: float, iteration: int = 0):
        self.symbol = int(symbol)
        self.width = float(width)
        self.iteration = int(iteration)
        super().__init__(
            f"sampling interval for symbol {self.symbol} has width "
            f"{self.width:.3e} <= 0 (iteration {self.iteration})"
        )


class DivergenceError(RuntimeError):
    """Integration produced a non-finite state."""

    def __init__(self, step: int):
        self.step = int(step)
        super().__init__(f"non-finite state at integration step {self.step}")


class TensorFormatError(ValueError):
    """Tensor file is malformed or uses an unsupported layout."""
