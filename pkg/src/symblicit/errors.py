"""Exceptions shared by the engines."""


class CapExceeded(RuntimeError):
    """A configured resource limit (state count, node budget) was exceeded."""


class EngineError(RuntimeError):
    """Internal consistency check failed; indicates a bug or a non-deterministic model."""


class RangeExceeded(CapExceeded):
    """An intermediate value left the range of the arithmetic backend."""
