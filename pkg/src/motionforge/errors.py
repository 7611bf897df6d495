"""Exception types shared across the toolkit."""


class MotionForgeError(Exception):
    """Base class for all toolkit errors."""


class ShapeError(MotionForgeError, ValueError):
    """A tensor or video shape violates a documented constraint."""


class DimensionMismatch(MotionForgeError, ValueError):
    """Two inputs that must share dimensions do not."""


class PreconditionError(MotionForgeError, ValueError):
    """An operation was called with arguments outside its domain."""


class UnusableSample(MotionForgeError):
    """A sampled pipeline configuration cannot yield a valid training sample.

    Callers are expected to resample with a fresh seed.
    """


class BehindCamera(MotionForgeError):
    """A 3D point projects behind the camera (depth <= epsilon)."""


class PluginError(MotionForgeError):
    """An external plugin process failed.

    Carries captured diagnostics (exit status, stdout/stderr tails) in
    ``diagnostics`` so callers can surface them.
    """

    def __init__(self, message, diagnostics=None):
        super().__init__(message)
        self.diagnostics = dict(diagnostics or {})


class SchemaError(MotionForgeError, ValueError):
    """A file or payload does not conform to its documented schema."""


class ConfigError(MotionForgeError, ValueError):
    """Invalid run configuration or plugin manifest."""


class InsufficientSources(MotionForgeError):
    """Dataset construction ran out of qualifying source videos.

    ``pairs`` holds the partial result, ``shortfall`` how many more
    pairs were requested than could be built.
    """

    def __init__(self, message, pairs, shortfall):
        super().__init__(message)
        self.pairs = pairs
        self.shortfall = shortfall
