"""Exception hierarchy shared across the package."""

from __future__ import annotations


class SplatSimError(Exception):
    """Base class for all package errors."""


class InvalidRotationError(SplatSimError, ValueError):
    """Quaternion cannot be normalized (zero or non-finite)."""


class InvalidInputError(SplatSimError, ValueError):
    """Numeric input contains NaN/Inf where finite values are required."""


class PlySchemaError(SplatSimError, ValueError):
    """PLY header is missing a required property."""


class UnsupportedFormatError(SplatSimError, ValueError):
    """File format variant this loader does not handle (e.g. ascii PLY)."""


class TruncatedPayloadError(SplatSimError, ValueError):
    """Binary payload shorter than the header declares."""


class AnimFormatError(SplatSimError, ValueError):
    """Base for animation-container format errors."""


class MagicMismatchError(AnimFormatError):
    pass


class VersionMismatchError(AnimFormatError):
    pass


class LengthMismatchError(AnimFormatError):
    pass


class DegenerateObjectError(SplatSimError, ValueError):
    """Object has too few usable Gaussians to simulate."""


class DegenerateGeometryError(SplatSimError, ValueError):
    """Input points are coplanar/collinear; no 3D hull exists."""


class TooFewParticlesError(SplatSimError, ValueError):
    """Sampling spacing too coarse for a usable particle count."""


class ConfigError(SplatSimError, ValueError):
    """Invalid solver or binding configuration."""


class UnstableConfigError(ConfigError):
    """Timestep violates the stability bound for the configured materials."""

    def __init__(self, message: str, suggested_dt: float | None = None):
        super().__init__(message)
        self.suggested_dt = suggested_dt


class NumericalBlowupError(SplatSimError, RuntimeError):
    """NaN/Inf appeared in particle state; carries the offending frame index."""

    def __init__(self, message: str, frame_index: int):
        super().__init__(message)
        self.frame_index = frame_index


class SpecValidationError(SplatSimError, ValueError):
    """Simulation-spec document failed validation; carries all diagnostics."""

    def __init__(self, diagnostics):
        self.diagnostics = list(diagnostics)
        lines = "; ".join(str(d) for d in self.diagnostics)
        super().__init__(f"invalid simulation spec: {lines}")


class TranslationFailedError(SplatSimError, RuntimeError):
    """Prompt translation exhausted its retries; carries all diagnostics."""

    def __init__(self, message: str, diagnostics=None):
        super().__init__(message)
        self.diagnostics = list(diagnostics or [])


class TransportError(SplatSimError, RuntimeError):
    """Network failure talking to the language-model endpoint."""


class StageError(SplatSimError, RuntimeError):
    """Pipeline failure wrapped with the stage where it occurred."""

    def __init__(self, stage: str, cause: Exception):
        super().__init__(f"[{stage}] {cause}")
        self.stage = stage
        self.cause = cause
