"""Exception taxonomy shared by every module.

Each exception carries a stable machine-readable ``code`` so the CLI can emit
structured errors without string matching.
"""

from __future__ import annotations


class RosetError(Exception):
    """Base class for all domain errors raised by this package."""

    code = "error"


class InvalidArgumentError(RosetError):
    code = "invalid-argument"


class InfeasibleCalibrationError(RosetError):
    """Phase-2 sample too small for the requested (epsilon, delta).

    Carries the minimum admissible size so callers can report how much data
    is missing.
    """

    code = "infeasible-calibration"

    def __init__(self, message: str, required_min: int):
        super().__init__(message)
        self.required_min = required_min


class DegenerateDataError(RosetError):
    code = "degenerate-data"


class ClusterDegeneracyError(RosetError):
    code = "cluster-degeneracy"


class TooFineGridError(RosetError):
    code = "too-fine-grid"


class DegeneratePolytopeError(RosetError):
    code = "degenerate-polytope"


class DegenerateShapeError(RosetError):
    code = "degenerate-shape"


class UnsupportedCombinationError(RosetError):
    code = "unsupported-combination"


class InvalidScaleError(RosetError):
    code = "invalid-scale"


class ExportOnlyProgramError(RosetError):
    """Program contains PSD blocks; it can be exported but not solved here."""

    code = "export-only"


class UnsupportedExportError(RosetError):
    code = "unsupported-export"
