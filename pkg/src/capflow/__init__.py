"""Capillary curvature flows of axisymmetric hypersurfaces in the unit ball.

Profile-curve front tracking for the locally constrained quotient flow and the
capillary mean curvature flow, together with the capillary quermassintegrals
and the horocap-convexity diagnostics used to check the associated identities
and inequalities numerically.
"""

from .errors import (
    CapflowError,
    ConeViolationError,
    ConstraintError,
    DegenerateCurveError,
    DomainError,
    ExtrapolationError,
    FlowBlowUpError,
    GeometryError,
    MonotonicityError,
    PreconditionError,
)
from .geometry import (
    CapSpec,
    ProfileCurve,
    SurfaceFrame,
    contact_angle,
    frame,
    hausdorff_to_cap,
    make_cap,
    make_flat_ball,
    make_perturbed_cap,
    resample,
    validate,
)
from .report import Check, VerificationReport

__version__ = "0.1.0"

__all__ = [
    "CapSpec",
    "CapflowError",
    "Check",
    "ConeViolationError",
    "ConstraintError",
    "DegenerateCurveError",
    "DomainError",
    "ExtrapolationError",
    "FlowBlowUpError",
    "GeometryError",
    "MonotonicityError",
    "PreconditionError",
    "ProfileCurve",
    "SurfaceFrame",
    "VerificationReport",
    "contact_angle",
    "frame",
    "hausdorff_to_cap",
    "make_cap",
    "make_flat_ball",
    "make_perturbed_cap",
    "resample",
    "validate",
]
