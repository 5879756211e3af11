"""Exception types shared across the package."""


class RibbonflexError(Exception):
    """Base class for all package errors."""


class GridSizeError(RibbonflexError):
    """Grid has too few nodes for the fixed differentiation stencils."""


class DegeneracyError(RibbonflexError):
    """A genericity hypothesis failed (coplanar or zero-length frame vectors).

    Carries the curve index and grid node where the degeneracy was detected,
    when known.
    """

    def __init__(self, message, curve=None, node=None):
        super().__init__(message)
        self.curve = curve
        self.node = node


class HorizonError(DegeneracyError):
    """Degeneracy inside the integration domain: the solution cannot be
    extended past the first offending node."""


class ParallelTangentsError(DegeneracyError):
    """Ruling decomposition is non-unique because adjacent tangents are
    parallel (the cylinder case)."""


class GenerationError(RibbonflexError):
    """A surface generator failed (e.g. rejection sampling exhausted)."""


class RigidityError(RibbonflexError):
    """A flexion was requested for a surface whose flexibility precondition
    failed.  Names the offending 3-ribbon window."""

    def __init__(self, message, first_curve=None, residual=None):
        super().__init__(message)
        self.first_curve = first_curve
        self.residual = residual


class DegenerateAnchorError(RibbonflexError):
    """The anchor node cannot drive a reparameterization because the tracked
    quantity does not vary there."""


class TrajectoryError(RibbonflexError):
    """A flexion trajectory is unusable for the requested operation
    (too short, empty, or mismatched grids)."""
