"""Exception types shared across the package.

Every error raised intentionally by this package derives from
:class:`RomError`, so callers can catch one base class at the boundary
of the library and let genuine bugs (plain ``ValueError``,
``ZeroDivisionError``, ...) propagate.
"""

from __future__ import annotations

import numpy as np


class RomError(Exception):
    """Base class for all errors raised by this package."""


class InvalidMesh(RomError):
    """Mesh construction parameters are inconsistent or degenerate."""


class MeshMismatch(RomError):
    """Two finite element objects live on different meshes."""


class DegenerateSnapshots(RomError):
    """The snapshot fluctuation matrix is identically zero.

    Happens when every snapshot equals the mean, e.g. a single-parameter
    snapshot set, so no POD basis can be extracted.
    """


class DimensionError(RomError):
    """A reduced dimension is out of range for the object it is used with."""


class SingularJacobian(RomError):
    """The Newton iteration hit a numerically singular Jacobian."""


class SingularLinearSystem(RomError):
    """A one-shot linear solve (no Newton loop involved) is singular."""


class NoConvergence(RomError):
    """Newton failed to converge within the iteration budget.

    Carries the last iterate and its residual norm so callers can inspect
    or report the failure without re-running the solve.

    Attributes:
        last_iterate: coefficient vector at the final iteration.
        residual_norm: Euclidean norm of the residual at ``last_iterate``.
    """

    def __init__(self, message: str, last_iterate: np.ndarray, residual_norm: float):
        super().__init__(message)
        self.last_iterate = np.asarray(last_iterate)
        self.residual_norm = float(residual_norm)
