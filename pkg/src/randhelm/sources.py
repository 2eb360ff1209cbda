"""Source terms for the forward problem.

Two kinds are supported: a constant source and the oscillatory radial
wave f = sin(k * alpha * rho) / rho with rho the distance from the
origin.  The radial source depends on the sampled medium through alpha,
so it is evaluated per realization at quadrature points.
"""
from __future__ import annotations

from dataclasses import dataclass
from math import isfinite

import numpy as np

from .mesh import TriMesh
from .randomness import MediaSample

__all__ = ["SourceSpec", "eval_source", "source_volume"]

_RHO_GUARD = 1e-8


@dataclass(frozen=True)
class SourceSpec:
    kind: str = "constant"          # 'constant' or 'radial_wave'
    value: float = 1.0              # used by 'constant' only

    def __post_init__(self):
        if self.kind not in ("constant", "radial_wave"):
            raise ValueError(f"unknown source kind {self.kind!r}")
        if self.kind == "constant" and not isfinite(self.value):
            raise ValueError("constant source value must be finite")


def _radial(rho, alpha, k):
    z = k * alpha
    # Removable singularity at the origin: sin(k*alpha*rho)/rho -> k*alpha.
    return np.where(rho < _RHO_GUARD, z, np.sin(z * rho) / np.maximum(rho, _RHO_GUARD))


def eval_source(
    spec: SourceSpec,
    media: MediaSample | None,
    epsilon: float,
    k: float,
    point,
    location=None,
) -> complex:
    """Evaluate the source at one physical point.

    `location` carries the point's quadrature key ('element'/'edge', i, q)
    so that alpha can be looked up for the radial source; it may be None
    for the constant source or when epsilon is zero.
    """
    if spec.kind == "constant":
        return complex(spec.value)
    x, y = point
    rho = float(np.hypot(x, y))
    alpha = 1.0
    if epsilon > 0.0 and media is not None and location is not None:
        from .randomness import alpha_at

        alpha = alpha_at(media, epsilon, location)
    return complex(_radial(np.asarray(rho), alpha, k))


def source_volume(
    spec: SourceSpec, mesh: TriMesh, media: MediaSample | None, epsilon: float, k: float
) -> np.ndarray:
    """Source values at every volume quadrature point, shape (nel, nq)."""
    if spec.kind == "constant":
        return np.full(mesh.volume_weights.shape, complex(spec.value))
    rho = np.hypot(mesh.volume_points[..., 0], mesh.volume_points[..., 1])
    if epsilon > 0.0 and media is not None:
        alpha = 1.0 + epsilon * media.eta_volume
    else:
        alpha = np.ones_like(rho)
    return _radial(rho, alpha, k).astype(complex)
