"""Reproducible sampling of the random medium.

The fluctuation eta is an i.i.d. uniform draw at every volume and
boundary-edge quadrature point.  Streams are keyed by (seed, sample
index) through a counter-based generator, so a sample's values depend
only on its key and the mesh layout, never on execution order or thread
scheduling.  The multi-modes solver and the classical baseline draw from
the same keys, which gives common random numbers across both methods.
"""
from __future__ import annotations

import hashlib
from dataclasses import dataclass

import numpy as np

from .mesh import TriMesh

__all__ = ["NoiseSpec", "MediaSample", "sample_media", "alpha_at"]

_MASK64 = (1 << 64) - 1


@dataclass(frozen=True)
class NoiseSpec:
    """Uniform distribution on [low, high] with a 64-bit seed."""

    low: float = -1.0
    high: float = 1.0
    seed: int = 0

    def __post_init__(self):
        if not self.low <= self.high:
            raise ValueError("noise interval must satisfy low <= high")


@dataclass
class MediaSample:
    """One realization of eta on a mesh's quadrature layout."""

    index: int
    eta_volume: np.ndarray    # (n_elements, nq)
    eta_boundary: np.ndarray  # (n_boundary_edges, nqe)
    spec: NoiseSpec

    def fingerprint(self) -> str:
        h = hashlib.sha256()
        h.update(self.eta_volume.tobytes())
        h.update(self.eta_boundary.tobytes())
        return h.hexdigest()[:16]


def sample_media(mesh: TriMesh, spec: NoiseSpec, index: int) -> MediaSample:
    """Draw the eta realization with the given sample index.

    The Philox counter-based generator is keyed by (seed, index), and the
    whole layout is drawn in one fixed pass, so regenerating any index in
    any order reproduces identical values.
    """
    if index < 0:
        raise ValueError("sample index must be nonnegative")
    key = np.array([spec.seed & _MASK64, index & _MASK64], dtype=np.uint64)
    gen = np.random.Generator(np.random.Philox(key=key))
    nel, nq = mesh.volume_weights.shape
    nbe, nqe = mesh.boundary_edges.size, mesh.ref_edge_points.size
    if spec.low == spec.high:
        vol = np.full((nel, nq), spec.low)
        bnd = np.full((nbe, nqe), spec.low)
    else:
        vol = gen.uniform(spec.low, spec.high, size=(nel, nq))
        bnd = gen.uniform(spec.low, spec.high, size=(nbe, nqe))
    return MediaSample(index, vol, bnd, spec)


def alpha_at(media: MediaSample, epsilon: float, location) -> float:
    """Refractive index 1 + epsilon*eta at one quadrature location.

    `location` is ('element', e, q) for a volume point or
    ('edge', b, q) for a boundary-edge point (b indexes boundary edges).
    """
    if epsilon < 0.0:
        raise ValueError("epsilon must be nonnegative")
    kind, i, q = location
    if kind == "element":
        return 1.0 + epsilon * float(media.eta_volume[i, q])
    if kind == "edge":
        return 1.0 + epsilon * float(media.eta_boundary[i, q])
    raise KeyError(f"unknown location kind {kind!r}")
