"""0/1 weight schemes: spatial box window, photometric gates and oracles.

Array positions here are 0-based numpy indices. Bandwidths are carried in
pixel units; ``h = radius_px / n`` converts the spatial one.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from .grid import DomainError, check_grid

PHOTOMETRIC_FAMILIES = ("yf", "nlm_euclid", "nlm_avg", "mo_truth")


@dataclass(frozen=True)
class WindowSpec:
    radius_px: int

    def __post_init__(self):
        if self.radius_px < 0:
            raise DomainError("radius_px must be >= 0")

    @property
    def side(self) -> int:
        return 2 * self.radius_px + 1

    @classmethod
    def from_side(cls, side: int) -> "WindowSpec":
        if side < 1 or side % 2 == 0:
            raise DomainError(f"window side must be odd and positive, got {side}")
        return cls((side - 1) // 2)

    def h(self, n: int) -> float:
        return self.radius_px / n


@dataclass(frozen=True)
class PatchSpec:
    width_px: int

    def __post_init__(self):
        if self.width_px < 1 or self.width_px % 2 == 0:
            raise DomainError(f"patch width must be odd and >= 1, got {self.width_px}")

    @property
    def half(self) -> int:
        return self.width_px // 2


@dataclass(frozen=True)
class PhotometricSpec:
    family: str
    h_y: float

    def __post_init__(self):
        if self.family not in PHOTOMETRIC_FAMILIES:
            raise DomainError(f"unknown photometric family {self.family!r}")
        if not self.h_y >= 0:
            raise DomainError("h_y must be >= 0")


def spatial_window(i, spec: WindowSpec, n: int) -> np.ndarray:
    """Indices j (rows of a (k, d) array) with ||i - j||_inf <= radius, clipped to the grid."""
    i = np.atleast_1d(np.asarray(i, dtype=np.int64))
    if np.any(i < 0) or np.any(i >= n):
        raise DomainError(f"index {tuple(i)} outside grid of side {n}")
    ranges = [np.arange(max(0, k - spec.radius_px), min(n, k + spec.radius_px + 1)) for k in i]
    mesh = np.meshgrid(*ranges, indexing="ij")
    return np.stack([m.ravel() for m in mesh], axis=1)


def pad_reflect(y: np.ndarray, half: int) -> np.ndarray:
    """Mirror padding that does not repeat the edge sample: (1,2,3) -> (2,1,2,3,2)."""
    n = y.shape[0]
    if half > n - 1:
        raise DomainError(f"patch width {2 * half + 1} exceeds 2n-1 = {2 * n - 1}")
    return np.pad(y, half, mode="reflect") if half else y


def extract_patch(y, i, spec: PatchSpec) -> np.ndarray:
    y = check_grid(y, "y")
    i = tuple(int(k) for k in np.atleast_1d(i))
    padded = pad_reflect(y, spec.half)
    window = tuple(slice(k, k + spec.width_px) for k in i)
    return padded[window].ravel()


def patch_means(y, spec: PatchSpec) -> np.ndarray:
    """Mean of every reflect-padded patch, same shape as ``y``."""
    y = check_grid(y, "y")
    w = spec.width_px
    total = box_sum(pad_reflect(y, spec.half), w)
    return total / (w ** y.ndim)


def box_sum(a: np.ndarray, width: int) -> np.ndarray:
    """Sum over every ``width``-wide cube (valid region only).

    Terms are added one shifted slice at a time in a fixed order, so a
    width-1 sum returns its input unchanged.
    """
    out = a
    for axis in range(a.ndim):
        m = out.shape[axis] - width + 1
        lead = (slice(None),) * axis
        acc = out[lead + (slice(0, m),)].copy()
        for k in range(1, width):
            acc += out[lead + (slice(k, k + m),)]
        out = acc
    return out


def yf_gate(y_i: float, y_j: float, h_y: float) -> int:
    return int(abs(y_i - y_j) <= h_y)


def nlm_euclid_gate(patch_i, patch_j, h_y: float) -> int:
    p = np.asarray(patch_i, dtype=np.float64)
    q = np.asarray(patch_j, dtype=np.float64)
    if p.shape != q.shape:
        raise DomainError(f"patch length mismatch: {p.shape} vs {q.shape}")
    return int(np.sqrt(np.sum((p - q) ** 2)) <= h_y)


def nlm_avg_gate(mean_i: float, mean_j: float, h_y: float) -> int:
    return int(abs(mean_i - mean_j) <= h_y)


def mo_gate(mask, i, j) -> int:
    mask = np.asarray(mask, dtype=bool)
    return int(mask[tuple(np.atleast_1d(i))] == mask[tuple(np.atleast_1d(j))])


def boundary_distance(mask) -> np.ndarray:
    """Chessboard distance (pixels) from each pixel to the nearest pixel of
    opposite membership; ``inf`` everywhere when the mask is uniform."""
    mask = np.asarray(mask, dtype=bool)
    if mask.all() or not mask.any():
        return np.full(mask.shape, np.inf)
    inside = ndimage.distance_transform_cdt(mask, metric="chessboard")
    outside = ndimage.distance_transform_cdt(~mask, metric="chessboard")
    return np.where(mask, inside, outside).astype(np.float64)


def bo_gate(dist_field, i, j) -> int:
    """Strict: 1 iff ||i - j||_inf < dist(i). Not symmetric in (i, j)."""
    i = np.atleast_1d(np.asarray(i))
    j = np.atleast_1d(np.asarray(j))
    return int(np.max(np.abs(i - j)) < np.asarray(dist_field)[tuple(i)])
