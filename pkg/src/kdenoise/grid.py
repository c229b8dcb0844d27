"""Lattice geometry, Gaussian noise injection and error metrics.

Images are plain numpy arrays of shape ``(n,) * d`` holding intensities on
the [0, 1] scale. Pixel ``i = (i_1, ..., i_d)`` (1-based) sits at the lattice
point ``((i_1 - 1/2)/n, ..., (i_d - 1/2)/n)``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


class DomainError(ValueError):
    """Raised when an argument lies outside an operation's domain."""


def check_grid(values, name="grid") -> np.ndarray:
    """Return ``values`` as a float array, checking it is a cubic lattice."""
    arr = np.asarray(values, dtype=np.float64)
    if arr.ndim == 0:
        raise DomainError(f"{name} must have at least one dimension")
    n = arr.shape[0]
    if any(s != n for s in arr.shape) or n == 0:
        raise DomainError(f"{name} must have shape (n,)*d, got {arr.shape}")
    return arr


def lattice_point(index, n: int) -> tuple[float, ...]:
    """Continuous coordinate of the 1-based multi-index ``index``."""
    if n < 1:
        raise DomainError("n must be positive")
    index = tuple(int(k) for k in np.atleast_1d(index))
    for k in index:
        if not 1 <= k <= n:
            raise DomainError(f"index component {k} outside 1..{n}")
    return tuple((k - 0.5) / n for k in index)


def lattice_coordinates(n: int, d: int) -> list[np.ndarray]:
    """Coordinate arrays (one per axis) for every pixel of an n^d grid."""
    axis = (np.arange(1, n + 1) - 0.5) / n
    return list(np.meshgrid(*([axis] * d), indexing="ij"))


@dataclass(frozen=True)
class NoiseSpec:
    sigma: float
    seed: int = 0
    replica_index: int = 0

    def __post_init__(self):
        if not self.sigma >= 0:
            raise DomainError(f"sigma must be >= 0, got {self.sigma}")
        if self.replica_index < 0:
            raise DomainError("replica_index must be >= 0")


_TWO_PI = 2.0 * np.pi
_U53 = 2.0 ** -53


def standard_normal_field(seed: int, replica_index: int, start: int, count: int) -> np.ndarray:
    """Standard normals for pixel linear indices ``start .. start+count-1``.

    Each pixel consumes two 64-bit words of a Philox-4x64 stream keyed by
    ``(seed, replica_index)``; word pair ``2k, 2k+1`` is owned by pixel ``k``,
    so any chunking of the index range reproduces the same values.
    """
    if count <= 0:
        return np.empty(0)
    key = [int(seed) & 0xFFFFFFFFFFFFFFFF, int(replica_index) & 0xFFFFFFFFFFFFFFFF]
    first_word = 2 * start
    block, skip = divmod(first_word, 4)
    gen = np.random.Philox(key=key, counter=[block, 0, 0, 0])
    words = gen.random_raw(skip + 2 * count)[skip:]
    # u1 in (0, 1], u2 in [0, 1)
    u1 = ((words[0::2] >> np.uint64(11)).astype(np.float64) + 1.0) * _U53
    u2 = (words[1::2] >> np.uint64(11)).astype(np.float64) * _U53
    return np.sqrt(-2.0 * np.log(u1)) * np.cos(_TWO_PI * u2)


def add_noise(truth, spec: NoiseSpec) -> np.ndarray:
    """Observation ``y = f + eps`` with i.i.d. N(0, sigma^2) noise, unclipped."""
    f = check_grid(truth, "truth")
    if spec.sigma == 0:
        return f.copy()
    z = standard_normal_field(spec.seed, spec.replica_index, 0, f.size)
    return f + spec.sigma * z.reshape(f.shape)


def mse(estimate, truth) -> float:
    a = np.asarray(estimate, dtype=np.float64)
    b = np.asarray(truth, dtype=np.float64)
    if a.shape != b.shape:
        raise DomainError(f"shape mismatch: {a.shape} vs {b.shape}")
    return float(np.mean((a - b) ** 2))


@dataclass(frozen=True)
class ErrorReport:
    """Monte-Carlo error decomposition over ``n_replicas`` estimates.

    ``variance`` is the unbiased (divisor m-1) sample variance, averaged over
    pixels. For any finite replica count m the exact algebraic identity

        mse == sq_bias + (m - 1)/m * variance

    holds, and ``E[mse] = E[sq_bias] + E[variance]*(m-1)/m`` in expectation.
    """

    mse: float
    sq_bias: float
    variance: float
    n_replicas: int
    mse_stderr: float = float("nan")

    @property
    def variance_term(self) -> float:
        m = self.n_replicas
        return self.variance * (m - 1) / m


def bias_variance(truth, estimates) -> ErrorReport:
    f = check_grid(truth, "truth")
    stack = np.asarray([np.asarray(e, dtype=np.float64) for e in estimates])
    m = stack.shape[0]
    if m < 2:
        raise DomainError("bias_variance needs at least 2 replicas")
    if stack.shape[1:] != f.shape:
        raise DomainError("replica shape does not match truth")
    mean_est = stack.mean(axis=0)
    sq_bias = float(np.mean((mean_est - f) ** 2))
    variance = float(np.mean(stack.var(axis=0, ddof=1)))
    per_replica = np.mean((stack - f) ** 2, axis=tuple(range(1, stack.ndim)))
    return ErrorReport(
        mse=float(per_replica.mean()),
        sq_bias=sq_bias,
        variance=variance,
        n_replicas=m,
        mse_stderr=float(per_replica.std(ddof=1) / np.sqrt(m)),
    )
