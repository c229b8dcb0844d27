"""Local polynomial regression with box weights.

The fit at pixel i solves the ridged normal equations

    (X^T X + ridge*diag(X^T X)) a = X^T y

over the active rows, where row j of X holds the monomials ``(x_j - x_i)^s``
for ``|s| <= r``. The constant term comes first, so the estimate is ``a[0]``.
Scaling the ridge by the diagonal keeps it a negligible stabilizer whatever
the units of the offsets (pixels or fractions of the unit square).
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from math import comb

import numpy as np

from .grid import DomainError

DEFAULT_RIDGE = 1e-8


@dataclass(frozen=True)
class MonomialBasis:
    d: int
    r: int
    exponents: tuple[tuple[int, ...], ...]

    @property
    def q(self) -> int:
        return len(self.exponents)

    def degrees(self) -> np.ndarray:
        return np.array([sum(s) for s in self.exponents])

    def design(self, offsets) -> np.ndarray:
        """Design matrix with one row per offset vector."""
        offsets = np.asarray(offsets, dtype=np.float64).reshape(-1, self.d)
        cols = [np.prod(offsets ** np.asarray(s), axis=1) for s in self.exponents]
        return np.stack(cols, axis=1)


def basis(d: int, r: int) -> MonomialBasis:
    """Graded lexicographic monomial basis, constant term first."""
    if d < 1 or r < 0:
        raise DomainError(f"need d >= 1 and r >= 0, got d={d}, r={r}")
    exps = []
    for deg in range(r + 1):
        block = [s for s in itertools.product(range(deg, -1, -1), repeat=d) if sum(s) == deg]
        exps.extend(sorted(block, reverse=True))
    assert len(exps) == comb(r + d, d)
    return MonomialBasis(d, r, tuple(exps))


@dataclass(frozen=True)
class LprConfig:
    r: int = 0
    ridge: float = DEFAULT_RIDGE
    fallback: str = "passthrough"

    def __post_init__(self):
        if self.r < 0:
            raise DomainError("r must be >= 0")
        if not self.ridge > 0:
            raise DomainError("ridge must be > 0")
        if self.fallback != "passthrough":
            raise DomainError(f"unsupported fallback {self.fallback!r}")


def cholesky_solve_batch(A: np.ndarray, b: np.ndarray):
    """Solve a stack of small SPD systems ``A[k] @ x[k] = b[k]``.

    Column Cholesky vectorized across the batch. Returns ``(x, ok)`` where
    ``ok`` flags systems whose pivots stayed positive; rows with
    ``ok == False`` hold NaN.
    """
    A = np.asarray(A, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    m, q = b.shape
    L = np.zeros_like(A)
    ok = np.ones(m, dtype=bool)
    for j in range(q):
        pivot = A[:, j, j] - np.einsum("kt,kt->k", L[:, j, :j], L[:, j, :j])
        ok &= pivot > 0
        ljj = np.sqrt(np.where(pivot > 0, pivot, np.nan))
        L[:, j, j] = ljj
        for i in range(j + 1, q):
            L[:, i, j] = (A[:, i, j] - np.einsum("kt,kt->k", L[:, i, :j], L[:, j, :j])) / ljj
    z = np.empty_like(b)
    for i in range(q):
        z[:, i] = (b[:, i] - np.einsum("kt,kt->k", L[:, i, :i], z[:, :i])) / L[:, i, i]
    x = np.empty_like(b)
    for i in range(q - 1, -1, -1):
        x[:, i] = (z[:, i] - np.einsum("kt,kt->k", L[:, i + 1:, i], x[:, i + 1:])) / L[:, i, i]
    return x, ok


def ridge_solve_batch(gram: np.ndarray, rhs: np.ndarray, ridge: float = DEFAULT_RIDGE):
    """Solve ``(G + ridge*diag(G)) a = X^T y`` for a stack of normal systems.

    The system is Jacobi-equilibrated to unit diagonal and ``ridge`` is added
    to that diagonal, so the stabilizer does not depend on the coordinate
    units of the offsets. A column that is identically zero over the active
    rows gets coefficient 0, the limit of any ridge.
    """
    gram = np.asarray(gram, dtype=np.float64)
    rhs = np.asarray(rhs, dtype=np.float64)
    q = rhs.shape[1]
    diag = np.einsum("kii->ki", gram)
    live = diag > 0
    scale = np.where(live, 1.0 / np.sqrt(np.where(live, diag, 1.0)), 0.0)
    A = gram * scale[:, :, None] * scale[:, None, :]
    A[:, np.arange(q), np.arange(q)] = np.where(live, 1.0 + ridge, 1.0)
    a, ok = cholesky_solve_batch(A, rhs * scale)
    return a * scale, ok


def lpr_fit(offsets, weights, values, cfg: LprConfig, y_center: float) -> float:
    """Intercept of the weighted polynomial fit, unclipped.

    ``offsets`` are ``x_j - x_i`` in continuous units. Falls back to
    ``y_center`` when fewer than q rows are active.
    """
    values = np.asarray(values, dtype=np.float64).ravel()
    weights = np.asarray(weights).ravel()
    offsets = np.asarray(offsets, dtype=np.float64)
    offsets = offsets.reshape(-1, 1) if offsets.ndim == 1 else offsets
    if not len(values) == len(weights) == len(offsets):
        raise DomainError("offsets, weights and values must have equal length")
    B = basis(offsets.shape[1], cfg.r)
    active = weights != 0
    if active.sum() < B.q:
        return float(y_center)
    X = B.design(offsets[active])
    a, ok = ridge_solve_batch((X.T @ X)[None], (X.T @ values[active])[None], cfg.ridge)
    if not ok[0]:
        return float(y_center)
    return float(a[0, 0])


def clip01(v):
    return np.clip(v, 0.0, 1.0)
