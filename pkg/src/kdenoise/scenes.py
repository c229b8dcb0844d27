"""Synthetic ground-truth scenes: cartoons, thin features, periodic patterns.

Every generator returns a :class:`Scene` whose mask is evaluated with the
pixel-center rule, so ``truth[i]`` is the foreground piece evaluated at the
lattice point ``x_i`` exactly when ``omega_mask[i]`` is set.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .grid import DomainError, lattice_coordinates

CLASS_TAGS = ("cartoon", "thin", "pattern", "smooth")


@dataclass
class Scene:
    truth: np.ndarray
    omega_mask: np.ndarray
    alpha: float
    mu: float
    class_tag: str
    params: dict = field(default_factory=dict)

    @property
    def n(self) -> int:
        return self.truth.shape[0]

    @property
    def d(self) -> int:
        return self.truth.ndim

    def metadata(self) -> dict:
        meta = {"class": self.class_tag, "alpha": self.alpha, "mu": self.mu,
                "d": self.d, "n": self.n}
        meta.update(self.params)
        return meta


@dataclass(frozen=True)
class JnrSpec:
    mu: float
    sigma: float

    @property
    def jnr(self) -> float:
        return self.mu / self.sigma


def _check_range(truth: np.ndarray, what: str):
    lo, hi = float(truth.min()), float(truth.max())
    if lo < 0.0 or hi > 1.0:
        raise DomainError(f"{what}: values span [{lo:.4g}, {hi:.4g}], outside [0, 1]")


def _check_level(value, name):
    if not 0.0 <= value <= 1.0:
        raise DomainError(f"{name}={value} outside [0, 1]")


def _check_disk(n, center, radius):
    if n < 2:
        raise DomainError("n must be at least 2")
    if radius <= 0:
        raise DomainError("radius must be positive")
    cx, cy = center
    if min(cx - radius, cy - radius) <= 0.0 or max(cx + radius, cy + radius) >= 1.0:
        raise DomainError(
            f"disk center={tuple(center)} radius={radius} touches the unit-square boundary")


def make_blob(n: int, mu: float = 0.6, fg_level: float = 0.8, bg_level: float = 0.2,
              center=(0.5, 0.5), radius: float = 0.3) -> Scene:
    """Piecewise-constant disk on a constant background."""
    _check_level(fg_level, "fg_level")
    _check_level(bg_level, "bg_level")
    if abs(fg_level - bg_level) < mu:
        raise DomainError(f"|fg_level - bg_level| = {abs(fg_level - bg_level):.4g} < mu = {mu}")
    _check_disk(n, center, radius)
    x0, x1 = lattice_coordinates(n, 2)
    mask = (x0 - center[0]) ** 2 + (x1 - center[1]) ** 2 < radius ** 2
    truth = np.where(mask, fg_level, bg_level).astype(np.float64)
    return Scene(truth, mask, np.inf, abs(fg_level - bg_level), "cartoon",
                 {"kind": "blob", "fg_level": fg_level, "bg_level": bg_level,
                  "radius": radius, "center": tuple(center)})


def bowl_level(mu, radius, curvature, bg_level, bg_slope):
    """Value of the bowl's foreground at the disk center."""
    return bg_level + abs(bg_slope) * radius + mu - curvature * radius ** 2


def make_bowl(n: int, mu: float = 0.3, center=(0.5, 0.5), radius: float = 0.3,
              curvature: float = 4.0, bg_level: float = 0.2, bg_slope: float = 0.3) -> Scene:
    """Radial quadratic disk over an affine ramp.

    Foreground: ``c0 + curvature*|x - center|^2``; background:
    ``bg_level + bg_slope*(x_1 - center_1)``. ``c0`` is chosen so the rim sits
    exactly ``mu`` above the highest background value on the circle.
    """
    _check_disk(n, center, radius)
    if mu <= 0:
        raise DomainError("mu must be positive")
    c0 = bowl_level(mu, radius, curvature, bg_level, bg_slope)
    x0, x1 = lattice_coordinates(n, 2)
    r2 = (x0 - center[0]) ** 2 + (x1 - center[1]) ** 2
    mask = r2 < radius ** 2
    fg = c0 + curvature * r2
    bg = bg_level + bg_slope * (x0 - center[0])
    truth = np.where(mask, fg, bg)
    _check_range(truth, "bowl")
    return Scene(truth, mask, np.inf if curvature == 0 else 2.0, mu, "cartoon",
                 {"kind": "bowl", "radius": radius, "center": tuple(center),
                  "curvature": curvature, "bg_level": bg_level, "bg_slope": bg_slope,
                  "center_value": c0})


def default_swoosh_curve(t):
    return 0.5 + 0.12 * np.sin(2.0 * np.pi * t)


def make_swoosh(n: int, mu: float = 0.3, a: float = 0.03,
                phi: Callable[[np.ndarray], np.ndarray] | None = None,
                mu_left: float | None = None, bg_level: float = 0.2) -> Scene:
    """Thin band ``{|x_2 - phi(x_1)| < a}`` around the graph of ``phi``.

    The jump grows linearly from ``mu`` at the right end (x_1 = 1) to
    ``mu_left`` at the left end (x_1 = 0).
    """
    if a < 4.0 / n:
        raise DomainError(f"thickness a={a} below 4/n={4.0 / n:.4g}")
    phi = default_swoosh_curve if phi is None else phi
    mu_left = mu if mu_left is None else mu_left
    t = np.linspace(0.0, 1.0, max(4 * n, 1024))
    curve = np.asarray(phi(t), dtype=np.float64)
    if curve.min() - a <= 0.0 or curve.max() + a >= 1.0:
        raise DomainError("swoosh band exits the unit square")
    x0, x1 = lattice_coordinates(n, 2)
    mask = np.abs(x1 - phi(x0)) < a
    jump = mu_left + (mu - mu_left) * x0
    truth = np.where(mask, bg_level + jump, bg_level)
    _check_range(truth, "swoosh")
    return Scene(truth, mask, np.inf, min(mu, mu_left), "thin",
                 {"kind": "swoosh", "a": a, "mu_left": mu_left, "bg_level": bg_level})


def _stripe_mask(n: int, d: int, period: float, duty: float) -> np.ndarray:
    period_px = period * n
    idx = np.arange(1, n + 1)
    if abs(period_px - round(period_px)) < 1e-9:
        # exact integer arithmetic on half-pixel units: x/period mod 1 = ((2i-1) mod 2p) / 2p
        p = int(round(period_px))
        inside = np.mod(2 * idx - 1, 2 * p) < 2 * p * duty
    else:
        phase = np.mod((idx - 0.5) / n / period, 1.0)
        inside = (phase > 0.0) & (phase < duty)
    shape = (n,) + (1,) * (d - 1)
    return np.broadcast_to(inside.reshape(shape), (n,) * d).copy()


def make_stripes(n: int, mu: float = 1.0, period: float = 6 / 256, duty: float = 0.5,
                 fg_level: float | None = None, bg_level: float = 0.0, d: int = 2) -> Scene:
    """Slabs of width ``duty*period`` repeated with period ``period`` along x_1."""
    if not 0.0 < duty < 1.0:
        raise DomainError(f"duty={duty} must lie in (0, 1)")
    if n * period < 2:
        raise DomainError(f"period {period} spans fewer than 2 pixels at n={n}")
    fg_level = bg_level + mu if fg_level is None else fg_level
    _check_level(fg_level, "fg_level")
    _check_level(bg_level, "bg_level")
    if abs(fg_level - bg_level) < mu:
        raise DomainError("stripe levels closer than mu")
    mask = _stripe_mask(n, d, period, duty)
    truth = np.where(mask, fg_level, bg_level).astype(np.float64)
    return Scene(truth, mask, np.inf, abs(fg_level - bg_level), "pattern",
                 {"kind": "stripes", "period": period, "duty": duty,
                  "fg_level": fg_level, "bg_level": bg_level})


def _as_piece(piece) -> Callable[[np.ndarray], np.ndarray]:
    if callable(piece):
        return piece
    coeffs = np.atleast_1d(np.asarray(piece, dtype=np.float64))
    return lambda x: np.polynomial.polynomial.polyval(x, coeffs)


def make_smooth_1d(n: int, coeffs: Sequence[float], alpha: float = np.inf) -> Scene:
    """Discontinuity-free 1-D scene ``f(x) = sum_k coeffs[k] x^k``."""
    x = (np.arange(1, n + 1) - 0.5) / n
    truth = np.asarray(_as_piece(coeffs)(x), dtype=np.float64) * np.ones(n)
    _check_range(truth, "smooth_1d")
    return Scene(truth, np.ones(n, dtype=bool), alpha, 0.0, "smooth",
                 {"kind": "smooth_1d", "coeffs": list(np.atleast_1d(coeffs))})


def make_piecewise_1d(n: int, left, right, breakpoint: float = 0.5,
                      alpha: float = np.inf) -> Scene:
    """Two-piece 1-D cartoon; Omega = {x < breakpoint} carries ``left``.

    Pieces are polynomial coefficient sequences or vectorized callables.
    """
    x = (np.arange(1, n + 1) - 0.5) / n
    mask = x < breakpoint
    if mask.all() or not mask.any():
        raise DomainError("breakpoint leaves one piece empty")
    fl, fr = _as_piece(left), _as_piece(right)
    truth = np.where(mask, fl(x), fr(x)).astype(np.float64)
    _check_range(truth, "piecewise_1d")
    mu = float(abs(fl(breakpoint) - fr(breakpoint)))
    return Scene(truth, mask, alpha, mu, "cartoon" if mu > 0 else "smooth",
                 {"kind": "piecewise_1d", "breakpoint": breakpoint})


def zigzag(x, slope: float, period: float, base: float):
    """Triangle wave with slopes +-slope, minimum ``base`` at multiples of period."""
    phase = np.mod(x / period, 1.0)
    return base + slope * period * (0.5 - np.abs(phase - 0.5))


def make_zigzag_1d(n: int, slope: float = 1.0, period: float = 0.25, base: float = 0.1,
                   jump: float = 0.0, breakpoint: float = 0.5) -> Scene:
    """Piecewise-linear Lipschitz (alpha = 1) scene, optionally with one jump.

    With ``jump > 0`` the right piece is lifted by ``jump`` so the scene is a
    1-D cartoon whose smooth pieces have Hölder exponent exactly 1.
    """
    x = (np.arange(1, n + 1) - 0.5) / n
    g = zigzag(x, slope, period, base)
    if jump == 0.0:
        mask = np.ones(n, dtype=bool)
        truth = g
    else:
        mask = x < breakpoint
        truth = np.where(mask, g, g + jump)
    _check_range(truth, "zigzag_1d")
    return Scene(truth.astype(np.float64), mask, 1.0, abs(jump),
                 "cartoon" if jump else "smooth",
                 {"kind": "zigzag_1d", "slope": slope, "period": period, "base": base,
                  "jump": jump, "breakpoint": breakpoint})


SCENE_BUILDERS = {
    "blob": make_blob,
    "bowl": make_bowl,
    "swoosh": lambda n: make_swoosh(n, a=max(0.03, 4.0 / n)),
    "stripes": lambda n: make_stripes(n, period=6.0 / n),
}
