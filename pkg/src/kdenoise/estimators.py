"""Whole-grid estimators: LF, YF, NLM, NLM-average, MO and BO as LPR.

All six families share one accumulation loop. For every spatial offset
``o`` in the box window (raster order) the family's gate is evaluated for
all pixels at once and the active pairs are added to per-pixel sums

    M_t = sum_j o^t          (|t| <= 2r, integer moments in pixel units)
    b_s = sum_j o^s * y_j    (|s| <= r)

from which the normal equations are assembled and solved in one batch.
Working in pixel units keeps the moments exact; since the ridge is scaled
by the diagonal of the normal matrix, the intercept is the same as in
continuous coordinates.
Because only the gate differs between families, families that produce the
same active sets produce bit-identical estimates.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np

from .grid import DomainError, check_grid
from .kernels import (PatchSpec, PhotometricSpec, WindowSpec, boundary_distance,
                      box_sum, pad_reflect, patch_means)
from .lpr import LprConfig, basis, clip01, ridge_solve_batch

_BATCH_ELEMS = 1 << 22

FAMILIES = ("LF", "YF", "NLM", "NLM_AVG", "MO", "BO")

_FAMILY_ALIASES = {
    "lf": "LF", "yf": "YF", "nlm": "NLM", "nlm_avg": "NLM_AVG", "nlm-avg": "NLM_AVG",
    "nlmavg": "NLM_AVG", "mo": "MO", "bo": "BO",
}

_GATE_KIND = {"YF": "yf", "NLM": "nlm_euclid", "NLM_AVG": "nlm_avg", "MO": "mo_truth"}


def normalize_family(name: str) -> str:
    key = name.strip()
    if key in FAMILIES:
        return key
    try:
        return _FAMILY_ALIASES[key.lower()]
    except KeyError:
        raise DomainError(f"unknown estimator family {name!r}") from None


@dataclass(frozen=True)
class MethodConfig:
    family: str
    window: WindowSpec
    patch: PatchSpec | None = None
    photometric: PhotometricSpec | None = None
    lpr: LprConfig = field(default_factory=LprConfig)

    def __post_init__(self):
        fam = normalize_family(self.family)
        object.__setattr__(self, "family", fam)
        if fam in ("LF", "BO") and self.photometric is not None:
            raise DomainError(f"{fam} takes no photometric bandwidth")
        if fam in ("YF", "NLM", "NLM_AVG"):
            if self.photometric is None:
                raise DomainError(f"{fam} requires a photometric bandwidth")
            if self.photometric.family != _GATE_KIND[fam]:
                raise DomainError(f"{fam} needs a {_GATE_KIND[fam]} gate, got {self.photometric.family}")
        if fam == "MO" and self.photometric is not None and self.photometric.family != "mo_truth":
            raise DomainError("MO only accepts a 'mo_truth' photometric gate")
        if fam in ("NLM", "NLM_AVG") and self.patch is None:
            raise DomainError(f"{fam} requires a patch width")

    @property
    def label(self) -> str:
        return f"{self.family}{self.lpr.r}"


@dataclass
class DenoiseResult:
    estimate: np.ndarray
    fallback_count: int
    active_size_stats: tuple[float, float, float]
    active_counts: np.ndarray | None = None


def _offsets(radius: int, d: int):
    return itertools.product(range(-radius, radius + 1), repeat=d)


def _regions(o, n):
    """Slices (dst, src) pairing pixel i in dst with i + o in src."""
    dst = tuple(slice(max(0, -k), n - max(0, k)) for k in o)
    src = tuple(slice(max(0, k), n + min(0, k)) for k in o)
    return dst, src


class _Gate:
    """Vectorized gate for one family; ``__call__(o, dst, src)`` -> bool array or None."""

    def __init__(self, y, cfg: MethodConfig, oracle_mask, oracle_truth):
        self.family = cfg.family
        self.n = y.shape[0]
        fam = cfg.family
        if fam == "LF":
            return
        if fam in ("YF", "NLM", "NLM_AVG"):
            self.h_y = cfg.photometric.h_y
        if fam == "YF":
            self.values = y
        elif fam == "NLM_AVG":
            self.values = patch_means(y, cfg.patch)
        elif fam == "NLM":
            self.half = cfg.patch.half
            self.width = cfg.patch.width_px
            self.padded = pad_reflect(y, self.half)
        elif fam == "MO":
            if oracle_mask is not None:
                self.mask = np.asarray(oracle_mask, dtype=bool)
                if self.mask.shape != y.shape:
                    raise DomainError("oracle mask shape does not match the image")
                self.family = "MO_MASK"
            elif oracle_truth is not None and cfg.photometric is not None:
                self.values = check_grid(oracle_truth, "oracle truth")
                self.h_y = cfg.photometric.h_y
                self.family = "YF"
            else:
                raise DomainError("MO requires an oracle mask (or a truth image with a mo_truth gate)")
        elif fam == "BO":
            if oracle_mask is None:
                raise DomainError("BO requires an oracle mask")
            mask = np.asarray(oracle_mask, dtype=bool)
            if mask.shape != y.shape:
                raise DomainError("oracle mask shape does not match the image")
            self.dist = boundary_distance(mask)

    def __call__(self, o, dst, src):
        fam = self.family
        if fam == "LF":
            return None
        if fam in ("YF", "NLM_AVG"):
            return np.abs(self.values[dst] - self.values[src]) <= self.h_y
        if fam == "MO_MASK":
            return self.mask[dst] == self.mask[src]
        if fam == "BO":
            return self.dist[dst] > max(abs(k) for k in o)
        # NLM: patch of pixel i occupies padded[i : i + width] on every axis
        w = self.width - 1
        a = tuple(slice(s.start, s.stop + w) for s in dst)
        b = tuple(slice(s.start, s.stop + w) for s in src)
        diff = self.padded[a] - self.padded[b]
        dist2 = box_sum(diff * diff, self.width)
        return np.sqrt(dist2) <= self.h_y


def active_sets(y, cfg: MethodConfig, oracle_mask=None, oracle_truth=None) -> np.ndarray:
    """Boolean stack ``A[k][i]``: is pixel ``i + offset_k`` in the active set of ``i``?

    Offsets run over the (capped) spatial window in raster order; entries
    whose partner falls outside the grid are False.
    """
    y = check_grid(y, "y")
    n, d = y.shape[0], y.ndim
    gate = _Gate(y, cfg, oracle_mask, oracle_truth)
    radius = min(cfg.window.radius_px, n - 1)
    offsets = list(_offsets(radius, d))
    out = np.zeros((len(offsets),) + y.shape, dtype=bool)
    for k, o in enumerate(offsets):
        dst, src = _regions(o, n)
        active = gate(o, dst, src)
        out[(k,) + dst] = True if active is None else active
    return out


def denoise(y, cfg: MethodConfig, oracle_mask=None, oracle_truth=None,
            keep_counts: bool = False) -> DenoiseResult:
    """Run one estimator family over the whole grid.

    MO gates on ``oracle_mask`` membership, or, when only ``oracle_truth`` is
    given together with a ``mo_truth`` gate, on |f_i - f_j| <= h_y over the
    true image. BO needs ``oracle_mask``. Gates of the NLM families compare
    patches of the noisy input ``y``.
    """
    y = check_grid(y, "y")
    n, d = y.shape[0], y.ndim
    gate = _Gate(y, cfg, oracle_mask, oracle_truth)
    radius = min(cfg.window.radius_px, n - 1)
    B = basis(d, cfg.lpr.r)
    q = B.q

    moment_exps = basis(d, 2 * cfg.lpr.r).exponents
    moment_index = {t: k for k, t in enumerate(moment_exps)}
    pair_index = [[moment_index[tuple(np.add(sa, sb))] for sb in B.exponents] for sa in B.exponents]

    n_mom = len(moment_exps)
    moments = np.zeros((n_mom, y.size))
    rhs = np.zeros((q,) + y.shape)
    offsets = list(_offsets(radius, d))
    # moment sums are integers, so batching them through a matrix product is exact
    batch = max(1, min(len(offsets), _BATCH_ELEMS // y.size))
    act_buf = np.zeros((batch,) + y.shape)
    coeff_buf = np.zeros((n_mom, batch))
    filled = 0
    for o in offsets:
        dst, src = _regions(o, n)
        active = gate(o, dst, src)
        slot = act_buf[filled]
        slot.fill(0.0)
        if active is None:
            slot[dst] = 1.0
            yv = y[src]
        else:
            slot[dst] = active
            yv = np.where(active, y[src], 0.0)
        coeff_buf[:, filled] = [np.prod(np.power(o, t)) for t in moment_exps]
        filled += 1
        if filled == batch:
            moments += coeff_buf @ act_buf.reshape(batch, -1)
            filled = 0
        for k, s in enumerate(B.exponents):
            c = float(np.prod(np.power(o, s)))
            if c != 0.0:
                rhs[(k,) + dst] += c * yv
    if filled:
        moments += coeff_buf[:, :filled] @ act_buf[:filled].reshape(filled, -1)
    moments = moments.reshape((n_mom,) + y.shape)

    counts = moments[0]
    flat_y = y.ravel()
    solvable = counts.ravel() >= q
    est = flat_y.copy()
    idx = np.flatnonzero(solvable)
    ok_count = 0
    if idx.size:
        flat_m = moments.reshape(len(moment_exps), -1)[:, idx]
        gram = np.empty((idx.size, q, q))
        for a in range(q):
            for b in range(q):
                gram[:, a, b] = flat_m[pair_index[a][b]]
        coef, ok = ridge_solve_batch(gram, rhs.reshape(q, -1)[:, idx].T, cfg.lpr.ridge)
        est[idx[ok]] = coef[ok, 0]
        ok_count = int(ok.sum())
    estimate = clip01(est).reshape(y.shape)
    c = counts.ravel()
    return DenoiseResult(
        estimate=estimate,
        fallback_count=int(flat_y.size - ok_count),
        active_size_stats=(float(c.min()), float(c.mean()), float(c.max())),
        active_counts=counts if keep_counts else None,
    )


# Spatial window sides minimizing the MO error on Bowl, per (r, sigma on 0-255).
TABLE1_SIGMAS = (5, 20, 50, 100)
TABLE1_SIDES = {
    0: (7, 13, 23, 35),
    1: (9, 17, 25, 33),
    2: (23, 41, 59, 61),
}
PATCH_SIDE = 7
# photometric bandwidth multipliers of sigma (0-255 scale); MO's is absolute
HY_FACTORS = {"YF": np.sqrt(10.0), "NLM_AVG": 0.29, "NLM": 13.1}
MO_HY_255 = 30.0


def table1_side(sigma255: float, r: int) -> int:
    if r not in TABLE1_SIDES:
        raise DomainError(f"no tabulated window for degree r={r}")
    k = int(np.argmin([abs(sigma255 - s) for s in TABLE1_SIGMAS]))
    return TABLE1_SIDES[r][k]


def default_bandwidths(family: str, sigma255: float, r: int = 0,
                       window_side: int | None = None, patch_side: int | None = None,
                       hy255: float | None = None, ridge: float = 1e-8) -> MethodConfig:
    """Experimental-protocol defaults; explicit arguments override them."""
    fam = normalize_family(family)
    side = table1_side(sigma255, r) if window_side is None else window_side
    window = WindowSpec.from_side(side)
    lpr = LprConfig(r=r, ridge=ridge)
    patch = None
    photometric = None
    if fam in ("NLM", "NLM_AVG"):
        patch = PatchSpec(PATCH_SIDE if patch_side is None else patch_side)
    if fam in HY_FACTORS:
        h = HY_FACTORS[fam] * sigma255 if hy255 is None else hy255
        photometric = PhotometricSpec(_GATE_KIND[fam], h / 255.0)
    elif fam == "MO":
        photometric = PhotometricSpec("mo_truth", (MO_HY_255 if hy255 is None else hy255) / 255.0)
    return MethodConfig(fam, window, patch, photometric, lpr)
