"""Monte-Carlo experiment harness.

Every cell (scene, method, sigma, replica) is a pure function of the master
seed: replica ``k`` draws its noise from stream ``(seed, k)``, so results do
not depend on how cells are scheduled across workers. MSE values reported
by the sweep and table helpers are in 0-255^2 units.
"""

from __future__ import annotations

import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy import stats

from .estimators import default_bandwidths, denoise, normalize_family
from .grid import DomainError, NoiseSpec, add_noise, bias_variance, mse
from .scenes import Scene, make_blob, make_piecewise_1d, make_zigzag_1d

SCALE2 = 255.0 ** 2


def resolve_workers(workers: int | None) -> int:
    if workers is None:
        workers = int(os.environ.get("KDN_THREADS", "1") or 1)
    return max(1, int(workers))


def _map(fn, items, workers):
    items = list(items)
    workers = resolve_workers(workers)
    if workers == 1 or len(items) <= 1:
        return [fn(it) for it in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


def run_replica(scene: Scene, cfg, sigma: float, seed: int, replica: int) -> np.ndarray:
    """Noisy observation of ``scene`` denoised with ``cfg``; sigma on the [0,1] scale."""
    y = add_noise(scene.truth, NoiseSpec(sigma, seed, replica))
    return denoise(y, cfg, oracle_mask=scene.omega_mask).estimate


@dataclass
class SweepRow:
    h_side: int
    mse_mean: float
    mse_stderr: float


@dataclass
class SweepResult:
    family: str
    sigma255: float
    r: int
    rows: list[SweepRow]

    @property
    def argmin_side(self) -> int:
        return min(self.rows, key=lambda row: row.mse_mean).h_side


def bandwidth_sweep(scene: Scene, family: str, sigma255: float, r: int,
                    sides: Sequence[int], replicas: int = 5, seed: int = 0,
                    workers: int | None = None, **overrides) -> SweepResult:
    """Mean MSE per odd window side; replicas share noise across sides."""
    sides = sorted(set(int(s) for s in sides))
    if any(s % 2 == 0 or s < 1 for s in sides):
        raise DomainError("window sides must be odd and positive")
    fam = normalize_family(family)
    cells = [(s, k) for s in sides for k in range(replicas)]

    def cell(item):
        side, k = item
        cfg = default_bandwidths(fam, sigma255, r, window_side=side, **overrides)
        return mse(run_replica(scene, cfg, sigma255 / 255.0, seed, k), scene.truth) * SCALE2

    values = np.array(_map(cell, cells, workers)).reshape(len(sides), replicas)
    err = values.std(axis=1, ddof=1) / np.sqrt(replicas) if replicas > 1 else np.full(len(sides), np.nan)
    rows = [SweepRow(s, float(m), float(e)) for s, m, e in zip(sides, values.mean(axis=1), err)]
    return SweepResult(fam, sigma255, r, rows)


@dataclass
class MseRecord:
    scene: str
    method: str
    sigma255: float
    replica: int
    mse: float
    runtime: float


@dataclass
class MseReport:
    """Per-replica records plus per-cell means, all in 0-255^2 units."""

    records: list[MseRecord]
    sq_bias: dict = field(default_factory=dict)
    variance: dict = field(default_factory=dict)

    def mean(self, scene: str, method: str, sigma255: float) -> float:
        vals = [rec.mse for rec in self.records
                if rec.scene == scene and rec.method == method and rec.sigma255 == sigma255]
        if not vals:
            raise KeyError((scene, method, sigma255))
        return float(np.mean(vals))

    def cells(self):
        seen = {}
        for rec in self.records:
            seen.setdefault((rec.scene, rec.method, rec.sigma255), None)
        return list(seen)


def method_table(scenes: dict[str, Scene], methods: Sequence[tuple[str, int]],
                 sigmas255: Sequence[float], replicas: int = 5, seed: int = 0,
                 workers: int | None = None) -> MseReport:
    """MSE grid over scenes x methods x sigmas with protocol-default bandwidths."""
    cells = [(name, normalize_family(fam), r, s)
             for name in scenes for (fam, r) in methods for s in sigmas255]

    def cell(item):
        name, fam, r, s = item
        scene = scenes[name]
        cfg = default_bandwidths(fam, s, r)
        out = []
        for k in range(replicas):
            t0 = time.perf_counter()
            est = run_replica(scene, cfg, s / 255.0, seed, k)
            out.append((est, time.perf_counter() - t0))
        return out

    results = _map(cell, cells, workers)
    report = MseReport([])
    for (name, fam, r, s), reps in zip(cells, results):
        label = f"{fam}{r}"
        truth = scenes[name].truth
        for k, (est, dt) in enumerate(reps):
            report.records.append(MseRecord(name, label, s, k, mse(est, truth) * SCALE2, dt))
        if replicas >= 2:
            ev = bias_variance(truth, [e for e, _ in reps])
            report.sq_bias[(name, label, s)] = ev.sq_bias * SCALE2
            report.variance[(name, label, s)] = ev.variance * SCALE2
    return report


class DegenerateFitError(DomainError):
    """Raised when the MSE curve cannot be fitted on a log scale."""


@dataclass
class RateFit:
    n_values: list[int]
    mse_values: list[float]
    fitted_slope: float
    stderr: float
    theory_slope: float
    radii: list[int] = field(default_factory=list)
    calibration: float = float("nan")


def theory_exponents(family: str, d: int, alpha: float,
                     smooth: bool = False) -> tuple[float, float]:
    """(bandwidth exponent gamma, MSE slope in n) for h = c*(sigma^2/n^d)^gamma.

    On a cartoon, LF pays for blurring the edge; without a discontinuity
    (``smooth=True``) every linear family follows the Hölder-class law.
    """
    fam = normalize_family(family)
    if fam not in ("LF", "MO", "BO"):
        raise DomainError(f"no rate law registered for {fam}")
    if fam == "LF" and not smooth:
        return 1.0 / (d + 1), -d / (d + 1)
    return 1.0 / (d + 2 * alpha), -2 * alpha * d / (d + 2 * alpha)


# MSE values (on the [0,1]^2 scale) at or below this are numerically zero: the
# relative ridge alone leaves an error of order ridge^2 on exact data.
MSE_FLOOR = 1e-14


def fit_loglog(n_values, mse_values):
    """Least-squares slope of log(mse) against log(n) and its standard error."""
    n_values = np.asarray(n_values, dtype=np.float64)
    mse_values = np.asarray(mse_values, dtype=np.float64)
    if len(np.unique(n_values)) < 4:
        raise DomainError("rate fit needs at least 4 distinct n values")
    if np.any(mse_values <= MSE_FLOOR) or not np.all(np.isfinite(mse_values)):
        raise DegenerateFitError(
            "MSE is numerically zero (or not finite) at some n, so no log-log slope exists; "
            f"got {mse_values.tolist()}")
    res = stats.linregress(np.log(n_values), np.log(mse_values))
    return float(res.slope), float(res.stderr)


DEFAULT_CALIBRATION = tuple(np.geomspace(0.25, 8.0, 11))


def rate_fit(scene_for_n: Callable[[int], Scene], family: str, sigma: float,
             n_grid: Sequence[int], replicas: int = 20, r: int = 0, alpha: float = 1.0,
             seed: int = 0, calibration: Sequence[float] = DEFAULT_CALIBRATION,
             calibration_replicas: int | None = None, workers: int | None = None) -> RateFit:
    """Empirical MSE rate in n under the theoretical bandwidth law.

    ``sigma`` is on the [0,1] scale. The window radius at side length n is
    ``round(c * (sigma^2/n^d)^gamma * n)`` pixels, where ``c`` minimizes the
    mean MSE at the smallest n over the ``calibration`` grid. Scenes tagged
    ``smooth`` (no discontinuity) use the Hölder-class exponent for every
    family.
    """
    n_grid = sorted(int(n) for n in n_grid)
    if len(set(n_grid)) < 4:
        raise DomainError("rate fit needs at least 4 distinct n values")
    fam = normalize_family(family)
    first = scene_for_n(n_grid[0])
    gamma, theory = theory_exponents(fam, first.d, alpha, smooth=first.class_tag == "smooth")
    d = first.d
    sigma255 = sigma * 255.0

    def radius_for(c, n):
        h = c * (sigma ** 2 / n ** d) ** gamma if sigma > 0 else c / n
        return max(0, int(round(h * n)))

    def mean_mse(n, radius, reps, seed_):
        scene = scene_for_n(n)
        cfg = default_bandwidths(fam, sigma255, r, window_side=2 * radius + 1)
        vals = _map(lambda k: mse(run_replica(scene, cfg, sigma, seed_, k), scene.truth),
                    range(reps), workers)
        return float(np.mean(vals))

    n0 = n_grid[0]
    cal_reps = calibration_replicas or max(2, replicas // 2)
    if sigma > 0:
        scores = [mean_mse(n0, radius_for(c, n0), cal_reps, seed + 1) for c in calibration]
        c_best = float(calibration[int(np.argmin(scores))])
    else:
        c_best = 1.0
    radii = [radius_for(c_best, n) for n in n_grid]
    values = [mean_mse(n, rad, replicas, seed) for n, rad in zip(n_grid, radii)]
    slope, err = fit_loglog(n_grid, values)
    return RateFit(n_grid, values, slope, err, theory, radii, c_best)


ELBOW_METHODS = ("YF", "NLM", "NLM_AVG", "MO")


def elbow_probe(sigmas255: Sequence[float], n: int = 128, replicas: int = 5, r: int = 0,
                seed: int = 0, scene: Scene | None = None,
                methods: Sequence[str] = ELBOW_METHODS, workers: int | None = None) -> list[dict]:
    """MSE (0-255^2 units) of the adaptive families versus noise level."""
    scene = make_blob(n) if scene is None else scene
    rows = []
    for s in sigmas255:
        row = {"sigma255": float(s), "jnr": scene.mu * 255.0 / s if s > 0 else np.inf}
        for fam in methods:
            cfg = default_bandwidths(fam, s, r)
            vals = _map(lambda k: mse(run_replica(scene, cfg, s / 255.0, seed, k), scene.truth),
                        range(replicas), workers)
            row[normalize_family(fam)] = float(np.mean(vals)) * SCALE2
        rows.append(row)
    return rows


def jump_scene_1d(n: int) -> Scene:
    """Two-level 1-D cartoon (0.2 | 0.8 at x = 1/2)."""
    return make_piecewise_1d(n, [0.2], [0.8], 0.5)


def zigzag_scene_1d(n: int, slope: float = 4.0, period0: float = 0.125, n0: int = 512) -> Scene:
    """Lipschitz zigzag with a jump; the period shrinks like n^(-1/3).

    The shrinking period keeps the kink spacing proportional to the
    alpha = 1 bandwidth law, which is the hardest case for that class.
    """
    period = period0 * (n / n0) ** (-1.0 / 3.0)
    return make_zigzag_1d(n, slope=slope, period=period, base=0.1, jump=0.5)


def fixed_zigzag_scene_1d(n: int) -> Scene:
    return make_zigzag_1d(n, slope=1.0, period=0.5, base=0.1, jump=0.5)


def smooth_scene_1d(n: int) -> Scene:
    """Jump-free zigzag: LF and MO coincide."""
    return make_zigzag_1d(n, slope=4.0, period=0.125 * (n / 512) ** (-1.0 / 3.0), base=0.1)


RATE_SCENES = {
    "jump": jump_scene_1d,
    "zigzag": zigzag_scene_1d,
    "zigzag-fixed": fixed_zigzag_scene_1d,
    "smooth": smooth_scene_1d,
}
