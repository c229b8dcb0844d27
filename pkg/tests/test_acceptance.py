"""End-to-end acceptance criteria, each at its stated tolerance and time budget.

Every test records one PASS/FAIL line that is printed in the terminal summary.
"""

import time

import numpy as np
import pytest

from kdenoise.bench import bandwidth_sweep, jump_scene_1d, method_table, rate_fit, zigzag_scene_1d
from kdenoise.bench import smooth_scene_1d, run_replica
from kdenoise.estimators import MethodConfig, active_sets, default_bandwidths, denoise
from kdenoise.grid import NoiseSpec, add_noise, bias_variance
from kdenoise.kernels import PatchSpec, PhotometricSpec, WindowSpec
from kdenoise.lpr import LprConfig, basis, lpr_fit
from kdenoise.scenes import make_blob, make_bowl, make_stripes
from reference import reference_denoise
from test_estimators import FAMILY_ORDER, random_case

RATE_GRID = [512, 1024, 2048, 4096, 8192, 16384]


class Timer:
    def __enter__(self):
        self.start = time.perf_counter()
        return self

    def __exit__(self, *exc):
        self.elapsed = time.perf_counter() - self.start


def test_01_polynomial_reproduction(acceptance_record):
    rng = np.random.default_rng(2024)
    worst = 0.0
    with Timer() as t:
        for k in range(100):
            r = k % 3
            side = int(rng.choice([3, 5, 7, 9]))
            n = 64
            g = np.arange(-(side // 2), side // 2 + 1) / n
            off = np.stack(np.meshgrid(g, g, indexing="ij"), axis=-1).reshape(-1, 2)
            B = basis(2, r)
            while True:
                w = (rng.random(len(off)) < 0.6).astype(int)
                X = B.design(off[w == 1])
                if X.shape[0] >= B.q and np.linalg.matrix_rank(X * n ** B.degrees()) == B.q:
                    break
            coef = rng.uniform(-1, 1, B.q)
            got = lpr_fit(off, w, B.design(off) @ coef, LprConfig(r), 0.0)
            worst = max(worst, abs(got - coef[0]))
    ok = worst <= 1e-6 and t.elapsed < 1.0
    acceptance_record("1 polynomial reproduction", ok,
                      f"max error {worst:.2e} (<= 1e-6), {t.elapsed:.2f}s (< 1s)")
    assert ok


def test_02_oracle_equivalence(acceptance_record):
    rng = np.random.default_rng(77)
    worst = 0.0
    with Timer() as t:
        for _ in range(50):
            for family in FAMILY_ORDER:
                for r in (0, 1):
                    y, cfg, kw, ref_kw = random_case(family, r, rng)
                    got = denoise(y, cfg, **kw).estimate
                    want = reference_denoise(y, family, cfg.window.radius_px, r, **ref_kw)
                    worst = max(worst, float(np.max(np.abs(got - want))))
    ok = worst <= 1e-9 and t.elapsed < 30
    acceptance_record("2 oracle equivalence", ok,
                      f"max deviation {worst:.2e} (<= 1e-9), {t.elapsed:.1f}s (< 30s)")
    assert ok


def test_03_lf_rate(acceptance_record):
    with Timer() as t:
        fit = rate_fit(jump_scene_1d, "LF", 50 / 255, RATE_GRID, replicas=20)
    ok = abs(fit.fitted_slope + 0.5) <= 0.1 and t.elapsed < 120
    acceptance_record("3 LF rate", ok,
                      f"slope {fit.fitted_slope:.3f} (target -0.5 +/- 0.1), {t.elapsed:.1f}s (< 120s)")
    assert ok


def test_04_mo_rate(acceptance_record):
    with Timer() as t:
        fit = rate_fit(zigzag_scene_1d, "MO", 50 / 255, RATE_GRID, replicas=20, r=1)
    ok = abs(fit.fitted_slope + 2 / 3) <= 0.1 and t.elapsed < 120
    acceptance_record("4 MO rate", ok,
                      f"slope {fit.fitted_slope:.3f} (target -0.667 +/- 0.1), {t.elapsed:.1f}s (< 120s)")
    assert ok


def test_05_low_noise_mimicry(acceptance_record):
    scene = make_blob(128, mu=153 / 255, fg_level=0.8, bg_level=0.8 - 153 / 255)
    sigma255 = 2.55
    yf_cfg = default_bandwidths("YF", sigma255, 0, hy255=51)
    mo_cfg = MethodConfig("MO", yf_cfg.window)
    with Timer() as t:
        mo_sets = active_sets(scene.truth, mo_cfg, oracle_mask=scene.omega_mask)
        fractions = []
        for k in range(20):
            y = add_noise(scene.truth, NoiseSpec(sigma255 / 255, 0, k))
            fractions.append(np.all(active_sets(y, yf_cfg) == mo_sets, axis=0).mean())
    worst = min(fractions)
    ok = worst >= 0.99 and t.elapsed < 60
    acceptance_record("5 low-noise YF/MO mimicry", ok,
                      f"min agreement {worst:.4f} (>= 0.99), {t.elapsed:.1f}s (< 60s)")
    assert ok


def test_06_table_orderings(acceptance_record):
    blob = make_blob(256)
    stripes = make_stripes(256, period=6 / 256)
    with Timer() as t:
        a = method_table({"blob": blob}, [("LF", 0), ("YF", 0)], [5], replicas=5)
        b = method_table({"stripes": stripes}, [("NLM", 0), ("NLM_AVG", 0)], [100], replicas=5)
        c = method_table({"blob": blob}, [("YF", 0), ("NLM_AVG", 0)], [100], replicas=5)
    yf5, lf5 = a.mean("blob", "YF0", 5), a.mean("blob", "LF0", 5)
    nlm, avg = b.mean("stripes", "NLM0", 100), b.mean("stripes", "NLM_AVG0", 100)
    avg_c, yf_c = c.mean("blob", "NLM_AVG0", 100), c.mean("blob", "YF0", 100)
    checks = {"a": yf5 < lf5 / 10, "b": nlm < avg / 10, "c": avg_c < yf_c}
    ok = all(checks.values()) and t.elapsed < 600
    acceptance_record(
        "6 table orderings", ok,
        f"(a) YF0 {yf5:.2f} vs LF0 {lf5:.2f}; (b) NLM0 {nlm:.1f} vs NLM-avg0 {avg:.1f}; "
        f"(c) NLM-avg0 {avg_c:.1f} vs YF0 {yf_c:.1f}; {t.elapsed:.0f}s (< 600s)")
    assert ok


def test_07_reductions(acceptance_record):
    rng = np.random.default_rng(11)
    mismatches = 0
    with Timer() as t:
        for k in range(20):
            n = int(rng.integers(6, 24))
            y = rng.random((n, n))
            win = WindowSpec(int(rng.integers(1, 4)))
            lpr = LprConfig(k % 3)
            h = float(rng.uniform(0.05, 0.5))
            yf = denoise(y, MethodConfig("YF", win, photometric=PhotometricSpec("yf", h),
                                         lpr=lpr)).estimate
            nlm1 = denoise(y, MethodConfig("NLM", win, PatchSpec(1),
                                           PhotometricSpec("nlm_euclid", h), lpr)).estimate
            yf_inf = denoise(y, MethodConfig("YF", win, photometric=PhotometricSpec("yf", np.inf),
                                             lpr=lpr)).estimate
            lf = denoise(y, MethodConfig("LF", win, lpr=lpr)).estimate
            mismatches += (not np.array_equal(nlm1, yf)) + (not np.array_equal(yf_inf, lf))
    ok = mismatches == 0 and t.elapsed < 10
    acceptance_record("7 NLM/YF reductions", ok,
                      f"{mismatches} non-identical outputs of 40, {t.elapsed:.2f}s (< 10s)")
    assert ok


def test_08_bandwidth_sweep(acceptance_record):
    with Timer() as t:
        res = bandwidth_sweep(make_bowl(256), "MO", 5, 0, list(range(1, 26, 2)), replicas=5)
    ok = 7 / 2 <= res.argmin_side <= 7 * 2 and t.elapsed < 300
    acceptance_record("8 bandwidth sweep", ok,
                      f"argmin side {res.argmin_side} (within [3.5, 14]), {t.elapsed:.1f}s (< 300s)")
    assert ok


def test_09_bias_variance_identity(acceptance_record):
    scene = smooth_scene_1d(1024)
    cfg = default_bandwidths("LF", 50, 0, window_side=25)
    with Timer() as t:
        estimates = [run_replica(scene, cfg, 50 / 255, 0, k) for k in range(100)]
        report = bias_variance(scene.truth, estimates)
    gap = abs(report.mse - (report.sq_bias + report.variance_term))
    ok = gap <= 3 * report.mse_stderr and t.elapsed < 120
    acceptance_record("9 bias-variance identity", ok,
                      f"|gap| {gap:.2e} vs 3 SE {3 * report.mse_stderr:.2e}, {t.elapsed:.1f}s (< 120s)")
    assert ok
