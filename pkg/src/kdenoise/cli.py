"""Command-line front end.

Noise levels and photometric bandwidths are given on the 0-255 scale and
divided by 255 internally. Exit codes: 0 success, 2 usage or validation
error, 1 internal error.

CSV schemas (header row always present):

    sweep:  scene,method,sigma255,r,h_side,mse255_mean,mse255_stderr,argmin
    rates:  kind,n,radius,mse255,slope,stderr,theory_slope
            (kind=point rows, then one kind=fit row)
    table:  scene,method,sigma255,replicas,mse255_mean,mse255_stderr,sq_bias255,variance255,runtime_s
    elbow:  sigma255,jnr,<one mse255 column per method>
"""

from __future__ import annotations

import argparse
import csv
import sys

import numpy as np

from . import bench, io, scenes
from .estimators import default_bandwidths, denoise, normalize_family
from .grid import DomainError, NoiseSpec, add_noise, mse


class UsageError(DomainError):
    pass


def _int_list(text: str) -> list[int]:
    try:
        return [int(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def _float_list(text: str) -> list[float]:
    try:
        return [float(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _scene_from_args(args) -> scenes.Scene:
    kind = args.kind
    n = args.n
    if kind == "blob":
        return scenes.make_blob(n, mu=args.mu, fg_level=args.fg, bg_level=args.bg,
                                center=(args.cx, args.cy), radius=args.radius)
    if kind == "bowl":
        return scenes.make_bowl(n, mu=args.mu, center=(args.cx, args.cy), radius=args.radius,
                                curvature=args.curvature, bg_level=args.bg, bg_slope=args.bg_slope)
    if kind == "swoosh":
        return scenes.make_swoosh(n, mu=args.mu, a=args.a, mu_left=args.mu_left, bg_level=args.bg)
    if kind == "stripes":
        if not 0.0 < args.duty < 1.0:
            raise UsageError(f"--duty must lie in (0, 1), got {args.duty}")
        return scenes.make_stripes(n, mu=args.mu, period=args.period_px / n, duty=args.duty,
                                   bg_level=args.bg)
    if kind == "jump1d":
        return scenes.make_piecewise_1d(n, [args.bg], [args.fg], args.breakpoint)
    if kind == "zigzag1d":
        return scenes.make_zigzag_1d(n, slope=args.slope, period=args.period, base=args.bg,
                                     jump=args.mu)
    raise UsageError(f"unknown scene kind {kind!r}")


_GEN_DEFAULTS = {
    "blob": dict(mu=0.6, fg=0.8, bg=0.2, radius=0.3),
    "bowl": dict(mu=0.3, bg=0.2, radius=0.3),
    "swoosh": dict(mu=0.3, bg=0.2),
    "stripes": dict(mu=1.0, bg=0.0),
    "jump1d": dict(mu=0.6, fg=0.8, bg=0.2),
    "zigzag1d": dict(mu=0.0, bg=0.1),
}


def cmd_generate(args):
    for key, value in _GEN_DEFAULTS[args.kind].items():
        if getattr(args, key) is None:
            setattr(args, key, value)
    scene = _scene_from_args(args)
    io.write_kdn(args.out, scene.truth)
    mask_path, meta_path = io.sidecar_paths(args.out)
    io.write_kdn(mask_path, scene.omega_mask.astype(np.float64))
    io.write_metadata(meta_path, scene.metadata())
    print(f"wrote {args.out} ({scene.class_tag}, n={scene.n}, d={scene.d}, mu={scene.mu:g})")


def cmd_noise(args):
    truth = io.read_kdn(args.input)
    y = add_noise(truth, NoiseSpec(args.sigma255 / 255.0, args.seed, args.replica))
    io.write_kdn(args.out, y)


def cmd_denoise(args):
    y = io.read_kdn(args.input)
    fam = normalize_family(args.method)
    if fam in ("NLM", "NLM_AVG") and args.patch_side is not None and (
            args.patch_side < 1 or args.patch_side % 2 == 0):
        raise UsageError(f"--patch-side must be an odd positive integer, got {args.patch_side}")
    if args.window_side is not None and (args.window_side < 1 or args.window_side % 2 == 0):
        raise UsageError(f"--window-side must be an odd positive integer, got {args.window_side}")
    cfg = default_bandwidths(fam, args.sigma255, args.r, window_side=args.window_side,
                             patch_side=args.patch_side, hy255=args.hy255, ridge=args.ridge)
    mask = truth = None
    if args.truth:
        truth = io.read_kdn(args.truth)
    if fam in ("MO", "BO"):
        if args.mo_gate == "truth" and fam == "MO":
            if truth is None:
                raise UsageError("--mo-gate truth requires --truth")
        elif not args.mask:
            raise UsageError(f"{fam} is an oracle method and requires --mask")
        else:
            mask = io.read_kdn(args.mask) > 0.5
    res = denoise(y, cfg, oracle_mask=mask,
                  oracle_truth=truth if (fam == "MO" and mask is None) else None)
    io.write_kdn(args.out, res.estimate)
    print(f"method={cfg.label} window={cfg.window.side}"
          + (f" patch={cfg.patch.width_px}" if cfg.patch else "")
          + (f" hy255={cfg.photometric.h_y * 255:.6g}" if cfg.photometric and mask is None else "")
          + f" fallback={res.fallback_count}")
    if truth is not None:
        print(f"mse255={mse(res.estimate, truth) * 255.0 ** 2:.6g}")


def cmd_export_pgm(args):
    io.write_pgm(args.out, io.read_kdn(args.input))


def cmd_import_pgm(args):
    io.write_kdn(args.out, io.read_pgm(args.input))


def _writer(path):
    if path in (None, "-"):
        return csv.writer(sys.stdout, lineterminator="\n"), None
    fh = open(path, "w", newline="")
    return csv.writer(fh), fh


def _named_scene(name: str, n: int) -> scenes.Scene:
    if name not in scenes.SCENE_BUILDERS:
        raise UsageError(f"unknown scene {name!r}; choose from {sorted(scenes.SCENE_BUILDERS)}")
    return scenes.SCENE_BUILDERS[name](n)


def cmd_sweep(args):
    scene = _named_scene(args.scene, args.n)
    sides = args.sides or list(range(3, 42, 2))
    res = bench.bandwidth_sweep(scene, args.method, args.sigma255, args.r, sides,
                                replicas=args.replicas, seed=args.seed, workers=args.threads)
    w, fh = _writer(args.out)
    w.writerow(["scene", "method", "sigma255", "r", "h_side", "mse255_mean", "mse255_stderr", "argmin"])
    best = res.argmin_side
    for row in res.rows:
        w.writerow([args.scene, res.family, args.sigma255, args.r, row.h_side,
                    f"{row.mse_mean:.6g}", f"{row.mse_stderr:.6g}", int(row.h_side == best)])
    if fh:
        fh.close()


def cmd_rates(args):
    if args.d != 1:
        raise UsageError("rate fits are implemented for d=1 scenes")
    fam = normalize_family(args.method)
    scene_name = args.scene or ("jump" if fam == "LF" else "zigzag")
    if scene_name not in bench.RATE_SCENES:
        raise UsageError(f"unknown rate scene {scene_name!r}; choose from {sorted(bench.RATE_SCENES)}")
    r = args.r if args.r is not None else (0 if fam == "LF" else 1)
    fit = bench.rate_fit(bench.RATE_SCENES[scene_name], fam, args.sigma255 / 255.0, args.n,
                         replicas=args.replicas, r=r, alpha=args.alpha, seed=args.seed,
                         workers=args.threads)
    w, fh = _writer(args.out)
    w.writerow(["kind", "n", "radius", "mse255", "slope", "stderr", "theory_slope"])
    for n, rad, m in zip(fit.n_values, fit.radii, fit.mse_values):
        w.writerow(["point", n, rad, f"{m * 255.0 ** 2:.6g}", "", "", ""])
    w.writerow(["fit", "", "", "", f"{fit.fitted_slope:.6g}", f"{fit.stderr:.6g}",
                f"{fit.theory_slope:.6g}"])
    if fh:
        fh.close()


TABLE_PRESETS = {
    "paper-table2-lite": dict(scenes=("blob", "bowl", "swoosh", "stripes"),
                              methods=("LF", "YF", "NLM", "NLM_AVG", "MO"),
                              sigmas=(5, 20, 50, 100), r=(0,), n=64, replicas=3),
    "paper-table2": dict(scenes=("blob", "bowl", "swoosh", "stripes"),
                         methods=("LF", "YF", "NLM", "NLM_AVG", "MO"),
                         sigmas=(5, 20, 50, 100), r=(0, 1, 2), n=256, replicas=5),
}


def cmd_table(args):
    if args.preset:
        if args.preset not in TABLE_PRESETS:
            raise UsageError(f"unknown preset {args.preset!r}")
        p = dict(TABLE_PRESETS[args.preset])
    else:
        p = dict(scenes=("blob",), methods=("LF", "YF"), sigmas=(20,), r=(0,), n=128, replicas=5)
    for key in ("scenes", "methods", "sigmas", "r", "n", "replicas"):
        value = getattr(args, key.replace("-", "_"), None)
        if value is not None:
            p[key] = value
    named = {name: _named_scene(name, p["n"]) for name in p["scenes"]}
    methods = [(normalize_family(m), r) for m in p["methods"] for r in p["r"]]
    report = bench.method_table(named, methods, p["sigmas"], replicas=p["replicas"],
                                seed=args.seed, workers=args.threads)
    w, fh = _writer(args.out)
    w.writerow(["scene", "method", "sigma255", "replicas", "mse255_mean", "mse255_stderr",
                "sq_bias255", "variance255", "runtime_s"])
    for cell in report.cells():
        recs = [rec for rec in report.records if (rec.scene, rec.method, rec.sigma255) == cell]
        vals = np.array([rec.mse for rec in recs])
        err = vals.std(ddof=1) / np.sqrt(len(vals)) if len(vals) > 1 else float("nan")
        w.writerow([cell[0], cell[1], cell[2], len(vals), f"{vals.mean():.6g}", f"{err:.6g}",
                    f"{report.sq_bias.get(cell, float('nan')):.6g}",
                    f"{report.variance.get(cell, float('nan')):.6g}",
                    f"{sum(rec.runtime for rec in recs):.4g}"])
    if fh:
        fh.close()


def cmd_elbow(args):
    scene = scenes.make_blob(args.n)
    methods = [normalize_family(m) for m in args.methods]
    rows = bench.elbow_probe(args.sigmas, n=args.n, replicas=args.replicas, r=args.r,
                             seed=args.seed, scene=scene, methods=methods, workers=args.threads)
    w, fh = _writer(args.out)
    w.writerow(["sigma255", "jnr"] + methods)
    for row in rows:
        w.writerow([row["sigma255"], f"{row['jnr']:.6g}"] + [f"{row[m]:.6g}" for m in methods])
    if fh:
        fh.close()


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="kdenoise", description=__doc__.split("\n\n")[0])
    parser.add_argument("--seed", type=int, default=0, help="master seed (default 0)")
    parser.add_argument("--threads", type=int, default=None,
                        help="worker cap; falls back to $KDN_THREADS, then 1")
    sub = parser.add_subparsers(dest="command", required=True)

    g = sub.add_parser("generate", help="synthesize a ground-truth scene")
    g.add_argument("kind", choices=sorted(_GEN_DEFAULTS))
    g.add_argument("--n", type=int, default=256)
    g.add_argument("--mu", type=float)
    g.add_argument("--fg", type=float)
    g.add_argument("--bg", type=float)
    g.add_argument("--radius", type=float)
    g.add_argument("--cx", type=float, default=0.5)
    g.add_argument("--cy", type=float, default=0.5)
    g.add_argument("--curvature", type=float, default=4.0)
    g.add_argument("--bg-slope", type=float, default=0.3)
    g.add_argument("--a", type=float, default=0.03, help="swoosh half-thickness")
    g.add_argument("--mu-left", type=float, default=None)
    g.add_argument("--period-px", type=int, default=6)
    g.add_argument("--duty", type=float, default=0.5)
    g.add_argument("--breakpoint", type=float, default=0.5)
    g.add_argument("--slope", type=float, default=1.0)
    g.add_argument("--period", type=float, default=0.25)
    g.add_argument("--out", required=True)
    g.set_defaults(func=cmd_generate)

    nz = sub.add_parser("noise", help="add Gaussian noise to a grid")
    nz.add_argument("--in", dest="input", required=True)
    nz.add_argument("--sigma255", type=float, required=True)
    nz.add_argument("--replica", type=int, default=0)
    nz.add_argument("--out", required=True)
    nz.set_defaults(func=cmd_noise)

    d = sub.add_parser("denoise", help="run one estimator on a grid")
    d.add_argument("--in", dest="input", required=True)
    d.add_argument("--method", required=True, help="lf, yf, nlm, nlm-avg, mo, bo")
    d.add_argument("--sigma255", type=float, required=True)
    d.add_argument("--r", type=int, default=0, choices=(0, 1, 2))
    d.add_argument("--window-side", type=int)
    d.add_argument("--patch-side", type=int)
    d.add_argument("--hy255", type=float)
    d.add_argument("--ridge", type=float, default=1e-8)
    d.add_argument("--mask")
    d.add_argument("--mo-gate", choices=("mask", "truth"), default="mask")
    d.add_argument("--truth")
    d.add_argument("--out", required=True)
    d.set_defaults(func=cmd_denoise)

    e = sub.add_parser("export-pgm", help="KDN1 -> 8-bit P5 PGM (lossy)")
    e.add_argument("--in", dest="input", required=True)
    e.add_argument("--out", required=True)
    e.set_defaults(func=cmd_export_pgm)

    i = sub.add_parser("import-pgm", help="8-bit P5 PGM -> KDN1")
    i.add_argument("--in", dest="input", required=True)
    i.add_argument("--out", required=True)
    i.set_defaults(func=cmd_import_pgm)

    s = sub.add_parser("sweep", help="MSE versus window side")
    s.add_argument("--method", required=True)
    s.add_argument("--scene", default="bowl")
    s.add_argument("--sigma255", type=float, required=True)
    s.add_argument("--r", type=int, default=0)
    s.add_argument("--n", type=int, default=256)
    s.add_argument("--sides", type=_int_list)
    s.add_argument("--replicas", type=int, default=5)
    s.add_argument("--out")
    s.set_defaults(func=cmd_sweep)

    rt = sub.add_parser("rates", help="log-log MSE slope in n")
    rt.add_argument("--method", required=True)
    rt.add_argument("--d", type=int, default=1)
    rt.add_argument("--sigma255", type=float, required=True)
    rt.add_argument("--n", type=_int_list, required=True)
    rt.add_argument("--scene", default=None, help="jump, zigzag, zigzag-fixed, smooth")
    rt.add_argument("--r", type=int, default=None)
    rt.add_argument("--alpha", type=float, default=1.0)
    rt.add_argument("--replicas", type=int, default=20)
    rt.add_argument("--out")
    rt.set_defaults(func=cmd_rates)

    t = sub.add_parser("table", help="multi-method MSE table")
    t.add_argument("--preset")
    t.add_argument("--scenes", type=lambda s: tuple(s.split(",")))
    t.add_argument("--methods", type=lambda s: tuple(s.split(",")))
    t.add_argument("--sigmas", type=_float_list)
    t.add_argument("--r", type=_int_list)
    t.add_argument("--n", type=int)
    t.add_argument("--replicas", type=int)
    t.add_argument("--out")
    t.set_defaults(func=cmd_table)

    el = sub.add_parser("elbow", help="adaptive methods versus noise level on Blob")
    el.add_argument("--sigmas", type=_float_list, default=[5, 20, 50, 100, 153, 200])
    el.add_argument("--methods", type=lambda s: s.split(","), default=["YF", "NLM", "NLM_AVG", "MO"])
    el.add_argument("--n", type=int, default=128)
    el.add_argument("--r", type=int, default=0)
    el.add_argument("--replicas", type=int, default=5)
    el.add_argument("--out")
    el.set_defaults(func=cmd_elbow)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        args.func(args)
    except (DomainError, FileNotFoundError) as exc:
        print(f"kdenoise {args.command}: error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # noqa: BLE001
        print(f"kdenoise {args.command}: internal error: {exc!r}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
