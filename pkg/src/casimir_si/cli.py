"""Command-line entry point: ``casimir-si <subcommand> [options]``.

Lengths are nm and forces pN on the command line and in files.
"""
from __future__ import annotations

import argparse
import logging
import sys
import warnings
from pathlib import Path

import numpy as np

from . import __version__
from .analysis import analyze
from .compare import force_ratio, write_agreement_csv, write_budget_csv, write_ratio_csv
from .config import ConfigError, RunConfig, load_config, parse_grid, with_overrides
from .electrostatics import CalibrationError, CalibrationSweep, fit_calibration
from .lifshitz import QuadratureError, RoughnessError, force_curve, separation_grid
from .materials import EV_TO_RAD_S, InsufficientOpticalDataError
from .pipeline import SynthesisSpec, load_ensemble, save_ensemble, synthesize_ensemble

log = logging.getLogger("casimir_si")

EPSILON_MATERIALS = ("gold", "silicon", "silicon_table")


class UsageError(Exception):
    pass


def _config(args) -> RunConfig:
    cfg = load_config(args.config) if args.config else RunConfig()
    grid = parse_grid(args.grid) if getattr(args, "grid", None) else None
    noise = None if getattr(args, "noise_pn", None) is None else args.noise_pn * 1e-12
    if noise is not None and noise < 0:
        raise UsageError("--noise-pn must be non-negative")
    if getattr(args, "n_sets", None) is not None and args.n_sets < 2:
        raise UsageError("--n-sets must be at least 2")
    if args.threads is not None and args.threads < 1:
        raise UsageError("--threads must be at least 1")
    return with_overrides(cfg, grid=grid, seed=args.seed, threads=args.threads,
                          n_sets=getattr(args, "n_sets", None), noise_sigma=noise,
                          output_dir=Path(args.out) if args.out else None)


def _outdir(cfg):
    cfg.output_dir.mkdir(parents=True, exist_ok=True)
    return cfg.output_dir


def _theory(cfg, z, plate="silicon", roughness=None):
    model = cfg.theory_model(plate, roughness)
    return model.curve(z, threads=cfg.threads)


# ---------------------------------------------------------------------------
# subcommands


def cmd_epsilon(args, cfg):
    try:
        lo, hi, num = (float(p) for p in args.xi.split(":"))
    except ValueError:
        raise UsageError(f"--xi must be min:max:count, got {args.xi!r}") from None
    if not (0 < lo < hi and num >= 2):
        raise UsageError("--xi needs 0 < min < max and count >= 2")
    scale = EV_TO_RAD_S if args.freq_unit == "eV" else 1.0
    xi_user = np.geomspace(lo, hi, int(num))
    xi = xi_user * scale
    cols = []
    for name in args.material:
        if name == "gold":
            model = cfg.gold()
        elif name == "silicon":
            model = cfg.silicon(augment=True)
        else:
            model = cfg.silicon(augment=False)
        cols.append(model.exact(xi))
    out = _outdir(cfg) / "epsilon.csv"
    with out.open("w") as fh:
        fh.write(",".join([f"xi_{args.freq_unit}"] + [f"eps_{m}" for m in args.material]) + "\n")
        for i, x in enumerate(xi_user):
            fh.write(",".join([f"{x:.9e}"] + [f"{c[i]:.12e}" for c in cols]) + "\n")
    print(f"wrote {out}")


def cmd_force(args, cfg):
    z = separation_grid(*cfg.grid)
    if args.mode == "ideal":
        curve = force_curve(z, cfg.geometry(), ideal=True)
    else:
        curve = _theory(cfg, z, args.plate, roughness=args.mode == "rough")
    out = _outdir(cfg) / "force.csv"
    curve.to_csv(out)
    print(f"{curve.provenance}: {len(curve)} points, F({z[0] * 1e9:.2f} nm) = {curve.F[0] * 1e12:.4f} pN")
    print(f"wrote {out}")


def cmd_calibrate(args, cfg):
    sweep = CalibrationSweep.load(args.sweep)
    R = args.R_um * 1e-6 if args.R_um else (cfg.calib_R or cfg.R)
    fit = fit_calibration(sweep, R, confidence=cfg.calib_confidence, n_bootstrap=cfg.calib_bootstrap,
                          rng=cfg.calib_seed if args.seed is None else args.seed)
    text = fit.report()
    out = _outdir(cfg) / "calibration.txt"
    out.write_text(text + "\n")
    print(text)
    print(f"wrote {out}")


def _synth(cfg, theory):
    spec = SynthesisSpec(n_sets=cfg.n_sets, noise_sigma=cfg.noise_sigma, systematic_offsets=cfg.budget.systematics,
                         grid=cfg.grid, rng_seed=cfg.seed)
    return synthesize_ensemble(spec, theory, threads=cfg.threads)


def cmd_synthesize(args, cfg):
    z = separation_grid(*cfg.grid)
    theory = _theory(cfg, z)
    ens = _synth(cfg, theory)
    out = _outdir(cfg)
    save_ensemble(ens, out / "ensemble.csv")
    theory.to_csv(out / "theory.csv")
    print(f"{ens.n} sets x {ens.z.size} points")
    print(f"wrote {out / 'ensemble.csv'}")


def cmd_analyze(args, cfg):
    from . import plotting

    if args.ensemble and args.synthesize:
        raise UsageError("give an ensemble file or --synthesize, not both")
    if args.ensemble:
        ens = load_ensemble(args.ensemble)
        z = ens.z
    elif args.synthesize:
        z = separation_grid(*cfg.grid)
        ens = None
    else:
        raise UsageError("analyze needs an ensemble file or --synthesize")
    theory = _theory(cfg, z)
    if ens is None:
        ens = _synth(cfg, theory)
    if ens.n < 2:
        raise UsageError("ensemble needs at least 2 sets")
    res = analyze(ens, theory, cfg.budget)
    out = _outdir(cfg)
    res.report.to_csv(out / "report.csv")
    write_agreement_csv(res.report.agreement, out / "agreement.csv")
    write_budget_csv(out / "budget.csv", res.mean, res.exp_budget, res.theor_budget, res.envelope)
    theory.to_csv(out / "theory.csv")
    res.mean.to_csv(out / "mean.csv")
    summary = res.summary()
    (out / "summary.txt").write_text(summary + "\n")
    if not args.no_figures:
        plotting.plot_mean_force(res.mean, out / "mean_force.svg", theory)
        plotting.plot_relative_errors(z, res.exp_budget.delta_total / np.abs(res.mean.F),
                                      res.theor_budget.delta_theor, out / "relative_errors.svg")
        plotting.plot_differences(res.report, out / "differences.svg")
    print(summary)
    print(f"wrote {out}")


def cmd_ratio(args, cfg):
    z = separation_grid(*cfg.grid)
    rough = False if args.smooth else None
    a = _theory(cfg, z, "silicon", rough)
    b = _theory(cfg, z, "gold", rough)
    rc = force_ratio(a, b)
    out = _outdir(cfg)
    write_ratio_csv(rc, out / "ratio.csv")
    if not args.no_figures:
        from . import plotting
        plotting.plot_ratio(rc, out / "ratio.svg", "Au-Si / Au-Au")
    print(f"ratio at {rc.z[0] * 1e9:.2f} nm = {rc.ratio[0]:.4f}, at {rc.z[-1] * 1e9:.2f} nm = {rc.ratio[-1]:.4f}")
    print(f"trend: {rc.trend} (strictly monotone: {rc.strictly_monotone})")
    print(f"wrote {out / 'ratio.csv'}")


# ---------------------------------------------------------------------------


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON run configuration")
    common.add_argument("--out", help="output directory (overrides the configuration)")
    common.add_argument("--seed", type=int, help="random seed")
    common.add_argument("--threads", type=int, help="worker threads for grid evaluation")
    common.add_argument("-v", "--verbose", action="store_true")

    grid = argparse.ArgumentParser(add_help=False)
    grid.add_argument("--grid", help="separation grid zmin:zmax:step in nm")

    synth = argparse.ArgumentParser(add_help=False)
    synth.add_argument("--n-sets", type=int, help="number of synthetic sets")
    synth.add_argument("--noise-pn", type=float, help="Gaussian noise per point, pN")

    p = argparse.ArgumentParser(prog="casimir-si", description="Casimir force between a gold sphere and a "
                                "silicon plate: theory, calibration and error analysis.")
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True)

    e = sub.add_parser("epsilon", parents=[common], help="permittivity along the imaginary frequency axis")
    e.add_argument("--material", nargs="+", choices=EPSILON_MATERIALS, default=["gold"])
    e.add_argument("--xi", default="1e13:1e18:51", help="min:max:count, log spaced")
    e.add_argument("--freq-unit", choices=("rad_s", "eV"), default="rad_s")
    e.set_defaults(func=cmd_epsilon)

    f = sub.add_parser("force", parents=[common, grid], help="force-distance curve")
    f.add_argument("--mode", choices=("rough", "smooth", "ideal"), default="rough")
    f.add_argument("--plate", choices=("silicon", "gold"), default="silicon")
    f.set_defaults(func=cmd_force)

    c = sub.add_parser("calibrate", parents=[common], help="fit contact separation and residual potential")
    c.add_argument("sweep", help="CSV V_applied,piezo_nm,F_pN,run_id")
    c.add_argument("--R-um", type=float, help="sphere radius, um")
    c.set_defaults(func=cmd_calibrate)

    s = sub.add_parser("synthesize", parents=[common, grid, synth], help="synthetic measurement ensemble")
    s.set_defaults(func=cmd_synthesize)

    a = sub.add_parser("analyze", parents=[common, grid, synth], help="error budget and theory comparison")
    a.add_argument("ensemble", nargs="?", help="CSV set_id,z_nm,F_pN")
    a.add_argument("--synthesize", action="store_true", help="analyze a synthetic ensemble instead")
    a.add_argument("--no-figures", action="store_true")
    a.set_defaults(func=cmd_analyze)

    r = sub.add_parser("ratio", parents=[common, grid], help="Au-Si / Au-Au force ratio")
    r.add_argument("--smooth", action="store_true", help="ignore roughness")
    r.add_argument("--no-figures", action="store_true")
    r.set_defaults(func=cmd_ratio)
    return p


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    warnings.simplefilter("default")
    try:
        cfg = _config(args)
        args.func(args, cfg)
    except UsageError as exc:
        print(f"casimir-si {args.command}: {exc}", file=sys.stderr)
        return 2
    except (ConfigError, FileNotFoundError, CalibrationError, InsufficientOpticalDataError,
            QuadratureError, RoughnessError, ValueError, OverflowError) as exc:
        print(f"casimir-si {args.command}: error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
