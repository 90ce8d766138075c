"""Command-line entry point ``sphmean``.

Subcommands: ``phantom``, ``forward``, ``reconstruct``, ``verify``,
``report``. Exit codes: 0 success, 1 verification failure, 2 config or usage
error, 3 geometry error, 4 reconstruction failure.
"""

import argparse
import os
import sys
from pathlib import Path

import numpy as np

from . import darboux
from .data_model import parse_config, parse_phantom, read_dataset, write_dataset
from .errors import ConfigError, SphMeanError
from .fieldio import PolarField, read_polar_field, write_polar_field
from .harmonics import AngularSampleSet, decompose
from .profile import read_profile_csv, uniform_grid, write_profile_csv
from .reconstruct import prior_grid, reconstruct_field, relative_l2_error
from .transform import generate_dataset, trace_sampling
from .verify import SUITES, run_suite


def _fmt(x):
    return f"{x:.17g}"


def _load(args):
    cfg = parse_config(args.config)
    if getattr(args, "seed", None) is not None:
        cfg = cfg.replace(seed=args.seed)
    return cfg


def _out_dir(args, cfg):
    out = args.out or cfg.out_dir
    if not out:
        raise ConfigError("no output directory: pass --out or set out_dir in the config")
    path = Path(out)
    path.mkdir(parents=True, exist_ok=True)
    return path


def _phantom(cfg):
    if not cfg.phantom:
        raise ConfigError("config has no 'phantom' entry")
    return parse_phantom(cfg.phantom, cfg.n)


def _profile_grid(cfg):
    top = cfg.R_ext if cfg.R_ext is not None else cfg.A
    g = uniform_grid(cfg.r0, top, cfg.radial_points)
    return g[1:] if g[0] <= 0 else g


def cmd_phantom(args):
    cfg = _load(args)
    out = _out_dir(args, cfg)
    field = _phantom(cfg)
    ang = AngularSampleSet.build(cfg.n, cfg.angular_points)
    profiles = decompose(field, _profile_grid(cfg), cfg.M_max, ang)
    for mode, prof in profiles.items():
        write_profile_csv(prof, out / f"phantom_{mode}.csv")
    write_polar_field(PolarField.sample(field, prior_grid(cfg), ang), out / f"prior_{cfg.prior}.csv")
    (out / "phantom.txt").write_text(f"n = {cfg.n}\nphantom = {field.describe()}\n")
    print(f"wrote {len(profiles)} mode profiles and prior_{cfg.prior}.csv to {out}")
    return 0


def cmd_forward(args):
    cfg = _load(args)
    out = _out_dir(args, cfg)
    field = _phantom(cfg)
    s_grid = uniform_grid(cfg.a, cfg.A, cfg.s_points)
    centers, radii = trace_sampling(cfg.geometry, cfg.n, s_grid, cfg.extrap_radii, cfg.angular_points, cfg.rho_max)
    ds = generate_dataset(field, cfg.geometry, centers, radii, cfg.quad_order)
    sigma = args.noise_sigma
    if sigma < 0:
        raise ConfigError("--noise-sigma must be nonnegative")
    if sigma > 0:
        rng = np.random.default_rng(cfg.seed)
        ds = ds.with_values(ds.values + sigma * rng.standard_normal(ds.values.size))
    write_dataset(ds, out / "dataset.csv")
    print(
        f"samples={ds.values.size} dropped={ds.dropped} max_abs_value={_fmt(float(np.max(np.abs(ds.values))))}"
        f" noise_sigma={_fmt(sigma)}"
    )
    return 0


def _read_prior(args, cfg, truth):
    if args.prior is not None:
        if not os.path.exists(args.prior):
            raise ConfigError(f"prior file not found: {args.prior}")
        return read_polar_field(args.prior, cfg.n).profiles(cfg.M_max)
    if truth is None:
        raise ConfigError("no prior: pass --prior or set a phantom in the config")
    return truth


def cmd_reconstruct(args):
    cfg = _load(args)
    out = _out_dir(args, cfg)
    dataset_path = args.dataset or out / "dataset.csv"
    if not os.path.exists(dataset_path):
        raise ConfigError(f"dataset not found: {dataset_path}")
    ds = read_dataset(dataset_path)
    truth = _phantom(cfg) if cfg.phantom else None
    prior = _read_prior(args, cfg, truth)
    rec = reconstruct_field(ds, prior, cfg)
    lo, hi = cfg.trim_bounds
    for mode, prof in rec.profiles.items():
        write_profile_csv(prof, out / f"recon_{mode}.csv")
    ang = AngularSampleSet.build(cfg.n, cfg.angular_points)
    write_polar_field(PolarField.sample(rec.field, uniform_grid(lo, hi, 41), ang), out / "field.csv")
    with open(out / "diagnostics.csv", "w") as fh:
        fh.write("mode,status,failed_nodes,trim_lo,trim_hi,kernel_residual\n")
        for d in rec.diagnostics:
            status = "ok" if d.ok else "failed"
            fh.write(f"{d.mode},{status},{d.failed_nodes},{_fmt(lo)},{_fmt(hi)},{_fmt(d.kernel_residual)}\n")
    lines = []
    for d in rec.diagnostics:
        if d.ok:
            lines.append(f"mode {d.mode}: ok failed_nodes={d.failed_nodes} kernel_residual={d.kernel_residual:.6e}")
        else:
            lines.append(f"mode {d.mode}: FAILED {d.message}")
    if truth is not None:
        err = relative_l2_error(rec.field, truth, lo, hi, cfg.n)
        lines.append(f"rel_l2 = {err:.6e} on Ann({lo:g}, {hi:g})")
    text = "\n".join(lines) + "\n"
    (out / "reconstruction.txt").write_text(text)
    sys.stdout.write(text)
    return 0


def cmd_verify(args):
    names = list(SUITES) if args.suite == "all" else [args.suite]
    if args.suite != "all" and args.suite not in SUITES:
        raise ConfigError(f"unknown suite {args.suite!r}; choose from all, {', '.join(SUITES)}")
    ok = True
    print("suite,check,measured,tolerance,status")
    with darboux.corrupted_q(args.corrupt_q):
        for name in names:
            for row in run_suite(name):
                print(f"{name},{row.format()}")
                ok &= row.passed
    return 0 if ok else 1


def cmd_report(args):
    cfg = _load(args)
    out = _out_dir(args, cfg)
    truth = _phantom(cfg) if cfg.phantom else None
    exact = {}
    if truth is not None:
        exact = {str(m): fn for m, fn in truth.exact_profiles.items()}
    files = sorted(out.glob("recon_*.csv"))
    if not files:
        raise ConfigError(f"no recon_*.csv files in {out}; run 'reconstruct' first")
    written = 0
    for path in files:
        key = path.stem[len("recon_") :]
        prof = read_profile_csv(path)
        _write_dat(out / f"{path.stem}.dat", prof.radii, prof.values)
        written += 1
        if key in exact:
            ref = exact[key](prof.radii)
            _write_dat(out / f"{path.stem}_truth.dat", prof.radii, ref)
            _write_dat(out / f"{path.stem}_error.dat", prof.radii, np.abs(prof.values - ref))
            written += 2
    print(f"wrote {written} .dat files to {out}")
    return 0


def _write_dat(path, x, y):
    with open(path, "w") as fh:
        for a, b in zip(x, y):
            fh.write(f"{_fmt(a)} {_fmt(b)}\n")


def build_parser():
    p = argparse.ArgumentParser(prog="sphmean", description="Spherical mean transform toolkit.")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, out=True):
        sp.add_argument("--config", required=True, help="run configuration file")
        if out:
            sp.add_argument("--out", help="output directory (overrides out_dir)")
        sp.add_argument("--seed", type=int, help="random seed (overrides the config)")

    common(sub.add_parser("phantom", help="write phantom mode profiles and a prior field"))
    fw = sub.add_parser("forward", help="simulate spherical mean data")
    common(fw)
    fw.add_argument("--noise-sigma", type=float, default=0.0, help="Gaussian noise level")
    rc = sub.add_parser("reconstruct", help="recover the field on the annulus")
    common(rc)
    rc.add_argument("--dataset", help="dataset CSV (default: <out>/dataset.csv)")
    rc.add_argument("--prior", help="prior field CSV r,theta[,phi],value")
    vf = sub.add_parser("verify", help="run a self-check suite")
    vf.add_argument("--suite", required=True, help=f"one of: all, {', '.join(SUITES)}")
    vf.add_argument("--corrupt-q", type=float, default=0.0, help=argparse.SUPPRESS)
    common(sub.add_parser("report", help="write gnuplot .dat files from reconstruction output"))
    return p


COMMANDS = {
    "phantom": cmd_phantom,
    "forward": cmd_forward,
    "reconstruct": cmd_reconstruct,
    "verify": cmd_verify,
    "report": cmd_report,
}


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except SphMeanError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
