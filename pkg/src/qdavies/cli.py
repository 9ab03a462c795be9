"""Command-line interface: ``qdavies <subcommand> ...``."""

import argparse
import csv
import json
import logging
import sys
from pathlib import Path

from . import CONFIG_SCHEMA_VERSION, __version__

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


def _model_args(p, size_default=8):
    g = p.add_argument_group("system and bath")
    g.add_argument("--model", choices=["gue", "chain", "anderson3d"], default="gue",
                   help="Hamiltonian family (default: gue)")
    g.add_argument("--size", type=int, default=size_default,
                   help="N for gue/chain, side length L for anderson3d")
    g.add_argument("--J", type=float, default=1.0, help="hopping scale")
    g.add_argument("--W", type=float, default=16.0, help="Anderson disorder strength")
    g.add_argument("--open", action="store_true", help="open boundaries (chain, anderson3d)")
    g.add_argument("--statistics", choices=["fermionic", "bosonic"], default="fermionic")
    g.add_argument("--beta", type=float, default=5.0)
    g.add_argument("--mu", type=float, default=0.0)
    g.add_argument("--cutoff", type=float, default=10.0, help="Ohmic cutoff frequency")
    g.add_argument("--J-int", dest="J_int", type=float, default=0.2, help="bath coupling")
    g.add_argument("--eta", action="store_true", help="include the principal-value shift")
    g.add_argument("--pattern", default="uniform",
                   help="coupling pattern: uniform | sublattice:p | random")


def _spectral_model(args):
    from .bath import OhmicDOS, SpectralModel
    return SpectralModel(args.statistics, beta=args.beta, mu=args.mu, coupling=args.J_int,
                         dos=OhmicDOS(args.cutoff), include_eta=args.eta)


def _hamiltonian(args, generator):
    from . import hamiltonians as hams
    params = {"J": args.J, "W": args.W, "periodic": not args.open}
    return hams.build(args.model, args.size, params, generator)


def _pattern(args, n, seed):
    from .generators import CouplingPattern
    return CouplingPattern.parse(args.pattern, n, seed)


def cmd_verify_equivalence(args):
    from . import rng
    from .certify import check_equivalence
    model = _spectral_model(args)
    worst, verdicts = 0.0, []
    print(f"{'sample':>6} {'N':>5} {'residual':>12} {'tolerance':>12} verdict")
    for s in range(args.samples):
        g = rng.stream(args.seed, rng.TAG_TEST, args.size, s)
        ham = _hamiltonian(args, g)
        check = check_equivalence(ham, model, _pattern(args, ham.n_sites, args.seed + s))
        tol = check.tolerance if args.tol is None else args.tol * check.tolerance / 1e-12
        verdict = None if check.passed is None else check.residual <= tol
        verdicts.append(verdict)
        worst = max(worst, check.residual / max(tol, 1e-300))
        label = "-" if verdict is None else ("PASS" if verdict else "FAIL")
        print(f"{s:>6} {ham.n_sites:>5} {check.residual:>12.3e} {tol:>12.3e} {label}")
    print(f"worst residual/tolerance: {worst:.3e}")
    return EXIT_FAIL if any(v is False for v in verdicts) else EXIT_OK


def cmd_ensemble(args):
    from .harness.config import ConfigError, EnsembleConfig, shipped_config
    from .harness.ensemble import EnsembleError, run_ensemble
    from .harness.report import emit_report
    path = Path(args.config)
    if not path.exists():
        try:
            path = shipped_config(args.config)
        except FileNotFoundError:
            print(f"error: config {args.config!r} not found", file=sys.stderr)
            return EXIT_FAIL
    try:
        cfg = EnsembleConfig.load(path)
        if args.seed is not None:
            cfg = cfg.replace(seed=args.seed)
        if args.samples is not None:
            cfg = cfg.replace(samples=args.samples)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAIL
    try:
        res = run_ensemble(cfg, threads=args.threads)
    except EnsembleError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAIL
    files = emit_report(res, args.out, plots=not args.no_plots)
    print(f"{'size':>5} {'N':>5} {'max_mean_td':>12} {'std_at_max':>12} {'ok':>4}")
    for i, size in enumerate(res.sizes):
        print(f"{size:>5} {res.n_sites[i]:>5} {res.max_mean[i]:>12.5e} {res.std_at_max[i]:>12.5e} "
              f"{res.n_ok[i]:>4}")
    for f in files:
        print(f"wrote {f}")
    return EXIT_OK


def _build_generator(args):
    from . import rng
    from .generators import build
    model = _spectral_model(args)
    ham = _hamiltonian(args, rng.stream(args.seed, rng.TAG_TEST, args.size, 0))
    pattern = _pattern(args, ham.n_sites, args.seed) if args.coupling == "linear" else None
    return build(args.kind, args.coupling, ham, model, pattern, not args.no_lamb_shift)


def cmd_certify(args):
    from .certify import certify_generator
    from .generators import GeneratorError, serialize
    try:
        g = serialize.load(args.generator) if args.generator else _build_generator(args)
    except (GeneratorError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAIL
    if args.save_generator:
        serialize.save(g, args.save_generator)
    report = certify_generator(g)
    print(report.table())
    if args.out:
        Path(args.out).write_text(report.to_json() + "\n", encoding="utf-8")
    else:
        print(report.to_json())
    return EXIT_OK if report.passed else EXIT_FAIL


def cmd_evolve(args):
    import numpy as np
    from . import dynamics
    g = _build_generator(args)
    grid = np.linspace(0.0, args.t_max, args.n_points)
    rho0 = dynamics.localized_state(g.n, args.site)
    psd = None if g.kind.value == "redfield" and g.sector.value == "single_particle" else dynamics.PSD_ABORT
    traj = dynamics.evolve(g, rho0, grid, args.step, basis=args.basis, psd_abort=psd)
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    traj.to_csv(out, args.observable)
    from .harness.plotting import plot_trajectory
    svg = plot_trajectory(traj, out.with_suffix(".svg"))
    print(f"wrote {out} ({len(traj)} points, step {traj.meta['step']:.4g}) and {svg}")
    return EXIT_OK


def cmd_eth_scaling(args):
    from .certify import eth_scaling_report
    table = eth_scaling_report(args.family, args.sizes, args.samples, args.seed, W=args.W)
    print(f"{'N':>6} {'secular':>12} {'nonsecular':>12} {'ratio':>10}")
    for n, s, ns, r in table.rows():
        print(f"{n:>6} {s:>12.5e} {ns:>12.5e} {r:>10.4f}")
    if table.secular_slope is not None:
        print(f"secular slope {table.secular_slope:.4f}  non-secular slope {table.nonsecular_slope:.4f}")
    if args.out:
        out = Path(args.out)
        out.parent.mkdir(parents=True, exist_ok=True)
        with open(out, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["n_sites", "secular", "nonsecular", "ratio"])
            for row in table.rows():
                w.writerow([row[0]] + [repr(float(x)) for x in row[1:]])
        out.with_suffix(".json").write_text(json.dumps(table.to_dict(), indent=2) + "\n")
        from .harness.plotting import plot_scaling
        svg = plot_scaling(table, out.with_suffix(".svg"))
        print(f"wrote {out} and {svg}")
    return EXIT_OK


def _generator_args(p):
    p.add_argument("--coupling", choices=["linear", "dephasing"], default="linear")
    p.add_argument("--kind", choices=["redfield", "davies", "secular_truncation"], default="davies")
    p.add_argument("--no-lamb-shift", action="store_true",
                   help="drop the Lamb-shift Hamiltonian")


def build_parser():
    parser = argparse.ArgumentParser(
        prog="qdavies", description="Redfield and Davies master equations for quadratic systems.")
    parser.add_argument("--version", action="version",
                        version=f"qdavies {__version__} (config schema {CONFIG_SCHEMA_VERSION})")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", metavar="command")

    p = sub.add_parser("verify-equivalence", help="Redfield vs Davies coefficients on random instances")
    _model_args(p, size_default=32)
    p.add_argument("--samples", type=int, default=20)
    p.add_argument("--tol", type=float, default=None,
                   help="relative tolerance (default 1e-12 times coefficient scale)")
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_verify_equivalence)

    p = sub.add_parser("ensemble", help="run a disorder ensemble from a config file")
    p.add_argument("--config", required=True, help="YAML path or shipped config name")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--threads", type=int, default=None,
                   help="worker processes (default: $QDAVIES_THREADS or 1)")
    p.add_argument("--seed", type=int, default=None, help="override the config seed")
    p.add_argument("--samples", type=int, default=None, help="override samples per size")
    p.add_argument("--no-plots", action="store_true")
    p.set_defaults(func=cmd_ensemble)

    p = sub.add_parser("certify", help="structural checks on one generator")
    p.add_argument("--generator", help="exported generator JSON (otherwise built from flags)")
    _model_args(p)
    _generator_args(p)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", help="write the JSON report here instead of stdout")
    p.add_argument("--save-generator", help="also export the generator as JSON")
    p.set_defaults(func=cmd_certify)

    p = sub.add_parser("evolve", help="single trajectory to CSV")
    _model_args(p)
    _generator_args(p)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--site", type=int, default=0, help="initially occupied site")
    p.add_argument("--t-max", dest="t_max", type=float, default=50.0)
    p.add_argument("--n-points", dest="n_points", type=int, default=101)
    p.add_argument("--step", type=float, default=None)
    p.add_argument("--basis", choices=["site", "eigen"], default="site")
    p.add_argument("--observable", choices=["occupations", "full"], default="occupations")
    p.add_argument("--out", required=True, help="CSV path (SVG written alongside)")
    p.set_defaults(func=cmd_evolve)

    p = sub.add_parser("eth-scaling", help="secular vs non-secular dephasing coefficient scaling")
    p.add_argument("--family", choices=["gue", "anderson"], default="gue")
    p.add_argument("--sizes", type=int, nargs="+", default=[32, 64, 128])
    p.add_argument("--samples", type=int, default=50)
    p.add_argument("--W", type=float, default=16.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", help="CSV path (JSON and SVG written alongside)")
    p.set_defaults(func=cmd_eth_scaling)
    return parser


def main(argv=None):
    parser = build_parser()
    argv = sys.argv[1:] if argv is None else argv
    if not argv:
        parser.print_usage(sys.stderr)
        return EXIT_USAGE
    args = parser.parse_args(argv)
    if args.command is None:
        parser.print_usage(sys.stderr)
        return EXIT_USAGE
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
