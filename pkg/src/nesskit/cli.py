"""Command-line entry point.

Every subcommand reads one config file, writes machine-readable outputs
to --out, and drops a manifest.json sidecar describing the run.  Data
files are deterministic: identical config and package version give
byte-identical bytes.  The sidecar carries wall time and warnings and
is exempt from that guarantee.

Numeric imports happen after --threads is applied, so BLAS thread caps
from the command line take effect.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import os
import sys
import time

_EXIT_CONFIG = 2
_EXIT_RESOLUTION = 3
_EXIT_WINDOW = 4


def _fmt(value) -> str:
    return "%.17g" % value


def _write_csv(path, header, columns) -> None:
    rows = zip(*columns)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(_fmt(v) for v in row) + "\n")


def _write_json(path, payload) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="nesskit",
        description="Steady-state and transient transport for a 1D "
                    "two-lead quantum device.")
    p.add_argument("-c", "--config", help="path to the run configuration file")
    p.add_argument("--out", default=".", help="output directory (default: .)")
    p.add_argument("--threads", type=int, default=None,
                   help="cap BLAS threads for this run")
    p.add_argument("--strict", action="store_true",
                   help="treat window truncation as an error (exit 4)")
    p.add_argument("--plot", action="store_true",
                   help="render figures next to the data files")
    sub = p.add_subparsers(dest="command", required=True)

    sc = sub.add_parser("scatter", help="S-matrix entries over an energy grid")
    tr = sub.add_parser("transmission", help="transmission curve T(lambda)")
    for q in (sc, tr):
        q.add_argument("--lam-min", type=float, default=None)
        q.add_argument("--lam-max", type=float, default=None)
        q.add_argument("--n", type=int, default=400)

    ef = sub.add_parser("eigenfunction", help="scattering eigenfunctions at one energy")
    ef.add_argument("--lam", type=float, required=True)
    ef.add_argument("--x-min", type=float, default=None)
    ef.add_argument("--x-max", type=float, default=None)
    ef.add_argument("--n", type=int, default=2001)

    sub.add_parser("bound", help="bound states of the coupled device")

    wm = sub.add_parser("well-modes", help="Dirichlet spectrum of the closed well")
    wm.add_argument("--k-max", type=int, default=12)

    ns = sub.add_parser("ness", help="steady-state carrier density profile")
    ns.add_argument("--x-min", type=float, default=None)
    ns.add_argument("--x-max", type=float, default=None)
    ns.add_argument("--n", type=int, default=801)
    ns.add_argument("--bound-weights", default="sudden",
                    help="'sudden' or comma-separated explicit weights")

    sub.add_parser("current", help="stationary current (both formulas)")

    ev = sub.add_parser("evolve", help="transient simulation of the coupling process")
    g = ev.add_mutually_exclusive_group()
    g.add_argument("--alpha", type=float, default=None,
                   help="exponential switching rate")
    g.add_argument("--sudden", action="store_true", help="sudden coupling at t = 0")
    ev.add_argument("--t-end", type=float, required=True)
    ev.add_argument("--dt", type=float, default=0.004)
    ev.add_argument("--observable", default="smooth",
                    help="point[:x_c] or smooth[:x_c] (default smooth)")

    sw = sub.add_parser("alpha-sweep", help="compare schedules, report independence")
    sw.add_argument("--alphas", default="0.5,1,2,sudden",
                    help="comma-separated rates and/or 'sudden'")
    sw.add_argument("--t-end", type=float, required=True)
    sw.add_argument("--dt", type=float, default=0.004)

    mo = sub.add_parser("moller", help="incoming-wave phase probe")
    mo.add_argument("--lam0", type=float, required=True)
    mo.add_argument("--channel", choices=("a", "b"), required=True)
    mo.add_argument("--t-prep", type=float, default=None)
    mo.add_argument("--dt", type=float, default=0.004)
    mo.add_argument("--sigma-x", type=float, default=None,
                    help="packet width, defaults to a twelfth of the lead")

    ve = sub.add_parser("verify", help="run the built-in acceptance suite")
    ve.add_argument("--full", action="store_true",
                    help="include the long dynamics criteria")
    return p


def _config_digest(path) -> str:
    with open(path, "rb") as fh:
        return hashlib.sha256(fh.read()).hexdigest()


def _load(args):
    from .device import load_config
    from .errors import ConfigError

    if not args.config:
        raise ConfigError("this subcommand needs -c/--config")
    return load_config(args.config)


def _lam_grid(args, config):
    import numpy as np

    lam_lo = args.lam_min if args.lam_min is not None else config.device.v_b + 1e-6
    lam_hi = args.lam_max if args.lam_max is not None else config.spectral.lambda_max
    if not lam_hi > lam_lo:
        from .errors import ConfigError
        raise ConfigError(f"need lam-min < lam-max, got [{lam_lo}, {lam_hi}]")
    return np.linspace(lam_lo, lam_hi, args.n)


def _x_grid(args, config):
    import numpy as np

    x_lo = args.x_min if args.x_min is not None else config.box.x_min
    x_hi = args.x_max if args.x_max is not None else config.box.x_max
    if not x_hi > x_lo:
        from .errors import ConfigError
        raise ConfigError(f"need x-min < x-max, got [{x_lo}, {x_hi}]")
    return np.linspace(x_lo, x_hi, args.n)


def _cmd_scatter(args, config, out, manifest):
    import numpy as np

    from .scattering import eigenfunctions

    lam = _lam_grid(args, config)
    cols = {name: np.full(lam.size, np.nan) for name in
            ("S_aa_re", "S_aa_im", "S_ab_re", "S_ab_im",
             "S_ba_re", "S_ba_im", "S_bb_re", "S_bb_im", "T")}
    grid = np.array([config.device.a, config.device.b])
    for i, lv in enumerate(lam):
        sol = eigenfunctions(config.device, float(lv), grid=grid)
        cols["S_bb_re"][i], cols["S_bb_im"][i] = sol.S_bb.real, sol.S_bb.imag
        if sol.two_channel:
            cols["S_aa_re"][i], cols["S_aa_im"][i] = sol.S_aa.real, sol.S_aa.imag
            cols["S_ab_re"][i], cols["S_ab_im"][i] = sol.S_ab.real, sol.S_ab.imag
            cols["S_ba_re"][i], cols["S_ba_im"][i] = sol.S_ba.real, sol.S_ba.imag
            cols["T"][i] = abs(sol.S_ba) ** 2 * (sol.q_a / sol.q_b)
        else:
            cols["T"][i] = 0.0
    header = ["lambda", *cols.keys()]
    path = os.path.join(out, "scatter.csv")
    _write_csv(path, header, [lam, *cols.values()])
    if args.plot:
        from .report import plot_scatter
        entries = {"S_bb": cols["S_bb_re"] + 1j * cols["S_bb_im"],
                   "S_ba": cols["S_ba_re"] + 1j * cols["S_ba_im"]}
        manifest["figures"] = [plot_scatter(lam, entries, os.path.join(out, "scatter.png"))]
    return [path]


def _cmd_transmission(args, config, out, manifest):
    from .scattering import transmission

    lam = _lam_grid(args, config)
    t_vals = [transmission(config.device, float(lv)) for lv in lam]
    path = os.path.join(out, "transmission.csv")
    _write_csv(path, ["lambda", "T"], [lam, t_vals])
    if args.plot:
        from .report import plot_transmission
        manifest["figures"] = [plot_transmission(
            lam, t_vals, os.path.join(out, "transmission.png"))]
    return [path]


def _cmd_eigenfunction(args, config, out, manifest):
    import numpy as np

    from .scattering import eigenfunctions

    x = _x_grid(args, config)
    sol = eigenfunctions(config.device, args.lam, grid=x)
    nanarr = np.full(x.size, np.nan)
    phi_a = sol.phi_a if sol.two_channel else None
    path = os.path.join(out, "eigenfunction.csv")
    _write_csv(path, ["x", "phi_b_re", "phi_b_im", "phi_a_re", "phi_a_im"],
               [x, sol.phi_b.real, sol.phi_b.imag,
                phi_a.real if sol.two_channel else nanarr,
                phi_a.imag if sol.two_channel else nanarr])
    if args.plot:
        from .report import plot_eigenfunction
        manifest["figures"] = [plot_eigenfunction(
            x, sol.phi_b, phi_a, os.path.join(out, "eigenfunction.png"))]
    return [path]


def _cmd_bound(args, config, out, manifest):
    from .spectrum import find_bound_states

    states = find_bound_states(config.device)
    payload = [{"lambda_j": s.lam, "kappa_a": s.kappa_a, "kappa_b": s.kappa_b}
               for s in states]
    path = os.path.join(out, "bound.json")
    _write_json(path, payload)
    return [path]


def _cmd_well_modes(args, config, out, manifest):
    from .spectrum import closed_well_spectrum

    modes = closed_well_spectrum(config.device, args.k_max)
    path = os.path.join(out, "well_modes.csv")
    _write_csv(path, ["k", "xi"],
               [range(1, len(modes) + 1), [m.xi for m in modes]])
    return [path]


def _parse_bound_weights(raw):
    if raw == "sudden":
        return "sudden"
    from .errors import ConfigError

    try:
        return [float(tok) for tok in raw.split(",") if tok.strip()]
    except ValueError:
        raise ConfigError(
            f"--bound-weights must be 'sudden' or numbers, got '{raw}'") from None


def _cmd_ness(args, config, out, manifest):
    from .ness import carrier_density, distribution_ness

    x = _x_grid(args, config)
    dist = distribution_ness(config, bound_weights=_parse_bound_weights(args.bound_weights))
    dens = carrier_density(config, dist, x)
    path = os.path.join(out, "ness.csv")
    _write_csv(path, ["x", "u_total", "u_bound", "u_continuum"],
               [dens.x, dens.u, dens.u_bound, dens.u_continuum])
    if args.plot:
        from .report import plot_ness
        manifest["figures"] = [plot_ness(
            dens.x, dens.u, dens.u_bound, dens.u_continuum,
            os.path.join(out, "ness.png"))]
    return [path]


def _cmd_current(args, config, out, manifest):
    import numpy as np

    from .ness import (current_density, current_truncation_bound,
                       distribution_ness, landauer_current)

    dev = config.device
    probes = np.linspace(dev.a - 1.5, dev.b + 1.5, 10)
    dist = distribution_ness(config, bound_weights="sudden")
    j = current_density(config, dist, probes)
    manifest["truncation_bound"] = current_truncation_bound(config)
    payload = {
        "I": float(np.mean(j)),
        "I_landauer": landauer_current(config),
        "spread_over_x": float(np.max(j) - np.min(j)),
    }
    path = os.path.join(out, "current.json")
    _write_json(path, payload)
    return [path]


def _observable_from_flag(box, raw):
    from .dynamics import current_observable
    from .errors import ConfigError

    name, _, arg = raw.partition(":")
    variant = {"point": "point", "smooth": "smoothed"}.get(name)
    if variant is None:
        raise ConfigError(f"--observable must be point[:x] or smooth[:x], got '{raw}'")
    x_c = float(arg) if arg else None
    return current_observable(box, variant, x_c=x_c)


def _cmd_evolve(args, config, out, manifest):
    from .device import CouplingSchedule
    from .dynamics import build_box, decoupled_modes, evolve_ensemble

    if args.sudden:
        schedule = CouplingSchedule(kind="sudden", alpha=None,
                                    g_cap=config.schedule.g_cap)
    elif args.alpha is not None:
        schedule = CouplingSchedule(kind="exponential", alpha=args.alpha,
                                    g_cap=config.schedule.g_cap)
    else:
        schedule = config.schedule
    box = build_box(config)
    ensemble = decoupled_modes(box, config)
    obs = _observable_from_flag(box, args.observable)
    trace = evolve_ensemble(box, ensemble, schedule, [obs],
                            args.t_end, args.dt)[0]
    manifest["warnings"].extend(trace.meta["warnings"])
    manifest["snap_a"] = box.snap_a
    manifest["snap_b"] = box.snap_b
    manifest["dropped_weight"] = ensemble.dropped_weight
    manifest["t_end"] = trace.meta["t_end"]
    manifest["observable"] = args.observable
    path = os.path.join(out, "evolve.csv")
    _write_csv(path, ["t", "observable", "running_mean"],
               [trace.t, trace.values, trace.running_mean])
    if args.plot:
        from .report import plot_evolve
        manifest["figures"] = [plot_evolve(
            trace.t, trace.values, trace.running_mean,
            os.path.join(out, "evolve.png"))]
    return [path]


def _cmd_alpha_sweep(args, config, out, manifest):
    from .dynamics import alpha_sweep
    from .errors import ConfigError

    alphas = []
    for tok in args.alphas.split(","):
        tok = tok.strip()
        if not tok:
            continue
        if tok == "sudden":
            alphas.append("sudden")
        else:
            try:
                alphas.append(float(tok))
            except ValueError:
                raise ConfigError(f"--alphas entry '{tok}' is not a rate "
                                  f"or 'sudden'") from None
    if not alphas:
        raise ConfigError("--alphas is empty")
    report = alpha_sweep(config, alphas, args.t_end, args.dt)

    paths = []
    for label in report.labels:
        tr = report.current_traces[label]
        bnd = report.bound_traces[label]
        header = ["t", "current", "running_mean"] + [
            f"bound_occ_{j}" for j in range(len(bnd))]
        cols = [tr.t, tr.values, tr.running_mean] + [b.values for b in bnd]
        fname = "alpha_sweep_%s.csv" % label.replace("=", "_")
        paths.append(os.path.join(out, fname))
        _write_csv(paths[-1], header, cols)
        manifest["warnings"].extend(tr.meta["warnings"])

    payload = {
        "labels": list(report.labels),
        "late_means": report.late_means,
        "pairwise_rel_diff": {f"{a}|{b}": v
                              for (a, b), v in report.pairwise_rel_diff.items()},
        "oscillation_amplitude": report.oscillation_amplitude,
        "bound_energies": list(report.bound_energies),
        "amplitude_monotone_in_alpha": report.amplitude_monotone_in_alpha,
    }
    paths.append(os.path.join(out, "alpha_sweep.json"))
    _write_json(paths[-1], payload)
    if args.plot:
        from .report import plot_alpha_sweep
        traces = {lbl: (report.current_traces[lbl].t,
                        report.current_traces[lbl].values)
                  for lbl in report.labels}
        manifest["figures"] = [plot_alpha_sweep(
            traces, os.path.join(out, "alpha_sweep.png"))]
    return paths


def _cmd_moller(args, config, out, manifest):
    from .dynamics import build_box, moller_probe

    box = build_box(config)
    res = moller_probe(box, config, args.lam0, args.channel,
                       t_prep=args.t_prep, dt=args.dt, sigma_x=args.sigma_x)
    payload = {
        "lambda0": res.lambda0,
        "channel": res.channel,
        "overlap_re": res.overlap.real,
        "overlap_im": res.overlap.imag,
        "phase": res.phase,
    }
    path = os.path.join(out, "moller.json")
    _write_json(path, payload)
    return [path]


def _cmd_verify(args, out):
    from . import verify

    results = verify.run_suite(full=args.full, out_dir=out)
    ok = True
    for res in results:
        print(f"{'PASS' if res.passed else 'FAIL'}  {res.name}: {res.detail}")
        if res.gating and not res.passed:
            ok = False
    print(f"verify: {'all criteria passed' if ok else 'FAILURES above'}")
    return 0 if ok else 1


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    if args.threads is not None:
        for var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS"):
            os.environ[var] = str(args.threads)

    from .errors import ConfigError, ResolutionError, WindowError

    os.makedirs(args.out, exist_ok=True)
    started = time.time()
    try:
        if args.command == "verify":
            return _cmd_verify(args, args.out)
        config = _load(args)
        manifest = {
            "subcommand": args.command,
            "config": os.path.basename(args.config),
            "config_sha256": _config_digest(args.config),
            "version": __import__("nesskit").__version__,
            "warnings": [],
        }
        handler = {
            "scatter": _cmd_scatter,
            "transmission": _cmd_transmission,
            "eigenfunction": _cmd_eigenfunction,
            "bound": _cmd_bound,
            "well-modes": _cmd_well_modes,
            "ness": _cmd_ness,
            "current": _cmd_current,
            "evolve": _cmd_evolve,
            "alpha-sweep": _cmd_alpha_sweep,
            "moller": _cmd_moller,
        }[args.command]
        outputs = handler(args, config, args.out, manifest)
        if args.strict and manifest["warnings"]:
            raise WindowError("; ".join(manifest["warnings"]))
        manifest["outputs"] = [os.path.basename(p) for p in outputs]
        if "figures" in manifest:
            manifest["figures"] = [os.path.basename(p)
                                   for p in manifest["figures"]]
        manifest["wall_time_s"] = round(time.time() - started, 3)
        _write_json(os.path.join(args.out, "manifest.json"), manifest)
    except ConfigError as exc:
        print(f"nesskit: config error: {exc}", file=sys.stderr)
        return _EXIT_CONFIG
    except ValueError as exc:
        print(f"nesskit: invalid request: {exc}", file=sys.stderr)
        return _EXIT_CONFIG
    except ResolutionError as exc:
        print(f"nesskit: resolution error: {exc}", file=sys.stderr)
        return _EXIT_RESOLUTION
    except WindowError as exc:
        print(f"nesskit: window error: {exc}", file=sys.stderr)
        return _EXIT_WINDOW
    except OSError as exc:
        print(f"nesskit: i/o error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
