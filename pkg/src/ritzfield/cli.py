"""Command-line entry point.

Subcommands: run, gradcheck, oracle, export, compare.  Exit codes: 0 success,
1 failed check, 2 malformed configuration/arguments, 3 diverged run.

Heavy imports happen inside main() so the RITZ_THREADS cap can be applied to
the BLAS thread pools before numpy loads.
"""

from __future__ import annotations

import argparse
import os
import sys


def entry() -> None:
    sys.exit(main(sys.argv[1:]))


def _apply_thread_cap() -> None:
    cap = os.environ.get("RITZ_THREADS")
    if not cap:
        return
    for var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS"):
        os.environ.setdefault(var, cap)


def _parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="ritzfield",
                                 description="variational steady-state solver "
                                             "for periodic phase-field energies")
    sub = ap.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="train from a config file")
    run.add_argument("--config", required=True,
                     help="path or packaged config name (e.g. 1d-trivial)")
    run.add_argument("--seed", type=int, help="override the config seed")
    run.add_argument("--out", default=".", help="output directory")
    run.add_argument("--mode", choices=("penalty", "ffm"), help="override the mode")
    run.add_argument("--quiet", action="store_true")

    gc = sub.add_parser("gradcheck", help="analytic vs finite-difference gradient")
    gc.add_argument("--seed", type=int, default=0)
    gc.add_argument("--dim", type=int, default=1, choices=(1, 2, 3))
    gc.add_argument("--h", type=float, default=1e-6)
    gc.add_argument("--f-m", type=int, default=3, dest="f_m")
    gc.add_argument("--width", type=int, default=100)
    gc.add_argument("--blocks", type=int, default=3)
    gc.add_argument("--batch", type=int, default=64)
    gc.add_argument("--tol", type=float, default=1e-4)

    orc = sub.add_parser("oracle", help="grid-based reference computations")
    orc.add_argument("--pattern", choices=("lamellar", "droplet2d"),
                     help="print the sharp-interface energy of a pattern")
    orc.add_argument("--descent", action="store_true",
                     help="run mass-conserving projected descent")
    orc.add_argument("--epsilon", type=float, default=0.04)
    orc.add_argument("--m0", type=float, default=0.6)
    orc.add_argument("--n", type=int, default=512, help="grid points per axis")
    orc.add_argument("--steps", type=int, default=20000)
    orc.add_argument("--dt", type=float, default=1.0,
                     help="descent step (clamped to the stability bound)")
    orc.add_argument("--init", help="field file to start the descent from")
    orc.add_argument("--out", help="write the descended field here")

    exp = sub.add_parser("export", help="sample a checkpoint onto a grid")
    exp.add_argument("--checkpoint", required=True)
    exp.add_argument("--resolution", type=int, default=0)
    exp.add_argument("--out", required=True)

    cmp_ = sub.add_parser("compare", help="L2 distance and energy gap of two fields")
    cmp_.add_argument("field_a")
    cmp_.add_argument("field_b")
    return ap


def main(argv=None) -> int:
    _apply_thread_cap()
    try:
        args = _parser().parse_args(argv)
    except SystemExit as err:
        return 2 if err.code not in (0, None) else 0

    from .errors import ConfigurationError, DivergedError

    try:
        if args.command == "run":
            return _cmd_run(args)
        if args.command == "gradcheck":
            return _cmd_gradcheck(args)
        if args.command == "oracle":
            return _cmd_oracle(args)
        if args.command == "export":
            return _cmd_export(args)
        if args.command == "compare":
            return _cmd_compare(args)
    except ConfigurationError as err:
        print(f"configuration error: {err}", file=sys.stderr)
        return 2
    except DivergedError as err:
        print(f"diverged: {err}", file=sys.stderr)
        return 3
    except OSError as err:
        print(f"io error: {err}", file=sys.stderr)
        return 2
    return 0


def _write_histories(out_dir: str, result) -> None:
    loss_path = os.path.join(out_dir, "loss.csv")
    cycle_len = max(result.config.inner_epochs, 1)
    als = _al_trace(result)
    with open(loss_path, "w") as fh:
        fh.write("epoch,energy,mass,boundary,total,mean_u,lambda,mu\n")
        for i, bd in enumerate(result.loss_history):
            lam, mu = als[min(i // cycle_len, len(als) - 1)]
            fh.write(f"{i},{bd.energy!r},{bd.mass!r},{bd.boundary!r},"
                     f"{bd.total!r},{bd.mean_u!r},{lam!r},{mu!r}\n")
    err_path = os.path.join(out_dir, "error.csv")
    with open(err_path, "w") as fh:
        fh.write("snapshot_epoch,error\n")
        for epoch, err in result.error_history:
            fh.write(f"{epoch},{err!r}\n")


def _al_trace(result):
    """(lambda, mu) in effect during each outer cycle, reconstructed from the
    recorded constraint values."""
    from .driver import ALState, update_multiplier

    cfg = result.config
    al = ALState(lam=cfg.lambda0, mu=cfg.mu0, mu_max=cfg.mu_max,
                 rho=cfg.rho, freeze_outer=cfg.freeze_outer)
    trace = []
    for k, c in enumerate(result.outer_constraints):
        trace.append((al.lam, al.mu))
        al = update_multiplier(al, c, k)
    trace.append((al.lam, al.mu))
    return trace


def _cmd_run(args) -> int:
    from . import fieldio
    from .configio import parse_config, resolve_config
    from .driver import train

    overrides = {}
    if args.seed is not None:
        overrides["seed"] = args.seed
    if args.mode is not None:
        overrides["mode"] = args.mode
    cfg = parse_config(resolve_config(args.config), overrides)
    os.makedirs(args.out, exist_ok=True)
    log = None if args.quiet else (lambda msg: print(msg, flush=True))
    result = train(cfg, log=log)

    _write_histories(args.out, result)
    snap = result.final_snapshot
    n = cfg.grid_resolution
    field = fieldio.FieldFile(
        values=snap.values.reshape((n,) * cfg.dimension),
        domain=cfg.domain, epsilon=cfg.epsilon, m0=cfg.m0, seed=cfg.seed,
        energy=result.final_breakdown.energy,
    )
    ext = "vtk" if cfg.dimension == 3 else "csv"
    field_path = os.path.join(args.out, f"field.{ext}")
    fieldio.write_field(field_path, field)
    fieldio.save_checkpoint(os.path.join(args.out, "checkpoint.txt"), result)

    bd = result.final_breakdown
    status = "converged" if result.converged else "NOT-CONVERGED"
    print(f"{status} energy={bd.energy:.6f} total={bd.total:.6f} "
          f"constraint={bd.constraint:.3e} wall={result.wall_time:.1f}s "
          f"out={field_path}")
    return 0


def _cmd_gradcheck(args) -> int:
    from dataclasses import dataclass

    from .autodiff import BatchSet, gradcheck
    from .driver import ALState
    from .features import build_feature_map
    from .loss import LossSpec
    from .network import Architecture, init_network
    from .sampling import sobol_batch

    d = args.dim
    fmap = build_feature_map("separable", d, [1.0] * d, f_m=args.f_m, seed=args.seed + 1)
    arch = Architecture(input_dim=fmap.out_dim, width=args.width, n_blocks=args.blocks)
    params = init_network(arch, args.seed)
    batches = BatchSet(
        energy=sobol_batch(args.batch, d, skip=1),
        mass=sobol_batch(args.batch, d, skip=1 + args.batch),
    )
    spec = LossSpec(epsilon=0.04, m0=0.6)
    al = ALState(lam=0.3, mu=2.0, mu_max=2.0, rho=1.2)
    err = gradcheck(spec, al, params, fmap, batches, h=args.h, seed=args.seed)
    print(f"gradcheck dim={d} seed={args.seed} h={args.h:g}: "
          f"max relative error {err:.3e}")
    return 0 if err < args.tol else 1


def _cmd_oracle(args) -> int:
    from . import fieldio
    from .oracle import (GridField, discrete_energy, projected_descent,
                         sharp_interface_energy, two_interface_profile)

    if args.pattern:
        e = sharp_interface_energy(args.pattern, args.epsilon, args.m0)
        print(f"sharp-interface {args.pattern} epsilon={args.epsilon:g} "
              f"m0={args.m0:g}: energy {e:.6f}")
        return 0
    if not args.descent:
        print("oracle: need --pattern or --descent", file=sys.stderr)
        return 2
    if args.init:
        ff = fieldio.read_field(args.init)
        init = GridField(values=ff.values,
                         lengths=tuple(hi - lo for lo, hi in ff.domain))
    else:
        init = two_interface_profile(args.n, args.epsilon, args.m0)
    out = projected_descent(init, args.epsilon, args.m0, steps=args.steps, dt=args.dt)
    e = discrete_energy(out, args.epsilon)
    print(f"projected descent: {args.steps} steps, energy {e:.6f}, "
          f"mean {out.mean():.6f}")
    if args.out:
        ff = fieldio.FieldFile(values=out.values,
                               domain=tuple((0.0, L) for L in out.lengths),
                               epsilon=args.epsilon, m0=args.m0, energy=e)
        fieldio.write_field(args.out, ff)
        print(f"wrote {args.out}")
    return 0


def _cmd_export(args) -> int:
    from . import fieldio
    from .autodiff import eval_values
    from .sampling import grid_batch

    params, fmap, domain, meta = fieldio.load_checkpoint(args.checkpoint)
    d = len(domain)
    n = args.resolution or {1: 256, 2: 128, 3: 64}[d]
    grid = grid_batch(n, d, domain, include_right_edge=False)
    values = eval_values(params, fmap, grid.points)
    field = fieldio.FieldFile(
        values=values.reshape((n,) * d), domain=domain,
        epsilon=meta.get("epsilon", float("nan")), m0=meta.get("m0", float("nan")),
        seed=int(meta.get("seed", -1)),
    )
    fieldio.write_field(args.out, field)
    print(f"wrote {args.out} ({n}^{d} grid)")
    return 0


def _cmd_compare(args) -> int:
    import numpy as np

    from . import fieldio
    from .oracle import GridField, discrete_energy

    fa = fieldio.read_field(args.field_a)
    fb = fieldio.read_field(args.field_b)
    if fa.shape != fb.shape:
        print(f"shape mismatch: {fa.shape} vs {fb.shape}", file=sys.stderr)
        return 2
    vol = float(np.prod([hi - lo for lo, hi in fa.domain]))
    diff = fa.values - fb.values
    dist = float(np.sqrt(vol * np.mean(diff * diff)))

    def energy(ff):
        if np.isfinite(ff.epsilon):
            gf = GridField(values=ff.values,
                           lengths=tuple(hi - lo for lo, hi in ff.domain))
            return discrete_energy(gf, ff.epsilon)
        return ff.energy

    ea, eb = energy(fa), energy(fb)
    print(f"l2-distance {dist:.6e}  energy-a {ea:.6f}  energy-b {eb:.6f}  "
          f"energy-gap {abs(ea - eb):.6e}")
    return 0


if __name__ == "__main__":
    entry()
