"""Command line interface.

Three subcommands cover the full workflow:

    invrytov forward     --config FILE --out DIR [--noise G] [--seed N]
    invrytov reconstruct --config FILE --out DIR
                         (--data FILE | --synthetic)
                         [--order N] [--sv-count N | --sv-threshold S]
    invrytov diagnose    --config FILE --out DIR [--fd-points N]
                         [--dump-greens DIR]

Every command writes its tables as CSV (17 significant digits, LF line
endings, UTF-8) plus a manifest.json recording the command, the full
configuration, the PRNG stream, derived quantities and wall-clock timings.
Given the same inputs the CSV outputs are bitwise reproducible; the
manifest differs only in its timings.

Exit status: 0 on success, 1 on configuration or runtime errors, 2 on
usage errors.
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from .diagnostics import estimate_mu_nu, fd_oracle, rel_l2_error
from .forward import (PRNG_ALGORITHM, add_noise, boundary_fields,
                      psi_from_fields)
from .greens import build_greens_table
from .inversion import assemble_j1, build_tsvd, projected_truth, reconstruct
from .model import (_CONFIG_KEYS, BoundaryData, config_from_file, make_grid,
                    true_profile)

__all__ = ["main"]

FORMAT_REVISION = 1
MAX_CLI_ORDER = 8


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def _write_csv(path: Path, header: list[str], rows) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(row) + "\n")


def _write_manifest(path: Path, payload: dict) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(payload, fh, indent=2)
        fh.write("\n")


def _config_dict(cfg) -> dict:
    return {key: getattr(cfg, key) for key in _CONFIG_KEYS}


def _base_manifest(command: str, cfg, outputs: list[str],
                   timings: dict) -> dict:
    return {
        "format_revision": FORMAT_REVISION,
        "package_version": __version__,
        "command": command,
        "config": _config_dict(cfg),
        "prng": {"algorithm": PRNG_ALGORITHM, "seed": cfg.seed},
        "outputs": outputs,
        "timings": timings,
    }


def _cmd_forward(args) -> int:
    cfg = config_from_file(args.config)
    if args.noise is not None:
        cfg = cfg.replace(gamma=args.noise)
    if args.seed is not None:
        cfg = cfg.replace(seed=args.seed)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)

    timings = {}
    t0 = time.perf_counter()
    u0, u = boundary_fields(cfg)
    timings["solve_s"] = time.perf_counter() - t0
    psi = psi_from_fields(u0, u)

    alphas = np.arange(1, cfg.M_SD + 1)
    if cfg.gamma > 0.0:
        u0n, un = add_noise(u0, u, cfg.gamma, cfg.seed)
        psi_noisy = psi_from_fields(u0n, un)
        header = ["alpha", "psi_clean", "psi_noisy"]
        rows = ([str(a), _fmt(c), _fmt(n)] for a, c, n in
                zip(alphas, psi.values, psi_noisy.values))
    else:
        header = ["alpha", "psi"]
        rows = ([str(a), _fmt(c)] for a, c in zip(alphas, psi.values))
    _write_csv(out / "data.csv", header, rows)

    manifest = _base_manifest("forward", cfg, ["data.csv"], timings)
    manifest["noise"] = {
        "gamma": cfg.gamma,
        "sd": float(cfg.gamma * np.std(u0)) if cfg.gamma > 0.0 else 0.0,
    }
    _write_manifest(out / "manifest.json", manifest)
    print(f"wrote {out / 'data.csv'} ({cfg.M_SD} modes)")
    return 0


def _read_data_csv(path: str, m_sd: int) -> BoundaryData:
    with open(path, encoding="utf-8") as fh:
        lines = [ln.strip() for ln in fh if ln.strip()]
    if not lines:
        raise ValueError(f"{path}: empty data file")
    header = [col.strip() for col in lines[0].split(",")]
    if "psi_noisy" in header:
        col = header.index("psi_noisy")
    elif "psi" in header:
        col = header.index("psi")
    else:
        raise ValueError(f"{path}: no psi or psi_noisy column")
    if "alpha" not in header:
        raise ValueError(f"{path}: no alpha column")
    acol = header.index("alpha")
    values = np.full(m_sd, np.nan)
    for ln in lines[1:]:
        fields = ln.split(",")
        alpha = int(fields[acol])
        if not 1 <= alpha <= m_sd:
            raise ValueError(f"{path}: alpha {alpha} outside [1, {m_sd}]")
        values[alpha - 1] = float(fields[col])
    if np.any(np.isnan(values)):
        missing = int(np.flatnonzero(np.isnan(values))[0]) + 1
        raise ValueError(f"{path}: missing row for alpha={missing}")
    return BoundaryData(values=values)


def _cmd_reconstruct(args) -> int:
    cfg = config_from_file(args.config)
    if args.sv_count is not None:
        cfg = cfg.replace(sv_count=args.sv_count, sv_threshold=None)
    elif args.sv_threshold is not None:
        cfg = cfg.replace(sv_count=None, sv_threshold=args.sv_threshold)
    order = args.order if args.order is not None else cfg.order
    if not 1 <= order <= MAX_CLI_ORDER:
        raise ValueError(f"order must be in [1, {MAX_CLI_ORDER}], "
                         f"got {order}")
    cfg = cfg.replace(order=order)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)

    timings = {}
    t0 = time.perf_counter()
    grid = make_grid(cfg)
    table = build_greens_table(cfg)
    timings["build_greens_s"] = time.perf_counter() - t0

    if args.data is not None:
        psi = _read_data_csv(args.data, cfg.M_SD)
        source = f"file:{args.data}"
    else:
        t0 = time.perf_counter()
        u0, u = boundary_fields(cfg)
        if cfg.gamma > 0.0:
            u0, u = add_noise(u0, u, cfg.gamma, cfg.seed)
        psi = psi_from_fields(u0, u)
        timings["solve_s"] = time.perf_counter() - t0
        source = "synthetic"

    t0 = time.perf_counter()
    j1 = assemble_j1(table, cfg)
    inv = build_tsvd(j1, cfg=cfg)
    result = reconstruct(psi, cfg, table, order=order, inv=inv)
    timings["reconstruct_s"] = time.perf_counter() - t0

    eta_true = true_profile(cfg, grid)
    eta_proj = projected_truth(eta_true, j1, inv)
    errors = [rel_l2_error(p, eta_proj, grid) for p in result.partials]

    header = ["r", "eta_true", "eta_proj"]
    header += [f"eta_order_{j}" for j in range(1, order + 1)]
    header += [f"eta_partial_{j}" for j in range(1, order + 1)]
    header += [f"mu_a_{order}"]
    columns = [grid.points, eta_true.values, eta_proj.values]
    columns += [t.values for t in result.terms]
    columns += [p.values for p in result.partials]
    columns += [result.mu_a.values]
    rows = ([_fmt(col[i]) for col in columns] for i in range(cfg.N_r))
    _write_csv(out / "reconstruction.csv", header, rows)
    _write_csv(out / "errors.csv", ["order", "rel_l2_error_vs_eta_proj"],
               ([str(j + 1), _fmt(e)] for j, e in enumerate(errors)))

    manifest = _base_manifest(
        "reconstruct", cfg,
        ["reconstruction.csv", "errors.csv"], timings)
    manifest["data_source"] = source
    manifest["inversion"] = {
        "branch": inv.branch,
        "retained": int(len(inv.sigmas)),
        "sigmas": [float(s) for s in inv.sigmas],
    }
    manifest["errors"] = [
        {"order": j + 1, "rel_l2_error_vs_eta_proj": e}
        for j, e in enumerate(errors)
    ]
    manifest["diverging"] = result.diverging
    manifest["term_norms"] = result.term_norms
    manifest["partial_norms"] = result.partial_norms
    _write_manifest(out / "manifest.json", manifest)

    flag = "  [partial sums still growing]" if result.diverging else ""
    print(f"wrote {out / 'reconstruction.csv'} (order {order}, "
          f"final rel error {errors[-1]:.3e}){flag}")
    return 0


def _dump_greens(table, cfg, dump_dir: Path) -> list[str]:
    dump_dir.mkdir(parents=True, exist_ok=True)
    names = []
    for alpha in range(1, cfg.M_SD + 1):
        name = f"greens_mode_{alpha:03d}.csv"
        block = table.modes[alpha - 1]
        rows = ([str(alpha), str(i + 1), str(n + 1), _fmt(block[i, n])]
                for i in range(cfg.N_r) for n in range(cfg.N_r))
        _write_csv(dump_dir / name, ["alpha", "i", "n", "value"], rows)
        names.append(name)
    return names


def _cmd_diagnose(args) -> int:
    cfg = config_from_file(args.config)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)

    timings = {}
    t0 = time.perf_counter()
    table = build_greens_table(cfg)
    timings["build_greens_s"] = time.perf_counter() - t0

    # gate: zero perturbation must give zero data
    u0, u_same = boundary_fields(cfg.replace(eta_a=0.0))
    gate = float(np.max(np.abs(np.log(u0) - np.log(u_same))))

    # independent finite-difference check at a few modes
    t0 = time.perf_counter()
    eta = true_profile(cfg, table.grid)
    picks = sorted({1, 2, 5, min(10, cfg.M_SD), cfg.M_SD})
    u0_all, u_all = boundary_fields(cfg)
    fd_rows = []
    for alpha in picks:
        sol0 = fd_oracle(alpha, None, cfg, fd_points=args.fd_points)
        sol1 = fd_oracle(alpha, eta, cfg, fd_points=args.fd_points)
        ref0, ref1 = u0_all[alpha - 1], u_all[alpha - 1]
        fd_rows.append({
            "alpha": alpha,
            "rel_err_unperturbed": abs(sol0.boundary - ref0) / abs(ref0),
            "rel_err_perturbed": abs(sol1.boundary - ref1) / abs(ref1),
        })
    timings["fd_s"] = time.perf_counter() - t0

    report = estimate_mu_nu(cfg, table)

    outputs = []
    if args.dump_greens is not None:
        t0 = time.perf_counter()
        names = _dump_greens(table, cfg, Path(args.dump_greens))
        timings["dump_s"] = time.perf_counter() - t0
        outputs += [f"{args.dump_greens}/{n}" for n in names]

    manifest = _base_manifest("diagnose", cfg, outputs, timings)
    manifest["results"] = {
        "zero_perturbation_max_abs_psi": gate,
        "fd_points": args.fd_points,
        "fd_boundary_checks": fd_rows,
        "convergence": {
            "mu": report.mu,
            "nu": report.nu,
            "eta_norm": report.eta_norm,
            "forward_radius_ok": report.forward_radius_ok,
            "norms": {"p": report.p, "q": report.q, "r": report.r},
        },
    }
    _write_manifest(out / "manifest.json", manifest)

    verdict = "ok" if report.forward_radius_ok else "outside bound"
    worst = max(max(r["rel_err_unperturbed"], r["rel_err_perturbed"])
                for r in fd_rows)
    print(f"zero-perturbation gate: {gate:.3e}")
    print(f"finite-difference check (worst rel err): {worst:.3e}")
    print(f"convergence bound: ||eta|| (mu + nu) = "
          f"{report.eta_norm * (report.mu + report.nu):.3f} [{verdict}]")
    return 0


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="invrytov",
        description="Radial absorption reconstruction from boundary "
                    "log-ratio data by the inverse series.")
    parser.add_argument("--version", action="version",
                        version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p_fwd = sub.add_parser("forward",
                           help="solve the forward problem, write data")
    p_fwd.add_argument("--config", required=True)
    p_fwd.add_argument("--out", required=True)
    p_fwd.add_argument("--noise", type=float, default=None,
                       help="noise level gamma (overrides config)")
    p_fwd.add_argument("--seed", type=int, default=None,
                       help="PRNG seed (overrides config)")
    p_fwd.set_defaults(func=_cmd_forward)

    p_rec = sub.add_parser("reconstruct",
                           help="run the inverse series on data")
    p_rec.add_argument("--config", required=True)
    p_rec.add_argument("--out", required=True)
    src = p_rec.add_mutually_exclusive_group(required=True)
    src.add_argument("--data", help="CSV from the forward command")
    src.add_argument("--synthetic", action="store_true",
                     help="generate data from the config itself")
    p_rec.add_argument("--order", type=int, default=None,
                       help=f"series order, at most {MAX_CLI_ORDER} "
                            "(overrides config)")
    pol = p_rec.add_mutually_exclusive_group()
    pol.add_argument("--sv-count", type=int, default=None,
                     help="retained singular values (overrides config)")
    pol.add_argument("--sv-threshold", type=float, default=None,
                     help="smallest retained singular value "
                          "(overrides config)")
    p_rec.set_defaults(func=_cmd_reconstruct)

    p_diag = sub.add_parser("diagnose",
                            help="run independent numerical checks")
    p_diag.add_argument("--config", required=True)
    p_diag.add_argument("--out", required=True)
    p_diag.add_argument("--fd-points", type=int, default=10_000)
    p_diag.add_argument("--dump-greens", default=None, metavar="DIR",
                        help="write every mode kernel as CSV into DIR")
    p_diag.set_defaults(func=_cmd_diagnose)
    return parser


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
