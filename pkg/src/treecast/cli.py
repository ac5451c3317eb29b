"""Batch command-line front door.

Subcommands map one-to-one onto library operations and write CSV or JSON.
Identical (argv, seed) produce byte-identical output files, independent of
the worker count: floats are serialized with ``repr``, line endings are
``\\n``, and all randomness is derived from the master seed by stable
hashing of (seed, subcommand, point index).

Exit codes: 0 success, 2 usage error, 3 domain error, 4 resource budget.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import zlib

import numpy as np

from .bp import brute_force_tree, density_evolution
from .dynamics import cycling_demo, evolve_pair, restricted_sdpi_scan
from .errors import DomainError, ResourceBudgetError
from .metrics import entropy, nongaussianness
from .model import CondPair, FiniteDist, NoiseChannel, make_params, scheme_from_json
from .qbp import QbpConfig, qbp_evolve, threshold_scan

__all__ = ["run", "main"]


def _derive_seed(seed: int, subcommand: str, index: int) -> int:
    tag = zlib.crc32(subcommand.encode())
    ss = np.random.SeedSequence(entropy=(seed, tag, index))
    return int(ss.generate_state(1, dtype=np.uint64)[0])


def _threads(args) -> int:
    env = os.environ.get("TREECAST_THREADS")
    if env is not None:
        try:
            return max(1, int(env))
        except ValueError as exc:
            raise DomainError(f"TREECAST_THREADS must be an integer, got {env!r}") from exc
    return max(1, args.threads)


def _fmt_cell(x) -> str:
    if x is None:
        return ""
    if isinstance(x, (float, np.floating)):
        return repr(float(x))
    if isinstance(x, np.integer):
        return str(int(x))
    return str(x)


def _py(x):
    if isinstance(x, (float, np.floating)):
        return float(x)
    if isinstance(x, np.integer):
        return int(x)
    return x


def _emit(args, columns, rows) -> None:
    rows = [[_py(x) for x in row] for row in rows]
    if args.format == "csv":
        lines = [",".join(columns)]
        lines += [",".join(_fmt_cell(x) for x in row) for row in rows]
        text = "\n".join(lines) + "\n"
    else:
        text = json.dumps([dict(zip(columns, row)) for row in rows], indent=1) + "\n"
    _write(args, text)


def _write(args, text: str) -> None:
    if args.out is None or args.out == "-":
        sys.stdout.write(text)
    else:
        with open(args.out, "w", newline="") as fh:
            fh.write(text)


def _eps_points(args) -> list[float]:
    if args.eps_min is not None or args.eps_max is not None:
        if args.eps_min is None or args.eps_max is None or args.eps_steps is None:
            raise DomainError("an epsilon range needs --eps-min, --eps-max and --eps-steps")
        if args.eps_steps < 2:
            raise DomainError("--eps-steps must be >= 2")
        return list(np.linspace(args.eps_min, args.eps_max, args.eps_steps))
    if args.epsilon is None:
        raise DomainError("--epsilon (or an epsilon range) is required")
    return [args.epsilon]


def _cmd_ks_decay(args) -> None:
    params = make_params(args.d, args.epsilon)
    rows = []
    prev = None
    for depth in range(1, args.max_depth + 1):
        res = brute_force_tree(params, depth)
        ratio = None if prev in (None, 0.0) else res.skl / prev
        rows.append([depth, res.skl, ratio])
        prev = res.skl
    _emit(args, ["depth", "skl", "ratio"], rows)


def _parse_channel(spec: str, size: int) -> NoiseChannel:
    kind, _, value = spec.partition(":")
    if kind != "mixture" or not value:
        raise DomainError(f"unknown channel spec {spec!r}; expected mixture:<delta>")
    return NoiseChannel.mixture(float(value), FiniteDist.uniform(size))


def _cmd_evolve(args) -> None:
    with open(args.scheme) as fh:
        scheme = scheme_from_json(fh.read())
    if args.d is not None and args.d != scheme.d:
        raise DomainError(f"--d {args.d} contradicts the scheme arity {scheme.d}")
    params = make_params(scheme.d, args.epsilon)
    channel = None
    if args.channel is not None:
        channel = _parse_channel(args.channel, scheme.alphabet)
    traj = evolve_pair(params, scheme, channel, args.depth)
    rows = [
        [r.level, r.skl, r.tv, r.hell2, r.sigma2, r.boundary_dist]
        for r in traj.records
    ]
    _emit(args, ["level", "skl", "tv", "hell2", "sigma2", "boundary_dist"], rows)


def _cmd_density(args) -> None:
    points = _eps_points(args)
    sweep = len(points) > 1
    columns = ["level", "sigma2", "mu4", "w2_gauss", "stderr_sigma2"]
    if sweep:
        columns = ["epsilon"] + columns
    rows = []
    for idx, eps in enumerate(points):
        params = make_params(args.d, eps)
        seed = _derive_seed(args.seed, "density", idx)
        rep = density_evolution(
            params, args.depth, args.pool, seed, threads=_threads(args)
        )
        for i, lev in enumerate(rep.levels):
            row = [int(lev), rep.sigma2[i], rep.mu4[i], rep.w2_gauss[i], rep.sigma2_se[i]]
            if sweep:
                row = [eps] + row
            rows.append(row)
    _emit(args, columns, rows)


def _cmd_qbp(args) -> None:
    points = _eps_points(args)
    sweep = len(points) > 1
    columns = (["epsilon"] if sweep else []) + ["level", "sigma2"]
    rows = []
    for eps in points:
        traj = qbp_evolve(QbpConfig(L=args.L, epsilon=eps), args.depth, record_pairs=False)
        for lev, s in enumerate(traj.sigma2):
            rows.append(([eps] if sweep else []) + [lev, float(s)])
    _emit(args, columns, rows)


def _cmd_scan(args) -> None:
    L_list = [int(tok) for tok in args.L_list.split(",") if tok]
    table = threshold_scan(
        L_list,
        probe_depth=args.depth,
        survive_tol=args.survive_tol,
        bisect_tol=args.bisect_tol,
        threads=_threads(args),
    )
    rows = [
        [r.L, r.eps_of_L, table.eps_c, table.eps_c - r.eps_of_L, r.iters]
        for r in table.rows
    ]
    _emit(args, ["L", "eps_of_L", "eps_c", "gap", "iters"], rows)


def _cmd_sdpi(args) -> None:
    res = restricted_sdpi_scan(
        d=args.d,
        sigma_size=args.sigma_size,
        gamma=args.gamma,
        grid_step=args.step,
        threads=_threads(args),
    )
    doc = {
        "eta_hat": res.eta_hat,
        "argmax_table": res.table.tolist(),
        "argmax_p": res.P.probs.tolist(),
        "argmax_q": res.Q.probs.tolist(),
        "per_function_max": res.per_function.tolist(),
    }
    _write(args, json.dumps(doc, indent=1) + "\n")


def _parse_dist(tok: str) -> FiniteDist:
    return FiniteDist(np.array([float(x) for x in tok.split(",")]))


def _cmd_cycle(args) -> None:
    params = make_params(args.d, args.epsilon)
    if args.start is not None:
        plus_tok, _, minus_tok = args.start.partition(";")
        if not minus_tok:
            raise DomainError("--start must look like p0,p1,p2;q0,q1,q2")
        start = CondPair(_parse_dist(plus_tok), _parse_dist(minus_tok))
    else:
        start = CondPair(
            FiniteDist(np.array([0.36, 0.34, 0.30])),
            FiniteDist(np.array([0.30, 0.36, 0.34])),
        )
    traj = cycling_demo(args.steps, start, params)
    rows = [
        [r.level, r.skl, r.tv, r.hell2, r.sigma2, r.boundary_dist]
        for r in traj.records
    ]
    _emit(args, ["level", "skl", "tv", "hell2", "sigma2", "boundary_dist"], rows)


def _cmd_nongauss(args) -> None:
    values = np.array([float(x) for x in args.values.split(",")])
    weights = np.array([float(x) for x in args.weights.split(",")])
    e, sigma_star = nongaussianness((values, weights))
    doc = {
        "nongaussianness": e,
        "sigma_star": sigma_star,
        "entropy": entropy((values, weights)),
    }
    _write(args, json.dumps(doc, indent=1) + "\n")


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="treecast",
        description="Broadcasting on d-ary trees: exact dynamics, BP, and phase scans.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, *, seeded=False, threaded=False):
        p.add_argument("--out", default=None, help="output path (default: stdout)")
        p.add_argument("--format", choices=("csv", "json"), default="csv")
        if seeded:
            p.add_argument("--seed", type=int, default=0)
        if threaded:
            p.add_argument("--threads", type=int, default=1)

    p = sub.add_parser("ks-decay", help="exact SKL decay of the brute-force tree")
    p.add_argument("--d", type=int, required=True)
    p.add_argument("--epsilon", type=float, required=True)
    p.add_argument("--max-depth", type=int, default=4)
    common(p)
    p.set_defaults(func=_cmd_ks_decay)

    p = sub.add_parser("evolve", help="exact pair dynamics of a scheme file")
    p.add_argument("--scheme", required=True, help="scheme JSON path")
    p.add_argument("--d", type=int, default=None)
    p.add_argument("--epsilon", type=float, required=True)
    p.add_argument("--depth", type=int, required=True)
    p.add_argument("--channel", default=None, help="mixture:<delta>")
    common(p)
    p.set_defaults(func=_cmd_evolve)

    p = sub.add_parser("density", help="population-dynamics BP score evolution")
    p.add_argument("--d", type=int, required=True)
    p.add_argument("--epsilon", type=float, default=None)
    p.add_argument("--eps-min", type=float, default=None)
    p.add_argument("--eps-max", type=float, default=None)
    p.add_argument("--eps-steps", type=int, default=None)
    p.add_argument("--depth", type=int, required=True)
    p.add_argument("--pool", type=int, default=10**5)
    common(p, seeded=True, threaded=True)
    p.set_defaults(func=_cmd_density)

    p = sub.add_parser("qbp", help="exact quantized-BP trajectory")
    p.add_argument("--L", type=int, required=True)
    p.add_argument("--epsilon", type=float, default=None)
    p.add_argument("--eps-min", type=float, default=None)
    p.add_argument("--eps-max", type=float, default=None)
    p.add_argument("--eps-steps", type=int, default=None)
    p.add_argument("--depth", type=int, required=True)
    common(p)
    p.set_defaults(func=_cmd_qbp)

    p = sub.add_parser("scan", help="bisect the survival threshold eps(L)")
    p.add_argument("--L-list", required=True, help="comma-separated alphabet sizes")
    p.add_argument("--depth", type=int, default=800, help="probe depth")
    p.add_argument("--survive-tol", type=float, default=1e-3)
    p.add_argument("--bisect-tol", type=float, default=1e-4)
    common(p, threaded=True)
    p.set_defaults(func=_cmd_scan)

    p = sub.add_parser("sdpi", help="exhaustive restricted-SDPI scan")
    p.add_argument("--d", type=int, required=True)
    p.add_argument("--sigma-size", type=int, default=2)
    p.add_argument("--gamma", type=float, required=True)
    p.add_argument("--step", type=float, required=True)
    common(p, threaded=True)
    p.set_defaults(func=_cmd_sdpi)

    p = sub.add_parser("cycle", help="3-symbol intransitive cycling demo")
    p.add_argument("--d", type=int, default=2)
    p.add_argument("--epsilon", type=float, default=0.1)
    p.add_argument("--steps", type=int, required=True)
    p.add_argument("--start", default=None, help="p0,p1,p2;q0,q1,q2")
    common(p)
    p.set_defaults(func=_cmd_cycle)

    p = sub.add_parser("nongauss", help="Wasserstein non-Gaussianness of an atomic law")
    p.add_argument("--values", required=True, help="comma-separated atom locations")
    p.add_argument("--weights", required=True, help="comma-separated atom weights")
    common(p)
    p.set_defaults(func=_cmd_nongauss)

    return parser


def run(argv) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:  # argparse exits 0 on --help, 2 on usage errors
        return int(exc.code or 0)
    try:
        args.func(args)
    except DomainError as exc:
        print(f"treecast: domain error: {exc}", file=sys.stderr)
        return 3
    except ResourceBudgetError as exc:
        print(f"treecast: resource budget exceeded: {exc}", file=sys.stderr)
        return 4
    except OSError as exc:
        print(f"treecast: {exc}", file=sys.stderr)
        return 3
    return 0


def main() -> None:
    sys.exit(run(sys.argv[1:]))


if __name__ == "__main__":
    main()
