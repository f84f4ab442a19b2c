"""Command-line entry point: ``carriergame <subcommand> ...``.

Exit codes: 0 success, 1 usage error, 2 I/O error.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

import numpy as np

from . import __version__
from .analysis import check_lgdp, classify_2x2_report
from .channel import ChannelError, load_channel, make_rng, sample_channel
from .efficiency import EfficiencyFunction, NoPositiveRootError, gamma_star
from .game import GameConfig, Scheme
from .harness import BatchSpec, emit_game_rows, emit_trajectory, play_game, run_batch

EXIT_OK, EXIT_USAGE, EXIT_IO = 0, 1, 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def _int(text):
    try:
        return int(text, 0)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer, got {text!r}") from None


def _positive_int(text):
    v = _int(text)
    if v < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text!r}")
    return v


def _nonneg_int(text):
    v = _int(text)
    if v < 0:
        raise argparse.ArgumentTypeError(f"expected a nonnegative integer, got {text!r}")
    return v


def _positive_float(text):
    try:
        v = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a number, got {text!r}") from None
    if not v > 0 or not np.isfinite(v):
        raise argparse.ArgumentTypeError(f"expected a positive number, got {text!r}")
    return v


def _u64(text):
    v = _int(text)
    if not 0 <= v < 1 << 64:
        raise argparse.ArgumentTypeError(f"seed must fit in 64 unsigned bits, got {text!r}")
    return v


def _scheme(text):
    try:
        return Scheme.parse(text).value
    except ValueError:
        raise argparse.ArgumentTypeError(
            f"unknown scheme {text!r} (jacobi, gauss-seidel, async)") from None


def _order(text):
    try:
        return tuple(int(x) - 1 for x in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"order must be comma-separated users, got {text!r}") from None


def _game_flags(p):
    p.add_argument("--seed", type=_u64, required=True)
    p.add_argument("--users", type=_positive_int, default=2)
    p.add_argument("--carriers", type=_positive_int, default=2)
    p.add_argument("--scheme", type=_scheme, default="gauss-seidel")
    p.add_argument("--sigma2", type=_positive_float, default=1.0)
    p.add_argument("--pmax", type=_positive_float, default=1000.0)
    p.add_argument("--init", type=_positive_float, default=100.0)
    p.add_argument("--m", type=_positive_int, default=2)
    p.add_argument("--order", type=_order, default=None,
                   help="Gauss-Seidel user order, 1-based, e.g. 2,1")
    p.add_argument("--max-iters", type=_positive_int, default=10_000)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="carriergame", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("gamma-star", help="optimal target SINR for f(g) = (1 - e^-g)^M")
    p.add_argument("--m", type=_positive_int, required=True)

    p = sub.add_parser("run", help="play one seeded game")
    _game_flags(p)
    p.add_argument("--out", help="trajectory CSV (iter,user,carrier,power)")
    p.add_argument("--detail", help="per-iterate CSV with SINR and utility")
    p.add_argument("--summary", help="write the JSON summary here instead of stdout")

    p = sub.add_parser("montecarlo", help="seeded batch of games")
    _game_flags(p)
    p.add_argument("--games", type=_positive_int, default=100_000)
    p.add_argument("--report", help="BatchReport JSON path (stdout if omitted)")
    p.add_argument("--workers", type=_nonneg_int, default=None,
                   help="process count; default $CARRIERGAME_THREADS")
    p.add_argument("--dump-dir", help="write one trajectory CSV per anomalous game here")
    p.add_argument("--lgdp-games", type=_nonneg_int, default=0,
                   help="also sample the direction-preserving check on the first N games")

    p = sub.add_parser("classify", help="2x2 equilibrium structures of a channel file")
    p.add_argument("--channel", required=True)
    p.add_argument("--m", type=_positive_int, default=2)
    p.add_argument("--pmax", type=_positive_float, default=1000.0)

    p = sub.add_parser("check-lgdp", help="sampled direction-preserving check")
    p.add_argument("--seed", type=_u64, required=True)
    p.add_argument("--points", type=_positive_int, required=True)
    p.add_argument("--pairs", type=_positive_int, required=True)
    p.add_argument("--delta", type=_positive_float, required=True)
    p.add_argument("--channels", type=_positive_int, default=1)
    p.add_argument("--channel", help="use this channel file instead of sampling")
    p.add_argument("--users", type=_positive_int, default=2)
    p.add_argument("--carriers", type=_positive_int, default=2)
    p.add_argument("--sigma2", type=_positive_float, default=1.0)
    p.add_argument("--pmax", type=_positive_float, default=1000.0)
    p.add_argument("--m", type=_positive_int, default=2)
    return parser


def _spec(args, n_games=1):
    return BatchSpec(
        n_games=n_games,
        n_users=args.users,
        n_carriers=args.carriers,
        sigma2=args.sigma2,
        p_max=args.pmax,
        initial_power=args.init,
        scheme=args.scheme,
        m=args.m,
        base_seed=args.seed,
        order=args.order,
        max_iters=args.max_iters,
        lgdp_games=getattr(args, "lgdp_games", 0),
    )


def _write_or_print(text, path, out):
    if path:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        out.write(text)


def _cmd_gamma_star(args, out):
    gs = gamma_star(EfficiencyFunction(args.m))
    out.write(f"{gs.value!r}\n")


def _cmd_run(args, out):
    spec = _spec(args)
    cfg = spec.config()
    outcome, ch, traj = play_game(spec, 0, cfg)
    if args.out:
        emit_trajectory(traj, args.out)
    if args.detail:
        emit_game_rows(traj, ch, cfg, args.detail, game_id=0)
    doc = traj.summary()
    doc["seed"] = outcome.seed
    doc["nash"] = outcome.nash
    doc["gamma_star"] = cfg.gstar
    doc["channel"] = ch.to_dict()
    if outcome.structures is not None:
        doc["classifier"] = list(outcome.structures)
    _write_or_print(json.dumps(doc, indent=2) + "\n", args.summary, out)


def _cmd_montecarlo(args, out):
    spec = _spec(args, args.games)
    rep = run_batch(spec, workers=args.workers)
    if args.dump_dir:
        os.makedirs(args.dump_dir, exist_ok=True)
        cfg = spec.config()
        for a in rep.anomalies:
            _, _, traj = play_game(spec, a["index"], cfg)
            emit_trajectory(traj, os.path.join(args.dump_dir, f"game_{a['index']}.csv"))
    _write_or_print(rep.to_json(), args.report, out)


def _cmd_classify(args, out):
    ch = load_channel(args.channel)
    cfg = GameConfig(efficiency=EfficiencyFunction(args.m), p_max=args.pmax)
    checks = classify_2x2_report(ch, cfg)
    doc = {
        "gamma_star": cfg.gstar,
        "equilibria": [c.structure.label for c in checks if c.accepted],
        "checks": [c.to_dict() for c in checks],
    }
    out.write(json.dumps(doc, indent=2) + "\n")


def _cmd_check_lgdp(args, out):
    cfg = GameConfig(efficiency=EfficiencyFunction(args.m), p_max=args.pmax)
    if args.channel:
        channels = [load_channel(args.channel)]
    else:
        seeds = make_rng(args.seed).integers(0, 1 << 63, size=args.channels)
        channels = [sample_channel(args.users, args.carriers, args.sigma2, int(s)) for s in seeds]
    reports = [check_lgdp(ch, cfg, args.points, args.pairs, args.delta, seed=args.seed + i)
               for i, ch in enumerate(channels)]
    doc = {
        "channels": len(reports),
        "points_tested": sum(r.points_tested for r in reports),
        "pairs_tested": sum(r.pairs_tested for r in reports),
        "delta": args.delta,
        "min_dot": min(r.min_dot for r in reports),
        "min_self_dot": min(r.min_self_dot for r in reports),
        "violations": sum(r.violations for r in reports),
        "ties": sum(r.ties for r in reports),
        "dumps": [d for r in reports for d in r.dumps][:10],
    }
    out.write(json.dumps(doc, indent=2) + "\n")


_COMMANDS = {
    "gamma-star": _cmd_gamma_star,
    "run": _cmd_run,
    "montecarlo": _cmd_montecarlo,
    "classify": _cmd_classify,
    "check-lgdp": _cmd_check_lgdp,
}


def main(argv=None, out=None) -> int:
    out = out or sys.stdout
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        _COMMANDS[args.command](args, out)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"carriergame: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (ValueError, ChannelError, NoPositiveRootError) as exc:
        print(f"carriergame: {exc}", file=sys.stderr)
        return EXIT_USAGE
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
