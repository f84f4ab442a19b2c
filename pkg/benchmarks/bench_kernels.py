"""Compare the compiled and pure-Python dynamics kernels.

    python benchmarks/bench_kernels.py --games 2000 --users 2 --carriers 2
"""

import argparse
import time

import numpy as np

from carriergame import _backend
from carriergame.channel import sample_channel
from carriergame.dynamics import run
from carriergame.game import GameConfig, Scheme


def _workload(n_games, n_users, n_carriers):
    out = []
    for seed in range(n_games):
        ch = sample_channel(n_users, n_carriers, 1.0, seed)
        p0 = np.zeros((n_users, n_carriers))
        p0[np.arange(n_users), np.arange(n_users) % n_carriers] = 100.0
        out.append((ch, p0))
    return out


def bench_run(backend, games, cfg):
    t0 = time.perf_counter()
    updates = 0
    for seed, (ch, p0) in enumerate(games):
        traj = run(ch, cfg, p0, rng=np.random.default_rng(seed), backend=backend)
        updates += traj.iterations
    return time.perf_counter() - t0, updates


def bench_map(backend, games, cfg, repeats):
    kern = _backend.get_kernel(backend)
    t0 = time.perf_counter()
    for ch, p0 in games:
        for _ in range(repeats):
            kern.jacobi_map(ch.h, ch.g, ch.sigma2, p0, cfg.gstar, cfg.p_max, cfg.tie_rtol)
    return time.perf_counter() - t0


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--games", type=int, default=2000)
    ap.add_argument("--users", type=int, default=2)
    ap.add_argument("--carriers", type=int, default=2)
    ap.add_argument("--map-repeats", type=int, default=10)
    args = ap.parse_args()

    backends = ["python"] + (["cython"] if _backend.compiled_kernel is not None else [])
    games = _workload(args.games, args.users, args.carriers)
    print(f"{args.games} games, {args.users} users x {args.carriers} carriers")
    print(f"{'scheme':<14}{'backend':<9}{'seconds':>10}{'us/update':>12}{'speedup':>9}")
    for scheme in Scheme:
        cfg = GameConfig(scheme=scheme)
        base = None
        for name in backends:
            secs, updates = bench_run(name, games, cfg)
            base = base or secs
            print(f"{scheme.value:<14}{name:<9}{secs:>10.3f}{1e6 * secs / updates:>12.2f}"
                  f"{base / secs:>8.1f}x")
    base = None
    for name in backends:
        secs = bench_map(name, games, GameConfig(), args.map_repeats)
        base = base or secs
        calls = args.games * args.map_repeats
        print(f"{'jacobi_map':<14}{name:<9}{secs:>10.3f}{1e6 * secs / calls:>12.2f}"
              f"{base / secs:>8.1f}x")


if __name__ == "__main__":
    main()
