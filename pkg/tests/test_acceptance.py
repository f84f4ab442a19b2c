"""Acceptance suite: one recorded PASS/FAIL line per criterion.

The 2x2 batch defaults to 10**5 games; set CARRIERGAME_ACCEPTANCE_GAMES
(for example to 10000000) for a full-scale overnight run.
"""

import os
import subprocess
import sys
import time
import timeit

import numpy as np
import pytest

from carriergame.analysis import (
    EquilibriumStructure,
    check_lgdp,
    classify_2x2,
    classify_2x2_report,
    equilibrium_powers,
)
from carriergame.channel import from_gains, sample_channel
from carriergame.dynamics import run
from carriergame.efficiency import EfficiencyFunction, deriv, eval_f, gamma_star
from carriergame.game import GameConfig, best_response
from carriergame.harness import BatchSpec, run_batch

from conftest import grid_best_response, record

pytestmark = pytest.mark.acceptance

N_GAMES = int(os.environ.get("CARRIERGAME_ACCEPTANCE_GAMES", "100000"))
CLEAN_2X2 = {"(1,2)", "(2,1)", "(12,)", "(,12)"}


def _bisect_root(m):
    # e^g - 1 - m g changes sign once on (0, inf); bisect to the last bit
    lo, hi = 1e-3, 50.0
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if np.expm1(mid) - m * mid < 0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


@pytest.fixture(scope="session")
def batch():
    spec = BatchSpec(n_games=N_GAMES, base_seed=1)
    t0 = time.perf_counter()
    rep = run_batch(spec, workers=0)
    return rep, time.perf_counter() - t0


# 1

def test_c1_gamma_star():
    ok = True
    root = _bisect_root(2)
    gs2 = gamma_star(EfficiencyFunction(2)).value
    ok &= record(1, abs(gs2 - root) <= 1e-6, f"M=2 gamma*={gs2:.8f} vs root {root:.8f}")
    for m in (2, 5, 10, 80):
        ef = EfficiencyFunction(m)
        g = gamma_star(ef).value
        res = abs(eval_f(ef, g) - g * deriv(ef, g))
        t = min(timeit.repeat(lambda: gamma_star(ef), number=1, repeat=20))
        ok &= record(1, res <= 1e-12 and t < 1e-3, f"M={m} residual {res:.1e} time {t * 1e3:.3f} ms")
    assert ok


# 2

def test_c2_best_response_vs_grid():
    cfg = GameConfig()
    rng = np.random.default_rng(2024)
    t0 = time.perf_counter()
    carrier_hits = power_hits = total = 0
    for seed in range(200):
        n, d = (int(x) for x in rng.integers(1, 4, size=2))
        ch = sample_channel(n, d, 1.0, 400_000 + seed)
        p = rng.random((n, d)) * rng.choice([1.0, 10.0, 100.0])
        for k in range(n):
            br = best_response(ch, p, cfg, k)
            carrier, power, grid = grid_best_response(ch, p, 2, cfg.p_max, k)
            step = grid[1] / grid[0]
            total += 1
            carrier_hits += carrier == br.carrier
            target = br.powers[br.carrier]
            power_hits += target / step <= power <= target * step
    elapsed = time.perf_counter() - t0
    ok = carrier_hits == total and power_hits == total and elapsed < 30
    record(2, ok, f"carrier {carrier_hits}/{total}, power {power_hits}/{total}, {elapsed:.1f} s")
    assert ok


# 3

def test_c3_single_carrier_structure(batch):
    rep, _ = batch
    clean = sum(rep.structure_histogram.values())
    ok = rep.single_carrier_failures == 0 and rep.max_sinr_rel_err <= 1e-6 and clean > 0
    record(3, ok, f"{clean} clean games, {rep.single_carrier_failures} multi-carrier, "
                  f"max SINR rel err {rep.max_sinr_rel_err:.1e}")
    assert ok


# 4

def test_c4_convergence_fraction(batch):
    rep, _ = batch
    frac = rep.convergence_fraction
    ok = record(4, frac >= 0.999, f"converged {rep.games_converged}/{rep.games_run} = {frac:.4f} "
                                  f"(need >= 0.999); {rep.nonconverged_without_equilibrium} of the "
                                  f"{rep.games_run - rep.games_converged} others have no pure equilibrium")
    assert ok


def test_c4_no_ties(batch):
    rep, _ = batch
    assert record(4, rep.games_tied == 0, f"{rep.games_tied} tie games")


def test_c4_converged_profiles_are_nash(batch):
    rep, _ = batch
    assert record(4, rep.nash_failures == 0, f"{rep.nash_failures} is_nash failures")


def test_c4_runtime(batch):
    _, elapsed = batch
    limit = 300.0 * N_GAMES / 100_000
    assert record(4, elapsed < limit, f"batch {elapsed:.0f} s single-threaded")


# 5

def test_c5_best_carrier_condition(batch):
    rep, _ = batch
    ok = rep.best_carrier_failures == 0
    record(5, ok, f"{rep.best_carrier_failures} best-carrier violations")
    assert ok


# 6

def test_c6_classifier_contains_dynamics():
    mismatches = empties = clean = 0
    for order in ((0, 1), (1, 0)):
        rep = run_batch(BatchSpec(n_games=10_000, base_seed=1_000_001, order=order), workers=0)
        mismatches += rep.classifier_mismatches
        empties += rep.classifier_empty
        clean += sum(rep.structure_histogram.values())
    ok = mismatches == 0 and clean > 0
    record(6, ok, f"{mismatches} mismatches over {clean} clean runs (both orders)")
    assert ok


# 7

def _uniform(h, g):
    return from_gains(h, np.full((2, 2, 2), g), 1.0)


CASES = {
    "(12,)": _uniform([[2.0, 1.0], [2.0, 1.0]], 0.1),
    "(1,2)": _uniform([[2.0, 0.5], [0.5, 2.0]], 0.01),
}


@pytest.mark.parametrize("label", sorted(CASES))
def test_c7_case_replays(label):
    ch = CASES[label]
    cfg = GameConfig()
    expected = EquilibriumStructure.from_label(label)
    checks = {c.structure.label: c for c in classify_2x2_report(ch, cfg)}
    ok = checks[label].accepted and all(checks[label].inequalities.values())
    eq = equilibrium_powers(ch, cfg, expected.assignment).profile
    runs = worst = 0
    for start in np.ndindex(2, 2):
        p0 = np.zeros((2, 2))
        p0[0, start[0]] = p0[1, start[1]] = 100.0
        for order in ((0, 1), (1, 0)):
            traj = run(ch, cfg, p0, order=order)
            a = traj.carrier_assignments
            settled = next(n for n in range(len(a)) if all(
                tuple(row) == expected.assignment for row in a[n:]))
            worst = max(worst, settled)
            ok &= traj.converged and traj.structure == expected and settled <= 6
            ok &= bool(np.allclose(traj.final, eq, rtol=1e-8, atol=0))
            runs += 1
    record(7, ok, f"{label}: {runs} runs reach {label}, settled within {worst} updates")
    assert ok


# 8

def test_c8_lgdp():
    cfg = GameConfig()
    t0 = time.perf_counter()
    violations = 0
    min_dot = min_self = np.inf
    for i in range(100):
        ch = sample_channel(2, 2, 1.0, 2_000_000 + i)
        rep = check_lgdp(ch, cfg, 1000, 100, 1e-3, seed=i)
        violations += rep.violations
        min_dot = min(min_dot, rep.min_dot)
        min_self = min(min_self, rep.min_self_dot)
    ok = violations == 0 and min_self >= 0.0
    record(8, ok, f"{violations} violations, min dot {min_dot:.3g}, min b=c dot {min_self:.3g}, "
                  f"{time.perf_counter() - t0:.0f} s")
    assert ok


# 9

def _sign(x, scale):
    return 0 if abs(x) <= 1e-12 * scale else (1 if x > 0 else -1)


def test_c9_shared_carrier_sign_agreement():
    cfg = GameConfig()
    shared = EquilibriumStructure((0, 0), 2)
    rng = np.random.default_rng(9)
    channels = []
    seed = 3_000_000
    while len(channels) < 20:
        ch = sample_channel(2, 2, 1.0, seed)
        if shared in classify_2x2(ch, cfg):
            channels.append(ch)
        seed += 1
    checked = bad = 0
    for ch in channels:
        ps = equilibrium_powers(ch, cfg, (0, 0)).profile[:, 0]
        starts = [np.array(s) for s in np.ndindex(2, 2)]
        for s in starts:
            for order in ((0, 1), (1, 0)):
                for level in (100.0, *rng.uniform(0.01, 5.0, size=2)):
                    p0 = np.zeros((2, 2))
                    p0[[0, 1], s] = level * rng.uniform(0.5, 1.5, size=2)
                    traj = run(ch, cfg, p0, order=order)
                    for n in range(1, len(traj.profiles)):
                        if tuple(traj.carrier_assignments[n]) != (0, 0):
                            continue
                        p = traj.profiles[n][:, 0]
                        a = _sign(p[0] - ps[0], ps[0])
                        b = _sign(p[1] - ps[1], ps[1])
                        checked += 1
                        bad += a != b and a != 0 and b != 0
    ok = bad == 0 and checked > 0
    record(9, ok, f"{len(channels)} channels, {checked} shared iterates, {bad} sign mismatches")
    assert ok


# 10

def _cli(args, cwd):
    proc = subprocess.run([sys.executable, "-m", "carriergame.cli", *args], cwd=cwd,
                          capture_output=True, check=True)
    return proc.stdout


def test_c10_determinism(tmp_path):
    outputs = []
    for tag in "ab":
        d = tmp_path / tag
        d.mkdir()
        run_out = _cli(["run", "--seed", "7", "--users", "2", "--carriers", "2",
                        "--out", "traj.csv"], d)
        mc_out = _cli(["montecarlo", "--games", "2000", "--seed", "1", "--report", "rep.json"], d)
        outputs.append((run_out, (d / "traj.csv").read_bytes(), mc_out, (d / "rep.json").read_bytes()))
    ok = outputs[0] == outputs[1]
    record(10, ok, "run and montecarlo outputs byte-identical" if ok else "outputs differ")
    assert ok
