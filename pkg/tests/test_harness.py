import csv
import json

import numpy as np
import pytest

from carriergame.analysis import is_nash
from carriergame.channel import sample_channel
from carriergame.dynamics import run
from carriergame.game import GameConfig
from carriergame.harness import (
    BatchSpec,
    emit_game_rows,
    emit_trajectory,
    play_game,
    run_batch,
    start_profile,
)

from conftest import isolated_channel


def test_game_seed_wraps():
    spec = BatchSpec(base_seed=2**64 - 2)
    assert spec.game_seed(0) == 2**64 - 2
    assert spec.game_seed(3) == 1


def test_spec_validation():
    with pytest.raises(ValueError):
        BatchSpec(n_games=0)
    with pytest.raises(ValueError):
        BatchSpec(initial_power=2000.0)
    with pytest.raises(ValueError):
        BatchSpec(scheme="newton")
    assert BatchSpec(scheme="gs").scheme == "gauss-seidel"


def test_start_profile_one_carrier_each():
    p0 = start_profile(np.random.default_rng(0), 5, 3, 100.0)
    assert np.all((p0 == 100.0).sum(axis=1) == 1)
    assert np.all((p0 == 0.0).sum(axis=1) == 2)


def test_play_game_replays_stream():
    spec = BatchSpec(n_games=1, base_seed=99)
    a, ch, traj = play_game(spec, 0)
    b, ch2, traj2 = play_game(spec, 0)
    assert a == b and ch == ch2
    assert traj.profiles.tobytes() == traj2.profiles.tobytes()
    assert ch.seed == 99


def test_single_game_batch_deterministic():
    spec = BatchSpec(n_games=1, base_seed=12345)
    assert run_batch(spec, workers=0).to_json() == run_batch(spec, workers=0).to_json()


def test_report_invariants():
    rep = run_batch(BatchSpec(n_games=400, base_seed=3), workers=0)
    assert rep.games_run == 400
    assert rep.games_converged <= rep.games_run
    assert rep.iteration_stats["min"] <= rep.iteration_stats["p50"] <= rep.iteration_stats["max"]
    clean = sum(rep.structure_histogram.values())
    assert clean == sum(rep.multiplicity_histogram.values())
    assert clean <= rep.games_converged
    assert rep.nash_failures == 0 and rep.classifier_mismatches == 0
    assert set(rep.structure_histogram) <= {"(1,2)", "(2,1)", "(12,)", "(,12)"}
    doc = json.loads(rep.to_json())
    assert doc["spec"]["n_games"] == 400 and doc["generator"].startswith("numpy.random.PCG64")
    assert doc["convergence_fraction"] == rep.games_converged / 400
    # non-converged games are dumped with their channel for replay
    for a in rep.anomalies:
        assert "channel" in a and len(a["channel"]["h"]) == 2


def test_workers_match_sequential():
    spec = BatchSpec(n_games=120, base_seed=77, lgdp_games=4, lgdp_points=20)
    assert run_batch(spec, workers=3).to_json() == run_batch(spec, workers=0).to_json()


def test_threads_env(monkeypatch):
    monkeypatch.setenv("CARRIERGAME_THREADS", "2")
    spec = BatchSpec(n_games=20, base_seed=5)
    a = run_batch(spec)
    monkeypatch.setenv("CARRIERGAME_THREADS", "zero")
    with pytest.raises(ValueError):
        run_batch(spec)
    monkeypatch.setenv("CARRIERGAME_THREADS", "0")
    assert run_batch(spec).to_json() == a.to_json()


def test_three_users_four_carriers():
    spec = BatchSpec(n_games=1000, n_users=3, n_carriers=4, base_seed=1)
    cfg = spec.config()
    rep = run_batch(spec, workers=0)
    assert rep.games_run == 1000 and rep.nash_failures == 0
    assert rep.games_converged > 900
    for i in range(0, 1000, 50):
        o, ch, traj = play_game(spec, i, cfg)
        if o.converged:
            assert is_nash(ch, cfg, traj.final, 1e-9)
            assert o.structures is None


def test_lgdp_counted_in_batch():
    rep = run_batch(BatchSpec(n_games=10, lgdp_games=10, lgdp_points=50, lgdp_pairs=10), workers=0)
    assert rep.lgdp_violations == 0


def _read(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def test_emit_trajectory_final_structure(tmp_path):
    spec = BatchSpec(n_games=1, base_seed=7)
    o, ch, traj = play_game(spec, 0)
    assert o.clean
    path = tmp_path / "traj.csv"
    emit_trajectory(traj, path)
    rows = _read(path)
    last = str(len(traj.profiles))
    final = [r for r in rows if r["iter"] == last]
    assert len(final) == 4
    for user in ("1", "2"):
        powers = [float(r["power"]) for r in final if r["user"] == user]
        assert sorted(p == 0.0 for p in powers) == [False, True]


def test_emit_trajectory_empty_path():
    traj = run(isolated_channel([[1.0, 2.0]]), GameConfig(), [[1.0, 0.0]])
    with pytest.raises(OSError):
        emit_trajectory(traj, "")


def test_emit_single_user(tmp_path):
    traj = run(isolated_channel([[0.5, 2.0]]), GameConfig(), [[100.0, 0.0]])
    path = tmp_path / "one.csv"
    emit_trajectory(traj, path)
    rows = _read(path)
    carrier1 = [float(r["power"]) for r in rows if r["carrier"] == "1" and int(r["iter"]) >= 2]
    assert carrier1 and all(p == 0.0 for p in carrier1)
    assert {r["user"] for r in rows} == {"1"}


def test_emit_game_rows(tmp_path):
    cfg = GameConfig()
    ch = sample_channel(2, 2, 1.0, 9)
    traj = run(ch, cfg, [[100.0, 0.0], [0.0, 100.0]])
    path = tmp_path / "rows.csv"
    emit_game_rows(traj, ch, cfg, path, game_id=4)
    rows = _read(path)
    assert list(rows[0]) == ["game_id", "iter", "user", "carrier", "power", "sinr", "utility"]
    assert len(rows) == 4 * len(traj.profiles)
    assert {r["game_id"] for r in rows} == {"4"}
    if traj.converged:
        last = [r for r in rows if r["iter"] == str(len(traj.profiles)) and float(r["power"]) > 0]
        for r in last:
            assert float(r["sinr"]) == pytest.approx(cfg.gstar, rel=1e-6)
