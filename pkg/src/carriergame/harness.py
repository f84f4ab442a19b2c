"""Seeded Monte-Carlo batches of power-control games and their output files.

Game ``i`` of a batch uses seed ``base_seed + i`` (mod 2**64). Its stream is
consumed in a fixed order: channel gains, then one unit double per user for
the starting carrier (``floor(u * D)``), then the asynchronous schedule.
"""

from __future__ import annotations

import csv
import json
import logging
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np

from .analysis import check_lgdp, classify_2x2, is_nash
from .channel import ChannelRealization, draw_gains, generator_id, make_rng
from .dynamics import Trajectory, run, write_trajectory_csv
from .efficiency import EfficiencyFunction
from .game import GameConfig, Scheme, best_carrier_condition, sinr_matrix, utility

__all__ = [
    "BatchSpec",
    "BatchReport",
    "GameOutcome",
    "play_game",
    "run_batch",
    "emit_trajectory",
    "emit_game_rows",
    "THREADS_ENV",
]

log = logging.getLogger(__name__)

THREADS_ENV = "CARRIERGAME_THREADS"
ACTIVE_POWER = 1e-9
MAX_ANOMALY_DUMPS = 20


@dataclass(frozen=True)
class BatchSpec:
    n_games: int = 100_000
    n_users: int = 2
    n_carriers: int = 2
    sigma2: float = 1.0
    p_max: float = 1000.0
    initial_power: float = 100.0
    scheme: str = "gauss-seidel"
    m: int = 2
    base_seed: int = 1
    order: tuple[int, ...] | None = None
    max_iters: int = 10_000
    tol_power: float = 1e-9
    stable_rounds: int = 3
    lgdp_games: int = 0
    lgdp_points: int = 100
    lgdp_pairs: int = 10
    lgdp_delta: float = 1e-3

    def __post_init__(self):
        for name in ("n_games", "n_users", "n_carriers"):
            v = getattr(self, name)
            if int(v) != v or v < 1:
                raise ValueError(f"{name} must be a positive integer, got {v!r}")
        for name in ("sigma2", "p_max", "initial_power"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive, got {getattr(self, name)!r}")
        if self.initial_power > self.p_max:
            raise ValueError("initial_power exceeds p_max")
        object.__setattr__(self, "scheme", Scheme.parse(self.scheme).value)
        if self.order is not None:
            object.__setattr__(self, "order", tuple(int(k) for k in self.order))

    def config(self) -> GameConfig:
        return GameConfig(
            efficiency=EfficiencyFunction(self.m),
            p_max=self.p_max,
            scheme=Scheme.parse(self.scheme),
            max_iters=self.max_iters,
            tol_power=self.tol_power,
            stable_rounds=self.stable_rounds,
        )

    def game_seed(self, index: int) -> int:
        return (int(self.base_seed) + int(index)) & ((1 << 64) - 1)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["order"] = [k + 1 for k in self.order] if self.order is not None else None
        return d


@dataclass(frozen=True)
class GameOutcome:
    index: int
    seed: int
    converged: bool
    iterations: int
    clamped: bool
    tied: bool
    label: str
    nash: bool | None = None
    single_carrier: bool | None = None
    sinr_rel_err: float | None = None
    best_carrier: bool | None = None
    structures: tuple[str, ...] | None = None
    lgdp_violations: int | None = None

    @property
    def clean(self) -> bool:
        """Converged without clamping or ties: counted in the structure statistics."""
        return self.converged and not self.clamped and not self.tied


def start_profile(rng: np.random.Generator, n_users: int, n_carriers: int, power: float):
    carriers = (rng.random(n_users) * n_carriers).astype(np.int64)
    p0 = np.zeros((n_users, n_carriers))
    p0[np.arange(n_users), carriers] = power
    return p0


def play_game(spec: BatchSpec, index: int, cfg: GameConfig | None = None):
    """Sample, run and verify one game. Returns ``(outcome, channel, trajectory)``."""
    cfg = cfg or spec.config()
    seed = spec.game_seed(index)
    rng = make_rng(seed)
    h, g = draw_gains(rng, spec.n_users, spec.n_carriers)
    ch = ChannelRealization(h, g, spec.sigma2, seed=seed, generator=generator_id())
    p0 = start_profile(rng, spec.n_users, spec.n_carriers, spec.initial_power)
    traj = run(ch, cfg, p0, order=spec.order, rng=rng)
    label = traj.structure.label
    nash = single = err = bc = structures = None
    if traj.converged:
        final = traj.final
        nash = is_nash(ch, cfg, final)
        active = final > ACTIVE_POWER
        single = bool(np.all(active.sum(axis=1) == 1))
        assign = traj.carrier_assignments[-1]
        if single and not traj.clamped_ever:
            gam = sinr_matrix(ch, final)[np.arange(ch.n_users), assign]
            err = float(np.max(np.abs(gam - cfg.gstar)) / cfg.gstar)
            bc = all(best_carrier_condition(ch, final, cfg, k, int(assign[k]))
                     for k in range(ch.n_users))
    if ch.n_users == 2 and ch.n_carriers == 2:
        structures = tuple(sorted(s.label for s in classify_2x2(ch, cfg)))
    lgdp = None
    if index < spec.lgdp_games:
        # separate stream so the game itself is unaffected
        lgdp = check_lgdp(ch, cfg, spec.lgdp_points, spec.lgdp_pairs, spec.lgdp_delta,
                          seed=seed ^ 0x9E3779B97F4A7C15).violations
    outcome = GameOutcome(index, seed, traj.converged, traj.iterations, traj.clamped_ever,
                          traj.tie_ever, label, nash, single, err, bc, structures, lgdp)
    return outcome, ch, traj


def _play_range(spec: BatchSpec, start: int, stop: int):
    cfg = spec.config()
    outs = []
    for i in range(start, stop):
        outcome, ch, _ = play_game(spec, i, cfg)
        outs.append((outcome, ch.to_dict() if _is_anomaly(outcome) else None))
    return outs


def _is_anomaly(o: GameOutcome) -> bool:
    if not o.converged or o.tied:
        return True
    if o.nash is False or o.lgdp_violations:
        return True
    if o.clean and (o.single_carrier is False or o.best_carrier is False):
        return True
    return o.clean and o.structures is not None and o.label not in o.structures


@dataclass
class BatchReport:
    games_run: int = 0
    games_converged: int = 0
    games_clamped: int = 0
    games_tied: int = 0
    structure_histogram: dict = field(default_factory=dict)
    iteration_stats: dict = field(default_factory=dict)
    lgdp_violations: int = 0
    nash_failures: int = 0
    single_carrier_failures: int = 0
    best_carrier_failures: int = 0
    max_sinr_rel_err: float = 0.0
    classifier_mismatches: int = 0
    classifier_empty: int = 0
    nonconverged_without_equilibrium: int = 0
    multiplicity_histogram: dict = field(default_factory=dict)
    anomalies: list = field(default_factory=list)
    spec: dict = field(default_factory=dict)
    generator: str = ""

    @property
    def convergence_fraction(self) -> float:
        return self.games_converged / self.games_run if self.games_run else 0.0

    def to_dict(self) -> dict:
        d = asdict(self)
        d["convergence_fraction"] = self.convergence_fraction
        return d

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"


def _reduce(spec: BatchSpec, records) -> BatchReport:
    rep = BatchReport(spec=spec.to_dict(), generator=generator_id())
    iters = []
    hist: dict[str, int] = {}
    mult: dict[str, int] = {}
    for o, ch_doc in records:
        rep.games_run += 1
        rep.games_clamped += o.clamped
        rep.games_tied += o.tied
        if o.converged:
            rep.games_converged += 1
            iters.append(o.iterations)
            rep.nash_failures += o.nash is False
        elif o.structures is not None and not o.structures:
            rep.nonconverged_without_equilibrium += 1
        if o.clean:
            hist[o.label] = hist.get(o.label, 0) + 1
            rep.single_carrier_failures += o.single_carrier is False
            rep.best_carrier_failures += o.best_carrier is False
            if o.sinr_rel_err is not None:
                rep.max_sinr_rel_err = max(rep.max_sinr_rel_err, o.sinr_rel_err)
            if o.structures is not None:
                key = str(len(o.structures))
                mult[key] = mult.get(key, 0) + 1
                rep.classifier_empty += not o.structures
                rep.classifier_mismatches += o.label not in o.structures
        rep.lgdp_violations += o.lgdp_violations or 0
        if ch_doc is not None and len(rep.anomalies) < MAX_ANOMALY_DUMPS:
            rep.anomalies.append({**asdict(o), "channel": ch_doc})
    rep.structure_histogram = dict(sorted(hist.items()))
    rep.multiplicity_histogram = dict(sorted(mult.items()))
    if iters:
        a = np.asarray(iters)
        rep.iteration_stats = {
            "min": int(a.min()),
            "mean": float(a.mean()),
            "max": int(a.max()),
            "p50": float(np.percentile(a, 50)),
            "p90": float(np.percentile(a, 90)),
            "p99": float(np.percentile(a, 99)),
        }
    return rep


def _threads() -> int:
    raw = os.environ.get(THREADS_ENV, "0")
    try:
        return max(0, int(raw))
    except ValueError:
        raise ValueError(f"{THREADS_ENV} must be an integer, got {raw!r}") from None


def run_batch(spec: BatchSpec, workers: int | None = None) -> BatchReport:
    """Play ``spec.n_games`` seeded games and reduce them into a report.

    ``workers`` defaults to ``$CARRIERGAME_THREADS`` (0 runs in-process).
    The report does not depend on the worker count.
    """
    workers = _threads() if workers is None else workers
    n = spec.n_games
    if workers <= 1:
        records = _play_range(spec, 0, n)
    else:
        chunk = max(1, -(-n // (workers * 8)))
        bounds = [(s, min(n, s + chunk)) for s in range(0, n, chunk)]
        with ProcessPoolExecutor(max_workers=workers) as pool:
            parts = pool.map(_play_range, [spec] * len(bounds), *zip(*bounds))
            records = [r for part in parts for r in part]
    rep = _reduce(spec, records)
    log.info("batch: %d/%d converged", rep.games_converged, rep.games_run)
    return rep


def emit_trajectory(traj: Trajectory, path: str | os.PathLike) -> None:
    """Write ``iter,user,carrier,power`` rows for plotting."""
    write_trajectory_csv(traj, path)


def emit_game_rows(traj: Trajectory, ch: ChannelRealization, cfg: GameConfig,
                   path: str | os.PathLike, game_id: int = 0) -> None:
    """Per-iterate CSV ``game_id,iter,user,carrier,power,sinr,utility`` (1-based)."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["game_id", "iter", "user", "carrier", "power", "sinr", "utility"])
        for n, prof in enumerate(traj.profiles, start=1):
            gam = sinr_matrix(ch, prof)
            for k in range(ch.n_users):
                u = utility(ch, prof, cfg, k)
                for l in range(ch.n_carriers):
                    w.writerow([game_id, n, k + 1, l + 1, repr(float(prof[k, l])),
                                repr(float(gam[k, l])), repr(u)])
