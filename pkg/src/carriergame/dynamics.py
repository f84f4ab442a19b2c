"""Best-response dynamics under Jacobi, Gauss-Seidel and asynchronous schedules.

The single-step functions use the numpy reference best response from
:mod:`carriergame.game`; :func:`run` drives the compiled (or pure-Python)
kernel. Profiles are indexed from ``n = 1`` (the initial profile); each
later profile follows one user update, or one full sweep for Jacobi.
"""

from __future__ import annotations

import csv
import json
import os
from dataclasses import dataclass

import numpy as np

from . import _backend
from .analysis import EquilibriumStructure
from .channel import ChannelRealization
from .game import GameConfig, Scheme, best_response, check_profile

__all__ = [
    "Trajectory",
    "assignments",
    "step_jacobi",
    "step_gauss_seidel",
    "step_async",
    "run",
    "write_trajectory_csv",
]

_SCHEME_CODES = {
    Scheme.JACOBI: _backend.JACOBI,
    Scheme.GAUSS_SEIDEL: _backend.GAUSS_SEIDEL,
    Scheme.ASYNC: _backend.ASYNC,
}


def assignments(profiles: np.ndarray) -> np.ndarray:
    """Active carrier per user (largest power); -1 for a silent user."""
    profiles = np.asarray(profiles)
    out = np.argmax(profiles, axis=-1)
    return np.where(profiles.max(axis=-1) > 0, out, -1)


@dataclass(frozen=True, eq=False)
class Trajectory:
    profiles: np.ndarray
    carrier_assignments: np.ndarray
    converged: bool
    iterations: int
    clamped_ever: bool
    tie_ever: bool
    scheme: Scheme = Scheme.GAUSS_SEIDEL
    order: tuple[int, ...] | None = None

    @property
    def final(self) -> np.ndarray:
        return self.profiles[-1]

    @property
    def structure(self) -> EquilibriumStructure:
        return EquilibriumStructure.from_assignment(self.carrier_assignments[-1],
                                                    self.final.shape[1])

    def summary(self) -> dict:
        return {
            "converged": bool(self.converged),
            "iterations": int(self.iterations),
            "profiles": int(len(self.profiles)),
            "scheme": self.scheme.value,
            "order": [k + 1 for k in self.order] if self.order is not None else None,
            "clamped": bool(self.clamped_ever),
            "tie": bool(self.tie_ever),
            "final_profile": self.final.tolist(),
            "structure": self.structure.label,
        }


def _check_order(order, n_users):
    if order is None:
        return tuple(range(n_users))
    order = tuple(int(k) for k in order)
    if sorted(order) != list(range(n_users)):
        raise ValueError(f"update order {order} is not a permutation of users 0..{n_users - 1}")
    return order


def step_jacobi(ch: ChannelRealization, p, cfg: GameConfig) -> np.ndarray:
    """Every user best-responds to the same input profile."""
    p = check_profile(p, ch, cfg.p_max)
    out = np.empty_like(p)
    for k in range(ch.n_users):
        out[k] = best_response(ch, p, cfg, k).powers
    return out


def step_gauss_seidel(ch: ChannelRealization, p, cfg: GameConfig, order=None) -> np.ndarray:
    """One sweep: users update in ``order``, each seeing earlier updates."""
    order = _check_order(order, ch.n_users)
    out = check_profile(p, ch, cfg.p_max).copy()
    for k in order:
        out[k] = best_response(ch, out, cfg, k).powers
    return out


def step_async(ch: ChannelRealization, p, cfg: GameConfig, rng: np.random.Generator) -> np.ndarray:
    """One uniformly chosen user, ``floor(u * N)``, best-responds."""
    out = check_profile(p, ch, cfg.p_max).copy()
    k = int(rng.random() * ch.n_users)
    out[k] = best_response(ch, out, cfg, k).powers
    return out


def run(ch: ChannelRealization, cfg: GameConfig, initial, order=None,
        rng: np.random.Generator | None = None, backend: str | None = None) -> Trajectory:
    """Iterate the configured scheme until convergence or ``cfg.max_iters`` updates.

    Convergence needs ``cfg.stable_rounds`` consecutive profiles moving less
    than ``cfg.tol_power`` (max norm), and then the last profile must be a
    fixed point of the simultaneous map with every unclamped user at gamma*.
    The asynchronous schedule draws ``cfg.max_iters`` unit doubles from
    ``rng`` up front (user ``floor(u * N)`` at update ``i``).
    """
    p0 = check_profile(initial, ch, cfg.p_max)
    order = _check_order(order, ch.n_users)
    user_seq = None
    if cfg.scheme is Scheme.ASYNC:
        if rng is None:
            raise ValueError("the asynchronous scheme needs an rng")
        user_seq = (rng.random(cfg.max_iters) * ch.n_users).astype(np.int64)
    kern = _backend.get_kernel(backend)
    history, converged, iters, clamped, tie = kern.run_dynamics(
        ch.h, ch.g, ch.sigma2, p0, cfg.gstar, cfg.p_max, _SCHEME_CODES[cfg.scheme],
        np.asarray(order, dtype=np.int64), user_seq, cfg.max_iters, cfg.tol_power,
        cfg.stable_rounds, cfg.tie_rtol)
    return Trajectory(
        profiles=history,
        carrier_assignments=assignments(history),
        converged=converged,
        iterations=iters,
        clamped_ever=clamped,
        tie_ever=tie,
        scheme=cfg.scheme,
        order=order if cfg.scheme is Scheme.GAUSS_SEIDEL else None,
    )


def write_trajectory_csv(traj: Trajectory, path: str | os.PathLike) -> None:
    """CSV ``iter,user,carrier,power``; all indices 1-based."""
    if len(traj.profiles) == 0:
        raise ValueError("empty trajectory")
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["iter", "user", "carrier", "power"])
        for n, prof in enumerate(traj.profiles, start=1):
            for k, row in enumerate(prof, start=1):
                for l, pw in enumerate(row, start=1):
                    w.writerow([n, k, l, repr(float(pw))])


def write_summary_json(traj: Trajectory, path: str | os.PathLike) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(traj.summary(), fh, indent=2)
        fh.write("\n")
