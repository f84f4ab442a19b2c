"""Strategy space, SINR, bits/joule utility and the single-carrier best response.

Powers are N x D float arrays (``p[k, l]`` is user ``k`` on carrier ``l``);
users and carriers are 0-based in the API and 1-based in exported files.
"""

from __future__ import annotations

import enum
import json
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .channel import ChannelRealization
from .efficiency import EfficiencyFunction, GammaStar, eval_f, gamma_star

__all__ = [
    "Scheme",
    "GameConfig",
    "BestResponse",
    "ProfileError",
    "check_profile",
    "profile_to_json",
    "profile_from_json",
    "sinr",
    "sinr_matrix",
    "utility",
    "required_power",
    "required_powers",
    "best_response",
    "best_carrier_condition",
]

TIE_RTOL = 1e-12


class ProfileError(ValueError):
    """Power profile with wrong shape or entries outside ``[0, p_max]``."""


class Scheme(enum.Enum):
    JACOBI = "jacobi"
    GAUSS_SEIDEL = "gauss-seidel"
    ASYNC = "async"

    @classmethod
    def parse(cls, value) -> "Scheme":
        if isinstance(value, cls):
            return value
        key = str(value).lower().replace("_", "-")
        aliases = {"gs": "gauss-seidel", "seidel": "gauss-seidel", "asynchronous": "async",
                   "totally-asynchronous": "async"}
        return cls(aliases.get(key, key))


@dataclass(frozen=True)
class GameConfig:
    """Parameters shared by every user of one game.

    ``tol_power`` is an absolute threshold in power units; ``max_iters``
    counts individual user updates.
    """

    efficiency: EfficiencyFunction = field(default_factory=EfficiencyFunction)
    rate: float = 1.0
    p_max: float = 1000.0
    scheme: Scheme = Scheme.GAUSS_SEIDEL
    max_iters: int = 10_000
    tol_power: float = 1e-9
    stable_rounds: int = 3
    tie_rtol: float = TIE_RTOL
    gamma_star: GammaStar | None = None

    def __post_init__(self):
        if not self.rate > 0:
            raise ValueError(f"rate must be positive, got {self.rate!r}")
        if not self.p_max > 0:
            raise ValueError(f"p_max must be positive, got {self.p_max!r}")
        if not self.tol_power > 0:
            raise ValueError(f"tol_power must be positive, got {self.tol_power!r}")
        if int(self.max_iters) != self.max_iters or self.max_iters < 1:
            raise ValueError(f"max_iters must be >= 1, got {self.max_iters!r}")
        if int(self.stable_rounds) != self.stable_rounds or self.stable_rounds < 1:
            raise ValueError(f"stable_rounds must be >= 1, got {self.stable_rounds!r}")
        object.__setattr__(self, "scheme", Scheme.parse(self.scheme))
        if self.gamma_star is None:
            object.__setattr__(self, "gamma_star", gamma_star(self.efficiency))

    @property
    def gstar(self) -> float:
        return self.gamma_star.value


class BestResponse(NamedTuple):
    powers: np.ndarray
    carrier: int
    clamped: bool
    tie: bool


def check_profile(p, ch: ChannelRealization, p_max: float | None = None) -> np.ndarray:
    arr = np.asarray(p, dtype=np.float64)
    if arr.shape != (ch.n_users, ch.n_carriers):
        raise ProfileError(f"profile shape {arr.shape} != {(ch.n_users, ch.n_carriers)}")
    if not np.all(np.isfinite(arr)) or np.any(arr < 0):
        raise ProfileError("powers must be finite and nonnegative")
    if p_max is not None and np.any(arr > p_max):
        raise ProfileError(f"powers exceed p_max={p_max}")
    return arr


def profile_to_json(p) -> str:
    return json.dumps(np.asarray(p, dtype=np.float64).tolist())


def profile_from_json(text: str) -> np.ndarray:
    arr = np.array(json.loads(text), dtype=np.float64)
    if arr.ndim != 2:
        raise ProfileError("power profile JSON must be an N x D array")
    return arr


def _check_index(value, size, what):
    if not 0 <= value < size:
        raise IndexError(f"{what} index {value} out of range [0, {size})")


def sinr(ch: ChannelRealization, p, k: int, l: int) -> float:
    p = np.asarray(p, dtype=np.float64)
    _check_index(k, ch.n_users, "user")
    _check_index(l, ch.n_carriers, "carrier")
    if p[k, l] == 0.0:
        return 0.0
    interf = float(np.dot(ch.g[:, k, l], p[:, l]))
    return float(ch.h[k, l] * p[k, l] / (ch.sigma2 + interf))


def sinr_matrix(ch: ChannelRealization, p) -> np.ndarray:
    p = np.asarray(p, dtype=np.float64)
    return ch.h * p / (ch.sigma2 + ch.interference(p))


def utility(ch: ChannelRealization, p, cfg: GameConfig, k: int) -> float:
    """Bits per joule of user ``k``; defined as 0 at zero total power."""
    p = np.asarray(p, dtype=np.float64)
    _check_index(k, ch.n_users, "user")
    total = float(p[k].sum())
    if total == 0.0:
        return 0.0
    ef = cfg.efficiency
    throughput = sum(eval_f(ef, sinr(ch, p, k, l)) for l in range(ch.n_carriers))
    return cfg.rate * throughput / total


def required_powers(ch: ChannelRealization, p, cfg: GameConfig, k: int) -> np.ndarray:
    """Power needed on each carrier for user ``k`` to reach gamma* now."""
    p = np.asarray(p, dtype=np.float64)
    _check_index(k, ch.n_users, "user")
    interf = np.einsum("jl,jl->l", ch.g[:, k, :], p)
    return cfg.gstar * (ch.sigma2 + interf) / ch.h[k]


def required_power(ch: ChannelRealization, p, cfg: GameConfig, k: int, l: int) -> float:
    _check_index(l, ch.n_carriers, "carrier")
    return float(required_powers(ch, p, cfg, k)[l])


def _argmin_with_tie(r: np.ndarray, tie_rtol: float):
    best = int(np.argmin(r))
    others = np.delete(r, best)
    tie = bool(others.size) and bool(np.any(others - r[best] <= tie_rtol * r[best]))
    return best, tie


def best_response(ch: ChannelRealization, p, cfg: GameConfig, k: int) -> BestResponse:
    """Single-carrier reply of user ``k`` to the other rows of ``p``.

    The whole budget goes to the carrier needing the least power to reach
    gamma*, capped at ``p_max``. Equal requirements go to the lowest index
    and set ``tie``.
    """
    r = required_powers(ch, p, cfg, k)
    best, tie = _argmin_with_tie(r, cfg.tie_rtol)
    row = np.zeros(ch.n_carriers)
    clamped = bool(r[best] > cfg.p_max)
    row[best] = cfg.p_max if clamped else r[best]
    return BestResponse(row, best, clamped, tie)


def best_carrier_condition(ch: ChannelRealization, p, cfg: GameConfig, k: int, l: int) -> bool:
    """Strict path-gain test that carrier ``l`` is user ``k``'s best carrier.

    ``h[k,l] / h[k,i] > (s2 + I[k,l]) / (s2 + I[k,i])`` for every ``i != l``,
    with interference taken from the supplied profile.
    """
    p = np.asarray(p, dtype=np.float64)
    _check_index(k, ch.n_users, "user")
    _check_index(l, ch.n_carriers, "carrier")
    noise_interf = ch.sigma2 + np.einsum("jl,jl->l", ch.g[:, k, :], p)
    hk = ch.h[k]
    for i in range(ch.n_carriers):
        if i == l:
            continue
        if not hk[l] / hk[i] > noise_interf[l] / noise_interf[i]:
            return False
    return True
