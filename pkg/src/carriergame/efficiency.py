"""Packet-success efficiency functions and the bits/joule-optimal SINR.

A user's throughput on a carrier is ``R * f(gamma)``, where ``f`` is the
probability that a symbol is received without error. Only S-shaped members
with ``f(0) = 0`` and ``f(inf) = 1`` are meaningful here; the optimal
operating point ``gamma*`` is the positive root of ``f(g) = g * f'(g)``.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

__all__ = [
    "Family",
    "EfficiencyFunction",
    "GammaStar",
    "EfficiencyDomainError",
    "NoPositiveRootError",
    "BracketError",
    "eval_f",
    "deriv",
    "gamma_star",
]

BRACKET = (1e-6, 1e3)
RESIDUAL_TOL = 1e-12


class EfficiencyDomainError(ValueError):
    """Raised for negative or non-finite SINR arguments."""


class NoPositiveRootError(ValueError):
    """Raised when ``f(g) = g f'(g)`` has no root with ``g > 0``."""


class BracketError(RuntimeError):
    """Raised when the root bracket shows no sign change."""


class Family(enum.Enum):
    EXP_POWER = "exp-power"  # f(g) = (1 - exp(-g))**M


@dataclass(frozen=True)
class EfficiencyFunction:
    """S-shaped efficiency function ``f``.

    Parameters
    ----------
    m : int
        Shape parameter. For the exponential-power family ``M >= 2`` gives
        an S-shaped curve; ``M = 1`` is concave and has no optimal SINR.
    family : Family
        Functional family; only :attr:`Family.EXP_POWER` is shipped.
    """

    m: int = 2
    family: Family = Family.EXP_POWER

    def __post_init__(self):
        if isinstance(self.m, bool) or int(self.m) != self.m or self.m < 1:
            raise ValueError(f"shape parameter M must be a positive integer, got {self.m!r}")
        object.__setattr__(self, "m", int(self.m))

    def __call__(self, gamma: float) -> float:
        return eval_f(self, gamma)

    def elasticity(self, gamma: float) -> float:
        """``gamma * f'(gamma) / f(gamma)`` for ``gamma > 0``.

        Stays finite where ``f`` itself underflows (large ``M``, tiny gamma),
        which is why the root finder brackets on ``1 - elasticity``.
        """
        _check_gamma(gamma)
        if gamma == 0.0:
            return float(self.m)
        # M * g * e^-g / (1 - e^-g) = M * g / (e^g - 1)
        return self.m * gamma / math.expm1(gamma) if gamma < 700.0 else 0.0


@dataclass(frozen=True)
class GammaStar:
    value: float
    residual: float


def _check_gamma(gamma):
    if not math.isfinite(gamma) or gamma < 0:
        raise EfficiencyDomainError(f"SINR must be finite and nonnegative, got {gamma!r}")


def eval_f(ef: EfficiencyFunction, gamma: float) -> float:
    """Probability of error-free reception at SINR ``gamma``."""
    _check_gamma(gamma)
    return (-math.expm1(-gamma)) ** ef.m


def deriv(ef: EfficiencyFunction, gamma: float) -> float:
    """Analytic derivative of :func:`eval_f`."""
    _check_gamma(gamma)
    m = ef.m
    return m * (-math.expm1(-gamma)) ** (m - 1) * math.exp(-gamma)


def gamma_star(ef: EfficiencyFunction, tol: float = RESIDUAL_TOL) -> GammaStar:
    """Unique positive solution of ``f(g) = g f'(g)`` by bisection.

    The bracket ``[1e-6, 1e3]`` deliberately excludes the trivial root at 0.
    """
    if ef.family is Family.EXP_POWER and ef.m == 1:
        raise NoPositiveRootError("M = 1: exp(g) = 1 + g has only the root g = 0")

    def sign_fn(g):
        return 1.0 - ef.elasticity(g)

    lo, hi = BRACKET
    s_lo, s_hi = sign_fn(lo), sign_fn(hi)
    if s_lo * s_hi >= 0:
        raise BracketError(f"no sign change of f(g) - g f'(g) on [{lo}, {hi}]")
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        s_mid = sign_fn(mid)
        if s_mid == 0.0:
            lo = hi = mid
            break
        if (s_mid < 0) == (s_lo < 0):
            lo, s_lo = mid, s_mid
        else:
            hi = mid
    root = 0.5 * (lo + hi)
    residual = eval_f(ef, root) - root * deriv(ef, root)
    if abs(residual) > tol:
        raise BracketError(f"bisection stalled with residual {residual:.3e}")
    return GammaStar(value=root, residual=residual)
