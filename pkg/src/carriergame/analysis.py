"""Equilibrium verification, SINR-balance solves, 2x2 classification and LGDP sampling."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .channel import ChannelRealization, make_rng
from .game import GameConfig, best_carrier_condition, best_response, check_profile, utility

__all__ = [
    "EquilibriumStructure",
    "EquilibriumSolution",
    "StructureCheck",
    "LgdpReport",
    "is_nash",
    "equilibrium_powers",
    "classify_2x2",
    "classify_2x2_report",
    "jacobi_map_batch",
    "check_lgdp",
    "STRUCTURES_2X2",
]

NASH_TOL = 1e-9
EPS_DOT = 1e-12


@dataclass(frozen=True)
class EquilibriumStructure:
    """Carrier occupied by each user (0-based) plus its printable label.

    For two users on two carriers the labels are ``(1,2)``, ``(2,1)``,
    ``(12,)`` (both on carrier 1) and ``(,12)`` (both on carrier 2).
    Otherwise the label lists 1-based carriers per user, ``0`` for silent.
    """

    assignment: tuple[int, ...]
    n_carriers: int

    def __post_init__(self):
        a = tuple(int(c) for c in self.assignment)
        if any(c < -1 or c >= self.n_carriers for c in a):
            raise ValueError(f"assignment {a} outside carriers 0..{self.n_carriers - 1}")
        object.__setattr__(self, "assignment", a)

    @classmethod
    def from_assignment(cls, assignment, n_carriers: int) -> "EquilibriumStructure":
        return cls(tuple(int(c) for c in assignment), int(n_carriers))

    @classmethod
    def from_label(cls, label: str) -> "EquilibriumStructure":
        for s in STRUCTURES_2X2:
            if s.label == label:
                return s
        body = label.strip().strip("()")
        a = tuple(int(x) - 1 for x in body.split(","))
        return cls(a, max(a) + 1)

    @property
    def label(self) -> str:
        a = self.assignment
        if len(a) == 2 and self.n_carriers == 2 and a[0] == a[1] and a[0] >= 0:
            return "(12,)" if a[0] == 0 else "(,12)"
        return "(" + ",".join(str(c + 1) for c in a) + ")"

    def __str__(self):
        return self.label


STRUCTURES_2X2 = (
    EquilibriumStructure((0, 1), 2),
    EquilibriumStructure((1, 0), 2),
    EquilibriumStructure((0, 0), 2),
    EquilibriumStructure((1, 1), 2),
)


def is_nash(ch: ChannelRealization, cfg: GameConfig, p, tol: float = NASH_TOL) -> bool:
    """No user gains more than ``tol`` bits/joule by switching to its best response."""
    p = check_profile(p, ch, cfg.p_max)
    for k in range(ch.n_users):
        current = utility(ch, p, cfg, k)
        dev = p.copy()
        dev[k] = best_response(ch, p, cfg, k).powers
        if utility(ch, dev, cfg, k) > current + tol:
            return False
    return True


@dataclass(frozen=True, eq=False)
class EquilibriumSolution:
    profile: np.ndarray | None
    reason: str = "ok"

    @property
    def feasible(self) -> bool:
        return self.profile is not None


def equilibrium_powers(ch: ChannelRealization, cfg: GameConfig, assignment) -> EquilibriumSolution:
    """Powers putting every user at gamma* on its assigned carrier.

    Users sharing a carrier solve ``p_k = gamma* (s2 + sum_j g[j,k,l] p_j) / h[k,l]``
    jointly; a lone user gets ``gamma* s2 / h`` directly. Reasons for
    infeasibility: ``singular``, ``nonpositive``, ``exceeds_pmax``.
    """
    assignment = tuple(int(c) for c in assignment)
    n, d = ch.n_users, ch.n_carriers
    if len(assignment) != n or any(not 0 <= c < d for c in assignment):
        raise ValueError(f"assignment {assignment} invalid for {n} users and {d} carriers")
    gs = cfg.gstar
    prof = np.zeros((n, d))
    for l in sorted(set(assignment)):
        users = [k for k in range(n) if assignment[k] == l]
        if len(users) == 1:
            k = users[0]
            prof[k, l] = gs * ch.sigma2 / ch.h[k, l]
            continue
        m = len(users)
        a = np.eye(m)
        b = np.empty(m)
        for r, k in enumerate(users):
            b[r] = gs * ch.sigma2 / ch.h[k, l]
            for c, j in enumerate(users):
                if j != k:
                    a[r, c] = -gs * ch.g[j, k, l] / ch.h[k, l]
        try:
            if np.linalg.cond(a) > 1e12:
                return EquilibriumSolution(None, "singular")
            sol = np.linalg.solve(a, b)
        except np.linalg.LinAlgError:
            return EquilibriumSolution(None, "singular")
        if np.any(sol <= 0):
            return EquilibriumSolution(None, "nonpositive")
        prof[users, l] = sol
    if np.any(prof > cfg.p_max):
        return EquilibriumSolution(None, "exceeds_pmax")
    return EquilibriumSolution(prof)


@dataclass(frozen=True, eq=False)
class StructureCheck:
    """Outcome of testing one candidate structure.

    ``inequalities`` maps condition names to pass/fail; ``failed`` lists the
    ones that did not hold (``feasible`` and ``nash`` included).
    """

    structure: EquilibriumStructure
    profile: np.ndarray | None
    reason: str
    inequalities: dict = field(default_factory=dict)
    eta: tuple[float, float] | None = None
    gamma_bound: float | None = None
    nash: bool = False

    @property
    def failed(self) -> list[str]:
        out = [] if self.profile is not None else ["feasible"]
        out += [name for name, ok in self.inequalities.items() if not ok]
        if self.profile is not None and not self.nash:
            out.append("nash")
        return out

    @property
    def accepted(self) -> bool:
        return not self.failed

    def to_dict(self) -> dict:
        return {
            "structure": self.structure.label,
            "accepted": self.accepted,
            "reason": self.reason,
            "failed": self.failed,
            "inequalities": dict(self.inequalities),
            "eta": list(self.eta) if self.eta is not None else None,
            "gamma_bound": self.gamma_bound,
            "profile": self.profile.tolist() if self.profile is not None else None,
        }


def _eta(sigma2, g, ratio):
    # bound on the sharer's power that keeps the other user on this carrier
    if g == 0.0:
        return np.inf if ratio > 1.0 else -np.inf
    return sigma2 / g * (ratio - 1.0)


def _shared_check(ch, cfg, c, prof):
    o = 1 - c
    h, g, s2 = ch.h, ch.g, ch.sigma2
    ratio2 = h[1, c] / h[1, o]
    ratio1 = h[0, c] / h[0, o]
    eta1 = _eta(s2, g[0, 1, c], ratio2)
    eta2 = _eta(s2, g[1, 0, c], ratio1)
    with np.errstate(divide="ignore"):
        bound = min(h[0, c] / g[0, 1, c] * (ratio2 - 1.0) if g[0, 1, c] else np.inf,
                    h[1, o] / g[1, 0, c] * (ratio2 - 1.0) if g[1, 0, c] else np.inf)
    ineq = {}
    if prof is not None:
        ineq["user2_stays"] = bool(prof[0, c] < eta1)
        ineq["user1_stays"] = bool(prof[1, c] < eta2)
    return ineq, (float(eta1), float(eta2)), float(bound)


def classify_2x2_report(ch: ChannelRealization, cfg: GameConfig,
                        tol: float = NASH_TOL) -> list[StructureCheck]:
    """Check all four pure structures of a two-user, two-carrier game."""
    if ch.n_users != 2 or ch.n_carriers != 2:
        raise ValueError("classify_2x2 needs exactly 2 users and 2 carriers")
    out = []
    for s in STRUCTURES_2X2:
        sol = equilibrium_powers(ch, cfg, s.assignment)
        prof = sol.profile
        eta = bound = None
        if s.assignment[0] == s.assignment[1]:
            ineq, eta, bound = _shared_check(ch, cfg, s.assignment[0], prof)
        elif prof is not None:
            ineq = {
                f"user{k + 1}_best_carrier": bool(
                    best_carrier_condition(ch, prof, cfg, k, s.assignment[k]))
                for k in range(2)
            }
        else:
            ineq = {}
        nash = bool(prof is not None and is_nash(ch, cfg, prof, tol))
        out.append(StructureCheck(s, prof, sol.reason, ineq, eta, bound, nash))
    return out


def classify_2x2(ch: ChannelRealization, cfg: GameConfig,
                 tol: float = NASH_TOL) -> set[EquilibriumStructure]:
    """Structures whose equilibrium powers pass every named inequality and ``is_nash``."""
    return {r.structure for r in classify_2x2_report(ch, cfg, tol) if r.accepted}


def jacobi_map_batch(ch: ChannelRealization, cfg: GameConfig, profiles):
    """Simultaneous best-response map over a stack of profiles.

    ``profiles`` has shape ``(B, N, D)``; returns ``(images, tie_mask)``
    where ``tie_mask`` flags profiles in which any user faced a tie.
    """
    p = np.asarray(profiles, dtype=np.float64)
    interf = np.einsum("jkl,bjl->bkl", ch.g, p)
    req = cfg.gstar * (ch.sigma2 + interf) / ch.h
    best = np.argmin(req, axis=-1)
    rmin = np.take_along_axis(req, best[..., None], axis=-1)[..., 0]
    out = np.zeros_like(p)
    np.put_along_axis(out, best[..., None], np.minimum(rmin, cfg.p_max)[..., None], axis=-1)
    if ch.n_carriers > 1:
        part = np.partition(req, 1, axis=-1)
        tie = np.any(part[..., 1] - part[..., 0] <= cfg.tie_rtol * part[..., 0], axis=-1)
    else:
        tie = np.zeros(p.shape[0], dtype=bool)
    return out, tie


@dataclass(frozen=True, eq=False)
class LgdpReport:
    points_tested: int
    pairs_tested: int
    delta: float
    min_dot: float
    min_self_dot: float
    violations: int
    ties: int
    dumps: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "points_tested": self.points_tested,
            "pairs_tested": self.pairs_tested,
            "delta": self.delta,
            "min_dot": self.min_dot,
            "min_self_dot": self.min_self_dot,
            "violations": self.violations,
            "ties": self.ties,
            "dumps": self.dumps,
        }


def _sample_ball(rng, centers, radius, p_max, n_per):
    """``n_per`` uniform draws from each Euclidean ball, restricted to the box."""
    m = centers[0].size
    out = np.empty((len(centers), n_per, m))
    flat = centers.reshape(len(centers), m)
    todo = np.ones((len(centers), n_per), dtype=bool)
    while todo.any():
        idx = np.nonzero(todo)
        z = rng.standard_normal((len(idx[0]), m))
        z /= np.linalg.norm(z, axis=1, keepdims=True)
        rad = radius * rng.random(len(idx[0])) ** (1.0 / m)
        cand = flat[idx[0]] + z * rad[:, None]
        ok = np.all((cand >= 0) & (cand <= p_max), axis=1)
        out[idx[0][ok], idx[1][ok]] = cand[ok]
        todo[idx[0][ok], idx[1][ok]] = False
    return out.reshape(len(centers), n_per, *centers.shape[1:])


def check_lgdp(ch: ChannelRealization, cfg: GameConfig, n_points: int, n_pairs: int,
               delta: float, seed: int, eps_dot: float = EPS_DOT, max_dumps: int = 10,
               chunk: int = 200) -> LgdpReport:
    """Sample the local direction-preserving inequality of the simultaneous map.

    Base points ``a`` are uniform on ``[0, p_max]^(N*D)`` with ``lambda(a) != a``;
    each gets ``n_pairs`` pairs ``(b, c)`` uniform in the ``delta``-ball around
    ``a`` intersected with the box. A violation is a pair with
    ``(lambda(b) - b) . (lambda(c) - c) < -eps_dot``.
    """
    if not delta > 0:
        raise ValueError(f"delta must be positive, got {delta!r}")
    rng = make_rng(seed)
    shape = (ch.n_users, ch.n_carriers)
    min_dot = np.inf
    min_self = np.inf
    violations = ties = tested = 0
    dumps = []
    while tested < n_points:
        want = min(chunk, n_points - tested)
        a = rng.random((want,) + shape) * cfg.p_max
        la, _ = jacobi_map_batch(ch, cfg, a)
        keep = np.any(np.abs(la - a) > 0, axis=(1, 2))
        a = a[keep]
        if not len(a):
            continue
        b = _sample_ball(rng, a, delta, cfg.p_max, n_pairs)
        c = _sample_ball(rng, a, delta, cfg.p_max, n_pairs)
        bf = b.reshape((-1,) + shape)
        cf = c.reshape((-1,) + shape)
        lb, tb = jacobi_map_batch(ch, cfg, bf)
        lc, tc = jacobi_map_batch(ch, cfg, cf)
        db = lb - bf
        dc = lc - cf
        dots = np.einsum("bkl,bkl->b", db, dc)
        selfd = np.einsum("bkl,bkl->b", db, db)
        ties += int(tb.sum() + tc.sum())
        min_dot = min(min_dot, float(dots.min()))
        min_self = min(min_self, float(selfd.min()))
        bad = np.nonzero(dots < -eps_dot)[0]
        violations += len(bad)
        for i in bad[: max(0, max_dumps - len(dumps))]:
            dumps.append({
                "a": a[i // n_pairs].tolist(),
                "b": bf[i].tolist(),
                "c": cf[i].tolist(),
                "dot": float(dots[i]),
                "channel": ch.to_dict(),
            })
        tested += len(a)
    return LgdpReport(
        points_tested=tested,
        pairs_tested=tested * n_pairs,
        delta=float(delta),
        min_dot=float(min_dot),
        min_self_dot=float(min_self),
        violations=violations,
        ties=ties,
        dumps=dumps,
    )
