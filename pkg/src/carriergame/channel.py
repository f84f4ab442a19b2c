"""Static channel realizations: direct gains ``h`` and cross gains ``g``.

``g[i, k, l]`` is the gain from transmitter ``i`` into the receiver of
user ``k`` on carrier ``l``. The diagonal ``g[k, k, :]`` is unused (the
desired link is carried by ``h``) and is stored as zero.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "ChannelError",
    "ChannelRealization",
    "GENERATOR_NAME",
    "generator_id",
    "make_rng",
    "sample_channel",
    "from_gains",
    "load_channel",
]

GENERATOR_NAME = "numpy.random.PCG64"
_SEED_MASK = (1 << 64) - 1


class ChannelError(ValueError):
    """Invalid dimensions, shapes or gain signs."""


def generator_id() -> str:
    return f"{GENERATOR_NAME} (numpy {np.__version__})"


def make_rng(seed: int) -> np.random.Generator:
    """Per-call generator for a 64-bit seed (reduced modulo 2**64)."""
    return np.random.Generator(np.random.PCG64(int(seed) & _SEED_MASK))


@dataclass(frozen=True, eq=False)
class ChannelRealization:
    h: np.ndarray
    g: np.ndarray
    sigma2: float
    seed: int | None = None
    generator: str | None = field(default=None)

    def __post_init__(self):
        h = np.array(self.h, dtype=np.float64)
        g = np.array(self.g, dtype=np.float64)
        if h.ndim != 2 or h.shape[0] < 1 or h.shape[1] < 1:
            raise ChannelError(f"h must be a non-empty N x D matrix, got shape {h.shape}")
        n, d = h.shape
        if g.shape != (n, n, d):
            raise ChannelError(f"g must have shape {(n, n, d)}, got {g.shape}")
        if not np.all(np.isfinite(h)) or not np.all(np.isfinite(g)):
            raise ChannelError("gains must be finite")
        if np.any(h <= 0):
            raise ChannelError("direct gains h must be strictly positive")
        if np.any(g < 0):
            raise ChannelError("cross gains g must be nonnegative")
        sigma2 = float(self.sigma2)
        if not np.isfinite(sigma2) or sigma2 <= 0:
            raise ChannelError(f"sigma2 must be positive, got {self.sigma2!r}")
        idx = np.arange(n)
        g[idx, idx, :] = 0.0
        h.setflags(write=False)
        g.setflags(write=False)
        object.__setattr__(self, "h", h)
        object.__setattr__(self, "g", g)
        object.__setattr__(self, "sigma2", sigma2)

    @property
    def n_users(self) -> int:
        return self.h.shape[0]

    @property
    def n_carriers(self) -> int:
        return self.h.shape[1]

    def __eq__(self, other):
        if not isinstance(other, ChannelRealization):
            return NotImplemented
        return (
            self.sigma2 == other.sigma2
            and np.array_equal(self.h, other.h)
            and np.array_equal(self.g, other.g)
        )

    def interference(self, p: np.ndarray) -> np.ndarray:
        """N x D matrix of co-channel interference ``sum_{j != k} g[j,k,l] p[j,l]``."""
        return np.einsum("jkl,jl->kl", self.g, np.asarray(p, dtype=np.float64))

    def to_dict(self) -> dict:
        doc = {
            "n_users": self.n_users,
            "n_carriers": self.n_carriers,
            "sigma2": self.sigma2,
            "h": self.h.tolist(),
            "g": self.g.tolist(),
        }
        if self.seed is not None:
            doc["seed"] = int(self.seed)
        if self.generator is not None:
            doc["generator"] = self.generator
        return doc

    def to_json(self, **kwargs) -> str:
        return json.dumps(self.to_dict(), **kwargs)

    @classmethod
    def from_dict(cls, doc: dict) -> "ChannelRealization":
        try:
            ch = from_gains(doc["h"], doc["g"], doc["sigma2"], seed=doc.get("seed"),
                            generator=doc.get("generator"))
        except KeyError as exc:
            raise ChannelError(f"channel document is missing field {exc.args[0]!r}") from None
        for key, actual in (("n_users", ch.n_users), ("n_carriers", ch.n_carriers)):
            if key in doc and int(doc[key]) != actual:
                raise ChannelError(f"{key}={doc[key]} does not match gain shapes ({actual})")
        return ch

    @classmethod
    def from_json(cls, text: str) -> "ChannelRealization":
        return cls.from_dict(json.loads(text))


def from_gains(h, g, sigma2, seed=None, generator=None) -> ChannelRealization:
    """Wrap explicit gains; validation happens in the constructor."""
    return ChannelRealization(h=h, g=g, sigma2=sigma2, seed=seed, generator=generator)


def _check_dims(n_users, n_carriers):
    for name, v in (("n_users", n_users), ("n_carriers", n_carriers)):
        if int(v) != v or v < 1:
            raise ChannelError(f"{name} must be a positive integer, got {v!r}")


def draw_gains(rng: np.random.Generator, n_users: int, n_carriers: int):
    """Exp(1) gains from ``rng`` in the fixed traversal order.

    ``h[k, l]`` (users outer, carriers inner) is drawn first, then
    ``g[i, k, l]`` for ``i != k`` with ``i``, ``k``, ``l`` nested in that
    order. Each draw is ``-log(1 - u)`` of one unit-interval double.
    """
    _check_dims(n_users, n_carriers)
    n, d = int(n_users), int(n_carriers)
    u = rng.random(n * d + n * (n - 1) * d)
    e = -np.log1p(-u)
    h = e[: n * d].reshape(n, d)
    g = np.zeros((n, n, d))
    mask = ~np.eye(n, dtype=bool)
    g[mask] = e[n * d:].reshape(n * (n - 1), d)
    # exact zero has probability 2**-53 per draw; keep the h > 0 invariant
    h[h == 0.0] = np.finfo(float).tiny
    return h, g


def sample_channel(n_users: int, n_carriers: int, sigma2: float, seed: int) -> ChannelRealization:
    """Fresh Exp(1) channel, a deterministic function of ``seed``."""
    rng = make_rng(seed)
    h, g = draw_gains(rng, n_users, n_carriers)
    return ChannelRealization(h=h, g=g, sigma2=sigma2, seed=int(seed), generator=generator_id())


def load_channel(path: str | os.PathLike) -> ChannelRealization:
    with open(path, encoding="utf-8") as fh:
        return ChannelRealization.from_json(fh.read())
