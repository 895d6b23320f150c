"""K-user real Gaussian interference channel.

Gains are stored transmitter-major: ``gains[j, i]`` is the gain from
transmitter ``j`` to receiver ``i``. Users are indexed from 0, so the
cooperative-jamming partner of user ``l`` is ``K - 1 - l``. Receiver noise is
unit variance throughout the package.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field

import numpy as np


@dataclass(frozen=True)
class ChannelSpec:
    """Distribution of the channel gains.

    ``kind`` is ``"uniform"`` (gains i.i.d. on ``[a, b]``) or
    ``"gaussian-magnitude"`` (``|N(a, b^2)|`` truncated below at ``floor``).
    Both are atomless, so exact zeros never occur.
    """

    kind: str = "uniform"
    a: float = 0.5
    b: float = 1.5
    floor: float = 1e-3

    def __post_init__(self):
        if self.kind == "uniform":
            if not (0 < self.a < self.b):
                raise ValueError(f"uniform({self.a}, {self.b}) needs 0 < a < b")
        elif self.kind == "gaussian-magnitude":
            if self.b <= 0 or self.floor <= 0:
                raise ValueError("gaussian-magnitude needs sigma > 0 and floor > 0")
        else:
            raise ValueError(f"unknown channel distribution {self.kind!r}")

    def __str__(self):
        return f"{self.kind}({self.a:g},{self.b:g})"

    @classmethod
    def parse(cls, text: str) -> "ChannelSpec":
        """Parse ``"uniform(0.5,1.5)"`` or ``"gaussian-magnitude(1,0.3)"``."""
        m = re.fullmatch(r"\s*([a-z-]+)\s*\(\s*([^,]+)\s*,\s*([^)]+)\)\s*", text)
        if m is None:
            raise ValueError(f"cannot parse channel spec {text!r}")
        return cls(m.group(1), float(m.group(2)), float(m.group(3)))

    def draw(self, rng: np.random.Generator, size) -> np.ndarray:
        if self.kind == "uniform":
            return rng.uniform(self.a, self.b, size=size)
        out = np.abs(rng.normal(self.a, self.b, size=size))
        # resample the (rare) draws below the floor; keeps the law atomless
        bad = out < self.floor
        while bad.any():
            out[bad] = np.abs(rng.normal(self.a, self.b, size=int(bad.sum())))
            bad = out < self.floor
        return out


@dataclass(frozen=True)
class ChannelMatrix:
    gains: np.ndarray
    seed: int | None = None
    spec: str = ""
    dummy: tuple[int, ...] = field(default=())

    def __post_init__(self):
        g = np.array(self.gains, dtype=float)
        if g.ndim != 2 or g.shape[0] != g.shape[1]:
            raise ValueError(f"gains must be square, got shape {g.shape}")
        if g.shape[0] < 3:
            raise ValueError("K must be ≥ 3")
        if not np.all(np.isfinite(g)):
            raise ValueError("gains must be finite")
        if np.any(g == 0):
            raise ValueError("gains must be nonzero")
        g.setflags(write=False)
        object.__setattr__(self, "gains", g)
        object.__setattr__(self, "dummy", tuple(int(d) for d in self.dummy))

    @property
    def K(self) -> int:
        return self.gains.shape[0]

    @property
    def real_users(self) -> list[int]:
        return [u for u in range(self.K) if u not in self.dummy]

    def h(self, tx: int, rx: int) -> float:
        return float(self.gains[tx, rx])

    def partner(self, user: int) -> int:
        """Index of the transmitter that jams on behalf of ``user``."""
        return self.K - 1 - user

    def to_dict(self) -> dict:
        return {
            "K": self.K,
            "gains": self.gains.tolist(),
            "seed": self.seed,
            "spec": self.spec,
            "dummy": list(self.dummy),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    @classmethod
    def from_dict(cls, d: dict) -> "ChannelMatrix":
        H = cls(np.asarray(d["gains"], dtype=float), d.get("seed"),
                d.get("spec", ""), tuple(d.get("dummy", ())))
        if H.K != d["K"]:
            raise ValueError(f"K={d['K']} does not match gains of size {H.K}")
        return H

    @classmethod
    def from_json(cls, text: str) -> "ChannelMatrix":
        return cls.from_dict(json.loads(text))


def _as_spec(spec) -> ChannelSpec:
    if isinstance(spec, ChannelSpec):
        return spec
    return ChannelSpec.parse(spec)


def sample_channel(K: int, spec="uniform(0.5,1.5)", seed: int = 0) -> ChannelMatrix:
    """Draw a K x K gain matrix with i.i.d. entries.

    The result is a pure function of ``(K, spec, seed)``.
    """
    if K < 3:
        raise ValueError("K must be ≥ 3")
    spec = _as_spec(spec)
    rng = np.random.default_rng(seed)
    return ChannelMatrix(spec.draw(rng, (K, K)), seed=seed, spec=str(spec))


def pad_dummy_user(H: ChannelMatrix, spec=None, seed: int | None = None) -> ChannelMatrix:
    """Append one dummy user to an odd-K channel.

    The original block is kept bit-exactly; the new row and column are drawn
    from ``spec`` (defaults to the spec recorded on ``H``).
    """
    if H.K % 2 == 0:
        raise ValueError(f"K={H.K} is already even")
    spec = _as_spec(spec if spec is not None else (H.spec or "uniform(0.5,1.5)"))
    if seed is None:
        seed = 0 if H.seed is None else H.seed
    # separate stream from sample_channel(seed) so the pad is not a copy of row 0
    rng = np.random.default_rng([seed, H.K])
    K = H.K + 1
    g = np.empty((K, K))
    g[:-1, :-1] = H.gains
    g[-1, :] = spec.draw(rng, K)
    g[:-1, -1] = spec.draw(rng, K - 1)
    return ChannelMatrix(g, seed=H.seed, spec=H.spec, dummy=H.dummy + (K - 1,))


def even_channel(H: ChannelMatrix, spec=None, seed: int | None = None) -> ChannelMatrix:
    """Return ``H`` unchanged if K is even, otherwise pad it with a dummy user."""
    return H if H.K % 2 == 0 else pad_dummy_user(H, spec, seed)
