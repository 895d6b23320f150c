"""Per-component message and jamming power profiles.

Component powers are stored as fractions of the budget ``P``:
``P[l, m] = alpha[l, m] * P`` and ``PJ[l, m] = beta[l, m] * P``. Component
indices inside the arrays are 0-based; :func:`densest_component` reports the
1-based dimension index used by :mod:`icsec.alignment`.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .channel import ChannelMatrix

# slack allowed on the inclusive constraints, relative to the bound
_TOL = 1e-12


@dataclass(frozen=True)
class PowerProfile:
    P: float
    alpha: np.ndarray  # (K, M)
    beta: np.ndarray  # (K, M)

    def __post_init__(self):
        if not self.P > 0:
            raise ValueError(f"P must be positive, got {self.P}")
        a = np.array(self.alpha, dtype=float)
        b = np.array(self.beta, dtype=float)
        if a.ndim != 2 or a.shape != b.shape:
            raise ValueError(f"alpha {a.shape} and beta {b.shape} must be equal (K, M) arrays")
        a.setflags(write=False)
        b.setflags(write=False)
        object.__setattr__(self, "P", float(self.P))
        object.__setattr__(self, "alpha", a)
        object.__setattr__(self, "beta", b)

    @property
    def K(self) -> int:
        return self.alpha.shape[0]

    @property
    def M(self) -> int:
        return self.alpha.shape[1]

    @property
    def message(self) -> np.ndarray:
        """Per-component message powers ``P_{l,m}``."""
        return self.alpha * self.P

    @property
    def jamming(self) -> np.ndarray:
        return self.beta * self.P

    @property
    def message_total(self) -> np.ndarray:
        return self.message.sum(axis=1)

    @property
    def jamming_total(self) -> np.ndarray:
        return self.jamming.sum(axis=1)

    def at_power(self, P: float) -> "PowerProfile":
        """Same fractions at another budget (caps are not re-applied)."""
        return PowerProfile(P, self.alpha, self.beta)

    def with_zero_message(self, users) -> "PowerProfile":
        a = self.alpha.copy()
        a[list(users)] = 0.0
        return PowerProfile(self.P, a, self.beta)

    def to_dict(self) -> dict:
        return {"P": self.P, "alpha": self.alpha.tolist(), "beta": self.beta.tolist()}

    @classmethod
    def from_dict(cls, d: dict) -> "PowerProfile":
        return cls(d["P"], np.asarray(d["alpha"]), np.asarray(d["beta"]))


def jam_cap(H: ChannelMatrix) -> np.ndarray:
    """Largest admissible jamming total of each transmitter.

    Transmitter ``j`` jams for user ``K-1-j``, and its jamming reaches that
    user's receiver below the noise floor: ``h[j, K-1-j]**2 * PJ_j <= 1``.
    """
    K = H.K
    return np.array([1.0 / H.gains[j, K - 1 - j] ** 2 for j in range(K)])


def uniform_profile(H: ChannelMatrix, P: float, M: int, jam_share: float = 0.5,
                    *, cap: bool = True) -> PowerProfile:
    """Equal split over ``M`` components.

    Transmitter ``j`` spends ``min(jam_share * P, 1 / h[j, K-1-j]**2)`` on
    jamming and the rest of ``P`` on its message. With ``cap=False`` the
    jamming total is ``jam_share * P`` regardless of the channel.
    """
    if not P > 0:
        raise ValueError("P must be positive")
    if not 0 < jam_share < 1:
        raise ValueError("jam_share must lie in (0, 1)")
    if M < 1:
        raise ValueError("M must be >= 1")
    jam = np.full(H.K, jam_share * P)
    if cap:
        jam = np.minimum(jam, jam_cap(H))
    msg = P - jam
    alpha = np.repeat((msg / P / M)[:, None], M, axis=1)
    beta = np.repeat((jam / P / M)[:, None], M, axis=1)
    return PowerProfile(P, alpha, beta)


def cap_threshold(H: ChannelMatrix, jam_share: float) -> np.ndarray:
    """Budget above which the jamming cap binds, per transmitter."""
    return jam_cap(H) / jam_share


def fixed_fraction_family(H: ChannelMatrix, P_grid, M: int, jam_share: float = 0.5,
                          *, cap: bool = True) -> list[PowerProfile]:
    """Profiles over ``P_grid`` sharing one set of fractions.

    The fractions are those of :func:`uniform_profile` at the largest budget of
    the grid, so the jamming cap holds at every grid point while the
    component fractions stay constant in ``P``.
    """
    P_grid = [float(p) for p in P_grid]
    top = uniform_profile(H, max(P_grid), M, jam_share, cap=cap)
    return [top.at_power(p) for p in P_grid]


@dataclass(frozen=True)
class Violation:
    kind: str  # "total-power" | "jam-cap" | "negative" | "zero-jamming"
    user: int
    slack: float  # bound - value; negative when violated

    def __str__(self):
        return f"{self.kind} violated for user {self.user} (slack {self.slack:.3g})"


def validate_profile(profile: PowerProfile, H: ChannelMatrix) -> list[Violation]:
    """List every violated constraint; an empty list means admissible.

    Checked per user: nonnegative fractions, ``sum_m (alpha + beta) <= 1`` and
    the jamming cap ``h[j, K-1-j]**2 * PJ_j <= 1``. Both bounds are inclusive.
    """
    if profile.K != H.K:
        raise ValueError(f"profile has K={profile.K}, channel has K={H.K}")
    out = []
    for u in range(H.K):
        if np.any(profile.alpha[u] < 0) or np.any(profile.beta[u] < 0):
            worst = min(profile.alpha[u].min(), profile.beta[u].min())
            out.append(Violation("negative", u, float(worst)))
        used = profile.alpha[u].sum() + profile.beta[u].sum()
        if used > 1 + _TOL:
            out.append(Violation("total-power", u, float(1 - used)))
        load = H.gains[u, H.K - 1 - u] ** 2 * profile.jamming_total[u]
        if load > 1 + _TOL:
            out.append(Violation("jam-cap", u, float(1 - load)))
    return out


def cap_violations(profile: PowerProfile, H: ChannelMatrix) -> list[Violation]:
    return [v for v in validate_profile(profile, H) if v.kind == "jam-cap"]


def densest_component(profile: PowerProfile, user: int) -> int:
    """1-based index of the component with the largest jamming power.

    Ties go to the smallest index.
    """
    return int(np.argmax(profile.beta[user])) + 1
