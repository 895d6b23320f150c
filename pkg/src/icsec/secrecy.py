"""Secure rates, leakage penalty and sum secure degrees of freedom.

The secure rate of user ``l`` is its own-message compute-and-forward rate
minus a leakage penalty: the worst, over unintended receivers ``i``, of

    log2( sum_{m in S(l, i)} (h[l,i]^2 P[l,m] + h[p,i]^2 PJ[p,m]) / (h[p,i]^2 PJ[p,m*]) )

where ``p = K-1-l`` is the jamming partner, ``S(l, i)`` the dimensions on
which message and jamming align at receiver ``i`` and ``m*`` the densest
jamming component of the partner. All logarithms are base 2.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .alignment import PhiMapping, aligned_set
from .cf import own_message_rate
from .channel import ChannelMatrix
from .power import PowerProfile, densest_component, fixed_fraction_family, validate_profile
from .util import worker_count


@lru_cache(maxsize=256)
def _aligned_S(user: int, receiver: int, K: int, T: int) -> np.ndarray:
    return aligned_set(user, receiver, PhiMapping(K, T)).S - 1


def aligned_sets(user: int, mapping: PhiMapping) -> dict[int, np.ndarray]:
    """0-based aligned component indices of ``user`` at each unintended receiver."""
    return {i: _aligned_S(user, i, mapping.K, mapping.T)
            for i in range(mapping.K) if i != user}


def penalty(user: int, H: ChannelMatrix, profile: PowerProfile,
            sets: dict[int, np.ndarray], m_star: int) -> float:
    """Leakage penalty of ``user`` in bits.

    ``sets`` maps every unintended receiver to 0-based aligned component
    indices; ``m_star`` is the 1-based densest jamming component of the
    partner.
    """
    K = H.K
    p = K - 1 - user
    msg, jam = profile.message, profile.jamming
    worst = -math.inf
    for i, S in sets.items():
        if i == user:
            continue
        if len(S) == 0:
            raise ValueError(
                f"no aligned dimension for user {user} at receiver {i}; increase T")
        g_own, g_jam = H.gains[user, i] ** 2, H.gains[p, i] ** 2
        den = g_jam * jam[p, m_star - 1]
        if den <= 0:
            raise ValueError(f"zero jamming power in component {m_star} of transmitter {p}")
        total = float(np.sum(g_own * msg[user, S] + g_jam * jam[p, S])) / den
        worst = max(worst, math.log2(total))
    return worst


@dataclass(frozen=True)
class SecureRateReport:
    P: float
    users: tuple[int, ...]
    R_comb: tuple[float, ...]
    penalty: tuple[float, ...]
    R_secure: tuple[float, ...]
    feasible: tuple[bool, ...]
    dummy: tuple[int, ...] = ()
    dummy_R_comb: tuple[float, ...] = field(default=())

    @property
    def sum_rate(self) -> float:
        return float(sum(self.R_secure))

    @property
    def sum_rate_with_dummy(self) -> float:
        """Sum if the dummy's rate were not pinned to zero."""
        return self.sum_rate + float(sum(self.dummy_R_comb))

    @property
    def ssdf(self) -> float:
        return ssdf(self)

    @property
    def infeasible_users(self) -> list[int]:
        return [u for u, ok in zip(self.users, self.feasible) if not ok]

    def rows(self) -> list[dict]:
        return [{"user": u, "R_comb": rc, "penalty": pen, "R_secure": rs}
                for u, rc, pen, rs in zip(self.users, self.R_comb, self.penalty, self.R_secure)]


def ssdf(report: SecureRateReport) -> float:
    """Sum secure rate over ``log2(1 + P) / 2``."""
    if not report.P > 0:
        raise ValueError("P must be positive")
    return report.sum_rate / (0.5 * math.log2(1.0 + report.P))


def secure_rate_report(H: ChannelMatrix, profile: PowerProfile, mapping: PhiMapping,
                       radius: int | str = "auto", *, enforce_cap: bool = True) -> SecureRateReport:
    """Secure rate of every real user; dummy users are reported separately at 0.

    With ``enforce_cap=False`` jamming-cap violations are tolerated and the
    residual jamming is still folded into the receiver noise.
    """
    if H.K % 2:
        raise ValueError(f"K={H.K} is odd; pad the channel with a dummy user first")
    if mapping.K != H.K or profile.M != mapping.M:
        raise ValueError(
            f"mapping (K={mapping.K}, M={mapping.M}) does not match channel K={H.K} "
            f"and profile M={profile.M}")
    bad = [v for v in validate_profile(profile, H) if enforce_cap or v.kind != "jam-cap"]
    if bad:
        raise ValueError("inadmissible power profile: " + "; ".join(map(str, bad)))
    users, R_comb, pens, R, ok = [], [], [], [], []
    dummy_rc = []
    for u in range(H.K):
        rc = own_message_rate(u, H, profile, radius, enforce_cap=enforce_cap)
        if u in H.dummy:
            dummy_rc.append(rc)
            continue
        m_star = densest_component(profile, H.K - 1 - u)
        pen = penalty(u, H, profile, aligned_sets(u, mapping), m_star)
        users.append(u)
        R_comb.append(rc)
        pens.append(pen)
        R.append(max(0.0, rc - pen))
        ok.append(rc > pen)
    return SecureRateReport(profile.P, tuple(users), tuple(R_comb), tuple(pens),
                            tuple(R), tuple(ok), H.dummy, tuple(dummy_rc))


@dataclass(frozen=True)
class SweepResult:
    P: np.ndarray
    reports: tuple[SecureRateReport, ...]
    slope: float
    intercept: float

    @property
    def sum_rate(self) -> np.ndarray:
        return np.array([r.sum_rate for r in self.reports])

    @property
    def ssdf(self) -> np.ndarray:
        return np.array([r.ssdf for r in self.reports])

    @property
    def penalties(self) -> np.ndarray:
        """(grid points, users) penalty table."""
        return np.array([r.penalty for r in self.reports])

    @property
    def penalty_spread(self) -> float:
        pen = self.penalties
        return float(np.max(np.abs(pen - pen[0]))) if len(pen) else 0.0

    def rows(self) -> list[dict]:
        return [{"P": float(p), "sum_rate": r.sum_rate, "ssdf": r.ssdf,
                 "penalty_check": float(sum(r.penalty))}
                for p, r in zip(self.P, self.reports)]


def _check_grid(P_grid) -> np.ndarray:
    P = np.asarray(sorted(float(p) for p in P_grid))
    if len(P) < 2:
        raise ValueError("need at least 2 grid points")
    if np.any(P <= 0):
        raise ValueError("grid powers must be positive")
    ratios = P[1:] / P[:-1]
    if not np.allclose(ratios, ratios[0], rtol=1e-9):
        raise ValueError("P grid must be geometric")
    return P


def dof_sweep(H: ChannelMatrix, P_grid, T: int, jam_share: float = 0.5, *,
              cap: bool = True, radius: int | str = "auto",
              profiles: list[PowerProfile] | None = None) -> SweepResult:
    """Sum secure rate over a geometric power grid with frozen power fractions.

    The slope is the least-squares fit of the sum secure rate against
    ``log2(1 + P) / 2``. Grid points are evaluated independently (in
    parallel when ``ICSEC_THREADS`` > 1) and merged in grid order.
    """
    P = _check_grid(P_grid)
    mapping = PhiMapping(H.K, T)
    if profiles is None:
        profiles = fixed_fraction_family(H, P, mapping.M, jam_share, cap=cap)

    def point(prof):
        return secure_rate_report(H, prof, mapping, radius, enforce_cap=cap)

    reports = _map(point, profiles)
    x = 0.5 * np.log2(1.0 + P)
    y = np.array([r.sum_rate for r in reports])
    slope, intercept = np.polyfit(x, y, 1)
    return SweepResult(P, tuple(reports), float(slope), float(intercept))


def _map(fn, items):
    n = worker_count()
    if n <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=n) as pool:
        return list(pool.map(fn, items))
