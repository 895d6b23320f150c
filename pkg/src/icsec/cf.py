"""Asymmetric compute-and-forward at one receiver.

After folding the residual jamming of its own protector into the noise,
receiver ``i`` sees a K-user multiple-access channel

    y = sum_l h[l] * x[l] + z,   Var(x[l]) = P[l],   Var(z) = 1,

whose first effective codeword is its own message and whose other entries are
the aligned message/jamming pairs of the remaining users. The receiver decodes
K linearly independent integer combinations in succession; each decoded
combination is side information for the later ones.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .channel import ChannelMatrix
from .power import PowerProfile

_CAP_TOL = 1e-12


@dataclass(frozen=True)
class EffectiveMac:
    """Effective multiple-access channel seen by one receiver.

    Entry 0 is the receiver's own message; entries 1.. are the pairs
    ``l = 0..K-1`` with ``l != receiver`` in increasing order (``users``).
    """

    h: np.ndarray
    P: np.ndarray
    receiver: int = 0
    users: tuple[int, ...] = ()
    P_total: float | None = None

    def __post_init__(self):
        h = np.array(self.h, dtype=float)
        P = np.array(self.P, dtype=float)
        if h.shape != P.shape or h.ndim != 1:
            raise ValueError("h and P must be 1-D of equal length")
        if np.any(P < 0):
            raise ValueError("effective powers must be nonnegative")
        h.setflags(write=False)
        P.setflags(write=False)
        object.__setattr__(self, "h", h)
        object.__setattr__(self, "P", P)
        if not self.users:
            object.__setattr__(self, "users", tuple(range(len(h))))

    @property
    def K(self) -> int:
        return len(self.h)

    @property
    def noise_var(self) -> float:
        return 1.0

    @property
    def b_eff(self) -> np.ndarray:
        """Power scaling vector, ``sqrt(P_eff / P)``."""
        P = self.P_total if self.P_total is not None else float(self.P.max())
        return np.sqrt(self.P / P)

    def gram(self) -> np.ndarray:
        """Quadratic form of the MMSE effective noise without side information.

        ``sigma2(a) = a @ G @ a`` with ``G = D - D h h^T D / (1 + h^T D h)``.
        """
        D = np.diag(self.P)
        Dh = self.P * self.h
        return D - np.outer(Dh, Dh) / (1.0 + self.h @ Dh)


def build_effective_mac(receiver: int, H: ChannelMatrix, profile: PowerProfile,
                        *, enforce_cap: bool = True) -> EffectiveMac:
    """Effective MAC at ``receiver`` with the protector's jamming folded into noise.

    Folding is only justified while that jamming stays below the noise floor;
    a profile breaking the cap raises unless ``enforce_cap`` is False.
    """
    K = H.K
    if profile.K != K:
        raise ValueError(f"profile has K={profile.K}, channel has K={K}")
    g = H.gains
    msg = profile.message_total
    jam = profile.jamming_total
    protector = K - 1 - receiver
    folded = g[protector, receiver] ** 2 * jam[protector]
    if enforce_cap and folded > 1 + _CAP_TOL:
        raise ValueError(
            f"jamming cap violated at receiver {receiver}: "
            f"h^2 P^J = {folded:.6g} > 1, folding it into the noise is not admissible")
    scale = 1.0 / math.sqrt(1.0 + folded)
    others = [l for l in range(K) if l != receiver]
    h = np.array([g[receiver, receiver] * scale] + [scale] * (K - 1))
    P = np.array([msg[receiver]] + [
        g[l, receiver] ** 2 * msg[l] + g[K - 1 - l, receiver] ** 2 * jam[K - 1 - l]
        for l in others])
    return EffectiveMac(h, P, receiver, (receiver, *others), profile.P)


def _check_independent(a: np.ndarray, decoded: np.ndarray):
    if not np.any(a):
        raise ValueError("coefficient vector must be nonzero")
    if len(decoded):
        stacked = np.vstack([decoded, a])
        if np.linalg.matrix_rank(stacked) < len(stacked):
            raise ValueError(f"{a.tolist()} is linearly dependent on the decoded equations")


def densest_participant(mac: EffectiveMac, a) -> int:
    """Participant with the largest effective power (smallest index on ties)."""
    a = np.asarray(a)
    idx = np.flatnonzero(a)
    return int(idx[np.argmax(mac.P[idx])])


def mmse_noise(mac: EffectiveMac, a, decoded=()) -> tuple[float, float, np.ndarray]:
    """Minimum effective-noise variance for decoding ``a @ x``.

    Minimizes ``Var(beta * y + sum_j lam_j * v_j - a @ x)`` jointly over the
    scaling ``beta`` and the weights ``lam`` of already decoded combinations
    ``v_j = decoded[j] @ x``. Returns ``(sigma2, beta, lam)``.
    """
    a = np.asarray(a, dtype=float)
    A = np.asarray(decoded, dtype=float).reshape(-1, mac.K)
    s = np.sqrt(mac.P)
    # rows 0..K-1: codeword terms, last row: receiver noise
    X = np.zeros((mac.K + 1, 1 + len(A)))
    X[:-1, 0] = s * mac.h
    X[-1, 0] = 1.0
    X[:-1, 1:] = (s[:, None] * A.T)
    t = np.concatenate([s * a, [0.0]])
    w, *_ = np.linalg.lstsq(X, t, rcond=None)
    r = X @ w - t
    return float(r @ r), float(w[0]), w[1:]


def computation_rate(mac: EffectiveMac, a, decoded=()) -> tuple[float, float, float]:
    """Rate (bits) at which ``a @ x`` decodes given the decoded combinations.

    Returns ``(R, sigma2_eff, beta)`` with
    ``R = max(0, log2(P[j] / sigma2_eff) / 2)`` and ``j`` the densest
    participant of ``a``.
    """
    a = np.asarray(a)
    decoded = np.asarray(decoded, dtype=np.int64).reshape(-1, mac.K)
    _check_independent(a, decoded)
    sigma2, beta, _ = mmse_noise(mac, a, decoded)
    j = densest_participant(mac, a)
    return _rate(mac.P[j], sigma2), sigma2, beta


def _rate(power: float, sigma2: float) -> float:
    if power <= 0:
        return 0.0
    if sigma2 <= 0:
        return math.inf
    return max(0.0, 0.5 * math.log2(power / sigma2))


def short_vectors(G: np.ndarray, bound: float, box: int | None = None) -> np.ndarray:
    """All nonzero integer ``a`` with ``a @ G @ a <= bound`` (Fincke-Pohst).

    ``G`` must be positive definite. ``box`` additionally restricts every
    coordinate to ``[-box, box]``. Returns an ``(n, K)`` integer array; the
    enumeration is breadth-first over coordinates, last coordinate first.
    """
    K = len(G)
    R = np.linalg.cholesky(G).T  # G = R^T R, R upper triangular
    d = np.diag(R)
    q = d ** 2
    mu = R / d[:, None]
    slack = bound * 1e-12 + 1e-300
    partial = np.zeros((1, K), dtype=np.int64)
    cost = np.zeros(1)
    for i in range(K - 1, -1, -1):
        c = -(partial[:, i + 1:] @ mu[i, i + 1:]) if i < K - 1 else np.zeros(len(partial))
        half = np.sqrt(np.maximum(bound - cost, 0.0) / q[i])
        lo = np.ceil(c - half - 1e-9).astype(np.int64)
        hi = np.floor(c + half + 1e-9).astype(np.int64)
        if box is not None:
            lo, hi = np.maximum(lo, -box), np.minimum(hi, box)
        n = np.maximum(hi - lo + 1, 0)
        rows = np.repeat(np.arange(len(partial)), n)
        offs = np.arange(n.sum()) - np.repeat(np.cumsum(n) - n, n)
        vals = lo[rows] + offs
        partial = partial[rows].copy()
        partial[:, i] = vals
        cost = cost[rows] + q[i] * (vals - c[rows]) ** 2
        keep = cost <= bound + slack
        partial, cost = partial[keep], cost[keep]
    return partial[np.any(partial != 0, axis=1)]


def _gram_schmidt(G: np.ndarray, A: np.ndarray):
    """Gram-Schmidt of the rows of ``A`` in the inner product ``G``."""
    B = np.zeros(A.shape)
    for k, a in enumerate(A.astype(float)):
        b = a.copy()
        for j in range(k):
            b -= (a @ G @ B[j]) / (B[j] @ G @ B[j]) * B[j]
        B[k] = b
    return B, np.einsum("ij,jk,ik->i", B, G, B)


def _canonical(V: np.ndarray, A: np.ndarray, G: np.ndarray, B: np.ndarray, norms: np.ndarray):
    """Size-reduce the rows of ``V`` against ``A`` and fix their sign.

    Rows in the same coset of the integer span of ``A`` get one
    representative; its leading nonzero entry is positive.
    """
    V = V.copy()
    for j in range(len(A) - 1, -1, -1):
        mu = (V @ G @ B[j]) / norms[j]
        V -= np.rint(mu).astype(np.int64)[:, None] * A[j]
    lead = V[np.arange(len(V)), np.argmax(V != 0, axis=1)]
    V[lead < 0] *= -1
    return V


def _conditional_noise(V: np.ndarray, G: np.ndarray, B: np.ndarray, norms: np.ndarray):
    s = np.einsum("ij,jk,ik->i", V, G, V)
    for b, n in zip(B, norms):
        s = s - (V @ G @ b) ** 2 / n
    return s


@dataclass(frozen=True)
class CoefficientSet:
    """Outcome of successive coefficient selection at one receiver.

    ``A[k]`` is the k-th decoded equation. ``raw_sigma2[k]`` is its MMSE
    noise given equations ``0..k-1`` as side information and ``raw_rates`` the
    matching computation rates. Codewords are resolved densest first:
    ``order[k]`` is the effective codeword resolved at step k, and it is only
    available once every equation up to k is decoded, so it sees the chain
    noise ``sigma2[k] = max(raw_sigma2[:k+1])``. ``rates[k]`` is
    ``log2(P[order[k]] / sigma2[k]) / 2`` clipped at zero.
    """

    A: np.ndarray
    order: np.ndarray
    raw_sigma2: np.ndarray
    raw_rates: np.ndarray
    sigma2: np.ndarray
    rates: np.ndarray
    radius: int

    def to_dict(self) -> dict:
        return {
            "A": self.A.tolist(),
            "order": self.order.tolist(),
            "sigma2": self.sigma2.tolist(),
            "rates": self.rates.tolist(),
            "raw_sigma2": self.raw_sigma2.tolist(),
            "raw_rates": self.raw_rates.tolist(),
            "radius": self.radius,
        }


def auto_radius(mac: EffectiveMac) -> int:
    return math.ceil(math.sqrt(1.0 + (mac.h @ mac.h) * mac.P.max()))


def _search_gram(mac: EffectiveMac) -> np.ndarray:
    G = mac.gram()
    # zero-power codewords leave G singular; a tiny ridge keeps the
    # enumeration finite (the box does the rest) without changing the scores
    ridge = 1e-9 * max(float(np.max(np.diag(G))), 1e-300)
    return G + ridge * np.eye(mac.K) if np.any(mac.P <= 0) else G


def best_coefficients(mac: EffectiveMac, radius: int | str = "auto") -> CoefficientSet:
    """Greedy successive selection of K independent integer equations.

    Step k picks, among integer vectors with entries in ``[-radius, radius]``
    that are independent of the equations already chosen, the one with the
    largest :func:`computation_rate` given those equations. Vectors are
    compared through their canonical coset representative (see
    :func:`_canonical`), and ties go to the lexicographically smallest one.

    The search is exact: a vector can only beat the incumbent rate ``r`` if
    its conditional noise is below ``max(P) * 2**(-2r)``, and the canonical
    representative of any such coset lies in an ellipsoid that is enumerated
    completely.
    """
    K = mac.K
    if radius == "auto":
        radius = auto_radius(mac)
    radius = int(radius)
    if radius < 1:
        raise ValueError("radius must be >= 1")
    G = mac.gram()
    Gs = _search_gram(mac)
    Pmax = float(mac.P.max())
    tiny = 1e-10 * max(Pmax, 1.0)
    A = np.zeros((0, K), dtype=np.int64)
    raw_s, raw_r = [], []
    units = np.eye(K, dtype=np.int64)

    def score(V, B, norms):
        s = _conditional_noise(V, G, B, norms)
        ok = (s > tiny) & (np.abs(V).max(axis=1) <= radius)
        Pj = np.where(V != 0, mac.P[None, :], -np.inf).max(axis=1)
        with np.errstate(divide="ignore"):
            r = np.where(Pj > 0, 0.5 * np.log2(np.maximum(Pj, 1e-300) / np.maximum(s, 1e-300)), 0.0)
        r = np.maximum(r, 0.0)
        return np.where(ok, r, -np.inf), s

    for _ in range(K):
        B, norms = _gram_schmidt(G, A)
        V = _canonical(units, A, G, B, norms)
        r, _ = score(V, B, norms)
        incumbent = r.max()
        if incumbent == -np.inf:
            raise ValueError(f"no independent equation within radius {radius}")
        bound = Pmax * 2.0 ** (-2 * incumbent) if incumbent > 0 else Pmax
        ell = short_vectors(Gs, 1.0001 * bound + 0.25 * float(norms.sum()), box=radius)
        if len(ell):
            V = np.unique(np.vstack([V, _canonical(ell, A, G, B, norms)]), axis=0)
        r, _ = score(V, B, norms)
        best = np.flatnonzero(r == r.max())
        # np.unique sorted rows lexicographically, so the first tie is the smallest
        for idx in best:
            a = V[idx]
            if np.linalg.matrix_rank(np.vstack([A, a])) == len(A) + 1:
                break
        else:
            raise ValueError(f"no independent equation within radius {radius}")
        rate, sigma2, _ = computation_rate(mac, a, A)
        A = np.vstack([A, a])
        raw_s.append(sigma2)
        raw_r.append(rate)

    return _finish(mac, A, np.array(raw_s), np.array(raw_r), radius)


def decode_order(mac: EffectiveMac) -> np.ndarray:
    """Effective codewords sorted densest first (stable on ties)."""
    return np.argsort(-mac.P, kind="stable")


def _finish(mac, A, raw_s, raw_r, radius) -> CoefficientSet:
    order = decode_order(mac)
    chain = np.maximum.accumulate(raw_s)
    rates = np.array([_rate(mac.P[order[k]], chain[k]) for k in range(mac.K)])
    return CoefficientSet(A, order, raw_s, raw_r, chain, rates, radius)


def combination_rates(mac: EffectiveMac, coeffs: CoefficientSet) -> np.ndarray:
    """Successive combination rates ``log2(P[order[k]] / sigma2[k]) / 2``."""
    return np.array([_rate(mac.P[coeffs.order[k]], coeffs.sigma2[k]) for k in range(mac.K)])


def own_message_rate(receiver: int, H: ChannelMatrix, profile: PowerProfile,
                     radius: int | str = "auto", *, enforce_cap: bool = True) -> float:
    """Rate at which ``receiver`` recovers its own message.

    Uses the largest chain noise of the successive decoder and the power of
    the receiver's own effective codeword.
    """
    mac = build_effective_mac(receiver, H, profile, enforce_cap=enforce_cap)
    if mac.P[0] <= 0:
        return 0.0
    coeffs = best_coefficients(mac, radius)
    return _rate(mac.P[0], float(coeffs.sigma2[-1]))
