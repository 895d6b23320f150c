"""Toy nested scalar lattices: dithered modulo encoding, outer repetition
codebooks with wiretap binning, and numeric checks of the secrecy steps.

Every lattice here is ``gamma * Z**n``. Nesting ``gamma_a Z ⊆ gamma_b Z`` holds
iff ``gamma_a / gamma_b`` is a positive integer, so a chain is valid when each
scale is an integer multiple of the next finer one.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .cf import EffectiveMac, best_coefficients, build_effective_mac, mmse_noise
from .channel import ChannelMatrix
from .power import PowerProfile

# coarse to fine, the containment order of the chain
ROLES = ("base", "message_coarse", "jam_coarse", "message_fine", "jam_fine")
_RANK = {r: k for k, r in enumerate(ROLES)}


def round_half_toward_zero(t):
    t = np.asarray(t, dtype=float)
    return np.sign(t) * np.ceil(np.abs(t) - 0.5)


def quantize(x, gamma: float):
    """Nearest point of ``gamma * Z``; exact midpoints go toward zero."""
    return gamma * round_half_toward_zero(np.asarray(x, dtype=float) / gamma)


def mod_lattice(x, gamma: float):
    """``x mod gamma*Z`` into the Voronoi cell ``[-gamma/2, gamma/2]``."""
    x = np.asarray(x, dtype=float)
    return x - quantize(x, gamma)


@dataclass(frozen=True)
class Level:
    role: str
    scale: float
    user: int | None = None

    @property
    def second_moment(self) -> float:
        """Per-dimension second moment of the Voronoi cell."""
        return self.scale ** 2 / 12.0


def _integer_ratio(coarse: float, fine: float) -> int | None:
    r = coarse / fine
    k = round(r)
    return k if k >= 1 and abs(r - k) <= 1e-9 * max(r, 1.0) else None


@dataclass(frozen=True)
class NestedScalarChain:
    levels: tuple[Level, ...]
    n: int = 1

    def level(self, role: str, user: int | None = None) -> Level:
        hits = [lv for lv in self.levels if lv.role == role and (user is None or lv.user == user)]
        if not hits:
            raise KeyError(f"chain has no {role!r} level" + (f" for user {user}" if user is not None else ""))
        return hits[0]

    def has(self, role: str) -> bool:
        return any(lv.role == role for lv in self.levels)

    def ratio(self, coarse: Level, fine: Level) -> int:
        k = _integer_ratio(coarse.scale, fine.scale)
        if k is None:
            raise ValueError(f"{coarse} is not nested in {fine}")
        return k

    def codebook(self, fine: Level, coarse: Level) -> np.ndarray:
        """Coset leaders of ``fine / coarse``: ``fine.scale * k`` for ``k`` in a
        centred range of ``coarse.scale / fine.scale`` integers."""
        q = self.ratio(coarse, fine)
        k = np.arange(q) - (q - 1) // 2
        return fine.scale * k

    def dither_encode(self, t, d, coarse: Level, fine: Level | None = None):
        """``[t + d] mod coarse``, applied coordinate-wise (hence blockwise).

        With ``fine`` given, ``t`` must be a point of that lattice.
        """
        t = np.asarray(t, dtype=float)
        if fine is not None:
            self.ratio(coarse, fine)
            steps = t / fine.scale
            if not np.allclose(steps, np.rint(steps), rtol=0, atol=1e-9):
                raise ValueError("t is not a point of the fine lattice")
        return mod_lattice(t + np.asarray(d, dtype=float), coarse.scale)


def build_chain(levels, n: int = 1) -> NestedScalarChain:
    """Validate and build a chain from ``(role, scale)`` or ``(role, user, scale)``.

    Levels are listed coarse to fine. Roles must follow
    ``base, message_coarse, jam_coarse, message_fine, jam_fine``; within a
    role, per-user levels run from the highest user index down. Every scale
    must be an integer multiple of the next.
    """
    if n not in (1, 2):
        raise ValueError("toy chains support n in {1, 2}")
    parsed = []
    for item in levels:
        if len(item) == 2:
            role, scale = item
            user = None
        else:
            role, user, scale = item
        if role not in _RANK:
            raise ValueError(f"unknown role {role!r}; expected one of {ROLES}")
        if not scale > 0:
            raise ValueError(f"scale of {role} must be positive")
        parsed.append(Level(role, float(scale), user))
    if not parsed:
        raise ValueError("empty chain")
    for prev, nxt in zip(parsed, parsed[1:]):
        rp, rn = _RANK[prev.role], _RANK[nxt.role]
        if rn < rp:
            raise ValueError(f"role order: {nxt.role} cannot follow {prev.role}")
        if rn == rp:
            if prev.user is None or nxt.user is None or nxt.user >= prev.user:
                raise ValueError(f"repeated role {nxt.role} needs decreasing user indices")
        if _integer_ratio(prev.scale, nxt.scale) is None:
            raise ValueError(f"scale {prev.scale:g} is not an integer multiple of {nxt.scale:g}")
    return NestedScalarChain(tuple(parsed), n)


def crypto_chain(q: int) -> NestedScalarChain:
    """Chain with ``q`` jamming cosets per jamming coarse cell, jamming fine step 1."""
    if q < 2:
        raise ValueError("q must be >= 2")
    mf = 2 if q % 2 == 0 else 1
    return build_chain([("message_coarse", 2 * q), ("jam_coarse", q),
                        ("message_fine", mf), ("jam_fine", 1)])


@dataclass(frozen=True)
class CryptoCheck:
    q: int
    tv: Fraction
    mutual_information: float


def crypto_lemma_check(chain: NestedScalarChain, q: int, jammer_support=None) -> CryptoCheck:
    """Exact distribution of ``[t + u] mod jam_coarse`` over all messages ``t``.

    ``u`` is uniform over the jamming codebook (``jam_fine`` cosets in the
    ``jam_coarse`` cell) or over the positions listed in ``jammer_support``.
    Arithmetic is on integer coset indices, so there is no sampling or
    rounding error. Returns the largest total-variation distance from uniform
    over ``t`` and ``I(t; [t+u] mod jam_coarse)`` in bits.
    """
    jc, jf = chain.level("jam_coarse"), chain.level("jam_fine")
    if chain.ratio(jc, jf) != q:
        raise ValueError(f"q={q} does not match the chain ratio {chain.ratio(jc, jf)}")
    mc, mf = chain.level("message_coarse"), chain.level("message_fine")
    step = chain.ratio(mf, jf)
    messages = chain.codebook(mf, mc) / jf.scale
    t_idx = np.rint(messages).astype(np.int64)
    support = np.arange(q) if jammer_support is None else np.unique(np.asarray(jammer_support)) % q
    if len(support) == 0:
        raise ValueError("jammer support is empty")
    assert np.all(t_idx % step == 0)
    n_u = len(support)
    cond = []
    for t in t_idx:
        counts = np.bincount((t + support) % q, minlength=q)
        cond.append([Fraction(int(c), n_u) for c in counts])
    uniform = Fraction(1, q)
    tv = max(sum(abs(p - uniform) for p in row) / 2 for row in cond)
    n_t = len(cond)
    marginal = [sum(row[x] for row in cond) / n_t for x in range(q)]
    mi = 0.0
    for row in cond:
        for x, p in enumerate(row):
            if p:
                mi += float(p) / n_t * math.log2(p / marginal[x])
    return CryptoCheck(q, tv, mi)


@dataclass(frozen=True)
class EntropyCheck:
    entropy: float
    bound: float
    stderr: float
    samples: int

    @property
    def margin(self) -> float:
        """``bound + 3 stderr - entropy``; nonnegative when the bound holds."""
        return self.bound + 3 * self.stderr - self.entropy


def quantization_bound(gains, P_msg, P_jam, m_star: int) -> float:
    """``log2(sum_m (h^2 P_m + g^2 PJ_m) / (g^2 PJ_{m*}))`` with ``gains = (h, g)``."""
    h, g = gains
    P_msg, P_jam = np.asarray(P_msg, float), np.asarray(P_jam, float)
    den = g ** 2 * P_jam[m_star - 1]
    if den <= 0:
        raise ValueError(f"zero jamming power in component {m_star}")
    return math.log2(float(np.sum(h ** 2 * P_msg + g ** 2 * P_jam)) / den)


def quantization_entropy_check(gains, P_msg, P_jam, m_star: int, samples: int = 10 ** 6,
                               seed: int = 0, chunk: int = 250_000) -> EntropyCheck:
    """Plug-in entropy of the jamming-lattice quantization of an aligned sum.

    Component ``m`` contributes ``h * x_m + g * u_m`` where the dithered
    codewords ``x_m`` and ``u_m`` are uniform on centred cells with second
    moments ``P_msg[m]`` and ``P_jam[m]``. The sum is quantized to the nearest
    point of the received jamming lattice of component ``m_star`` (second
    moment ``g^2 P_jam[m_star]``).
    """
    h, g = gains
    P_msg, P_jam = np.asarray(P_msg, float), np.asarray(P_jam, float)
    bound = quantization_bound(gains, P_msg, P_jam, m_star)
    gamma = math.sqrt(12 * g ** 2 * P_jam[m_star - 1])
    w_msg = np.abs(h) * np.sqrt(12 * P_msg)
    w_jam = np.abs(g) * np.sqrt(12 * P_jam)
    rng = np.random.default_rng(seed)
    counts: dict[int, int] = {}
    done = 0
    while done < samples:
        n = min(chunk, samples - done)
        s = (rng.random((n, len(w_msg))) - 0.5) @ w_msg + (rng.random((n, len(w_jam))) - 0.5) @ w_jam
        k = round_half_toward_zero(s / gamma).astype(np.int64)
        vals, c = np.unique(k, return_counts=True)
        for v, cc in zip(vals.tolist(), c.tolist()):
            counts[v] = counts.get(v, 0) + cc
        done += n
    p = np.array(list(counts.values()), dtype=float) / samples
    info = -np.log2(p)
    H = float(np.sum(p * info))
    var = float(np.sum(p * info ** 2)) - H ** 2
    return EntropyCheck(H, bound, math.sqrt(max(var, 0.0) / samples), samples)


# -- outer codes ---------------------------------------------------------------

@dataclass(frozen=True)
class OuterCodebook:
    """Outer codewords as rows of inner-codeword indices, ``(size, blocks)``."""

    words: np.ndarray
    inner_size: int

    @property
    def size(self) -> int:
        return len(self.words)

    @property
    def blocks(self) -> int:
        return self.words.shape[1]


def outer_codebook(inner_size: int, blocks: int, size: int, seed: int = 0) -> OuterCodebook:
    """``size`` outer codewords of ``blocks`` i.i.d. uniform inner draws."""
    if blocks < 1 or blocks > 64:
        raise ValueError("blocks must lie in 1..64")
    if size < 1 or size > 2 ** 16:
        raise ValueError("codebook size must lie in 1..2**16")
    rng = np.random.default_rng(seed)
    return OuterCodebook(rng.integers(0, inner_size, size=(size, blocks)), inner_size)


def outer_points(book: OuterCodebook, index: int, codebook_points: np.ndarray, n: int = 1) -> np.ndarray:
    """Lattice points of outer codeword ``index`` as ``(blocks, n)``.

    For ``n > 1`` the inner index enumerates ``codebook_points ** n`` words in
    row-major order.
    """
    q = len(codebook_points)
    idx = book.words[index]
    digits = np.stack([(idx // q ** k) % q for k in range(n - 1, -1, -1)], axis=1)
    return codebook_points[digits]


@dataclass(frozen=True)
class WiretapBinning:
    """Random partition of an outer codebook into equal-size bins."""

    bin_of: np.ndarray  # bin index of every codeword
    n_bins: int

    @property
    def bin_size(self) -> int:
        return len(self.bin_of) // self.n_bins

    def members(self, w: int) -> np.ndarray:
        return np.flatnonzero(self.bin_of == w)

    def encode(self, w: int, rng: np.random.Generator) -> int:
        """Pick a codeword uniformly inside bin ``w``."""
        return int(rng.choice(self.members(w)))

    def decode(self, codeword: int) -> int:
        return int(self.bin_of[codeword])


def wiretap_binning(codebook_size: int, n_bins: int, seed: int = 0) -> WiretapBinning:
    if n_bins < 1 or codebook_size % n_bins:
        raise ValueError(f"{codebook_size} codewords cannot form {n_bins} equal bins")
    perm = np.random.default_rng(seed).permutation(codebook_size)
    bin_of = np.empty(codebook_size, dtype=np.int64)
    bin_of[perm] = np.arange(codebook_size) // (codebook_size // n_bins)
    return WiretapBinning(bin_of, n_bins)


def split_rate(total: float, weights) -> np.ndarray:
    """Nonnegative per-component rates proportional to ``weights``, summing to ``total``."""
    w = np.asarray(weights, dtype=float)
    if total < 0 or np.any(w < 0) or w.sum() <= 0:
        raise ValueError("need total >= 0 and nonnegative weights with a positive sum")
    return total * w / w.sum()


# -- end to end ----------------------------------------------------------------

@dataclass(frozen=True)
class ToyResult:
    receiver: int
    a: np.ndarray
    beta: float
    fine_step: float
    coarse_scales: np.ndarray
    noise_var: float
    trials: int
    errors: int
    symbol_errors: int
    symbols: int

    @property
    def error_rate(self) -> float:
        return self.errors / self.trials


def toy_chain(mac: EffectiveMac, a, rate_bits: int, n: int = 1) -> NestedScalarChain:
    """Per-codeword coarse lattices over one common fine lattice.

    The densest participant of ``a`` carries ``rate_bits`` bits per dimension;
    every other coarse scale is its power-matched scale rounded to a multiple
    of the common fine step, so all participants nest in the same fine lattice.
    """
    a = np.asarray(a)
    part = np.flatnonzero(a)
    j = part[np.argmax(mac.P[part])]
    gamma_j = math.sqrt(12 * mac.P[j])
    step = gamma_j / 2 ** rate_bits
    levels = []
    for l in sorted(range(mac.K), key=lambda l: -mac.P[l]):
        mult = max(1, int(round(math.sqrt(12 * mac.P[l]) / step))) if mac.P[l] > 0 else 1
        levels.append(Level("message_coarse", step * mult, l))
    levels.append(Level("message_fine", step))
    return NestedScalarChain(tuple(levels), n)


def toy_end_to_end(H: ChannelMatrix, profile: PowerProfile, *, receiver: int = 0,
                   snr_db: float | None = None, rate_bits: int = 2, n: int = 1,
                   blocks: int = 32, trials: int = 1000, seed: int = 0,
                   radius: int | str = "auto") -> ToyResult:
    """Simulate decoding of the first combination equation at ``receiver``.

    Each effective codeword is a dithered point of the toy chain built by
    :func:`toy_chain`. The residual jamming of the protector is simulated as a
    real dithered codeword and folded with the Gaussian noise. ``snr_db`` is
    ``P / N0``; ``None`` means ``N0 = 1`` (the design point) and ``inf`` a
    noiseless receiver. A trial fails if any of its ``n * blocks`` symbols of
    the decoded combination is wrong. Trial ``k`` draws from
    ``SeedSequence([seed, k])``.
    """
    K = H.K
    mac = build_effective_mac(receiver, H, profile)
    coeffs = best_coefficients(mac, radius)
    a = coeffs.A[0]
    _, beta, _ = mmse_noise(mac, a)
    chain = toy_chain(mac, a, rate_bits, n)
    step = chain.level("message_fine").scale
    coarse = np.array([chain.level("message_coarse", l).scale for l in range(K)])
    protector = K - 1 - receiver
    g_fold = H.gains[protector, receiver]
    PJ = float(profile.jamming_total[protector])
    fold = math.sqrt(1.0 + g_fold ** 2 * PJ)
    if snr_db is None:
        N0 = 1.0
    elif math.isinf(snr_db) and snr_db > 0:
        N0 = 0.0
    else:
        N0 = profile.P / 10 ** (snr_db / 10)
    N = n * blocks
    q = np.rint(coarse / step).astype(np.int64)
    jam_w = math.sqrt(12 * PJ)
    errors = sym_err = 0
    for k in range(trials):
        rng = np.random.default_rng(np.random.SeedSequence([seed, k]))
        idx = rng.integers(0, q[:, None], size=(K, N))
        t = step * (idx - (q[:, None] - 1) // 2)
        d = (rng.random((K, N)) - 0.5) * coarse[:, None]
        x = mod_lattice(t + d, coarse[:, None])
        jam = (rng.random(N) - 0.5) * jam_w
        z = rng.normal(0.0, math.sqrt(N0), N) if N0 > 0 else np.zeros(N)
        y = mac.h @ x + (g_fold * jam + z) / fold
        s = beta * y - a @ d
        v = a @ (x - d)
        wrong = np.abs(quantize(s, step) - v) > step / 2
        sym_err += int(wrong.sum())
        errors += bool(wrong.any())
    return ToyResult(receiver, a, beta, step, coarse, N0, trials, errors, sym_err, trials * N)
