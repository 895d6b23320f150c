"""Beam-forming dimensions and monomial precoders for cooperative jamming.

Each user splits its message into ``M = T**(2K-2)`` components. Component
``m`` (1-based) is sent along the dimension given by a product of channel
gains raised to the exponents ``phi(m)``. The jamming partner uses the same
construction, so at every receiver other than the protected one a message
dimension lines up with a jamming dimension whenever the two monomials are
identical.

Alignment is decided on integer exponent vectors, never on floating-point
products.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property

import numpy as np

from .channel import ChannelMatrix


@dataclass(frozen=True)
class PhiMapping:
    K: int
    T: int

    def __post_init__(self):
        if self.K < 2:
            raise ValueError("K must be >= 2")
        if self.T < 1:
            raise ValueError("T must be >= 1")

    @property
    def length(self) -> int:
        """Exponents per tuple, ``2K - 2``."""
        return 2 * self.K - 2

    @property
    def M(self) -> int:
        return self.T ** self.length

    @cached_property
    def table(self) -> np.ndarray:
        """All exponent tuples, row ``m - 1`` holds ``phi(m)``."""
        m = np.arange(self.M, dtype=np.int64)
        powers = self.T ** np.arange(self.length, dtype=np.int64)
        return (m[:, None] // powers[None, :]) % self.T + 1


def phi(m: int, mapping: PhiMapping) -> tuple[int, ...]:
    """Exponent tuple of dimension ``m`` (little-endian mixed radix, digits + 1)."""
    if not 1 <= m <= mapping.M:
        raise ValueError(f"m={m} outside 1..{mapping.M}")
    q, out = m - 1, []
    for _ in range(mapping.length):
        q, d = divmod(q, mapping.T)
        out.append(d + 1)
    return tuple(out)


def phi_inv(r, mapping: PhiMapping) -> int:
    r = tuple(int(x) for x in r)
    if len(r) != mapping.length or not all(1 <= x <= mapping.T for x in r):
        raise ValueError(f"{r} is not an exponent tuple for K={mapping.K}, T={mapping.T}")
    m = 0
    for x in reversed(r):
        m = m * mapping.T + (x - 1)
    return m + 1


@dataclass(frozen=True)
class Monomial:
    """Product of channel gains; ``terms`` maps ``(tx, rx)`` to its exponent."""

    terms: tuple[tuple[tuple[int, int], int], ...]

    @classmethod
    def from_map(cls, exponents: dict) -> "Monomial":
        return cls(tuple(sorted((k, int(v)) for k, v in exponents.items() if v != 0)))

    def as_dict(self) -> dict:
        return dict(self.terms)

    def exponent(self, tx: int, rx: int) -> int:
        return self.as_dict().get((tx, rx), 0)

    @property
    def variables(self) -> frozenset:
        return frozenset(k for k, _ in self.terms)

    def __mul__(self, other: "Monomial") -> "Monomial":
        d = self.as_dict()
        for k, v in other.terms:
            d[k] = d.get(k, 0) + v
        return Monomial.from_map(d)

    def evaluate(self, H: ChannelMatrix) -> float:
        out = 1.0
        for (tx, rx), e in self.terms:
            out *= H.gains[tx, rx] ** e
        return out


def gain(tx: int, rx: int) -> Monomial:
    return Monomial((((tx, rx), 1),))


def precoder_variables(user: int, K: int) -> list[tuple[int, int]]:
    """Gain variables of the message precoder of ``user``, in exponent order.

    The first ``K - 1`` coordinates are the gains of ``user`` towards every
    receiver but its own; the remaining ``K - 1`` are the gains of its
    jamming partner towards the same receivers.
    """
    partner = K - 1 - user
    rx = [k for k in range(K) if k != user]
    return [(user, k) for k in rx] + [(partner, k) for k in rx]


def jam_variables(jammer: int, K: int) -> list[tuple[int, int]]:
    """Gain variables of the jamming precoder of transmitter ``jammer``.

    The protected receiver ``K - 1 - jammer`` is excluded. The coordinate
    order matches the message precoder of the protected user, so the same
    exponent tuple addresses the same variable on both sides.
    """
    return precoder_variables(K - 1 - jammer, K)


def _check_user(u: int, K: int):
    if not 0 <= u < K:
        raise ValueError(f"user {u} outside 0..{K - 1}")
    if K % 2:
        raise ValueError(f"K={K} must be even (pad odd K with a dummy user)")


def _precode(variables, m, H, mapping):
    mono = Monomial.from_map(dict(zip(variables, phi(m, mapping))))
    return mono.evaluate(H), mono


def precoder_f(m: int, user: int, H: ChannelMatrix, mapping: PhiMapping):
    """Message precoder of component ``m`` at transmitter ``user``.

    Returns ``(value, monomial)`` with ``value`` the monomial evaluated at H.
    """
    _check_user(user, H.K)
    return _precode(precoder_variables(user, H.K), m, H, mapping)


def precoder_g(m: int, jammer: int, H: ChannelMatrix, mapping: PhiMapping):
    """Jamming precoder of component ``m`` at transmitter ``jammer``."""
    _check_user(jammer, H.K)
    return _precode(jam_variables(jammer, H.K), m, H, mapping)


@dataclass(frozen=True)
class AlignedSet:
    user: int
    receiver: int
    M: int
    pairs: np.ndarray  # (n, 2) of 1-based (m, m') with message m aligned to jam m'

    @property
    def S(self) -> np.ndarray:
        return self.pairs[:, 0]

    def __len__(self):
        return len(self.pairs)

    @property
    def fraction(self) -> Fraction:
        return Fraction(len(self), self.M)


def _exponent_matrix(variables, extra, mapping, index):
    """Integer exponents of ``extra * monomial(m)`` for all m, over ``index``."""
    table = mapping.table
    E = np.zeros((mapping.M, len(index)), dtype=np.int64)
    for col, var in enumerate(variables):
        E[:, index[var]] += table[:, col]
    E[:, index[extra]] += 1
    return E


def _row_keys(E: np.ndarray, base: int) -> np.ndarray:
    # exact integer encoding of exponent rows (entries are < base)
    keys = np.zeros(len(E), dtype=object if E.shape[1] * np.log2(base) > 62 else np.int64)
    for col in range(E.shape[1]):
        keys = keys * base + E[:, col]
    return keys


def aligned_set(user: int, receiver: int, mapping: PhiMapping) -> AlignedSet:
    """Dimensions where the message of ``user`` aligns with its partner's jam.

    At ``receiver`` the message component ``m`` arrives with monomial
    ``h[user, receiver] * f(m, user)`` and the jamming component ``m'`` of the
    partner with ``h[partner, receiver] * g(m', partner)``. The pair is aligned
    iff the two monomials are identical.
    """
    K = mapping.K
    _check_user(user, K)
    if not 0 <= receiver < K:
        raise ValueError(f"receiver {receiver} outside 0..{K - 1}")
    if receiver == user:
        raise ValueError("alignment is only defined at unintended receivers")
    partner = K - 1 - user
    fv = precoder_variables(user, K)
    gv = jam_variables(partner, K)
    msg_extra, jam_extra = (user, receiver), (partner, receiver)
    universe = sorted(set(fv) | set(gv) | {msg_extra, jam_extra})
    index = {v: i for i, v in enumerate(universe)}
    Ef = _exponent_matrix(fv, msg_extra, mapping, index)
    Eg = _exponent_matrix(gv, jam_extra, mapping, index)
    base = mapping.T + 2
    kf, kg = _row_keys(Ef, base), _row_keys(Eg, base)
    # each monomial is produced by exactly one m on either side (phi is a bijection)
    order = np.argsort(kg, kind="stable")
    kg_sorted = kg[order]
    pos = np.searchsorted(kg_sorted, kf)
    pos_c = np.minimum(pos, len(kg_sorted) - 1)
    hit = kg_sorted[pos_c] == kf
    m = np.nonzero(hit)[0] + 1
    m_jam = order[pos_c[hit]] + 1
    return AlignedSet(user, receiver, mapping.M, np.stack([m, m_jam], axis=1).astype(np.int64))


def aligned_fraction(K: int, T: int) -> Fraction:
    """Closed form of ``|S| / M``: ``((T - 1) / T) ** 2`` for any even K."""
    if K % 2:
        raise ValueError(f"K={K} must be even")
    if T < 2:
        raise ValueError("T must be >= 2")
    return Fraction(T - 1, T) ** 2
