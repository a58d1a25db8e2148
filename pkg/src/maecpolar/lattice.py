"""Divisor lattice of an alphabet size q.

Divisors are kept in ascending order and every downstream module refers to
them by dense position.  gcd and lcm are precomputed as position tables, and
each position carries its exponent tuple ``t`` with ``d = <t>``.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

Q_MAX = 2**32


@dataclass(frozen=True)
class Factorization:
    q: int
    primes: tuple[int, ...]
    exponents: tuple[int, ...]
    padded: bool = False

    def __post_init__(self) -> None:
        if len(self.primes) != len(self.exponents):
            raise ValueError("primes and exponents must have equal length")
        if not self.primes and self.q != 1:
            raise ValueError("only q = 1 has an empty factorization")
        if list(self.primes) != sorted(set(self.primes)):
            raise ValueError("primes must be strictly increasing")
        if any(not _is_prime(p) for p in self.primes):
            raise ValueError("every base must be prime")
        floor = 0 if self.padded else 1
        if any(r < floor for r in self.exponents):
            raise ValueError("exponents must be positive")
        if math.prod(p**r for p, r in zip(self.primes, self.exponents)) != self.q:
            raise ValueError("q does not match the factorization")

    @property
    def m(self) -> int:
        return len(self.primes)

    @property
    def omega(self) -> int:
        return sum(1 for r in self.exponents if r >= 1)

    @property
    def big_omega(self) -> int:
        return sum(self.exponents)

    @property
    def tau(self) -> int:
        return math.prod(r + 1 for r in self.exponents)


def _is_prime(n: int) -> bool:
    if n < 2:
        return False
    if n % 2 == 0:
        return n == 2
    f = 3
    while f * f <= n:
        if n % f == 0:
            return False
        f += 2
    return True


def factorize(q: int) -> Factorization:
    """Trial-division factorization of ``2 <= q <= 2**32``."""
    if isinstance(q, bool) or not isinstance(q, (int, np.integer)):
        raise TypeError("q must be an integer")
    q = int(q)
    if q < 2:
        raise ValueError(f"q must be at least 2, got {q}")
    if q > Q_MAX:
        raise ValueError(f"q must not exceed 2**32, got {q}")
    primes: list[int] = []
    exps: list[int] = []
    rest = q
    p = 2
    while p * p <= rest:
        if rest % p == 0:
            r = 0
            while rest % p == 0:
                rest //= p
                r += 1
            primes.append(p)
            exps.append(r)
        p += 1 if p == 2 else 2
    if rest > 1:
        primes.append(rest)
        exps.append(1)
    return Factorization(q, tuple(primes), tuple(exps))


def padded_factorization(q: int) -> Factorization:
    """Prime-power q written with a second, zero-exponent prime (m = 2, r_2 = 0)."""
    f = factorize(q)
    if f.m != 1:
        raise ValueError(f"{q} is not a prime power")
    dummy = 2 if f.primes[0] != 2 else 3
    pairs = sorted([(f.primes[0], f.exponents[0]), (dummy, 0)])
    return Factorization(q, tuple(p for p, _ in pairs), tuple(r for _, r in pairs), padded=True)


def counts(f: Factorization) -> tuple[int, int, int]:
    """(omega, Omega, tau) of the factorization."""
    return f.omega, f.big_omega, f.tau


@dataclass(frozen=True, eq=False)
class DivisorLattice:
    factorization: Factorization
    divisors: tuple[int, ...]
    exponents: tuple[tuple[int, ...], ...]
    gcd_table: np.ndarray = field(repr=False)
    lcm_table: np.ndarray = field(repr=False)
    index_of: dict[int, int] = field(repr=False)

    @property
    def q(self) -> int:
        return self.factorization.q

    @property
    def tau(self) -> int:
        return len(self.divisors)

    @property
    def m(self) -> int:
        return self.factorization.m

    def exponent_of(self, pos: int) -> tuple[int, ...]:
        return self.exponents[pos]

    def position(self, t: tuple[int, ...]) -> int:
        """Position of the divisor ``<t>``."""
        d = math.prod(p**e for p, e in zip(self.factorization.primes, t))
        return self.index_of[d]

    def __eq__(self, other: object) -> bool:
        return isinstance(other, DivisorLattice) and other.factorization == self.factorization

    def __hash__(self) -> int:
        return hash(self.factorization)


def build_lattice(f: Factorization | int) -> DivisorLattice:
    if not isinstance(f, Factorization):
        f = factorize(f)
    ranges = [range(r + 1) for r in f.exponents]
    pairs = []
    for t in itertools.product(*ranges):
        d = math.prod(p**e for p, e in zip(f.primes, t))
        pairs.append((d, t))
    pairs.sort()
    divisors = tuple(d for d, _ in pairs)
    exps = tuple(t for _, t in pairs)
    index_of = {d: i for i, d in enumerate(divisors)}
    tau = len(divisors)
    gcd_t = np.empty((tau, tau), dtype=np.int64)
    lcm_t = np.empty((tau, tau), dtype=np.int64)
    for i, a in enumerate(divisors):
        for j, b in enumerate(divisors):
            g = math.gcd(a, b)
            gcd_t[i, j] = index_of[g]
            lcm_t[i, j] = index_of[a // g * b]
    gcd_t.setflags(write=False)
    lcm_t.setflags(write=False)
    return DivisorLattice(f, divisors, exps, gcd_t, lcm_t, index_of)


_CACHE: dict[Factorization, DivisorLattice] = {}


def lattice_for(q: int) -> DivisorLattice:
    """Cached lattice for the ordinary factorization of q (q = 1 gives the one-point lattice)."""
    f = Factorization(1, (), ()) if q == 1 else factorize(q)
    lat = _CACHE.get(f)
    if lat is None:
        lat = _CACHE[f] = build_lattice(f)
    return lat
