"""Asymptotic distribution of multilevel polarization for MAECs.

For a prime power q the limit equals the initial vector.  For composite q the
limit is built one divisor at a time by :func:`algorithm1`, which walks an
exponent tuple ``t`` from 0 up to r and only ever reads quadrant sums of the
*initial* vector.  All arithmetic is rational.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from fractions import Fraction

from .channel import EXACT, MaecDistribution, ModeError, format_scalar
from .lattice import DivisorLattice, build_lattice, padded_factorization
from .polar import AggregateQuad, aggregates_of


@dataclass(frozen=True)
class Comparison:
    i: int
    j: int
    a: int
    b: int
    lam: Fraction
    rho: Fraction


@dataclass(frozen=True)
class AlgorithmStep:
    t: tuple[int, ...]
    divisor: int
    comparisons: tuple[Comparison, ...]
    k: int
    l: int
    a: int
    b: int
    beta: Fraction
    lam: Fraction
    rho: Fraction
    mass: Fraction
    xi: Fraction


@dataclass
class AlgorithmTrace:
    m: int
    steps: list[AlgorithmStep] = field(default_factory=list)

    def to_json_obj(self) -> list[dict]:
        f = format_scalar
        out = []
        for n, s in enumerate(self.steps, 1):
            out.append({
                "step": n,
                "t": list(s.t),
                "divisor": s.divisor,
                "comparisons": [
                    {"i": c.i, "j": c.j, "a": c.a, "b": c.b, "lambda": f(c.lam), "rho": f(c.rho)}
                    for c in s.comparisons
                ],
                "k": s.k,
                "l": s.l,
                "final": {"i": s.l, "j": self.m, "a": s.a, "b": s.b,
                          "beta": f(s.beta), "lambda": f(s.lam), "rho": f(s.rho)},
                "mass": f(s.mass),
                "xi": f(s.xi),
            })
        return out

    def to_json(self, indent: int | None = 2) -> str:
        return json.dumps(self.to_json_obj(), indent=indent)


@dataclass(frozen=True)
class AsymptoticDistribution:
    lattice: DivisorLattice
    masses: tuple[Fraction, ...]
    support_chain: tuple[tuple[int, ...], ...]
    method: str

    def __getitem__(self, d: int) -> Fraction:
        return self.masses[self.lattice.index_of[d]]

    def items(self):
        return zip(self.lattice.divisors, self.masses)

    def as_distribution(self) -> MaecDistribution:
        return MaecDistribution(self.lattice, self.masses, EXACT)


def _require_exact(eps: MaecDistribution) -> None:
    if eps.mode != EXACT:
        raise ModeError("the asymptotic solver runs in exact mode only")


def asymptotic(eps: MaecDistribution, padded_prime_power: bool = False) -> AsymptoticDistribution:
    """mu^(inf) for any q: the initial vector for prime powers, else :func:`algorithm1`.

    ``padded_prime_power`` routes prime powers through the staircase solver
    with a dummy second prime of exponent 0 instead of the shortcut.
    """
    _require_exact(eps)
    lat = eps.lattice
    if lat.m == 1 and not padded_prime_power:
        chain = tuple(t for t, x in zip(lat.exponents, eps.masses) if x > 0)
        return AsymptoticDistribution(lat, tuple(eps.masses), chain, "prime-power")
    return algorithm1(eps)[0]


def algorithm1(eps: MaecDistribution) -> tuple[AsymptoticDistribution, AlgorithmTrace]:
    """Staircase solver: the limit together with its step trace.

    Inner loop over prime pairs starting at (i, j) = (1, 2): when
    lambda <= rho the later prime j wins, so (k, l) = (j, i) and the running
    winner i moves to j; otherwise (k, l) = (i, i).  Both cases advance j.
    The mass at t is then beta + min(lambda, rho) - xi at (l, m), and t_k
    is incremented.
    """
    _require_exact(eps)
    lat = eps.lattice
    view = lat if lat.m >= 2 else build_lattice(padded_factorization(lat.q))
    m = view.m
    r = view.factorization.exponents
    cap = sum(r) + 2
    vals = eps.masses

    def quad(i: int, j: int, a: int, b: int) -> tuple:
        return aggregates_of(view, vals, i, j, a, b)

    t = [0] * m
    xi = Fraction(0)
    mu = [Fraction(0)] * lat.tau
    trace = AlgorithmTrace(m)
    while 0 <= xi < 1:
        if len(trace.steps) >= cap:
            raise RuntimeError(f"solver exceeded {cap} iterations (xi = {xi})")
        if any(ti > ri for ti, ri in zip(t, r)):
            raise RuntimeError(f"exponent tuple {tuple(t)} left the lattice with xi = {xi}")
        i, j = 1, 2
        k = l = 1
        comps = []
        while j <= m:
            a, b = t[i - 1] + 1, t[j - 1] + 1
            _, la, rh, _ = quad(i, j, a, b)
            comps.append(Comparison(i, j, a, b, Fraction(la), Fraction(rh)))
            if la <= rh:
                k, l = j, i
                i = j
            else:
                k, l = i, i
            j += 1
        a, b = t[l - 1] + 1, t[m - 1] + 1
        _, la, rh, be = quad(l, m, a, b)
        mass = Fraction(be + min(la, rh) - xi)
        pos = view.position(tuple(t))
        mu[pos] = mass
        xi += mass
        trace.steps.append(AlgorithmStep(
            tuple(t), view.divisors[pos], tuple(comps), k, l, a, b,
            Fraction(be), Fraction(la), Fraction(rh), mass, xi,
        ))
        t[k - 1] += 1
    if xi != 1:
        raise RuntimeError(f"solver ended with xi = {xi}")
    if any(x < 0 for x in mu):
        raise RuntimeError("solver produced a negative mass")
    chain = tuple(lat.exponents[p] for p, x in enumerate(mu) if x > 0)
    return AsymptoticDistribution(lat, tuple(mu), chain, "algorithm1"), trace


def limit_aggregates(eps: MaecDistribution, i: int, j: int, a: int, b: int) -> AggregateQuad:
    """Limits of (theta, lambda, rho, beta) along every branch average."""
    th, la, rh, be = aggregates_of(eps.lattice, eps.masses, i, j, a, b)
    lo = min(la, rh)
    zero = la - la
    return AggregateQuad(th + lo, max(zero, la - rh), max(zero, rh - la), be + lo)


def semiprime_closed_form(eps: MaecDistribution) -> AsymptoticDistribution:
    """Limit for q = p * r with distinct primes p < r."""
    _require_exact(eps)
    lat = eps.lattice
    if lat.m != 2 or lat.factorization.exponents != (1, 1):
        raise ValueError(f"q={lat.q} is not a squarefree semiprime")
    p, r = lat.factorization.primes
    q = lat.q
    e1, ep, er, eq = eps[1], eps[p], eps[r], eps[q]
    lo = min(ep, er)
    mu = {1: e1 + lo, p: max(Fraction(0), ep - er), r: max(Fraction(0), er - ep), q: eq + lo}
    masses = tuple(mu[d] for d in lat.divisors)
    chain = tuple(lat.exponents[k] for k, x in enumerate(masses) if x > 0)
    return AsymptoticDistribution(lat, masses, chain, "semiprime")
