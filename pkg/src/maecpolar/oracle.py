"""Explicit finite channels for checking the MAEC transform theorem by construction.

Channels are stored sparsely: ``rows[x]`` maps output labels to positive
probabilities.  Labels are structured so comparisons match by label, never by
column order:

* :class:`Coset` ``(z, d)`` for an MAEC output ``z + dZ``;
* ``(Coset, Coset)`` for the minus transform;
* ``(Coset, Coset, u1)`` for the plus transform.

Rows may be empty where the defining formula assigns no mass (intermediate
channels on unreachable inputs).  Composition refuses to push positive mass
through such a row.
"""

from __future__ import annotations

import math
import random
from collections.abc import Hashable, Iterable, Mapping
from dataclasses import dataclass, field
from fractions import Fraction
from typing import NamedTuple

import numpy as np

from .channel import (
    EXACT,
    FLOAT,
    ChannelParameters,
    MaecDistribution,
    alpha_capacity,
    format_scalar,
    log_scale,
    random_distribution,
)
from .lattice import DivisorLattice
from .polar import minus_transform, plus_transform

MAX_Q = 64
MAX_TAU = 24


class Coset(NamedTuple):
    z: int
    d: int

    def __str__(self) -> str:
        return f"{self.z}+{self.d}Z"


@dataclass(frozen=True)
class Unit:
    gamma: int
    inverse: int
    q: int

    def __post_init__(self) -> None:
        if (self.gamma * self.inverse) % self.q != 1 % self.q:
            raise ValueError(f"{self.inverse} is not the inverse of {self.gamma} mod {self.q}")


def make_unit(gamma: int | Unit, q: int) -> Unit:
    if isinstance(gamma, Unit):
        if gamma.q != q:
            raise ValueError(f"unit defined mod {gamma.q}, expected mod {q}")
        return gamma
    g = gamma % q
    if math.gcd(g, q) != 1:
        raise ValueError(f"{gamma} is not a unit mod {q}")
    return Unit(g, pow(g, -1, q) if q > 1 else 0, q)


def units_of(q: int) -> tuple[Unit, ...]:
    if q < 2:
        raise ValueError("q must be at least 2")
    return tuple(make_unit(g, q) for g in range(1, q) if math.gcd(g, q) == 1)


@dataclass(eq=False)
class Dmc:
    inputs: tuple
    rows: dict
    mode: str
    declared_outputs: tuple | None = field(default=None, repr=False)

    @property
    def outputs(self) -> tuple:
        """Declared output alphabet, or the reachable labels if none was declared."""
        if self.declared_outputs is not None:
            return self.declared_outputs
        seen: dict = {}
        for x in self.inputs:
            for y in self.rows.get(x, {}):
                seen.setdefault(y, None)
        return tuple(seen)

    def reachable(self) -> list:
        seen: dict = {}
        for x in self.inputs:
            for y, p in self.rows.get(x, {}).items():
                if p:
                    seen.setdefault(y, None)
        return list(seen)

    def row(self, x) -> Mapping:
        return self.rows.get(x, {})

    def defined_inputs(self) -> list:
        return [x for x in self.inputs if self.rows.get(x)]

    def check_rows(self, tol: float = 1e-12) -> None:
        for x in self.inputs:
            r = self.rows.get(x)
            if not r:
                continue
            if any(p < 0 for p in r.values()):
                raise ValueError(f"negative entry in row {x!r}")
            s = sum(r.values())
            if (self.mode == EXACT and s != 1) or (self.mode == FLOAT and abs(s - 1) > tol):
                raise ValueError(f"row {x!r} sums to {s}")

    def dense(self, outputs: list | None = None) -> tuple[np.ndarray, list]:
        """Float matrix (inputs x outputs) over ``outputs`` (reachable labels by default)."""
        outs = self.reachable() if outputs is None else list(outputs)
        col = {y: c for c, y in enumerate(outs)}
        mat = np.zeros((len(self.inputs), len(outs)))
        for r, x in enumerate(self.inputs):
            for y, p in self.rows.get(x, {}).items():
                if p:
                    mat[r, col[y]] = float(p)
        return mat, outs


def _zero(mode: str):
    return Fraction(0) if mode == EXACT else 0.0


def _guard(q: int, tau: int) -> None:
    if q > MAX_Q or tau > MAX_TAU:
        raise ValueError(
            f"q={q} (tau={tau}) exceeds the explicit-channel guard q <= {MAX_Q}, tau <= {MAX_TAU}"
        )


def coset_alphabet(lat: DivisorLattice) -> tuple[Coset, ...]:
    return tuple(Coset(z, d) for d in lat.divisors for z in range(d))


def maec_to_dmc(eps: MaecDistribution) -> Dmc:
    """Transition matrix W(z + dZ | x) = eps_d when x = z mod d."""
    lat = eps.lattice
    _guard(lat.q, lat.tau)
    rows = {}
    for x in range(lat.q):
        rows[x] = {Coset(x % d, d): p for d, p in eps.items() if p}
    return Dmc(tuple(range(lat.q)), rows, eps.mode, coset_alphabet(lat))


def _same_input(w1: Dmc, w2: Dmc) -> int:
    q = len(w1.inputs)
    if w1.inputs != tuple(range(q)) or w2.inputs != w1.inputs:
        raise ValueError("both channels need input alphabet Z/qZ of the same q")
    if w1.mode != w2.mode:
        raise ValueError("mode mismatch")
    return q


def generic_minus(w1: Dmc, w2: Dmc, gamma: int | Unit) -> Dmc:
    """(W1 -_g W2)(y1, y2 | u1) = sum_{u2} W1(y1 | u1 + g u2) W2(y2 | u2) / q."""
    q = _same_input(w1, w2)
    g = make_unit(gamma, q).gamma
    inv_q = Fraction(1, q) if w1.mode == EXACT else 1.0 / q
    rows = {}
    for u1 in range(q):
        acc: dict = {}
        for u2 in range(q):
            r1 = w1.row((u1 + g * u2) % q)
            r2 = w2.row(u2)
            for y1, p1 in r1.items():
                for y2, p2 in r2.items():
                    key = (y1, y2)
                    acc[key] = acc.get(key, 0) + inv_q * p1 * p2
        rows[u1] = acc
    return Dmc(tuple(range(q)), rows, w1.mode)


def generic_plus(w1: Dmc, w2: Dmc, gamma: int | Unit) -> Dmc:
    """(W1 +_g W2)(y1, y2, u1 | u2) = W1(y1 | u1 + g u2) W2(y2 | u2) / q."""
    q = _same_input(w1, w2)
    g = make_unit(gamma, q).gamma
    inv_q = Fraction(1, q) if w1.mode == EXACT else 1.0 / q
    rows = {}
    for u2 in range(q):
        acc: dict = {}
        r2 = w2.row(u2)
        for u1 in range(q):
            r1 = w1.row((u1 + g * u2) % q)
            for y1, p1 in r1.items():
                for y2, p2 in r2.items():
                    acc[(y1, y2, u1)] = inv_q * p1 * p2
        rows[u2] = acc
    return Dmc(tuple(range(q)), rows, w1.mode)


def crt_solve(z1: int, d1: int, z2: int, d2: int) -> tuple[int, int] | None:
    """Least r >= 0 with r = z1 (mod d1), r = z2 (mod d2), returned as (r, lcm); None if none."""
    if d1 < 1 or d2 < 1:
        raise ValueError("moduli must be positive")
    g = math.gcd(d1, d2)
    if (z1 - z2) % g:
        return None
    lcm = d1 // g * d2
    m1, m2 = d1 // g, d2 // g
    # r = z1 + d1 * s with d1 * s = z2 - z1 (mod d2)  <=>  m1 * s = (z2 - z1) / g (mod m2)
    s = ((z2 - z1) // g) * pow(m1, -1, m2) % m2 if m2 > 1 else 0
    return (z1 + d1 * s) % lcm, lcm


def _pair_alphabet(lat: DivisorLattice) -> list[tuple[Coset, Coset]]:
    cos = coset_alphabet(lat)
    return [(a, b) for a in cos for b in cos]


def build_q1(lat: DivisorLattice, gamma: int | Unit) -> Dmc:
    """Deterministic map (z1 + d1Z, z2 + d2Z) -> (z1 - g z2) + gcd(d1, d2)Z."""
    _guard(lat.q, lat.tau)
    g = make_unit(gamma, lat.q).gamma
    rows = {}
    for y1, y2 in _pair_alphabet(lat):
        m = math.gcd(y1.d, y2.d)
        rows[(y1, y2)] = {Coset((y1.z - g * y2.z) % m, m): Fraction(1)}
    return Dmc(tuple(rows), rows, EXACT, coset_alphabet(lat))


def build_q2(eps: MaecDistribution, other: MaecDistribution, gamma: int | Unit) -> Dmc:
    """Randomised splitter from z + dZ back to coset pairs of the minus transform.

    Rows exist only where the minus-transform mass of d is positive.
    """
    lat = eps.lattice
    _guard(lat.q, lat.tau)
    g = make_unit(gamma, lat.q).gamma
    mt = minus_transform(eps, other)
    rows: dict = {}
    inputs = coset_alphabet(lat)
    for d, md in mt.items():
        if not md:
            continue
        for z in range(d):
            rows[Coset(z, d)] = {}
    for d1, e1 in eps.items():
        if not e1:
            continue
        for d2, e2 in other.items():
            if not e2:
                continue
            d = math.gcd(d1, d2)
            w = e1 * e2 / (mt[d] * (d1 // d * d2))
            for z1 in range(d1):
                for z2 in range(d2):
                    rows[Coset((z1 - g * z2) % d, d)][(Coset(z1, d1), Coset(z2, d2))] = w
    return Dmc(inputs, rows, eps.mode)


def _plus_r(z1: int, d1: int, z2: int, d2: int, u1: int, inv: int) -> tuple[int, int] | None:
    return crt_solve((inv * (z1 - u1)) % d1, d1, z2 % d2, d2)


def build_q3(lat: DivisorLattice, gamma: int | Unit) -> Dmc:
    """Deterministic map (z1 + d1Z, z2 + d2Z, u1) -> r + lcm(d1, d2)Z.

    Inputs violating z1 - g z2 = u1 (mod gcd) get an empty row.
    """
    _guard(lat.q, lat.tau)
    unit = make_unit(gamma, lat.q)
    g, inv, q = unit.gamma, unit.inverse, lat.q
    rows = {}
    for y1, y2 in _pair_alphabet(lat):
        m = math.gcd(y1.d, y2.d)
        for u1 in range(q):
            key = (y1, y2, u1)
            if (y1.z - g * y2.z - u1) % m:
                rows[key] = {}
                continue
            r, lcm = _plus_r(y1.z, y1.d, y2.z, y2.d, u1, inv)
            rows[key] = {Coset(r, lcm): Fraction(1)}
    return Dmc(tuple(rows), rows, EXACT, coset_alphabet(lat))


def build_q4(eps: MaecDistribution, other: MaecDistribution, gamma: int | Unit) -> Dmc:
    """Randomised splitter from z + dZ back to the plus-transform alphabet.

    Rows exist only where the plus-transform mass of d is positive.
    """
    lat = eps.lattice
    _guard(lat.q, lat.tau)
    unit = make_unit(gamma, lat.q)
    g, inv, q = unit.gamma, unit.inverse, lat.q
    pt = plus_transform(eps, other)
    rows: dict = {}
    for d, md in pt.items():
        if not md:
            continue
        for z in range(d):
            rows[Coset(z, d)] = {}
    for d1, e1 in eps.items():
        if not e1:
            continue
        for d2, e2 in other.items():
            if not e2:
                continue
            m = math.gcd(d1, d2)
            lcm = d1 // m * d2
            w = e1 * e2 / (q * pt[lcm])
            for z1 in range(d1):
                for z2 in range(d2):
                    for u1 in range(q):
                        if (z1 - g * z2 - u1) % m:
                            continue
                        r, _ = _plus_r(z1, d1, z2, d2, u1, inv)
                        rows[Coset(r, lcm)][(Coset(z1, d1), Coset(z2, d2), u1)] = w
    return Dmc(coset_alphabet(lat), rows, eps.mode)


def compose(w: Dmc, qch: Dmc) -> Dmc:
    """The channel x -> sum_y W(y | x) Q(z | y)."""
    if w.mode != qch.mode:
        raise ValueError("mode mismatch")
    known = set(qch.inputs)
    rows = {}
    for x in w.inputs:
        acc: dict = {}
        for y, p in w.row(x).items():
            if not p:
                continue
            if y not in known:
                raise ValueError(f"output {y!r} is not an input of the intermediate channel")
            r = qch.row(y)
            if not r:
                raise ValueError(f"intermediate channel has no row for reachable output {y!r}")
            for z, s in r.items():
                acc[z] = acc.get(z, 0) + p * s
        rows[x] = acc
    return Dmc(w.inputs, rows, w.mode, qch.declared_outputs)


def max_deviation(w: Dmc, v: Dmc):
    """Largest |W(y|x) - V(y|x)| over all inputs and labels (missing entries are 0)."""
    if tuple(w.inputs) != tuple(v.inputs):
        raise ValueError("input alphabets differ")
    worst = _zero(w.mode)
    for x in w.inputs:
        a, b = w.row(x), v.row(x)
        for y in set(a) | set(b):
            diff = abs(a.get(y, 0) - b.get(y, 0))
            if diff > worst:
                worst = diff
    return worst


def channels_equal(w: Dmc, v: Dmc, tol: float = 0.0) -> bool:
    return max_deviation(w, v) <= tol


# ---------------------------------------------------------------- brute force


def output_distribution(w: Dmc) -> dict:
    """P(y) under the uniform input."""
    n = len(w.inputs)
    inv = Fraction(1, n) if w.mode == EXACT else 1.0 / n
    out: dict = {}
    for x in w.inputs:
        for y, p in w.row(x).items():
            out[y] = out.get(y, 0) + inv * p
    return out


def backward_channel(w: Dmc) -> Dmc:
    """P(x | y) under the uniform input, defined on outputs with positive marginal."""
    n = len(w.inputs)
    py = output_distribution(w)
    inv = Fraction(1, n) if w.mode == EXACT else 1.0 / n
    rows: dict = {y: {} for y, p in py.items() if p}
    for x in w.inputs:
        for y, p in w.row(x).items():
            if p:
                rows[y][x] = inv * p / py[y]
    return Dmc(tuple(rows), rows, w.mode, tuple(w.inputs))


def _alpha(alpha) -> float:
    if isinstance(alpha, str):
        return math.inf if alpha.strip().lower() in ("inf", "infinity", "oo") else float(Fraction(alpha))
    return float(alpha)


def dmc_alpha_capacity(w: Dmc, alpha, base: str | float = "q") -> float:
    """Brute-force alpha-symmetric capacity under the uniform input."""
    a = _alpha(alpha)
    if math.isnan(a) or a < 0:
        raise ValueError(f"alpha must lie in [0, inf], got {alpha!r}")
    mat, _ = w.dense()
    n = mat.shape[0]
    if a == 0:
        support = (mat > 0).sum(axis=0)
        nats = float(np.min(np.log(n / support)))
    elif a == 1:
        py = mat.mean(axis=0)
        mask = mat > 0
        ratio = np.where(mask, mat, 1.0) / py[None, :]
        nats = math.fsum((mat[mask] * np.log(ratio[mask])).tolist()) / n
    elif math.isinf(a):
        nats = math.log(math.fsum(mat.max(axis=0).tolist()))
    else:
        inner = (mat**a).mean(axis=0) ** (1.0 / a)
        nats = a / (a - 1.0) * math.log(math.fsum(inner.tolist()))
    return nats / log_scale(base, n)


def dmc_bhattacharyya(w: Dmc) -> float:
    """Average over ordered pairs x != x' of sum_y sqrt(W(y|x) W(y|x'))."""
    mat, _ = w.dense()
    n = mat.shape[0]
    root = np.sqrt(mat)
    gram = root @ root.T
    off = gram.sum() - np.trace(gram)
    return float(off / (n * (n - 1)))


def dmc_error_prob(w: Dmc):
    """1 - sum_y max_x W(y|x) / n (MAP error under the uniform input)."""
    n = len(w.inputs)
    best: dict = {}
    for x in w.inputs:
        for y, p in w.row(x).items():
            if p > best.get(y, 0):
                best[y] = p
    if w.mode == EXACT:
        return 1 - sum(best.values(), Fraction(0)) / n
    return 1.0 - math.fsum(best.values()) / n


def dmc_parameters(w: Dmc, alpha=1, base: str | float = "q") -> ChannelParameters:
    return ChannelParameters(dmc_alpha_capacity(w, alpha, base), dmc_bhattacharyya(w), dmc_error_prob(w))


# ---------------------------------------------------------------- verification


@dataclass
class CheckResult:
    name: str
    mode: str
    max_deviation: object
    passed: bool

    def to_json_obj(self) -> dict:
        dev = self.max_deviation
        dev = format_scalar(dev) if isinstance(dev, Fraction) else float(dev)
        return {"name": self.name, "mode": self.mode, "max_deviation": dev, "pass": self.passed}


CAPACITY_TOL = 1e-12


def verify_theorem1(eps: MaecDistribution, other: MaecDistribution, gamma: int | Unit) -> list[CheckResult]:
    """All four intermediate-channel identities plus brute-force capacity checks."""
    if eps.mode != EXACT or other.mode != EXACT:
        raise ValueError("the constructive check runs in exact mode")
    lat = eps.lattice
    unit = make_unit(gamma, lat.q)
    tag = f"gamma={unit.gamma}"
    v1, v2 = maec_to_dmc(eps), maec_to_dmc(other)
    wm, wp = generic_minus(v1, v2, unit), generic_plus(v1, v2, unit)
    em, ep = minus_transform(eps, other), plus_transform(eps, other)
    vm, vp = maec_to_dmc(em), maec_to_dmc(ep)
    out = []
    pairs = [
        ("minus_Q1", compose(wm, build_q1(lat, unit)), vm),
        ("minus_Q2", compose(vm, build_q2(eps, other, unit)), wm),
        ("plus_Q3", compose(wp, build_q3(lat, unit)), vp),
        ("plus_Q4", compose(vp, build_q4(eps, other, unit)), wp),
    ]
    for name, got, want in pairs:
        dev = max_deviation(got, want)
        out.append(CheckResult(f"{name} {tag}", EXACT, dev, dev == 0))
    i_m = dmc_alpha_capacity(wm, 1, "e")
    i_p = dmc_alpha_capacity(wp, 1, "e")
    c_m = alpha_capacity(em.to_float(), 1, "e")
    c_p = alpha_capacity(ep.to_float(), 1, "e")
    i_1 = alpha_capacity(eps.to_float(), 1, "e")
    i_2 = alpha_capacity(other.to_float(), 1, "e")
    for name, dev in (
        ("capacity_minus", abs(i_m - c_m)),
        ("capacity_plus", abs(i_p - c_p)),
        ("capacity_conservation", abs(i_m + i_p - i_1 - i_2)),
    ):
        out.append(CheckResult(f"{name} {tag}", FLOAT, dev, dev <= CAPACITY_TOL))
    return out


def verify_suite(q: int, trials: int, seed: int) -> list[CheckResult]:
    """Random rational pairs, every unit; also the closed-form capacity grid per trial."""
    from .lattice import lattice_for

    lat = lattice_for(q)
    _guard(lat.q, lat.tau)
    rng = random.Random(seed)
    worst: dict[str, CheckResult] = {}
    for _ in range(trials):
        eps = random_distribution(lat, rng)
        other = random_distribution(lat, rng)
        results = [r for u in units_of(q) for r in verify_theorem1(eps, other, u)]
        w = maec_to_dmc(eps)
        for a in ("0", "1/2", "1", "2", "inf"):
            dev = abs(dmc_alpha_capacity(w, a, "e") - alpha_capacity(eps.to_float(), a, "e"))
            results.append(CheckResult(f"closed_form alpha={a}", FLOAT, dev, dev <= CAPACITY_TOL))
        for r in results:
            key = r.name.split(" ")[0] + (" " + r.name.split(" ", 1)[1] if r.name.startswith("closed") else "")
            cur = worst.get(key)
            if cur is None:
                worst[key] = CheckResult(key, r.mode, r.max_deviation, r.passed)
            else:
                cur.passed = cur.passed and r.passed
                if r.max_deviation > cur.max_deviation:
                    cur.max_deviation = r.max_deviation
    return list(worst.values())
