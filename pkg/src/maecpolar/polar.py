"""Polar-transform recursions of MAECs and statistics over branch ensembles.

The minus transform convolves two vectors over gcd and the plus transform
over lcm:

    minus[d] = sum_{gcd(d1, d2) = d} eps[d1] * eps2[d2]
    plus[d]  = sum_{lcm(d1, d2) = d} eps[d1] * eps2[d2]

Branch sequences are tuples of booleans, ``False`` for minus and ``True`` for
plus.  Prime indices ``i, j`` in the aggregate functions are 1-based, as are
the thresholds ``a, b`` (a threshold above r_i simply gives an empty region).
"""

from __future__ import annotations

import math
from collections.abc import Callable, Iterable, Iterator, Sequence
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from . import _kernels
from .channel import EXACT, FLOAT, MaecDistribution, ModeError, same_space
from .lattice import DivisorLattice

DEFAULT_GUARD = 26

Branch = tuple[bool, ...]


# ---------------------------------------------------------------- branches


def parse_branch(s: str | Iterable) -> Branch:
    """Accept ``"-+-"``, ``"minus,plus"``, booleans or 0/1 digits."""
    if isinstance(s, str):
        text = s.strip()
        if "," in text or text in ("minus", "plus"):
            items = [t.strip() for t in text.split(",") if t.strip()]
        else:
            items = list(text)
    else:
        items = list(s)
    out = []
    for t in items:
        if t in ("-", "minus", 0, False, "0"):
            out.append(False)
        elif t in ("+", "plus", 1, True, "1"):
            out.append(True)
        else:
            raise ValueError(f"unrecognised sign {t!r}")
    return tuple(out)


def branch_weight(s: str | Iterable) -> int:
    """Binary expansion of the branch, minus = 0, plus = 1, last sign least significant."""
    w = 0
    for bit in parse_branch(s):
        w = 2 * w + int(bit)
    return w


def branch_from_weight(w: int, n: int) -> Branch:
    if not 0 <= w < (1 << n):
        raise ValueError(f"weight {w} out of range for n={n}")
    return tuple(bool((w >> (n - 1 - k)) & 1) for k in range(n))


def branch_str(s: Branch) -> str:
    return "".join("+" if b else "-" for b in s)


# ---------------------------------------------------------------- transforms


def _gcd_lists(lat: DivisorLattice) -> tuple[list[list[int]], list[list[int]]]:
    return lat.gcd_table.tolist(), lat.lcm_table.tolist()


def _convolve_exact(a: Sequence, b: Sequence, tab: list[list[int]]) -> list:
    out = [0] * len(a)
    for i, ai in enumerate(a):
        if not ai:
            continue
        row = tab[i]
        for j, bj in enumerate(b):
            if bj:
                out[row[j]] += ai * bj
    return out


def _transform(eps: MaecDistribution, other: MaecDistribution | None, plus: bool) -> MaecDistribution:
    other = eps if other is None else other
    same_space(eps, other)
    lat = eps.lattice
    if eps.mode == EXACT:
        tab = (lat.lcm_table if plus else lat.gcd_table).tolist()
        out = _convolve_exact(eps.masses, other.masses, tab)
        return MaecDistribution(lat, tuple(Fraction(x) for x in out), EXACT)
    tab = lat.lcm_table if plus else lat.gcd_table
    a, b = eps.as_array(), other.as_array()
    out = np.zeros(lat.tau)
    np.add.at(out, tab.ravel(), np.outer(a, b).ravel())
    return MaecDistribution(lat, tuple(float(x) for x in out), FLOAT)


def minus_transform(eps: MaecDistribution, other: MaecDistribution | None = None) -> MaecDistribution:
    """gcd convolution of ``eps`` and ``other`` (``other`` defaults to ``eps``)."""
    return _transform(eps, other, plus=False)


def plus_transform(eps: MaecDistribution, other: MaecDistribution | None = None) -> MaecDistribution:
    """lcm convolution of ``eps`` and ``other`` (``other`` defaults to ``eps``)."""
    return _transform(eps, other, plus=True)


def evolve(eps: MaecDistribution, s: str | Iterable) -> MaecDistribution:
    """Apply the stationary transforms in the order given by ``s``."""
    signs = parse_branch(s)
    if eps.mode == FLOAT:
        lat = eps.lattice
        v = _kernels.evolve_batch(eps.as_array(), np.array([signs], dtype=bool).reshape(1, len(signs)),
                                  lat.gcd_table, lat.lcm_table, backend="numpy")[0]
        return MaecDistribution(lat, tuple(float(x) for x in v), FLOAT)
    nums, den = _to_integers(eps.masses)
    gcd_t, lcm_t = _gcd_lists(eps.lattice)
    for bit in signs:
        nums = _convolve_exact(nums, nums, lcm_t if bit else gcd_t)
        den = den * den
    return MaecDistribution(eps.lattice, tuple(Fraction(x, den) for x in nums), EXACT)


def _to_integers(masses: Sequence[Fraction]) -> tuple[list[int], int]:
    den = math.lcm(*(x.denominator for x in masses))
    return [x.numerator * (den // x.denominator) for x in masses], den


# ---------------------------------------------------------------- ensembles


@dataclass
class PolarEnsemble:
    """Statistics of the 2**n branch vectors (or of N sampled branches).

    ``mean`` is mu^(n) when ``kind == "enumerate"`` and its sample estimate
    otherwise.  ``near_one[delta][pos]`` counts branches with mass above
    1 - delta at divisor position ``pos``; ``near_zero`` counts those below
    delta.  ``scores`` holds each branch's symmetric capacity in nats, indexed
    by branch weight (enumeration) or sample index (sampling).
    """

    lattice: DivisorLattice
    step: int
    kind: str
    mode: str
    size: int
    mean: tuple
    near_one: dict
    near_zero: dict
    scores: np.ndarray | None = None
    level_means: tuple | None = None
    std_err: tuple | None = None
    sample_seed: int | None = None
    branches: np.ndarray | None = field(default=None, repr=False)

    @property
    def deltas(self) -> tuple:
        return tuple(self.near_one)

    def mu(self, d: int):
        return self.mean[self.lattice.index_of[d]]


def _check_delta(delta: float) -> None:
    if not 0 < delta < 0.5:
        raise ValueError(f"delta must lie in (0, 1/2), got {delta!r}")


def _log_weights(lat: DivisorLattice) -> np.ndarray:
    return np.array([math.log(d) for d in lat.divisors])


def walk_exact(eps: MaecDistribution, n: int) -> Iterator[tuple[int, int, list[int], int]]:
    """Depth-first walk of every node up to depth n, minus child first.

    Yields ``(depth, weight, numerators, denominator)``; the node's vector is
    ``numerators / denominator``.  Integer numerators over the shared
    denominator D**(2**depth) avoid rational normalisation at every step.
    """
    if eps.mode != EXACT:
        raise ModeError("walk_exact needs an exact distribution")
    nums, den = _to_integers(eps.masses)
    gcd_t, lcm_t = _gcd_lists(eps.lattice)
    stack = [(0, 0, nums, den)]
    while stack:
        depth, w, v, dd = stack.pop()
        yield depth, w, v, dd
        if depth < n:
            d2 = dd * dd
            stack.append((depth + 1, 2 * w + 1, _convolve_exact(v, v, lcm_t), d2))
            stack.append((depth + 1, 2 * w, _convolve_exact(v, v, gcd_t), d2))


def enumerate_branches(
    eps: MaecDistribution,
    n: int,
    visitor: Callable[[int, MaecDistribution], None] | None = None,
    deltas: Iterable[float] = (0.01,),
    keep_scores: bool = False,
    guard: int = DEFAULT_GUARD,
    allow_large: bool = False,
    backend: str | None = None,
) -> PolarEnsemble:
    """Visit all 2**n branch vectors depth-first, minus before plus.

    Exact inputs give exact ``mean`` and ``level_means`` (mu^(k) for every
    k <= n).  Float inputs run the compiled kernel unless ``visitor`` is
    given, in which case the pure Python walk calls ``visitor(weight, vec)``
    on each leaf in branch-weight order.
    """
    if n < 0:
        raise ValueError("n must be nonnegative")
    if n > guard and not allow_large:
        raise ValueError(f"n={n} exceeds the enumeration guard {guard}; pass allow_large=True")
    deltas = tuple(float(x) for x in deltas)
    for x in deltas:
        _check_delta(x)
    lat = eps.lattice
    tau = lat.tau
    if eps.mode == FLOAT and visitor is None:
        total, one, zero, scores = _kernels.enumerate_stats(
            eps.as_array(), n, lat.gcd_table, lat.lcm_table, np.array(deltas),
            _log_weights(lat), keep_scores, backend,
        )
        size = 1 << n
        return PolarEnsemble(
            lat, n, "enumerate", FLOAT, size, tuple(float(x) / size for x in total),
            {dl: tuple(int(c) for c in one[k]) for k, dl in enumerate(deltas)},
            {dl: tuple(int(c) for c in zero[k]) for k, dl in enumerate(deltas)},
            scores if keep_scores else None,
        )
    if eps.mode == FLOAT:
        return _enumerate_float_python(eps, n, visitor, deltas, keep_scores)
    return _enumerate_exact(eps, n, visitor, deltas, keep_scores)


def _enumerate_exact(eps, n, visitor, deltas, keep_scores) -> PolarEnsemble:
    lat = eps.lattice
    tau = lat.tau
    sums = [[0] * tau for _ in range(n + 1)]
    fr = [Fraction(x) for x in deltas]
    one = {x: [0] * tau for x in deltas}
    zero = {x: [0] * tau for x in deltas}
    scores = np.empty(1 << n) if keep_scores else None
    logs = [math.log(d) for d in lat.divisors]
    for depth, w, v, den in walk_exact(eps, n):
        s = sums[depth]
        for p in range(tau):
            s[p] += v[p]
        if depth != n:
            continue
        for x, f in zip(deltas, fr):
            hi = (f.denominator - f.numerator) * den
            lo = f.numerator * den
            o, z = one[x], zero[x]
            for p in range(tau):
                scaled = v[p] * f.denominator
                if scaled > hi:
                    o[p] += 1
                if scaled < lo:
                    z[p] += 1
        if keep_scores:
            scores[w] = math.fsum(vp / den * lg for vp, lg in zip(v, logs))
        if visitor is not None:
            visitor(w, MaecDistribution(lat, tuple(Fraction(x, den) for x in v), EXACT))
    nums, d0 = _to_integers(eps.masses)
    level = []
    for k in range(n + 1):
        den = d0 ** (1 << k) * (1 << k)
        level.append(tuple(Fraction(x, den) for x in sums[k]))
    return PolarEnsemble(
        lat, n, "enumerate", EXACT, 1 << n, level[n],
        {x: tuple(c) for x, c in one.items()}, {x: tuple(c) for x, c in zero.items()},
        scores, tuple(level),
    )


def _enumerate_float_python(eps, n, visitor, deltas, keep_scores) -> PolarEnsemble:
    lat = eps.lattice
    tau = lat.tau
    total = np.zeros(tau)
    one = {x: np.zeros(tau, dtype=np.int64) for x in deltas}
    zero = {x: np.zeros(tau, dtype=np.int64) for x in deltas}
    scores = np.empty(1 << n) if keep_scores else None
    logs = _log_weights(lat)

    def rec(vec: MaecDistribution, depth: int, w: int) -> None:
        if depth == n:
            a = vec.as_array()
            total[:] += a
            for x in deltas:
                one[x] += a > 1.0 - x
                zero[x] += a < x
            if keep_scores:
                scores[w] = float(a @ logs)
            visitor(w, vec)
            return
        rec(minus_transform(vec), depth + 1, 2 * w)
        rec(plus_transform(vec), depth + 1, 2 * w + 1)

    rec(eps, 0, 0)
    size = 1 << n
    return PolarEnsemble(
        lat, n, "enumerate", FLOAT, size, tuple(float(x) / size for x in total),
        {x: tuple(int(c) for c in one[x]) for x in deltas},
        {x: tuple(int(c) for c in zero[x]) for x in deltas},
        scores,
    )


def sample_signs(seed: int, start: int, count: int, n: int) -> np.ndarray:
    """Sign matrix for samples ``start .. start+count-1``.

    Sample ``i`` draws its bits from a Philox generator keyed by ``seed`` at
    counter ``i``, so any slice of the sample index range can be produced
    independently and in any order.
    """
    words = max(1, -(-n // 64))
    out = np.empty((count, n), dtype=bool)
    shifts = np.arange(64, dtype=np.uint64)
    for r in range(count):
        bg = np.random.Philox(key=seed, counter=start + r)
        raw = bg.random_raw(words).astype(np.uint64)
        bits = ((raw[:, None] >> shifts) & np.uint64(1)).astype(bool).ravel()
        out[r] = bits[:n]
    return out


def sample(
    eps: MaecDistribution,
    n: int,
    n_samples: int,
    seed: int,
    deltas: Iterable[float] = (0.01,),
    keep_scores: bool = False,
    backend: str | None = None,
) -> PolarEnsemble:
    """Monte Carlo estimate of mu^(n) from uniformly drawn branches."""
    if n_samples < 1:
        raise ValueError("need at least one sample")
    if n < 0:
        raise ValueError("n must be nonnegative")
    deltas = tuple(float(x) for x in deltas)
    for x in deltas:
        _check_delta(x)
    lat = eps.lattice
    signs = sample_signs(seed, 0, n_samples, n)
    if eps.mode == EXACT:
        rows = [evolve(eps, tuple(row)) for row in signs]
        vecs = np.array([[float(x) for x in r.masses] for r in rows])
        mean = tuple(sum((r.masses[p] for r in rows), Fraction(0)) / n_samples for p in range(lat.tau))
    else:
        vecs = _kernels.evolve_batch(eps.as_array(), signs, lat.gcd_table, lat.lcm_table, backend)
        mean = tuple(float(x) for x in vecs.mean(axis=0))
    if n_samples > 1:
        se = tuple(float(x) for x in vecs.std(axis=0, ddof=1) / math.sqrt(n_samples))
    else:
        se = tuple(math.inf for _ in range(lat.tau))
    one = {x: tuple(int(c) for c in (vecs > 1.0 - x).sum(axis=0)) for x in deltas}
    zero = {x: tuple(int(c) for c in (vecs < x).sum(axis=0)) for x in deltas}
    scores = vecs @ _log_weights(lat) if keep_scores else None
    weights = np.array([branch_weight(row) for row in signs], dtype=np.int64) if n <= 62 else None
    return PolarEnsemble(lat, n, "sample", eps.mode, n_samples, mean, one, zero, scores,
                         std_err=se, sample_seed=seed, branches=weights)


def proportions(ens: PolarEnsemble, d: int, delta: float) -> tuple[float, float, float]:
    """Fractions of branches with eps_d above 1 - delta, below delta, and between."""
    _check_delta(delta)
    key = next((x for x in ens.near_one if math.isclose(x, delta, rel_tol=0, abs_tol=1e-15)), None)
    if key is None:
        raise ValueError(f"delta {delta} was not tallied; available: {ens.deltas}")
    p = ens.lattice.index_of[d]
    hi = ens.near_one[key][p] / ens.size
    lo = ens.near_zero[key][p] / ens.size
    return hi, lo, 1.0 - hi - lo


# ---------------------------------------------------------------- aggregates


@dataclass(frozen=True)
class AggregateQuad:
    theta: object
    lam: object
    rho: object
    beta: object

    def as_tuple(self) -> tuple:
        return self.theta, self.lam, self.rho, self.beta


@dataclass(frozen=True)
class PrimeTailPair:
    T: object
    B: object


def _check_pair(lat: DivisorLattice, i: int, j: int, a: int, b: int) -> None:
    m = lat.m
    if not (1 <= i <= m and 1 <= j <= m):
        raise IndexError(f"prime indices must lie in 1..{m}")
    if i >= j:
        raise ValueError("aggregates need i < j")
    if a < 1 or b < 1:
        raise ValueError("thresholds must be at least 1")


def aggregates_of(lat: DivisorLattice, values: Sequence, i: int, j: int, a: int, b: int) -> tuple:
    """Quadrant sums of ``values`` (indexed by divisor position) around (a, b)."""
    _check_pair(lat, i, j, a, b)
    th = la = rh = be = 0
    for t, v in zip(lat.exponents, values):
        hi_i = t[i - 1] >= a
        hi_j = t[j - 1] >= b
        if hi_i and hi_j:
            th += v
        elif hi_i:
            la += v
        elif hi_j:
            rh += v
        else:
            be += v
    return th, la, rh, be


def aggregates(eps: MaecDistribution, i: int, j: int, a: int, b: int) -> AggregateQuad:
    vals = aggregates_of(eps.lattice, eps.masses, i, j, a, b)
    if eps.mode == EXACT:
        vals = tuple(Fraction(v) for v in vals)
    else:
        vals = tuple(float(v) for v in vals)
    return AggregateQuad(*vals)


def quad_step(quad: AggregateQuad | tuple, plus: bool) -> AggregateQuad:
    """One-step recursion of (theta, lambda, rho, beta) under minus or plus."""
    th, la, rh, be = quad.as_tuple() if isinstance(quad, AggregateQuad) else quad
    if plus:
        return AggregateQuad(th * (2 - th) + 2 * la * rh, la * (la + 2 * be), rh * (rh + 2 * be), be * be)
    return AggregateQuad(th * th, la * (la + 2 * th), rh * (rh + 2 * th), be * (2 - be) + 2 * la * rh)


def prime_tail(eps: MaecDistribution, a: int) -> PrimeTailPair:
    """T(a) = sum of eps_{p^i} for i >= a and B(a) = 1 - T(a); q must be a prime power."""
    lat = eps.lattice
    if lat.m != 1:
        raise ValueError(f"q={lat.q} is not a prime power")
    if a < 1:
        raise ValueError("threshold must be at least 1")
    zero = Fraction(0) if eps.mode == EXACT else 0.0
    top = sum((x for t, x in zip(lat.exponents, eps.masses) if t[0] >= a), zero)
    bot = sum((x for t, x in zip(lat.exponents, eps.masses) if t[0] < a), zero)
    return PrimeTailPair(top, bot)


def tail_step(pair: PrimeTailPair, plus: bool) -> PrimeTailPair:
    T, B = pair.T, pair.B
    if plus:
        return PrimeTailPair(2 * B * T + T * T, B * B)
    return PrimeTailPair(T * T, 2 * B * T + B * B)
