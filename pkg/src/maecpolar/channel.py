"""MAEC probability vectors and their closed-form channel parameters.

A modular arithmetic erasure channel on Z/qZ reveals its input modulo a
random divisor d of q, chosen with probability eps_d.  The whole channel is
the vector ``eps`` indexed by divisor position.

Two scalar modes exist.  ``exact`` stores :class:`fractions.Fraction` masses
and every algebraic operation stays rational.  ``float`` stores Python floats.
The two are never mixed inside one computation.
"""

from __future__ import annotations

import json
import math
import random
from collections.abc import Iterable, Mapping, Sequence
from dataclasses import dataclass
from fractions import Fraction
from numbers import Rational
from pathlib import Path

import numpy as np

from .lattice import DivisorLattice, lattice_for

try:
    import tomllib
except ModuleNotFoundError:  # Python 3.10
    import tomli as tomllib

EXACT = "exact"
FLOAT = "float"
MODES = (EXACT, FLOAT)
FLOAT_TOL = 1e-12


class ModeError(ValueError):
    """Raised when exact and float scalars meet in one computation."""


@dataclass(frozen=True, eq=False)
class MaecDistribution:
    lattice: DivisorLattice
    masses: tuple
    mode: str

    @property
    def q(self) -> int:
        return self.lattice.q

    @property
    def divisors(self) -> tuple[int, ...]:
        return self.lattice.divisors

    def __getitem__(self, d: int):
        return self.masses[self.lattice.index_of[d]]

    def __len__(self) -> int:
        return len(self.masses)

    def __iter__(self):
        return iter(self.masses)

    def items(self):
        return zip(self.lattice.divisors, self.masses)

    def as_array(self) -> np.ndarray:
        return np.array([float(x) for x in self.masses], dtype=np.float64)

    def to_float(self) -> MaecDistribution:
        if self.mode == FLOAT:
            return self
        return MaecDistribution(self.lattice, tuple(float(x) for x in self.masses), FLOAT)

    def __eq__(self, other: object) -> bool:
        return (
            isinstance(other, MaecDistribution)
            and self.lattice == other.lattice
            and self.mode == other.mode
            and self.masses == other.masses
        )

    def __hash__(self) -> int:
        return hash((self.lattice, self.mode, self.masses))

    def __repr__(self) -> str:
        body = ", ".join(f"{d}: {_fmt(x)}" for d, x in self.items())
        return f"MaecDistribution(q={self.q}, {self.mode}, {{{body}}})"


def _fmt(x) -> str:
    return str(x) if isinstance(x, Fraction) else repr(x)


def _coerce(x, mode: str):
    if isinstance(x, bool):
        raise TypeError("booleans are not masses")
    if mode == EXACT:
        if isinstance(x, (float, np.floating)):
            raise ModeError("float mass given in exact mode")
        if isinstance(x, (int, np.integer)):
            return Fraction(int(x))
        if isinstance(x, Rational):
            return Fraction(x)
        raise TypeError(f"unsupported mass type {type(x).__name__}")
    if isinstance(x, (int, float, np.integer, np.floating, Rational)):
        return float(x)
    raise TypeError(f"unsupported mass type {type(x).__name__}")


def _infer_mode(values: Iterable) -> str:
    return FLOAT if any(isinstance(v, (float, np.floating)) for v in values) else EXACT


def make_distribution(
    lattice: DivisorLattice | int,
    masses: Sequence | Mapping[int, object],
    mode: str | None = None,
) -> MaecDistribution:
    """Validate masses and wrap them as an MAEC.

    ``masses`` is either one entry per divisor position or a mapping from
    divisor to mass (missing divisors are 0).  The mode is inferred from the
    entries when not given: any float makes it ``float``.
    """
    if isinstance(lattice, int):
        lattice = lattice_for(lattice)
    if isinstance(masses, Mapping):
        unknown = [d for d in masses if d not in lattice.index_of]
        if unknown:
            raise ValueError(f"{unknown[0]} is not a divisor of {lattice.q}")
        raw = [masses.get(d, 0) for d in lattice.divisors]
    else:
        raw = list(masses)
        if len(raw) != lattice.tau:
            raise ValueError(f"expected {lattice.tau} masses, got {len(raw)}")
    if mode is None:
        mode = _infer_mode(raw)
    if mode not in MODES:
        raise ValueError(f"unknown mode {mode!r}")
    vals = tuple(_coerce(x, mode) for x in raw)
    if any(v < 0 for v in vals):
        raise ValueError("masses must be nonnegative")
    if mode == EXACT:
        if sum(vals) != 1:
            raise ValueError(f"masses sum to {sum(vals)}, not 1")
    else:
        if any(not math.isfinite(v) for v in vals):
            raise ValueError("masses must be finite")
        if abs(math.fsum(vals) - 1.0) > FLOAT_TOL:
            raise ValueError(f"masses sum to {math.fsum(vals)!r}, not 1")
    return MaecDistribution(lattice, vals, mode)


def unit_vector(lattice: DivisorLattice | int, d: int, mode: str = EXACT) -> MaecDistribution:
    if isinstance(lattice, int):
        lattice = lattice_for(lattice)
    return make_distribution(lattice, {d: 1}, mode)


def uniform(lattice: DivisorLattice | int, mode: str = EXACT) -> MaecDistribution:
    if isinstance(lattice, int):
        lattice = lattice_for(lattice)
    w = Fraction(1, lattice.tau)
    return make_distribution(lattice, [w] * lattice.tau, mode)


def random_distribution(
    lattice: DivisorLattice | int,
    rng: random.Random,
    mode: str = EXACT,
    max_weight: int = 12,
    zero_prob: float = 0.2,
) -> MaecDistribution:
    """Random rational vector: integer weights in [0, max_weight], some forced to 0."""
    if isinstance(lattice, int):
        lattice = lattice_for(lattice)
    while True:
        w = [0 if rng.random() < zero_prob else rng.randint(0, max_weight) for _ in range(lattice.tau)]
        total = sum(w)
        if total:
            break
    return make_distribution(lattice, [Fraction(x, total) for x in w], mode)


def same_space(a: MaecDistribution, b: MaecDistribution) -> None:
    if a.lattice != b.lattice:
        raise ValueError(f"lattice mismatch: q={a.q} vs q={b.q}")
    if a.mode != b.mode:
        raise ModeError(f"mode mismatch: {a.mode} vs {b.mode}")


# ---------------------------------------------------------------- logarithms


def log_scale(base: str | float, q: int) -> float:
    """Natural log of the requested base (``"q"``, ``"e"``, ``"2"`` or a number > 1)."""
    if base == "q":
        return math.log(q)
    if base == "e":
        return 1.0
    b = float(base)
    if not b > 1.0:
        raise ValueError(f"log base must exceed 1, got {base!r}")
    return math.log(b)


@dataclass(frozen=True)
class ExactLog:
    """A deferred logarithm ``sum_i c_i * log(a_i)`` with rational c_i, a_i.

    Exact-mode capacities return this instead of a float so the rational
    content survives until a base is chosen.
    """

    terms: tuple[tuple[Fraction, Fraction], ...]
    base: str | float = "q"
    q: int = 0

    def nats(self) -> float:
        return math.fsum(float(c) * math.log(a) for c, a in self.terms)

    def value(self, base: str | float | None = None) -> float:
        return self.nats() / log_scale(self.base if base is None else base, self.q)

    def __float__(self) -> float:
        return self.value()

    def __str__(self) -> str:
        if not self.terms:
            return "0"
        parts = []
        for c, a in self.terms:
            parts.append(f"log({a})" if c == 1 else f"{c}*log({a})")
        b = self.q if self.base == "q" else self.base
        return f"({' + '.join(parts)}) / log({b})" if b != "e" else " + ".join(parts)


# ---------------------------------------------------------------- parameters

INF = math.inf


def _alpha_value(alpha) -> float | Fraction:
    if isinstance(alpha, str):
        a = alpha.strip().lower()
        if a in ("inf", "infinity", "oo"):
            return INF
        return Fraction(a)
    if isinstance(alpha, float) and math.isinf(alpha):
        return alpha
    if isinstance(alpha, (int, Fraction)):
        return Fraction(alpha)
    return float(alpha)


def alpha_capacity(eps: MaecDistribution, alpha, base: str | float = "q"):
    """Closed-form alpha-symmetric capacity of the MAEC.

    Float mode returns a float in the requested base.  Exact mode accepts only
    alpha in {0, 1, inf} and returns an :class:`ExactLog`.
    """
    a = _alpha_value(alpha)
    if isinstance(a, float) and math.isnan(a) or a < 0:
        raise ValueError(f"alpha must lie in [0, inf], got {alpha!r}")
    pairs = [(d, x) for d, x in eps.items()]
    if eps.mode == EXACT:
        if a == 0:
            dmin = min(d for d, x in pairs if x > 0)
            terms = ((Fraction(1), Fraction(dmin)),) if dmin > 1 else ()
        elif a == 1:
            terms = tuple((x, Fraction(d)) for d, x in pairs if x > 0 and d > 1)
        elif a == INF:
            arg = sum((d * x for d, x in pairs), Fraction(0))
            terms = ((Fraction(1), arg),) if arg != 1 else ()
        else:
            raise ModeError("exact mode supports alpha in {0, 1, inf} only; convert with to_float()")
        return ExactLog(terms, base, eps.q)
    scale = log_scale(base, eps.q)
    if a == 0:
        nats = math.log(min(d for d, x in pairs if x > 0))
    elif a == 1:
        nats = math.fsum(x * math.log(d) for d, x in pairs)
    elif a == INF:
        nats = math.log(math.fsum(d * x for d, x in pairs))
    else:
        af = float(a)
        s = math.fsum(d ** ((af - 1.0) / af) * x for d, x in pairs)
        nats = af / (af - 1.0) * math.log(s)
    return nats / scale


def bhattacharyya(eps: MaecDistribution):
    """Z = (sum_d (q/d) eps_d - 1) / (q - 1)."""
    q = eps.q
    if eps.mode == EXACT:
        return (sum((Fraction(q, d) * x for d, x in eps.items()), Fraction(0)) - 1) / (q - 1)
    return (math.fsum(q / d * x for d, x in eps.items()) - 1.0) / (q - 1)


def error_prob(eps: MaecDistribution):
    """P_e = 1 - sum_d (d/q) eps_d."""
    q = eps.q
    if eps.mode == EXACT:
        return 1 - sum((Fraction(d, q) * x for d, x in eps.items()), Fraction(0))
    return 1.0 - math.fsum(d / q * x for d, x in eps.items())


@dataclass(frozen=True)
class ChannelParameters:
    alpha_capacity: object
    bhattacharyya: object
    error_prob: object


def channel_parameters(eps: MaecDistribution, alpha=1, base: str | float = "q") -> ChannelParameters:
    return ChannelParameters(alpha_capacity(eps, alpha, base), bhattacharyya(eps), error_prob(eps))


def reduce_mod(eps: MaecDistribution, d: int) -> MaecDistribution:
    """MAEC seen by the input coset modulo d.

    An output coset z + d2 Z fixes the input modulo gcd(d2, d), so the mass of
    d2 moves to divisor gcd(d2, d) of d.
    """
    q = eps.q
    if d < 1 or q % d:
        raise ValueError(f"{d} does not divide {q}")
    target = lattice_for(d)
    acc: dict[int, object] = {e: (Fraction(0) if eps.mode == EXACT else 0.0) for e in target.divisors}
    for d2, x in eps.items():
        acc[math.gcd(d2, d)] += x
    return MaecDistribution(target, tuple(acc[e] for e in target.divisors), eps.mode)


# ---------------------------------------------------------------- spec files


def parse_mass(text, mode: str):
    """Parse an int, ``"p/q"`` string or decimal float according to the mode."""
    if isinstance(text, bool):
        raise TypeError("booleans are not masses")
    if isinstance(text, int):
        return Fraction(text) if mode == EXACT else float(text)
    if isinstance(text, float):
        if mode == EXACT:
            raise ModeError(f"decimal float {text!r} rejected in exact mode")
        return text
    if not isinstance(text, str):
        raise TypeError(f"unsupported mass {text!r}")
    s = text.strip()
    is_decimal = any(c in s for c in ".eE") and "/" not in s
    if mode == EXACT:
        if is_decimal:
            raise ModeError(f"decimal float {text!r} rejected in exact mode")
        return Fraction(s)
    return float(Fraction(s)) if not is_decimal else float(s)


def spec_from_mapping(doc: Mapping, mode: str = EXACT) -> MaecDistribution:
    extra = set(doc) - {"q", "masses"}
    if extra:
        raise ValueError(f"unknown keys in channel spec: {sorted(extra)}")
    if "q" not in doc or "masses" not in doc:
        raise ValueError("channel spec needs 'q' and 'masses'")
    q = doc["q"]
    if isinstance(q, bool) or not isinstance(q, int):
        raise ValueError("'q' must be an integer")
    lat = lattice_for(q)
    masses = {}
    for key, val in doc["masses"].items():
        try:
            d = int(key)
        except (TypeError, ValueError):
            raise ValueError(f"divisor key {key!r} is not an integer") from None
        if d not in lat.index_of:
            raise ValueError(f"{key!r} is not a divisor of {q}")
        masses[d] = parse_mass(val, mode)
    return make_distribution(lat, masses, mode)


def load_spec(path: str | Path, mode: str = EXACT) -> MaecDistribution:
    """Read a JSON or TOML channel spec (chosen by suffix, JSON otherwise)."""
    p = Path(path)
    raw = p.read_bytes()
    if p.suffix.lower() == ".toml":
        doc = tomllib.loads(raw.decode())
    else:
        doc = json.loads(raw)
    return spec_from_mapping(doc, mode)


def format_scalar(x) -> str:
    if isinstance(x, Fraction):
        return f"{x.numerator}/{x.denominator}"
    return repr(float(x))


def spec_to_mapping(eps: MaecDistribution) -> dict:
    return {"q": eps.q, "masses": {str(d): format_scalar(x) for d, x in eps.items() if x != 0}}
