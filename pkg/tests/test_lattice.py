import math

import pytest
from hypothesis import given, strategies as st

from maecpolar.lattice import (
    Factorization,
    build_lattice,
    counts,
    factorize,
    lattice_for,
    padded_factorization,
)

DIVISORS_4500 = (
    1, 2, 3, 4, 5, 6, 9, 10, 12, 15, 18, 20, 25, 30, 36, 45, 50, 60,
    75, 90, 100, 125, 150, 180, 225, 250, 300, 375, 450, 500, 750, 900, 1125, 1500, 2250, 4500,
)


@pytest.mark.parametrize(
    "q, primes, exps",
    [(4500, (2, 3, 5), (2, 2, 3)), (2, (2,), (1,)), (45, (3, 5), (2, 1)), (2**32, (2,), (32,))],
)
def test_factorize(q, primes, exps):
    f = factorize(q)
    assert (f.primes, f.exponents) == (primes, exps)


@pytest.mark.parametrize("bad", [0, 1, -6, 2**32 + 1])
def test_factorize_range(bad):
    with pytest.raises(ValueError):
        factorize(bad)


def test_factorize_type():
    with pytest.raises(TypeError):
        factorize(6.0)


@pytest.mark.parametrize("q, want", [(4500, (3, 7, 36)), (7, (1, 1, 2)), (45, (2, 3, 6))])
def test_counts(q, want):
    assert counts(factorize(q)) == want


def test_factorization_validation():
    with pytest.raises(ValueError):
        Factorization(12, (2, 3), (1, 1))
    with pytest.raises(ValueError):
        Factorization(6, (3, 2), (1, 1))
    with pytest.raises(ValueError):
        Factorization(8, (4, 2), (1, 1))
    with pytest.raises(ValueError):
        Factorization(2, (2, 3), (1, 0))


def test_small_lattices():
    assert lattice_for(6).divisors == (1, 2, 3, 6)
    lat = lattice_for(12)
    i4, i6 = lat.index_of[4], lat.index_of[6]
    assert lat.divisors[lat.gcd_table[i4, i6]] == 2
    assert lat.divisors[lat.lcm_table[i4, i6]] == 12


def test_divisors_4500():
    lat = lattice_for(4500)
    assert lat.divisors == DIVISORS_4500
    assert lat.tau == 36


def test_padded():
    f = padded_factorization(8)
    assert f.q == 8 and f.exponents[-1] == 0 and f.m == 2
    assert padded_factorization(2).primes == (2, 3)
    lat = build_lattice(f)
    assert lat.divisors == (1, 2, 4, 8)
    with pytest.raises(ValueError):
        padded_factorization(12)


def test_tables_read_only():
    lat = lattice_for(12)
    with pytest.raises(ValueError):
        lat.gcd_table[0, 0] = 3


@given(st.integers(2, 5000))
def test_lattice_invariants(q):
    lat = lattice_for(q)
    f = lat.factorization
    assert math.prod(p**r for p, r in zip(f.primes, f.exponents)) == q
    assert len(lat.divisors) == f.tau and lat.divisors[-1] == q
    assert list(lat.divisors) == sorted(lat.divisors)
    assert sorted(lat.exponents) == sorted(set(lat.exponents))
    for pos, t in enumerate(lat.exponents):
        assert math.prod(p**e for p, e in zip(f.primes, t)) == lat.divisors[pos]
        assert lat.position(t) == pos
    tau = lat.tau
    for i in range(tau):
        for j in range(tau):
            g, l = lat.gcd_table[i, j], lat.lcm_table[i, j]
            assert g == lat.gcd_table[j, i] and l == lat.lcm_table[j, i]
            assert lat.divisors[g] * lat.divisors[l] == lat.divisors[i] * lat.divisors[j]
            ti, tj = lat.exponents[i], lat.exponents[j]
            assert lat.exponents[g] == tuple(map(min, ti, tj))
            assert lat.exponents[l] == tuple(map(max, ti, tj))
