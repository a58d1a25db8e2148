import json
import math
from fractions import Fraction

import pytest
from hypothesis import given, strategies as st

from maecpolar.channel import (
    EXACT,
    FLOAT,
    ExactLog,
    ModeError,
    alpha_capacity,
    bhattacharyya,
    channel_parameters,
    error_prob,
    format_scalar,
    load_spec,
    make_distribution,
    parse_mass,
    random_distribution,
    reduce_mod,
    spec_from_mapping,
    spec_to_mapping,
    uniform,
    unit_vector,
)
from maecpolar.lattice import lattice_for

F = Fraction
ALPHAS = ["0", "1/2", "1", "2", "inf"]


def rand_eps(q, seed, mode=EXACT):
    import random

    return random_distribution(lattice_for(q), random.Random(seed), mode)


def test_make_distribution_valid(case1):
    assert case1.mode == EXACT
    assert case1[3] == F(3, 5)
    assert make_distribution(6, [1, 0, 0, 0])[1] == 1


def test_make_distribution_errors():
    with pytest.raises(ValueError):
        make_distribution(6, [F(1, 2), F(1, 2), F(1, 2), F(-1, 2)])
    with pytest.raises(ValueError):
        make_distribution(6, [F(1, 2), F(1, 2), F(1, 2)])
    with pytest.raises(ValueError):
        make_distribution(6, [F(1, 2), F(1, 4), 0, 0])
    with pytest.raises(ValueError):
        make_distribution(6, {4: 1})


def test_float_mode_tolerance():
    eps = make_distribution(6, [0.1, 0.2, 0.3, 0.4])
    assert eps.mode == FLOAT
    make_distribution(6, [0.1, 0.2, 0.3, 0.4 + 5e-13])
    with pytest.raises(ValueError):
        make_distribution(6, [0.1, 0.2, 0.3, 0.4 + 1e-9])


def test_capacity_case1_nats(case1):
    want = 0.3 * math.log(2) + 0.6 * math.log(3) + 0.1 * math.log(6)
    assert abs(alpha_capacity(case1.to_float(), 1, "e") - want) < 1e-12
    assert abs(want - 1.046287) < 1e-6
    exact = alpha_capacity(case1, 1, "e")
    assert isinstance(exact, ExactLog)
    assert abs(exact.value() - want) < 1e-12


@pytest.mark.parametrize("q", [2, 6, 12, 45])
@pytest.mark.parametrize("alpha", ALPHAS)
def test_noiseless_and_useless(q, alpha):
    top = unit_vector(q, q, FLOAT)
    bottom = unit_vector(q, 1, FLOAT)
    assert abs(alpha_capacity(top, alpha) - 1) < 1e-12
    assert abs(alpha_capacity(bottom, alpha)) < 1e-12


def test_exact_alpha_restriction(case1):
    with pytest.raises(ModeError):
        alpha_capacity(case1, "1/2")
    assert str(alpha_capacity(case1, 0, "e")) == "log(2)"
    assert alpha_capacity(case1, "inf", "q").value() == pytest.approx(math.log(3) / math.log(6))


def test_alpha_range(case1):
    with pytest.raises(ValueError):
        alpha_capacity(case1.to_float(), -1)


def test_bhattacharyya_error_prob_q2():
    for e1 in (F(0), F(1, 3), F(7, 8), F(1)):
        eps = make_distribution(2, [e1, 1 - e1])
        assert bhattacharyya(eps) == e1
        assert error_prob(eps) == e1 / 2


def test_uniform_q6_parameters():
    eps = uniform(6)
    assert bhattacharyya(eps) == F(2, 5)
    assert error_prob(eps) == F(1, 2)


def test_noiseless_parameters():
    eps = unit_vector(12, 12)
    assert bhattacharyya(eps) == 0 and error_prob(eps) == 0


def test_channel_parameters(case1):
    p = channel_parameters(case1.to_float(), 1, "e")
    assert 0 <= p.bhattacharyya <= 1 and 0 <= p.error_prob <= 1


def test_reduce_mod(case1):
    bar = reduce_mod(case1, 2)
    assert bar.divisors == (1, 2)
    assert bar.masses == (F(3, 5), F(2, 5))
    assert reduce_mod(case1, 6) == case1
    assert reduce_mod(case1, 1).masses == (F(1),)
    with pytest.raises(ValueError):
        reduce_mod(case1, 4)


def test_reduce_mod_q12_d4():
    # mass at 6 must land on gcd(6, 4) = 2 only
    eps = make_distribution(12, {6: 1})
    assert reduce_mod(eps, 4).masses == (0, 1, 0)


def test_parse_mass_modes():
    assert parse_mass("3/10", EXACT) == F(3, 10)
    assert parse_mass(2, EXACT) == 2
    with pytest.raises(ModeError):
        parse_mass("0.3", EXACT)
    with pytest.raises(ModeError):
        parse_mass(0.3, EXACT)
    assert parse_mass("0.3", FLOAT) == 0.3
    assert parse_mass("1/4", FLOAT) == 0.25
    with pytest.raises(TypeError):
        parse_mass(True, EXACT)


def test_spec_mapping_roundtrip(case1):
    doc = spec_to_mapping(case1)
    assert doc == {"q": 6, "masses": {"2": "3/10", "3": "3/5", "6": "1/10"}}
    assert spec_from_mapping(doc) == case1


def test_spec_errors():
    with pytest.raises(ValueError):
        spec_from_mapping({"q": 6, "masses": {"4": "1"}})
    with pytest.raises(ValueError):
        spec_from_mapping({"q": 6, "masses": {"6": "1"}, "extra": 1})
    with pytest.raises(ValueError):
        spec_from_mapping({"masses": {"6": "1"}})


def test_load_json_and_toml(tmp_path, case1):
    j = tmp_path / "c.json"
    j.write_text(json.dumps(spec_to_mapping(case1)))
    t = tmp_path / "c.toml"
    t.write_text('q = 6\n[masses]\n"2" = "3/10"\n"3" = "3/5"\n"6" = "1/10"\n')
    assert load_spec(j) == case1
    assert load_spec(t) == case1


def test_format_scalar():
    assert format_scalar(F(29, 150)) == "29/150"
    assert format_scalar(F(0)) == "0/1"
    assert format_scalar(0.5) == "0.5"


# ---------------------------------------------------------------- properties


@given(st.sampled_from([2, 6, 12, 36, 45, 60]), st.integers(0, 10**6))
def test_alpha_monotone(q, seed):
    eps = rand_eps(q, seed, FLOAT)
    vals = [alpha_capacity(eps, a) for a in ALPHAS]
    assert all(x <= y + 1e-12 for x, y in zip(vals, vals[1:]))
    assert all(-1e-12 <= v <= 1 + 1e-12 for v in vals)


@given(st.sampled_from([6, 12, 36, 45]), st.integers(0, 10**6))
def test_reduce_mod_data_processing(q, seed):
    eps = rand_eps(q, seed)
    full = alpha_capacity(eps.to_float(), 1, "e")
    for d in lattice_for(q).divisors:
        bar = reduce_mod(eps, d)
        assert sum(bar.masses) == 1
        assert alpha_capacity(bar.to_float(), 1, "e") <= full + 1e-12


@given(st.sampled_from([2, 6, 12, 45]), st.integers(0, 10**6), st.sampled_from(ALPHAS))
def test_base_conversion(q, seed, alpha):
    eps = rand_eps(q, seed, FLOAT)
    assert abs(alpha_capacity(eps, alpha, "2") - alpha_capacity(eps, alpha, "e") / math.log(2)) < 1e-12


@given(st.sampled_from([2, 6, 12, 45]), st.integers(0, 10**6))
def test_zero_parameters_iff_noiseless(q, seed):
    eps = rand_eps(q, seed)
    noiseless = eps[q] == 1
    assert (bhattacharyya(eps) == 0) == noiseless
    assert (error_prob(eps) == 0) == noiseless
    assert 0 <= bhattacharyya(eps) <= 1 and 0 <= error_prob(eps) <= 1
