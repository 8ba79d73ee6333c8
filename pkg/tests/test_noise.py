import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from noisyea.noise import NoiseModel, comparison_probabilities, gap_point_mass, make_rng, noisy_fitness
from noisyea.ea import SelectionRule
from noisyea.problems import BitString, ProblemSpec, fitness, fitness_of_ones

from oracles import continuous_accept, one_bit_outcomes


def test_one_bit_zero_level_is_identity():
    rng = make_rng(1)
    spec = ProblemSpec.onemax(4)
    x = BitString.from_str("1010")
    assert {noisy_fitness(NoiseModel.one_bit(0.0), spec, x, rng) for _ in range(200)} == {2.0}


def test_degenerate_additive_shift():
    rng = make_rng(2)
    spec = ProblemSpec.trap(5)
    x = BitString.from_str("10110")
    vals = {noisy_fitness(NoiseModel.additive(0.75, 0.75), spec, x, rng) for _ in range(50)}
    assert vals == {fitness(spec, x) + 0.75}


def test_one_bit_full_level_on_optimum():
    # every single-bit flip of 111 has two ones
    assert one_bit_outcomes(ProblemSpec.onemax(3), 0b111, 1.0) == ((2.0, 1.0),)
    rng = make_rng(3)
    x = BitString.from_str("111")
    assert {noisy_fitness(NoiseModel.one_bit(1.0), ProblemSpec.onemax(3), x, rng) for _ in range(100)} == {2.0}


def test_noisy_fitness_leaves_solution_alone():
    x = BitString.from_str("0110")
    noisy_fitness(NoiseModel.one_bit(1.0), ProblemSpec.onemax(4), x, make_rng(0))
    assert str(x) == "0110"


def test_noisy_fitness_length_check():
    with pytest.raises(ValueError):
        noisy_fitness(NoiseModel.noiseless(), ProblemSpec.onemax(4), BitString.from_str("01"), make_rng(0))


@pytest.mark.parametrize("bad", [
    lambda: NoiseModel.additive(1.0, -1.0),
    lambda: NoiseModel.multiplicative(2.0, 1.0),
    lambda: NoiseModel.one_bit(1.5),
    lambda: NoiseModel.one_bit(-0.1),
])
def test_invalid_models(bad):
    with pytest.raises(ValueError):
        bad()


def test_config_round_trip():
    cases = {
        '{"noise":"one_bit","pn":0.5}': NoiseModel.one_bit(0.5),
        '{"noise":"additive","d1":-5.0,"d2":5.0}': NoiseModel.additive(-5, 5),
        '{"noise":"multiplicative","d1":0.1,"d2":10.0}': NoiseModel.multiplicative(0.1, 10),
        '{"noise":"none"}': NoiseModel.noiseless(),
    }
    for text, model in cases.items():
        assert NoiseModel.from_dict(json.loads(text)) == model
        assert model.to_dict() == json.loads(text)


# -- comparison probabilities -----------------------------------------------------

def test_noiseless_indicator():
    spec = ProblemSpec.onemax(5)
    assert comparison_probabilities(NoiseModel.noiseless(), spec, 3, 2, 0) == 1.0
    assert comparison_probabilities(NoiseModel.noiseless(), spec, 2, 3, 0) == 0.0
    assert comparison_probabilities(NoiseModel.noiseless(), spec, 2, 2, 0) == 1.0


def test_one_bit_full_level_ties():
    # values {0, 2} each with probability 1/2 on both sides; ties accept
    spec = ProblemSpec.onemax(2)
    assert comparison_probabilities(NoiseModel.one_bit(1.0), spec, 1, 1, 0) == pytest.approx(0.75)
    # strictly greater has probability 1/4, so P[>=] = 1 - P[<] = 1 - 1/4
    assert gap_point_mass(NoiseModel.one_bit(1.0), spec, 1, 1, 0.0) == pytest.approx(0.5)


def _triangle_cdf(c, w):
    """P[U - U' <= c] for iid U[0, w]: analytic triangle areas."""
    if c <= -w:
        return 0.0
    if c >= w:
        return 1.0
    if c <= 0:
        return (c + w) ** 2 / (2 * w * w)
    return 1 - (w - c) ** 2 / (2 * w * w)


def test_additive_equal_fitness_is_half():
    spec = ProblemSpec.onemax(4)
    p = comparison_probabilities(NoiseModel.additive(-1, 1), spec, 2, 2, 0)
    assert p == pytest.approx(_triangle_cdf(0.0, 2.0), abs=1e-15)
    assert p == pytest.approx(0.5, abs=1e-15)
    rng = np.random.default_rng(11)
    k = 10**6
    a = rng.uniform(-1, 1, k)
    b = rng.uniform(-1, 1, k)
    hits = np.count_nonzero(a >= b)
    assert abs(hits - k * p) <= 3 * math.sqrt(k * p * (1 - p))


@given(st.integers(0, 6), st.integers(0, 6), st.floats(0.0, 4.0),
       st.just(0.0) | st.floats(1e-6, 3.0), st.floats(-2.0, 2.0))
def test_additive_matches_triangle(a, b, shift, width, t):
    spec = ProblemSpec.onemax(6)
    model = NoiseModel.additive(shift - width / 2, shift + width / 2)
    got = comparison_probabilities(model, spec, a, b, t)
    if width == 0:
        assert got == float(a >= b + t)
    else:
        # the width the model actually holds after rounding the endpoints
        assert got == pytest.approx(_triangle_cdf(a - b - t, model.d2 - model.d1), abs=1e-12)


@settings(max_examples=60, deadline=None)
@given(st.sampled_from(["onemax", "trap"]), st.integers(0, 5), st.integers(0, 5),
       st.floats(0.05, 3.0), st.floats(0.0, 4.0), st.floats(0.0, 2.0))
def test_multiplicative_matches_quadrature(family, a, b, d1, width, t):
    spec = ProblemSpec.from_dict({"family": family, "n": 5})
    model = NoiseModel.multiplicative(d1, d1 + width)
    got = comparison_probabilities(model, spec, a, b, t)
    ref = continuous_accept(model, SelectionRule.hard(t), 5,
                            float(fitness_of_ones(spec, b)), float(fitness_of_ones(spec, a)))
    assert got == pytest.approx(ref, abs=1e-9)


@settings(max_examples=40, deadline=None)
@given(st.sampled_from(["onemax", "trap", "jump"]), st.integers(2, 6), st.data())
def test_one_bit_matches_enumeration(family, n, data):
    spec = ProblemSpec.from_dict({"family": family, "n": n, "m": 2})
    pn = data.draw(st.floats(0.0, 1.0))
    xa = data.draw(st.integers(0, 2**n - 1))
    xb = data.draw(st.integers(0, 2**n - 1))
    t = data.draw(st.sampled_from([0.0, 1.0, 2.0, 0.5]))
    la, lb = one_bit_outcomes(spec, xa, pn), one_bit_outcomes(spec, xb, pn)
    ref = sum(wa * wb for va, wa in la for vb, wb in lb if va >= vb + t)
    got = comparison_probabilities(NoiseModel.one_bit(pn), spec, bin(xa).count("1"), bin(xb).count("1"), t)
    assert got == pytest.approx(ref, abs=1e-12)


@settings(max_examples=60)
@given(st.sampled_from([NoiseModel.one_bit(0.4), NoiseModel.additive(-2, 3), NoiseModel.multiplicative(0.5, 2.0),
                        NoiseModel.noiseless()]),
       st.integers(0, 6), st.integers(0, 6), st.floats(-3, 3), st.floats(0, 3))
def test_monotone_in_threshold(model, a, b, t, dt):
    spec = ProblemSpec.trap(6)
    hi = comparison_probabilities(model, spec, a, b, t)
    lo = comparison_probabilities(model, spec, a, b, t + dt)
    assert 0.0 <= lo <= hi + 1e-12 <= 1.0 + 1e-12


@given(st.integers(1, 12), st.floats(0, 1), st.data())
def test_one_bit_moves_onemax_by_at_most_one(n, pn, data):
    bits = data.draw(st.lists(st.integers(0, 1), min_size=n, max_size=n))
    x = BitString(tuple(bits))
    rng = make_rng(data.draw(st.integers(0, 2**32)))
    v = noisy_fitness(NoiseModel.one_bit(pn), ProblemSpec.onemax(n), x, rng)
    assert abs(v - x.ones) <= 1


@pytest.mark.parametrize("model", [NoiseModel.one_bit(0.5), NoiseModel.additive(-1.5, 2.0),
                                   NoiseModel.multiplicative(0.2, 3.0)])
def test_sampled_comparisons_match_exact(model):
    """10^5 paired noisy evaluations agree with the exact probability within 4 sigma."""
    spec = ProblemSpec.onemax(5)
    xa, xb = BitString.from_str("11100"), BitString.from_str("11000")
    rng = make_rng(5)
    k = 10**5
    for t in (0.0, 1.0):
        p = comparison_probabilities(model, spec, 3, 2, t)
        hits = sum(noisy_fitness(model, spec, xa, rng) >= noisy_fitness(model, spec, xb, rng) + t for _ in range(k))
        assert abs(hits - k * p) <= 4 * math.sqrt(k * p * (1 - p)) + 1e-9


def test_seed_determinism():
    spec = ProblemSpec.onemax(7)
    x = BitString.from_str("1011001")
    for model in (NoiseModel.one_bit(0.5), NoiseModel.additive(-1, 1)):
        a = [noisy_fitness(model, spec, x, make_rng(42)) for _ in range(3)]
        r1, r2 = make_rng(9), make_rng(9)
        assert [noisy_fitness(model, spec, x, r1) for _ in range(20)] == [noisy_fitness(model, spec, x, r2) for _ in range(20)]
        assert len(set(a)) == 1
