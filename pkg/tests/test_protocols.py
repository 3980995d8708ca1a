import itertools
import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from nlcollapse.boxes import BiasVector, bias_vector, flip_outputs, mix, named_box, random_box
from nlcollapse.collapse import map_F, recursion_params, resource_count
from nlcollapse.protocols import (
    BooleanFunction,
    ProtocolConfig,
    conditional_distribution,
    conditional_distribution_check,
    enumerate_protocol,
    exact_success,
    maj,
    maj_identity_check,
    p0_enumerate,
    p0_exact,
    p1_enumerate,
    p1_formula,
    run_protocol,
    sample_protocol,
)

from conftest import ns_boxes

BITS = (0, 1)


def majority_vote(p):
    """Probability that at least two of three independent sub-runs succeed."""
    return p**3 + 3 * p**2 * (1 - p)


class TestBooleanFunction:
    def test_indexing(self):
        f = BooleanFunction(1, 2, "00010111")
        assert f(0, 3) == 1 and f(1, 0) == 0 and f(1, 1) == 1

    def test_wrong_length(self):
        with pytest.raises(ValueError):
            BooleanFunction(1, 1, "010")
        with pytest.raises(ValueError):
            BooleanFunction(1, 1, "01a0")

    def test_json_roundtrip(self, tmp_path):
        f = BooleanFunction.inner_product(2)
        path = tmp_path / "f.json"
        path.write_text(json.dumps(f.to_json()))
        assert BooleanFunction.load(path) == f

    def test_array(self):
        f = BooleanFunction.xor_all(2, 2)
        assert list(f.array()) == [f(X, Y) for X in range(4) for Y in range(4)]


class TestLevelZero:
    @pytest.mark.parametrize("m, expected", [(1, 0.75), (2, 0.625), (3, 0.5625)])
    def test_exact(self, m, expected):
        assert p0_exact(m).probability == expected

    def test_limit(self):
        vals = [p0_exact(m).probability for m in range(1, 40)]
        assert all(v > 0.5 for v in vals)
        assert vals == sorted(vals, reverse=True)

    @pytest.mark.parametrize("X", range(4))
    def test_xor_enumeration(self, X):
        report = p0_enumerate(BooleanFunction.xor_all(2, 2), X)
        assert report.probability == 0.625
        assert report.extra["exact_fraction"] == "5/8"

    @pytest.mark.parametrize("m", [1, 2, 3])
    def test_constant_function(self, m):
        f = BooleanFunction(1, m, "0" * 2 ** (1 + m))
        assert p0_enumerate(f, 0).probability == p0_exact(m).probability

    def test_f_equals_y(self):
        f = BooleanFunction.from_callable(1, 1, lambda X, Y: Y)
        assert p0_enumerate(f, 1).probability == 0.75

    def test_bound(self):
        f = BooleanFunction(10, 11, "0" * 2**21)
        with pytest.raises(ValueError, match="bound"):
            p0_enumerate(f, 0)


class TestLevelOneFormula:
    def test_pr(self):
        assert majority_vote(0.75) == 0.84375
        assert p1_formula(0.75, BiasVector(1, 1, 1, 1)).probability == pytest.approx(0.84375, abs=1e-15)

    @given(st.floats(0.5, 1))
    def test_pr_is_majority_vote(self, p0):
        assert p1_formula(p0, BiasVector(1, 1, 1, 1)).probability == pytest.approx(majority_vote(p0), abs=1e-14)

    @given(st.floats(0.5, 1))
    def test_zero_bias(self, p0):
        assert p1_formula(p0, BiasVector(0, 0, 0, 0)).probability == pytest.approx(0.5, abs=1e-14)

    @given(ns_boxes)
    def test_coin_flip_base(self, box):
        assert p1_formula(0.5, bias_vector(box)).probability == pytest.approx(0.5, abs=1e-14)

    def test_bias_field(self):
        r = p1_formula(0.6, BiasVector(0.9, 0.8, 0.7, 0.6))
        assert r.bias == 2 * r.probability - 1

    @given(st.floats(-1, 1), st.floats(-1, 1), st.floats(-1, 1), st.floats(-1, 1), st.floats(0, 1))
    def test_matches_map(self, a, b, c, d, p0):
        eta = BiasVector(a, b, c, d)
        assert p1_formula(p0, eta).bias == pytest.approx(map_F(2 * p0 - 1, recursion_params(eta)), abs=1e-12)


class TestLevelOneEnumeration:
    def test_pr(self, PR):
        assert p1_enumerate(0.75, PR).probability == pytest.approx(0.84375, abs=1e-13)

    @pytest.mark.parametrize("p0", [0.5, 0.6, 0.99])
    def test_fully_random_box(self, I, p0):
        assert p1_enumerate(p0, I).probability == pytest.approx(0.5, abs=1e-13)

    def test_term_count(self, PR):
        assert p1_enumerate(0.7, PR).extra["terms"] == 2 * 8 * 8 * 16

    @settings(max_examples=40, deadline=None)
    @given(ns_boxes, st.sampled_from([0.51, 0.6, 0.75, 0.9]))
    def test_matches_formula(self, box, p0):
        enum = p1_enumerate(p0, box).probability
        assert enum == pytest.approx(p1_formula(p0, bias_vector(box)).probability, abs=1e-12)

    @settings(max_examples=25, deadline=None)
    @given(ns_boxes, st.floats(0.5, 1))
    def test_output_flip_symmetry(self, box, p0):
        assert p1_enumerate(p0, flip_outputs(box)).probability == pytest.approx(
            p1_enumerate(p0, box).probability, abs=1e-13)

    def test_non_uniform_box(self, PR, P0):
        box = mix([PR, P0], [0.5, 0.5])
        assert p1_enumerate(0.75, box).probability == pytest.approx(
            p1_formula(0.75, bias_vector(box)).probability, abs=1e-14)


class TestMajority:
    def test_identity(self):
        assert maj_identity_check()

    def test_hand_case(self):
        a, b = (1, 1, 0), (0, 0, 0)
        r1, s1, r2, s2 = a[0] ^ a[1], b[1] ^ b[2], a[1] ^ a[2], b[0] ^ b[1]
        lhs = maj(*(x ^ y for x, y in zip(a, b)))
        assert lhs == 1 == maj(*a) ^ maj(*b) ^ (r1 & s1) ^ (r2 & s2)

    def test_zero(self):
        assert maj(0, 0, 0) == 0 and maj(1, 1, 1) == 1


class TestConditionalDistribution:
    def test_no_errors(self):
        cond = conditional_distribution(0.7)[(0, 0, 0)]
        for d, e, z, t in itertools.product(BITS, repeat=4):
            assert cond[d, e, z, t] == pytest.approx(0.25 if (z == e and t == d) else 0.0, abs=1e-15)

    @pytest.mark.parametrize("p0", [0.51, 0.75, 0.99])
    def test_shape(self, p0):
        for pattern, cond in conditional_distribution(p0).items():
            assert cond.sum() == pytest.approx(1.0, abs=1e-15)
            assert np.count_nonzero(cond > 1e-15) == 4

    @pytest.mark.parametrize("p0", [0.51, 0.6, 0.75, 0.9])
    def test_check(self, p0):
        assert conditional_distribution_check(p0)

    def test_range(self):
        with pytest.raises(ValueError):
            conditional_distribution(0.5)


class TestLiteralProtocol:
    def test_level_zero_tree(self, PR):
        f = BooleanFunction.xor_all(2, 2)
        for X, Y in itertools.product(range(4), range(4)):
            r = enumerate_protocol(0, f, X, Y, PR)
            assert r.probability == 0.625
            assert (r.shared_bits, r.box_copies) == resource_count(0, 2)

    @pytest.mark.parametrize("name", ["PR", "SR", "I"])
    def test_level_one_tree_matches_composition(self, name):
        box = named_box(name)
        f = BooleanFunction.from_callable(1, 1, lambda X, Y: X & Y)
        composed = exact_success(1, 1, box)
        for X, Y in itertools.product(range(2), range(2)):
            r = enumerate_protocol(1, f, X, Y, box)
            assert r.probability == pytest.approx(composed, abs=1e-12)
            assert (r.shared_bits, r.box_copies) == resource_count(1, 1)

    def test_level_one_tree_random_box(self, rng):
        box = mix([named_box("PR"), random_box(rng)], [0.8, 0.2])
        f = BooleanFunction.xor_all(1, 1)
        r = enumerate_protocol(1, f, 1, 0, box)
        assert r.probability == pytest.approx(exact_success(1, 1, box), abs=1e-12)


class TestRunProtocol:
    def test_level_zero(self, PR):
        f = BooleanFunction.inner_product(3)
        assert run_protocol(ProtocolConfig(0, 3, PR), f).probability == p0_exact(3).probability

    def test_level_one_pr(self, PR):
        r = run_protocol(ProtocolConfig(1, 1, PR), BooleanFunction.inner_product(1))
        assert r.probability == pytest.approx(0.84375, abs=1e-15)
        assert r.bias == pytest.approx(0.6875, abs=1e-15)

    def test_exact_level_two(self, PR, I):
        box = mix([PR, I], [0.9, 0.1])
        p = run_protocol(ProtocolConfig(2, 2, box), BooleanFunction.inner_product(2)).probability
        params = recursion_params(bias_vector(box))
        mu = map_F(map_F(0.25, params), params)
        assert 2 * p - 1 == pytest.approx(mu, abs=1e-12)

    @pytest.mark.parametrize("k", [0, 1, 2])
    @pytest.mark.parametrize("m", [1, 2, 4])
    def test_resources(self, PR, k, m):
        f = BooleanFunction.inner_product(m)
        r = run_protocol(ProtocolConfig(k, m, PR), f)
        assert (r.shared_bits, r.box_copies) == resource_count(k, m)
        mc = run_protocol(ProtocolConfig(k, m, PR, "monte_carlo", 10, 1), f)
        assert (mc.shared_bits, mc.box_copies) == resource_count(k, m)

    def test_config_errors(self, PR):
        with pytest.raises(ValueError, match="exact"):
            ProtocolConfig(3, 1, PR)
        with pytest.raises(ValueError, match="samples"):
            ProtocolConfig(1, 1, PR, "monte_carlo", 0, 1)
        with pytest.raises(ValueError, match="seed"):
            ProtocolConfig(1, 1, PR, "monte_carlo", 10, None)

    def test_invalid_box(self):
        from nlcollapse.boxes import InvalidBoxError, NonlocalBox

        bad = NonlocalBox.from_function(lambda x, y, a, b: float(a == y and b == 0))
        with pytest.raises(InvalidBoxError):
            ProtocolConfig(1, 1, bad)

    @pytest.mark.parametrize("k", [0, 1, 2])
    def test_monte_carlo_close_to_exact(self, PR, I, k):
        box = mix([PR, I], [0.9, 0.1])
        f = BooleanFunction.inner_product(2)
        exact = run_protocol(ProtocolConfig(k, 2, box), f).probability
        mc = run_protocol(ProtocolConfig(k, 2, box, "monte_carlo", 200_000, 11 + k), f, X=3, Y=1)
        assert abs(mc.probability - exact) < 5 * mc.stderr
        assert mc.seed == 11 + k and mc.mode == "estimated"

    def test_monte_carlo_level_three(self, PR):
        f = BooleanFunction.inner_product(3)
        mc = run_protocol(ProtocolConfig(3, 3, PR, "monte_carlo", 10**6, 2024), f, X=5, Y=6)
        params = recursion_params(BiasVector(1, 1, 1, 1))
        mu = 2.0**-3
        for _ in range(3):
            mu = map_F(mu, params)
        assert abs(mc.bias - mu) < 4 * 2 * mc.stderr

    def test_deterministic(self, SR):
        f = BooleanFunction.xor_all(1, 2)
        a = sample_protocol(2, f, 0, 1, SR, samples=5000, seed=3)
        b = sample_protocol(2, f, 0, 1, SR, samples=5000, seed=3)
        assert a[0] == b[0]

    def test_chunking_does_not_change_counts(self, PR):
        f = BooleanFunction.xor_all(1, 1)
        wins, meter = sample_protocol(1, f, 0, 0, PR, samples=1000, seed=9, chunk=300)
        assert 0 <= wins <= 1000 and meter.box_copies == 2

    def test_function_mismatch(self, PR):
        with pytest.raises(ValueError, match="input_length"):
            run_protocol(ProtocolConfig(0, 2, PR), BooleanFunction.inner_product(3))
