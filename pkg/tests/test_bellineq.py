import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import random_unit
from multibell.bellineq import (
    InequalitySpec,
    SettingsAssignment,
    SignFunction,
    all_sign_functions,
    lhs,
    lhs_332,
    lhs_linear,
    lhs_moduli_442,
    lhs_N,
    lhs_standard,
    maximize_lhs,
    refine,
    coefficients,
    seesaw,
    settings_from_criterion,
)
from multibell.corrtensor import CorrelationTensor, compute_tensor, contract, random_frames, rotate
from multibell.criteria import condition_332, condition_442_analytic, condition_442_numeric, condition_N
from multibell.errors import ArityError, ValidationError
from multibell.qstate import make_four_photon, make_ghz, make_product, make_w, random_state

SIGNS = (1, -1)


def random_settings(rng, shape):
    return SettingsAssignment(tuple(random_unit(rng, (m,)) for m in shape))


def corr(t, s: SettingsAssignment):
    """E[k1..kN] from explicit single contractions."""
    vecs = s.vectors
    e = np.empty(s.shape)
    for k in itertools.product(*(range(m) for m in s.shape)):
        e[k] = contract(t, [vecs[j][k[j]] for j in range(len(vecs))])
    return e


def oracle_442(t, s):
    """Moduli form written out term by term with 1-based labels k, l, m."""
    e = corr(t, s)
    E = lambda k, l, m: e[k - 1, l - 1, m - 1]  # noqa: E731
    total = 0.0
    for s1, s2 in itertools.product(SIGNS, SIGNS):
        total += abs(sum(s1 ** (k - 1) * s2 ** (l - 1) * (E(k, l, 1) + E(k, l, 2))
                         for k in (1, 2) for l in (1, 2)))
        total += abs(sum(s1 ** (k - 3) * s2 ** (l - 3) * (E(k, l, 1) - E(k, l, 2))
                         for k in (3, 4) for l in (3, 4)))
    return total


def oracle_332(t, s):
    """Settings (A1, A3, A4 / B1, B3, B4 / C1, C2)."""
    e = corr(t, s)
    pos = {1: 0, 3: 1, 4: 2}
    E = lambda k, l, m: e[pos[k], pos[l], m - 1]  # noqa: E731
    total = 4 * abs(E(1, 1, 1) + E(1, 1, 2))
    for s1, s2 in itertools.product(SIGNS, SIGNS):
        total += abs(sum(s1 ** (k - 1) * s2 ** (l - 1) * (-1) ** (m - 1) * E(k, l, m)
                         for k in (3, 4) for l in (3, 4) for m in (1, 2)))
    return total


def oracle_N(t, s):
    e = corr(t, s)
    n = e.ndim
    total = 0.0
    for sv in itertools.product(SIGNS, repeat=n - 1):
        first = sum(np.prod([sv[j] ** (i[j] - 1) for j in range(n - 1)]) * (-1) ** (m - 1)
                    * e[tuple(x - 1 for x in i) + (m - 1,)]
                    for i in itertools.product((1, 2), repeat=n - 1) for m in (1, 2))
        second = sum(np.prod([sv[j] ** (i[j] - 3) for j in range(n - 1)])
                     * e[tuple(x - 1 for x in i) + (m - 1,)]
                     for i in itertools.product((3, 4), repeat=n - 1) for m in (1, 2))
        total += abs(first) + abs(second)
    return total


class TestSignFunctions:
    def test_count_and_classification(self):
        signs = all_sign_functions()
        assert len(signs) == 16 and len(set(signs)) == 16
        assert sum(not s.is_factorable() for s in signs) == 8

    def test_factorable_predicate_matches_search(self):
        products = {SignFunction.from_mapping({(a, b): f[a == -1] * g[b == -1]
                                               for a in SIGNS for b in SIGNS})
                    for f in itertools.product(SIGNS, SIGNS) for g in itertools.product(SIGNS, SIGNS)}
        for s in all_sign_functions():
            assert s.is_factorable() == (s in products)

    def test_factors_reconstruct(self):
        for s in all_sign_functions():
            if s.is_factorable():
                f, g = s.factors()
                for a, b in itertools.product(SIGNS, SIGNS):
                    assert s(a, b) == f[a == -1] * g[b == -1]
            else:
                assert s.factors() is None

    def test_canonical(self):
        for s in all_sign_functions():
            c = s.canonical()
            assert c(1, 1) == 1 and c in (s, -s)

    @pytest.mark.parametrize("bad", [(1, 1, 1), (1, 0, 1, 1), (2, 1, 1, 1)])
    def test_validation(self, bad):
        with pytest.raises(ValidationError):
            SignFunction(bad)

    def test_non_trivial_class(self):
        s = SignFunction((1, 1, 1, -1))
        assert not s.is_factorable()
        assert s.as_dict()[(-1, -1)] == -1


class TestSpecs:
    def test_families(self):
        assert InequalitySpec.of("f442").settings_per_party == (4, 4, 2)
        assert InequalitySpec.of("f442").classical_bound == 8
        assert InequalitySpec.of("f332").settings_per_party == (3, 3, 2)
        assert InequalitySpec.of("fN", 5).settings_per_party == (4, 4, 4, 4, 2)
        assert InequalitySpec.of("fN", 5).classical_bound == 32
        assert InequalitySpec.of("standard", 4).total_settings == 8

    def test_errors(self):
        with pytest.raises(ArityError):
            InequalitySpec.of("f442", 4)
        with pytest.raises(ArityError):
            InequalitySpec.of("fN", 2)
        with pytest.raises(ValidationError):
            InequalitySpec.of("f999")
        with pytest.raises(ValidationError):
            InequalitySpec("f442", 3, (4, 4, 2), 9.0)


class TestEvaluation:
    @pytest.mark.parametrize("seed", range(5))
    def test_442_against_oracle(self, seed):
        rng = np.random.default_rng(seed)
        t = compute_tensor(random_state(3, seed=seed, rank=2))
        s = random_settings(rng, (4, 4, 2))
        assert lhs_moduli_442(t, s) == pytest.approx(oracle_442(t, s), abs=1e-12)

    @pytest.mark.parametrize("seed", range(5))
    def test_332_against_oracle(self, seed):
        rng = np.random.default_rng(seed)
        t = compute_tensor(random_state(3, seed=seed))
        s = random_settings(rng, (3, 3, 2))
        assert lhs_332(t, s) == pytest.approx(oracle_332(t, s), abs=1e-12)

    @pytest.mark.parametrize("n", [3, 4])
    def test_N_against_oracle(self, n):
        rng = np.random.default_rng(n)
        t = compute_tensor(random_state(n, seed=n))
        s = random_settings(rng, (4,) * (n - 1) + (2,))
        assert lhs_N(t, s) == pytest.approx(oracle_N(t, s), abs=1e-12)

    def test_fN_three_parties_relabels_442(self):
        # at N = 3 the fN blocks are the f442 blocks with C1 and C2 roles swapped in sign
        rng = np.random.default_rng(3)
        t = compute_tensor(random_state(3, seed=1))
        s = random_settings(rng, (4, 4, 2))
        a, b = s.vectors[:2]
        swapped = SettingsAssignment((np.vstack([a[2:], a[:2]]), np.vstack([b[2:], b[:2]]), s.vectors[2]))
        assert lhs_N(t, s) == pytest.approx(lhs_moduli_442(t, swapped), abs=1e-12)

    def test_all_z_settings(self):
        z = np.array([0.0, 0.0, 1.0])
        for alpha in (0.1, 0.4):
            t = compute_tensor(make_ghz(3, alpha))
            s442 = SettingsAssignment((np.tile(z, (4, 1)), np.tile(z, (4, 1)), np.tile(z, (2, 1))))
            assert lhs_moduli_442(t, s442) == pytest.approx(8 * abs(t["zzz"]), abs=1e-12)
            s332 = SettingsAssignment((np.tile(z, (3, 1)), np.tile(z, (3, 1)), np.tile(z, (2, 1))))
            assert lhs_332(t, s332) == pytest.approx(8 * math.cos(2 * alpha), abs=1e-12)

    def test_zero_tensor(self, rng):
        t = CorrelationTensor(np.zeros((3, 3, 3)))
        assert lhs_moduli_442(t, random_settings(rng, (4, 4, 2))) == 0
        assert lhs_332(t, random_settings(rng, (3, 3, 2))) == 0
        assert lhs_N(t, random_settings(rng, (4, 4, 2))) == 0
        assert lhs_linear(t, random_settings(rng, (4, 4, 2)), SignFunction((1,) * 4), SignFunction((1,) * 4)) == 0

    def test_shape_errors(self, rng):
        t = compute_tensor(make_w(3))
        with pytest.raises(ArityError):
            lhs_moduli_442(t, random_settings(rng, (3, 3, 2)))
        with pytest.raises(ArityError):
            lhs_N(compute_tensor(make_w(4)), random_settings(rng, (4, 4, 2)))

    def test_settings_validation_and_json(self, rng):
        with pytest.raises(ValidationError):
            SettingsAssignment((np.ones((2, 3)),))
        s = random_settings(rng, (4, 4, 2))
        back = SettingsAssignment.from_json(s.to_json())
        for a, b in zip(back.vectors, s.vectors):
            assert np.max(np.abs(a - b)) <= 1e-15

    @settings(max_examples=25, deadline=None)
    @given(seed=st.integers(0, 2**31))
    def test_rotation_invariance(self, seed):
        rng = np.random.default_rng(seed)
        t = compute_tensor(random_state(3, seed=seed % 997))
        frames = random_frames(3, rng)
        for family, shape in (("f442", (4, 4, 2)), ("f332", (3, 3, 2)), ("fN", (4, 4, 2)), ("standard", (2, 2, 2))):
            spec = InequalitySpec.of(family, 3)
            s = random_settings(rng, shape)
            assert lhs(rotate(t, frames), s.rotated(frames), spec) == pytest.approx(lhs(t, s, spec), abs=1e-10)


class TestLinearFamily:
    def test_constant_signs(self, rng):
        t = compute_tensor(random_state(3, seed=2))
        s = random_settings(rng, (4, 4, 2))
        one = SignFunction((1, 1, 1, 1))
        # sum_s s1^k s2^l = 4 delta_k0 delta_l0, so with S' = S'' = 1 only the
        # first setting pair of each block survives
        e = corr(t, s)
        expected = 4 * abs((e[0, 0, 0] + e[0, 0, 1]) + (e[2, 2, 0] - e[2, 2, 1]))
        assert lhs_linear(t, s, one, one) == pytest.approx(expected, abs=1e-12)

    @pytest.mark.parametrize("seed", range(10))
    def test_max_over_sign_pairs_is_moduli_form(self, seed):
        rng = np.random.default_rng(seed)
        t = compute_tensor(random_state(3, seed=seed, rank=1 + seed % 3))
        s = random_settings(rng, (4, 4, 2))
        best = max(lhs_linear(t, s, a, b) for a, b in itertools.product(all_sign_functions(), repeat=2))
        assert best == pytest.approx(lhs_moduli_442(t, s), abs=1e-12)


class TestSettingsFromCriterion:
    @pytest.mark.parametrize("state", [make_ghz(3, 0.2), make_ghz(3, math.pi / 4), make_w(3),
                                       random_state(3, seed=4)], ids=["ghz0.2", "ghz-max", "w3", "random"])
    def test_442_construction_attains_criterion(self, state):
        t = compute_tensor(state)
        for res in (condition_442_analytic(t), condition_442_numeric(t)):
            s = settings_from_criterion(t, InequalitySpec.of("f442"), res.argmax_frames)
            assert lhs_moduli_442(t, s) == pytest.approx(8 * math.sqrt(res.max_value), abs=1e-9)

    def test_ghz_maximal_value(self):
        t = compute_tensor(make_ghz(3, math.pi / 4))
        s = settings_from_criterion(t, InequalitySpec.of("f442"), condition_442_analytic(t).argmax_frames)
        assert lhs_moduli_442(t, s) == pytest.approx(16, abs=1e-9)

    def test_332_construction(self):
        t = compute_tensor(make_ghz(3, math.pi / 12))
        res = condition_332(t)
        s = settings_from_criterion(t, InequalitySpec.of("f332"), res.argmax_frames)
        assert lhs_332(t, s) == pytest.approx(8 * math.sqrt(1.25), abs=1e-3)

    def test_N3_construction(self):
        t = compute_tensor(make_w(3))
        res = condition_N(t)
        s = settings_from_criterion(t, InequalitySpec.of("fN", 3), res.argmax_frames)
        assert lhs_N(t, s) == pytest.approx(8 * math.sqrt(7 / 3), abs=1e-9)


class TestMaximize:
    def test_ghz_03(self):
        t = compute_tensor(make_ghz(3, 0.3))
        value, s = maximize_lhs(t, InequalitySpec.of("f442"))
        assert value == pytest.approx(8 * math.sqrt(1 + math.sin(0.6) ** 2), abs=1e-3)
        assert lhs_moduli_442(t, s) == pytest.approx(value, abs=1e-9)

    def test_w3_fN(self):
        t = compute_tensor(make_w(3))
        assert maximize_lhs(t, InequalitySpec.of("fN", 3)).value == pytest.approx(8 * math.sqrt(7 / 3), abs=1e-3)

    def test_product_state_no_violation(self):
        t = compute_tensor(make_product(3))
        assert maximize_lhs(t, InequalitySpec.of("f442")).value <= 8 + 1e-9

    def test_without_warm_start(self):
        t = compute_tensor(make_w(3))
        res = maximize_lhs(t, InequalitySpec.of("f442"), warm_start=False)
        assert res.value == pytest.approx(8 * math.sqrt(7 / 3), abs=1e-6)
        assert res.restarts_used == 32 and res.spread >= 0

    @pytest.mark.parametrize("seed", range(3))
    def test_f332_matches_equal_weight_criterion(self, seed):
        """The weight-4 term of the 3x3x2 family leads to the equal-weight
        criterion; the settings maximum confirms it on random states."""
        t = compute_tensor(random_state(3, seed=seed))
        value = maximize_lhs(t, InequalitySpec.of("f332")).value
        assert value / 8 == pytest.approx(math.sqrt(condition_332(t).max_value), abs=1e-6)

    def test_ghz4_fN(self):
        # the two-term criterion reaches 8 here (factor 2 sqrt 2)
        t = compute_tensor(make_ghz(4, math.pi / 4))
        assert maximize_lhs(t, InequalitySpec.of("fN", 4)).value == pytest.approx(16 * math.sqrt(8), abs=1e-6)

    def test_four_photon_fN_below_criterion(self):
        """For four parties the criterion's per-term plane norms need not be
        reachable with two settings per party, so the Bell maximum sits slightly
        below 2 * 16 even though the criterion value is exactly 4."""
        t = compute_tensor(make_four_photon())
        value = maximize_lhs(t, InequalitySpec.of("fN", 4)).value
        assert 31.9 < value < 32 - 1e-3
        assert value == pytest.approx(16 * 1.99690159497, abs=1e-6)

    def test_refine_never_worse_than_seesaw(self):
        t = compute_tensor(random_state(3, seed=5)).entries
        w = coefficients(InequalitySpec.of("standard", 3))
        rng = np.random.default_rng(0)
        init = [random_unit(rng, (6, 2)) for _ in range(3)]
        plain, _, _ = seesaw(t, w, [x.copy() for x in init], max_iter=50)
        polished, _ = refine(t, w, [x.copy() for x in init], seesaw_iter=50)
        assert np.all(polished >= plain - 1e-12)

    def test_standard_lhs_consistency(self):
        t = compute_tensor(make_w(3))
        value, s = maximize_lhs(t, InequalitySpec.of("standard", 3))
        assert lhs_standard(t, s) == pytest.approx(value, abs=1e-9)
        assert value / 8 == pytest.approx(1.5229, abs=5e-4)
