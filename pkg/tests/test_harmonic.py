import random
from fractions import Fraction

import pytest

from cubicsums import harmonic as hm


class TestHarmonicValues:
    def test_examples(self):
        assert hm.harmonic("H", 4, 1) == Fraction(25, 12)
        assert hm.harmonic("h", 3, 1) == Fraction(23, 15)
        assert hm.harmonic("H", 2, 2) == Fraction(5, 4)

    def test_empty_sums(self):
        assert hm.harmonic("H", 0, 1) == 0
        assert hm.harmonic("h", 0, 3) == 0

    def test_telescoping(self):
        rng = random.Random(7)
        for _ in range(40):
            k = rng.randint(1, 500)
            n = rng.randint(1, 4)
            assert hm.harmonic("H", k, n) - hm.harmonic("H", k - 1, n) == Fraction(1, k**n)
            assert hm.harmonic("h", k, n) - hm.harmonic("h", k - 1, n) == Fraction(1, (2 * k - 1) ** n)

    def test_h_from_H(self):
        # h_k = H_{2k} - H_k/2 for every k (consequence of the alternating split)
        for k in range(1, 200):
            assert hm.harmonic("h", k) == hm.harmonic("H", 2 * k) - hm.harmonic("H", k) / 2

    def test_alternating_partial(self):
        assert hm.alternating_partial(2, 1) == Fraction(1, 2)
        assert hm.alternating_partial(1, 1) == 1
        # direct comparison
        for k in range(0, 50):
            direct = sum(Fraction((-1) ** (i + 1), i**2) for i in range(1, k + 1))
            assert hm.alternating_partial(k, 2) == direct

    def test_bad_args(self):
        with pytest.raises(ValueError):
            hm.harmonic("x", 1, 1)
        with pytest.raises(ValueError):
            hm.harmonic("H", -1, 1)
        with pytest.raises(ValueError):
            hm.harmonic("H", 1, 0)


class TestFiniteLemmas:
    def test_eq50_at_2(self):
        res = hm.check_finite_lemma("eq50", 2)
        assert res.lhs == Fraction(13, 8)
        assert res.rhs == Fraction(13, 8)
        assert res.passed

    def test_eq142_at_1(self):
        res = hm.check_finite_lemma("eq142", 1)
        assert res.lhs == Fraction(1, 2)
        assert res.passed

    def test_eq179_at_2(self):
        res = hm.check_finite_lemma("eq179", 2)
        assert res.lhs == Fraction(1, 3)
        assert res.passed

    def test_unknown_lemma(self):
        with pytest.raises(KeyError):
            hm.check_finite_lemma("eq9999", 1)

    def test_sweep_small(self):
        counts, failures = hm.sweep_finite_lemmas(60)
        assert not failures
        assert counts == {lid: 60 for lid in hm.FINITE_LEMMAS}

    def test_sweep_matches_direct(self):
        # incremental sweeper must agree with the direct per-k evaluation
        for lid in hm.FINITE_LEMMAS:
            sweeper = hm._Sweeper(lid)
            for k in range(1, 25):
                inc = sweeper.step(k)
                direct = hm.check_finite_lemma(lid, k)
                assert inc.lhs == direct.lhs and inc.rhs == direct.rhs
