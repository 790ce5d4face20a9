import mpmath as mp
import pytest
from fractions import Fraction

from cubicsums import hpreal
from cubicsums.hpreal import HPReal, DomainError


def digits_close(a, b, digits):
    return abs(a.value - b.value) < mp.mpf(10) ** (-digits)


class TestHPReal:
    def test_min_precision_propagates(self):
        a = HPReal(1.5, 200)
        b = HPReal(2.5, 100)
        assert (a + b).prec == 100
        assert (a * b).prec == 100
        assert (b / a).prec == 100

    def test_decimal_round_trip(self):
        x = hpreal.zeta_int(3, 40)
        s = x.to_decimal(45)
        y = HPReal.parse(s, 45)
        # 1 ulp at 40 digits
        assert abs(x.value - y.value) < mp.mpf(10) ** -40

    def test_immutable(self):
        x = HPReal(1, 64)
        with pytest.raises(AttributeError):
            x.value = 2

    def test_fraction_input(self):
        x = HPReal(Fraction(1, 3), 128)
        with mp.workprec(130):
            assert abs(x.value - mp.mpf(1) / 3) < mp.mpf(2) ** -126


class TestZeta:
    def test_pole(self):
        with pytest.raises(DomainError):
            hpreal.zeta_int(1, 30)

    def test_zeta2_vs_independent_pi(self):
        # oracle: pi computed by Machin, zeta by eta acceleration
        z2 = hpreal.zeta_int(2, 40)
        p = hpreal.pi(40)
        with mp.workprec(z2.prec):
            assert abs(z2.value - p.value**2 / 6) < mp.mpf(10) ** -40

    def test_zeta6_vs_pi(self):
        z6 = hpreal.zeta_int(6, 40)
        p = hpreal.pi(40)
        with mp.workprec(z6.prec):
            assert abs(z6.value - p.value**6 / 945) < mp.mpf(10) ** -40

    @pytest.mark.parametrize("s", [2, 3, 4, 5, 6, 7])
    def test_monotone_refinement(self, s):
        lo = hpreal.zeta_int(s, 30)
        hi = hpreal.zeta_int(s, 80)
        assert digits_close(lo, hi, 30)

    def test_deterministic(self):
        a = hpreal.zeta_int(5, 35)
        b = hpreal.zeta_int(5, 35)
        assert a.value == b.value


class TestPolylog:
    def test_zero_arg(self):
        assert hpreal.polylog(3, Fraction(0), 30).value == 0

    def test_li1_is_ln2(self):
        li1 = hpreal.polylog(1, Fraction(1, 2), 40)
        l2 = hpreal.ln2(40)
        assert digits_close(li1, l2, 40)

    def test_li2_half_closed_form(self):
        # Li_2(1/2) = zeta(2)/2 - ln(2)^2/2, both sides from independent routes
        li2 = hpreal.polylog(2, Fraction(1, 2), 40)
        z2 = hpreal.zeta_int(2, 50)
        l2 = hpreal.ln2(50)
        with mp.workprec(li2.prec):
            expected = z2.value / 2 - l2.value**2 / 2
            assert abs(li2.value - expected) < mp.mpf(10) ** -40

    def test_out_of_region(self):
        with pytest.raises(DomainError):
            hpreal.polylog(4, Fraction(3, 4), 30)

    def test_brute_force_oracle(self):
        # direct series at prec+10 as an independent check of Li_4(1/2)
        li4 = hpreal.polylog(4, Fraction(1, 2), 30)
        with mp.workprec(200):
            brute = mp.mpf(0)
            for k in range(1, 200):
                brute += mp.mpf(1) / (mp.mpf(2) ** k * mp.mpf(k) ** 4)
        assert abs(li4.value - brute) < mp.mpf(10) ** -30


class TestGammaPi:
    def test_gamma_harmonic_oracle(self):
        # gamma = H_K - ln K - 1/(2K) + 1/(12 K^2) + O(K^-4), K = 10^5
        g = hpreal.euler_gamma(40)
        K = 10**5
        with mp.workprec(200):
            h = mp.mpf(0)
            for k in range(1, K + 1):
                h += mp.mpf(1) / k
            oracle = h - mp.ln(K) - mp.mpf(1) / (2 * K) + mp.mpf(1) / (12 * K**2)
            assert abs(g.value - oracle) < mp.mpf(10) ** -18  # 1/(120 K^4) margin

    def test_pi_against_mpmath(self):
        p = hpreal.pi(60)
        with mp.workprec(p.prec + 10):
            assert abs(p.value - mp.pi()) < mp.mpf(10) ** -60

    def test_ln2_two_routes(self):
        # atanh route vs polylog route
        assert digits_close(hpreal.ln2(30), hpreal.polylog(1, Fraction(1, 2), 30), 30)


def test_bernoulli_values():
    B = hpreal.bernoulli
    assert B(2) == Fraction(1, 6)
    assert B(4) == Fraction(-1, 30)
    assert B(12) == Fraction(-691, 2730)
    assert B(3) == 0
