import mpmath as mp
import pytest
from fractions import Fraction

from cubicsums.expansion import DivergenceError, Engine, Expansion
from cubicsums.harmonic import harmonic

BITS = 250


@pytest.fixture(scope="module")
def eng():
    return Engine(BITS, order=24, em_depth=12)


def as_mpf(fr: Fraction) -> mp.mpf:
    return mp.mpf(fr.numerator) / fr.denominator


class TestSymbolExpansions:
    def test_H1_leading_coeffs(self, eng):
        e = eng.H_expansion(1)
        assert e.coeffs[(1, 0)] == 1
        assert e.coeffs[(0, 1)] == mp.mpf(0.5)

    def test_h1_leading_coeffs(self, eng):
        e = eng.h_expansion(1)
        assert e.coeffs[(1, 0)] == mp.mpf(0.5)
        with mp.workprec(BITS):
            expected = eng.const("ln2") + eng.const("gamma") / 2
            assert abs(e.coeffs[(0, 0)] - expected) < mp.mpf(2) ** -240

    def test_H2_structure(self, eng):
        e = eng.H_expansion(2)
        with mp.workprec(BITS):
            assert abs(e.coeffs[(0, 0)] - eng.const("zeta", 2)) < mp.mpf(2) ** -240
        assert e.coeffs[(0, 1)] == -1

    @pytest.mark.parametrize("sym,n", [("H", 1), ("H", 2), ("H", 3), ("H", 4),
                                       ("h", 1), ("h", 2), ("h", 3), ("h", 4)])
    def test_against_exact_values(self, eng, sym, n):
        # expansion at large k must match the exact harmonic number within the
        # first-omitted-term allowance (or the 250-bit roundoff floor)
        with mp.workprec(BITS):
            e = eng.symbol(sym, n)
            for k in (1000, 4000):
                exact = as_mpf(harmonic(sym, k, n))
                approx = e.eval_at(k)
                allowance = max(e.truncation_scale() * mp.ln(k)
                                * mp.mpf(k) ** (-(eng.order + 1)) * 50,
                                mp.mpf(2) ** (-(BITS - 8)))
                assert abs(exact - approx) < allowance

    def test_recip_2km1(self, eng):
        with mp.workprec(BITS):
            e = eng.recip("2k-1", 1)
            k = 100
            assert abs(e.eval_at(k) - mp.mpf(1) / 199) < mp.mpf(10) ** -40

    def test_recip_param(self, eng):
        with mp.workprec(BITS):
            e = eng.recip("k+p", 2, p=7)
            k = 500
            assert abs(e.eval_at(k) - mp.mpf(1) / 507**2) < mp.mpf(10) ** -40


class TestTails:
    def test_T02_telescopes_zeta2(self, eng):
        # T(0,2,K) + H_K^(2) = zeta(2)
        with mp.workprec(BITS):
            for K in (10, 100, 1000):
                t, bound = eng.tail(0, 2, K)
                lhs = t + as_mpf(harmonic("H", K, 2))
                assert abs(lhs - eng.const("zeta", 2)) < bound + mp.mpf(10) ** -60

    def test_T03_value(self, eng):
        with mp.workprec(BITS):
            t, bound = eng.tail(0, 3, 8)
            expected = eng.const("zeta", 3) - as_mpf(harmonic("H", 8, 3))
            assert abs(t - expected) <= bound + mp.mpf(10) ** -60

    def test_T12_brute_force(self, eng):
        # sum_{k>10} ln k / k^2 via brute force + integral bracket remainder:
        # f decreasing for k >= 3, so int_{N+1} <= R <= int_{N+1} + f(N+1)
        with mp.workprec(BITS):
            t, bound = eng.tail(1, 2, 10)
            N = 10**5
            brute = mp.mpf(0)
            for k in range(N, 10, -1):
                brute += mp.ln(k) / mp.mpf(k) ** 2
            lo = (mp.ln(N + 1) + 1) / (N + 1)
            hi = lo + mp.ln(N + 1) / mp.mpf(N + 1) ** 2
            assert brute + lo - 1e-30 < t < brute + hi + 1e-30

    def test_divergent_rejected(self, eng):
        with pytest.raises(DivergenceError):
            eng.tail(0, 1, 100)

    def test_bound_sound_small_K(self, eng):
        # b >= 3, small K: bound must dominate the true error; brute force plus
        # a monotone integral bracket for the part beyond N
        with mp.workprec(BITS):
            for (a, b, K) in [(0, 3, 8), (1, 3, 20), (2, 4, 50), (0, 6, 8)]:
                t, bound = eng.tail(a, b, K)
                brute = mp.mpf(0)
                N = 10**5
                for k in range(N, K, -1):
                    brute += mp.ln(k) ** a / mp.mpf(k) ** b
                f = lambda x: mp.ln(x) ** a * x ** (-b)
                rem_lo = mp.quad(f, [N + 1, mp.inf])
                rem_hi = rem_lo + f(N + 1)
                true_lo, true_hi = brute + rem_lo, brute + rem_hi
                assert true_lo - bound <= t <= true_hi + bound

    def test_tail_sum_matches_brute_force(self, eng):
        # expansion of H_k/k^3, tail beyond 100 vs float recurrence to 10^5
        # plus a two-sided bracket ln k + gamma < H_k < ln k + gamma + 1/(2k)
        with mp.workprec(BITS):
            e = eng.H_expansion(1).shift_b(3)
            t, bound = eng.tail_sum(e, 100)
            N = 10**5
            h = mp.mpf(0)
            brute = mp.mpf(0)
            for k in range(1, N + 1):
                h += mp.mpf(1) / k
                if k > 100:
                    brute += h / mp.mpf(k) ** 3
            g = eng.const("gamma")
            f_lo = lambda x: (mp.ln(x) + g) * x ** (-3)
            f_hi = lambda x: (mp.ln(x) + g + 1 / (2 * x)) * x ** (-3)
            rem_lo = mp.quad(f_lo, [N + 1, mp.inf])
            rem_hi = mp.quad(f_hi, [N + 1, mp.inf]) + f_hi(N + 1)
            assert brute + rem_lo - bound - mp.mpf(10) ** -40 <= t
            assert t <= brute + rem_hi + bound + mp.mpf(10) ** -40


class TestAntidifference:
    def test_inner_h_over_i(self, eng):
        # F for g = h_i/i: C + F(k) must track sum_{i<=k} h_i/i
        with mp.workprec(BITS):
            g = eng.h_expansion(1).shift_b(1)
            F = eng.antidifference(g)
            s1 = as_mpf(sum((harmonic("h", i) / i for i in range(1, 501)), Fraction(0)))
            s2 = as_mpf(sum((harmonic("h", i) / i for i in range(1, 1001)), Fraction(0)))
            C1 = s1 - F.eval_at(500)
            C2 = s2 - F.eval_at(1000)
            assert abs(C1 - C2) < mp.mpf(10) ** -40

    def test_gamma_bootstrap(self, eng):
        # g = 1/k: constant of the partial-sum expansion is gamma
        with mp.workprec(BITS):
            g = Expansion({(0, 1): mp.mpf(1)}, eng.order)
            F = eng.antidifference(g)
            s = as_mpf(harmonic("H", 2000, 1))
            C = s - F.eval_at(2000)
            assert abs(C - eng.const("gamma")) < mp.mpf(10) ** -50

    def test_one_over_2km1_bootstrap(self, eng):
        # g = 1/(2k-1): constant is ln2 + gamma/2
        with mp.workprec(BITS):
            g = eng.recip("2k-1", 1)
            F = eng.antidifference(g)
            s = as_mpf(harmonic("h", 2000, 1))
            C = s - F.eval_at(2000)
            assert abs(C - (eng.const("ln2") + eng.const("gamma") / 2)) < mp.mpf(10) ** -50

    def test_zeta2_partial_constant(self, eng):
        with mp.workprec(BITS):
            g = Expansion({(0, 2): mp.mpf(1)}, eng.order)
            F = eng.antidifference(g)
            s = as_mpf(harmonic("H", 1500, 2))
            C = s - F.eval_at(1500)
            assert abs(C - eng.const("zeta", 2)) < mp.mpf(10) ** -50


class TestSubstitution:
    def test_even_substitution(self, eng):
        # H_k at k = 2j vs direct evaluation
        with mp.workprec(BITS):
            e = eng.substitute(eng.H_expansion(1), "even")
            j = 600
            exact = as_mpf(harmonic("H", 2 * j, 1))
            assert abs(e.eval_at(j) - exact) < mp.mpf(10) ** -50

    def test_odd_substitution(self, eng):
        with mp.workprec(BITS):
            e = eng.substitute(eng.H_expansion(2), "odd")
            j = 600
            exact = as_mpf(harmonic("H", 2 * j - 1, 2))
            assert abs(e.eval_at(j) - exact) < mp.mpf(10) ** -50

    def test_alternating_eta_tail(self, eng):
        # sum_{k>K} (-1)^(k+1)/k^2 via odd/even split vs exact eta(2) remainder
        with mp.workprec(BITS):
            K = 1000  # even
            f = Expansion({(0, 2): mp.mpf(1)}, eng.order)
            D = eng.substitute(f, "odd") - eng.substitute(f, "even")
            t, bound = eng.tail_sum(D, K // 2)
            eta2 = eng.const("zeta", 2) / 2
            partial = as_mpf(sum(Fraction((-1) ** (k + 1), k * k) for k in range(1, K + 1)))
            assert abs(t - (eta2 - partial)) < bound + mp.mpf(10) ** -55


class TestMulCommutes:
    def test_commutative(self, eng):
        e1 = eng.H_expansion(1)
        e2 = eng.h_expansion(2)
        a = e1 * e2
        b = e2 * e1
        assert a.coeffs.keys() == b.coeffs.keys()
        for k in a.coeffs:
            assert a.coeffs[k] == b.coeffs[k]

    def test_identity(self, eng):
        e = eng.h_expansion(3)
        one = Expansion.constant(1, eng.order)
        prod = e * one
        assert prod.coeffs == e.coeffs
