"""Asymptotic expansions in span{(ln k)^a * k^(-b)} and certified tail sums.

The sum evaluator splits every series into an exact head (k <= K) and an
analytic tail (k > K).  This module supplies the tail machinery:

* ``Expansion``: a finite map (a, b) -> coefficient, representing
  sum c_{a,b} (ln k)^a k^(-b), truncated at k-order B.  Coefficients are
  mpmath floats at the engine's working precision (they contain gamma, ln 2
  and zeta values numerically; a symbolic coefficient ring would triple the
  complexity for no verification benefit).

* symbol expansions of H_k^(n) and h_k^(n), reciprocal-base expansions for
  the denominators (2k-1), (2k+1), (k+p), (2k+2p-1);

* Euler-Maclaurin machinery: T(a,b,K) = sum_{k>K} (ln k)^a / k^b with a
  first-omitted-term error bound, and the antidifference operator used to
  expand nested inner sums (partial-sum asymptotics up to an additive
  constant that the evaluator bootstraps numerically);

* even/odd substitution operators k -> 2j, k -> 2j-1 used to split
  alternating tails into two smooth subsequences (sign oscillation would
  otherwise break the Bernoulli correction series).

The gamma constant appears in H/h expansions and must cancel from every
verified identity; the verifier checks that numerically (perturbation test)
rather than symbolically.
"""

from __future__ import annotations

import math
from fractions import Fraction
from functools import lru_cache

import mpmath as mp

from . import hpreal
from .hpreal import bernoulli


class DivergenceError(ValueError):
    """Tail requested for a non-summable monomial (b < 2)."""


class InsufficientOrderError(ValueError):
    """Bootstrap anchors disagree beyond the expansion's error bound."""


class Expansion:
    """sum over (a, b) of coeff * (ln k)^a * k^(-b), truncated at b <= order.

    Carries its working precision in bits; arithmetic between expansions runs
    at the minimum of the operand precisions regardless of the ambient
    mpmath context.
    """

    __slots__ = ("coeffs", "order", "bits")

    def __init__(self, coeffs: dict, order: int, bits: int = 300):
        self.coeffs = {ab: c for ab, c in coeffs.items() if c != 0}
        self.order = order
        self.bits = bits

    @classmethod
    def constant(cls, value, order: int, bits: int = 300) -> "Expansion":
        return cls({(0, 0): mp.mpf(value)}, order, bits)

    @classmethod
    def ln_k(cls, order: int, bits: int = 300) -> "Expansion":
        return cls({(1, 0): mp.mpf(1)}, order, bits)

    def __add__(self, other: "Expansion") -> "Expansion":
        bits = min(self.bits, other.bits)
        with mp.workprec(bits):
            out = dict(self.coeffs)
            for ab, c in other.coeffs.items():
                out[ab] = out.get(ab, mp.mpf(0)) + c
        return Expansion(out, min(self.order, other.order), bits)

    def __sub__(self, other: "Expansion") -> "Expansion":
        bits = min(self.bits, other.bits)
        with mp.workprec(bits):
            out = dict(self.coeffs)
            for ab, c in other.coeffs.items():
                out[ab] = out.get(ab, mp.mpf(0)) - c
        return Expansion(out, min(self.order, other.order), bits)

    def scale(self, c) -> "Expansion":
        with mp.workprec(self.bits):
            if isinstance(c, Fraction):
                c = mp.mpf(c.numerator) / c.denominator
            out = {ab: v * c for ab, v in self.coeffs.items()}
        return Expansion(out, self.order, self.bits)

    def __mul__(self, other: "Expansion") -> "Expansion":
        order = min(self.order, other.order)
        bits = min(self.bits, other.bits)
        parts: dict = {}
        with mp.workprec(bits):
            for (a1, b1), c1 in self.coeffs.items():
                for (a2, b2), c2 in other.coeffs.items():
                    b = b1 + b2
                    if b > order:
                        continue
                    parts.setdefault((a1 + a2, b), []).append(c1 * c2)
            # accumulate each coefficient in a canonical order so that
            # multiplication is exactly commutative despite rounding
            out = {}
            for key, vals in parts.items():
                vals.sort()
                total = mp.mpf(0)
                for v in vals:
                    total += v
                out[key] = total
        return Expansion(out, order, bits)

    def pow(self, n: int) -> "Expansion":
        if n < 0:
            raise ValueError("negative powers not supported")
        result = Expansion.constant(1, self.order, self.bits)
        base = self
        while n:
            if n & 1:
                result = result * base
            base = base * base if n > 1 else base
            n >>= 1
        return result

    def shift_b(self, delta: int) -> "Expansion":
        """Multiply by k^(-delta)."""
        return Expansion({(a, b + delta): c for (a, b), c in self.coeffs.items()
                          if b + delta <= self.order}, self.order, self.bits)

    def derivative(self) -> "Expansion":
        """d/dk; raises every k-order by one."""
        out: dict = {}
        with mp.workprec(self.bits):
            for (a, b), c in self.coeffs.items():
                if b + 1 <= self.order + 1:
                    if a >= 1:
                        key = (a - 1, b + 1)
                        out[key] = out.get(key, mp.mpf(0)) + a * c
                    key = (a, b + 1)
                    out[key] = out.get(key, mp.mpf(0)) - b * c
        return Expansion(out, self.order, self.bits)

    def eval_at(self, k: int) -> mp.mpf:
        with mp.workprec(self.bits):
            lk = mp.ln(k)
            total = mp.mpf(0)
            for (a, b), c in sorted(self.coeffs.items(), key=lambda t: t[0][1]):
                total += c * lk**a / mp.mpf(k) ** b
        return total

    def max_ln_power(self) -> int:
        return max((a for (a, b) in self.coeffs), default=0)

    def truncation_scale(self) -> mp.mpf:
        """Magnitude proxy for the dropped b > order terms: the largest
        coefficient living at the last two kept orders."""
        scale = mp.mpf(0)
        for (a, b), c in self.coeffs.items():
            if b >= self.order - 1:
                scale = max(scale, abs(c))
        return scale

    def __repr__(self):
        items = sorted(self.coeffs.items(), key=lambda t: (t[0][1], t[0][0]))
        body = " + ".join(f"{mp.nstr(c, 8)}*L^{a}k^-{b}" for (a, b), c in items[:6])
        more = "" if len(items) <= 6 else f" (+{len(items)-6} terms)"
        return f"Expansion[{body}{more}; order={self.order}]"


def _binom(n: int, r: int) -> int:
    return math.comb(n, r)


class Engine:
    """Expansion builders and Euler-Maclaurin tails at one working precision.

    Instances cache symbol expansions; they are cheap to create per
    (bits, order) configuration and safe to share read-only.
    """

    def __init__(self, bits: int, order: int = 24, em_depth: int = 12):
        if order < 8:
            raise ValueError("expansion order must be >= 8")
        self.bits = bits
        self.order = order
        self.em_depth = em_depth
        self._digits = max(int(bits / 3.3219) + 5, 20)
        self._sym_cache: dict = {}

    # -- constants ----------------------------------------------------------

    def const(self, name: str, n: int | None = None) -> mp.mpf:
        key = ("const", name, n)
        if key not in self._sym_cache:
            if name == "gamma":
                v = hpreal.euler_gamma(self._digits).value
            elif name == "ln2":
                v = hpreal.ln2(self._digits).value
            elif name == "zeta":
                v = hpreal.zeta_int(n, self._digits).value
            else:  # pragma: no cover
                raise KeyError(name)
            self._sym_cache[key] = v
        return self._sym_cache[key]

    def gamma_value(self) -> mp.mpf:
        return self.const("gamma")

    def set_gamma(self, value) -> None:
        """Override gamma (used by the gamma-perturbation soundness test)."""
        self._sym_cache[("const", "gamma", None)] = mp.mpf(value)
        for key in [k for k in self._sym_cache if k[0] in ("H", "h")]:
            del self._sym_cache[key]

    # -- symbol expansions ----------------------------------------------------

    def H_expansion(self, n: int) -> Expansion:
        """H_k^(n) for k -> infinity."""
        key = ("H", n)
        if key in self._sym_cache:
            return self._sym_cache[key]
        with mp.workprec(self.bits):
            B = self.order
            if n == 1:
                coeffs = {(1, 0): mp.mpf(1), (0, 0): self.const("gamma"),
                          (0, 1): mp.mpf(0.5)}
                for j in range(1, B // 2 + 1):
                    b2j = bernoulli(2 * j)
                    if 2 * j <= B:
                        coeffs[(0, 2 * j)] = -mp.mpf(b2j.numerator) / (b2j.denominator * 2 * j)
                e = Expansion(coeffs, B, self.bits)
            else:
                # H_k^(n) = zeta(n) - T(0, n, k) with the E-M expansion of the
                # remainder: k^(1-n)/(n-1) - k^(-n)/2 + sum B_2m/(2m)! (n)_(2m-1) k^(-n-2m+1)
                coeffs = {(0, 0): self.const("zeta", n)}
                coeffs[(0, n - 1)] = -mp.mpf(1) / (n - 1)
                if n <= B:
                    coeffs[(0, n)] = mp.mpf(0.5)
                poch = Fraction(1)
                for m in range(1, self.order):
                    # (n)_(2m-1) = n (n+1) ... (n+2m-2)
                    poch = Fraction(1)
                    for t in range(2 * m - 1):
                        poch *= (n + t)
                    b = n + 2 * m - 1
                    if b > B:
                        break
                    b2m = bernoulli(2 * m)
                    coef = Fraction(b2m) / math.factorial(2 * m) * poch
                    coeffs[(0, b)] = coeffs.get((0, b), mp.mpf(0)) - mp.mpf(
                        coef.numerator) / coef.denominator
                e = Expansion(coeffs, B, self.bits)
        self._sym_cache[key] = e
        return e

    def h_expansion(self, n: int) -> Expansion:
        """h_k^(n) for k -> infinity."""
        key = ("h", n)
        if key in self._sym_cache:
            return self._sym_cache[key]
        with mp.workprec(self.bits):
            B = self.order
            if n == 1:
                # h_k = H_2k - H_k/2 composed directly:
                # ln2 + (ln k)/2 + gamma/2 + sum_j -B_2j (4^-j - 1/2)/(2j) k^-2j
                coeffs = {(1, 0): mp.mpf(0.5),
                          (0, 0): self.const("ln2") + self.const("gamma") / 2}
                for j in range(1, B // 2 + 1):
                    if 2 * j > B:
                        break
                    b2j = bernoulli(2 * j)
                    factor = Fraction(b2j) * (Fraction(1, 4**j) - Fraction(1, 2)) / (2 * j)
                    coeffs[(0, 2 * j)] = -mp.mpf(factor.numerator) / factor.denominator
                e = Expansion(coeffs, B, self.bits)
            else:
                # h_k^(n) = (1-2^-n) zeta(n) - sum_{j>k} (2j-1)^(-n); E-M for
                # f(x) = (2x-1)^(-n): integral (2k-1)^(1-n)/(2(n-1)), then
                # -f(k)/2 and Bernoulli corrections with f^(m) = (-2)^m (n)_m f/(2x-1)^m
                total = Expansion({(0, 0): (1 - mp.mpf(2) ** -n) * self.const("zeta", n)},
                                  B, self.bits)
                base = self.recip("2k-1", 1)
                tail = base.pow(n - 1).scale(Fraction(1, 2 * (n - 1)))
                tail = tail - base.pow(n).scale(Fraction(1, 2))
                for m in range(1, self.em_depth + 1):
                    b = n + 2 * m - 1
                    if b > B:
                        break
                    poch = Fraction(1)
                    for t in range(2 * m - 1):
                        poch *= (n + t)
                    coef = Fraction(bernoulli(2 * m)) / math.factorial(2 * m) \
                        * poch * Fraction(2) ** (2 * m - 1)
                    tail = tail + base.pow(b).scale(coef)
                e = total - tail
        self._sym_cache[key] = e
        return e

    def symbol(self, sym: str, n: int) -> Expansion:
        return self.H_expansion(n) if sym == "H" else self.h_expansion(n)

    def recip(self, base: str, power: int, p: int | None = None) -> Expansion:
        """Expansion of base^(-power) in k (or of the same shapes in any
        formal variable; the result is variable-agnostic)."""
        key = ("recip", base, power, p)
        if key in self._sym_cache:
            return self._sym_cache[key]
        B = self.order
        with mp.workprec(self.bits):
            if base == "k":
                e = Expansion({(0, power): mp.mpf(1)}, B, self.bits)
            else:
                # base = s*k + t: (sk+t)^(-c) = s^-c k^-c (1 + t/(sk))^(-c)
                if base == "2k-1":
                    s, t = 2, -1
                elif base == "2k+1":
                    s, t = 2, 1
                elif base == "k+p":
                    if p is None:
                        raise ValueError("parametrized base needs p")
                    s, t = 1, p
                elif base == "2k+2p-1":
                    if p is None:
                        raise ValueError("parametrized base needs p")
                    s, t = 2, 2 * p - 1
                else:  # pragma: no cover
                    raise KeyError(base)
                coeffs = {}
                c = power
                for j in range(0, B - c + 1):
                    coef = Fraction((-t) ** j * _binom(c + j - 1, j),
                                    s ** (c + j))
                    coeffs[(0, c + j)] = mp.mpf(coef.numerator) / coef.denominator
                e = Expansion(coeffs, B, self.bits)
        if p is None:
            self._sym_cache[key] = e
        return e

    # -- Euler-Maclaurin tails -------------------------------------------------

    def _deriv_poly(self, a: int, b: int, m: int) -> list[tuple[int, int, Fraction]]:
        """m-th derivative of (ln x)^a x^(-b) as [(a', b', coef)]."""
        terms = {(a, b): Fraction(1)}
        for _ in range(m):
            nxt: dict = {}
            for (aa, bb), c in terms.items():
                if aa >= 1:
                    key = (aa - 1, bb + 1)
                    nxt[key] = nxt.get(key, Fraction(0)) + aa * c
                key = (aa, bb + 1)
                nxt[key] = nxt.get(key, Fraction(0)) - bb * c
            terms = nxt
        return [(aa, bb, c) for (aa, bb), c in terms.items()]

    def _eval_monos(self, terms, K) -> mp.mpf:
        L = mp.ln(K)
        total = mp.mpf(0)
        for aa, bb, c in terms:
            total += mp.mpf(c.numerator) / c.denominator * L**aa / mp.mpf(K) ** bb
        return total

    def tail(self, a: int, b: int, K: int) -> tuple[mp.mpf, mp.mpf]:
        """T(a,b,K) = sum_{k>K} (ln k)^a / k^b with an error bound.

        Euler-Maclaurin with `em_depth` Bernoulli terms; the bound is four
        times the first omitted correction term.
        """
        if b < 2:
            raise DivergenceError(f"tail with k-order {b} diverges")
        if K < 8:
            raise ValueError("tail cutoff K must be >= 8 (asymptotic regime)")
        key = ("tail", a, b, K)
        if key in self._sym_cache:
            return self._sym_cache[key]
        with mp.workprec(self.bits):
            L = mp.ln(K)
            # integral_K^inf (ln x)^a x^-b dx
            integral = mp.mpf(0)
            fact = mp.mpf(math.factorial(a))
            for j in range(a + 1):
                integral += (fact / math.factorial(j)) * L**j \
                    / mp.mpf(b - 1) ** (a - j + 1)
            integral *= mp.mpf(K) ** (1 - b)
            total = integral - L**a / (2 * mp.mpf(K) ** b)
            for m in range(1, self.em_depth + 1):
                dterms = self._deriv_poly(a, b, 2 * m - 1)
                b2m = bernoulli(2 * m)
                total -= mp.mpf(b2m.numerator) / b2m.denominator \
                    / math.factorial(2 * m) * self._eval_monos(dterms, K)
            domit = self._deriv_poly(a, b, 2 * self.em_depth + 1)
            b_next = bernoulli(2 * self.em_depth + 2)
            bound = 4 * abs(mp.mpf(b_next.numerator) / b_next.denominator) \
                / math.factorial(2 * self.em_depth + 2) \
                * abs(self._eval_monos(domit, K))
        self._sym_cache[key] = (total, bound)
        return total, bound

    def tail_sum(self, e: Expansion, K: int) -> tuple[mp.mpf, mp.mpf]:
        """sum_{k>K} of an expansion, with the truncation allowance folded in.

        Monomials with b <= 1 mean a divergent or un-normalized summand and
        raise, unless their coefficient sits at roundoff level (exact
        cancellations leave ~2^-bits residue), in which case they are dropped
        into the bound.
        """
        with mp.workprec(self.bits):
            ghost = mp.mpf(2) ** (-(self.bits * 3) // 4)
            scale = max((abs(c) for c in e.coeffs.values()), default=mp.mpf(1))
            total = mp.mpf(0)
            bound = mp.mpf(0)
            for (a, b), c in sorted(e.coeffs.items(), key=lambda t: t[0]):
                if b < 2:
                    if abs(c) <= ghost * max(scale, 1):
                        # roundoff ghost of an exact cancellation
                        bound += abs(c) * (mp.ln(K) ** (a + 2)) * 100
                        continue
                    raise DivergenceError(
                        f"non-summable monomial (a={a}, b={b}) with "
                        f"coefficient {mp.nstr(c, 8)}")
                val, err = self.tail(a, b, K)
                total += c * val
                bound += abs(c) * err
            # allowance for the dropped b > order terms of the expansion
            amax = e.max_ln_power()
            bound += 8 * e.truncation_scale() * mp.ln(K) ** amax \
                * mp.mpf(K) ** (-(e.order + 1)) * K / max(e.order - 1, 1)
        return total, bound

    # -- antidifference (inner-sum asymptotics) --------------------------------

    def _integral_monomial(self, a: int, b: int) -> list[tuple[int, int, mp.mpf]]:
        """Indefinite integral of (ln x)^a x^(-b), constant dropped."""
        if b == 0:
            raise DivergenceError("inner summand with k-order 0")
        if b == 1:
            return [(a + 1, 0, mp.mpf(1) / (a + 1))]
        out = []
        fact = math.factorial(a)
        for j in range(a + 1):
            out.append((j, b - 1,
                        -mp.mpf(fact) / math.factorial(j) / mp.mpf(b - 1) ** (a - j + 1)))
        return out

    def antidifference(self, g: Expansion) -> Expansion:
        """F with sum_{i<=k} g(i) = C + F(k) + O(k^-(order)); C is *not*
        determined here (numeric bootstrap supplies it)."""
        B = self.order
        with mp.workprec(self.bits):
            coeffs: dict = {}

            def bump(a, b, c):
                if b <= B:
                    coeffs[(a, b)] = coeffs.get((a, b), mp.mpf(0)) + c

            for (a, b), c in g.coeffs.items():
                for aa, bb, ci in self._integral_monomial(a, b):
                    bump(aa, bb, c * ci)
                bump(a, b, c / 2)
            for m in range(1, self.em_depth + 1):
                b2m = bernoulli(2 * m)
                factor = mp.mpf(b2m.numerator) / b2m.denominator / math.factorial(2 * m)
                for (a, b), c in g.coeffs.items():
                    for aa, bb, ci in self._deriv_poly(a, b, 2 * m - 1):
                        if bb <= B:
                            bump(aa, bb,
                                 factor * c * mp.mpf(ci.numerator) / ci.denominator)
        return Expansion(coeffs, B, self.bits)

    # -- even/odd substitution (alternating tails) -----------------------------

    def _ln_corr(self, t: int) -> Expansion:
        """ln(1 + t/(2j)) as an expansion in j, |t| = 1."""
        B = self.order
        with mp.workprec(self.bits):
            coeffs = {}
            for m in range(1, B + 1):
                coef = Fraction((-1) ** (m + 1) * t**m, m * 2**m)
                coeffs[(0, m)] = mp.mpf(coef.numerator) / coef.denominator
        return Expansion(coeffs, B, self.bits)

    def _ln_at(self, parity: str) -> Expansion:
        """Expansion of ln(2j) or ln(2j-1) in the variable j."""
        key = ("lnat", parity)
        if key in self._sym_cache:
            return self._sym_cache[key]
        base = Expansion({(0, 0): self.const("ln2"), (1, 0): mp.mpf(1)},
                         self.order, self.bits)
        e = base if parity == "even" else base + self._ln_corr(-1)
        self._sym_cache[key] = e
        return e

    def substitute(self, e: Expansion, parity: str) -> Expansion:
        """Compose an expansion in k with k = 2j (parity 'even') or
        k = 2j-1 ('odd'); the result is an expansion in j."""
        B = self.order
        ln_powers = [Expansion.constant(1, B, self.bits)]
        lnk = self._ln_at(parity)
        amax = e.max_ln_power()
        for _ in range(amax):
            ln_powers.append(ln_powers[-1] * lnk)
        if parity == "even":
            recip1 = Expansion({(0, 1): mp.mpf(0.5)}, B, self.bits)
        else:
            recip1 = self.recip("2k-1", 1)  # shape (2j-1)^-1 in variable j
        recip_powers = [Expansion.constant(1, B, self.bits)]
        bmax = max((b for (a, b) in e.coeffs), default=0)
        for _ in range(bmax):
            recip_powers.append(recip_powers[-1] * recip1)
        out = Expansion({}, B, self.bits)
        for (a, b), c in e.coeffs.items():
            out = out + (ln_powers[a] * recip_powers[b]).scale(c)
        return out
