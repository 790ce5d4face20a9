"""Arbitrary-precision reals and the constants everything else consumes.

HPReal is a thin wrapper around an mpmath ``mpf`` that remembers the working
precision (in bits) it was computed at.  Arithmetic between two HPReals runs
at the *minimum* of the operand precisions, so a value can never pretend to
be more accurate than its least accurate ingredient.

The constant routines (``zeta_int``, ``polylog``, ``ln2``, ``euler_gamma``,
``pi``) are implemented from scratch with schemes whose truncation error is
bounded a priori:

* zeta(s)       -- P. Borwein's alternating-eta acceleration (error < 3/(3+sqrt(8))^n)
* Li_s(x)       -- direct series, |x| <= 1/2, geometric tail bound
* ln(2)         -- 2*atanh(1/3), geometric tail bound (ratio 1/9)
* gamma         -- H_K - ln K corrected by a Bernoulli series, first-omitted-term bound
* pi            -- Machin's formula with arctan Taylor series

Every target of ``prec`` decimal digits is computed internally with
GUARD_DIGITS extra digits; long alternating closed forms (25+ terms) cancel
up to ~10 digits, which the guard comfortably absorbs.
"""

from __future__ import annotations

from fractions import Fraction
from functools import lru_cache

import mpmath as mp

GUARD_DIGITS = 15

_LN2_10 = 3.3219280948873626  # bits per decimal digit


def bits_for_digits(digits: int) -> int:
    return int(digits * _LN2_10) + 8


def working_bits(prec: int) -> int:
    """Internal binary precision for a target of `prec` decimal digits."""
    return bits_for_digits(prec + GUARD_DIGITS)


class HPReal:
    """An mpf together with the binary precision it is valid at.

    Instances are immutable and safe to share between threads.
    """

    __slots__ = ("value", "prec")

    def __init__(self, value, prec: int):
        if prec <= 0:
            raise ValueError("precision must be a positive number of bits")
        if isinstance(value, HPReal):
            value = value.value
        if isinstance(value, Fraction):
            with mp.workprec(prec):
                value = mp.mpf(value.numerator) / value.denominator
        elif not isinstance(value, mp.mpf):
            # strings/ints/floats are converted at the stated precision;
            # an existing mpf is kept bit-exact (mp.mpf() would re-round it
            # to whatever the ambient context is).
            with mp.workprec(prec):
                value = mp.mpf(value)
        object.__setattr__(self, "value", value)
        object.__setattr__(self, "prec", int(prec))

    def __setattr__(self, *a):  # pragma: no cover - immutability guard
        raise AttributeError("HPReal is immutable")

    @classmethod
    def from_digits(cls, value, digits: int) -> "HPReal":
        return cls(value, bits_for_digits(digits))

    # -- arithmetic ---------------------------------------------------------

    def _binop(self, other, op) -> "HPReal":
        if isinstance(other, HPReal):
            prec = min(self.prec, other.prec)
            other = other.value
        else:
            prec = self.prec
            if isinstance(other, Fraction):
                with mp.workprec(prec):
                    other = mp.mpf(other.numerator) / other.denominator
        with mp.workprec(prec):
            return HPReal(op(self.value, other), prec)

    def __add__(self, other):
        return self._binop(other, lambda a, b: a + b)

    __radd__ = __add__

    def __sub__(self, other):
        return self._binop(other, lambda a, b: a - b)

    def __rsub__(self, other):
        return self._binop(other, lambda a, b: b - a)

    def __mul__(self, other):
        return self._binop(other, lambda a, b: a * b)

    __rmul__ = __mul__

    def __truediv__(self, other):
        return self._binop(other, lambda a, b: a / b)

    def __rtruediv__(self, other):
        return self._binop(other, lambda a, b: b / a)

    def __pow__(self, n):
        return self._binop(n, lambda a, b: a ** b)

    def __neg__(self):
        return HPReal(-self.value, self.prec)

    def __abs__(self):
        return HPReal(abs(self.value), self.prec)

    def __eq__(self, other):
        return self.value == (other.value if isinstance(other, HPReal) else other)

    def __lt__(self, other):
        return self.value < (other.value if isinstance(other, HPReal) else other)

    def __le__(self, other):
        return self.value <= (other.value if isinstance(other, HPReal) else other)

    def __hash__(self):
        return hash(self.value)

    # -- serialization ------------------------------------------------------

    def to_decimal(self, digits: int | None = None) -> str:
        """Round-to-nearest decimal string with explicit exponent."""
        if digits is None:
            digits = int(self.prec / _LN2_10)
        with mp.workprec(self.prec + 8):
            return mp.nstr(self.value, digits, strip_zeros=False,
                           min_fixed=1, max_fixed=0, show_zero_exponent=True)

    @classmethod
    def parse(cls, text: str, digits: int) -> "HPReal":
        return cls.from_digits(text, digits)

    def __repr__(self):
        return f"HPReal({mp.nstr(self.value, 12)}, prec={self.prec})"


# ---------------------------------------------------------------------------
# constant routines
# ---------------------------------------------------------------------------


class DomainError(ValueError):
    """Argument outside the supported region of a constant routine."""


def _as_fraction(x) -> Fraction:
    if isinstance(x, Fraction):
        return x
    if isinstance(x, int):
        return Fraction(x)
    if isinstance(x, str):
        return Fraction(x)
    raise DomainError(f"polylog argument must be rational, got {x!r}")


@lru_cache(maxsize=None)
def pi(prec: int) -> HPReal:
    """pi via Machin: pi/4 = 4*atan(1/5) - atan(1/239)."""
    if prec < 10:
        raise DomainError("prec must be >= 10")
    bits = working_bits(prec)
    with mp.workprec(bits + 16):

        def atan_inv(q: int) -> mp.mpf:
            # atan(1/q) = sum (-1)^j / ((2j+1) q^(2j+1)); stop when term < 2^-target
            total = mp.mpf(0)
            j = 0
            qsq = q * q
            power = mp.mpf(1) / q
            limit = mp.mpf(2) ** (-(bits + 12))
            while True:
                term = power / (2 * j + 1)
                total += -term if (j & 1) else term
                if term < limit:
                    return total
                power /= qsq
                j += 1

        val = 16 * atan_inv(5) - 4 * atan_inv(239)
    return HPReal(val, bits)


@lru_cache(maxsize=None)
def ln2(prec: int) -> HPReal:
    """ln 2 = 2*atanh(1/3) = 2 * sum_{j>=0} (1/3)^(2j+1)/(2j+1)."""
    if prec < 10:
        raise DomainError("prec must be >= 10")
    bits = working_bits(prec)
    with mp.workprec(bits + 16):
        total = mp.mpf(0)
        power = mp.mpf(1) / 3
        j = 0
        limit = mp.mpf(2) ** (-(bits + 12))
        while True:
            term = power / (2 * j + 1)
            total += term
            if term < limit:
                break
            power /= 9
            j += 1
        val = 2 * total
    return HPReal(val, bits)


@lru_cache(maxsize=None)
def zeta_int(s: int, prec: int) -> HPReal:
    """zeta(s) for integer s >= 2 via Borwein's eta acceleration.

    eta(s) = (1 - 2^(1-s)) zeta(s); with Chebyshev weights d_k the error of
    the n-term scheme is below 3/(3+sqrt(8))^n, so n is chosen directly from
    the bit target.
    """
    if s <= 1:
        raise DomainError("zeta pole/divergence for s <= 1")
    if prec < 10:
        raise DomainError("prec must be >= 10")
    bits = working_bits(prec)
    # (3+sqrt 8)^-n < 2^-(bits+10): n > (bits+10) ln2 / ln(3+sqrt 8)
    n = int((bits + 12) * 0.6931472 / 1.7627472) + 2
    with mp.workprec(bits + 16):
        # d_k = n * sum_{i=0..k} a_i with a_i = (n+i-1)! 4^i / ((n-i)! (2i)!);
        # the overall n cancels in the (d_k - d_n)/d_n ratios below.
        a = Fraction(1, n)
        acc = a
        dvals = [acc]
        for i in range(1, n + 1):
            a = a * 4 * (n + i - 1) * (n - i + 1) / ((2 * i) * (2 * i - 1))
            acc += a
            dvals.append(acc)
        dn = dvals[n]
        total = mp.mpf(0)
        for k in range(n):
            num = (dvals[k] - dn) / dn  # rational, |.| <= 1
            term = mp.mpf(num.numerator) / num.denominator / (k + 1) ** s
            total += -term if (k & 1) else term
        eta = -total
        val = eta / (1 - mp.mpf(2) ** (1 - s))
    return HPReal(val, bits)


@lru_cache(maxsize=None)
def polylog(s: int, x, prec: int) -> HPReal:
    """Li_s(x) by direct series for rational |x| <= 1/2, s >= 1.

    Truncation index N is certified by |x|^N / N^s < 10^-(prec+5).
    """
    xf = _as_fraction(x)
    if abs(xf) > Fraction(1, 2):
        raise DomainError("polylog restricted to |x| <= 1/2")
    if s < 1:
        raise DomainError("polylog requires integer s >= 1")
    if prec < 10:
        raise DomainError("prec must be >= 10")
    bits = working_bits(prec)
    if xf == 0:
        return HPReal(0, bits)
    with mp.workprec(bits + 16):
        xv = mp.mpf(xf.numerator) / xf.denominator
        total = mp.mpf(0)
        power = xv
        k = 1
        limit = mp.mpf(2) ** (-(bits + 12))
        while True:
            total += power / mp.mpf(k) ** s
            if abs(power) < limit:
                break
            power *= xv
            k += 1
    return HPReal(total, bits)


def _bernoulli_fractions(count: int) -> list[Fraction]:
    """B_0..B_count as exact fractions (B_1 = -1/2 convention)."""
    bern = [Fraction(1)]
    for m in range(1, count + 1):
        acc = Fraction(0)
        binom = 1  # C(m+1, j)
        for j in range(m):
            acc += binom * bern[j]
            binom = binom * (m + 1 - j) // (j + 1)
        bern.append(-acc / (m + 1))
    return bern


@lru_cache(maxsize=None)
def bernoulli(n: int) -> Fraction:
    if n < 0:
        raise ValueError("n must be >= 0")
    return _bernoulli_fractions(n)[n]


@lru_cache(maxsize=None)
def euler_gamma(prec: int) -> HPReal:
    """gamma = lim (H_K - ln K), Euler-Maclaurin corrected.

    gamma = H_K - ln K - 1/(2K) + sum_{j=1..m} B_2j / (2j K^2j) + R,
    |R| <= |B_(2m+2)| / ((2m+2) K^(2m+2)).  K is chosen so the bound beats
    the bit target with m = 20 correction terms.
    """
    if prec < 10:
        raise DomainError("prec must be >= 10")
    bits = working_bits(prec)
    m = 20
    digits_needed = prec + GUARD_DIGITS + 4
    K = 10
    while True:
        b = bernoulli(2 * m + 2)
        bound_digits = (2 * m + 2) * mp.log10(K) + mp.log10(2 * m + 2) - mp.log10(abs(b.numerator) / b.denominator)
        if bound_digits > digits_needed:
            break
        K *= 2
    with mp.workprec(bits + 16):
        h = mp.mpf(0)
        for k in range(1, K + 1):
            h += mp.mpf(1) / k
        val = h - mp.ln(K) - mp.mpf(1) / (2 * K)
        Ksq = mp.mpf(K) ** 2
        Kpow = Ksq
        for j in range(1, m + 1):
            b = bernoulli(2 * j)
            val += mp.mpf(b.numerator) / b.denominator / (2 * j) / Kpow
            Kpow *= Ksq
    return HPReal(val, bits)


def constant(kind: str, prec: int, s: int | None = None, x=None) -> HPReal:
    """Uniform entry point used by the CLI (`constants` subcommand)."""
    if kind == "zeta":
        return zeta_int(s, prec)
    if kind == "polylog":
        return polylog(s, _as_fraction(x), prec)
    if kind == "ln2":
        return ln2(prec)
    if kind == "euler_gamma":
        return euler_gamma(prec)
    if kind == "pi":
        return pi(prec)
    raise DomainError(f"unknown constant kind {kind!r}")
