"""Exact generalized harmonic numbers and the finite (per-k) lemma checker.

H_k^(n) = sum_{j<=k} 1/j^n and h_k^(n) = sum_{j<=k} 1/(2j-1)^n are cached
incrementally per order as exact Fractions; verification sweeps touch
consecutive k and H_500 already has a numerator of a few hundred digits, so
recomputing from scratch would be quadratic for no benefit.

Empty sums evaluate to 0: H_0^(n) = h_0^(n) = 0, which is relied on all over
the catalog (shifted symbols H_{k-1}, h_{k-1} at k = 1).
"""

from __future__ import annotations

import threading
from fractions import Fraction

import mpmath as mp

from .hpreal import HPReal


class HarmonicCache:
    """Incremental tables of H_k^(n) and h_k^(n) as exact Fractions."""

    def __init__(self):
        self._tables: dict[tuple[str, int], list[Fraction]] = {}
        self._lock = threading.Lock()

    def _table(self, kind: str, n: int) -> list[Fraction]:
        key = (kind, n)
        tab = self._tables.get(key)
        if tab is None:
            with self._lock:
                tab = self._tables.setdefault(key, [Fraction(0)])
        return tab

    def value(self, kind: str, k: int, n: int = 1) -> Fraction:
        """Exact H_k^(n) (kind 'H') or h_k^(n) (kind 'h'); k = 0 gives 0."""
        if kind not in ("H", "h"):
            raise ValueError(f"kind must be 'H' or 'h', got {kind!r}")
        if k < 0:
            raise ValueError("k must be >= 0")
        if n < 1:
            raise ValueError("order n must be >= 1")
        tab = self._table(kind, n)
        if k >= len(tab):
            with self._lock:
                j = len(tab)
                while j <= k:
                    base = j if kind == "H" else 2 * j - 1
                    tab.append(tab[j - 1] + Fraction(1, base**n))
                    j += 1
        return tab[k]


_cache = HarmonicCache()


def harmonic(kind: str, k: int, n: int = 1) -> Fraction:
    return _cache.value(kind, k, n)


def harmonic_hp(kind: str, k: int, n: int, prec_bits: int) -> HPReal:
    """Nearest-rounded HPReal of the exact harmonic value."""
    v = harmonic(kind, k, n)
    with mp.workprec(prec_bits):
        return HPReal(mp.mpf(v.numerator) / v.denominator, prec_bits)


def alternating_partial(k: int, n: int = 1) -> Fraction:
    """A_k^(n) = sum_{i<=k} (-1)^(i+1)/i^n, exact."""
    if k < 0:
        raise ValueError("k must be >= 0")
    # A_{2m}^(n) = h_m^(n) - 2^-n H_m^(n); odd k adds the final +1/k^n term.
    m = k // 2
    val = harmonic("h", m, n) - Fraction(1, 2**n) * harmonic("H", m, n)
    if k % 2 == 1:
        val += Fraction(1, k**n)
    return val


# ---------------------------------------------------------------------------
# finite lemmas
# ---------------------------------------------------------------------------

# Each lemma maps k to (LHS, RHS) as exact Fractions.  These are the paper's
# restated per-k identities; the checker demands LHS == RHS exactly.


def _lemma_eq50(k: int):
    lhs = sum(harmonic("H", i, 2) / i for i in range(1, k + 1))
    rhs = (harmonic("H", k) * harmonic("H", k, 2) + harmonic("H", k, 3)
           - sum(harmonic("H", i) / Fraction(i * i) for i in range(1, k + 1)))
    return lhs, rhs


def _lemma_eq90(k: int):
    lhs = (sum(harmonic("H", i) / Fraction(i * i) for i in range(1, k + 1))
           + sum(harmonic("H", i, 2) / i for i in range(1, k + 1))
           - harmonic("H", k, 3))
    rhs = harmonic("H", k) * harmonic("H", k, 2)
    return lhs, rhs


def _lemma_eq116(k: int):
    lhs = sum(harmonic("h", i, 2) / (2 * i - 1) for i in range(1, k + 1))
    rhs = (harmonic("h", k, 3) + harmonic("h", k) * harmonic("h", k, 2)
           - sum(harmonic("h", i) / Fraction((2 * i - 1) ** 2) for i in range(1, k + 1)))
    return lhs, rhs


def _lemma_eq117(k: int):
    lhs = sum(harmonic("h", i, 2) / i for i in range(1, k + 1))
    rhs = (harmonic("H", k) * harmonic("h", k, 2)
           - sum(harmonic("H", i - 1) / Fraction((2 * i - 1) ** 2) for i in range(1, k + 1)))
    return lhs, rhs


def _lemma_eq142(k: int):
    lhs = alternating_partial(2 * k, 1)
    rhs = harmonic("h", k) - Fraction(1, 2) * harmonic("H", k)
    return lhs, rhs


def _lemma_eq179(k: int):
    lhs = sum(harmonic("H", i - 1) / (2 * i - 1) for i in range(1, k + 1))
    rhs = (harmonic("H", k) * harmonic("h", k)
           - sum(harmonic("h", i) / i for i in range(1, k + 1)))
    return lhs, rhs


FINITE_LEMMAS = {
    "eq50": _lemma_eq50,
    "eq90": _lemma_eq90,
    "eq116": _lemma_eq116,
    "eq117": _lemma_eq117,
    "eq142": _lemma_eq142,
    "eq179": _lemma_eq179,
}


class LemmaResult:
    __slots__ = ("lemma_id", "k", "lhs", "rhs", "passed")

    def __init__(self, lemma_id: str, k: int, lhs: Fraction, rhs: Fraction):
        self.lemma_id = lemma_id
        self.k = k
        self.lhs = lhs
        self.rhs = rhs
        self.passed = lhs == rhs

    def __repr__(self):
        tag = "pass" if self.passed else "FAIL"
        return f"LemmaResult({self.lemma_id}, k={self.k}, {tag})"


def check_finite_lemma(lemma_id: str, k: int) -> LemmaResult:
    """Exact pass/fail for one catalog finite lemma at one k."""
    if lemma_id not in FINITE_LEMMAS:
        raise KeyError(f"unknown finite lemma {lemma_id!r}")
    if k < 1:
        raise ValueError("k must be >= 1")
    lhs, rhs = FINITE_LEMMAS[lemma_id](k)
    return LemmaResult(lemma_id, k, lhs, rhs)


# Incremental sweep: each lemma keeps running accumulators so the k-loop does
# O(1) Fraction operations per step instead of re-summing prefixes.


class _Sweeper:
    def __init__(self, lemma_id: str):
        self.lemma_id = lemma_id
        self.acc: dict[str, Fraction] = {}

    def _bump(self, name: str, delta: Fraction) -> Fraction:
        v = self.acc.get(name, Fraction(0)) + delta
        self.acc[name] = v
        return v

    def step(self, k: int) -> LemmaResult:
        H = lambda n=1: harmonic("H", k, n)
        h = lambda n=1: harmonic("h", k, n)
        lid = self.lemma_id
        if lid == "eq50":
            lhs = self._bump("a", harmonic("H", k, 2) / k)
            rhs = H() * H(2) + H(3) - self._bump("b", H() / Fraction(k * k))
        elif lid == "eq90":
            lhs = (self._bump("a", H() / Fraction(k * k))
                   + self._bump("b", H(2) / k) - H(3))
            rhs = H() * H(2)
        elif lid == "eq116":
            lhs = self._bump("a", h(2) / (2 * k - 1))
            rhs = h(3) + h() * h(2) - self._bump("b", h() / Fraction((2 * k - 1) ** 2))
        elif lid == "eq117":
            lhs = self._bump("a", h(2) / k)
            rhs = H() * h(2) - self._bump("b", harmonic("H", k - 1) / Fraction((2 * k - 1) ** 2))
        elif lid == "eq142":
            lhs = self._bump("a", Fraction(1, 2 * k - 1) - Fraction(1, 2 * k))
            rhs = h() - Fraction(1, 2) * H()
        elif lid == "eq179":
            lhs = self._bump("a", harmonic("H", k - 1) / (2 * k - 1))
            rhs = H() * h() - self._bump("b", h() / k)
        else:  # pragma: no cover
            raise KeyError(lid)
        return LemmaResult(lid, k, lhs, rhs)


def sweep_finite_lemmas(kmax: int, lemma_ids=None):
    """Run every finite lemma for k in [1, kmax].

    Returns (per-lemma pass counts, list of failing LemmaResults).
    """
    ids = list(lemma_ids) if lemma_ids else sorted(FINITE_LEMMAS)
    counts: dict[str, int] = {}
    failures: list[LemmaResult] = []
    for lemma_id in ids:
        if lemma_id not in FINITE_LEMMAS:
            raise KeyError(f"unknown finite lemma {lemma_id!r}")
        sweeper = _Sweeper(lemma_id)
        passed = 0
        for k in range(1, kmax + 1):
            res = sweeper.step(k)
            if res.passed:
                passed += 1
            else:
                failures.append(res)
        counts[lemma_id] = passed
    return counts, failures
