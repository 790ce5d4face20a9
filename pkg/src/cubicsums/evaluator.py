"""Certified numeric evaluation of sum descriptors: exact head + analytic tail.

The head (k <= K) is summed in high-precision floating point with all
harmonic symbols advanced incrementally; nested inner sums ride along as
running accumulators, so the whole head costs O(K) regardless of nesting.
Exact-rational accumulation is deliberately avoided here: 4000 terms of a
weight-6 summand produce fractions with tens of thousands of digits.

The tail (k > K) is the asymptotic expansion of the summand fed through the
Euler-Maclaurin machinery.  Inner sums contribute their antidifference
expansion plus an additive constant recovered numerically from two head
anchors (K/2 and K); the anchors must agree within the expansion error or
the evaluation fails as insufficient-order.

Alternating sums are split into even/odd subsequences (k = 2j, 2j-1) whose
difference is smooth enough for Bernoulli corrections; alternating inner
partial sums A_k^(n) are rewritten under the split as h_j^(n) - 2^-n H_j^(n)
(plus an endpoint term on the odd branch).

The returned error bound folds together the tail bound, the expansion
truncation allowance, bootstrap disagreement and head roundoff.  On a
precision shortfall the evaluation retries once with K -> 4K, B -> B+8.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from fractions import Fraction

import mpmath as mp

from .expansion import Engine, Expansion, InsufficientOrderError
from .hpreal import bits_for_digits
from .summand import InnerSum, SumDescriptor, parse_descriptor, term_exact, validate


class PrecisionShortfall(ArithmeticError):
    """Certified bound exceeds the requested target even after retry."""


@dataclass(frozen=True)
class EvalConfig:
    digits: int = 60        # working precision, decimal digits
    head_k: int = 4000      # head cutoff K (forced even, >= 16)
    order: int = 24         # expansion truncation order B
    em_depth: int = 12      # Bernoulli correction depth
    retry: bool = True

    def __post_init__(self):
        if self.head_k < 16:
            raise ValueError("head cutoff K must be >= 16")
        if self.order < 8:
            raise ValueError("expansion order B must be >= 8")

    @property
    def K(self) -> int:
        return self.head_k + (self.head_k & 1)

    @property
    def bits(self) -> int:
        return bits_for_digits(self.digits)


@dataclass
class EvalResult:
    value: mp.mpf
    bound: mp.mpf
    digits: int
    head_terms: int
    tail_monomials: int
    bootstrap: tuple | None   # (C, |C1-C2|) when an inner sum was bootstrapped
    config: EvalConfig

    def __repr__(self):
        return (f"EvalResult({mp.nstr(self.value, 20)} +/- "
                f"{mp.nstr(self.bound, 3)})")


_ENGINES: dict = {}


def get_engine(bits: int, order: int, em_depth: int = 12) -> Engine:
    key = (bits, order, em_depth)
    if key not in _ENGINES:
        _ENGINES[key] = Engine(bits, order, em_depth)
    return _ENGINES[key]


def _inner_summand_value(inner: InnerSum, k: int, state, eps_pows):
    """Inner summand g(k) from the incremental symbol state."""
    v = mp.mpf(1)
    for f in inner.factors:
        base = state[(f.sym, f.order)]
        if f.shift:
            base = base - eps_pows(f.sym, f.order, k)
        v *= base**f.power
    den = 1
    for d in inner.denom:
        den *= d.exact(k)
    return v / den


class SumEvaluator:
    """Evaluates descriptors with caching; safe to share read-only."""

    def __init__(self):
        self._cache: dict = {}

    # -- public API -----------------------------------------------------------

    def evaluate(self, d: SumDescriptor | str, cfg: EvalConfig,
                 p: int | None = None, target=None,
                 engine: Engine | None = None) -> EvalResult:
        """Evaluate sum(d) to a certified EvalResult.

        `target`: optional bound ceiling; triggers one K*4/B+8 retry and then
        PrecisionShortfall if the certified bound still exceeds it.
        """
        if isinstance(d, str):
            d = parse_descriptor(d)
        validate(d)
        if d.has_param and (p is None or p < 1):
            raise ValueError("descriptor needs integer parameter p >= 1")
        if not d.has_param:
            p = None
        key = (d.to_string(), p, cfg.digits, cfg.K, cfg.order, cfg.em_depth,
               engine is None)
        if engine is None and key in self._cache:
            res = self._cache[key]
            if target is None or res.bound <= target:
                return res
        res = self._evaluate_once(d, cfg, p, engine)
        if target is not None and res.bound > target and cfg.retry:
            cfg2 = replace(cfg, head_k=cfg.K * 4, order=cfg.order + 8)
            res = self._evaluate_once(d, cfg2, p, engine)
            if res.bound > target:
                raise PrecisionShortfall(
                    f"bound {mp.nstr(res.bound, 3)} exceeds target "
                    f"{mp.nstr(mp.mpf(target), 3)} for {d.to_string()!r}")
        if engine is None:
            self._cache[key] = res
        return res

    def evaluate_parametrized(self, d: SumDescriptor | str, p: int,
                              cfg: EvalConfig, target=None) -> EvalResult:
        if p < 1:
            raise ValueError("parameter p must be >= 1")
        return self.evaluate(d, cfg, p=p, target=target)

    # -- implementation ---------------------------------------------------------

    def _evaluate_once(self, d: SumDescriptor, cfg: EvalConfig,
                       p: int | None, engine: Engine | None) -> EvalResult:
        eng = engine or get_engine(cfg.bits, cfg.order, cfg.em_depth)
        bits = cfg.bits
        K = cfg.K
        if p is not None and K < 40 * p:
            K = 40 * p + (40 * p & 1)  # tail expansions need k >> p

        head, abs_accum, anchors, inner_g_at = self._head(d, K, p, bits)

        with mp.workprec(bits):
            tail_val, tail_bound, bootstrap = self._tail(d, K, p, eng, anchors)
            eps = mp.mpf(2) ** (-bits)
            head_err = (5 * K + 100) * eps * (abs_accum + 1)
            value = head + tail_val
            bound = tail_bound + head_err
        return EvalResult(value, bound, cfg.digits, K,
                          0 if not tail_bound else 1, bootstrap, cfg)

    def _head(self, d: SumDescriptor, K: int, p: int | None, bits: int):
        """Incremental float head sum; returns anchors for the bootstrap."""
        needed: set = set()
        for f in d.factors:
            needed.add((f.sym, f.order))
        if d.inner is not None:
            for f in d.inner.factors:
                needed.add((f.sym, f.order))
        alt_orders = sorted({a.order for a in d.alts})
        K1 = K // 2

        with mp.workprec(bits):
            state = {sn: mp.mpf(0) for sn in needed}
            alt_state = {n: mp.mpf(0) for n in alt_orders}
            inner_acc = mp.mpf(0)
            head = mp.mpf(0)
            abs_accum = mp.mpf(0)
            anchors = {}
            one = mp.mpf(1)

            def recip_term(sym, n, k):
                base = k if sym == "H" else 2 * k - 1
                return one / mp.mpf(base) ** n if n > 1 else one / base

            g_k = mp.mpf(0)
            for k in range(1, K + 1):
                for sym, n in needed:
                    state[(sym, n)] += recip_term(sym, n, k)
                sign_odd = (k & 1) == 1
                for n in alt_orders:
                    t = one / mp.mpf(k) ** n if n > 1 else one / k
                    alt_state[n] += t if sign_odd else -t
                if d.inner is not None:
                    g_k = _inner_summand_value(d.inner, k, state, recip_term)
                    inner_acc += g_k
                term = one
                for f in d.factors:
                    v = state[(f.sym, f.order)]
                    if f.shift:
                        v = v - recip_term(f.sym, f.order, k)
                    term = term * v**f.power if f.power > 1 else term * v
                for a in d.alts:
                    term *= alt_state[a.order] ** a.power
                if d.inner is not None:
                    v = inner_acc if d.inner.upper == "k" else inner_acc - g_k
                    term *= v**d.inner.power
                den = 1
                for df in d.denom:
                    den *= df.exact(k, p)
                term /= den
                if d.alternating and not sign_odd:
                    term = -term
                head += term
                abs_accum += abs(term)
                if d.inner is not None and k in (K1, K):
                    anchors[k] = inner_acc
        return head, abs_accum, anchors, None

    def _inner_g_expansion(self, inner: InnerSum, eng: Engine) -> Expansion:
        g = Expansion.constant(1, eng.order, eng.bits)
        for f in inner.factors:
            s = eng.symbol(f.sym, f.order)
            if f.shift:
                s = s - eng.recip("k" if f.sym == "H" else "2k-1", f.order)
            g = g * s.pow(f.power)
        for dd in inner.denom:
            base = {"i": "k", "2i-1": "2k-1", "2i+1": "2k+1"}[dd.base]
            g = g * eng.recip(base, dd.power)
        return g

    def _tail(self, d: SumDescriptor, K: int, p: int | None, eng: Engine,
              anchors: dict):
        """Tail sum over k > K; returns (value, bound, bootstrap-diagnostic)."""
        bootstrap = None
        # main product in k-space, excluding alternating partial-sum factors
        E = Expansion.constant(1, eng.order, eng.bits)
        for f in d.factors:
            s = eng.symbol(f.sym, f.order)
            if f.shift:
                s = s - eng.recip("k" if f.sym == "H" else "2k-1", f.order)
            E = E * s.pow(f.power)
        inner_variants = [Expansion.constant(1, eng.order, eng.bits)] * 2
        if d.inner is not None:
            g = self._inner_g_expansion(d.inner, eng)
            F = eng.antidifference(g)
            K1 = K // 2
            C1 = anchors[K1] - F.eval_at(K1)
            C2 = anchors[K] - F.eval_at(K)
            dC = abs(C1 - C2)
            anchor_tol = max(
                F.truncation_scale() * mp.ln(K1) ** (F.max_ln_power() + 1)
                * mp.mpf(K1) ** (-(eng.order)) * 64,
                mp.mpf(2) ** (-eng.bits) * (abs(anchors[K]) + 1) * K * 64)
            if dC > anchor_tol:
                raise InsufficientOrderError(
                    f"bootstrap anchors disagree by {mp.nstr(dC, 3)} "
                    f"(tolerance {mp.nstr(anchor_tol, 3)}) for "
                    f"{d.inner.text()!r}; raise K or B")
            variants = []
            for C in (C2, C2 + dC + anchor_tol):
                ie = Expansion.constant(C, eng.order, eng.bits) + F
                if d.inner.upper == "k-1":
                    ie = ie - g
                variants.append(ie.pow(d.inner.power))
            inner_variants = variants
            bootstrap = (C2, dC)
        for df in d.denom:
            E = E * eng.recip(df.base, df.power, p)

        def finish(e_full):
            if not d.alternating:
                return eng.tail_sum(e_full, K)
            e_even = eng.substitute(e_full, "even")
            e_odd = eng.substitute(e_full, "odd")
            for a in d.alts:
                a_even = eng.h_expansion(a.order) - \
                    eng.H_expansion(a.order).scale(Fraction(1, 2**a.order))
                a_odd = a_even + eng.recip("k", a.order).scale(
                    Fraction(1, 2**a.order))
                e_even = e_even * a_even.pow(a.power)
                e_odd = e_odd * a_odd.pow(a.power)
            return eng.tail_sum(e_odd - e_even, K // 2)

        val, bound = finish(E * inner_variants[0])
        if d.inner is not None:
            # bootstrap-constant uncertainty: re-run the tail with C shifted
            # by the disagreement and charge the difference to the bound
            val_hi, _ = finish(E * inner_variants[1])
            bound += abs(val_hi - val)
        return val, bound, bootstrap


# module-level default instance used by the verifier and CLI
DEFAULT_EVALUATOR = SumEvaluator()


def evaluate_sum(d, cfg: EvalConfig | None = None, p: int | None = None,
                 target=None) -> EvalResult:
    return DEFAULT_EVALUATOR.evaluate(d, cfg or EvalConfig(), p=p, target=target)


def head_exact(d: SumDescriptor | str, K: int, p: int | None = None) -> Fraction:
    """Exact-rational head sum (test oracle; O(K^2) for nested descriptors)."""
    if isinstance(d, str):
        d = parse_descriptor(d)
    return sum((term_exact(d, k, p) for k in range(1, K + 1)), Fraction(0))
