"""Integer-relation detection: rediscovering closed-form coefficients.

Given a high-precision sum value and a basis of atom monomials, PSLQ finds a
small integer vector r with r_0 * value + sum r_i * monomial_i ~ 0; the
closed form follows by normalizing the value's coefficient to -1.  The PSLQ
core is mpmath's fixed-point implementation; this module owns the problem
setup, the weight-graded basis generator, the soundness re-check of any
returned relation at double precision, and the ClosedForm packaging.

"None" means no relation was found at the given height and precision; it is
never a proof of independence.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from itertools import combinations_with_replacement

import mpmath as mp

from .closedform import ATOMS, AtomCache, ClosedForm, weight
from .evaluator import EvalConfig, SumEvaluator
from .hpreal import bits_for_digits

DEFAULT_MAX_HEIGHT = 2**20

# atoms that participate in weight-graded bases (pi and the odd linear sums
# enter only explicitly; mixed-weight targets take a user-supplied basis)
GRADED_ATOMS = ("z2", "z3", "z4", "z5", "z6", "z7", "l2",
                "li4h", "li5h", "li6h", "OL3", "OL5")


def detection_digits(basis_size: int) -> int:
    """Default working precision for a PSLQ run (reliability margin)."""
    return 20 + 12 * basis_size


def pslq(values, prec: int, max_height: int = DEFAULT_MAX_HEIGHT,
         max_steps: int = 10000):
    """Integer relation for a vector of mpf values, or None.

    Post-condition on success: r != 0, max|r_i| <= max_height and
    |sum r_i x_i| < 10^(-prec) * scale at the stated precision.
    """
    if len(values) < 2:
        raise ValueError("need at least two values")
    if any(v == 0 for v in values):
        raise ValueError("PSLQ requires nonzero values")
    with mp.workprec(bits_for_digits(prec)):
        rel = mp.pslq([mp.mpf(v) for v in values],
                      tol=mp.mpf(10) ** (-prec + 6),
                      maxcoeff=max_height, maxsteps=max_steps)
    return rel


def monomial_basis(target_weight: int, atoms=GRADED_ATOMS) -> list[tuple]:
    """All atom monomials of the given total weight, canonically ordered."""
    out = set()
    names = [a for a in atoms if ATOMS[a] <= target_weight]
    max_factors = target_weight  # weight-1 atoms bound the degree
    for degree in range(1, max_factors + 1):
        for combo in combinations_with_replacement(names, degree):
            mono_dict: dict = {}
            for a in combo:
                mono_dict[a] = mono_dict.get(a, 0) + 1
            mono = tuple(sorted(mono_dict.items()))
            if weight(mono) == target_weight:
                out.add(mono)
    return sorted(out)


def monomial_value(mono: tuple, cache: AtomCache) -> mp.mpf:
    v = mp.mpf(1)
    for a, e in mono:
        v *= cache.value(a) ** e
    return v


@dataclass
class DiscoveryResult:
    closed_form: ClosedForm
    residual: mp.mpf
    relation: list
    basis: list

    def __repr__(self):
        return f"DiscoveryResult({self.closed_form.to_string()})"


class RelationFinder:
    def __init__(self, evaluator: SumEvaluator | None = None,
                 cache: AtomCache | None = None):
        self.evaluator = evaluator or SumEvaluator()
        self.cache = cache or AtomCache(digits=80, evaluator=self.evaluator,
                                        config=EvalConfig(digits=80))

    def discover(self, descriptor: str, basis=None, target_weight=None,
                 digits=None, max_height: int = DEFAULT_MAX_HEIGHT,
                 head_k: int = 4000) -> DiscoveryResult | None:
        """Recover a closed form for sum(descriptor) over a monomial basis.

        `basis`: list of monomials ((atom, power), ...); generated by weight
        grading when only `target_weight` is given.  Any returned relation is
        re-evaluated at twice the detection precision and discarded if the
        residual does not survive.
        """
        if basis is None:
            if target_weight is None:
                raise ValueError("need a basis or a target weight")
            basis = monomial_basis(target_weight)
        digits = digits or detection_digits(len(basis))
        cache = self.cache
        if cache.digits < digits + 10:
            cache = AtomCache(digits=digits + 10, evaluator=self.evaluator,
                              config=EvalConfig(digits=digits + 10))
        cfg = EvalConfig(digits=digits + 10, head_k=head_k)
        value = self.evaluator.evaluate(descriptor, cfg).value
        with mp.workprec(bits_for_digits(digits + 10)):
            vec = [value] + [monomial_value(m, cache) for m in basis]
            rel = pslq(vec, digits, max_height)
            if rel is None or rel[0] == 0:
                return None
            # normalize: r0*value + sum r_i*mono_i = 0
            # -> value = sum (-r_i/r0) mono_i
            r0 = rel[0]
            cf = ClosedForm.from_dict(
                {m: Fraction(-ri, r0) for m, ri in zip(basis, rel[1:])})
            # soundness: residual at ~2x precision must beat the tolerance
            check_digits = 2 * digits
            check_cache = AtomCache(digits=check_digits,
                                    evaluator=self.evaluator,
                                    config=EvalConfig(digits=check_digits))
            cfg2 = EvalConfig(digits=check_digits,
                              head_k=max(head_k, 4000))
            v2 = self.evaluator.evaluate(descriptor, cfg2).value
            with mp.workprec(bits_for_digits(check_digits)):
                resid = v2
                for coef, mono in cf.terms:
                    resid -= mp.mpf(coef.numerator) / coef.denominator \
                        * monomial_value(mono, check_cache)
                resid = abs(resid)
                if resid > mp.mpf(10) ** (-(digits + 8)):
                    return None
        return DiscoveryResult(cf, resid, rel, basis)
