"""Closed-form algebra: the constant atom basis, monomials, and evaluation.

The atom set is closed (the parser rejects anything else):

    z2..z7    zeta(2)..zeta(7)
    l2        ln 2
    li4h li5h li6h   Li_4(1/2) Li_5(1/2) Li_6(1/2)
    li6mh li6me      Li_6(-1/2) Li_6(-1/8)
    OL3 OL5   odd linear sums  sum h_k/k^3  and  sum h_k/k^5
    mzv51 mzv511 mzv331   alternating MZVs  zeta(5bar,1), zeta(5bar,1,1), zeta(3bar,3,1)
    pi        order-7 cross-checks only

OL3 stays numeric (the source keeps sum h_k/k^3 symbolic throughout); OL5 has
an independent closed form over the Li_6 atoms used as a cross-check, not as
its definition.  The alternating MZVs never come with a stated sign
convention for the bar, so both sigma(m) = (-1)^m and (-1)^(m+1) are
implemented and the convention is selected numerically against the anchor
identity (the zeta(5bar,1) reduction); the selection is recorded and
reported.
"""

from __future__ import annotations

import threading
from dataclasses import dataclass
from fractions import Fraction

import mpmath as mp

from . import hpreal
from .evaluator import DEFAULT_EVALUATOR, EvalConfig

# atom name -> weight
ATOMS = {
    "z2": 2, "z3": 3, "z4": 4, "z5": 5, "z6": 6, "z7": 7,
    "l2": 1,
    "li4h": 4, "li5h": 5, "li6h": 6, "li6mh": 6, "li6me": 6,
    "OL3": 4, "OL5": 6,
    "mzv51": 6, "mzv511": 7, "mzv331": 7,
    "pi": 1,
}

# descriptors behind the engine-valued atoms
ODD_LINEAR = {"OL3": "h / k^3", "OL5": "h / k^5"}

# raw alternating sums behind the MZV atoms, under sigma(m) = (-1)^(m+1)
# (the engine's alt flag); sigma(m) = (-1)^m flips the overall sign.
_MZV_RAW = {
    "mzv51": (("alt H@k-1 / k^5", Fraction(1)),),
    "mzv511": (("alt H@k-1^2 / k^5", Fraction(1, 2)),
               ("alt H2@k-1 / k^5", Fraction(-1, 2))),
    "mzv331": (("alt IS[H@i-1 / i^3; k-1] / k^3", Fraction(1)),),
}

MZV_DEFAULT_SIGMA = {"mzv51": "(-1)^m", "mzv511": "(-1)^m", "mzv331": "(-1)^m"}


class UnknownAtomError(KeyError):
    pass


def weight(monomial: tuple) -> int:
    """Total weight of an atom-power monomial."""
    return sum(ATOMS[a] * e for a, e in monomial)


@dataclass(frozen=True)
class ClosedForm:
    """Rational linear combination of atom monomials plus a rational term.

    terms: tuple of (coefficient, monomial); a monomial is a tuple of
    (atom, power) pairs sorted by atom name; monomials are unique and
    coefficients nonzero.  The empty monomial () is the rational term.
    """

    terms: tuple

    @classmethod
    def from_dict(cls, d: dict) -> "ClosedForm":
        items = []
        for mono, coef in d.items():
            coef = Fraction(coef)
            if coef == 0:
                continue
            mono = tuple(sorted((a, int(e)) for a, e in mono if e))
            for a, _ in mono:
                if a not in ATOMS:
                    raise UnknownAtomError(a)
            items.append((coef, mono))
        items.sort(key=lambda t: (len(t[1]), t[1]))
        return cls(tuple(items))

    def as_dict(self) -> dict:
        return {mono: coef for coef, mono in self.terms}

    def __add__(self, other: "ClosedForm") -> "ClosedForm":
        d = self.as_dict()
        for coef, mono in other.terms:
            d[mono] = d.get(mono, Fraction(0)) + coef
        return ClosedForm.from_dict(d)

    def scale(self, c: Fraction) -> "ClosedForm":
        return ClosedForm.from_dict({mono: coef * c for coef, mono in self.terms})

    def __sub__(self, other: "ClosedForm") -> "ClosedForm":
        return self + other.scale(Fraction(-1))

    def is_zero(self) -> bool:
        return not self.terms

    def weights(self) -> set:
        return {weight(mono) for _, mono in self.terms if mono}

    def to_string(self) -> str:
        if not self.terms:
            return "0"
        parts = []
        for coef, mono in self.terms:
            body = "*".join(f"{a}^{e}" if e > 1 else a for a, e in mono)
            if body:
                if coef == 1:
                    parts.append(body)
                elif coef == -1:
                    parts.append(f"-{body}")
                else:
                    parts.append(f"{coef}*{body}")
            else:
                parts.append(str(coef))
        out = parts[0]
        for p in parts[1:]:
            out += f" - {p[1:]}" if p.startswith("-") else f" + {p}"
        return out

    def __str__(self):
        return self.to_string()


class AtomCache:
    """Numeric atom values at a given decimal precision, computed once.

    The odd linear sums and MZV atoms come from the sum engine; plain
    constants from the scratch-built routines.  Thread-safe initialization;
    values immutable afterwards.
    """

    def __init__(self, digits: int = 60, mzv_digits: int = 25,
                 evaluator=None, config: EvalConfig | None = None):
        self.digits = digits
        self.mzv_digits = mzv_digits
        self._evaluator = evaluator or DEFAULT_EVALUATOR
        self._config = config or EvalConfig(digits=digits)
        self._mzv_config = EvalConfig(digits=max(mzv_digits, 30), head_k=2000,
                                      order=20)
        self._values: dict = {}
        self._bounds: dict = {}
        self._lock = threading.Lock()
        self.sigma_convention = dict(MZV_DEFAULT_SIGMA)

    def _compute(self, name: str):
        digs = self.digits
        if name.startswith("z"):
            v = hpreal.zeta_int(int(name[1]), digs).value
            b = mp.mpf(10) ** (-digs)
        elif name == "l2":
            v = hpreal.ln2(digs).value
            b = mp.mpf(10) ** (-digs)
        elif name == "pi":
            v = hpreal.pi(digs).value
            b = mp.mpf(10) ** (-digs)
        elif name.startswith("li"):
            arg = {"li4h": (4, Fraction(1, 2)), "li5h": (5, Fraction(1, 2)),
                   "li6h": (6, Fraction(1, 2)), "li6mh": (6, Fraction(-1, 2)),
                   "li6me": (6, Fraction(-1, 8))}[name]
            v = hpreal.polylog(arg[0], arg[1], digs).value
            b = mp.mpf(10) ** (-digs)
        elif name in ODD_LINEAR:
            res = self._evaluator.evaluate(ODD_LINEAR[name], self._config,
                                           target=mp.mpf(10) ** (-(digs - 10)))
            v, b = res.value, res.bound
        elif name in _MZV_RAW:
            sign = -1 if self.sigma_convention[name] == "(-1)^m" else 1
            # depth-2 atoms (mzv511, mzv331) run at the reduced class-C
            # precision; the depth-1 zeta(5bar,1) at full precision
            cfg = self._config if name == "mzv51" else self._mzv_config
            with mp.workprec(cfg.bits):
                v = mp.mpf(0)
                b = mp.mpf(0)
                for text, coef in _MZV_RAW[name]:
                    res = self._evaluator.evaluate(text, cfg)
                    v += mp.mpf(coef.numerator) / coef.denominator * res.value
                    b += abs(mp.mpf(coef.numerator) / coef.denominator) * res.bound
                v *= sign
        else:
            raise UnknownAtomError(name)
        return v, b

    def value(self, name: str) -> mp.mpf:
        if name not in self._values:
            with self._lock:
                if name not in self._values:
                    v, b = self._compute(name)
                    self._values[name] = v
                    self._bounds[name] = b
        return self._values[name]

    def bound(self, name: str) -> mp.mpf:
        self.value(name)
        return self._bounds[name]

    def set_sigma(self, name: str, convention: str) -> None:
        if convention not in ("(-1)^m", "(-1)^(m+1)"):
            raise ValueError(convention)
        with self._lock:
            self.sigma_convention[name] = convention
            self._values.pop(name, None)
            self._bounds.pop(name, None)

    def select_mzv51_convention(self, tolerance=None) -> str:
        """Pick the sigma convention for zeta(5bar,1) from its reduction to
        -93/128 z6 + 31/64 z3^2 + 1/16 OL5; exactly one convention fits."""
        tolerance = tolerance or mp.mpf(10) ** -20
        with mp.workprec(self._mzv_config.bits):
            rhs = (Fraction(-93, 128) * self.value("z6")
                   + Fraction(31, 64) * self.value("z3") ** 2
                   + Fraction(1, 16) * self.value("OL5"))
            best = None
            for conv in ("(-1)^m", "(-1)^(m+1)"):
                self.set_sigma("mzv51", conv)
                delta = abs(self.value("mzv51") - rhs)
                if delta < tolerance:
                    best = conv
                    break
            if best is None:
                raise ArithmeticError("neither sigma convention satisfies the "
                                      "zeta(5bar,1) anchor reduction")
            self.set_sigma("mzv51", best)
        return best

    def values_hash(self) -> str:
        """Stable hash of all currently computed atom values (report metadata)."""
        import hashlib
        items = sorted((k, mp.nstr(v, min(self.digits, 40)))
                       for k, v in self._values.items())
        return hashlib.sha256(repr(items).encode()).hexdigest()[:16]


def eval_closed_form(cf: ClosedForm, cache: AtomCache):
    """Numeric value + error bound of a closed form over cached atoms."""
    bits = hpreal.bits_for_digits(cache.digits)
    with mp.workprec(bits):
        total = mp.mpf(0)
        bound = mp.mpf(0)
        for coef, mono in cf.terms:
            c = mp.mpf(coef.numerator) / coef.denominator
            v = mp.mpf(1)
            b = mp.mpf(0)
            for a, e in mono:
                av = cache.value(a)
                ab = cache.bound(a)
                # error propagation through the power/product
                b = b * abs(av) ** e + abs(v) * e * abs(av) ** (e - 1) * ab
                v = v * av**e
            total += c * v
            bound += abs(c) * (b + mp.mpf(2) ** (-bits + 4) * abs(v))
    return total, bound


def eval_odd_linear(m: int, cache: AtomCache) -> mp.mpf:
    if m not in (3, 5):
        raise ValueError("odd linear sums supported for m in {3, 5}")
    return cache.value(f"OL{m}")


def eval_alt_mzv(tag: str, cache: AtomCache) -> mp.mpf:
    name = {"5bar,1": "mzv51", "5bar,1,1": "mzv511", "3bar,3,1": "mzv331"}.get(tag, tag)
    if name not in _MZV_RAW:
        raise UnknownAtomError(tag)
    return cache.value(name)


# ---------------------------------------------------------------------------
# parsing pure closed forms (atoms only; the general side grammar that also
# allows S[...] sums and parameter symbols lives in exprs.py)
# ---------------------------------------------------------------------------


def parse_closed_form(text: str) -> ClosedForm:
    from .exprs import parse_side  # local import; exprs builds on this module
    side = parse_side(text)
    cf = side.pure_closed_form()
    if cf is None:
        raise ValueError(f"not a pure closed form: {text!r}")
    return cf
