"""The side-expression grammar: what the LHS/RHS of a catalog entry can say.

A side is a sum of terms; a term is a product of factors:

    rational            3/4   -2
    atom[^e]            z6  z3^2  l2^4  OL3  mzv51
    S[descriptor][^e]   an infinite sum handed to the engine
    Hn(p)/hn(p)[^e]     exact harmonic value at the parameter, e.g. H2(p-1)
    FS[inner; p|p-1]    exact finite sum at the parameter, e.g. FS[h / i; p]
    1/(p|2p-1|2p+1)[^e] parameter denominators

Examples::

    -93/128*z6 + 31/64*z3^2 + 1/16*OL5
    21/8*z2*z3
    49/256*z3^2 + 1/2*S[h / k^2]*S[h / (2k-1)^2] - 1/8*S[H h^2 / k^3]
    1/2*H2(p)*1/(p) + 1/2*H(p)^2*1/(p) - H(p)*1/(p)^2 + z2*1/(p)

Pure closed forms (atoms only) convert losslessly to ClosedForm; sides with
S[...] terms of power 1 support exact substitution of linked closed forms,
which is what the termwise consistency checks run on.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field, replace
from fractions import Fraction

import mpmath as mp

from .closedform import ATOMS, AtomCache, ClosedForm, UnknownAtomError
from .evaluator import EvalConfig, SumEvaluator
from .harmonic import alternating_partial, harmonic
from .hpreal import bits_for_digits
from .summand import (GrammarError, InnerSum, parse_descriptor,
                      _parse_inner, SumDescriptor)

_PSYM_RE = re.compile(r"^(H|h)(\d*)\((p|p-1)\)$")
_ASYM_RE = re.compile(r"^A(\d*)\((2p|p|p-1)\)$")  # alternating partial sums
_PINV_RE = re.compile(r"^1/\((p|2p-1|2p\+1)\)$")
_RAT_RE = re.compile(r"^-?\d+(/\d+)?$")


@dataclass(frozen=True)
class Term:
    coef: Fraction = Fraction(1)
    atoms: tuple = ()      # ((name, power), ...)
    sums: tuple = ()       # ((descriptor_text, power), ...)
    psyms: tuple = ()      # ((sym, order, shift, power), ...)
    finsums: tuple = ()    # ((inner_text, upper, power), ...)
    pinvs: tuple = ()      # ((base, power), ...)

    @property
    def is_pure(self) -> bool:
        return not (self.sums or self.psyms or self.finsums or self.pinvs)

    def needs_param(self) -> bool:
        if self.psyms or self.finsums or self.pinvs:
            return True
        return any(parse_descriptor(t).has_param for t, _ in self.sums)

    def monomial(self) -> tuple:
        return tuple(sorted(self.atoms))

    def to_string(self) -> str:
        parts = []
        has_factors = bool(self.atoms or self.sums or self.psyms
                           or self.finsums or self.pinvs)
        negate = self.coef == -1 and has_factors
        if not negate and (self.coef != 1 or not has_factors):
            parts.append(str(self.coef))
        for a, e in self.atoms:
            parts.append(f"{a}^{e}" if e > 1 else a)
        for t, e in self.sums:
            parts.append(f"S[{t}]^{e}" if e > 1 else f"S[{t}]")
        for sym, order, shift, e in self.psyms:
            nm = sym + (str(order) if order > 1 else "")
            nm += {0: "(p)", 1: "(p-1)", 2: "(2p)"}[shift]
            parts.append(f"{nm}^{e}" if e > 1 else nm)
        for t, upper, e in self.finsums:
            body = f"FS[{t}; {upper}]"
            parts.append(f"{body}^{e}" if e > 1 else body)
        for b, e in self.pinvs:
            body = f"1/({b})"
            parts.append(f"{body}^{e}" if e > 1 else body)
        return ("-" if negate else "") + "*".join(parts)


@dataclass(frozen=True)
class SideExpr:
    terms: tuple

    def to_string(self) -> str:
        if not self.terms:
            return "0"
        out = self.terms[0].to_string()
        for t in self.terms[1:]:
            s = t.to_string()
            out += f" - {s[1:]}" if s.startswith("-") else f" + {s}"
        return out

    def __str__(self):
        return self.to_string()

    def needs_param(self) -> bool:
        return any(t.needs_param() for t in self.terms)

    def descriptors(self) -> list[str]:
        seen = []
        for t in self.terms:
            for d, _ in t.sums:
                if d not in seen:
                    seen.append(d)
        return seen

    def pure_closed_form(self) -> ClosedForm | None:
        d: dict = {}
        for t in self.terms:
            if not t.is_pure:
                return None
            mono = t.monomial()
            d[mono] = d.get(mono, Fraction(0)) + t.coef
        return ClosedForm.from_dict(d)

    def substitute_sums(self, mapping: dict) -> "SideExpr":
        """Replace S[d] factors (power 1) by closed forms, exactly.

        mapping: descriptor text -> ClosedForm.  Terms whose sums are not all
        in the mapping are kept unchanged.
        """
        new_terms: list[Term] = []
        for t in self.terms:
            if not t.sums or not all(d in mapping for d, _ in t.sums):
                new_terms.append(t)
                continue
            if any(e != 1 for _, e in t.sums):
                raise ValueError("substitution only supported for S[...]^1")
            expanded = [Term(coef=t.coef, atoms=t.atoms, psyms=t.psyms,
                             finsums=t.finsums, pinvs=t.pinvs)]
            for d, _ in t.sums:
                cf = mapping[d]
                nxt = []
                for base in expanded:
                    for coef, mono in cf.terms:
                        merged: dict = {}
                        for a, e in base.atoms:
                            merged[a] = merged.get(a, 0) + e
                        for a, e in mono:
                            merged[a] = merged.get(a, 0) + e
                        nxt.append(replace(
                            base, coef=base.coef * coef,
                            atoms=tuple(sorted(merged.items()))))
                expanded = nxt
            new_terms.extend(expanded)
        return SideExpr(tuple(new_terms))


# ---------------------------------------------------------------------------
# parsing
# ---------------------------------------------------------------------------


def _split_depth0(text: str, seps: str) -> list[str]:
    """Split on separator chars at bracket depth 0; keeps separators for +/-."""
    out, cur, depth = [], [], 0
    for idx, ch in enumerate(text):
        if ch in "[(":
            depth += 1
        elif ch in "])":
            depth -= 1
            if depth < 0:
                raise GrammarError(f"unbalanced brackets in {text!r}")
        if depth == 0 and ch in seps:
            out.append("".join(cur))
            out.append(ch)
            cur = []
        else:
            cur.append(ch)
    if depth != 0:
        raise GrammarError(f"unbalanced brackets in {text!r}")
    out.append("".join(cur))
    return out


def _term_power(body: str) -> tuple[str, int]:
    depth = 0
    for idx in range(len(body)):
        ch = body[idx]
        if ch in "[(":
            depth += 1
        elif ch in "])":
            depth -= 1
        elif ch == "^" and depth == 0:
            pw = body[idx + 1:]
            if not pw.isdigit() or int(pw) < 1:
                raise GrammarError(f"bad power in {body!r}")
            return body[:idx], int(pw)
    return body, 1


def _parse_term(text: str) -> Term:
    text = text.strip()
    if not text:
        raise GrammarError("empty term")
    coef = Fraction(1)
    atoms: dict = {}
    sums: dict = {}
    psyms: dict = {}
    finsums: dict = {}
    pinvs: dict = {}
    for raw in _split_depth0(text, "*"):
        if raw == "*":
            continue
        tok = raw.strip()
        if not tok:
            raise GrammarError(f"dangling '*' in {text!r}")
        # 1/(p)^2 keeps its power outside the paren
        if tok.startswith("1/("):
            m = re.match(r"^1/\((p|2p-1|2p\+1)\)(?:\^(\d+))?$", tok)
            if not m:
                raise GrammarError(f"bad parameter denominator {tok!r}")
            base, pw = m.group(1), int(m.group(2) or 1)
            pinvs[base] = pinvs.get(base, 0) + pw
            continue
        body, pw = _term_power(tok)
        if _RAT_RE.match(body):
            coef *= Fraction(body) ** pw
        elif body.startswith("S[") and body.endswith("]"):
            d = parse_descriptor(body[2:-1])
            key = d.to_string()
            sums[key] = sums.get(key, 0) + pw
        elif body.startswith("FS[") and body.endswith("]"):
            inner_text, _, upper = body[3:-1].rpartition(";")
            upper = upper.strip()
            if upper not in ("p", "p-1"):
                raise GrammarError(f"FS upper must be p or p-1: {tok!r}")
            limit = "k" if upper == "p" else "k-1"
            inner = _parse_inner(f"{inner_text}; {limit}", 1)
            key = (inner.summand_text(), upper)
            finsums[key] = finsums.get(key, 0) + pw
        elif _PSYM_RE.match(body) or _ASYM_RE.match(body):
            m = _PSYM_RE.match(body) or _ASYM_RE.match(body)
            if m.re is _PSYM_RE:
                sym, order_s, arg = m.groups()
            else:
                order_s, arg = m.groups()
                sym = "A"
            order = int(order_s) if order_s else 1
            shift = {"p": 0, "p-1": 1, "2p": 2}[arg]
            key = (sym, order, shift)
            psyms[key] = psyms.get(key, 0) + pw
        elif body in ATOMS:
            atoms[body] = atoms.get(body, 0) + pw
        else:
            raise GrammarError(f"unknown factor {tok!r}")
    return Term(
        coef=coef,
        atoms=tuple(sorted(atoms.items())),
        sums=tuple(sorted(sums.items())),
        psyms=tuple(sorted((k[0], k[1], k[2], v) for k, v in psyms.items())),
        finsums=tuple(sorted((k[0], k[1], v) for k, v in finsums.items())),
        pinvs=tuple(sorted(pinvs.items())),
    )


def parse_side(text: str) -> SideExpr:
    text = " ".join(text.split())
    if text in ("0", ""):
        return SideExpr(())
    pieces = _split_depth0(text, "+-")
    terms = []
    sign = 1
    pending = pieces[0].strip()
    idx = 1
    # leading sign produces an empty first piece
    if pending == "":
        pass
    else:
        terms.append((1, pending))
        pending = None
    while idx < len(pieces):
        op = pieces[idx]
        body = pieces[idx + 1].strip()
        idx += 2
        if body == "":
            raise GrammarError(f"dangling operator in {text!r}")
        if pending == "":
            # leading sign case: first body belongs to the leading op
            terms.append((1 if op == "+" else -1, body))
            pending = None
            continue
        terms.append((1 if op == "+" else -1, body))
    out = []
    for sg, body in terms:
        t = _parse_term(body)
        if sg < 0:
            t = replace(t, coef=-t.coef)
        out.append(t)
    return SideExpr(tuple(out))


# ---------------------------------------------------------------------------
# evaluation
# ---------------------------------------------------------------------------


@dataclass
class EvalContext:
    cache: AtomCache
    evaluator: SumEvaluator
    config: EvalConfig
    p: int | None = None
    sum_target: object | None = None   # per-sum bound ceiling (mpf)

    def bits(self) -> int:
        return bits_for_digits(self.config.digits)


def _as_mpf(fr: Fraction) -> mp.mpf:
    return mp.mpf(fr.numerator) / fr.denominator


def evaluate_side(side: SideExpr, ctx: EvalContext):
    """Numeric (value, bound) of a side expression."""
    if side.needs_param() and ctx.p is None:
        raise ValueError("side needs a parameter but none was supplied")
    bits = ctx.bits()
    with mp.workprec(bits):
        total = mp.mpf(0)
        total_bound = mp.mpf(0)
        eps = mp.mpf(2) ** (-bits + 6)
        for t in side.terms:
            v = _as_mpf(t.coef)
            b = mp.mpf(0)
            for a, e in t.atoms:
                av, ab = ctx.cache.value(a), ctx.cache.bound(a)
                b = b * abs(av) ** e + abs(v) * e * abs(av) ** max(e - 1, 0) * ab
                v *= av**e
            for dtext, e in t.sums:
                d = parse_descriptor(dtext)
                p = ctx.p if d.has_param else None
                res = ctx.evaluator.evaluate(d, ctx.config, p=p,
                                             target=ctx.sum_target)
                b = b * abs(res.value) ** e \
                    + abs(v) * e * abs(res.value) ** max(e - 1, 0) * res.bound
                v *= res.value**e
            for sym, order, shift, e in t.psyms:
                if sym == "A":
                    arg = 2 * ctx.p if shift == 2 else ctx.p - shift
                    fr = alternating_partial(arg, order)
                else:
                    fr = harmonic(sym, ctx.p - shift, order)
                hv = _as_mpf(fr) ** e
                v *= hv
                b *= abs(hv)
            for inner_text, upper, e in t.finsums:
                limit = "k" if upper == "p" else "k-1"
                inner = _parse_inner(f"{inner_text}; {limit}", 1)
                fv = _as_mpf(inner.exact(ctx.p)) ** e
                v *= fv
                b *= abs(fv)
            for base, e in t.pinvs:
                denom = {"p": ctx.p, "2p-1": 2 * ctx.p - 1,
                         "2p+1": 2 * ctx.p + 1}[base]
                v /= mp.mpf(denom) ** e
                b /= mp.mpf(denom) ** e
            total += v
            total_bound += b + abs(v) * eps
    return total, total_bound
