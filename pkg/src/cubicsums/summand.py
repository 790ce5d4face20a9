"""Structural model of Euler-sum terms plus the descriptor grammar.

A descriptor denotes a sum over k >= 1 of

    [(-1)^(k+1)]  *  prod(numerator factors)  /  prod(denominator bases)

where numerator factors are generalized harmonic numbers H_k^(n), odd
harmonic numbers h_k^(n) (optionally shifted to k-1, raised to a power),
alternating partial sums A_k^(n) = sum_{i<=k} (-1)^(i+1)/i^n (only inside
alternating sums), and at most one finite inner sum over i <= k or i <= k-1.

Grammar (canonical form produced by ``to_string``)::

    alt? FACTORS / DENOM
    FACTORS: '1' or space-separated:  H  H2  h3@k-1^2  A2  IS[h/i; k]^2
    DENOM:   k^3   (2k-1)^2   (k (2k-1)^2)   ((k+p) k)   (2k+2p-1)^2

Denominator bases: k, (2k-1), (2k+1), (k+p), (2k+2p-1); a descriptor with a
(k+p) or (2k+2p-1) base is *parametrized* and needs p >= 1 at evaluation
time.  Inner-sum summands use index i with bases i, (2i-1), (2i+1).
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from fractions import Fraction

from .harmonic import alternating_partial, harmonic

DENOM_BASES = ("k", "2k-1", "2k+1", "k+p", "2k+2p-1")
INNER_BASES = ("i", "2i-1", "2i+1")


class GrammarError(ValueError):
    """Descriptor or expression text that does not parse."""


class ValidationError(ValueError):
    """Structurally valid descriptor that denotes a divergent sum."""


@dataclass(frozen=True, order=True)
class Factor:
    sym: str          # 'H' or 'h'
    order: int        # n >= 1
    shift: int        # 0 -> index k, 1 -> index k-1
    power: int        # >= 1

    def exact(self, k: int) -> Fraction:
        return harmonic(self.sym, k - self.shift, self.order) ** self.power

    def text(self) -> str:
        s = self.sym + (str(self.order) if self.order > 1 else "")
        if self.shift:
            s += "@k-1"
        if self.power > 1:
            s += f"^{self.power}"
        return s


@dataclass(frozen=True, order=True)
class AltFactor:
    order: int
    power: int

    def exact(self, k: int) -> Fraction:
        return alternating_partial(k, self.order) ** self.power

    def text(self) -> str:
        s = "A" + (str(self.order) if self.order > 1 else "")
        if self.power > 1:
            s += f"^{self.power}"
        return s


@dataclass(frozen=True, order=True)
class InnerFactor:
    sym: str
    order: int
    shift: int        # 0 -> i, 1 -> i-1
    power: int

    def exact(self, i: int) -> Fraction:
        return harmonic(self.sym, i - self.shift, self.order) ** self.power

    def text(self) -> str:
        s = self.sym + (str(self.order) if self.order > 1 else "")
        if self.shift:
            s += "@i-1"
        if self.power > 1:
            s += f"^{self.power}"
        return s


@dataclass(frozen=True, order=True)
class InnerDenom:
    base: str         # 'i', '2i-1', '2i+1'
    power: int

    def exact(self, i: int) -> int:
        v = {"i": i, "2i-1": 2 * i - 1, "2i+1": 2 * i + 1}[self.base]
        return v**self.power

    def text(self) -> str:
        s = self.base if self.base == "i" else f"({self.base})"
        return s + (f"^{self.power}" if self.power > 1 else "")


@dataclass(frozen=True)
class InnerSum:
    factors: tuple[InnerFactor, ...]
    denom: tuple[InnerDenom, ...]
    upper: str        # 'k' or 'k-1'
    power: int = 1

    def summand_exact(self, i: int) -> Fraction:
        num = Fraction(1)
        for f in self.factors:
            num *= f.exact(i)
        den = 1
        for d in self.denom:
            den *= d.exact(i)
        return num / den

    def exact(self, k: int) -> Fraction:
        top = k - 1 if self.upper == "k-1" else k
        total = sum((self.summand_exact(i) for i in range(1, top + 1)), Fraction(0))
        return total**self.power

    def summand_text(self) -> str:
        num = " ".join(f.text() for f in self.factors) or "1"
        den = " ".join(d.text() for d in self.denom)
        if len(self.denom) > 1:
            den = f"({den})"
        return f"{num} / {den}"

    def text(self) -> str:
        s = f"IS[{self.summand_text()}; {self.upper}]"
        if self.power > 1:
            s += f"^{self.power}"
        return s


@dataclass(frozen=True, order=True)
class DenomFactor:
    base: str         # one of DENOM_BASES
    power: int

    def exact(self, k: int, p: int | None) -> int:
        if self.base == "k":
            v = k
        elif self.base == "2k-1":
            v = 2 * k - 1
        elif self.base == "2k+1":
            v = 2 * k + 1
        elif self.base == "k+p":
            v = k + p
        else:
            v = 2 * k + 2 * p - 1
        return v**self.power

    def text(self) -> str:
        s = self.base if self.base == "k" else f"({self.base})"
        return s + (f"^{self.power}" if self.power > 1 else "")


@dataclass(frozen=True)
class SumDescriptor:
    alternating: bool
    factors: tuple[Factor, ...]
    alts: tuple[AltFactor, ...]
    inner: InnerSum | None
    denom: tuple[DenomFactor, ...]

    @property
    def has_param(self) -> bool:
        return any(d.base in ("k+p", "2k+2p-1") for d in self.denom)

    def degree(self) -> int:
        return sum(d.power for d in self.denom)

    def to_string(self) -> str:
        parts = [f.text() for f in sorted(self.factors)]
        parts += [a.text() for a in sorted(self.alts)]
        if self.inner is not None:
            parts.append(self.inner.text())
        num = " ".join(parts) or "1"
        den = " ".join(d.text() for d in self.denom)
        if len(self.denom) > 1:
            den = f"({den})"
        alt = "alt " if self.alternating else ""
        return f"{alt}{num} / {den}"

    def __str__(self):
        return self.to_string()


def validate(d: SumDescriptor) -> int:
    """Return the convergence degree, or raise ValidationError.

    Convergence certificate: denominator degree >= 2, or >= 1 with the
    alternating flag (numerator factors only contribute log growth).
    """
    deg = d.degree()
    if not d.denom:
        raise ValidationError("empty denominator")
    if d.alts and not d.alternating:
        raise ValidationError("alternating partial-sum factor in a non-alternating sum")
    if d.inner is not None and not d.inner.denom:
        raise ValidationError("inner sum with empty denominator")
    if deg >= 2:
        return deg
    if deg >= 1 and d.alternating:
        return deg
    raise ValidationError(
        f"denominator degree {deg} without alternation: divergent")


def term_exact(d: SumDescriptor, k: int, p: int | None = None) -> Fraction:
    """Exact value of the k-th series term; empty inner sums give 0."""
    if k < 1:
        raise ValueError("k must be >= 1")
    if d.has_param != (p is not None):
        raise ValueError("parameter arity mismatch for descriptor "
                         f"{d.to_string()!r} (p={p!r})")
    num = Fraction(1)
    for f in d.factors:
        num *= f.exact(k)
    for a in d.alts:
        num *= a.exact(k)
    if d.inner is not None:
        num *= d.inner.exact(k)
    den = 1
    for df in d.denom:
        den *= df.exact(k, p)
    val = num / den
    if d.alternating and k % 2 == 0:
        val = -val
    return val


# ---------------------------------------------------------------------------
# parsing
# ---------------------------------------------------------------------------

_FACTOR_RE = re.compile(r"^(H|h|A)(\d*)$")


def _split_factor_tokens(text: str) -> list[str]:
    """Split on spaces, but keep IS[...] and parenthesized bases intact."""
    tokens, depth, cur = [], 0, []
    for ch in text:
        if ch in "[(":
            depth += 1
        elif ch in "])":
            depth -= 1
            if depth < 0:
                raise GrammarError(f"unbalanced brackets in {text!r}")
        if ch == " " and depth == 0:
            if cur:
                tokens.append("".join(cur))
                cur = []
        else:
            cur.append(ch)
    if depth != 0:
        raise GrammarError(f"unbalanced brackets in {text!r}")
    if cur:
        tokens.append("".join(cur))
    return tokens


def _parse_power(token: str) -> tuple[str, int]:
    # trailing ^int at bracket depth 0 only (IS[...] bodies contain carets)
    depth = 0
    for idx, ch in enumerate(token):
        if ch in "[(":
            depth += 1
        elif ch in "])":
            depth -= 1
        elif ch == "^" and depth == 0:
            base, pw = token[:idx], token[idx + 1:]
            if not pw.isdigit() or int(pw) < 1:
                raise GrammarError(f"bad power in {token!r}")
            return base, int(pw)
    return token, 1


def _parse_num_factor(token: str, inner_allowed: bool):
    body, power = _parse_power(token)
    if body.startswith("IS[") and body.endswith("]"):
        if not inner_allowed:
            raise GrammarError("nested inner sums are not supported")
        return _parse_inner(body[3:-1], power)
    shift = 0
    if body.endswith("@k-1"):
        shift, body = 1, body[: -len("@k-1")]
    elif body.endswith("@i-1"):
        shift, body = 1, body[: -len("@i-1")]
    m = _FACTOR_RE.match(body)
    if not m:
        raise GrammarError(f"bad numerator factor {token!r}")
    sym, order_s = m.groups()
    order = int(order_s) if order_s else 1
    if order < 1:
        raise GrammarError(f"order must be >= 1 in {token!r}")
    if sym == "A":
        if shift:
            raise GrammarError("A factors do not take shifts")
        return AltFactor(order, power)
    return sym, order, shift, power


def _strip_outer_parens(text: str) -> str:
    text = text.strip()
    if text.startswith("(") and text.endswith(")"):
        depth = 0
        for idx, ch in enumerate(text):
            if ch == "(":
                depth += 1
            elif ch == ")":
                depth -= 1
                if depth == 0 and idx != len(text) - 1:
                    return text  # closing paren is interior: ( .. ) ( .. )
        return text[1:-1].strip()
    return text


def _parse_denoms(text: str, bases, cls):
    text = _strip_outer_parens(text)
    out = []
    for token in _split_factor_tokens(text):
        body, power = _parse_power(token)
        body = _strip_outer_parens(body)
        if body not in bases:
            raise GrammarError(f"unknown denominator base {body!r}")
        out.append(cls(body, power))
    if not out:
        raise GrammarError("empty denominator")
    return tuple(out)


def _parse_inner(text: str, power: int) -> InnerSum:
    if ";" not in text:
        raise GrammarError(f"inner sum needs '; k' or '; k-1': {text!r}")
    summand, _, upper = text.rpartition(";")
    upper = upper.strip()
    if upper not in ("k", "k-1"):
        raise GrammarError(f"inner upper limit must be k or k-1, got {upper!r}")
    if "/" not in summand:
        raise GrammarError(f"inner summand needs a denominator: {text!r}")
    num_s, _, den_s = summand.rpartition("/")
    num_s = num_s.strip()
    factors = []
    if num_s != "1":
        for token in _split_factor_tokens(num_s):
            f = _parse_num_factor(token, inner_allowed=False)
            if isinstance(f, AltFactor):
                raise GrammarError("A factors are not allowed inside inner sums")
            sym, order, shift, pw = f
            factors.append(InnerFactor(sym, order, shift, pw))
    denom = _parse_denoms(den_s, INNER_BASES, InnerDenom)
    return InnerSum(tuple(factors), denom, upper, power)


def parse_descriptor(text: str) -> SumDescriptor:
    """Parse the descriptor grammar; the result round-trips via to_string."""
    body = " ".join(text.split())
    alternating = False
    if body.startswith("alt "):
        alternating, body = True, body[4:]
    if "/" not in body:
        raise GrammarError(f"descriptor needs '/': {text!r}")
    # split at the top-level '/' (inner sums contain their own '/')
    depth = 0
    split_at = -1
    for idx, ch in enumerate(body):
        if ch in "[(":
            depth += 1
        elif ch in "])":
            depth -= 1
        elif ch == "/" and depth == 0:
            split_at = idx
    if split_at < 0:
        raise GrammarError(f"missing top-level '/' in {text!r}")
    num_s, den_s = body[:split_at].strip(), body[split_at + 1:].strip()
    factors: list[Factor] = []
    alts: list[AltFactor] = []
    inner: InnerSum | None = None
    if num_s != "1":
        for token in _split_factor_tokens(num_s):
            f = _parse_num_factor(token, inner_allowed=True)
            if isinstance(f, InnerSum):
                if inner is not None:
                    raise GrammarError("at most one inner sum per descriptor")
                inner = f
            elif isinstance(f, AltFactor):
                alts.append(f)
            else:
                sym, order, shift, pw = f
                if "@i-1" in token:
                    raise GrammarError("@i-1 shift only valid inside inner sums")
                factors.append(Factor(sym, order, shift, pw))
    denom = tuple(sorted(_parse_denoms(den_s, DENOM_BASES, DenomFactor),
                         key=lambda df: (DENOM_BASES.index(df.base), df.power)))
    return SumDescriptor(alternating, tuple(sorted(factors)), tuple(sorted(alts)),
                         inner, denom)
