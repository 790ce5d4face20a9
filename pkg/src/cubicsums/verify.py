"""Runs catalog entries through the engine and produces verification reports.

Both sides of an entry are evaluated independently: the LHS never uses the
RHS closed form and vice versa.  A mathematical mismatch is a *verdict*
("fail"), never an exception; the artifact's contract is to report what the
numbers say, because some printed formulas contain transcription slips and
those must surface rather than block the run.

Verdict rule per precision class tolerance t:
    pass          |LHS-RHS| <  t  and both certified bounds < t/4
    fail          |LHS-RHS| >= t  and both certified bounds < t/4
    inconclusive  a bound exceeds t/4 (after the engine's one retry)

Finite lemmas are swept in exact rational arithmetic (zero tolerance);
parametrized identities are swept over p in {1, 2, 3, 5, 10, 25}.
"""

from __future__ import annotations

import json
import time
from dataclasses import dataclass, field

import mpmath as mp

from . import harmonic
from .catalog import Catalog, IdentityEntry, load_catalog
from .closedform import AtomCache, ClosedForm
from .evaluator import EvalConfig, PrecisionShortfall, SumEvaluator
from .expansion import DivergenceError, InsufficientOrderError
from .exprs import EvalContext, evaluate_side

PARAM_SWEEP = (1, 2, 3, 5, 10, 25)
FINITE_SWEEP_KMAX = 500

CLASS_CONFIG = {
    "A": EvalConfig(digits=60, head_k=4000, order=24),
    "B": EvalConfig(digits=45, head_k=4000, order=24),
    "C": EvalConfig(digits=25, head_k=2000, order=20),
}

CLASS_TOLERANCE = {"A": mp.mpf(10) ** -35, "B": mp.mpf(10) ** -30,
                   "C": mp.mpf(10) ** -20}


@dataclass
class VerificationRecord:
    entry_id: str
    kind: str
    family: str
    prec_class: str
    status: str
    verdict: str
    lhs: str = ""
    rhs: str = ""
    delta: str = ""
    lhs_bound: str = ""
    rhs_bound: str = ""
    tolerance: str = ""
    seconds: float = 0.0
    note: str = ""

    def to_json(self) -> str:
        return json.dumps({
            "id": self.entry_id, "kind": self.kind, "family": self.family,
            "class": self.prec_class, "status": self.status,
            "verdict": self.verdict, "lhs": self.lhs, "rhs": self.rhs,
            "delta": self.delta, "lhs_bound": self.lhs_bound,
            "rhs_bound": self.rhs_bound, "tolerance": self.tolerance,
            "seconds": round(self.seconds, 3), "note": self.note})


class Verifier:
    """Shared atom cache + evaluator; one instance per verification session."""

    def __init__(self, catalog: Catalog | None = None,
                 evaluator: SumEvaluator | None = None,
                 class_config: dict | None = None,
                 class_tolerance: dict | None = None):
        self.catalog = catalog or load_catalog()
        self.evaluator = evaluator or SumEvaluator()
        self.class_config = class_config or CLASS_CONFIG
        self.class_tolerance = class_tolerance or CLASS_TOLERANCE
        self.cache = AtomCache(digits=60, mzv_digits=25,
                               evaluator=self.evaluator,
                               config=self.class_config["A"])
        self._mzv51_selected = False

    # -- single entry ---------------------------------------------------------

    def _ensure_conventions(self):
        if not self._mzv51_selected:
            self.cache.select_mzv51_convention()
            self._mzv51_selected = True

    def _context(self, entry: IdentityEntry, p=None) -> EvalContext:
        cfg = self.class_config[entry.prec_class]
        tol = self.class_tolerance[entry.prec_class]
        return EvalContext(self.cache, self.evaluator, cfg, p=p,
                           sum_target=tol / 16)

    def verify(self, entry_id: str) -> VerificationRecord:
        entry = self.catalog.get(entry_id)
        started = time.monotonic()
        if entry.status == "convention-dependent":
            return VerificationRecord(
                entry.id, entry.kind, entry.family, entry.prec_class,
                entry.status, "inconclusive",
                note="convention-dependent entry, recorded but not verified")
        self._ensure_conventions()
        tol = self.class_tolerance[entry.prec_class]
        try:
            if entry.kind == "finite-identity":
                rec = self._verify_finite(entry)
            elif entry.kind == "parametrized-identity":
                rec = self._verify_parametrized(entry, tol)
            else:
                rec = self._verify_numeric(entry, tol)
        except (PrecisionShortfall, InsufficientOrderError,
                DivergenceError) as err:
            rec = VerificationRecord(
                entry.id, entry.kind, entry.family, entry.prec_class,
                entry.status, "inconclusive", tolerance=mp.nstr(tol, 3),
                note=f"{type(err).__name__}: {err}")
        rec.seconds = time.monotonic() - started
        return rec

    def _verify_finite(self, entry: IdentityEntry) -> VerificationRecord:
        counts, failures = harmonic.sweep_finite_lemmas(
            FINITE_SWEEP_KMAX, [entry.id])
        verdict = "pass" if not failures else "fail"
        note = f"exact sweep k in [1, {FINITE_SWEEP_KMAX}]"
        if failures:
            ks = [f.k for f in failures[:5]]
            note += f"; first failing k: {ks}"
        return VerificationRecord(
            entry.id, entry.kind, entry.family, entry.prec_class,
            entry.status, verdict, delta="0" if not failures else "exact-mismatch",
            tolerance="0", note=note)

    def _verify_numeric(self, entry: IdentityEntry, tol,
                        p=None) -> VerificationRecord:
        ctx = self._context(entry, p=p)
        lv, lb = evaluate_side(entry.lhs_expr(), ctx)
        rv, rb = evaluate_side(entry.rhs_expr(), ctx)
        with mp.workprec(ctx.bits()):
            delta = abs(lv - rv)
        verdict = self._verdict(delta, lb, rb, tol)
        digs = min(ctx.config.digits, 30)
        return VerificationRecord(
            entry.id, entry.kind, entry.family, entry.prec_class,
            entry.status, verdict, lhs=mp.nstr(lv, digs), rhs=mp.nstr(rv, digs),
            delta=mp.nstr(delta, 3), lhs_bound=mp.nstr(lb, 3),
            rhs_bound=mp.nstr(rb, 3), tolerance=mp.nstr(tol, 3))

    def _verify_parametrized(self, entry: IdentityEntry,
                             tol) -> VerificationRecord:
        worst = None
        for p in PARAM_SWEEP:
            rec = self._verify_numeric(entry, tol, p=p)
            rec.note = f"p={p}"
            if worst is None or mp.mpf(rec.delta) > mp.mpf(worst.delta):
                worst = rec
            if rec.verdict == "inconclusive":
                worst = rec
                break
        worst.note = (f"worst over p in {list(PARAM_SWEEP)}: {worst.note}")
        return worst

    @staticmethod
    def _verdict(delta, lhs_bound, rhs_bound, tol) -> str:
        if lhs_bound > tol / 4 or rhs_bound > tol / 4:
            return "inconclusive"
        return "pass" if delta < tol else "fail"

    # -- aggregates -------------------------------------------------------------

    def verify_all(self, family=None, order=None, kind=None, status=None,
                   prec_class=None, include_unverified=False,
                   jobs: int = 1) -> list[VerificationRecord]:
        entries = self.catalog.query(family=family, order=order, kind=kind,
                                     status=status, prec_class=prec_class)
        if not include_unverified:
            entries = [e for e in entries
                       if e.status != "convention-dependent"]
        ids = [e.id for e in entries]
        if jobs > 1:
            records = self._verify_parallel(ids, jobs)
        else:
            records = [self.verify(eid) for eid in ids]
        return sorted(records, key=lambda r: _order_key(r.entry_id))

    def _verify_parallel(self, ids, jobs):
        import multiprocessing as mult
        with mult.get_context("fork").Pool(jobs) as pool:
            return pool.map(self.verify, ids)

    # -- algebraic consistency ---------------------------------------------------

    def consistency_check(self, entry_id: str) -> dict:
        """Substitute linked closed forms into the parent relation and compare
        termwise with this entry, all in exact rational arithmetic."""
        entry = self.catalog.get(entry_id)
        if not entry.derived_from:
            raise ValueError(f"{entry_id} has no derived_from links")
        parent = None
        sum_map: dict = {}
        atom_map: dict = {}
        for src_id in entry.derived_from:
            src = self.catalog.get(src_id)
            if src.lhs == entry.lhs:
                parent = src
                continue
            rhs_cf = src.rhs_expr().pure_closed_form()
            if rhs_cf is None:
                raise ValueError(f"{src_id}: RHS is not a pure closed form")
            lhs_expr = src.lhs_expr()
            if len(lhs_expr.terms) == 1 and lhs_expr.terms[0].sums \
                    and lhs_expr.terms[0].coef == 1:
                ((desc, power),) = lhs_expr.terms[0].sums
                if power == 1 and not lhs_expr.terms[0].atoms:
                    sum_map[desc] = rhs_cf
                    continue
            cf = lhs_expr.pure_closed_form()
            if cf is not None and len(cf.terms) == 1 \
                    and cf.terms[0][0] == 1 and len(cf.terms[0][1]) == 1 \
                    and cf.terms[0][1][0][1] == 1:
                atom_map[cf.terms[0][1][0][0]] = rhs_cf
                continue
            raise ValueError(f"{src_id}: unsupported substitution source")
        if parent is None:
            raise ValueError(f"{entry_id}: no linked entry shares its LHS")
        substituted = parent.rhs_expr().substitute_sums(sum_map)
        substituted = _substitute_atoms(substituted, atom_map)
        got = substituted.pure_closed_form()
        if got is None:
            raise ValueError(f"{entry_id}: substitution left unresolved sums")
        want = entry.rhs_expr().pure_closed_form()
        if want is None:
            raise ValueError(f"{entry_id}: target RHS is not a closed form")
        diff = got - want
        return {"id": entry_id, "parent": parent.id,
                "substituted": got.to_string(), "target": want.to_string(),
                "match": diff.is_zero(),
                "difference": diff.to_string()}


def _substitute_atoms(side, atom_map):
    """Replace first-power atom factors by closed forms, exactly."""
    from dataclasses import replace as dreplace
    from .exprs import SideExpr, Term
    if not atom_map:
        return side
    new_terms = []
    for t in side.terms:
        hits = [a for a, e in t.atoms if a in atom_map]
        if not hits:
            new_terms.append(t)
            continue
        if len(hits) > 1 or any(e != 1 for a, e in t.atoms if a in atom_map):
            raise ValueError("atom substitution only supported at power 1")
        name = hits[0]
        rest = tuple((a, e) for a, e in t.atoms if a != name)
        for coef, mono in atom_map[name].terms:
            merged: dict = {}
            for a, e in rest:
                merged[a] = merged.get(a, 0) + e
            for a, e in mono:
                merged[a] = merged.get(a, 0) + e
            new_terms.append(dreplace(t, coef=t.coef * coef,
                                      atoms=tuple(sorted(merged.items()))))
    return SideExpr(tuple(new_terms))


def _order_key(entry_id: str):
    digits = "".join(ch for ch in entry_id if ch.isdigit())
    return (int(digits) if digits else 0, entry_id)


# ---------------------------------------------------------------------------
# report rendering
# ---------------------------------------------------------------------------


def summarize(records) -> dict:
    out = {"pass": 0, "fail": 0, "inconclusive": 0, "total": len(records)}
    for r in records:
        out[r.verdict] = out.get(r.verdict, 0) + 1
    return out


def render_table(records, include_timing=True) -> str:
    lines = []
    header = f"{'id':<8} {'family':<10} {'kind':<23} {'cls':<3} {'verdict':<13} {'|delta|':<12}"
    if include_timing:
        header += " time"
    lines.append(header)
    lines.append("-" * len(header))
    for r in records:
        line = (f"{r.entry_id:<8} {r.family:<10} {r.kind:<23} "
                f"{r.prec_class:<3} {r.verdict:<13} {r.delta or '-':<12}")
        if include_timing:
            line += f" {r.seconds:6.2f}s"
        lines.append(line)
    s = summarize(records)
    lines.append("-" * len(header))
    lines.append(f"total {s['total']}: {s['pass']} pass, {s['fail']} fail, "
                 f"{s['inconclusive']} inconclusive")
    return "\n".join(lines)


def render_jsonl(records, verifier: Verifier, include_timing=True) -> str:
    meta = {
        "meta": True,
        "catalog_hash": verifier.catalog.source_hash,
        "atom_values_hash": verifier.cache.values_hash(),
        "sigma_conventions": verifier.cache.sigma_convention,
        "class_config": {c: {"digits": cfg.digits, "K": cfg.K, "B": cfg.order}
                         for c, cfg in verifier.class_config.items()},
    }
    lines = [json.dumps(meta)]
    for r in records:
        if not include_timing:
            r = VerificationRecord(**{**r.__dict__, "seconds": 0.0})
        lines.append(r.to_json())
    return "\n".join(lines)
