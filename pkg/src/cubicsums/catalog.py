"""The machine-readable identity inventory: loading, validation, queries.

The catalog ships as JSON (data/catalog.json); every entry is one identity
with both sides written in the side-expression grammar.  The catalog is data,
not code: a transcription correction is an edit plus a re-run, and the
verification report cites entry ids.

Entry fields:
    id            "eq124"
    kind          infinite-identity | finite-identity | parametrized-identity
                  | inter-sum-relation
    family        "1".."8" | "auxiliary" | "helper" | "appendix"
    order         4..7 (total weight of the identity)
    class         A | B | C  (precision class)
    status        core | intermediate | convention-dependent
    lhs, rhs      side-expression strings ("0" for recorded-only entries)
    derived_from  optional list of entry ids (enables consistency checks)
    note          optional free-form annotation

Convention-dependent entries record identities whose (i-k) denominators have
no stated convention at i = k; they are catalogued for coverage, marked, and
never verified or counted toward acceptance.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from importlib import resources

from .exprs import SideExpr, parse_side
from .summand import GrammarError, parse_descriptor, validate, ValidationError

KINDS = ("infinite-identity", "finite-identity", "parametrized-identity",
         "inter-sum-relation")
FAMILIES = ("1", "2", "3", "4", "5", "6", "7", "8",
            "auxiliary", "helper", "appendix")
CLASSES = ("A", "B", "C")
STATUSES = ("core", "intermediate", "convention-dependent")

_FIELD_ORDER = ("id", "kind", "family", "order", "class", "status",
                "lhs", "rhs", "derived_from", "note")


class CatalogError(ValueError):
    pass


@dataclass(frozen=True)
class IdentityEntry:
    id: str
    kind: str
    family: str
    order: int
    prec_class: str
    status: str
    lhs: str
    rhs: str
    derived_from: tuple = ()
    note: str = ""

    def lhs_expr(self) -> SideExpr:
        return parse_side(self.lhs)

    def rhs_expr(self) -> SideExpr:
        return parse_side(self.rhs)

    def descriptors(self) -> list[str]:
        return self.lhs_expr().descriptors() + self.rhs_expr().descriptors()

    def to_dict(self) -> dict:
        d = {"id": self.id, "kind": self.kind, "family": self.family,
             "order": self.order, "class": self.prec_class,
             "status": self.status, "lhs": self.lhs, "rhs": self.rhs}
        if self.derived_from:
            d["derived_from"] = list(self.derived_from)
        if self.note:
            d["note"] = self.note
        return d


@dataclass
class Catalog:
    entries: tuple
    source_hash: str = ""

    def __post_init__(self):
        self._by_id = {e.id: e for e in self.entries}

    def __len__(self):
        return len(self.entries)

    def __iter__(self):
        return iter(self.entries)

    def get(self, entry_id: str) -> IdentityEntry:
        if entry_id not in self._by_id:
            raise KeyError(f"no catalog entry {entry_id!r}")
        return self._by_id[entry_id]

    def __contains__(self, entry_id: str) -> bool:
        return entry_id in self._by_id

    def query(self, family=None, order=None, kind=None, status=None,
              prec_class=None) -> list[IdentityEntry]:
        """Filtered entries in stable id order (numeric by equation number)."""
        out = []
        for e in sorted(self.entries, key=lambda e: _id_key(e.id)):
            if family is not None and e.family != str(family):
                continue
            if order is not None and e.order != int(order):
                continue
            if kind is not None and e.kind != kind:
                continue
            if status is not None and e.status != status:
                continue
            if prec_class is not None and e.prec_class != prec_class:
                continue
            out.append(e)
        return out

    def ids(self) -> list[str]:
        return [e.id for e in sorted(self.entries, key=lambda e: _id_key(e.id))]


def _id_key(entry_id: str):
    digits = "".join(ch for ch in entry_id if ch.isdigit())
    return (int(digits) if digits else 0, entry_id)


def _validate_entry(raw: dict, seen: set) -> IdentityEntry:
    eid = raw.get("id")
    if not eid or not isinstance(eid, str):
        raise CatalogError(f"entry without id: {raw!r}")
    if eid in seen:
        raise CatalogError(f"duplicate id {eid}")
    seen.add(eid)

    def need(name, allowed=None):
        v = raw.get(name)
        if v is None:
            raise CatalogError(f"{eid}: missing field {name!r}")
        if allowed and v not in allowed:
            raise CatalogError(f"{eid}: bad {name} {v!r}")
        return v

    kind = need("kind", KINDS)
    family = need("family", FAMILIES)
    order = int(need("order"))
    prec_class = need("class", CLASSES)
    status = need("status", STATUSES)
    lhs = need("lhs")
    rhs = need("rhs")
    entry = IdentityEntry(eid, kind, family, order, prec_class, status,
                          lhs, rhs, tuple(raw.get("derived_from", ())),
                          raw.get("note", ""))
    if status != "convention-dependent":
        try:
            le, re_ = entry.lhs_expr(), entry.rhs_expr()
        except GrammarError as err:
            raise CatalogError(f"{eid}: grammar error: {err}") from err
        for text in entry.descriptors():
            d = parse_descriptor(text)
            try:
                validate(d)
            except ValidationError as err:
                raise CatalogError(f"{eid}: invalid descriptor "
                                   f"{text!r}: {err}") from err
        needs_p = le.needs_param() or re_.needs_param()
        if kind == "parametrized-identity" and not needs_p:
            raise CatalogError(f"{eid}: parametrized entry without parameter")
        if kind in ("infinite-identity", "inter-sum-relation") and needs_p:
            raise CatalogError(f"{eid}: unexpected parameter in {kind}")
    return entry


def load_catalog(path=None) -> Catalog:
    """Load and schema-validate a catalog; duplicate ids and grammar errors
    are rejected with entry context."""
    if path is None:
        data = resources.files("cubicsums").joinpath("data/catalog.json") \
            .read_text()
    else:
        with open(path) as fh:
            data = fh.read()
    try:
        raw = json.loads(data)
    except json.JSONDecodeError as err:
        raise CatalogError(f"catalog parse error: {err}") from err
    if isinstance(raw, dict):
        raw = raw.get("entries", [])
    if not isinstance(raw, list):
        raise CatalogError("catalog must be a list of entries")
    seen: set = set()
    entries = tuple(_validate_entry(r, seen) for r in raw)
    src_hash = hashlib.sha256(data.encode()).hexdigest()[:16]
    cat = Catalog(entries, src_hash)
    for e in entries:
        for dep in e.derived_from:
            if dep not in cat:
                raise CatalogError(f"{e.id}: derived_from unknown entry {dep}")
    return cat


def serialize_catalog(cat: Catalog) -> str:
    """Canonical serialization: fixed key order, numeric id order."""
    items = [cat.get(eid).to_dict() for eid in cat.ids()]
    ordered = [{k: d[k] for k in _FIELD_ORDER if k in d} for d in items]
    return json.dumps(ordered, indent=1)
