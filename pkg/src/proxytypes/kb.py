"""Heterogeneous declarative memory.

Each concept holds up to three co-referring bodies of knowledge under one
anchor id: a prototype, any number of exemplars, and a theory network.  The
knowledge base is read from a JSON document, validated completely at load
time, and never mutated afterwards.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import IO, Any, Mapping

from .coherence import EVIDENCE, Constraint, Element, TheoryNetwork
from .errors import (KBRangeError, KBReferenceError, ParseError,
                     SchemaError, UnknownConcept)
from .space import ConceptualSpace, Dimension, Domain, Point, PointMatrix, validate_point

__all__ = [
    "PrototypeBody",
    "ExemplarBody",
    "ConceptEntry",
    "EngineParams",
    "KnowledgeBase",
    "load",
    "loads",
    "load_path",
    "from_document",
    "theory_document",
    "SpaceIndex",
    "dumps",
    "to_document",
    "parse_point",
    "all_exemplars",
    "all_prototypes",
    "all_theories",
    "theory_of",
]


@dataclass(frozen=True)
class PrototypeBody:
    space: str
    point: Point
    label: str | None = None


@dataclass(frozen=True)
class ExemplarBody:
    exemplar_id: str
    space: str
    point: Point
    label: str | None = None


@dataclass(frozen=True)
class ConceptEntry:
    id: str
    anchor: str
    prototype: PrototypeBody | None = None
    exemplars: tuple[ExemplarBody, ...] = ()
    theory: TheoryNetwork | None = None

    def __post_init__(self):
        object.__setattr__(self, "exemplars", tuple(self.exemplars))
        if self.prototype is None and not self.exemplars and self.theory is None:
            raise ValueError(f"concept {self.id!r} has no body of knowledge")

    @property
    def space(self) -> str | None:
        """Name of the space the numeric bodies live in, if there are any."""
        if self.prototype is not None:
            return self.prototype.space
        if self.exemplars:
            return self.exemplars[0].space
        return None

    def exemplar(self, exemplar_id: str) -> ExemplarBody | None:
        for e in self.exemplars:
            if e.exemplar_id == exemplar_id:
                return e
        return None


@dataclass(frozen=True)
class EngineParams:
    """Thresholds and solver knobs for categorization.

    ``data_priority`` is the weight binding observations to the evidence
    element; ``exact_cap`` is the largest theory solved by enumeration.
    """

    theta_exemplar: float = 0.85
    theta_coherence: float = 0.6
    decay_k: float = 1.0
    data_priority: float = 1.0
    exact_cap: int = 20

    def __post_init__(self):
        for name in ("theta_exemplar", "theta_coherence"):
            v = getattr(self, name)
            if not 0 < v < 1:
                raise ValueError(f"{name} must lie in (0, 1), got {v}")
        for name in ("decay_k", "data_priority"):
            v = getattr(self, name)
            if not (v > 0 and math.isfinite(v)):
                raise ValueError(f"{name} must be positive, got {v}")
        if not (isinstance(self.exact_cap, int) and self.exact_cap >= 0):
            raise ValueError(f"exact_cap must be a non-negative integer, got {self.exact_cap}")

    def replace(self, **changes) -> "EngineParams":
        values = {k: getattr(self, k) for k in self.__dataclass_fields__}
        values.update({k: v for k, v in changes.items() if v is not None})
        return EngineParams(**values)


@dataclass(frozen=True)
class KnowledgeBase:
    spaces: Mapping[str, ConceptualSpace]
    concepts: Mapping[str, ConceptEntry]
    params: EngineParams = field(default_factory=EngineParams)

    def __post_init__(self):
        object.__setattr__(self, "spaces", dict(self.spaces))
        object.__setattr__(self, "concepts", dict(sorted(self.concepts.items())))

    def concept(self, concept_id: str) -> ConceptEntry:
        try:
            return self.concepts[concept_id]
        except KeyError:
            raise UnknownConcept(concept_id) from None

    @cached_property
    def _indexes(self) -> dict:
        return {}

    def index(self, space: str) -> "SpaceIndex":
        """Packed prototypes and exemplars of one space, built on first use."""
        idx = self._indexes.get(space)
        if idx is None:
            idx = self._indexes[space] = SpaceIndex(self, space)
        return idx


class SpaceIndex:
    """All numeric bodies of one space in lexicographic order.

    ``refs`` holds ``(concept_id, exemplar_id)`` pairs where a prototype uses
    ``None`` as exemplar id.
    """

    def __init__(self, kb: KnowledgeBase, space: str):
        self.space = kb.spaces[space]
        self.exemplar_refs = [(cid, e.exemplar_id) for cid, e in all_exemplars(kb) if e.space == space]
        self.exemplars = PointMatrix(self.space, [
            kb.concepts[cid].exemplar(eid).point for cid, eid in self.exemplar_refs])
        self.prototype_refs = [(cid, None) for cid, p in all_prototypes(kb) if p.space == space]
        self.prototypes = PointMatrix(self.space, [
            kb.concepts[cid].prototype.point for cid, _ in self.prototype_refs])


def all_exemplars(kb: KnowledgeBase) -> list[tuple[str, ExemplarBody]]:
    """Every stored exemplar, ordered by (concept id, exemplar id)."""
    out = [(cid, e) for cid, c in kb.concepts.items() for e in c.exemplars]
    out.sort(key=lambda item: (item[0], item[1].exemplar_id))
    return out


def all_prototypes(kb: KnowledgeBase) -> list[tuple[str, PrototypeBody]]:
    return [(cid, c.prototype) for cid, c in sorted(kb.concepts.items()) if c.prototype is not None]


def all_theories(kb: KnowledgeBase) -> list[tuple[str, TheoryNetwork]]:
    return [(cid, c.theory) for cid, c in sorted(kb.concepts.items()) if c.theory is not None]


def theory_of(kb: KnowledgeBase, concept_id: str) -> TheoryNetwork | None:
    return kb.concept(concept_id).theory


# ---------------------------------------------------------------------------
# Loading

_PARAM_KEYS = {"theta_exemplar", "theta_coherence", "decay_k", "data_priority", "exact_cap"}


class _Reader:
    """Structural checks that carry a location path into every error."""

    def __init__(self, lenient: bool):
        self.lenient = lenient

    def obj(self, node, loc, required, optional=()):
        if not isinstance(node, dict):
            raise SchemaError(f"expected an object, got {type(node).__name__}", loc)
        for key in required:
            if key not in node:
                raise SchemaError(f"missing required field {key!r}", loc)
        if not self.lenient:
            extra = sorted(set(node) - set(required) - set(optional))
            if extra:
                raise SchemaError(f"unknown field(s) {extra}", loc)
        return node

    @staticmethod
    def array(node, loc):
        if not isinstance(node, list):
            raise SchemaError(f"expected an array, got {type(node).__name__}", loc)
        return node

    @staticmethod
    def ident(node, loc):
        if not isinstance(node, str) or not node:
            raise SchemaError("expected a non-empty string identifier", loc)
        return node

    @staticmethod
    def text(node, loc):
        if node is not None and not isinstance(node, str):
            raise SchemaError("expected a string", loc)
        return node

    @staticmethod
    def number(node, loc):
        if isinstance(node, bool) or not isinstance(node, (int, float)):
            raise SchemaError(f"expected a number, got {type(node).__name__}", loc)
        value = float(node)
        if not math.isfinite(value):
            raise KBRangeError("number must be finite", loc)
        return value


def _parse_space(r: _Reader, node, loc) -> ConceptualSpace:
    r.obj(node, loc, ("name", "domains"))
    name = r.ident(node["name"], f"{loc}.name")
    domains, domain_names, dim_names = [], set(), set()
    raw_domains = r.array(node["domains"], f"{loc}.domains")
    if not raw_domains:
        raise SchemaError("space needs at least one domain", f"{loc}.domains")
    for i, dnode in enumerate(raw_domains):
        dloc = f"{loc}.domains[{i}]"
        r.obj(dnode, dloc, ("name", "dimensions"))
        dname = r.ident(dnode["name"], f"{dloc}.name")
        if dname in domain_names:
            raise SchemaError(f"duplicate domain name {dname!r}", f"{dloc}.name")
        domain_names.add(dname)
        raw_dims = r.array(dnode["dimensions"], f"{dloc}.dimensions")
        if not raw_dims:
            raise SchemaError("domain needs at least one dimension", f"{dloc}.dimensions")
        dims = []
        for j, xnode in enumerate(raw_dims):
            xloc = f"{dloc}.dimensions[{j}]"
            r.obj(xnode, xloc, ("name", "weight", "range"))
            xname = r.ident(xnode["name"], f"{xloc}.name")
            if xname in dim_names:
                raise SchemaError(f"dimension name {xname!r} already used in this space", f"{xloc}.name")
            dim_names.add(xname)
            weight = r.number(xnode["weight"], f"{xloc}.weight")
            if weight <= 0:
                raise KBRangeError(f"weight must be positive, got {weight}", f"{xloc}.weight")
            rng = r.array(xnode["range"], f"{xloc}.range")
            if len(rng) != 2:
                raise SchemaError("range must be [lo, hi]", f"{xloc}.range")
            lo, hi = (r.number(v, f"{xloc}.range[{k}]") for k, v in enumerate(rng))
            if not lo < hi:
                raise KBRangeError(f"range [{lo}, {hi}] is degenerate", f"{xloc}.range")
            dims.append(Dimension(xname, weight, lo, hi))
        domains.append(Domain(dname, tuple(dims)))
    return ConceptualSpace(name, tuple(domains))


def parse_point(node, space: ConceptualSpace, loc: str, lenient: bool = False) -> Point:
    """Read a ``{dimension: value}`` object and check it against ``space``."""
    r = _Reader(lenient)
    if not isinstance(node, dict):
        raise SchemaError("point must be an object of dimension -> value", loc)
    coords = {}
    for key, value in node.items():
        coords[key] = r.number(value, f"{loc}.{key}")
    point = Point(coords)
    findings = validate_point(point, space)
    if findings:
        f = findings[0]
        where = f"{loc}.{f.dimension}"
        if f.kind == "UnknownDimension":
            raise KBReferenceError(f"unknown dimension {f.dimension!r} in space {space.name!r}", where)
        if f.kind == "MissingDimension":
            raise SchemaError(f"missing coordinate for dimension {f.dimension!r}", loc)
        dim = space.dimensions[f.dimension]
        raise KBRangeError(f"{f.value} outside [{dim.lo}, {dim.hi}]", where)
    return point


def _resolve_space(r, spaces, node, loc, what):
    name = r.ident(node, loc)
    if name not in spaces:
        raise KBReferenceError(f"{what} names undeclared space {name!r}", loc)
    return spaces[name]


def _parse_theory(r: _Reader, node, loc) -> TheoryNetwork:
    r.obj(node, loc, ("elements",), ("constraints",))
    elements, ids = [], set()
    for i, enode in enumerate(r.array(node["elements"], f"{loc}.elements")):
        eloc = f"{loc}.elements[{i}]"
        r.obj(enode, eloc, ("id",), ("label",))
        eid = r.ident(enode["id"], f"{eloc}.id")
        if eid == EVIDENCE:
            raise SchemaError(f"element id {EVIDENCE!r} is reserved", f"{eloc}.id")
        if eid in ids:
            raise SchemaError(f"duplicate element id {eid!r}", f"{eloc}.id")
        ids.add(eid)
        elements.append(Element(eid, r.text(enode.get("label"), f"{eloc}.label")))
    constraints, pairs = [], set()
    for i, cnode in enumerate(r.array(node.get("constraints", []), f"{loc}.constraints")):
        cloc = f"{loc}.constraints[{i}]"
        r.obj(cnode, cloc, ("a", "b", "sign", "weight"))
        a = r.ident(cnode["a"], f"{cloc}.a")
        b = r.ident(cnode["b"], f"{cloc}.b")
        for end, key in ((a, "a"), (b, "b")):
            if end not in ids:
                raise KBReferenceError(f"constraint endpoint {end!r} is not a declared element", f"{cloc}.{key}")
        if a == b:
            raise SchemaError("constraint endpoints must be distinct", cloc)
        pair = frozenset((a, b))
        if pair in pairs:
            raise SchemaError(f"second constraint between {a!r} and {b!r}", cloc)
        pairs.add(pair)
        sign = cnode["sign"]
        if sign not in ("+", "-"):
            raise SchemaError(f"sign must be '+' or '-', got {sign!r}", f"{cloc}.sign")
        weight = r.number(cnode["weight"], f"{cloc}.weight")
        if weight <= 0:
            raise KBRangeError(f"weight must be positive, got {weight}", f"{cloc}.weight")
        constraints.append(Constraint(a, b, sign == "+", weight))
    return TheoryNetwork(tuple(elements), tuple(constraints))


def _parse_concept(r: _Reader, node, loc, spaces) -> ConceptEntry:
    r.obj(node, loc, ("id", "anchor"), ("prototype", "exemplars", "theory"))
    cid = r.ident(node["id"], f"{loc}.id")
    anchor = r.ident(node["anchor"], f"{loc}.anchor")
    used_space = None

    def same_space(space, where):
        nonlocal used_space
        if used_space is None:
            used_space = space.name
        elif space.name != used_space:
            raise KBReferenceError(
                f"concept {cid!r} mixes spaces {used_space!r} and {space.name!r}", where)

    prototype = None
    if node.get("prototype") is not None:
        ploc = f"{loc}.prototype"
        pnode = node["prototype"]
        if isinstance(pnode, list):
            raise SchemaError("a concept has at most one prototype", ploc)
        r.obj(pnode, ploc, ("space", "point"), ("label",))
        space = _resolve_space(r, spaces, pnode["space"], f"{ploc}.space", f"prototype of {cid!r}")
        same_space(space, f"{ploc}.space")
        prototype = PrototypeBody(space.name, parse_point(pnode["point"], space, f"{ploc}.point", r.lenient),
                                  r.text(pnode.get("label"), f"{ploc}.label"))

    exemplars, exemplar_ids = [], set()
    for i, enode in enumerate(r.array(node.get("exemplars", []), f"{loc}.exemplars")):
        eloc = f"{loc}.exemplars[{i}]"
        r.obj(enode, eloc, ("exemplar_id", "space", "point"), ("label",))
        eid = r.ident(enode["exemplar_id"], f"{eloc}.exemplar_id")
        if eid in exemplar_ids:
            raise SchemaError(f"duplicate exemplar id {eid!r} in concept {cid!r}", f"{eloc}.exemplar_id")
        exemplar_ids.add(eid)
        space = _resolve_space(r, spaces, enode["space"], f"{eloc}.space", f"exemplar {cid}/{eid}")
        same_space(space, f"{eloc}.space")
        exemplars.append(ExemplarBody(eid, space.name,
                                      parse_point(enode["point"], space, f"{eloc}.point", r.lenient),
                                      r.text(enode.get("label"), f"{eloc}.label")))

    theory = None
    if node.get("theory") is not None:
        theory = _parse_theory(r, node["theory"], f"{loc}.theory")

    if prototype is None and not exemplars and theory is None:
        raise SchemaError(f"concept {cid!r} has no prototype, exemplar or theory", loc)
    return ConceptEntry(cid, anchor, prototype, tuple(exemplars), theory)


def _parse_params(r: _Reader, node, loc) -> EngineParams:
    r.obj(node, loc, (), tuple(sorted(_PARAM_KEYS)))
    values: dict[str, Any] = {}
    for key in ("theta_exemplar", "theta_coherence"):
        if key in node:
            v = r.number(node[key], f"{loc}.{key}")
            if not 0 < v < 1:
                raise KBRangeError(f"{key} must lie in (0, 1), got {v}", f"{loc}.{key}")
            values[key] = v
    for key in ("decay_k", "data_priority"):
        if key in node:
            v = r.number(node[key], f"{loc}.{key}")
            if v <= 0:
                raise KBRangeError(f"{key} must be positive, got {v}", f"{loc}.{key}")
            values[key] = v
    if "exact_cap" in node:
        v = node["exact_cap"]
        if isinstance(v, bool) or not isinstance(v, int):
            raise SchemaError("exact_cap must be an integer", f"{loc}.exact_cap")
        if v < 0:
            raise KBRangeError("exact_cap must be non-negative", f"{loc}.exact_cap")
        values["exact_cap"] = v
    return EngineParams(**values)


def from_document(doc, lenient: bool = False) -> KnowledgeBase:
    r = _Reader(lenient)
    r.obj(doc, "$", ("spaces", "concepts"), ("params",))
    spaces: dict[str, ConceptualSpace] = {}
    for i, snode in enumerate(r.array(doc["spaces"], "spaces")):
        space = _parse_space(r, snode, f"spaces[{i}]")
        if space.name in spaces:
            raise SchemaError(f"duplicate space name {space.name!r}", f"spaces[{i}].name")
        spaces[space.name] = space
    concepts: dict[str, ConceptEntry] = {}
    anchors: set[str] = set()
    for i, cnode in enumerate(r.array(doc["concepts"], "concepts")):
        loc = f"concepts[{i}]"
        concept = _parse_concept(r, cnode, loc, spaces)
        if concept.id in concepts:
            raise SchemaError(f"duplicate concept id {concept.id!r}", f"{loc}.id")
        if concept.anchor in anchors:
            raise SchemaError(f"duplicate anchor {concept.anchor!r}", f"{loc}.anchor")
        anchors.add(concept.anchor)
        concepts[concept.id] = concept
    params = _parse_params(r, doc.get("params", {}), "params")
    return KnowledgeBase(spaces, concepts, params)


def loads(text: str | bytes, lenient: bool = False) -> KnowledgeBase:
    if isinstance(text, bytes):
        try:
            text = text.decode("utf-8")
        except UnicodeDecodeError as exc:
            raise ParseError(f"not UTF-8: {exc}") from None
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"invalid JSON: {exc.msg}", f"line {exc.lineno} column {exc.colno}") from None
    return from_document(doc, lenient)


def load(source: IO, lenient: bool = False) -> KnowledgeBase:
    """Read and fully validate a knowledge base from a text or byte stream."""
    return loads(source.read(), lenient)


def load_path(path, lenient: bool = False) -> KnowledgeBase:
    with open(path, "rb") as fh:
        return load(fh, lenient)


# ---------------------------------------------------------------------------
# Serialization

def _point_doc(p: Point, space: ConceptualSpace) -> dict:
    return {name: p.coords[name] for name in space.dimension_names}


def to_document(kb: KnowledgeBase) -> dict:
    """Canonical JSON-ready form: declaration order for spaces, sorted concepts."""
    spaces = []
    for space in kb.spaces.values():
        spaces.append({
            "name": space.name,
            "domains": [{
                "name": dom.name,
                "dimensions": [{"name": d.name, "weight": d.weight, "range": [d.lo, d.hi]}
                               for d in dom.dimensions],
            } for dom in space.domains],
        })
    concepts = []
    for c in kb.concepts.values():
        entry: dict[str, Any] = {"id": c.id, "anchor": c.anchor}
        if c.prototype is not None:
            p = c.prototype
            entry["prototype"] = {"space": p.space, "point": _point_doc(p.point, kb.spaces[p.space])}
            if p.label is not None:
                entry["prototype"]["label"] = p.label
        if c.exemplars:
            entry["exemplars"] = []
            for e in sorted(c.exemplars, key=lambda e: e.exemplar_id):
                ed = {"exemplar_id": e.exemplar_id, "space": e.space,
                      "point": _point_doc(e.point, kb.spaces[e.space])}
                if e.label is not None:
                    ed["label"] = e.label
                entry["exemplars"].append(ed)
        if c.theory is not None:
            entry["theory"] = theory_document(c.theory)
        concepts.append(entry)
    params = kb.params
    return {
        "spaces": spaces,
        "concepts": concepts,
        "params": {
            "theta_exemplar": params.theta_exemplar,
            "theta_coherence": params.theta_coherence,
            "decay_k": params.decay_k,
            "data_priority": params.data_priority,
            "exact_cap": params.exact_cap,
        },
    }


def theory_document(theory: TheoryNetwork) -> dict:
    elements = []
    for e in theory.elements:
        ed = {"id": e.id}
        if e.label is not None:
            ed["label"] = e.label
        elements.append(ed)
    return {
        "elements": elements,
        "constraints": [{"a": c.a, "b": c.b, "sign": c.sign, "weight": c.weight}
                        for c in theory.constraints],
    }


def dumps(kb: KnowledgeBase, indent: int | None = 2) -> str:
    return json.dumps(to_document(kb), indent=indent, ensure_ascii=False) + "\n"

