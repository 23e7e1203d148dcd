"""DELTA categorization over a heterogeneous knowledge base.

Order of business for a stimulus:

1. exemplar scan: the most similar stored exemplar wins outright when its
   similarity reaches ``theta_exemplar``;
2. nearest scan: otherwise the single closest representation, prototype or
   exemplar, is taken;
3. coherence check: a winning prototype is kept when its concept's theory is
   coherent enough with the stimulus's observations (or there is no theory);
4. theory search: otherwise the concept whose theory is most coherent with
   the stimulus replaces it.

Every stage is recorded in a :class:`DecisionTrace`.  Ties are broken
lexicographically on concept id, then exemplar id, with a prototype sorting
before its concept's exemplars.
"""

from __future__ import annotations

import copy
import json
from dataclasses import dataclass
from enum import Enum
from typing import Iterable, Sequence, Union

from .coherence import ObservationSet, TheoryNetwork, coherence_score
from .errors import (DimensionMismatch, EmptyKnowledgeBase, KBError, KBRangeError,
                     KBReferenceError, ParseError, SchemaError, StaleResult, UnknownConcept)
from .kb import (EngineParams, ExemplarBody, KnowledgeBase, PrototypeBody, _Reader,
                 all_theories, parse_point)
from .space import Point, validate_point

__all__ = [
    "Kind",
    "Stage",
    "Candidate",
    "TraceStep",
    "DecisionTrace",
    "Stimulus",
    "CategorizationResult",
    "ProxyToken",
    "StimulusError",
    "delta_categorize",
    "categorize_many",
    "proxyfy",
    "explain",
    "parse_trace",
    "parse_stimuli",
    "result_to_json",
]


def _ref(concept: str, body: str, exemplar_id: str | None = None) -> str:
    if exemplar_id is None:
        return f"{concept}:{body}"
    return f"{concept}:{body}:{exemplar_id}"


class Kind(str, Enum):
    EXEMPLAR = "Exemplar"
    PROTOTYPE = "Prototype"
    THEORY_OVERRIDE = "TheoryOverride"


class Stage(str, Enum):
    EXEMPLAR_SCAN = "ExemplarScan"
    NEAREST_SCAN = "NearestScan"
    COHERENCE_CHECK = "CoherenceCheck"
    THEORY_SEARCH = "TheorySearch"
    PROXYFICATION = "Proxyfication"


@dataclass(frozen=True)
class Candidate:
    concept: str
    body: str  # "exemplar" | "prototype" | "theory"
    score: float
    exemplar_id: str | None = None
    exact: bool | None = None

    @property
    def ref(self) -> str:
        return _ref(self.concept, self.body, self.exemplar_id)

    def to_json(self) -> dict:
        out = {"concept": self.concept, "body": self.body}
        if self.exemplar_id is not None:
            out["exemplar_id"] = self.exemplar_id
        out["score"] = self.score
        if self.exact is not None:
            out["exact"] = self.exact
        return out

    @classmethod
    def from_json(cls, d: dict) -> "Candidate":
        return cls(d["concept"], d["body"], d["score"], d.get("exemplar_id"), d.get("exact"))


@dataclass(frozen=True)
class TraceStep:
    stage: Stage
    outcome: str
    candidates: tuple[Candidate, ...] = ()
    thresholds: tuple[tuple[str, float], ...] = ()
    selected: str | None = None
    notes: tuple[str, ...] = ()

    def to_json(self) -> dict:
        return {
            "stage": self.stage.value,
            "outcome": self.outcome,
            "selected": self.selected,
            "thresholds": dict(self.thresholds),
            "candidates": [c.to_json() for c in self.candidates],
            "notes": list(self.notes),
        }

    @classmethod
    def from_json(cls, d: dict) -> "TraceStep":
        return cls(
            stage=Stage(d["stage"]),
            outcome=d["outcome"],
            candidates=tuple(Candidate.from_json(c) for c in d["candidates"]),
            thresholds=tuple(d["thresholds"].items()),
            selected=d["selected"],
            notes=tuple(d["notes"]),
        )


@dataclass(frozen=True)
class DecisionTrace:
    steps: tuple[TraceStep, ...] = ()

    def stages(self) -> list[Stage]:
        return [s.stage for s in self.steps]

    def step(self, stage: Stage) -> TraceStep | None:
        for s in self.steps:
            if s.stage is stage:
                return s
        return None

    def to_json(self) -> list:
        return [s.to_json() for s in self.steps]

    @classmethod
    def from_json(cls, data: list) -> "DecisionTrace":
        return cls(tuple(TraceStep.from_json(s) for s in data))


@dataclass(frozen=True)
class Stimulus:
    id: str
    space: str
    point: Point
    observed: frozenset[str] = frozenset()
    contradicted: frozenset[str] = frozenset()

    def __post_init__(self):
        object.__setattr__(self, "observed", frozenset(self.observed))
        object.__setattr__(self, "contradicted", frozenset(self.contradicted))
        both = self.observed & self.contradicted
        if both:
            raise ValueError(f"stimulus {self.id!r}: ids both observed and contradicted: {sorted(both)}")

    @property
    def observations(self) -> ObservationSet:
        return ObservationSet(self.observed, self.contradicted)


@dataclass(frozen=True)
class CategorizationResult:
    stimulus: str
    concept: str
    kind: Kind
    similarity: float | None
    coherence: float | None
    trace: DecisionTrace
    exemplar_id: str | None = None

    @property
    def resolved_at(self) -> Stage:
        """The stage whose outcome decided the result."""
        return [s for s in self.trace.stages() if s is not Stage.PROXYFICATION][-1]


@dataclass(frozen=True)
class ProxyToken:
    """The one body of knowledge tokenized in working memory for a result."""

    concept: str
    kind: Kind
    payload: Union[ExemplarBody, PrototypeBody, TheoryNetwork]
    stimulus: str


def _argmax(cands: Sequence[Candidate]) -> tuple[Candidate, bool]:
    """Highest score, ties to the first candidate; ``cands`` must be pre-sorted."""
    best = cands[0]
    for c in cands[1:]:
        if c.score > best.score:
            best = c
    tied = sum(1 for c in cands if c.score == best.score) > 1
    return best, tied


def _check_stimulus(d: Stimulus, kb: KnowledgeBase):
    space = kb.spaces.get(d.space)
    if space is None:
        raise DimensionMismatch(f"stimulus {d.id!r} names unknown space {d.space!r}")
    for f in validate_point(d.point, space):
        if f.kind == "OutOfRange":
            raise KBRangeError(f"stimulus {d.id!r}: {f}")
        raise DimensionMismatch(f"stimulus {d.id!r}: {f}")


def delta_categorize(d: Stimulus, kb: KnowledgeBase,
                     params: EngineParams | None = None) -> CategorizationResult:
    """Categorize one stimulus; see the module docstring for the stages."""
    params = params or kb.params
    _check_stimulus(d, kb)
    idx = kb.index(d.space)
    if not len(idx.exemplars) and not len(idx.prototypes):
        raise EmptyKnowledgeBase(f"no prototype or exemplar in space {d.space!r}")
    k = params.decay_k
    steps: list[TraceStep] = []

    def finish(concept, kind, sim, coh, body, exemplar_id=None):
        steps.append(TraceStep(Stage.PROXYFICATION, kind.value, selected=_ref(concept, body, exemplar_id)))
        return CategorizationResult(d.id, concept, kind, sim, coh, DecisionTrace(tuple(steps)),
                                    exemplar_id)

    # 1. exemplar scan
    ex_cands = [Candidate(cid, "exemplar", s, eid)
                for (cid, eid), s in zip(idx.exemplar_refs, idx.exemplars.similarities(d.point, k))]
    thresholds = (("theta_exemplar", params.theta_exemplar), ("decay_k", k))
    if ex_cands:
        best, tied = _argmax(ex_cands)
        hit = best.score >= params.theta_exemplar
        steps.append(TraceStep(Stage.EXEMPLAR_SCAN, "match" if hit else "no_match", tuple(ex_cands),
                               thresholds, best.ref, ("TieBroken",) if tied else ()))
        if hit:
            return finish(best.concept, Kind.EXEMPLAR, best.score, None, "exemplar", best.exemplar_id)
    else:
        steps.append(TraceStep(Stage.EXEMPLAR_SCAN, "no_match", (), thresholds, None, ("NoExemplars",)))

    # 2. nearest of all representations
    proto_cands = [Candidate(cid, "prototype", s)
                   for (cid, _), s in zip(idx.prototype_refs, idx.prototypes.similarities(d.point, k))]
    joint = sorted(proto_cands + ex_cands, key=lambda c: (c.concept, c.exemplar_id or ""))
    nearest, tied = _argmax(joint)
    steps.append(TraceStep(Stage.NEAREST_SCAN, nearest.body, tuple(joint), (("decay_k", k),),
                           nearest.ref, ("TieBroken",) if tied else ()))
    if nearest.body == "exemplar":
        return finish(nearest.concept, Kind.EXEMPLAR, nearest.score, None, "exemplar", nearest.exemplar_id)

    # 3. coherence check against the prototype's own theory
    concept = kb.concepts[nearest.concept]
    obs = d.observations
    coh_thresholds = (("theta_coherence", params.theta_coherence),
                      ("data_priority", params.data_priority))
    if concept.theory is None:
        steps.append(TraceStep(Stage.COHERENCE_CHECK, "theory_absent", (), coh_thresholds,
                               None, ("TheoryAbsent",)))
        return finish(concept.id, Kind.PROTOTYPE, nearest.score, None, "prototype")

    def score(cid: str, theory: TheoryNetwork) -> Candidate:
        value = coherence_score(theory, obs, params.data_priority, params.exact_cap)
        return Candidate(cid, "theory", value, exact=len(theory.elements) <= params.exact_cap)

    own = score(concept.id, concept.theory)
    coherent = own.score >= params.theta_coherence
    steps.append(TraceStep(Stage.COHERENCE_CHECK, "coherent" if coherent else "incoherent", (own,),
                           coh_thresholds, own.ref))
    if coherent:
        return finish(concept.id, Kind.PROTOTYPE, nearest.score, own.score, "prototype")

    # 4. theory override
    rivals = []
    for cid, theory in all_theories(kb):
        space = kb.concepts[cid].space
        if space is not None and space != d.space:
            continue
        rivals.append(own if cid == concept.id else score(cid, theory))
    # own theory always qualifies, so rivals is never empty
    winner, tied = _argmax(rivals)
    notes = []
    if tied:
        notes.append("TieBroken")
    if winner.score < params.theta_coherence:
        notes.append("LowConfidenceOverride")
    steps.append(TraceStep(Stage.THEORY_SEARCH, "override", tuple(rivals),
                           (("theta_coherence", params.theta_coherence),), winner.ref, tuple(notes)))
    return finish(winner.concept, Kind.THEORY_OVERRIDE, None, winner.score, "theory")


def categorize_many(stimuli: Iterable[Stimulus], kb: KnowledgeBase,
                    params: EngineParams | None = None) -> list[CategorizationResult]:
    return [delta_categorize(d, kb, params) for d in stimuli]


def proxyfy(result: CategorizationResult, kb: KnowledgeBase) -> ProxyToken:
    """Copy the single winning body out of the knowledge base."""
    try:
        concept = kb.concept(result.concept)
    except UnknownConcept:
        raise StaleResult(f"concept {result.concept!r} is not in the knowledge base") from None
    if result.kind is Kind.EXEMPLAR:
        payload = concept.exemplar(result.exemplar_id) if result.exemplar_id else None
    elif result.kind is Kind.PROTOTYPE:
        payload = concept.prototype
    else:
        payload = concept.theory
    if payload is None:
        raise StaleResult(f"concept {result.concept!r} has no {result.kind.value} body to tokenize")
    return ProxyToken(result.concept, result.kind, copy.deepcopy(payload), result.stimulus)


# ---------------------------------------------------------------------------
# Rendering and wire formats

def result_to_json(result: CategorizationResult) -> dict:
    out = {"stimulus": result.stimulus, "concept": result.concept, "kind": result.kind.value}
    if result.exemplar_id is not None:
        out["exemplar_id"] = result.exemplar_id
    if result.similarity is not None:
        out["similarity"] = result.similarity
    if result.coherence is not None:
        out["coherence"] = result.coherence
    out["trace"] = result.trace.to_json()
    return out


def _fmt_thresholds(thresholds):
    return ", ".join(f"{k}={v!r}" for k, v in thresholds) or "-"


def explain(result: CategorizationResult, fmt: str = "text") -> str:
    """Render the trace; ``fmt="json"`` gives the form :func:`parse_trace` reads."""
    if fmt == "json":
        return json.dumps(result.trace.to_json(), indent=2)
    if fmt != "text":
        raise ValueError(f"unknown format {fmt!r}")
    lines = [f"stimulus {result.stimulus} -> {result.concept} ({result.kind.value})"]
    for n, step in enumerate(result.trace.steps, 1):
        lines.append(f"  [{n}] {step.stage.value}: {step.outcome}"
                     + (f" -> {step.selected}" if step.selected else ""))
        lines.append(f"      thresholds: {_fmt_thresholds(step.thresholds)}")
        for c in step.candidates:
            flag = "" if c.exact is None else (" exact" if c.exact else " greedy")
            lines.append(f"      {c.ref:<40} {c.score!r}{flag}")
        if step.notes:
            lines.append(f"      notes: {', '.join(step.notes)}")
    return "\n".join(lines)


def parse_trace(text: str) -> DecisionTrace:
    return DecisionTrace.from_json(json.loads(text))


def _parse_stimulus(node, kb: KnowledgeBase, loc: str, lenient: bool) -> Stimulus:
    r = _Reader(lenient)
    r.obj(node, loc, ("id", "space", "point"), ("observed", "contradicted"))
    sid = r.ident(node["id"], f"{loc}.id")
    space_name = r.ident(node["space"], f"{loc}.space")
    space = kb.spaces.get(space_name)
    if space is None:
        raise KBReferenceError(f"stimulus {sid!r} names undeclared space {space_name!r}", f"{loc}.space")
    point = parse_point(node["point"], space, f"{loc}.point", lenient)
    sets = {}
    for key in ("observed", "contradicted"):
        ids = r.array(node.get(key, []), f"{loc}.{key}")
        sets[key] = frozenset(r.ident(v, f"{loc}.{key}[{i}]") for i, v in enumerate(ids))
    both = sets["observed"] & sets["contradicted"]
    if both:
        raise SchemaError(f"ids both observed and contradicted: {sorted(both)}", loc)
    return Stimulus(sid, space_name, point, sets["observed"], sets["contradicted"])


@dataclass(frozen=True)
class StimulusError:
    """A stimulus that could not be read or categorized; keeps its batch position."""

    index: int
    stimulus: str | None
    kind: str
    message: str
    location: str = ""

    @classmethod
    def from_exception(cls, index: int, stimulus: str | None, exc: Exception) -> "StimulusError":
        if isinstance(exc, KBError):
            return cls(index, stimulus, exc.kind, exc.message, exc.location)
        return cls(index, stimulus, type(exc).__name__, str(exc))

    def to_json(self) -> dict:
        return {"stimulus": self.stimulus, "index": self.index, "error": self.kind,
                "location": self.location, "message": self.message}


def parse_stimuli(text: str | bytes, kb: KnowledgeBase,
                  lenient: bool = False) -> list[Stimulus | StimulusError]:
    """Read one stimulus object or an array of them.

    A malformed document raises :class:`ParseError`; a malformed record
    becomes a :class:`StimulusError` in its slot so the rest of the batch
    still runs.
    """
    if isinstance(text, bytes):
        text = text.decode("utf-8")
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"invalid JSON: {exc.msg}", f"line {exc.lineno} column {exc.colno}") from None
    items = doc if isinstance(doc, list) else [doc]
    out: list[Stimulus | StimulusError] = []
    for i, node in enumerate(items):
        try:
            out.append(_parse_stimulus(node, kb, f"[{i}]", lenient))
        except KBError as exc:
            sid = node.get("id") if isinstance(node, dict) and isinstance(node.get("id"), str) else None
            out.append(StimulusError.from_exception(i, sid, exc))
    return out

