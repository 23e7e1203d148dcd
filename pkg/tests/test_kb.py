import copy
import io
import json
import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from generators import random_kb, random_stimulus
from proxytypes import delta_categorize
from proxytypes.errors import (KBRangeError, KBReferenceError, ParseError, SchemaError,
                               UnknownConcept)
from proxytypes.kb import (EngineParams, all_exemplars, all_prototypes, all_theories, dumps,
                           from_document, load, load_path, loads, theory_of, to_document)

SPACE = {"name": "s", "domains": [{"name": "d", "dimensions": [
    {"name": "x", "weight": 1.0, "range": [0, 1]},
    {"name": "y", "weight": 2.0, "range": [0, 10]}]}]}


def doc(*concepts, params=None):
    out = {"spaces": [copy.deepcopy(SPACE)], "concepts": list(concepts)}
    if params is not None:
        out["params"] = params
    return out


def proto(x=0.5, y=5.0):
    return {"space": "s", "point": {"x": x, "y": y}}


def exemplar(eid, x=0.5, y=5.0, space="s"):
    return {"exemplar_id": eid, "space": space, "point": {"x": x, "y": y}}


def test_minimal_kb_loads():
    kb = from_document(doc({"id": "dog", "anchor": "dog.n.01", "prototype": proto()}))
    assert len(kb.concepts) == 1
    assert kb.params == EngineParams()
    assert kb.params.theta_exemplar == 0.85
    assert kb.params.theta_coherence == 0.6
    assert kb.params.decay_k == 1.0


def test_load_from_byte_and_text_streams():
    text = json.dumps(doc({"id": "dog", "anchor": "a", "prototype": proto()}))
    assert load(io.BytesIO(text.encode())) == load(io.StringIO(text))


def test_undeclared_space_names_the_exemplar():
    with pytest.raises(KBReferenceError) as err:
        from_document(doc({"id": "dog", "anchor": "a", "exemplars": [exemplar("lessie", space="nowhere")]}))
    assert "dog/lessie" in err.value.message
    assert err.value.location == "concepts[0].exemplars[0].space"


def test_threshold_out_of_range():
    with pytest.raises(KBRangeError) as err:
        from_document(doc({"id": "dog", "anchor": "a", "prototype": proto()},
                          params={"theta_exemplar": 1.2}))
    assert err.value.location == "params.theta_exemplar"


@pytest.mark.parametrize("mutate, error, location", [
    (lambda d: d["concepts"][0].update(colour="red"), SchemaError, "concepts[0]"),
    (lambda d: d["concepts"][0].pop("anchor"), SchemaError, "concepts[0]"),
    (lambda d: d["concepts"][0]["prototype"]["point"].update(x=1.5), KBRangeError, "concepts[0].prototype.point.x"),
    (lambda d: d["concepts"][0]["prototype"]["point"].update(z=0.1), KBReferenceError, "concepts[0].prototype.point.z"),
    (lambda d: d["concepts"][0]["prototype"]["point"].pop("y"), SchemaError, "concepts[0].prototype.point"),
    (lambda d: d["concepts"][0].update(prototype=[proto(), proto()]), SchemaError, "concepts[0].prototype"),
    (lambda d: d["spaces"][0]["domains"][0]["dimensions"][0].update(weight=0), KBRangeError,
     "spaces[0].domains[0].dimensions[0].weight"),
    (lambda d: d["spaces"][0]["domains"][0]["dimensions"][0].update(range=[1, 1]), KBRangeError,
     "spaces[0].domains[0].dimensions[0].range"),
    (lambda d: d["spaces"][0]["domains"][0]["dimensions"][1].update(name="x"), SchemaError,
     "spaces[0].domains[0].dimensions[1].name"),
    (lambda d: d["concepts"].append({"id": "dog", "anchor": "b", "prototype": proto()}), SchemaError,
     "concepts[1].id"),
    (lambda d: d["concepts"].append({"id": "cat", "anchor": "a", "prototype": proto()}), SchemaError,
     "concepts[1].anchor"),
    (lambda d: d["concepts"][0].pop("prototype"), SchemaError, "concepts[0]"),
    (lambda d: d.update(params={"decay_k": -1}), KBRangeError, "params.decay_k"),
    (lambda d: d.update(params={"theta_coherence": 0}), KBRangeError, "params.theta_coherence"),
    (lambda d: d["concepts"][0].update(exemplars=[exemplar("e"), exemplar("e")]), SchemaError,
     "concepts[0].exemplars[1].exemplar_id"),
])
def test_structural_violations(mutate, error, location):
    d = doc({"id": "dog", "anchor": "a", "prototype": proto()})
    mutate(d)
    with pytest.raises(error) as err:
        from_document(d)
    assert err.value.location == location


@pytest.mark.parametrize("theory, error", [
    ({"elements": [{"id": "a"}], "constraints": [{"a": "a", "b": "q", "sign": "+", "weight": 1}]},
     KBReferenceError),
    ({"elements": [{"id": "a"}, {"id": "b"}],
      "constraints": [{"a": "a", "b": "b", "sign": "+", "weight": 1},
                      {"a": "b", "b": "a", "sign": "-", "weight": 1}]}, SchemaError),
    ({"elements": [{"id": "a"}, {"id": "b"}],
      "constraints": [{"a": "a", "b": "b", "sign": "*", "weight": 1}]}, SchemaError),
    ({"elements": [{"id": "a"}, {"id": "b"}],
      "constraints": [{"a": "a", "b": "b", "sign": "+", "weight": 0}]}, KBRangeError),
    ({"elements": [{"id": "a"}, {"id": "a"}]}, SchemaError),
    ({"elements": [{"id": "__EVIDENCE__"}]}, SchemaError),
])
def test_theory_violations(theory, error):
    with pytest.raises(error):
        from_document(doc({"id": "dog", "anchor": "a", "theory": theory}))


def test_mixed_spaces_in_one_concept_rejected():
    d = doc({"id": "dog", "anchor": "a", "prototype": proto(), "exemplars": [exemplar("e", space="t")]})
    d["spaces"].append(dict(copy.deepcopy(SPACE), name="t"))
    with pytest.raises(KBReferenceError):
        from_document(d)


def test_parse_error_has_position():
    with pytest.raises(ParseError) as err:
        loads('{"spaces": [')
    assert "line 1" in err.value.location


def test_lenient_ignores_unknown_fields():
    d = doc({"id": "dog", "anchor": "a", "prototype": dict(proto(), colour="red"), "note": 1})
    d["comment"] = "hand-made"
    with pytest.raises(SchemaError):
        from_document(d)
    kb = from_document(d, lenient=True)
    assert kb.concepts["dog"].prototype.point.coords == {"x": 0.5, "y": 5.0}


def test_theory_only_concept_loads():
    kb = from_document(doc({"id": "switch", "anchor": "a", "theory": {"elements": [{"id": "on"}]}}))
    assert kb.concepts["switch"].space is None


class TestEnumeration:
    def test_no_exemplars(self):
        kb = from_document(doc({"id": "dog", "anchor": "a", "prototype": proto()}))
        assert all_exemplars(kb) == []
        assert all_theories(kb) == []

    def test_fig1_dog(self, dog):
        kb, _ = dog
        assert [(cid, e.exemplar_id) for cid, e in all_exemplars(kb)] == [("dog", "lessie")]

    def test_lexicographic_order(self):
        kb = from_document(doc(
            {"id": "zeta", "anchor": "z", "exemplars": [exemplar("b"), exemplar("a")]},
            {"id": "alpha", "anchor": "y", "exemplars": [exemplar("q"), exemplar("p")]}))
        assert [(c, e.exemplar_id) for c, e in all_exemplars(kb)] == [
            ("alpha", "p"), ("alpha", "q"), ("zeta", "a"), ("zeta", "b")]

    def test_golden_zebra_prototypes(self, zebra):
        kb, _ = zebra
        assert [cid for cid, _ in all_prototypes(kb)] == ["horse", "zebra"]
        assert [cid for cid, _ in all_theories(kb)] == ["horse", "zebra"]

    def test_theory_of(self, dog):
        kb, _ = dog
        assert theory_of(kb, "dog") is kb.concepts["dog"].theory
        kb2 = from_document(doc({"id": "dog", "anchor": "a", "prototype": proto()}))
        assert theory_of(kb2, "dog") is None
        with pytest.raises(UnknownConcept):
            theory_of(kb, "unicorn")


@pytest.mark.parametrize("name", ["dog", "penguin", "golden_zebra"])
def test_fixture_round_trip(fixtures_dir, name):
    kb = load_path(fixtures_dir / f"{name}.kb.json")
    text = dumps(kb)
    again = loads(text)
    assert again == kb
    assert dumps(again) == text


seeds = st.integers(min_value=0, max_value=2**32 - 1)


@settings(max_examples=100, deadline=None)
@given(seeds)
def test_round_trip_random(seed):
    kb = random_kb(random.Random(seed))
    again = loads(dumps(kb))
    assert again == kb
    assert to_document(again) == to_document(kb)


@settings(max_examples=100, deadline=None)
@given(seeds)
def test_co_reference(seed):
    kb = random_kb(random.Random(seed))
    for cid, _ in all_exemplars(kb) + all_prototypes(kb) + all_theories(kb):
        assert kb.concept(cid).id == cid


def _mutations(rng, d):
    """Apply one random edit that may or may not break the document."""
    c = rng.choice(d["concepts"])
    choice = rng.randrange(6)
    if choice == 0 and c.get("exemplars"):
        c["exemplars"][0]["space"] = rng.choice(["s", "ghost"])
    elif choice == 1 and c.get("prototype"):
        dim = rng.choice(list(c["prototype"]["point"]))
        c["prototype"]["point"][dim] += rng.choice([-100.0, 0.0, 100.0])
    elif choice == 2 and c.get("theory") and c["theory"]["constraints"]:
        c["theory"]["constraints"][0]["b"] = rng.choice(["ghost", c["theory"]["constraints"][0]["b"]])
    elif choice == 3:
        d["params"]["theta_coherence"] = rng.choice([0.5, 1.0, -0.1])
    elif choice == 4 and c.get("theory"):
        c["theory"]["constraints"] = c["theory"].get("constraints", []) + [
            {"a": c["theory"]["elements"][0]["id"], "b": "ghost", "sign": "+", "weight": 1}]
    else:
        d["params"]["decay_k"] = rng.choice([1.0, 0.0])


@settings(max_examples=150, deadline=None)
@given(seeds)
def test_loaded_kbs_never_fail_at_query_time(seed):
    rng = random.Random(seed)
    kb = random_kb(rng)
    d = to_document(kb)
    _mutations(rng, d)
    try:
        loaded = from_document(d)
    except (SchemaError, KBReferenceError, KBRangeError):
        return
    for i in range(5):
        result = delta_categorize(random_stimulus(rng, loaded, f"d{i}"), loaded)
        assert result.concept in loaded.concepts
