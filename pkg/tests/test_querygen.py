import pytest

from conftest import make_desc, random_corpus
from srlqa.corpus import (
    Placeholder,
    SrlRole,
    canonical_json,
    query_record,
    render,
    surfaces,
)
from srlqa.querygen import (
    DEFAULT_STOPWORD_VERB_LEMMAS,
    QueryGenConfig,
    frame_eligible,
    generate_queries,
    restrict_frame,
)

CFG = QueryGenConfig()


def knife_desc():
    return make_desc("v0", "s0", "a person is cutting a vegetable with a knife", [
        (3, [("ARG0", 0, 2), ("ARG1", 4, 6), ("ARG2", 6, 9)]),
    ])


class TestRestrict:
    def test_drops_unconsidered_roles(self):
        desc = make_desc("v0", "s0", "a person is cutting a vegetable quickly", [
            (3, [("ARG0", 0, 2), ("ARG1", 4, 6), ("ARGM-DIR", 6, 7)]),
        ])
        restricted = restrict_frame(desc.frames[0], CFG)
        assert [s.role.label for s in restricted.roles] == ["ARG0", "V", "ARG1"]

    def test_v_only_frame_unchanged(self):
        desc = make_desc("v0", "s0", "a person is cutting", [(3, [])])
        restricted = restrict_frame(desc.frames[0], CFG)
        assert [s.role.label for s in restricted.roles] == ["V"]

    def test_loc_alias_survives(self):
        desc = make_desc("v0", "s0", "a person is cutting on a plate", [
            (3, [("ARGM-LOC", 4, 7)]),
        ])
        restricted = restrict_frame(desc.frames[0], CFG)
        assert [s.role.label for s in restricted.roles] == ["V", "LOC"]

    def test_order_preserved(self):
        restricted = restrict_frame(knife_desc().frames[0], CFG)
        starts = [s.start for s in restricted.roles]
        assert starts == sorted(starts)


class TestEligibility:
    def test_two_roles_too_ambiguous(self):
        desc = make_desc("v0", "s0", "a person is cutting", [(3, [("ARG0", 0, 2)])])
        restricted = restrict_frame(desc.frames[0], CFG)
        assert not frame_eligible(restricted, desc.tokens, CFG)

    def test_stopword_verb_rejected(self):
        desc = make_desc("v0", "s0", "the man is in the kitchen with a dog", [
            (2, [("ARG0", 0, 2), ("ARG1", 3, 6), ("ARG2", 6, 9)]),
        ])
        restricted = restrict_frame(desc.frames[0], CFG)
        assert desc.tokens[2].lemma == "be"
        assert "be" in DEFAULT_STOPWORD_VERB_LEMMAS
        assert not frame_eligible(restricted, desc.tokens, CFG)

    def test_three_roles_ok(self):
        desc = make_desc("v0", "s0", "a person cuts a vegetable", [
            (2, [("ARG0", 0, 2), ("ARG1", 3, 5)]),
        ])
        restricted = restrict_frame(desc.frames[0], CFG)
        assert frame_eligible(restricted, desc.tokens, CFG)

    def test_min_roles_validation(self):
        with pytest.raises(ValueError):
            QueryGenConfig(min_roles=1)
        with pytest.raises(ValueError):
            QueryGenConfig(considered_roles=frozenset({SrlRole("ARG0")}))


class TestGenerate:
    def test_one_query_per_role(self):
        queries = generate_queries(knife_desc(), CFG)
        assert len(queries) == 4
        assert {q.masked_role.label for q in queries} == {"ARG0", "V", "ARG1", "ARG2"}

    def test_arg2_query_text_and_answer(self):
        queries = {q.masked_role.label: q for q in generate_queries(knife_desc(), CFG)}
        q = queries["ARG2"]
        assert surfaces(q.query_tokens) == (
            "a", "person", "is", "cutting", "a", "vegetable", "<Q-ARG2>")
        assert surfaces(q.answer_tokens) == ("with", "a", "knife")
        assert q.query_id == "s0:0:ARG2"

    def test_verb_query_keeps_gap_tokens(self):
        queries = {q.masked_role.label: q for q in generate_queries(knife_desc(), CFG)}
        q = queries["V"]
        assert surfaces(q.query_tokens) == (
            "a", "person", "is", "<Q-V>", "a", "vegetable", "with", "a", "knife")
        assert surfaces(q.answer_tokens) == ("cutting",)

    def test_two_restricted_roles_yield_nothing(self):
        desc = make_desc("v0", "s0", "a person is cutting quickly", [
            (3, [("ARG0", 0, 2), ("ARGM-DIR", 4, 5)]),
        ])
        assert generate_queries(desc, CFG) == []

    def test_dropping_arg0_from_considered_set(self):
        narrow = QueryGenConfig(considered_roles=frozenset(
            SrlRole(l) for l in ("V", "ARG1", "ARG2", "LOC")))
        queries = generate_queries(knife_desc(), narrow)
        assert len(queries) == 3
        assert all(q.masked_role.label != "ARG0" for q in queries)
        assert not any("ARG0" in q.query_id for q in queries)

    def test_multi_frame_descriptions(self):
        desc = make_desc(
            "v0", "s0", "a man picks a box and carries the bag to the table", [
                (2, [("ARG0", 0, 2), ("ARG1", 3, 5)]),
                (6, [("ARG0", 0, 2), ("ARG1", 7, 9), ("ARG2", 9, 12)]),
            ])
        queries = generate_queries(desc, CFG)
        assert len(queries) == 3 + 4
        assert {q.frame_index for q in queries} == {0, 1}

    def test_count_matches_restricted_role_total(self):
        cfg = CFG
        for desc in random_corpus(30, seed=3):
            expected = 0
            for frame in desc.frames:
                restricted = restrict_frame(frame, cfg)
                if frame_eligible(restricted, desc.tokens, cfg):
                    expected += len(restricted.roles)
            assert len(generate_queries(desc, cfg)) == expected

    def test_answers_nonempty_and_roles_match(self):
        for desc in random_corpus(30, seed=4):
            for q in generate_queries(desc, CFG):
                assert q.answer_tokens
                placeholder = next(
                    t for t in q.query_tokens if isinstance(t, Placeholder))
                assert placeholder.role == q.masked_role

    def test_render_reproduces_frame_span(self):
        for desc in random_corpus(30, seed=5) + [knife_desc()]:
            for q in generate_queries(desc, CFG):
                frame = desc.frames[q.frame_index]
                restricted = restrict_frame(frame, CFG)
                lo = min(s.start for s in restricted.roles)
                hi = max(s.end for s in restricted.roles)
                assert render(q, q.answer_tokens) == desc.tokens[lo:hi]

    def test_deterministic_bytes(self):
        def emit():
            lines = []
            for desc in random_corpus(20, seed=6):
                for q in generate_queries(desc, CFG):
                    lines.append(canonical_json(query_record(q)))
            return "\n".join(lines)

        assert emit() == emit()
