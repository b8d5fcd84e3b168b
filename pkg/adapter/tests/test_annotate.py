import pytest

from srlqa_adapter.annotate import (
    AdapterError,
    Caption,
    annotate,
    canonical_json,
    extract_frames,
    load_captions,
    noun_lemma,
    tag,
    tokenize,
    verb_lemma,
)


class TestTokenize:
    def test_lowercase_and_punct_split(self):
        assert tokenize("A man walks in.") == ["a", "man", "walks", "in", "."]
        assert tokenize("Hello, world!") == ["hello", ",", "world", "!"]

    def test_keeps_apostrophes(self):
        assert tokenize("the man's bag") == ["the", "man's", "bag"]


class TestLemmas:
    @pytest.mark.parametrize("word,lemma", [
        ("cuts", "cut"), ("cutting", "cut"), ("carries", "carry"),
        ("washes", "wash"), ("moving", "move"), ("dropped", "drop"),
        ("went", "go"), ("threw", "throw"), ("is", "be"),
    ])
    def test_verbs(self, word, lemma):
        assert verb_lemma(word) == lemma

    @pytest.mark.parametrize("word,lemma", [
        ("knives", "knife"), ("men", "man"), ("boxes", "box"),
        ("dogs", "dog"), ("ladies", "lady"), ("glass", "glass"),
    ])
    def test_nouns(self, word, lemma):
        assert noun_lemma(word) == lemma


class TestTagging:
    def test_homograph_after_noun_stays_noun(self):
        tags = tag(tokenize("A man throws a shot put."))
        assert [p for _, _, p in tags] == [
            "OTHER", "NOUN", "VERB", "OTHER", "NOUN", "NOUN", "OTHER"]

    def test_homograph_after_determiner_stays_noun(self):
        tags = tag(tokenize("The play starts."))
        by_surface = {s: p for s, _, p in tags}
        assert by_surface["play"] == "NOUN"

    def test_bare_verb_without_other_verbs(self):
        tags = tag(tokenize("Men cut vegetables."))
        by_surface = {s: p for s, _, p in tags}
        assert by_surface["cut"] == "VERB"
        assert by_surface["men"] == "NOUN"

    def test_auxiliary_is_verb_with_be_lemma(self):
        tags = tag(tokenize("A man is cutting."))
        assert tags[2] == ("is", "be", "VERB")


class TestFrames:
    def test_instrument_walkthrough(self):
        tags = tag(tokenize("A person is cutting a vegetable with a knife."))
        (frame,) = extract_frames(tags)
        assert frame["verb_index"] == 3
        roles = {r["role"]: (r["start"], r["end"]) for r in frame["roles"]}
        assert roles == {"ARG0": (0, 2), "V": (3, 4), "ARG1": (4, 6), "ARG2": (6, 9)}

    def test_location_phrase(self):
        tags = tag(tokenize("A person is cutting a vegetable on a plate."))
        (frame,) = extract_frames(tags)
        roles = {r["role"]: (r["start"], r["end"]) for r in frame["roles"]}
        assert roles["ARGM-LOC"] == (6, 9)

    def test_conjoined_verbs_share_subject(self):
        tags = tag(tokenize("A man picks up the bag and carries it to the table."))
        frames = extract_frames(tags)
        assert len(frames) == 2
        for frame in frames:
            roles = {r["role"]: (r["start"], r["end"]) for r in frame["roles"]}
            assert roles["ARG0"] == (0, 2)
        second = {r["role"]: (r["start"], r["end"]) for r in frames[1]["roles"]}
        assert second["ARG2"] == (9, 12)

    def test_spans_disjoint_and_sorted(self):
        for text in ("A woman lifts a box onto the shelf in the garage.",
                     "Two girls are dancing on the stage.",
                     "He opens the bottle with a knife."):
            for frame in extract_frames(tag(tokenize(text))):
                spans = [(r["start"], r["end"]) for r in frame["roles"]]
                assert spans == sorted(spans)
                for (s1, e1), (s2, e2) in zip(spans, spans[1:]):
                    assert e1 <= s2


class TestClusters:
    def test_cross_segment_person_pronoun(self):
        caps = [Caption("v0", "s0", "A man walks into the kitchen."),
                Caption("v0", "s1", "He picks up the bag.")]
        _, clusters = annotate(caps)
        (cluster,) = [c for c in clusters
                      if {"segment_id": "s1", "start": 0, "end": 1} in c["mentions"]]
        assert cluster["mentions"][cluster["representative"]] == {
            "segment_id": "s0", "start": 0, "end": 2}

    def test_it_prefers_non_person(self):
        caps = [Caption("v0", "s0", "A man holds a bottle."),
                Caption("v0", "s1", "He drops it.")]
        _, clusters = annotate(caps)
        targets = {}
        for c in clusters:
            rep = c["mentions"][c["representative"]]
            for m in c["mentions"][1:]:
                targets[(m["segment_id"], m["start"])] = (rep["start"], rep["end"])
        assert targets[("s1", 0)] == (0, 2)   # he -> a man
        assert targets[("s1", 2)] == (3, 5)   # it -> a bottle

    def test_unresolvable_pronoun_makes_no_cluster(self):
        caps = [Caption("v0", "s0", "It is raining.")]
        _, clusters = annotate(caps)
        assert clusters == []

    def test_clusters_only_within_video(self):
        caps = [Caption("v0", "s0", "A man walks in."),
                Caption("v1", "s1", "He sits down.")]
        _, clusters = annotate(caps)
        assert clusters == []


class TestAnnotate:
    def test_empty_captions(self):
        descs, clusters = annotate([])
        assert descs == [] and clusters == []

    def test_duplicate_segment_rejected(self):
        caps = [Caption("v0", "s0", "A man."), Caption("v1", "s0", "A woman.")]
        with pytest.raises(AdapterError):
            annotate(caps)

    def test_load_captions_validates(self):
        with pytest.raises(AdapterError):
            load_captions(['{"video_id": "v0"}'])
        assert load_captions([]) == []

    def test_deterministic_output(self):
        caps = [Caption("v0", "s0", "A man walks into the kitchen."),
                Caption("v0", "s1", "He picks up the bag."),
                Caption("v1", "s2", "A woman is cutting a vegetable with a knife.")]
        first = annotate(caps)
        second = annotate(caps)
        assert canonical_json(first[0]) == canonical_json(second[0])
        assert canonical_json(first[1]) == canonical_json(second[1])
