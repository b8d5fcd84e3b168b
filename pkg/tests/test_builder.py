import json

import pytest

from conftest import make_desc, svo_desc, toks
from srlqa.builder import (
    BuildError,
    CorefCluster,
    Mention,
    SplitManifest,
    apply_coref,
    build_dataset,
    halve_video_ids,
    parse_manifest,
    select_descriptions,
)
from srlqa.corpus import surfaces
from srlqa.querygen import QueryGenConfig

CFG = QueryGenConfig()


def manifest(train=(), val=(), test=()):
    return SplitManifest(splits={
        "train": frozenset(train), "val": frozenset(val), "test": frozenset(test)})


class TestApplyCoref:
    def test_pronoun_replaced_by_representative(self):
        intro = make_desc("v0", "s0", "a man walks in", [])
        target = make_desc("v0", "s1", "he picks up the bag", [
            (1, [("ARG0", 0, 1), ("ARG1", 3, 5)]),
        ])
        cluster = CorefCluster("c0", (Mention("s0", 0, 2), Mention("s1", 0, 1)), 0)
        resolved = apply_coref([intro, target], [cluster])
        out = resolved[1]
        assert surfaces(out.tokens) == ("a", "man", "picks", "up", "the", "bag")
        assert out.coref_applied
        frame = out.frames[0]
        assert frame.verb_index == 2
        spans = {s.role.label: (s.start, s.end) for s in frame.roles}
        assert spans["ARG0"] == (0, 2)
        assert spans["V"] == (2, 3)
        assert spans["ARG1"] == (4, 6)

    def test_no_pronouns_untouched(self):
        desc = svo_desc("v0", "s0", "man", "lift", "box", "rope")
        (out,) = apply_coref([desc], [])
        assert out.tokens == desc.tokens
        assert out.frames == desc.frames
        assert out.coref_applied

    def test_unclustered_pronoun_logged(self):
        desc = make_desc("v0", "s0", "he picks up the bag", [
            (1, [("ARG0", 0, 1), ("ARG1", 3, 5)]),
        ])
        audit = []
        (out,) = apply_coref([desc], [], on_audit=audit.append)
        assert surfaces(out.tokens)[0] == "he"
        assert audit == [{"kind": "pronoun_unresolved", "segment_id": "s0",
                          "token_index": 0, "surface": "he"}]

    def test_possessive_gets_marker_token(self):
        intro = make_desc("v0", "s0", "a woman opens a bag", [])
        target = make_desc("v0", "s1", "her dog chases the ball", [
            (2, [("ARG0", 0, 2), ("ARG1", 3, 5)]),
        ])
        cluster = CorefCluster("c0", (Mention("s0", 0, 2), Mention("s1", 0, 1)), 0)
        resolved = apply_coref([intro, target], [cluster])
        assert surfaces(resolved[1].tokens) == (
            "a", "woman", "'s", "dog", "chases", "the", "ball")
        spans = {s.role.label: (s.start, s.end) for s in resolved[1].frames[0].roles}
        assert spans["ARG0"] == (0, 4)
        assert spans["V"] == (4, 5)

    def test_nested_mentions_outermost_wins(self):
        intro = make_desc("v0", "s0", "a man with a dog walks in", [])
        target = make_desc("v0", "s1", "his dog opens the bag", [
            (2, [("ARG0", 0, 2), ("ARG1", 3, 5)]),
        ])
        # "his" sits inside both the 1-token mention (-> "a man") and the
        # 2-token mention (-> "a man with a dog"); the wider one wins
        inner = CorefCluster("c_inner", (Mention("s0", 0, 2), Mention("s1", 0, 1)), 0)
        outer = CorefCluster("c_outer", (Mention("s0", 0, 5), Mention("s1", 0, 2)), 0)
        resolved = apply_coref([intro, target], [inner, outer])
        assert surfaces(resolved[1].tokens) == (
            "a", "man", "with", "a", "dog", "'s", "dog", "opens", "the", "bag")

    def test_pronominal_representative_falls_back(self):
        intro = make_desc("v0", "s0", "she opens a bag", [])
        later = make_desc("v0", "s1", "a woman sits", [])
        target = make_desc("v0", "s2", "she holds the bottle", [
            (1, [("ARG0", 0, 1), ("ARG1", 2, 4)]),
        ])
        cluster = CorefCluster(
            "c0", (Mention("s0", 0, 1), Mention("s1", 0, 2), Mention("s2", 0, 1)), 0)
        resolved = apply_coref([intro, later, target], [cluster])
        assert surfaces(resolved[2].tokens)[:2] == ("a", "woman")

    def test_bad_mention_span_rejected(self):
        desc = make_desc("v0", "s0", "a man", [])
        cluster = CorefCluster("c0", (Mention("s0", 0, 9),), 0)
        with pytest.raises(BuildError):
            apply_coref([desc], [cluster])

    def test_replacement_feeds_querygen_tokens(self):
        intro = make_desc("v0", "s0", "a man walks in", [])
        target = make_desc("v0", "s1", "he lifts the box with the rope", [
            (1, [("ARG0", 0, 1), ("ARG1", 2, 4), ("ARG2", 4, 7)]),
        ])
        cluster = CorefCluster("c0", (Mention("s0", 0, 2), Mention("s1", 0, 1)), 0)
        resolved = apply_coref([intro, target], [cluster])
        arg0_span = next(
            s for s in resolved[1].frames[0].roles if s.role.label == "ARG0")
        replaced = resolved[1].tokens[arg0_span.start:arg0_span.end]
        assert surfaces(replaced) == ("a", "man")
        assert all(t.coarse_pos == tok.coarse_pos for t, tok in zip(replaced, toks("a man")))


class TestSelect:
    def test_smallest_segment_kept(self):
        descs = [make_desc("v0", "s2", "a man sits", []),
                 make_desc("v0", "s1", "a man stands", []),
                 make_desc("v1", "s3", "a dog barks", [])]
        kept = select_descriptions(descs)
        assert [(d.video_id, d.segment_id) for d in kept] == [("v0", "s1"), ("v1", "s3")]

    def test_unique_videos_unchanged(self):
        descs = [svo_desc("v0", "s0", "man", "lift", "box", "rope"),
                 svo_desc("v1", "s1", "woman", "carry", "bag", "strap")]
        assert select_descriptions(descs) == sorted(
            descs, key=lambda d: (d.video_id, d.segment_id))


class TestManifest:
    def test_parse_and_split_of(self):
        lines = [json.dumps({"split": "train", "video_ids": ["v0"]}),
                 json.dumps({"split": "val", "video_ids": ["v1"]}),
                 json.dumps({"split": "test", "video_ids": ["v2"]})]
        m = parse_manifest(lines)
        assert m.split_of("v1") == "val"
        assert m.split_of("vX") is None

    def test_overlap_rejected(self):
        lines = [json.dumps({"split": "train", "video_ids": ["v0"]}),
                 json.dumps({"split": "val", "video_ids": ["v0"]})]
        with pytest.raises(BuildError):
            parse_manifest(lines)

    def test_halving_is_deterministic_and_balanced(self):
        ids = [f"v{k}" for k in range(11)]
        first, second = halve_video_ids(ids)
        assert len(first) == 6 and len(second) == 5
        assert not set(first) & set(second)
        assert halve_video_ids(reversed(ids)) == (first, second)


class TestBuildDataset:
    def corpus(self):
        # v0/v1 pair with each other on ARG0 (same verb/object/instrument);
        # v2's queries have no partner anywhere; v3 is train-only
        descs = [
            svo_desc("v0", "s0", "man", "lift", "box", "rope"),
            svo_desc("v1", "s1", "woman", "lift", "box", "rope"),
            svo_desc("v2", "s2", "dog", "chase", "ball", "hat"),
            svo_desc("v3", "s3", "boy", "kick", "ball", "strap"),
        ]
        clusters = []
        m = manifest(train=["v3"], val=["v0", "v2"], test=["v1"])
        return descs, clusters, m

    def test_expected_pairs_and_drops(self):
        descs, clusters, m = self.corpus()
        result = build_dataset(descs, clusters, CFG, m)
        assert {q.query_id for q in result.val} == {"s0:0:ARG0"}
        assert {q.query_id for q in result.test} == {"s1:0:ARG0"}
        assert {(p.query_id_i, p.query_id_j) for p in result.pairs} == {
            ("s0:0:ARG0", "s1:0:ARG0"), ("s1:0:ARG0", "s0:0:ARG0")}
        assert len(result.train) == 4
        dropped = [rec for rec in result.audit if rec["kind"] == "query_dropped"]
        assert {d["query_id"] for d in dropped} == {
            "s0:0:V", "s0:0:ARG1", "s0:0:ARG2",
            "s1:0:V", "s1:0:ARG1", "s1:0:ARG2",
            "s2:0:ARG0", "s2:0:V", "s2:0:ARG1", "s2:0:ARG2"}

    def test_every_kept_eval_query_is_paired(self):
        descs, clusters, m = self.corpus()
        result = build_dataset(descs, clusters, CFG, m)
        paired = {p.query_id_i for p in result.pairs}
        for q in result.val + result.test:
            assert q.query_id in paired
        ids = {q.query_id for q in result.val + result.test}
        for p in result.pairs:
            assert p.query_id_i in ids and p.query_id_j in ids

    def test_empty_val_test(self):
        descs = [svo_desc("v3", "s3", "boy", "kick", "ball", "strap")]
        result = build_dataset(descs, [], CFG, manifest(train=["v3"]))
        assert result.val == [] and result.test == [] and result.pairs == []
        assert len(result.train) == 4

    def test_train_count_invariant_to_pairing(self):
        descs, clusters, m = self.corpus()
        plain = build_dataset(descs, clusters, CFG, m, pair_train=False)
        paired = build_dataset(descs, clusters, CFG, m, pair_train=True)
        assert len(plain.train) == len(paired.train)
        assert plain.train_pairs == []

    def test_video_missing_from_manifest(self):
        descs, clusters, _ = self.corpus()
        with pytest.raises(BuildError):
            build_dataset(descs, clusters, CFG, manifest(train=["v3"]))

    def test_multi_segment_video_uses_coref_then_selection(self):
        intro = make_desc("v0", "s0", "a man walks in", [])
        second = make_desc("v0", "s1", "he lifts the box with the rope", [
            (1, [("ARG0", 0, 1), ("ARG1", 2, 4), ("ARG2", 4, 7)]),
        ])
        partner = svo_desc("v1", "s2", "woman", "lift", "box", "rope")
        cluster = CorefCluster("c0", (Mention("s0", 0, 2), Mention("s1", 0, 1)), 0)
        m = manifest(val=["v0"], test=["v1"])
        result = build_dataset([intro, second, partner], [cluster], CFG, m)
        # smallest segment of v0 is the frameless intro, so v0 has no queries
        assert result.val == []
        assert result.test == []

    def test_determinism(self):
        descs, clusters, m = self.corpus()
        a = build_dataset(descs, clusters, CFG, m)
        b = build_dataset(descs, clusters, CFG, m)
        assert [q.query_id for q in a.train] == [q.query_id for q in b.train]
        assert a.pairs == b.pairs
        assert a.audit == b.audit
