import json
import random

import pytest

from parlalign.aligner import (
    AlignParams,
    Anchor,
    TimedWord,
    align,
    anchors_from_json,
    anchors_to_json,
    candidate_matches,
    context_score,
    gt_words_from_text,
    load_reference_words,
)
from parlalign.errors import ValidationError
from parlalign.text_metrics import levenshtein

from oracles import align_oracle, levenshtein_ref


def make_ref(tokens, step=0.5, length=0.4):
    return [TimedWord(t, i * step, i * step + length) for i, t in enumerate(tokens)]


def gt_of(tokens):
    return gt_words_from_text(" ".join(tokens))


PARAMS = AlignParams()


class TestCandidateMatches:
    def test_exact_match_in_window(self):
        tokens = ["xxx"] * 10
        tokens[6] = "rokovanie"
        gt = gt_of(tokens)
        cands = candidate_matches(TimedWord("rokovanie", 0, 0), gt, cursor=2, params=PARAMS)
        assert cands == [6]

    def test_backward_jump_forbidden(self):
        tokens = ["pán" if i == 3 else f"iné{i}" for i in range(10)]
        gt = gt_of(tokens)
        assert candidate_matches(TimedWord("pán", 0, 0), gt, cursor=5, params=PARAMS) == []

    def test_distance_one_both_in_window(self):
        tokens = [f"w{i:04d}x" for i in range(60)]
        tokens[3] = "vlády"
        tokens[40] = "vlade"
        gt = gt_of(tokens)
        assert levenshtein("vlady", "vlády") == 1 and levenshtein("vlady", "vlade") == 1
        cands = candidate_matches(TimedWord("vlady", 0, 0), gt, cursor=0, params=PARAMS)
        assert cands == [3, 40]

    def test_window_upper_bound(self):
        tokens = ["yyy"] * 60
        tokens[55] = "slovo"
        gt = gt_of(tokens)
        assert candidate_matches(TimedWord("slovo", 0, 0), gt, cursor=4, params=PARAMS) == []
        assert candidate_matches(TimedWord("slovo", 0, 0), gt, cursor=5, params=PARAMS) == [55]

    def test_matches_naive_scan(self):
        rng = random.Random(13)
        vocab = ["abc", "abd", "acd", "xyz", "xy", "wxyz", "slovo", "slová"]
        for _ in range(200):
            tokens = [rng.choice(vocab) for _ in range(rng.randint(1, 80))]
            gt = gt_of(tokens)
            cursor = rng.randint(-1, len(tokens) - 1)
            for dist in (0, 1, 2):
                params = AlignParams(max_word_dist=dist, window=rng.randint(1, 60))
                word = TimedWord(rng.choice(vocab), 0, 0)
                expected = [
                    i
                    for i in range(len(tokens))
                    if cursor < i <= cursor + params.window
                    and levenshtein_ref(word.text, tokens[i]) <= dist
                ]
                assert candidate_matches(word, gt, cursor, params) == expected


class TestContextScore:
    def test_all_eight_neighbors(self):
        tokens = [f"t{i}okn" for i in range(9)]
        gt = gt_of(tokens)
        ref = make_ref(tokens)
        assert context_score(4, 4, gt, ref, 4) == 8

    def test_boundary_truncation(self):
        tokens = [f"t{i}okn" for i in range(5)]
        gt = gt_of(tokens)
        ref = make_ref(tokens)
        assert context_score(0, 0, gt, ref, 4) == 4

    def test_hand_counted_fixture(self):
        # one mismatch on the left at offset -1, left edge truncates offset -4
        gt = gt_of(["alfa", "beta", "céčko", "stred", "delta", "epsil", "fíčko"])
        ref = make_ref(["alfa", "beta", "zmena", "stred", "delta", "epsil", "fíčko"])
        assert context_score(3, 3, gt, ref, 4) == 5

    def test_center_word_not_counted(self):
        gt = gt_of(["a1a", "b2b", "c3c"])
        ref = make_ref(["zzz", "b2b", "zzz"])
        assert context_score(1, 1, gt, ref, 4) == 0


class TestAlign:
    def test_identical_hundred_words_all_anchor(self):
        tokens = [f"word{i:03d}" for i in range(100)]
        gt = gt_of(tokens)
        ref = make_ref(tokens)
        anchors = align(gt, ref)
        assert len(anchors) == 100
        for i, a in enumerate(anchors):
            assert a.gt_index == a.ref_index == i
            assert a.time_s == ref[i].start_s
        assert all(a.score == 8 for a in anchors[4:-4])
        assert [a.score for a in anchors[:4]] == [4, 5, 6, 7]

    def test_short_words_skipped(self):
        gt = gt_of(["ab"] * 10)
        ref = make_ref(["ab"] * 10)
        assert align(gt, ref) == []

    def test_long_gt_insertion_stalls_alignment(self):
        head = [f"zaciatok{i:02d}" for i in range(20)]
        junk = [f"vlozka{i:03d}xx" for i in range(60)]
        tail = [f"koniec{i:02d}" for i in range(20)]
        gt = gt_of(head + junk + tail)
        ref = make_ref(head + tail)
        anchors = align(gt, ref)
        assert anchors, "head must anchor"
        assert max(a.gt_index for a in anchors) <= 19
        assert len(anchors) == 20

    def test_triple_monotonicity_and_rule_compliance(self):
        rng = random.Random(7)
        vocab = [f"slovo{i:02d}" for i in range(40)] + ["pán", "a", "[x]"]
        for _ in range(50):
            gt_tokens = [rng.choice(vocab) for _ in range(rng.randint(0, 120))]
            ref_tokens = [rng.choice(vocab) for _ in range(rng.randint(0, 120))]
            gt = gt_of(gt_tokens)
            ref = make_ref(ref_tokens, step=0.3)
            anchors = align(gt, ref)
            prev = None
            for a in anchors:
                assert levenshtein(ref[a.ref_index].text, gt[a.gt_index].norm) <= 1
                assert len(ref[a.ref_index].text) >= PARAMS.min_word_len
                assert a.score >= PARAMS.min_score
                assert a.score == context_score(a.gt_index, a.ref_index, gt, ref, 4)
                if prev is not None:
                    assert a.gt_index > prev.gt_index
                    assert a.ref_index > prev.ref_index
                    assert a.time_s > prev.time_s
                    assert a.gt_index - prev.gt_index <= PARAMS.window
                else:
                    assert a.gt_index <= PARAMS.window - 1
                prev = a

    def test_reversed_ref_still_monotone(self):
        tokens = [f"word{i:03d}" for i in range(100)]
        gt = gt_of(tokens)
        ref = make_ref(list(reversed(tokens)))
        anchors = align(gt, ref)
        for prev, cur in zip(anchors, anchors[1:]):
            assert cur.gt_index > prev.gt_index
            assert cur.ref_index > prev.ref_index
            assert cur.time_s > prev.time_s

    def test_non_increasing_time_anchor_dropped_without_cursor_move(self):
        tokens = [f"word{i:03d}" for i in range(20)]
        gt = gt_of(tokens)
        # duplicate timestamp on ref word 5: its anchor must be dropped
        ref = []
        for i, t in enumerate(tokens):
            start = i * 0.5 if i != 5 else 4 * 0.5
            ref.append(TimedWord(t, start, start + 0.1))
        anchors = align(gt, ref)
        assert [a.ref_index for a in anchors] == [i for i in range(20) if i != 5]
        for prev, cur in zip(anchors, anchors[1:]):
            assert cur.time_s > prev.time_s

    def test_tie_breaks_to_smallest_gt_index(self):
        # two identical zero-context candidates inside the window
        gt = gt_of(["slovo", "slovo", "xxx1", "xxx2"])
        ref = make_ref(["slovo"])
        anchors = align(gt, ref, AlignParams(min_score=1))
        assert anchors == []  # score 0 < min_score
        gt2 = gt_of(["ctx1", "slovo", "ctx2", "slovo", "ctx2"])
        ref2 = make_ref(["ctx1", "slovo", "ctx2"])
        got = align(gt2, ref2, AlignParams(min_score=1))
        # ref word 0 scores 2 at both gt 0 and gt 2; the tie picks gt 0
        assert got[0].gt_index == 0
        assert got[1].gt_index == 1

    def test_determinism(self):
        rng = random.Random(3)
        vocab = [f"w{i:03d}" for i in range(30)]
        gt = gt_of([rng.choice(vocab) for _ in range(200)])
        ref = make_ref([rng.choice(vocab) for _ in range(200)])
        assert align(gt, ref) == align(gt, ref)

    def test_matches_bruteforce_oracle_on_corrupted_instances(self):
        rng = random.Random(1234)
        for _ in range(30):
            n = rng.randint(10, 120)
            vocab = [f"slovnik{i:02d}" for i in range(25)]
            gt_tokens = [rng.choice(vocab) for _ in range(n)]
            ref_tokens = []
            for tok in gt_tokens:
                r = rng.random()
                if r < 0.75:
                    ref_tokens.append(tok)
                elif r < 0.85:
                    ref_tokens.append(rng.choice(vocab))
                elif r < 0.95:
                    ref_tokens.append(tok[:-1] + "x")
            ref = make_ref(ref_tokens, step=0.4)
            gt = gt_of(gt_tokens)
            got = align(gt, ref)
            expected = align_oracle(
                [w.norm for w in gt], [w.text for w in ref], [w.start_s for w in ref]
            )
            assert [(a.gt_index, a.ref_index, a.time_s, a.score) for a in got] == expected


class TestParamsAndIo:
    def test_invalid_params_rejected(self):
        with pytest.raises(ValidationError):
            AlignParams(window=0)
        with pytest.raises(ValidationError):
            AlignParams(max_word_dist=-1)

    def test_gt_words_norms(self):
        words = gt_words_from_text("Pán — poslanec.")
        assert [(w.index, w.raw, w.norm) for w in words] == [
            (0, "Pán", "pán"),
            (1, "—", ""),
            (2, "poslanec.", "poslanec"),
        ]

    def test_anchor_json_round_trip(self):
        anchors = [Anchor(0, 1, 0.123, 5), Anchor(4, 7, 3.5, 8)]
        assert anchors_from_json(anchors_to_json(anchors)) == anchors

    def test_anchor_json_rejects_non_monotone(self):
        text = json.dumps([
            {"gt_index": 3, "ref_index": 1, "time": 1.0, "score": 4},
            {"gt_index": 2, "ref_index": 2, "time": 2.0, "score": 4},
        ])
        with pytest.raises(ValidationError):
            anchors_from_json(text)

    def test_reference_loader_validates(self, tmp_path):
        good = tmp_path / "ref.json"
        good.write_text('[{"word": "Pán!", "start": 0.5, "end": 0.9}]', encoding="utf-8")
        words = load_reference_words(good)
        assert words == [TimedWord("pán", 0.5, 0.9)]

        bad_order = tmp_path / "bad.json"
        bad_order.write_text(
            '[{"word": "a", "start": 2.0, "end": 2.5}, {"word": "b", "start": 1.0, "end": 1.5}]',
            encoding="utf-8",
        )
        with pytest.raises(ValidationError):
            load_reference_words(bad_order)

        bad_span = tmp_path / "bad2.json"
        bad_span.write_text('[{"word": "a", "start": 2.0, "end": 1.0}]', encoding="utf-8")
        with pytest.raises(ValidationError):
            load_reference_words(bad_span)
