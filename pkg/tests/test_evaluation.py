"""Metrics against hand enumerations and a brute-force reimplementation."""

import random

import pytest

from doclink.decoding import Candidate
from doclink.documents import DocumentRecord, MentionRecord
from doclink.evaluation import (
    EvalConfig,
    SubsetLabeler,
    UndefinedCIError,
    bootstrap_ci,
    cwme,
    delta_cwme,
    occurrence_indices,
    recall_at_k,
    subset_breakdown,
)
from doclink.predictions import PredictionRecord

from conftest import make_kb


def doc_with_golds(doc_id, gold_ids, group="G"):
    text = " ".join(f"m{i}" for i in range(len(gold_ids)))
    mentions = []
    pos = 0
    for i, gid in enumerate(gold_ids):
        surface = f"m{i}"
        mentions.append(
            MentionRecord(pos, pos + len(surface), surface, group, gold_id=gid)
        )
        pos += len(surface) + 1
    return DocumentRecord(doc_id=doc_id, text=text, mentions=mentions)


def preds_for(doc, predicted_ids, ranks_of_gold=None):
    """Build rank-1 prediction records; optionally bury gold at a given rank."""
    index = {}
    for t, pid in enumerate(predicted_ids):
        if pid is None:
            continue
        candidates = [Candidate(pid, f"t-{pid}", -0.1)]
        index[(doc.doc_id, t)] = PredictionRecord(
            doc_id=doc.doc_id, mention_index=t, variant="v", candidates=candidates
        )
    return index


# --- recall_at_k ------------------------------------------------------------

def test_recall_all_rank_one_correct():
    doc = doc_with_golds("d", ["A", "B"])
    index = preds_for(doc, ["A", "B"])
    assert recall_at_k(index, [doc], 1) == 1.0


def test_recall_gold_at_rank_three():
    doc = doc_with_golds("d", ["A", "A"])
    index = {}
    for t in range(2):
        candidates = [
            Candidate("X", "tx", -0.1),
            Candidate("Y", "ty", -0.2),
            Candidate("A", "ta", -0.3),
        ]
        index[("d", t)] = PredictionRecord("d", t, "v", candidates)
    assert recall_at_k(index, [doc], 1) == 0.0
    assert recall_at_k(index, [doc], 5) == 1.0


def test_recall_three_of_four():
    doc = doc_with_golds("d", ["A", "B", "C", "D"])
    index = preds_for(doc, ["A", "B", "C", "X"])
    assert recall_at_k(index, [doc], 1) == 0.75


def test_recall_missing_prediction_is_a_miss():
    doc = doc_with_golds("d", ["A", "B"])
    index = preds_for(doc, ["A", None])
    assert recall_at_k(index, [doc], 1) == 0.5


def test_recall_unannotated_mentions_excluded_from_denominator():
    doc = doc_with_golds("d", ["A"])
    doc.mentions.append(MentionRecord(0, 2, "m0", "G"))  # no gold id
    index = preds_for(doc, ["A"])
    assert recall_at_k(index, [doc], 1) == 1.0


def test_recall_monotone_in_k():
    rng = random.Random(0)
    docs = [doc_with_golds(f"d{i}", ["A", "B", "C"]) for i in range(5)]
    index = {}
    for doc in docs:
        for t in range(3):
            pool = ["A", "B", "C", "X", "Y"]
            rng.shuffle(pool)
            cands = [Candidate(c, f"t-{c}", -i * 0.1) for i, c in enumerate(pool)]
            index[(doc.doc_id, t)] = PredictionRecord(doc.doc_id, t, "v", cands)
    values = [recall_at_k(index, docs, k) for k in (1, 2, 3, 4, 5)]
    assert values == sorted(values)


# --- bootstrap --------------------------------------------------------------

def test_bootstrap_point_equals_plain_metric():
    docs = [doc_with_golds(f"d{i}", ["A"]) for i in range(6)]
    index = {}
    for i, doc in enumerate(docs):
        index.update(preds_for(doc, ["A" if i % 2 == 0 else "X"]))
    config = EvalConfig(bootstrap_B=200, bootstrap_seed=1)
    point, hw = bootstrap_ci(index, docs, lambda p, d: recall_at_k(p, d, 1), config)
    assert point == recall_at_k(index, docs, 1) == 0.5
    assert hw > 0


def test_bootstrap_constant_metric_zero_half_width():
    docs = [doc_with_golds(f"d{i}", ["A"]) for i in range(5)]
    index = {}
    for doc in docs:
        index.update(preds_for(doc, ["A"]))
    point, hw = bootstrap_ci(
        index, docs, lambda p, d: recall_at_k(p, d, 1), EvalConfig(bootstrap_B=100)
    )
    assert point == 1.0
    assert hw == 0.0


def test_bootstrap_deterministic_per_seed():
    docs = [doc_with_golds(f"d{i}", ["A"]) for i in range(8)]
    index = {}
    for i, doc in enumerate(docs):
        index.update(preds_for(doc, ["A" if i % 3 else "X"]))
    metric = lambda p, d: recall_at_k(p, d, 1)
    a = bootstrap_ci(index, docs, metric, EvalConfig(bootstrap_B=300, bootstrap_seed=7))
    b = bootstrap_ci(index, docs, metric, EvalConfig(bootstrap_B=300, bootstrap_seed=7))
    c = bootstrap_ci(index, docs, metric, EvalConfig(bootstrap_B=300, bootstrap_seed=8))
    assert a == b
    assert a != c


def test_bootstrap_single_document_rejected():
    docs = [doc_with_golds("d", ["A"])]
    index = preds_for(docs[0], ["A"])
    with pytest.raises(UndefinedCIError):
        bootstrap_ci(index, docs, lambda p, d: recall_at_k(p, d, 1))


def test_bootstrap_half_width_shrinks_like_inverse_sqrt_n():
    rng = random.Random(123)

    def bernoulli_corpus(n):
        docs, index = [], {}
        for i in range(n):
            doc = doc_with_golds(f"d{i:03d}", ["A"])
            docs.append(doc)
            correct = rng.random() < 0.7
            index.update(preds_for(doc, ["A" if correct else "X"]))
        return docs, index

    metric = lambda p, d: recall_at_k(p, d, 1)
    config = EvalConfig(bootstrap_B=1000, bootstrap_seed=5)
    docs50, idx50 = bernoulli_corpus(50)
    docs200, idx200 = bernoulli_corpus(200)
    _, hw50 = bootstrap_ci(idx50, docs50, metric, config)
    _, hw200 = bootstrap_ci(idx200, docs200, metric, config)
    ratio = hw200 / hw50
    assert 0.5 * 0.7 <= ratio <= 0.5 * 1.3  # 1/sqrt(4) within +-30%


# --- subsets ----------------------------------------------------------------

def test_occurrence_indices_count_per_concept():
    doc = doc_with_golds("d", ["A", "B", "A", "A"])
    occ = occurrence_indices(doc)
    assert occ == {0: 1, 1: 1, 2: 2, 3: 3}


def test_subset_supports_partition():
    doc = doc_with_golds("d", ["A", "B", "A", "A"])
    other = doc_with_golds("e", ["C", "C"])
    docs = [doc, other]
    index = {}
    index.update(preds_for(doc, ["A", "B", "A", "X"]))
    index.update(preds_for(other, ["C", "C"]))
    rows = {
        r.key: r
        for r in subset_breakdown(
            index, docs, SubsetLabeler(), EvalConfig(bootstrap_B=10)
        )
    }
    total = rows["recall@1_overall"].support_n
    assert rows["first"].support_n + rows["recurring"].support_n == total
    assert (
        rows["occ_2nd"].support_n
        + rows["occ_3rd"].support_n
        + rows["occ_4th"].support_n
        + rows["occ_5th_plus"].support_n
        == rows["recurring"].support_n
    )
    assert rows["first"].support_n == 3
    assert rows["recurring"].support_n == 3


def test_identical_match_uses_normalization():
    kb = make_kb([("A", "G", ["Heart Attack"])])
    labeler = SubsetLabeler.from_kb(kb)
    text = "heart attack and other attack"
    doc = DocumentRecord(
        doc_id="d",
        text=text,
        mentions=[
            MentionRecord(0, 12, "heart attack", "G", gold_id="A"),
            MentionRecord(23, 29, "attack", "G", gold_id="A"),
        ],
    )
    index = preds_for(doc, ["A", "A"])
    rows = {
        r.key: r
        for r in subset_breakdown(index, [doc], labeler, EvalConfig(bootstrap_B=5))
    }
    assert rows["identical"].support_n == 1
    assert rows["not_identical"].support_n == 1


def test_composite_flag_routes_to_composite_row():
    text = "m0 m1"
    doc = DocumentRecord(
        doc_id="d",
        text=text,
        mentions=[
            MentionRecord(0, 2, "m0", "G", gold_id="C1+C2", gold_composite=True),
            MentionRecord(3, 5, "m1", "G", gold_id="C1"),
        ],
    )
    index = preds_for(doc, ["X", "C1"])
    rows = {
        r.key: r
        for r in subset_breakdown(
            index, [doc], SubsetLabeler(), EvalConfig(bootstrap_B=5)
        )
    }
    assert rows["composite"].support_n == 1
    assert rows["simple"].support_n == 1
    assert rows["composite"].value == 0.0


def test_seen_unseen_rows_only_with_training_ids():
    doc = doc_with_golds("d", ["A", "B"])
    index = preds_for(doc, ["A", "B"])
    keys_without = {
        r.key
        for r in subset_breakdown(index, [doc], SubsetLabeler(), EvalConfig(bootstrap_B=5))
    }
    assert "seen" not in keys_without
    labeler = SubsetLabeler(training_concept_ids={"A"})
    rows = {
        r.key: r
        for r in subset_breakdown(index, [doc], labeler, EvalConfig(bootstrap_B=5))
    }
    assert rows["seen"].support_n == 1
    assert rows["unseen"].support_n == 1


# --- CWME -------------------------------------------------------------------

def test_cwme_hand_case_echo_half():
    doc = doc_with_golds("d", ["e", "e", "e"])
    index = preds_for(doc, ["e1", "e1", "e"])
    result = cwme(index, [doc])
    assert result.exposed == 2
    assert result.echoed == 1
    assert result.value == 50.0


def test_cwme_fully_correct_concept_excluded():
    doc = doc_with_golds("d", ["e", "e"])
    index = preds_for(doc, ["e", "e"])
    result = cwme(index, [doc])
    assert result.exposed == 0
    assert result.value is None  # undefined, not 0


def test_cwme_only_first_wrong_prediction_counts_as_echo():
    doc = doc_with_golds("d", ["e", "e", "e"])
    index = preds_for(doc, ["e", "e1", "e2"])
    result = cwme(index, [doc])
    assert result.exposed == 1  # only the mention after the first error
    assert result.echoed == 0  # e2 != e1
    assert result.value == 0.0


def test_cwme_missing_predictions_never_echo():
    doc = doc_with_golds("d", ["e", "e", "e"])
    index = preds_for(doc, [None, None, None])
    result = cwme(index, [doc])
    assert result.exposed == 2
    assert result.echoed == 0


def test_delta_cwme_identity_zero():
    doc = doc_with_golds("d", ["e", "e", "e"])
    index = preds_for(doc, ["x", "x", "e"])
    rows = delta_cwme(index, index, [doc])
    overall = rows[0]
    assert overall.group == "overall"
    assert overall.delta == 0.0


def test_delta_cwme_robust_fixes_one_of_two():
    doc = doc_with_golds("d", ["e", "e", "e"])
    baseline = preds_for(doc, ["x", "x", "x"])  # echoes both exposed mentions
    robust = preds_for(doc, ["x", "x", "e"])  # fixes one of two
    rows = delta_cwme(robust, baseline, [doc])
    overall = rows[0]
    assert overall.baseline.value == 100.0
    assert overall.robust.value == 50.0
    assert overall.delta == -50.0


def test_delta_cwme_overall_is_weighted_combination_of_groups():
    d1 = doc_with_golds("d1", ["e", "e", "e"], group="G1")
    d2 = doc_with_golds("d2", ["f", "f"], group="G2")
    robust = {}
    robust.update(preds_for(d1, ["x", "x", "e"]))
    robust.update(preds_for(d2, ["y", "y"]))
    baseline = {}
    baseline.update(preds_for(d1, ["x", "x", "x"]))
    baseline.update(preds_for(d2, ["y", "f"]))
    rows = delta_cwme(robust, baseline, [d1, d2])
    by_group = {r.group: r for r in rows}
    overall = by_group["overall"]
    assert overall.robust.echoed == sum(
        by_group[g].robust.echoed for g in ("G1", "G2")
    )
    assert overall.robust.exposed == sum(
        by_group[g].robust.exposed for g in ("G1", "G2")
    )
    assert overall.baseline.echoed == sum(
        by_group[g].baseline.echoed for g in ("G1", "G2")
    )


def test_delta_cwme_undefined_when_one_side_undefined():
    doc = doc_with_golds("d", ["e", "e"])
    all_right = preds_for(doc, ["e", "e"])  # no exposure: undefined
    some_wrong = preds_for(doc, ["x", "x"])
    rows = delta_cwme(all_right, some_wrong, [doc])
    assert rows[0].delta is None


# --- brute-force oracle equivalence ----------------------------------------

def brute_force_recall(index, docs, k):
    hits, total = 0, 0
    for doc in docs:
        for t, m in enumerate(doc.mentions):
            if m.gold_id is None:
                continue
            total += 1
            rec = index.get((doc.doc_id, t))
            if rec is None:
                continue
            ids = [c.concept_id for c in rec.candidates][:k]
            if m.gold_id in ids:
                hits += 1
    return hits / total if total else None


def brute_force_cwme(index, docs):
    num = den = 0
    for doc in docs:
        concepts = {}
        for t, m in enumerate(doc.mentions):
            if m.gold_id is not None:
                concepts.setdefault(m.gold_id, []).append(t)
        for gold, ts_ in concepts.items():
            preds = []
            for t in ts_:
                rec = index.get((doc.doc_id, t))
                preds.append(
                    rec.candidates[0].concept_id
                    if rec and rec.candidates
                    else f"\x00missing:{doc.doc_id}:{t}"
                )
            f = None
            for i, p in enumerate(preds):
                if p != gold:
                    f = i
                    break
            if f is None or f == len(preds) - 1:
                continue
            exposed = preds[f + 1 :]
            den += len(exposed)
            num += sum(1 for p in exposed if p == preds[f])
    return (num, den)


def brute_force_subset_table(index, docs):
    """Independent subset supports and Recall@1 per subset key."""
    table = {}
    for doc in docs:
        seen_counts = {}
        for t, m in enumerate(doc.mentions):
            if m.gold_id is None:
                continue
            seen_counts[m.gold_id] = seen_counts.get(m.gold_id, 0) + 1
            occ = seen_counts[m.gold_id]
            labels = ["single_word" if len(m.surface.split()) == 1 else "multi_word"]
            labels.append("first" if occ == 1 else "recurring")
            if occ == 2:
                labels.append("occ_2nd")
            elif occ == 3:
                labels.append("occ_3rd")
            elif occ == 4:
                labels.append("occ_4th")
            elif occ >= 5:
                labels.append("occ_5th_plus")
            rec = index.get((doc.doc_id, t))
            hit = bool(rec) and bool(rec.candidates) and rec.candidates[0].concept_id == m.gold_id
            for label in labels:
                n, h = table.get(label, (0, 0))
                table[label] = (n + 1, h + hit)
    return table


def test_metrics_match_brute_force_on_random_small_corpora():
    rng = random.Random(77)
    ids = ["A", "B", "C", "D"]
    for trial in range(40):
        docs = []
        index = {}
        for d in range(rng.randint(2, 5)):
            golds = [rng.choice(ids) for _ in range(rng.randint(1, 6))]
            doc = doc_with_golds(f"d{trial}-{d}", golds)
            docs.append(doc)
            for t in range(len(golds)):
                if rng.random() < 0.1:
                    continue  # missing prediction
                pool = ids[:]
                rng.shuffle(pool)
                cands = [
                    Candidate(c, f"t-{c}", -i * 0.5) for i, c in enumerate(pool[:3])
                ]
                index[(doc.doc_id, t)] = PredictionRecord(
                    doc.doc_id, t, "v", cands
                )
        for k in (1, 2, 5):
            assert recall_at_k(index, docs, k) == brute_force_recall(index, docs, k)
        got = cwme(index, docs)
        num, den = brute_force_cwme(index, docs)
        assert (got.echoed, got.exposed) == (num, den)

        rows = {
            r.key: r
            for r in subset_breakdown(
                index, docs, SubsetLabeler(), EvalConfig(bootstrap_B=1)
            )
        }
        want = brute_force_subset_table(index, docs)
        for key in (
            "single_word", "multi_word", "first", "recurring",
            "occ_2nd", "occ_3rd", "occ_4th", "occ_5th_plus",
        ):
            n, hits = want.get(key, (0, 0))
            assert rows[key].support_n == n
            if n == 0:
                assert rows[key].value is None
            else:
                assert rows[key].value == hits / n
