import numpy as np
import pytest

from summarank.candidates import Candidate, CandidateSet, attach_rouge
from summarank.evaluation import (
    SelectionRecord,
    bin_analysis,
    corpus_report,
    exact_significance,
    max_oracle_selector,
    oracle_select,
    score_table_selector,
    selection_accuracy,
    significance,
)
from summarank.rouge import RougeScore, RougeTriple


def fake_triple(v):
    s = RougeScore(precision=v, recall=v, f1=v)
    return RougeTriple(r1=s, r2=s, rl=s, mean_f=v)


def scored_set(values, doc_id="d"):
    cands = tuple(
        Candidate(text_tokens=(f"t{i}",), system_tag=f"c{i}", rouge_vs_ref=fake_triple(v))
        for i, v in enumerate(values)
    )
    return CandidateSet(doc_id=doc_id, candidates=cands, origin="external")


def record_for(doc_id, method, values, chosen, scores=None, tags=None):
    triples = tuple(fake_triple(v) for v in values)
    return SelectionRecord(
        doc_id=doc_id,
        method_tag=method,
        chosen_index=chosen,
        chosen=triples[chosen],
        per_candidate=triples,
        candidate_tags=tags,
        scores=scores,
    )


class TestOracles:
    def test_max_and_min(self):
        cand_set = scored_set([0.3, 0.5, 0.4])
        assert oracle_select(cand_set, "max").chosen_index == 1
        assert oracle_select(cand_set, "min").chosen_index == 0

    def test_ties_lowest_index(self):
        cand_set = scored_set([0.5, 0.5, 0.1])
        assert oracle_select(cand_set, "max").chosen_index == 0

    def test_singleton_identical_records(self):
        cand_set = scored_set([0.4])
        records = [oracle_select(cand_set, w, seed=3).chosen_index for w in ("min", "max", "random")]
        assert records == [0, 0, 0]

    def test_random_deterministic(self):
        cand_set = scored_set([0.1, 0.2, 0.3, 0.4])
        a = oracle_select(cand_set, "random", seed=11)
        b = oracle_select(cand_set, "random", seed=11)
        assert a.chosen_index == b.chosen_index and a.scores == b.scores

    def test_scores_reproduce_choice(self):
        cand_set = scored_set([0.1, 0.9, 0.5])
        for which in ("min", "max", "random"):
            record = oracle_select(cand_set, which, seed=5)
            assert int(np.argmax(record.scores)) == record.chosen_index

    def test_missing_rouge_errors(self):
        cands = (Candidate(text_tokens=("x",), system_tag="c"),)
        cand_set = CandidateSet(doc_id="d", candidates=cands, origin="external")
        with pytest.raises(ValueError, match="attach_rouge"):
            oracle_select(cand_set, "max")

    def test_unknown_oracle(self):
        with pytest.raises(ValueError, match="unknown oracle"):
            oracle_select(scored_set([0.1]), "median")


class TestSelectionRecord:
    def test_chosen_must_match_list(self):
        triples = (fake_triple(0.1), fake_triple(0.2))
        with pytest.raises(ValueError, match="does not match"):
            SelectionRecord(
                doc_id="d",
                method_tag="m",
                chosen_index=0,
                chosen=triples[1],
                per_candidate=triples,
            )

    def test_index_in_range(self):
        triples = (fake_triple(0.1),)
        with pytest.raises(ValueError, match="out of range"):
            SelectionRecord(
                doc_id="d", method_tag="m", chosen_index=3, chosen=triples[0], per_candidate=triples
            )


class TestCorpusReport:
    def test_single_doc_means(self):
        records = {"m": [record_for("d1", "m", [0.25, 0.5], 1)]}
        report = corpus_report(records)
        assert report.rows[0] == ("m", 50.0, 50.0, 50.0)

    def test_identical_methods_identical_rows(self):
        a = [record_for("d1", "a", [0.4], 0), record_for("d2", "a", [0.8], 0)]
        b = [record_for("d1", "b", [0.4], 0), record_for("d2", "b", [0.8], 0)]
        report = corpus_report({"a": a, "b": b})
        assert report.rows[0][1:] == report.rows[1][1:]

    def test_hand_average(self):
        records = {
            "m": [
                record_for("d1", "m", [0.2], 0),
                record_for("d2", "m", [0.4], 0),
                record_for("d3", "m", [0.9], 0),
            ]
        }
        report = corpus_report(records)
        assert report.rows[0][1] == pytest.approx(50.0)

    def test_doc_mismatch_lists_ids(self):
        records = {
            "a": [record_for("d1", "a", [0.1], 0)],
            "b": [record_for("d2", "b", [0.1], 0)],
        }
        with pytest.raises(ValueError) as err:
            corpus_report(records)
        assert "d1" in str(err.value) and "d2" in str(err.value)

    def test_order_invariance(self):
        recs = [record_for(f"d{i}", "m", [0.1 * i + 0.05], 0) for i in range(5)]
        a = corpus_report({"m": recs})
        b = corpus_report({"m": recs[::-1]})
        assert a.rows[0][1:] == pytest.approx(b.rows[0][1:], abs=1e-12)
        assert a.to_text() == b.to_text()

    def test_renders(self):
        report = corpus_report({"m": [record_for("d1", "m", [0.333333], 0)]})
        assert "33.33" in report.to_text()
        assert report.to_csv().splitlines()[0] == "method,r1,r2,rl"


class TestBinAnalysis:
    def test_grouping_by_width(self):
        per_doc = {
            "a": [39.0, 40.0],
            "b": [40.0, 39.6],
            "c": [41.0, 41.4],
        }
        # means: a=39.5, b=39.8, c=41.2 -> bins [39,40) with {a,b}, [41,42) skipped
        reports, rate = bin_analysis(per_doc, 1.0, max_oracle_selector(per_doc))
        assert len(reports) == 1
        assert reports[0].tags == ("a", "b")
        assert reports[0].lower == 39.0 and reports[0].upper == 40.0

    def test_max_oracle_success_rate_one(self):
        rng = np.random.default_rng(0)
        per_doc = {
            "a": list(40 + rng.random(50)),
            "b": list(40 + rng.random(50)),
        }
        reports, rate = bin_analysis(per_doc, 5.0, max_oracle_selector(per_doc))
        assert rate == 1.0
        assert reports[0].mean_method == pytest.approx(reports[0].mean_max)

    def test_split_winners_margin(self):
        # A wins on even docs, B on odd: max-oracle mean exceeds both singles
        a = [1.0 if i % 2 == 0 else 0.0 for i in range(10)]
        b = [0.0 if i % 2 == 0 else 1.0 for i in range(10)]
        per_doc = {"a": a, "b": b}
        reports, rate = bin_analysis(per_doc, 10.0, max_oracle_selector(per_doc))
        assert reports[0].mean_max == pytest.approx(1.0)
        assert reports[0].mean_best_single == pytest.approx(0.5)
        assert rate == 1.0

    def test_oracle_ordering_in_expectation(self):
        rng = np.random.default_rng(1)
        per_doc = {t: list(40 + rng.random(200)) for t in ("a", "b", "c")}
        reports, _ = bin_analysis(per_doc, 5.0, max_oracle_selector(per_doc), seed=7)
        r = reports[0]
        assert r.mean_min <= r.mean_random <= r.mean_max
        assert r.mean_best_single <= r.mean_max

    def test_no_multi_system_bin_errors(self):
        per_doc = {"a": [10.0], "b": [50.0]}
        with pytest.raises(ValueError, match="nothing to combine"):
            bin_analysis(per_doc, 1.0, max_oracle_selector(per_doc))

    def test_score_table_selector(self):
        per_doc = {"a": [1.0, 0.0], "b": [0.0, 1.0]}
        table = {"a": [5.0, 1.0], "b": [2.0, 3.0]}  # picks a then b
        reports, _ = bin_analysis(per_doc, 10.0, score_table_selector(table))
        assert reports[0].mean_method == pytest.approx(1.0)


class TestSelectionAccuracy:
    def test_max_oracle_accuracy_one(self):
        pairs = [(0.05, True) for _ in range(10)]
        buckets = selection_accuracy(pairs)
        assert all(b.accuracy == 1.0 for b in buckets)

    def test_random_accuracy_near_half(self):
        rng = np.random.default_rng(2)
        pairs = [(float(rng.uniform(0.001, 1.0)), bool(rng.integers(0, 2))) for _ in range(1000)]
        buckets = selection_accuracy(pairs, bucket_edges=(0.0, 1.0))
        # binomial 99% interval around 0.5 for n=1000 is roughly +-0.041
        assert abs(buckets[0].accuracy - 0.5) < 0.05

    def test_hand_bucket(self):
        pairs = [(0.5, True), (0.5, True), (0.5, True), (0.5, False)]
        buckets = selection_accuracy(pairs, bucket_edges=(0.2, 1.0))
        assert buckets[0].accuracy == pytest.approx(0.75)
        assert buckets[0].total == 4

    def test_empty_buckets_absent(self):
        buckets = selection_accuracy([(0.5, True)], bucket_edges=(0.0, 0.1, 1.0))
        assert len(buckets) == 1
        assert buckets[0].lower == 0.1

    def test_unsorted_edges_error(self):
        with pytest.raises(ValueError, match="increasing"):
            selection_accuracy([(0.5, True)], bucket_edges=(0.5, 0.1))

    def test_ties_rejected(self):
        with pytest.raises(ValueError, match="ties"):
            selection_accuracy([(0.0, True)])


class TestSignificance:
    def test_identical_lists_p_one(self):
        a = [0.4, 0.5, 0.6]
        assert significance(a, list(a), trials=500, seed=0) == 1.0

    def test_dominance_small_p(self):
        a = [0.5 + 0.1 * i for i in range(10)]
        b = [v - 0.05 for v in a]
        p = significance(a, b, trials=10000, seed=0)
        assert p <= 0.01
        assert exact_significance(a, b) == pytest.approx(2 / 1024)

    def test_swap_symmetry(self):
        rng = np.random.default_rng(3)
        a = list(rng.random(8))
        b = list(rng.random(8))
        assert significance(a, b, trials=2000, seed=1) == significance(b, a, trials=2000, seed=1)

    def test_matches_exact_enumeration(self):
        rng = np.random.default_rng(4)
        for n in (6, 9, 12):
            a = list(rng.random(n))
            b = list(rng.random(n))
            approx = significance(a, b, trials=10000, seed=2)
            exact = exact_significance(a, b)
            assert abs(approx - exact) <= 0.02

    def test_length_mismatch(self):
        with pytest.raises(ValueError):
            significance([1.0, 2.0], [1.0])
