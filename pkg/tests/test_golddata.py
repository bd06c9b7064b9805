import random
from fractions import Fraction
from pathlib import Path

import pytest

from kbrank.golddata import (BUCKETS, GoldDataError, GoldRecord, MajorityEchoJudge,
                             agreement_distribution, annotator_agreement, evaluate, fleiss_kappa,
                             in_bucket, load_gold, ppref, random_agreement_model, run_judge,
                             simulate_random_agreement)
from kbrank.judgment import PreferenceJudgment, Winner

FIXTURE = Path(__file__).parent / "fixtures" / "gold20.csv"


def rec(a, b, **kw):
    return GoldRecord("e", "", "p", "q", a, b, **kw)


def reference_kappa(table):
    """Textbook Fleiss' kappa over an items x categories count table, in exact arithmetic."""
    N = len(table)
    n = sum(table[0])
    k = len(table[0])
    p_j = [Fraction(sum(row[j] for row in table), N * n) for j in range(k)]
    P_i = [Fraction(sum(c * (c - 1) for c in row), n * (n - 1)) for row in table]
    P_bar = sum(P_i) / N
    P_e = sum(p * p for p in p_j)
    return (P_bar - P_e) / (1 - P_e)


def test_record_invariants():
    albert = GoldRecord("Albert Johnson", "Canadian soccer player", "military conflict", "drafted by", 0, 10)
    assert albert.preferred == "B" and albert.agreement == 1.0
    svetlana = rec(5, 5)
    assert svetlana.preferred == "NONE" and svetlana.agreement == 0.5
    with pytest.raises(ValueError):
        rec(7, 4)


def test_load_fixture():
    records = load_gold(FIXTURE)
    assert len(records) == 20
    assert records[0].entity_label == "Albert Johnson" and records[0].record_id == "t01"
    hist, mean = agreement_distribution(records)
    assert hist == {0.5: 2, 0.6: 2, 0.7: 3, 0.8: 3, 0.9: 4, 1.0: 6}
    assert mean == pytest.approx((5 * 2 + 6 * 2 + 7 * 3 + 8 * 3 + 9 * 4 + 10 * 6) / 200)


def test_load_errors(tmp_path):
    bad = tmp_path / "bad.csv"
    bad.write_text("entity_label,entity_description,prop_a,prop_b,votes_a,votes_b\n"
                   "A,d,p,q,7,4\nB,d,p,q,x,1\nC,d,p,q,6,4\n")
    with pytest.raises(GoldDataError) as info:
        load_gold(bad)
    assert len(info.value.errors) == 2 and "row 1" in info.value.errors[0]
    assert [r.entity_label for r in load_gold(bad, on_error="skip")] == ["C"]
    missing = tmp_path / "missing.csv"
    missing.write_text("entity_label,prop_a\n")
    with pytest.raises(GoldDataError, match="missing columns"):
        load_gold(missing)


def test_unanimous_histogram():
    hist, mean = agreement_distribution([rec(10, 0), rec(0, 10)])
    assert hist[1.0] == 2 and sum(hist.values()) == 2 and mean == 1.0


def test_random_model_exact_values():
    dist = random_agreement_model()
    assert dist[Fraction(1)] == Fraction(2, 1024)
    assert sum(v for a, v in dist.items() if a >= Fraction(8, 10)) == Fraction(112, 1024)
    assert sum(dist.values()) == 1
    assert dist[Fraction(1, 2)] == Fraction(252, 1024)
    odd = random_agreement_model(3)
    assert odd == {Fraction(2, 3): Fraction(6, 8), Fraction(1): Fraction(2, 8)}


def test_simulation_is_seeded():
    assert simulate_random_agreement(1000, seed=4) == simulate_random_agreement(1000, seed=4)


def test_fleiss_kappa():
    assert fleiss_kappa([rec(10, 0), rec(0, 10)]) == pytest.approx(1.0)
    hand = [rec(7, 3), rec(2, 8), rec(5, 5), rec(9, 1)]
    expected = reference_kappa([[r.votes_a, r.votes_b] for r in hand])
    assert fleiss_kappa(hand) == pytest.approx(float(expected), abs=1e-14)
    with pytest.raises(ValueError, match="degenerate"):
        fleiss_kappa([rec(10, 0), rec(10, 0)])


def test_fleiss_kappa_invariances():
    rng = random.Random(0)
    for _ in range(100):
        recs = [rec(a, 10 - a) for a in (rng.randint(0, 10) for _ in range(rng.randint(2, 30)))]
        try:
            k = fleiss_kappa(recs)
        except ValueError:
            continue
        assert k == pytest.approx(float(reference_kappa([[r.votes_a, r.votes_b] for r in recs])), abs=1e-12)
        shuffled = recs[:]
        rng.shuffle(shuffled)
        assert fleiss_kappa(shuffled) == pytest.approx(k, abs=1e-12)
        assert fleiss_kappa([rec(r.votes_b, r.votes_a) for r in recs]) == pytest.approx(k, abs=1e-12)


def test_buckets():
    assert not in_bucket(rec(5, 5), 0.5)
    assert in_bucket(rec(3, 7), 0.7) and not in_bucket(rec(3, 7), 0.8)
    assert in_bucket(rec(10, 0), 1.0, exact=True) and not in_bucket(rec(9, 1), 1.0, exact=True)
    records = load_gold(FIXTURE)
    sizes = [sum(in_bucket(r, t, e) for r in records) for _, t, e in BUCKETS]
    assert sizes == [16, 13, 10, 6]
    annot = [annotator_agreement(records, t, e) for _, t, e in BUCKETS]
    assert annot == sorted(annot) and annot[-1] == 1.0


def J(w):
    if w is None:
        return None
    return PreferenceJudgment.from_scores(*{"F": (1, 0), "S": (0, 1), "T": (0, 0)}[w])


def test_ppref_five_record_hand_fixture():
    records = [rec(8, 2), rec(1, 9), rec(10, 0), rec(2, 8), rec(9, 1)]
    judgments = [J("F"), J("S"), J("S"), J("T"), J("F")]
    res = ppref(judgments, records, 0.8)
    assert (res.ppref, res.n, res.correct, res.ties) == (0.6, 5, 3, 1)
    with pytest.raises(ValueError):
        ppref(judgments[:4], records, 0.8)
    with pytest.raises(ValueError):
        ppref([J("F")], [rec(5, 5)], 0.7)


def test_evaluate_report_shape():
    records = load_gold(FIXTURE)
    echo = [J("F") if r.preferred == "A" else J("S") if r.preferred == "B" else J("T") for r in records]
    report = evaluate({"echo": echo, "abstainer": [None] * 20}, records, {"broken": "boom"})
    assert report.sizes == [16, 13, 10, 6]
    assert [c.ppref for c in report.methods["echo"]] == [1.0] * 4
    assert [c.abstentions for c in report.methods["abstainer"]] == [16, 13, 10, 6]
    rows = report.rows()
    assert rows[0][0] == "method" and rows[1][0] == "Random" and rows[2][0] == "Annotators"
    assert rows[-1] == ["broken", "error", "error", "error", "error", ""]
    assert report.to_json()["failures"] == {"broken": "boom"}


def test_majority_echo_judge_and_run_judge():
    records = load_gold(FIXTURE)
    queries = [(r.entity_label, r.prop_a, r.prop_b) for r in records]
    judge = MajorityEchoJudge(records, queries)
    out = run_judge(judge, queries + [None, ("nobody", "p", "q")])
    assert out[-2:] == [None, None]
    for r, j in zip(records, out):
        assert j.winner is (r.preferred_winner or Winner.TIE)
    e, p, q = queries[0]
    assert judge.judge(e, q, p) == judge.judge(e, p, q).mirrored()
