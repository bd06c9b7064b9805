import json

import pytest

from kbrank.judgment import Abstention, Winner
from kbrank.replay import RandomJudge, read_recorded


def test_random_judge_mirrors_and_is_seeded():
    a, b = RandomJudge(seed=7), RandomJudge(seed=7)
    for i in range(200):
        e, p, q = f"Q{i}", f"P{i % 13}", f"P{100 + i % 7}"
        j = a.judge(e, p, q)
        assert j.winner in (Winner.FIRST, Winner.SECOND)
        assert a.judge(e, q, p).winner is j.winner.mirrored()
        assert b.judge(e, p, q) == j


def test_random_judge_is_roughly_fair():
    judge = RandomJudge(seed=1)
    firsts = sum(judge.judge(f"Q{i}", "P1", "P2").winner is Winner.FIRST for i in range(4000))
    assert abs(firsts / 4000 - 0.5) < 0.03


def test_random_judge_rejects_equal_properties():
    with pytest.raises(ValueError):
        RandomJudge().judge("Q1", "P1", "P1")


def _lines(*entries):
    return [json.dumps(e) for e in entries]


def test_recorded_scores_winners_and_mirroring():
    judges = read_recorded(_lines(
        {"method": "lsi", "entity": "E", "first": "a", "second": "b", "score_first": 0.9, "score_second": 0.2},
        {"method": "lsi", "entity": "E", "first": "a", "second": "c", "winner": "c"},
        {"method": "lsi", "entity": "E", "first": "b", "second": "c", "winner": "tie"},
        {"method": "lda", "entity": "E", "first": "a", "second": "b", "abstain": True},
    ))
    lsi = judges["lsi"]
    assert lsi.judge("E", "a", "b").winner is Winner.FIRST
    swapped = lsi.judge("E", "b", "a")
    assert (swapped.winner, swapped.score_first, swapped.score_second) == (Winner.SECOND, 0.2, 0.9)
    assert lsi.judge("E", "a", "c").winner is Winner.SECOND
    assert lsi.judge("E", "c", "b").winner is Winner.TIE
    with pytest.raises(Abstention):
        judges["lda"].judge("E", "b", "a")
    with pytest.raises(Abstention):
        lsi.judge("F", "a", "b")


@pytest.mark.parametrize("line", [
    "{not json",
    json.dumps({"method": "x", "entity": "E", "first": "a"}),
    json.dumps({"method": "x", "entity": "E", "first": "a", "second": "b", "winner": "z"}),
])
def test_recorded_parse_errors_name_the_line(line):
    with pytest.raises(ValueError, match="line 2"):
        read_recorded(["", line])
