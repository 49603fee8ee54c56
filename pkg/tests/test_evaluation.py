import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from dagm.communities import Community, CommunitySet
from dagm.evaluation import match_score, set_f1, set_jaccard
from dagm.graph import GroundTruthCommunities


def test_f1():
    assert set_f1({1, 2}, {1, 2}) == 1.0
    assert set_f1({1}, {2}) == 0.0
    assert set_f1({1, 2, 3}, {1, 2}) == 0.8
    with pytest.raises(ValueError):
        set_f1(set(), {1})


def test_jaccard():
    assert set_jaccard({1, 2}, {1, 2}) == 1.0
    assert set_jaccard({1}, {2}) == 0.0
    assert set_jaccard({1, 2, 3}, {1, 2}) == pytest.approx(2 / 3)
    with pytest.raises(ValueError):
        set_jaccard({1}, [])


def brute_force_score(truth, detected, sim):
    a = sum(max(sim(t, d) for d in detected) for t in truth) / (2 * len(truth))
    b = sum(max(sim(t, d) for t in truth) for d in detected) / (2 * len(detected))
    return a + b


class TestMatchScore:
    def test_worked_example(self):
        s = match_score([{1, 2, 3}], [{1, 2}, {3, 4}])
        assert s.f1_score == 0.7
        assert s.jaccard_score == 0.5625

    def test_self_match(self):
        truth = GroundTruthCommunities([frozenset({1, 2, 3}), frozenset({3, 4})])
        s = match_score(truth, truth.communities)
        assert s.f1_score == 1.0 and s.jaccard_score == 1.0

    def test_everything_in_one_community(self):
        # three disjoint triples against a single community holding all n nodes:
        # F1 = 1/2 * 6/(3+n) + 1/2 * 6/(3+n) = 6/(n+3)
        truth = [set(range(3 * i, 3 * i + 3)) for i in range(3)]
        previous = 1.0
        for n in (9, 12, 30):
            s = match_score(truth, [set(range(n))])
            assert s.f1_score == pytest.approx(6 / (n + 3), rel=1e-15)
            assert s.f1_score < previous
            previous = s.f1_score

    def test_sides(self):
        detected = CommunitySet([Community(frozenset({1, 2}), frozenset({3, 4}))])
        assert match_score([{3, 4}], detected, side="in").f1_score == 1.0
        assert match_score([{1, 2}], detected, side="out").f1_score == 1.0
        assert match_score([{1, 2, 3, 4}], detected).f1_score == 1.0

    def test_small_sets_excluded(self):
        s = match_score([{1, 2}, {5}], [{1, 2}, set()])
        assert s.f1_score == 1.0
        assert s.excluded == 2

    def test_empty(self):
        with pytest.raises(ValueError):
            match_score([], [{1, 2}])
        with pytest.raises(ValueError):
            match_score([{1, 2}], [])


collections = st.lists(st.frozensets(st.integers(0, 15), min_size=2, max_size=8), min_size=1, max_size=5)


@given(collections, collections)
def test_matches_brute_force(truth, detected):
    s = match_score(truth, detected)
    assert s.f1_score == pytest.approx(brute_force_score(truth, detected, set_f1), abs=1e-12)
    assert s.jaccard_score == pytest.approx(brute_force_score(truth, detected, set_jaccard), abs=1e-12)
    assert 0.0 <= s.f1_score <= 1.0 and 0.0 <= s.jaccard_score <= 1.0


@given(collections)
def test_self_match_is_one(x):
    s = match_score(x, x)
    assert s.f1_score == 1.0 and s.jaccard_score == 1.0


@given(collections, collections)
def test_symmetric_in_roles(truth, detected):
    a = match_score(truth, detected)
    b = match_score(detected, truth)
    assert a.f1_score == b.f1_score
    assert a.jaccard_score == b.jaccard_score


@given(collections, collections, st.data())
def test_adding_true_copy_never_hurts(truth, detected, data):
    copy = data.draw(st.sampled_from(truth))
    before = match_score(truth, detected)
    after = match_score(truth, detected + [copy])
    assert after.f1_score >= before.f1_score - 1e-12
    assert after.jaccard_score >= before.jaccard_score - 1e-12


def test_summary_lines():
    s = match_score([{1, 2, 3}], [{1, 2}, {3, 4}])
    assert s.summary("f1") == "F1\t0.700000"
    assert s.summary("both").splitlines() == ["F1\t0.700000", "Jaccard\t0.562500"]
    assert np.allclose(s.detected_best["f1"], [0.8, 0.4])
