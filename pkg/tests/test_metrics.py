import numpy as np
import pytest

from towbombe.environment import CANONICAL_PROBS, EpdEnvironment, MachineSet, parse_pattern
from towbombe.errors import InputError
from towbombe.metrics import RunRecord, aggregate, classify_outcome, classify_pattern, fairness, regret_curve, sm_points

CANON = MachineSet(CANONICAL_PROBS)


def _record(scores, modal, max_fluct=0.0):
    hist = np.zeros((len(scores), 5), dtype=int)
    hist[:, 0] = 1000
    return RunRecord(np.array(scores, dtype=float), hist, parse_pattern(modal, 5), max_fluct)


def test_fairness_examples():
    assert fairness([300, 300, 300]) == 0
    assert fairness([100, 200, 900]) == pytest.approx(1600 / 3)
    assert fairness([900, 100, 200]) == fairness([100, 200, 900])
    np.testing.assert_allclose(fairness(np.array([[1, 1, 1], [0, 0, 3]])), [0, 2])
    with pytest.raises(InputError):
        fairness([1])


@pytest.mark.parametrize("modal, label", [("DEC", "SM"), ("EEE", "NE"), ("AEE", "Other"), ("CCE", "Other")])
def test_classification(modal, label):
    assert classify_outcome(_record([0, 0, 0], modal), CANON).label == label


def test_classification_token_and_epd():
    assert classify_pattern(parse_pattern("DEC", 5), CANON).token == "SM:DEC"
    epd = EpdEnvironment()
    assert classify_pattern([4, 4, 4], epd).label == "NE"
    best = epd.table.probs.sum(axis=1).argmax()
    pat = [best // 25, best // 5 % 5, best % 5]
    assert classify_pattern(pat, epd).label == "SM"


def test_sm_points():
    sm, ne = sm_points(CANON, 3, 1000)
    assert sm.shape == (6, 3)
    assert sorted(map(tuple, np.sort(sm, axis=1).round(9))) == [(100, 200, 900)] * 6
    np.testing.assert_allclose(ne, [300, 300, 300])


def test_aggregate_single_and_clusters():
    r = _record([100, 200, 900], "CDE", 0.4)
    r.outcome = classify_outcome(r, CANON)
    s = aggregate([r], CANON)
    assert s.samples == 1 and s.mean_total == 1200 and s.sm_freq == 1
    assert s.mean_fairness == pytest.approx(1600 / 3) and s.mean_max_fluct == 0.4
    assert s.cluster_counts.sum() == 1 and s.ne_cluster_count == 0
    recs = [_record([300, 300, 300], "EEE"), _record([898, 101, 201], "ECD")]
    s = aggregate(recs, CANON)
    assert (s.ne_freq, s.sm_freq) == (0.5, 0.5) and s.ne_cluster_count == 1
    with pytest.raises(InputError):
        aggregate([])


def test_regret_curve():
    np.testing.assert_array_equal(regret_curve(np.zeros(5), 0.9, 0.2)[:, 1], 0)
    rc = regret_curve(np.arange(1, 11), 0.9, 0.2)
    np.testing.assert_allclose(np.diff(rc[:, 1]), 0.7)
    assert rc[0, 0] == 1
