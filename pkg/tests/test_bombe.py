import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from towbombe.bombe import (BombeState, Dynamics, apply_coupling, bombe_step, compute_heights,
                            deltas_from_outcome, draw_episode_noise, records_from_batch, run_episode, select_machines,
                            simulate, stack_noise)
from towbombe.environment import CANONICAL_PROBS, EpdEnvironment, MachineSet
from towbombe.errors import DomainError, InputError
from towbombe.fluctuations import FluctuationSpec

CANON = MachineSet(CANONICAL_PROBS)
finite = st.floats(-1e3, 1e3, allow_nan=False)


def test_heights_examples():
    assert np.all(compute_heights(np.zeros((3, 5))) == 0)
    np.testing.assert_allclose(compute_heights([[1, 0, 0, 0, 0]]), [[1, -0.25, -0.25, -0.25, -0.25]])


@settings(max_examples=100, deadline=None)
@given(arrays(float, (3, 5), elements=finite))
def test_heights_rows_sum_to_zero(q):
    assert np.abs(compute_heights(q).sum(axis=1)).max() < 1e-9


@settings(max_examples=100, deadline=None)
@given(arrays(float, (3, 5), elements=finite), arrays(float, (3, 5), elements=finite))
def test_coupling_preserves_column_sums(q, dq):
    np.testing.assert_allclose(apply_coupling(q, dq).sum(axis=0), q.sum(axis=0), atol=1e-9)


def test_coupling_examples():
    dq = np.zeros((3, 5))
    dq[0, 4] = 1
    q = apply_coupling(np.zeros((3, 5)), dq)
    np.testing.assert_allclose(q[:, 4], [1, -0.5, -0.5])
    q0 = np.arange(15.0).reshape(3, 5)
    np.testing.assert_array_equal(apply_coupling(q0, np.zeros((3, 5))), q0)
    with pytest.raises(DomainError):
        apply_coupling(np.zeros((1, 5)), np.zeros((1, 5)))


def test_selection_examples():
    rng = np.random.default_rng(0)
    assert select_machines([[3, 1, 0, 0, 0]], rng=rng)[0] == 0
    osc = np.zeros((1, 5))
    osc[0, 4] = 0.5
    assert select_machines(np.zeros((1, 5)), osc, rng=rng)[0] == 4
    with pytest.raises(InputError):
        select_machines(np.zeros((1, 5)), np.zeros((2, 5)), rng=rng)


def test_ties_are_uniform():
    rng = np.random.default_rng(1)
    n = 10_000
    picks = select_machines(np.zeros((n, 5)), rng=rng)
    counts = np.bincount(picks, minlength=5)
    sigma = np.sqrt(n * 0.2 * 0.8)
    assert np.all(np.abs(counts - n / 5) < 3 * sigma)


def test_deltas():
    dq = deltas_from_outcome([4, 2, 0], [1.0, 0.0, 0.0], 0.08, 5)
    assert dq[0, 4] == 1 and dq[1, 2] == -0.08 and dq[2, 0] == -0.08
    assert np.count_nonzero(dq) == 3
    dq = deltas_from_outcome([4, 3, 2], [1.0, 1.0, 1.0], 0.08, 5)
    assert (dq == 1).sum() == 3
    dq = deltas_from_outcome([4, 4, 2], [1.0, 1.0, 0.0], 0.08, 5, share=True)
    np.testing.assert_allclose(dq[:2, 4], 0.5)


def test_first_step_is_uniform_tie():
    rng = np.random.default_rng(2)
    sels = [bombe_step(BombeState.zero(3, 5), CANON, np.zeros((3, 5)), rng)[1].selections for _ in range(3000)]
    counts = np.bincount(np.ravel(sels), minlength=5)
    assert counts.min() > 0.8 * 1800


def test_dominant_row_selects_best():
    s = BombeState.zero(3, 5)
    q = np.zeros((3, 5))
    q[0, 4] = 50
    s = BombeState(q, s.plays, s.failures, s.wins, s.omega)
    new, out = bombe_step(s, CANON, np.zeros((3, 5)), np.random.default_rng(3))
    assert out.selections[0] == 4
    assert new.t == 1 and new.plays.sum() == 3
    assert abs(new.q.sum(axis=0) - q.sum(axis=0)).max() < 1e-12


def test_run_episode_matches_batch_sample():
    dyn = Dynamics(plays=300)
    fl = FluctuationSpec("random", 1.0, 10)
    rngs = lambda: [np.random.default_rng([9, s]) for s in range(4)]
    batch = simulate(CANON, dyn, stack_noise([draw_episode_noise(r, CANON, dyn, fl) for r in rngs()]))
    recs = records_from_batch(batch, CANON)
    for s, rng in enumerate(rngs()):
        one = run_episode(dyn, CANON, fl, rng, sample=s)
        np.testing.assert_array_equal(one.scores, recs[s].scores)
        np.testing.assert_array_equal(one.histogram, recs[s].histogram)
        assert one.outcome == recs[s].outcome


def test_score_is_sum_of_logged_rewards():
    dyn = Dynamics(plays=200)
    noise = stack_noise([draw_episode_noise(np.random.default_rng(s), CANON, dyn, FluctuationSpec()) for s in range(3)])
    b = simulate(CANON, dyn, noise, keep_history=True)
    np.testing.assert_array_equal(b.rewards.sum(axis=1), b.scores)
    for s in range(3):
        for i in range(3):
            np.testing.assert_array_equal(np.bincount(b.selections[s, :, i], minlength=5), b.histogram[s, i])


def test_one_play_boundary_and_deterministic_machine():
    with pytest.raises(InputError):
        Dynamics(plays=0)
    rec = run_episode(Dynamics(plays=1), CANON, FluctuationSpec(), np.random.default_rng(0))
    assert set(rec.scores.tolist()) <= {0.0, 1.0}
    env = MachineSet((1.0, 0.0, 0.0, 0.0, 0.0))
    # uncoupled players all pile onto the only paying machine and split it
    rec = run_episode(Dynamics(plays=1000, coupling=False), env, FluctuationSpec("none"), np.random.default_rng(1))
    assert rec.histogram[:, 0].min() > 900
    np.testing.assert_allclose(rec.scores, 1000 / 3, rtol=0.1)


def test_coupling_pushes_all_but_one_player_off_a_lone_paying_machine():
    # column sums of Q stay zero, so only one player can keep a positive estimate there
    env = MachineSet((1.0, 0.0, 0.0, 0.0, 0.0))
    rec = run_episode(Dynamics(plays=1000), env, FluctuationSpec("none"), np.random.default_rng(1))
    assert rec.histogram[:, 0].max() > 900
    assert np.sort(rec.histogram[:, 0])[:2].max() < 100


def test_canonical_episodes_mostly_reach_social_maximum():
    dyn = Dynamics()
    fl = FluctuationSpec()
    noise = stack_noise([draw_episode_noise(np.random.default_rng([5, s]), CANON, dyn, fl) for s in range(50)])
    recs = records_from_batch(simulate(CANON, dyn, noise), CANON)
    assert sum(r.outcome.label == "SM" for r in recs) >= 40
    sm = [np.sort(r.scores) for r in recs if r.outcome.label == "SM"]
    np.testing.assert_allclose(np.mean(sm, axis=0), [100, 200, 900], rtol=0.15)


def test_adaptive_and_epd_runs():
    rec = run_episode(Dynamics(omega=None, plays=200), CANON, FluctuationSpec(), np.random.default_rng(0))
    assert rec.plays == 200
    rec = run_episode(Dynamics(plays=200), EpdEnvironment(), FluctuationSpec(), np.random.default_rng(0))
    assert rec.histogram.shape == (3, 5)
