import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from towbombe.errors import DomainError, InputError
from towbombe.tow import (GeneralTowState, TowState, adaptive_omega, gamma_prime, gamma_star, general_tow_update,
                          omega0, regret, simulate_tow, solvability_check, tow_principle_gap, tow_select,
                          tow_update)


def test_tow_update_examples():
    s = tow_update(TowState.fresh(omega=0.08), 0, True)
    assert (s.estimates[0], s.plays[0], s.failures[0]) == (1.0, 1, 0)
    s = tow_update(TowState.fresh(omega=0.08), 0, False)
    assert s.estimates[0] == pytest.approx(-0.08)
    s = TowState.fresh(omega=0.5)
    for k in range(10):
        s = tow_update(s, 0, k >= 4)
    assert s.estimates[0] == 4.0


@settings(max_examples=100, deadline=None)
@given(st.lists(st.tuples(st.integers(0, 1), st.booleans()), max_size=200), st.floats(0, 5))
def test_closed_form_holds_after_any_sequence(seq, w):
    s = TowState.fresh(omega=w)
    for k, ok in seq:
        s = tow_update(s, k, ok)
    np.testing.assert_array_equal(s.estimates, s.plays - (1 + w) * s.failures)


def test_tow_select_signs_and_tie():
    s = TowState.fresh(omega=0.1)
    assert tow_select(TowState(s.plays, s.failures, np.array([2.0, 1.0]), 0.1)) == 0
    assert tow_select(TowState(s.plays, s.failures, np.array([1.0, 2.0]), 0.1)) == 1
    rng = np.random.default_rng(0)
    n = 10_000
    a = sum(tow_select(s, 0.0, rng) == 0 for _ in range(n))
    assert abs(a - n / 2) < 3 * np.sqrt(n / 4)
    with pytest.raises(InputError):
        tow_select(s)


@pytest.mark.parametrize("gamma, want", [(0.15, 0.15 / 1.85), (1.0, 1.0), (0.0, 0.0)])
def test_omega0(gamma, want):
    assert omega0(gamma) == pytest.approx(want, abs=1e-15)


def test_omega0_domain():
    with pytest.raises(DomainError):
        omega0(2.0)
    with pytest.raises(DomainError):
        omega0(-0.1)
    assert round(omega0(0.15), 2) == 0.08


def test_gamma_prime():
    assert gamma_prime((0.03, 0.05, 0.1, 0.2, 0.9), 3) == pytest.approx(0.15)
    assert gamma_prime((0.9, 0.2), 1) == pytest.approx(1.1)
    assert gamma_prime((0.3,) * 5, 2) == pytest.approx(0.6)
    with pytest.raises(InputError):
        gamma_prime((0.9, 0.2), 2)


def test_adaptive_omega():
    assert adaptive_omega(np.zeros(5), np.zeros(5), 3) == pytest.approx(1.0)
    p = np.array([0.03, 0.05, 0.1, 0.2, 0.9])
    n = np.full(5, 10**8)
    assert adaptive_omega(p * n, n, 3, prior="midpoint") == pytest.approx(0.15 / 1.85, abs=1e-12)
    assert adaptive_omega(p * n, n, 3) == pytest.approx(0.15 / 1.85, abs=1e-6)
    # an unplayed machine counts as 0.5, here the second largest
    w = adaptive_omega(np.array([9, 0, 1]), np.array([10, 0, 10]), 1, prior="midpoint")
    assert w == pytest.approx(omega0(0.9 + 0.5))
    w = adaptive_omega(np.array([9, 0, 1]), np.array([10, 0, 10]), 1)
    assert w == pytest.approx(omega0(10 / 12 + 0.5))
    assert adaptive_omega(np.array([10, 10]), np.array([10, 10]), 1) == 10.0  # clamped
    assert adaptive_omega(np.zeros(2), np.zeros(2), 1, prior="midpoint") == pytest.approx(1.0)
    with pytest.raises(InputError):
        adaptive_omega(np.zeros(2), np.zeros(2), 1, prior="jeffreys")


def test_midpoint_prior_can_lock_onto_worse_machine():
    # A fails once, then B keeps paying: R/N freezes P_A at 0, omega stays small
    # and B's estimate drifts upward for good. Laplace keeps omega large enough.
    for prior, sign in (("midpoint", 1), ("laplace", -1)):
        w = adaptive_omega(np.array([0, 200]), np.array([1, 1000]), 1, prior=prior)
        drift_b = 0.2 - w * 0.8
        assert np.sign(drift_b) == sign


def test_adaptive_state_accumulates_with_current_omega():
    s = TowState.fresh()
    s = tow_update(s, 0, False)  # omega from the prior: gamma = 1, omega = 1
    assert s.estimates[0] == pytest.approx(-1.0)


def test_general_tow():
    assert gamma_star((0.6, 0.4)) == pytest.approx(0.5)
    s = GeneralTowState.fresh((0.6, 0.4))
    s = general_tow_update(s, 0, 0.5)
    assert s.estimates[0] == pytest.approx(0.0)
    with pytest.raises(InputError):
        general_tow_update(s, 0, 1.5)


@settings(max_examples=50, deadline=None)
@given(st.floats(0.05, 0.95), st.floats(0.05, 0.95), st.integers(0, 2**32 - 1))
def test_general_tow_ranks_like_tow_with_omega0(pa, pb, seed):
    """With 0/1 rewards the general estimate is (2 - gamma) / 2 times the TOW
    estimate under omega0, so both rank the machines identically."""
    rng = np.random.default_rng(seed)
    gen = GeneralTowState.fresh((pa, pb))
    tow = TowState.fresh(omega=omega0(pa + pb))
    for _ in range(100):
        k = int(rng.integers(2))
        r = float(rng.random() < (pa, pb)[k])
        gen = general_tow_update(gen, k, r)
        tow = tow_update(tow, k, r > 0)
        np.testing.assert_allclose(gen.estimates, tow.estimates * (2 - pa - pb) / 2, atol=1e-9)


def test_solvability():
    assert solvability_check(1, 1, 0.9, 0.2)
    assert not solvability_check(1, 9, 0.9, 0.2)
    for pa, pb in [(0.9, 0.2), (0.6, 0.5), (0.31, 0.3)]:
        g = (pa + pb) / 2
        assert solvability_check(1 - g, g, pa, pb)


def test_tow_principle_examples():
    a, b = tow_principle_gap(5, 3, 2, 1, 0.5)
    assert a == pytest.approx(2 / 3) and b == pytest.approx(2 / 3)
    a, b = tow_principle_gap(9, 4, 3, 3, 1.3)
    assert a == pytest.approx(5) and b == pytest.approx(5)
    assert tow_principle_gap(4, 4, 1, 1, 0.7) == pytest.approx((0, 0))
    with pytest.raises(InputError):
        tow_principle_gap(1, 1, 2, 0, 0.5)
    with pytest.raises(DomainError):
        tow_principle_gap(1, 1, 0, 0, 2.0)


def test_regret():
    assert regret(0.5, 0.5, 100) == 0
    assert regret(0.9, 0.2, 10) == pytest.approx(7.0)


def test_simulate_tow_finds_better_machine():
    rngs = [np.random.default_rng(i) for i in range(200)]
    res = simulate_tow((0.9, 0.2), 500, rngs, omega=omega0(1.1))
    assert (res.final_choice == 0).mean() > 0.95
    assert np.all(np.diff(res.mean_plays_b) >= 0)
    assert res.plays.sum() == 200 * 500
