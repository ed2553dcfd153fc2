import random

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from ncbroadcast.ratectrl import (
    EPSILON,
    FeedbackSnapshot,
    RateController,
    benefits,
    decide_baseline,
    decide_delay_threshold,
    decision_metric,
    expected_time_to_zero,
    lambda_est,
    per_receiver_metric,
    undelivered_threshold,
)


def snap(ages=(), states=(1, 1), undelivered=(0, 0), mu=0.8, start=1):
    return FeedbackSnapshot(
        undelivered=list(undelivered),
        states=list(states),
        delivered_prefix=[0] * len(states),
        ages=list(ages),
        mu=mu,
        queue_start=start,
    )


def test_epsilon():
    assert EPSILON == 1e-4


# -- baseline -----------------------------------------------------------------

def test_baseline_extremes():
    rng = random.Random(1)
    assert not any(decide_baseline(0.0, rng) for _ in range(1000))
    assert all(decide_baseline(1.0, rng) for _ in range(1000))


def test_baseline_rate():
    rng = random.Random(2)
    n = 10**6
    hits = sum(decide_baseline(0.7, rng) for _ in range(n))
    assert abs(hits / n - 0.7) < 0.002


# -- delay threshold ---------------------------------------------------------------

def test_threshold_empty_queue_adds():
    d = decide_delay_threshold(5, snap(ages=[]))
    assert d.add and d.uncoded is None


def test_threshold_stop_mode_sends_oldest():
    d = decide_delay_threshold(2, snap(ages=[3, 1], start=7))
    assert not d.add
    assert d.uncoded == 7


def test_threshold_start_mode():
    assert not decide_delay_threshold(5, snap(ages=[2, 1], states=[1, 2])).add
    assert decide_delay_threshold(5, snap(ages=[2, 1], states=[1, 0])).add
    # age equal to the threshold has not expired
    assert decide_delay_threshold(2, snap(ages=[2], states=[0])).add


# -- dynamic ----------------------------------------------------------------------

def test_lambda_est():
    assert lambda_est(70, 100, 0.8) == pytest.approx(0.7)
    assert lambda_est(100, 100, 0.8) == pytest.approx(0.7999)
    assert lambda_est(0, 0, 0.8) == 0.0


def test_decision_metric_examples():
    assert decision_metric([10, 5, 10, 5], 0.7, 100, 0.8) == pytest.approx(100)
    assert decision_metric([0, 0, 0, 0], 0.7, 100, 0.8) == 400
    assert decision_metric([10, 10, 10, 10], 0.7, 100, 0.8) == pytest.approx(0, abs=1e-9)


def test_undelivered_threshold_examples():
    assert undelivered_threshold(0.7, 100, 4, 0.8) == pytest.approx(40)
    assert undelivered_threshold(0.6, 50, 8, 0.8) == pytest.approx(80)
    assert undelivered_threshold(0.7, 1e-12, 4, 0.8) < 1e-9


def test_metric_requires_lambda_below_mu():
    with pytest.raises(ValueError):
        decision_metric([1], 0.8, 10, 0.8)
    with pytest.raises(ValueError):
        undelivered_threshold(0.9, 10, 1, 0.8)


@given(
    st.lists(st.integers(0, 200), min_size=1, max_size=10),
    st.floats(0.0, 0.79),
    st.floats(0.01, 500),
)
def test_metric_sign_matches_threshold(us, lam, f):
    mu = 0.8
    metric = decision_metric(us, lam, f, mu)
    threshold = undelivered_threshold(lam, f, len(us), mu)
    # M > 0 iff sum(u) < T_U, up to rounding at the boundary
    if abs(sum(us) - threshold) > 1e-9 * max(1.0, threshold):
        assert (metric > 0) == (sum(us) < threshold)
    assert metric == pytest.approx(sum(per_receiver_metric(u, lam, f, mu) for u in us), abs=1e-6)


# -- expected time to zero --------------------------------------------------------

def absorbing_oracle(lam, mu, n_states=200):
    """Hitting times of 0 from a full transition matrix, top state reflecting."""
    p, q = lam * (1 - mu), (1 - lam) * mu
    P = np.zeros((n_states, n_states))
    for i in range(n_states):
        up = p if i < n_states - 1 else 0.0
        down = q if i > 0 else 0.0
        if i < n_states - 1:
            P[i, i + 1] = up
        if i > 0:
            P[i, i - 1] = down
        P[i, i] = 1 - up - down
    Q = P[1:, 1:]
    E = np.linalg.solve(np.eye(n_states - 1) - Q, np.ones(n_states - 1))
    return np.concatenate(([0.0], E))


def test_time_to_zero_examples():
    assert expected_time_to_zero(0, 0.7, 0.8) == 0
    assert expected_time_to_zero(1, 0.7, 0.8) == pytest.approx(10)
    assert expected_time_to_zero(3, 0.7, 0.8) == pytest.approx(30)


@pytest.mark.parametrize("lam,mu", [(0.7, 0.8), (0.3, 0.8), (0.5, 0.6), (0.1, 0.9)])
def test_time_to_zero_matches_absorbing_chain(lam, mu):
    E = absorbing_oracle(lam, mu)
    for k in range(0, 11):
        assert expected_time_to_zero(k, lam, mu) == pytest.approx(E[k], abs=1e-6, rel=1e-6)


def test_time_to_zero_unstable():
    with pytest.raises(ValueError):
        expected_time_to_zero(1, 0.8, 0.8)


# -- benefits ------------------------------------------------------------------------

def test_benefits_examples():
    assert benefits(3, 0, 100, 0.7, 0.8) == (100, 0)
    ba, bw = benefits(2, 5, 100, 0.7, 0.8)
    assert ba == pytest.approx(-10)
    assert bw == pytest.approx(-60)
    assert ba - bw == pytest.approx(50)


@given(
    st.integers(0, 50),
    st.integers(0, 50),
    st.integers(0, 100),
    st.floats(0.1, 500),
    st.floats(0.05, 0.7),
)
def test_benefit_gap_is_per_receiver_metric(k1, k2, u, f, lam):
    mu = 0.8
    d1 = benefits(k1, u, f, lam, mu)
    d2 = benefits(k2, u, f, lam, mu)
    m = per_receiver_metric(u, lam, f, mu)
    assert d1[0] - d1[1] == pytest.approx(m, rel=1e-9, abs=1e-6)
    assert d2[0] - d2[1] == pytest.approx(m, rel=1e-9, abs=1e-6)


# -- controller -------------------------------------------------------------------------

def test_controller_validation():
    with pytest.raises(ValueError):
        RateController("bogus", 0.8)
    with pytest.raises(ValueError):
        RateController("baseline", 0.8)
    with pytest.raises(ValueError):
        RateController("delay_threshold", 0.8, td=0)
    with pytest.raises(ValueError):
        RateController("dynamic", 0.8, f=0)


def test_dynamic_controller_first_slot_adds_and_tracks_counts():
    rc = RateController("dynamic", 0.8, f=10, record_lambda=True)
    rng = random.Random(0)
    d = rc.decide(snap(undelivered=[0, 0]), rng)
    assert d.add and d.lambda_est == 0.0
    assert d.threshold == pytest.approx(2 * 10 * 0.8)
    d = rc.decide(snap(undelivered=[20, 20]), rng)
    # lambda_est is now capped at mu - eps, T_U = 2*10*1e-4
    assert d.lambda_est == pytest.approx(0.8 - EPSILON)
    assert not d.add
    assert (rc.t, rc.added) == (2, 1)
    assert rc.lambda_history == [0.0, pytest.approx(0.7999)]
