"""Rate-control block: the per-slot add/wait decision.

Three schemes are provided: a Bernoulli ``baseline``, the two-mode
``delay_threshold`` scheme, and the feedback-driven ``dynamic`` scheme that
adds while the total number of undelivered packets is below a threshold.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from typing import Sequence

EPSILON = 1e-4

SCHEMES = ("baseline", "delay_threshold", "dynamic")


@dataclass
class FeedbackSnapshot:
    """What the sender knows at the start of a slot."""

    undelivered: Sequence[int]
    states: Sequence[int]
    delivered_prefix: Sequence[int]
    # ages in slots of the queued packets, oldest first
    ages: Sequence[int]
    mu: float
    queue_start: int = 1


@dataclass
class Decision:
    add: bool
    # stop mode of the delay-threshold scheme: send this packet uncoded
    uncoded: int | None = None
    metric: float | None = None
    threshold: float | None = None
    lambda_est: float | None = None


def decide_baseline(lam: float, rng: random.Random) -> bool:
    # one draw per slot regardless of lam keeps the stream aligned across runs
    return rng.random() < lam


def decide_delay_threshold(td: int, snapshot: FeedbackSnapshot) -> Decision:
    ages = snapshot.ages
    if ages and ages[0] > td:
        # ages are oldest-first, so the head of the queue is the oldest expired
        return Decision(False, uncoded=snapshot.queue_start)
    if not ages:
        return Decision(True)
    return Decision(any(s == 0 for s in snapshot.states))


def lambda_est(added: int, t: int, mu: float, eps: float = EPSILON) -> float:
    """Observed addition rate ``A(t)/t`` capped just below the channel rate."""
    if t <= 0:
        return 0.0
    return min(added / t, mu - eps)


def decision_metric(undelivered: Sequence[int], lam_est: float, f: float, mu: float) -> float:
    """Summed benefit of adding over waiting, ``R f - sum(u) / (mu - lam_est)``."""
    if lam_est >= mu:
        raise ValueError("lambda_est must be below mu")
    return len(undelivered) * f - sum(undelivered) / (mu - lam_est)


def per_receiver_metric(u: int, lam_est: float, f: float, mu: float) -> float:
    return f - u / (mu - lam_est)


def undelivered_threshold(lam_est: float, f: float, receivers: int, mu: float) -> float:
    if lam_est >= mu:
        raise ValueError("lambda_est must be below mu")
    return receivers * f * (mu - lam_est)


def expected_time_to_zero(k: float, lam: float, mu: float) -> float:
    """Mean first-passage time from Markov state ``k`` to 0."""
    if lam >= mu:
        raise ValueError(f"chain is not positive recurrent for lambda={lam} >= mu={mu}")
    if k < 0:
        raise ValueError("state must be non-negative")
    return k / (mu - lam)


def benefits(k_r: int, u_r: int, f: float, lam: float, mu: float) -> tuple[float, float]:
    """Benefits ``(B_A, B_W)`` of adding and waiting for one receiver.

    Throughput counts one packet for adding and nothing for waiting; the
    delay side is the expected time to zero state, weighted by the number of
    undelivered packets that zero state would flush.
    """
    if lam >= mu:
        raise ValueError("lambda must be below mu")
    gap = mu - lam
    time_add = (k_r + (1 - mu)) / gap
    time_wait = (k_r - mu) / gap
    return f - u_r * time_add, -u_r * time_wait


@dataclass
class RateController:
    scheme: str
    mu: float
    lam: float | None = None
    td: int | None = None
    f: float | None = None
    eps: float = EPSILON
    added: int = 0
    t: int = 0
    lambda_history: list[float] = field(default_factory=list)
    record_lambda: bool = False

    def __post_init__(self) -> None:
        if self.scheme not in SCHEMES:
            raise ValueError(f"unknown rate-control scheme {self.scheme!r}")
        if self.scheme == "baseline":
            if self.lam is None or not 0 <= self.lam <= 1:
                raise ValueError("baseline needs 0 <= lambda <= 1")
        elif self.scheme == "delay_threshold":
            if self.td is None or self.td < 1:
                raise ValueError("delay threshold needs T_D >= 1")
        else:
            if self.f is None or self.f <= 0:
                raise ValueError("dynamic scheme needs f > 0")
            if self.eps <= 0:
                raise ValueError("epsilon must be positive")
            if self.mu <= 0:
                raise ValueError("dynamic scheme needs mu > 0")

    def decide(self, snapshot: FeedbackSnapshot, rng: random.Random) -> Decision:
        if self.scheme == "baseline":
            decision = Decision(decide_baseline(self.lam, rng))
        elif self.scheme == "delay_threshold":
            decision = decide_delay_threshold(self.td, snapshot)
        else:
            lam_est = lambda_est(self.added, self.t, self.mu, self.eps)
            metric = decision_metric(snapshot.undelivered, lam_est, self.f, self.mu)
            threshold = undelivered_threshold(lam_est, self.f, len(snapshot.undelivered), self.mu)
            decision = Decision(metric > 0, metric=metric, threshold=threshold, lambda_est=lam_est)
            if self.record_lambda:
                self.lambda_history.append(lam_est)
        self.t += 1
        self.added += decision.add
        return decision
