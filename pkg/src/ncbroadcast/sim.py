"""Slot-by-slot broadcast simulator.

Each slot runs rate control, coding, R independent erasure channels and
perfect feedback, in that order.  Every delivery is tagged as zero-state,
leader-state or coefficient-based, and delays are accumulated three ways at
once: as they really happen, as if only zero-state deliveries counted, and
as if only zero- and leader-state deliveries counted.  The knowledge spaces
evolve identically in all three; only the delivery bookkeeping differs.
"""

from __future__ import annotations

import math
import random
from array import array
from collections import Counter
from dataclasses import dataclass, field
from typing import Callable, Iterator, Sequence

from . import coding
from .gf import FieldContext
from .linalg import CodedVector, KnowledgeSpace, Packed
from .ratectrl import FeedbackSnapshot, RateController
from .seeds import derive_seed

DELIVERY_MODES = ("full", "zero_state_only", "zero_and_leader_only")
MODE_ALIASES = {
    "full": "full",
    "zero": "zero_state_only",
    "zero-leader": "zero_and_leader_only",
    "zero_state_only": "zero_state_only",
    "zero_and_leader_only": "zero_and_leader_only",
}
RATE_ALIASES = {
    "baseline": "baseline",
    "threshold": "delay_threshold",
    "delay_threshold": "delay_threshold",
    "dynamic": "dynamic",
}

ZERO, LEADER, COEFFICIENT = "zero_state", "leader_state", "coefficient_based"


class InvariantViolation(AssertionError):
    pass


class _QueueAges(Sequence):
    """Ages of the queued packets, oldest first, computed on demand."""

    __slots__ = ("entry", "head", "end", "now")

    def __init__(self, entry, head: int, end: int, now: int):
        self.entry, self.head, self.end, self.now = entry, head, end, now

    def __len__(self) -> int:
        return max(self.end - self.head + 1, 0)

    def __getitem__(self, i):
        if isinstance(i, slice):
            return [self[j] for j in range(*i.indices(len(self)))]
        n = len(self)
        if i < 0:
            i += n
        if not 0 <= i < n:
            raise IndexError(i)
        return self.now - self.entry[self.head + i]


@dataclass
class SimConfig:
    receivers: int = 4
    mu: float = 0.8
    coding: str = "b"
    rate: str = "baseline"
    lam: float | None = 0.7
    td: int | None = None
    f: float | None = None
    field_exp: int | None = None
    horizon: int = 10_000
    seed: int = 0
    delivery_mode: str = "full"
    record_lambda: bool = False
    strict: bool = True

    def __post_init__(self) -> None:
        self.rate = RATE_ALIASES.get(self.rate, self.rate)
        self.delivery_mode = MODE_ALIASES.get(self.delivery_mode, self.delivery_mode)

    def validate(self) -> None:
        if self.receivers < 1:
            raise ValueError("need at least one receiver")
        if not 0 <= self.mu <= 1:
            raise ValueError("mu must lie in [0, 1]")
        if self.horizon < 0:
            raise ValueError("horizon must be non-negative")
        if self.coding not in coding.SCHEMES:
            raise ValueError(f"unknown coding scheme {self.coding!r}")
        if self.delivery_mode not in DELIVERY_MODES:
            raise ValueError(f"unknown delivery mode {self.delivery_mode!r}")
        if self.field_exp is not None and not 1 <= self.field_exp <= 8:
            raise ValueError("field exponent must be in 1..8")
        # raises on bad rate-control parameters
        self.rate_controller()

    def rate_controller(self) -> RateController:
        return RateController(
            self.rate, self.mu, lam=self.lam, td=self.td, f=self.f,
            record_lambda=self.record_lambda,
        )

    def field(self) -> FieldContext:
        if self.field_exp is not None:
            return FieldContext(self.field_exp)
        return FieldContext.for_receivers(self.receivers)


@dataclass(slots=True)
class SlotTrace:
    t: int
    add: bool
    # CodedVector or Packed; both iterate as (index, coefficient) items
    vector: object
    received: tuple
    # (receiver, packets delivered, tag)
    deliveries: tuple
    coded_packet_count: int
    effective_list_size: int
    stop_mode: bool = False

    def to_row(self) -> list[str]:
        vec = " ".join(f"{i}:{c}" for i, c in sorted(self.vector.items()))
        rec = "".join("1" if x else "0" for x in self.received)
        dl = " ".join(f"{r}:{n}:{tag}" for r, n, tag in self.deliveries)
        return [str(self.t), str(int(self.add)), vec, rec, dl,
                str(self.coded_packet_count), str(self.effective_list_size),
                str(int(self.stop_mode))]


TRACE_HEADER = ["t", "add", "vector", "received", "deliveries",
                "coded_packet_count", "effective_list_size", "stop_mode"]


@dataclass
class Metrics:
    receivers: int
    slots: int
    delivery_mode: str = "full"
    additions: int = 0
    delivered: dict = field(default_factory=lambda: dict.fromkeys(DELIVERY_MODES, 0))
    delay_sum: dict = field(default_factory=lambda: dict.fromkeys(DELIVERY_MODES, 0))
    class_counts: Counter = field(default_factory=Counter)
    state_hist: Counter = field(default_factory=Counter)
    leader_hist: Counter = field(default_factory=Counter)
    deliverable: Counter = field(default_factory=Counter)
    coefficient_deliveries: Counter = field(default_factory=Counter)
    coded_hist: Counter = field(default_factory=Counter)
    cycle_hist: Counter = field(default_factory=Counter)
    joint_transitions: Counter = field(default_factory=Counter)
    lambda_est: array = field(default_factory=lambda: array("d"))
    rlnc_draws: int = 0
    stop_slots: int = 0
    metric_threshold_mismatches: int = 0
    violations: Counter = field(default_factory=Counter)

    def delay(self, mode: str | None = None) -> float:
        mode = mode or self.delivery_mode
        n = self.delivered[mode]
        return self.delay_sum[mode] / n if n else math.nan

    def throughput(self, mode: str | None = None) -> float:
        mode = mode or self.delivery_mode
        if not self.slots:
            return 0.0
        return self.delivered[mode] / (self.slots * self.receivers)

    @property
    def delivery_delay(self) -> float:
        return self.delay()

    @property
    def addition_rate(self) -> float:
        return self.additions / self.slots if self.slots else 0.0

    def uncoded_fraction(self) -> float:
        total = sum(self.coded_hist.values())
        return self.coded_hist[1] / total if total else math.nan

    def state_occupancy(self) -> dict[int, float]:
        total = sum(self.state_hist.values())
        return {k: v / total for k, v in sorted(self.state_hist.items())} if total else {}

    def leader_occupancy(self) -> dict[int, float]:
        total = sum(self.leader_hist.values())
        return {k: v / total for k, v in sorted(self.leader_hist.items())} if total else {}


def coefficient_delivery_profile(metrics: Metrics) -> dict[int, float]:
    """Coefficient-based deliveries per deliverable slot, keyed by effective state."""
    return {
        s: metrics.coefficient_deliveries[s] / n
        for s, n in sorted(metrics.deliverable.items())
        if n
    }


def classify_delivery(
    post_state: int, pre_state: int, pre_states, coding_scheme: str
) -> str:
    """Tag a delivery by how it happened.

    Leader-state delivery only exists for schemes A and B: their effective
    queue stops at the leader's next packet.  RLNC deliveries outside zero
    state are all coefficient-based.
    """
    if post_state == 0:
        return ZERO
    if coding_scheme != "rlnc" and pre_state == min(pre_states):
        return LEADER
    return COEFFICIENT


class Simulation:
    """One run's mutable world.  Call :meth:`step` once per slot."""

    def __init__(self, config: SimConfig):
        config.validate()
        self.config = config
        R = config.receivers
        self.field = config.field()
        self.spaces = [KnowledgeSpace(self.field) for _ in range(R)]
        self.controller = config.rate_controller()
        seed = config.seed
        self.rate_rng = random.Random(derive_seed(seed, "rate"))
        self.channel_rngs = [random.Random(derive_seed(seed, f"channel:{r}")) for r in range(R)]
        self.coding_rng = random.Random(derive_seed(seed, "rlnc"))
        self.t = 0
        self.added = 0
        self.head = 1
        self.entry = array("q", [0])  # entry[i] = slot packet i joined the queue
        self.cum_entry = array("q", [0])
        self.states = [0] * R
        self.stamped = {m: [0] * R for m in DELIVERY_MODES}
        self.last_zero = [0] * R
        self.effective = 0
        self.metrics = Metrics(R, 0, config.delivery_mode)

    def _violation(self, kind: str, detail: str) -> None:
        self.metrics.violations[kind] += 1
        if self.config.strict:
            raise InvariantViolation(f"slot {self.t}: {kind}: {detail}")

    def snapshot(self) -> FeedbackSnapshot:
        A = self.added
        dps = [s.base for s in self.spaces]
        return FeedbackSnapshot(
            undelivered=[A - d for d in dps],
            states=list(self.states),
            delivered_prefix=dps,
            ages=_QueueAges(self.entry, self.head, A, self.t),
            mu=self.config.mu,
            queue_start=self.head,
        )

    def step(self) -> SlotTrace:
        cfg = self.config
        m = self.metrics
        spaces = self.spaces
        R = cfg.receivers
        self.t += 1
        t = self.t

        # 1. rate control
        if cfg.rate == "baseline":
            decision = self.controller.decide(None, self.rate_rng)
        else:
            decision = self.controller.decide(self.snapshot(), self.rate_rng)
            if decision.metric is not None:
                if cfg.record_lambda:
                    m.lambda_est.append(decision.lambda_est)
                if (decision.metric > 0) != (sum(self.added - s.base for s in spaces) < decision.threshold):
                    m.metric_threshold_mismatches += 1
        add = decision.add
        if add:
            self.added += 1
            self.entry.append(t)
            self.cum_entry.append(self.cum_entry[-1] + t)
            m.additions += 1
        A = self.added

        pre_ranks = [s.rank for s in spaces]
        pre_states = [A - r for r in pre_ranks]
        min_pre = min(pre_states)
        prev_effective = self.effective
        if cfg.coding == "rlnc":
            effective = A
        else:
            effective = min(max(pre_ranks) + 1, A)
        self.effective = effective
        effective_size = max(effective - self.head + 1, 0)

        # 2. coding block
        stop_mode = decision.uncoded is not None
        if stop_mode:
            vector = CodedVector.unit(decision.uncoded)
            m.stop_slots += 1
        elif any(s > 0 for s in pre_states):
            inp = coding.CodingInput(A - self.head + 1, spaces, self.field,
                                     self.coding_rng, queue_start=self.head)
            out = coding.encode(cfg.coding, inp)
            vector = out.vector
            m.rlnc_draws += out.draws
        else:
            vector = CodedVector()
        if not isinstance(vector, Packed):
            vector = vector.pack(self.field.m, self.head - 1)
        m.coded_hist[len(vector)] += 1

        # 3. channels; every receiver draws every slot to keep streams aligned
        mu = cfg.mu
        received = [rng.random() < mu for rng in self.channel_rngs]

        # 4-6. reception, delivery, classification
        deliveries = []
        cum = self.cum_entry
        st_full, st_zero, st_lead = (self.stamped[k] for k in DELIVERY_MODES)
        delay_sum, delivered = m.delay_sum, m.delivered
        states = self.states
        state_hist = m.state_hist
        rlnc = cfg.coding == "rlnc"
        same_effective = effective == prev_effective and not stop_mode
        for r in range(R):
            space = spaces[r]
            pre = pre_states[r]
            innovative = False
            if received[r] and vector:
                innovative = space.insert(vector)
                if pre > 0 and not stop_mode and not innovative:
                    self._violation("innovation", f"receiver {r} got a non-innovative packet")
            post = A - space.rank
            if post != pre - innovative:
                self._violation("markov_state", f"receiver {r}")
            states[r] = post
            state_hist[post] += 1
            if post == 0:
                m.cycle_hist[t - self.last_zero[r]] += 1
                self.last_zero[r] = t

            # effective Markov state and coefficient-based opportunities
            deliverable = (
                received[r] and pre > 0 and same_effective
                and (rlnc or pre != min_pre)
            )
            if deliverable:
                s_star = effective - pre_ranks[r]
                m.deliverable[s_star] += 1
            if not innovative:
                continue
            old_dp = space.base
            new_dp = space.compact()
            if new_dp == old_dp:
                continue

            if deliverable:
                # at s* = 1 this completes the receiver, tagged zero-state
                m.coefficient_deliveries[s_star] += 1
            tag = classify_delivery(post, pre, pre_states, cfg.coding)
            m.class_counts[tag] += new_dp - old_dp
            deliveries.append((r, new_dp - old_dp, tag))
            if tag == ZERO and new_dp != A:
                self._violation("zero_state", f"receiver {r} has undelivered packets")
            elif tag == LEADER and not stop_mode and new_dp < effective:
                self._violation("leader_state", f"receiver {r} stopped at {new_dp} < {effective}")
            elif tag == COEFFICIENT and not stop_mode and vector.highest > prev_effective:
                # the transmission must come from last slot's effective space
                self._violation("lemma2", f"receiver {r} delivered from a new packet")

            # delay of packets (a, b] stamped at slot t, via prefix sums of entry slots
            delay_sum["full"] += (new_dp - old_dp) * t - (cum[new_dp] - cum[old_dp])
            delivered["full"] += new_dp - old_dp
            st_full[r] = new_dp
            if post == 0 or tag == LEADER:
                done = st_lead[r]
                delay_sum["zero_and_leader_only"] += (new_dp - done) * t - (cum[new_dp] - cum[done])
                delivered["zero_and_leader_only"] += new_dp - done
                st_lead[r] = new_dp
            if post == 0:
                done = st_zero[r]
                delay_sum["zero_state_only"] += (new_dp - done) * t - (cum[new_dp] - cum[done])
                delivered["zero_state_only"] += new_dp - done
                st_zero[r] = new_dp

        if R >= 2:
            m.joint_transitions[(states[0] - pre_states[0] + add,
                                 states[1] - pre_states[1] + add)] += 1
        m.leader_hist[min(states)] += 1

        # packets delivered to everyone leave the queue
        self.head = min(s.base for s in spaces) + 1
        m.slots = t

        return SlotTrace(
            t, add, vector, tuple(received), tuple(deliveries),
            len(vector), effective_size, stop_mode,
        )


def run(config: SimConfig, on_slot: Callable[[SlotTrace], None] | None = None) -> Metrics:
    """Simulate ``config.horizon`` slots and return the aggregated metrics."""
    sim = Simulation(config)
    step = sim.step
    if on_slot is None:
        for _ in range(config.horizon):
            step()
    else:
        for _ in range(config.horizon):
            on_slot(step())
    return sim.metrics


def iter_trace(config: SimConfig) -> Iterator[SlotTrace]:
    sim = Simulation(config)
    for _ in range(config.horizon):
        yield sim.step()
