"""Closed-form results for the single-receiver Markov state chain.

Under Bernoulli(lambda) additions and a channel that succeeds with
probability mu, a receiver's knowledge gap moves up with probability
``p = lambda (1 - mu)``, down with ``q = (1 - lambda) mu`` and otherwise
stays put.  Everything here is a function of (lambda, mu) and is used both as
an oracle for the simulator and to draw the analytic curves.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import gammaln

DEFAULT_T_MAX = 1000

DELAY_VARIANTS = ("printed", "consistent")


@dataclass(frozen=True)
class ChainParams:
    lam: float
    mu: float

    def __post_init__(self) -> None:
        if not (0 <= self.lam <= 1 and 0 <= self.mu <= 1):
            raise ValueError("lambda and mu must lie in [0, 1]")

    @property
    def p(self) -> float:
        return self.lam * (1 - self.mu)

    @property
    def q(self) -> float:
        return (1 - self.lam) * self.mu

    @property
    def rho(self) -> float:
        return self.lam / self.mu

    @property
    def ratio(self) -> float:
        """p/q, the geometric decay rate of the stationary law."""
        return self.p / self.q

    def require_stable(self) -> None:
        if not self.lam < self.mu:
            raise ValueError(f"no stationary law for lambda={self.lam} >= mu={self.mu}")


def _params(lam, mu) -> ChainParams:
    return lam if isinstance(lam, ChainParams) else ChainParams(lam, mu)


def stationary(lam: float, mu: float, k: int) -> float:
    """Long-run probability of Markov state ``k``."""
    cp = _params(lam, mu)
    cp.require_stable()
    a = cp.ratio
    return (1 - a) * a**k


def stationary_tail(lam: float, mu: float, k: int) -> float:
    """Probability of being in a state >= ``k``."""
    cp = _params(lam, mu)
    cp.require_stable()
    return cp.ratio**k


def leader_state_model(lam: float, mu: float, receivers: int, k: int) -> float:
    """Leader occupancy of state ``k`` if receivers were independent."""
    cp = _params(lam, mu)
    cp.require_stable()
    if receivers < 1:
        raise ValueError("need at least one receiver")
    a = cp.ratio
    return (1 - a**receivers) * a ** (receivers * k)


def cycle_distribution(lam: float, mu: float, t_max: int) -> np.ndarray:
    """``P00(T)`` for T = 1..t_max as an array indexed from 0.

    A cycle longer than one slot is one up-step, a Dyck path of 2k-2 moves,
    one down-step, and T-2k pauses anywhere strictly inside.  Terms are
    summed in log space so T in the thousands does not overflow.
    """
    cp = _params(lam, mu)
    p, q = cp.p, cp.q
    r = 1 - p - q
    out = np.zeros(t_max)
    if t_max < 1:
        return out
    out[0] = 1 - p
    if p == 0 or q == 0:
        return out
    log_pq = math.log(p) + math.log(q)
    log_r = math.log(r) if r > 0 else -math.inf
    for T in range(2, t_max + 1):
        k = np.arange(1, T // 2 + 1)
        pauses = T - 2 * k
        # Catalan(k-1) = C(2k-2, k-1) / k
        log_cat = gammaln(2 * k - 1) - gammaln(k) - gammaln(k + 1)
        log_place = gammaln(T - 1) - gammaln(2 * k - 1) - gammaln(T - 2 * k + 1)
        with np.errstate(invalid="ignore"):
            log_pause = np.where(pauses > 0, pauses * log_r, 0.0)
        terms = log_cat + log_place + k * log_pq + log_pause
        top = terms.max()
        if top == -math.inf:
            continue
        out[T - 1] = math.exp(top) * np.exp(terms - top).sum()
    return out


def cycle_probability(lam: float, mu: float, T: int) -> float:
    """Probability that a receiver leaving zero state first returns after ``T`` slots."""
    if T < 1:
        raise ValueError("cycle length must be >= 1")
    return float(cycle_distribution(lam, mu, T)[T - 1])


def expected_cycle_mass(lam: float, mu: float, t_max: int) -> float:
    """Truncated total ``sum_{T<=t_max} P00(T)``; tends to 1 when lambda < mu."""
    return float(cycle_distribution(lam, mu, t_max).sum())


def zero_state_delay_estimate(
    lam: float, mu: float, t_max: int = DEFAULT_T_MAX, variant: str = "printed"
) -> float:
    """Mean delivery delay when packets are only delivered in zero state.

    A cycle of length T >= 2 carries an estimated ``1 + lam (T-2)`` packets
    with mean delay ``T/2`` each.  ``variant="printed"`` keeps the standalone
    constant 1 in the packet-count denominator; ``"consistent"`` replaces it
    by the probability mass of the T >= 2 cycles, which is what the per-cycle
    packet count implies.
    """
    if variant not in DELAY_VARIANTS:
        raise ValueError(f"variant must be one of {DELAY_VARIANTS}")
    if t_max < 2:
        raise ValueError("t_max must be >= 2")
    cp = _params(lam, mu)
    cp.require_stable()
    lam = cp.lam
    P = cycle_distribution(cp.lam, cp.mu, t_max)[1:]
    T = np.arange(2, t_max + 1, dtype=float)
    numerator = float((P * (T + 0.5 * lam * T * (T - 2))).sum())
    extra = float((P * lam * (T - 2)).sum())
    constant = 1.0 if variant == "printed" else float(P.sum())
    return numerator / (lam * cp.mu + constant + extra)


def rlnc_delivery_probability(field_size: int, s_star: int) -> float:
    """Chance a uniformly drawn innovative RLNC vector delivers the next packet."""
    if field_size < 2 or s_star < 1:
        raise ValueError("need field size >= 2 and effective state >= 1")
    return (field_size - 1) / (field_size**s_star - 1)


def absorbing_time_to_zero(lam: float, mu: float, n_states: int = 200) -> np.ndarray:
    """Mean hitting times of state 0 on the chain truncated at ``n_states``.

    Solves ``E = 1 + P E`` on the transient states 1..n_states-1 with the top
    state reflecting.  Returns an array with ``E[0] = 0``.
    """
    cp = _params(lam, mu)
    p, q = cp.p, cp.q
    n = n_states - 1
    A = np.zeros((n, n))
    for i in range(n):
        A[i, i] = p + q
        if i > 0:
            A[i, i - 1] = -q
        if i < n - 1:
            A[i, i + 1] = -p
        else:
            A[i, i] = q
    E = np.linalg.solve(A, np.ones(n))
    return np.concatenate(([0.0], E))
