"""Figure recipes and parameter sweeps.

Every recipe turns an :class:`ExperimentSpec` into one or more CSV tables.
Simulation points run through :func:`run_many`, which fans out to a process
pool when ``NCB_WORKERS`` is above 1; results come back in submission order
so files never depend on scheduling.

Repetition ``r`` of grid point ``g`` uses ``point_seed(seed, r, g)``.  Recipes
that compare schemes give every scheme at the same operating point the same
``g``, so the comparison runs on common random numbers.
"""

from __future__ import annotations

import itertools
import math
import os
from collections import Counter
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path
from statistics import fmean

from . import analytic
from .csvio import write_csv
from .sim import Metrics, SimConfig, run
from .seeds import point_seed

WORKERS_ENV = "NCB_WORKERS"

EXPERIMENTS = ("fig2", "fig3", "fig5", "fig6", "fig7", "fig8", "fig9", "fig10", "fig11", "custom")

GRID_KEYS = ("receivers", "mu", "coding", "rate", "lam", "td", "f", "field_exp", "delivery_mode")

_LAMBDAS = [0.3, 0.4, 0.5, 0.6, 0.65, 0.7, 0.75]

DEFAULT_GRIDS = {
    "fig2": {"lam": [0.3, 0.5, 0.6, 0.7, 0.75], "mu": [0.8]},
    "fig3": {"lam": [0.4, 0.45, 0.5, 0.55, 0.6, 0.65, 0.7, 0.75], "mu": [0.8], "receivers": [4]},
    "fig5": {"lam": [0.7], "mu": [0.8], "receivers": [2, 4, 8]},
    "fig6": {"lam": _LAMBDAS, "mu": [0.8], "receivers": [1, 2, 4, 10]},
    "fig7": {"lam": [0.7], "mu": [0.8], "receivers": [4, 8], "coding": ["a", "b", "rlnc"]},
    "fig8": {"lam": _LAMBDAS, "mu": [0.8], "receivers": [4], "coding": ["a", "b", "rlnc"]},
    "fig9": {"lam": [0.7], "mu": [0.8], "receivers": [4, 8]},
    "fig10": {
        "mu": [0.8], "receivers": [4],
        "lam": [0.5, 0.55, 0.6, 0.65, 0.7, 0.75],
        "td": [2, 3, 5, 7, 10, 15, 20, 30, 50, 70, 100],
        "f": [2, 3, 5, 10, 20, 50, 100, 200, 500],
    },
    "fig11": {"mu": [0.8], "receivers": [4], "f": [2, 10, 50, 100, 500]},
    "custom": {
        "receivers": [4], "mu": [0.8], "coding": ["b"], "rate": ["baseline"],
        "lam": [0.7], "delivery_mode": ["full"],
    },
}

# the zero-state delay at high load needs long runs to settle
DEFAULT_HORIZON = {"custom": 10_000, "fig3": 200_000}
RECIPE_HORIZON = 100_000

# largest state shown in occupancy and profile tables
K_MAX = 10


@dataclass
class ExperimentSpec:
    name: str = "custom"
    grids: dict = field(default_factory=dict)
    horizon: int | None = None
    seed: int = 0
    reps: int = 1
    out: Path = Path("results")
    plots: bool = False
    # cycle lengths tabulated by fig2
    t_max: int = 100

    def __post_init__(self) -> None:
        self.out = Path(self.out)

    def validate(self) -> None:
        if self.name not in EXPERIMENTS:
            raise ValueError(f"unknown experiment {self.name!r}; choose from {', '.join(EXPERIMENTS)}")
        if self.reps < 1:
            raise ValueError("repetitions must be >= 1")
        if self.horizon is not None and self.horizon < 1:
            raise ValueError("horizon must be >= 1")
        for key, values in self.grids.items():
            if key not in GRID_KEYS:
                raise ValueError(f"unknown grid parameter {key!r}")
            if not values:
                raise ValueError(f"grid {key!r} is empty")

    def grid(self, key: str) -> list:
        if key in self.grids:
            return list(self.grids[key])
        return list(DEFAULT_GRIDS[self.name].get(key, ()))

    def one(self, key: str, default=None):
        values = self.grid(key)
        return values[0] if values else default

    @property
    def slots(self) -> int:
        if self.horizon is not None:
            return self.horizon
        return DEFAULT_HORIZON.get(self.name, RECIPE_HORIZON)


def workers() -> int:
    raw = os.environ.get(WORKERS_ENV, "1")
    try:
        n = int(raw)
    except ValueError:
        raise ValueError(f"{WORKERS_ENV} must be an integer, got {raw!r}") from None
    return max(n, 1)


def run_many(configs: list[SimConfig]) -> list[Metrics]:
    for c in configs:
        c.validate()
    n = min(workers(), len(configs))
    if n <= 1:
        return [run(c) for c in configs]
    with ProcessPoolExecutor(max_workers=n) as pool:
        return list(pool.map(run, configs))


def _reps(base: SimConfig, spec: ExperimentSpec, point: int) -> list[SimConfig]:
    return [replace(base, seed=point_seed(spec.seed, r, point)) for r in range(spec.reps)]


def _batch(spec: ExperimentSpec, points: list[tuple[object, SimConfig, int]]):
    """Run every (key, config, point) for all reps; returns {key: [Metrics]}."""
    configs, keys = [], []
    for key, cfg, point in points:
        for c in _reps(cfg, spec, point):
            configs.append(c)
            keys.append(key)
    out: dict = {}
    for key, metrics in zip(keys, run_many(configs)):
        out.setdefault(key, []).append(metrics)
    return out


def _mean(values) -> float:
    values = [v for v in values if not math.isnan(v)]
    return fmean(values) if values else math.nan


def _stable(lams, mus):
    return [(lam, mu) for lam, mu in itertools.product(lams, mus) if lam < mu]


# -- recipes -----------------------------------------------------------------

def fig2(spec):
    rows = []
    for lam, mu in _stable(spec.grid("lam"), spec.grid("mu")):
        dist = analytic.cycle_distribution(lam, mu, spec.t_max)
        total = 0.0
        for T, prob in enumerate(dist, 1):
            total += float(prob)
            rows.append([lam, mu, lam / mu, T, float(prob), total])
    return [("fig2.csv", ["lam", "mu", "rho", "T", "p00", "cumulative"], rows)]


def fig3(spec):
    points = []
    R = spec.one("receivers", 4)
    pairs = _stable(spec.grid("lam"), spec.grid("mu"))
    for g, (lam, mu) in enumerate(pairs):
        cfg = SimConfig(receivers=R, mu=mu, lam=lam, coding=spec.one("coding", "b"),
                        horizon=spec.slots, delivery_mode="zero_state_only")
        points.append(((lam, mu), cfg, g))
    results = _batch(spec, points)
    sim_rows, ana_rows = [], []
    for lam, mu in pairs:
        ms = results[(lam, mu)]
        sim_rows.append([lam, mu, R, _mean(m.delay("zero_state_only") for m in ms), spec.reps])
        ana_rows.append([
            lam, mu,
            analytic.zero_state_delay_estimate(lam, mu, variant="consistent"),
            analytic.zero_state_delay_estimate(lam, mu, variant="printed"),
        ])
    return [
        ("fig3.csv", ["lam", "mu", "receivers", "delay", "reps"], sim_rows),
        ("fig3_analytic.csv", ["lam", "mu", "delay", "delay_printed"], ana_rows),
    ]


def fig5(spec):
    points = []
    keys = []
    for g, (R, (lam, mu)) in enumerate(
        itertools.product(spec.grid("receivers"), _stable(spec.grid("lam"), spec.grid("mu")))
    ):
        cfg = SimConfig(receivers=R, mu=mu, lam=lam, coding=spec.one("coding", "b"), horizon=spec.slots)
        points.append(((R, lam, mu), cfg, g))
        keys.append((R, lam, mu))
    results = _batch(spec, points)
    rows = []
    for R, lam, mu in keys:
        occ = [m.leader_occupancy() for m in results[(R, lam, mu)]]
        for k in range(K_MAX + 1):
            rows.append([R, lam, mu, k, _mean(o.get(k, 0.0) for o in occ),
                         analytic.leader_state_model(lam, mu, R, k)])
    return [("fig5.csv", ["receivers", "lam", "mu", "k", "simulated", "independent"], rows)]


def fig6(spec):
    points = []
    keys = []
    pairs = _stable(spec.grid("lam"), spec.grid("mu"))
    for R in spec.grid("receivers"):
        for g, (lam, mu) in enumerate(pairs):
            cfg = SimConfig(receivers=R, mu=mu, lam=lam, coding=spec.one("coding", "b"),
                            horizon=spec.slots, delivery_mode="zero_and_leader_only")
            points.append(((R, lam, mu), cfg, g))
            keys.append((R, lam, mu))
    results = _batch(spec, points)
    rows = []
    for R, lam, mu in keys:
        ms = results[(R, lam, mu)]
        rows.append([lam, mu, R,
                     _mean(m.delay("zero_state_only") for m in ms),
                     _mean(m.delay("zero_and_leader_only") for m in ms)])
    return [("fig6.csv", ["lam", "mu", "receivers", "zero_state_delay", "leader_state_delay"], rows)]


def fig7(spec):
    points = []
    keys = []
    lam, mu = spec.one("lam"), spec.one("mu")
    for g, R in enumerate(spec.grid("receivers")):
        for coding in spec.grid("coding"):
            cfg = SimConfig(receivers=R, mu=mu, lam=lam, coding=coding, horizon=spec.slots,
                            field_exp=spec.one("field_exp"))
            points.append(((coding, R), cfg, g))
            keys.append((coding, R, cfg.field().size))
    results = _batch(spec, points)
    rows = []
    for coding, R, M in keys:
        ms = results[(coding, R)]
        for s in range(1, K_MAX + 1):
            deliverable = sum(m.deliverable[s] for m in ms)
            delivered = sum(m.coefficient_deliveries[s] for m in ms)
            if not deliverable:
                continue
            rows.append([coding, R, M, s, deliverable, delivered, delivered / deliverable,
                         analytic.rlnc_delivery_probability(M, s)])
    header = ["coding", "receivers", "field_size", "s_star", "deliverable", "deliveries",
              "probability", "rlnc_formula"]
    return [("fig7.csv", header, rows)]


def fig8(spec):
    points = []
    R = spec.one("receivers", 4)
    codings = spec.grid("coding")
    pairs = _stable(spec.grid("lam"), spec.grid("mu"))
    for g, (lam, mu) in enumerate(pairs):
        for coding in codings:
            cfg = SimConfig(receivers=R, mu=mu, lam=lam, coding=coding, horizon=spec.slots,
                            field_exp=spec.one("field_exp"))
            points.append(((coding, lam, mu), cfg, g))
    results = _batch(spec, points)
    rows = []
    for lam, mu in pairs:
        for coding in codings:
            rows.append([lam, mu, R, coding, _mean(m.delay("full") for m in results[(coding, lam, mu)])])
        # the state process does not depend on the coding scheme
        ref = results[(codings[0], lam, mu)]
        rows.append([lam, mu, R, "zero_state", _mean(m.delay("zero_state_only") for m in ref)])
        rows.append([lam, mu, R, "leader_state", _mean(m.delay("zero_and_leader_only") for m in ref)])
    return [("fig8.csv", ["lam", "mu", "receivers", "series", "delay"], rows)]


def fig9(spec):
    points = []
    keys = []
    lam, mu = spec.one("lam"), spec.one("mu")
    for g, R in enumerate(spec.grid("receivers")):
        cfg = SimConfig(receivers=R, mu=mu, lam=lam, coding=spec.one("coding", "b"), horizon=spec.slots)
        points.append((R, cfg, g))
        keys.append(R)
    results = _batch(spec, points)
    rows = []
    for R in keys:
        hist = sum((m.coded_hist for m in results[R]), start=Counter())
        total = sum(hist.values())
        for n in range(max(hist) + 1):
            rows.append([R, lam, mu, n, hist[n] / total])
    return [("fig9.csv", ["receivers", "lam", "mu", "n", "probability"], rows)]


def fig10(spec):
    points = []
    keys = []
    mu = spec.one("mu")
    coding = spec.one("coding", "b")
    for R in spec.grid("receivers"):
        sweeps = [("baseline", "lam", spec.grid("lam")),
                  ("threshold", "td", spec.grid("td")),
                  ("dynamic", "f", spec.grid("f"))]
        for scheme, param, values in sweeps:
            for value in values:
                kwargs = {"lam": None, param: value}
                cfg = SimConfig(receivers=R, mu=mu, coding=coding, rate=scheme,
                                horizon=spec.slots, **kwargs)
                # one stream per receiver count keeps the schemes on common numbers
                points.append(((R, scheme, value), cfg, R))
                keys.append((R, scheme, value))
    results = _batch(spec, points)
    rows = []
    for R, scheme, value in keys:
        ms = results[(R, scheme, value)]
        rows.append([R, scheme, value, _mean(m.throughput("full") for m in ms),
                     _mean(m.delay("full") for m in ms)])
    return [("fig10.csv", ["receivers", "scheme", "param", "throughput", "delay"], rows)]


def fig11(spec):
    points = []
    R, mu = spec.one("receivers"), spec.one("mu")
    fs = spec.grid("f")
    for f in fs:
        cfg = SimConfig(receivers=R, mu=mu, coding=spec.one("coding", "b"), rate="dynamic",
                        lam=None, f=f, horizon=spec.slots, record_lambda=True)
        points.append((f, cfg, 0))
    spec_one = replace(spec, reps=1)
    results = _batch(spec_one, points)
    stride = max(1, spec.slots // 1000)
    rows = []
    for f in fs:
        series = results[f][0].lambda_est
        for t in range(stride, len(series) + 1, stride):
            rows.append([f, t, series[t - 1]])
    return [("fig11.csv", ["f", "t", "lambda_est"], rows)]


CUSTOM_HEADER = [
    "receivers", "mu", "coding", "rate", "lam", "td", "f", "field_size", "delivery_mode",
    "horizon", "reps", "throughput", "delay", "delay_zero_state", "delay_zero_leader",
    "addition_rate", "uncoded_fraction",
]


def custom_configs(spec) -> list[SimConfig]:
    """Cartesian product of the grids, keeping only each rate scheme's own parameter."""
    seen = []
    for combo in itertools.product(*(spec.grid(k) or [None] for k in GRID_KEYS)):
        params = dict(zip(GRID_KEYS, combo))
        cfg = SimConfig(horizon=spec.slots, **{k: v for k, v in params.items() if v is not None})
        if cfg.rate == "baseline":
            cfg.td = cfg.f = None
        elif cfg.rate == "delay_threshold":
            cfg.lam = cfg.f = None
        else:
            cfg.lam = cfg.td = None
        if cfg not in seen:
            seen.append(cfg)
    return seen


def metrics_row(cfg: SimConfig, ms: list[Metrics]) -> list:
    def mean(fn):
        return _mean(fn(m) for m in ms)

    return [
        cfg.receivers, cfg.mu, cfg.coding, cfg.rate, cfg.lam, cfg.td, cfg.f,
        cfg.field().size, cfg.delivery_mode, cfg.horizon, len(ms),
        mean(lambda m: m.throughput()),
        mean(lambda m: m.delay()),
        mean(lambda m: m.delay("zero_state_only")),
        mean(lambda m: m.delay("zero_and_leader_only")),
        mean(lambda m: m.addition_rate),
        mean(lambda m: m.uncoded_fraction()),
    ]


def custom(spec):
    configs = custom_configs(spec)
    results = _batch(spec, [(i, c, i) for i, c in enumerate(configs)])
    rows = [metrics_row(c, results[i]) for i, c in enumerate(configs)]
    return [("custom.csv", CUSTOM_HEADER, rows)]


RECIPES = {
    "fig2": fig2, "fig3": fig3, "fig5": fig5, "fig6": fig6, "fig7": fig7,
    "fig8": fig8, "fig9": fig9, "fig10": fig10, "fig11": fig11, "custom": custom,
}


def run_experiment(spec: ExperimentSpec) -> list[Path]:
    """Write the recipe's CSV files (plus PNGs if requested); returns their paths."""
    spec.validate()
    written = []
    tables = RECIPES[spec.name](spec)
    for filename, header, rows in tables:
        written.append(write_csv(spec.out / filename, header, rows))
    if spec.plots:
        from . import plotting

        written.extend(plotting.render(spec.name, spec.out))
    return written

