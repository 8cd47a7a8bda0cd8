"""Monte-Carlo blocking simulation of one shared band.

Requests of size 2**n arrive in independent Poisson streams, one per
size class n, with rate lam / 2**n each, hold their bins for an
exponential time of mean ``holding_mean``, and are lost if blocked.
Scaling class-n arrivals by 2**-n makes every class offer the same
bin-load, so the normalized offered load is

    G = |classes| * lam * holding_mean / 2**m.

Four admission policies are simulated: the two single-stream bin-filling
policies (``min_small_change``, ``random``), ``multistream`` gathering,
and an ``ofdma`` reference that tracks only a free-bin counter (any
subcarrier may go to any user, so it blocks exactly when fewer bins are
free than requested and never on fragmentation).

Blocking is reported load-weighted: P_B sums 2**n over blocked class-n
arrivals divided by the same sum over all arrivals, and P_f counts only
blocks that happen while enough bins are free (pure fragmentation
losses).  Replications differ only in their seed substream; every
metric is deterministic for a given config, including the CSV output.
"""

from __future__ import annotations

import csv
import heapq
from dataclasses import dataclass
from random import Random
from typing import Iterable, Sequence, TextIO

import numpy as np

from .allocator import (
    MIN_SMALL_CHANGE,
    RANDOM,
    BinState,
    Request,
    admit,
    admit_multistream,
    release,
)
from .mapping import RadixScheme

OFDMA = "ofdma"
MULTISTREAM = "multistream"
POLICIES = (MIN_SMALL_CHANGE, RANDOM, OFDMA, MULTISTREAM)

CSV_COLUMNS = ("policy", "mix", "G", "P_B", "P_B_ci", "P_f", "P_f_ci", "S",
               "seed", "replications")


@dataclass(frozen=True)
class TrafficModel:
    """Poisson size-class mix: class n arrives at lam / 2**n."""

    m: int
    lam: float
    classes: tuple[int, ...]
    holding_mean: float = 1.0
    mix: str = "custom"

    def __post_init__(self) -> None:
        if self.m < 0:
            raise ValueError(f"m must be >= 0, got {self.m}")
        if self.lam < 0:
            raise ValueError(f"lam must be >= 0, got {self.lam}")
        if not self.holding_mean > 0:
            raise ValueError(f"holding_mean must be > 0, got {self.holding_mean}")
        cl = tuple(sorted(set(self.classes)))
        if not cl:
            raise ValueError("need at least one size class")
        if cl != tuple(self.classes):
            raise ValueError("classes must be sorted and unique")
        if cl[0] < 0 or cl[-1] > self.m:
            raise ValueError(f"classes {cl} out of range 0..{self.m}")

    @property
    def scheme(self) -> RadixScheme:
        return RadixScheme.power_of_two(self.m)

    @classmethod
    def full_mix(cls, m: int, *, lam: float | None = None, G: float | None = None,
                 holding_mean: float = 1.0) -> "TrafficModel":
        """All classes 0..m; give either lam or the normalized offered load G."""
        classes = tuple(range(m + 1))
        lam = _resolve_lam(m, lam, G, len(classes), holding_mean)
        return cls(m, lam, classes, holding_mean, mix="full")

    @classmethod
    def limited_mix(cls, m: int, *, lam: float | None = None, G: float | None = None,
                    holding_mean: float = 1.0) -> "TrafficModel":
        """Classes 0..m//2 only (no request larger than sqrt of the band)."""
        classes = tuple(range(m // 2 + 1))
        lam = _resolve_lam(m, lam, G, len(classes), holding_mean)
        return cls(m, lam, classes, holding_mean, mix="limited")


def _resolve_lam(m: int, lam: float | None, G: float | None, n_classes: int,
                 holding_mean: float) -> float:
    if (lam is None) == (G is None):
        raise ValueError("give exactly one of lam or G")
    if lam is not None:
        return lam
    return G * (1 << m) / (n_classes * holding_mean)


def offered_load(traffic: TrafficModel) -> float:
    """Normalized offered load G: total offered bin-load over band size."""
    return len(traffic.classes) * traffic.lam * traffic.holding_mean / (1 << traffic.m)


@dataclass(frozen=True)
class SimConfig:
    traffic: TrafficModel
    policy: str
    seed: int
    warmup_time: float = 1000.0
    measure_time: float = 20000.0
    replications: int = 10

    def __post_init__(self) -> None:
        if self.policy not in POLICIES:
            raise ValueError(f"policy must be one of {POLICIES}, got {self.policy!r}")
        if self.warmup_time < 0 or not self.measure_time > 0:
            raise ValueError("need warmup_time >= 0 and measure_time > 0")
        if self.replications < 1:
            raise ValueError(f"replications must be >= 1, got {self.replications}")


@dataclass(frozen=True)
class SimMetrics:
    """Aggregated result of one config; counters are summed over replications."""

    policy: str
    mix: str
    G: float
    seed: int
    replications: int
    P_B: float
    P_B_ci: float
    P_f: float
    P_f_ci: float
    S: float
    measured_G: float
    mean_occupancy: float
    r: tuple[int, ...]
    r_B: tuple[int, ...]
    r_f: tuple[int, ...]
    per_rep_P_B: tuple[float, ...]
    per_rep_P_f: tuple[float, ...]
    per_rep_measured_G: tuple[float, ...]


def _traffic_trace(traffic: TrafficModel, horizon: float, rep_ss: np.random.SeedSequence):
    """Arrival times, size classes, and holding times, merged across classes.

    The trace depends only on the seed substream, never on the policy, so
    runs with different policies at one seed see identical traffic.
    """
    class_seeds = rep_ss.spawn(len(traffic.classes) + 1)
    parts_t, parts_n, parts_h = [], [], []
    for idx, n in enumerate(traffic.classes):
        gen = np.random.default_rng(class_seeds[idx])
        if traffic.lam == 0:
            parts_t.append(np.empty(0))
            parts_n.append(np.empty(0, dtype=np.int64))
            parts_h.append(np.empty(0))
            continue
        scale = (1 << n) / traffic.lam  # mean interarrival of class n
        expect = horizon / scale
        count = int(expect + 6.0 * expect ** 0.5 + 16.0)
        times = np.cumsum(gen.exponential(scale, size=count))
        while times[-1] < horizon:
            more = np.cumsum(gen.exponential(scale, size=max(16, count // 8)))
            times = np.concatenate([times, times[-1] + more])
        k = int(np.searchsorted(times, horizon))
        times = times[:k]
        parts_t.append(times)
        parts_n.append(np.full(k, n, dtype=np.int64))
        parts_h.append(gen.exponential(traffic.holding_mean, size=k))
    all_t = np.concatenate(parts_t)
    order = np.argsort(all_t, kind="stable")
    words = class_seeds[-1].generate_state(4, np.uint32)
    admission_seed = int.from_bytes(words.tobytes(), "little")
    return (all_t[order], np.concatenate(parts_n)[order],
            np.concatenate(parts_h)[order], admission_seed)


def _run_replication(cfg: SimConfig, rep_ss: np.random.SeedSequence) -> dict:
    """One independent event loop; returns raw per-class counters."""
    tm = cfg.traffic
    m = tm.m
    band = 1 << m
    warm = cfg.warmup_time
    horizon = warm + cfg.measure_time
    times, klass, holds, adm_seed = _traffic_trace(tm, horizon, rep_ss)

    policy = cfg.policy
    ofdma = policy == OFDMA
    multistream = policy == MULTISTREAM
    adm_rng = Random(adm_seed) if policy == RANDOM else None
    state = None if ofdma else BinState(tm.scheme)

    r = [0] * (m + 1)
    r_blocked = [0] * (m + 1)
    r_frag = [0] * (m + 1)
    free = band
    occupied = 0
    occ_area = 0.0
    prev_t = warm
    heap: list[tuple[float, int, int]] = []
    push = heapq.heappush
    pop = heapq.heappop

    total = len(times)
    chunk = 1 << 16
    for base in range(0, total, chunk):
        ts = times[base : base + chunk].tolist()
        ns = klass[base : base + chunk].tolist()
        hs = holds[base : base + chunk].tolist()
        for i, t in enumerate(ts):
            while heap and heap[0][0] <= t:
                dep_t, rid, sz = pop(heap)
                if dep_t > prev_t:
                    occ_area += occupied * (dep_t - prev_t)
                    prev_t = dep_t
                occupied -= sz
                if ofdma:
                    free += sz
                else:
                    release(state, rid)
            n = ns[i]
            size = 1 << n
            counted = t >= warm
            if counted:
                r[n] += 1
            if ofdma:
                granted = free >= size
                if granted:
                    free -= size
            elif multistream:
                granted = admit_multistream(state, Request(base + i, size)).granted
            else:
                granted = admit(state, Request(base + i, size), policy, adm_rng).granted
            if granted:
                if t > prev_t:
                    occ_area += occupied * (t - prev_t)
                    prev_t = t
                occupied += size
                push(heap, (t + hs[i], base + i, size))
            elif counted:
                r_blocked[n] += 1
                free_now = free if ofdma else state.free_count
                if free_now >= size:
                    r_frag[n] += 1
    if horizon > prev_t:
        occ_area += occupied * (horizon - prev_t)
    return {"r": r, "r_B": r_blocked, "r_f": r_frag, "occ_area": occ_area}


def _ratio(weights: Sequence[int], num: Sequence[int], den: Sequence[int]) -> float:
    lo = sum(w * x for w, x in zip(weights, num))
    hi = sum(w * x for w, x in zip(weights, den))
    return lo / hi if hi else 0.0


def _ci_half_width(xs: Sequence[float]) -> float:
    if len(xs) < 2:
        return 0.0
    return 1.96 * float(np.std(xs, ddof=1)) / len(xs) ** 0.5


def run(cfg: SimConfig) -> SimMetrics:
    """Run all replications of one config and aggregate."""
    tm = cfg.traffic
    m = tm.m
    weights = [1 << n for n in range(m + 1)]
    root = np.random.SeedSequence(cfg.seed)
    reps = [_run_replication(cfg, ss) for ss in root.spawn(cfg.replications)]

    pb = [_ratio(weights, rep["r_B"], rep["r"]) for rep in reps]
    pf = [_ratio(weights, rep["r_f"], rep["r"]) for rep in reps]
    denom = (1 << m) * cfg.measure_time
    mg = [sum(w * x for w, x in zip(weights, rep["r"])) * tm.holding_mean / denom
          for rep in reps]
    occ = [rep["occ_area"] / cfg.measure_time for rep in reps]

    def total(key: str) -> tuple[int, ...]:
        return tuple(sum(rep[key][n] for rep in reps) for n in range(m + 1))

    p_b = float(np.mean(pb))
    p_f = float(np.mean(pf))
    return SimMetrics(
        policy=cfg.policy,
        mix=tm.mix,
        G=offered_load(tm),
        seed=cfg.seed,
        replications=cfg.replications,
        P_B=p_b,
        P_B_ci=_ci_half_width(pb),
        P_f=p_f,
        P_f_ci=_ci_half_width(pf),
        S=1.0 - p_b,
        measured_G=float(np.mean(mg)),
        mean_occupancy=float(np.mean(occ)),
        r=total("r"),
        r_B=total("r_B"),
        r_f=total("r_f"),
        per_rep_P_B=tuple(pb),
        per_rep_P_f=tuple(pf),
        per_rep_measured_G=tuple(mg),
    )


def sweep(configs: Iterable[SimConfig]) -> list[SimMetrics]:
    """Run several configs in order (typically a policy x load grid)."""
    return [run(cfg) for cfg in configs]


def build_configs(doc: dict) -> list[SimConfig]:
    """Expand a JSON config document into a list of SimConfigs.

    Expected keys: m (int); mix ("full" | "limited") or classes (list of
    ints); G (number or list) or lam (number or list); policies (list) or
    policy (str); seed; and optional warmup_time, measure_time,
    replications, holding_mean.
    """
    if not isinstance(doc, dict):
        raise ValueError("config must be a JSON object")
    known = {"m", "mix", "classes", "G", "lam", "policies", "policy", "seed",
             "warmup_time", "measure_time", "replications", "holding_mean"}
    unknown = set(doc) - known
    if unknown:
        raise ValueError(f"unknown config keys: {sorted(unknown)}")
    try:
        m = int(doc["m"])
        seed = int(doc["seed"])
    except KeyError as exc:
        raise ValueError(f"config is missing required key {exc.args[0]!r}") from None
    holding = float(doc.get("holding_mean", 1.0))

    if "policies" in doc:
        policies = list(doc["policies"])
    elif "policy" in doc:
        policies = [doc["policy"]]
    else:
        raise ValueError("config is missing 'policy' or 'policies'")

    if ("G" in doc) == ("lam" in doc):
        raise ValueError("give exactly one of 'G' or 'lam'")
    loads = doc.get("G", doc.get("lam"))
    if not isinstance(loads, (list, tuple)):
        loads = [loads]
    by_G = "G" in doc

    if "classes" in doc:
        if "mix" in doc:
            raise ValueError("give 'mix' or 'classes', not both")
        classes = tuple(int(n) for n in doc["classes"])

        def make_traffic(x: float) -> TrafficModel:
            lam = x if not by_G else _resolve_lam(m, None, x, len(classes), holding)
            return TrafficModel(m, lam, classes, holding)
    else:
        mix = doc.get("mix", "full")
        if mix not in ("full", "limited"):
            raise ValueError(f"mix must be 'full' or 'limited', got {mix!r}")
        factory = TrafficModel.full_mix if mix == "full" else TrafficModel.limited_mix

        def make_traffic(x: float) -> TrafficModel:
            return factory(m, G=x, holding_mean=holding) if by_G else \
                factory(m, lam=x, holding_mean=holding)

    kwargs = {}
    for key in ("warmup_time", "measure_time"):
        if key in doc:
            kwargs[key] = float(doc[key])
    if "replications" in doc:
        kwargs["replications"] = int(doc["replications"])

    return [
        SimConfig(traffic=make_traffic(float(x)), policy=str(pol), seed=seed, **kwargs)
        for pol in policies
        for x in loads
    ]


def write_csv(metrics: Iterable[SimMetrics], out: TextIO) -> None:
    """Write the contractual result table: one row per config."""
    w = csv.writer(out, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    for mt in metrics:
        w.writerow([mt.policy, mt.mix, mt.G, mt.P_B, mt.P_B_ci,
                    mt.P_f, mt.P_f_ci, mt.S, mt.seed, mt.replications])
