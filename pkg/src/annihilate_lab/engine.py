"""Reference event-driven continuous-time DLAS simulation.

Each particle owns a putative trajectory: a lazy stream of Exp(1) waits
(scaled by the owner's jump rate) and direction draws, keyed by
(run seed, initial site).  A particle moves along its trajectory until
it jumps onto a site holding opposite-type particles, at which point it
annihilates with the opposite particle of highest braveness and both
die.  Root occupation time is integrated exactly over inter-event
intervals; nothing is time-discretized.

The site-keyed randomness layout is a contract: deleting, retyping, or
reordering particles elsewhere never changes a given particle's draws,
which is what makes the shared-randomness couplings checkable pathwise.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass, field

from .graphs import ESCAPED, Graph, GraphSpec, make_graph, site_sort_key
from .streams import path_stream, site_braveness, site_type_is_a


@dataclass(frozen=True)
class SimParams:
    """Simulation inputs.  The region is a finite, materialized site set;
    initial_kinds, when given, fully replaces the Bernoulli(p) type draw
    (sites absent from it start empty)."""

    graph: GraphSpec
    region: tuple
    p: float
    lambda_a: float
    lambda_b: float
    horizon_t: float
    seed: int
    sample_times: tuple = ()
    initial_kinds: tuple | None = None  # ((site, "A"|"B"), ...)

    def __post_init__(self):
        if not 0.0 <= self.p <= 1.0:
            raise ValueError("p must lie in [0, 1]")
        if self.lambda_a < 0 or self.lambda_b < 0:
            raise ValueError("jump rates must be nonnegative")
        if self.horizon_t <= 0:
            raise ValueError("horizon must be positive")
        # The region is finite by construction (a materialized tuple); an
        # empty region is a legal degenerate system (restrictions may empty
        # one side of a split).
        ts = tuple(float(t) for t in self.sample_times)
        if any(t2 < t1 for t1, t2 in zip(ts, ts[1:])):
            raise ValueError("sample times must be sorted")
        if ts and (ts[0] < 0 or ts[-1] > self.horizon_t):
            raise ValueError("sample times must lie in [0, horizon]")
        object.__setattr__(self, "sample_times", ts)
        object.__setattr__(self, "region", tuple(self.region))

    def kinds_map(self) -> dict | None:
        if self.initial_kinds is None:
            return None
        return dict(self.initial_kinds)


class Particle:
    __slots__ = ("pid", "number", "kind", "site", "site0", "brav", "stream",
                 "rate", "pending", "alive", "escaped", "jumps", "death_time",
                 "first_root", "root_entered")

    def __init__(self, pid, kind, site, brav, stream, rate):
        self.pid = pid
        self.number = None       # 1-based order among A-particles
        self.kind = kind
        self.site = site
        self.site0 = site
        self.brav = brav
        self.stream = stream
        self.rate = rate
        self.pending = None
        self.alive = True
        self.escaped = False
        self.jumps = 0
        self.death_time = None
        self.first_root = None
        self.root_entered = None


@dataclass
class Configuration:
    """Live state: signed counts derive from the per-site registries."""

    graph: Graph
    particles: list
    site_particles: dict
    initial_kinds: dict

    def zeta(self, site) -> int:
        plist = self.site_particles.get(site)
        if not plist:
            return 0
        a = sum(1 for q in plist if q.kind == "A")
        return a if a else -len(plist)

    def snapshot(self) -> dict:
        out = {}
        for site, plist in self.site_particles.items():
            if not plist:
                continue
            a = sum(1 for q in plist if q.kind == "A")
            out[site] = a if a else -len(plist)
        return out

    def live_counts(self) -> tuple:
        a = sum(1 for p in self.particles if p.alive and p.kind == "A")
        b = sum(1 for p in self.particles if p.alive and p.kind == "B")
        return a, b


def init_configuration(params: SimParams, graph: Graph | None = None) -> Configuration:
    """One particle per region site: type A with probability p (or the
    explicit override), braveness and trajectory from site-keyed streams."""
    graph = graph or make_graph(params.graph)
    kinds = params.kinds_map()
    if kinds is None:
        sites = sorted(params.region, key=lambda s: site_sort_key(graph, s))
    else:
        sites = sorted(kinds, key=lambda s: site_sort_key(graph, s))
    particles = []
    site_particles = {}
    initial = {}
    for pid, site in enumerate(sites):
        if kinds is None:
            kind = "A" if site_type_is_a(params.seed, site, params.p) else "B"
        else:
            kind = kinds[site]
            if kind not in ("A", "B"):
                raise ValueError(f"bad kind {kind!r} at {site!r}")
        rate = params.lambda_a if kind == "A" else params.lambda_b
        p = Particle(pid, kind, site, site_braveness(params.seed, site),
                     path_stream(params.seed, site), rate)
        particles.append(p)
        site_particles.setdefault(site, []).append(p)
        initial[site] = kind
    number = 0
    for p in particles:  # already in distance-then-lexicographic order
        if p.kind == "A":
            number += 1
            p.number = number
    return Configuration(graph=graph, particles=particles,
                         site_particles=site_particles, initial_kinds=initial)


@dataclass
class ObservableSeries:
    sample_times: tuple
    n_root: list
    v_at: list
    v_final: float
    horizon: float
    seed: int
    visits: dict | None = None        # pid -> (first_root_time, root_occupancy)
    window_mean: list | None = None


@dataclass
class CrsResult:
    series: ObservableSeries
    config: Configuration
    counters: dict
    trace: list | None = None         # zeta snapshots at sample times
    jump_counts: dict | None = None   # pid -> number of jumps
    arrivals: dict | None = None      # pid -> {site: first arrival time}
    params: SimParams | None = None


def run_crs(params: SimParams, *, record_trace: bool = False,
            window: tuple | None = None, record_visits: bool = False,
            record_jumps: bool = False, record_arrivals: bool = False) -> CrsResult:
    """Run the reference construction to the horizon.

    Event scheduling is a priority queue keyed by absolute jump time;
    memorylessness makes lazy per-jump rescheduling exact.  Equal-time
    ties (probability zero) break by particle id.
    """
    graph = make_graph(params.graph)
    config = init_configuration(params, graph)
    root = graph.root

    heap = []
    for p in config.particles:
        if p.rate > 0:
            p.pending = p.stream.exp1() / p.rate
            heapq.heappush(heap, (p.pending, p.pid))
        if record_arrivals or record_visits:
            if p.site == root and p.kind == "A":
                p.first_root = 0.0
                p.root_entered = 0.0

    arrivals = None
    if record_arrivals:
        arrivals = {p.pid: {p.site: 0.0} for p in config.particles}

    root_a = sum(1 for q in config.site_particles.get(root, ()) if q.kind == "A")
    v_acc = 0.0
    t_last = 0.0
    horizon = params.horizon_t
    samples = params.sample_times
    si = 0
    n_root_out, v_out, trace_out, window_out = [], [], [], []
    window_set = set(window) if window else None
    root_occupancy = {} if record_visits else None
    counters = {"annihilations": 0, "escapes": 0, "events": 0,
                "dead_a": 0, "dead_b": 0}

    def emit_samples(up_to: float):
        nonlocal si
        while si < len(samples) and samples[si] < up_to:
            s = samples[si]
            n_root_out.append(root_a)
            v_out.append(v_acc + root_a * (s - t_last))
            if record_trace:
                trace_out.append(config.snapshot())
            if window_set is not None:
                tot = 0
                for w in window_set:
                    plist = config.site_particles.get(w)
                    if plist:
                        tot += sum(1 for q in plist if q.kind == "A")
                window_out.append(tot / len(window_set))
            si += 1

    def leave_root(p: Particle, t: float):
        nonlocal root_a
        if p.kind == "A" and p.site == root:
            root_a -= 1
            if root_occupancy is not None and p.root_entered is not None:
                root_occupancy[p.pid] = (root_occupancy.get(p.pid, 0.0)
                                         + t - p.root_entered)
                p.root_entered = None

    while heap:
        t_event, pid = heapq.heappop(heap)
        if t_event > horizon:
            break
        p = config.particles[pid]
        if not p.alive or p.pending != t_event:
            continue  # stale entry
        p.pending = None
        emit_samples(t_event)
        v_acc += root_a * (t_event - t_last)
        t_last = t_event
        counters["events"] += 1
        p.jumps += 1

        old = p.site
        new = graph.step(old, p.stream.below(graph.n_directions))
        leave_root(p, t_event)
        config.site_particles[old].remove(p)

        if new is ESCAPED:
            p.alive = False
            p.escaped = True
            counters["escapes"] += 1
            continue

        p.site = new
        if record_arrivals and new not in arrivals[pid]:
            arrivals[pid][new] = t_event
        occupants = config.site_particles.get(new)
        target = None
        if occupants:
            opp = [q for q in occupants if q.kind != p.kind]
            if opp:
                target = max(opp, key=lambda q: (q.brav, q.pid))
        if target is not None:
            target.alive = False
            target.death_time = t_event
            target.pending = None
            leave_root(target, t_event)
            occupants.remove(target)
            p.alive = False
            p.death_time = t_event
            if p.kind == "A" and new == root and p.first_root is None:
                p.first_root = t_event  # zero-duration visit
            counters["annihilations"] += 1
            counters["dead_a"] += 1
            counters["dead_b"] += 1
            if occupants:
                kinds = {q.kind for q in occupants}
                assert len(kinds) == 1, "sign purity violated"
        else:
            config.site_particles.setdefault(new, []).append(p)
            if p.kind == "A" and new == root:
                root_a += 1
                if p.first_root is None:
                    p.first_root = t_event
                p.root_entered = t_event
            w = p.stream.exp1() / p.rate
            p.pending = t_event + w
            heapq.heappush(heap, (p.pending, p.pid))

    emit_samples(horizon)
    # Samples exactly at the horizon are emitted by the final state.
    while si < len(samples):
        n_root_out.append(root_a)
        v_out.append(v_acc + root_a * (samples[si] - t_last))
        if record_trace:
            trace_out.append(config.snapshot())
        if window_set is not None:
            tot = 0
            for wsite in window_set:
                plist = config.site_particles.get(wsite)
                if plist:
                    tot += sum(1 for q in plist if q.kind == "A")
            window_out.append(tot / len(window_set))
        si += 1
    v_final = v_acc + root_a * (horizon - t_last)

    visits = None
    if record_visits:
        for p in config.particles:
            if p.root_entered is not None:
                root_occupancy[p.pid] = (root_occupancy.get(p.pid, 0.0)
                                         + horizon - p.root_entered)
        visits = {p.pid: (p.first_root, root_occupancy.get(p.pid, 0.0))
                  for p in config.particles if p.first_root is not None}

    assert counters["dead_a"] == counters["dead_b"], "annihilation parity"
    series = ObservableSeries(
        sample_times=samples, n_root=n_root_out, v_at=v_out,
        v_final=v_final, horizon=horizon, seed=params.seed, visits=visits,
        window_mean=window_out if window_set is not None else None)
    jump_counts = None
    if record_jumps:
        jump_counts = {p.pid: p.jumps for p in config.particles}
    return CrsResult(series=series, config=config, counters=counters,
                     trace=trace_out if record_trace else None,
                     jump_counts=jump_counts, arrivals=arrivals, params=params)


def occupation_estimator(series_list, use_window: bool = False):
    """Per sample time: (t, mean, stderr) of N_t across replicas (or of the
    spatially averaged window count when use_window is set)."""
    import math

    if len(series_list) < 2:
        raise ValueError("need at least 2 replicas")
    grid = series_list[0].sample_times
    for s in series_list[1:]:
        if s.sample_times != grid:
            raise ValueError("replicas have mismatched sample grids")
    out = []
    n = len(series_list)
    for i, t in enumerate(grid):
        if use_window:
            vals = [s.window_mean[i] for s in series_list]
        else:
            vals = [s.n_root[i] for s in series_list]
        mean = sum(vals) / n
        var = sum((v - mean) ** 2 for v in vals) / (n - 1)
        out.append((t, mean, math.sqrt(var / n)))
    return out


def discrepancy(config: Configuration, region) -> int:
    """Initial (#A - #B) over the given region."""
    d = 0
    for site in region:
        kind = config.initial_kinds.get(site)
        if kind == "A":
            d += 1
        elif kind == "B":
            d -= 1
    return d


def line_window(a: int, b: int) -> tuple:
    return tuple((x,) for x in range(a, b + 1))


def ball_region(spec: GraphSpec, radius: int) -> tuple:
    g = make_graph(spec)
    if spec.kind in ("line", "lattice"):
        return tuple(g.ball(radius))
    if spec.kind == "torus":
        return tuple(s for s in g.all_sites() if g.distance_to_root(s) <= radius)
    return tuple(g.levels(0, min(radius, spec.depth)))


def tree_levels_region(spec: GraphSpec, lo: int, hi: int) -> tuple:
    g = make_graph(spec)
    return tuple(g.levels(lo, hi))


def torus_region(spec: GraphSpec) -> tuple:
    return tuple(make_graph(spec).all_sites())
