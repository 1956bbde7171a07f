"""Polarized construction (requires stationary B's).

Every particle carries a fixed polarity; A-particles trade visibility
instead of paths.  A visible A landing on a B destroys it and freezes;
a visible A landing on the frozen A of an initially-B site resolves by
polarity (the one matching the site's original B stays frozen) or, for
equal polarities, by first-arrival order in that polarity's stand-alone
process.  A frozen particle resumes its own path where it left off, so
each particle's polarized trajectory is a delayed, possibly truncated
replay of its trajectory in the polarity-restricted process.  That is
what makes the occupation-time subadditivity checkable per seed:
root time in the polarized run never exceeds the positive plus negative
stand-alone totals at any horizon.
"""

from __future__ import annotations

import dataclasses
import heapq
import math
from dataclasses import dataclass

from ..engine import CrsResult, ObservableSeries, SimParams, init_configuration, run_crs
from ..graphs import ESCAPED, make_graph
from ..streams import Stream, stream_key

_POLARITY_TAG = 0x706F6C61


def random_polarity(params: SimParams, region=None) -> dict:
    """Site-keyed fair polarity assignment (independent of all other draws)."""
    sites = region if region is not None else params.region
    out = {}
    for site in sites:
        u = Stream(stream_key(params.seed, _POLARITY_TAG, site)).uniform()
        out[site] = 1 if u < 0.5 else -1
    return out


class _PolParticle:
    __slots__ = ("pid", "kind", "site", "site0", "polarity", "visible",
                 "alive", "stream", "pending", "escaped")

    def __init__(self, pid, kind, site, polarity, stream):
        self.pid = pid
        self.kind = kind
        self.site = site
        self.site0 = site
        self.polarity = polarity
        self.visible = True
        self.alive = True
        self.stream = stream
        self.pending = None
        self.escaped = False


@dataclass
class PolarizedResult:
    series: ObservableSeries           # visible-A root occupancy
    positive: CrsResult
    negative: CrsResult
    polarity: dict
    b_polarity: dict                   # initial B polarity per site
    trace: list | None = None
    counters: dict | None = None

    @property
    def v_polar(self) -> float:
        return self.series.v_final

    @property
    def v_pos(self) -> float:
        return self.positive.series.v_final

    @property
    def v_neg(self) -> float:
        return self.negative.series.v_final


def _restrict(params: SimParams, sites) -> SimParams:
    sites = tuple(sorted(sites))
    kinds = params.kinds_map()
    if kinds is None:
        return dataclasses.replace(params, region=sites)
    kept = tuple(sorted((s, kinds[s]) for s in sites))
    return dataclasses.replace(params, region=sites, initial_kinds=kept)


def run_polarized(params: SimParams, polarity: dict | None = None, *,
                  record_trace: bool = False) -> PolarizedResult:
    """Run the polarized system together with the positive-only and
    negative-only stand-alone processes on the same assigned paths."""
    if params.lambda_b != 0:
        raise ValueError("the polarized construction requires lambda_b = 0")
    graph = make_graph(params.graph)
    base = init_configuration(params, graph)
    root = graph.root
    sites0 = [p.site for p in base.particles]
    if polarity is None:
        polarity = random_polarity(params, sites0)
    missing = [s for s in sites0 if s not in polarity]
    if missing:
        raise ValueError(f"polarity assignment misses sites, e.g. {missing[0]!r}")

    pos_run = run_crs(_restrict(params, [s for s in sites0 if polarity[s] > 0]),
                      record_arrivals=True)
    neg_run = run_crs(_restrict(params, [s for s in sites0 if polarity[s] < 0]),
                      record_arrivals=True)

    # First-arrival times per (initial site, site) in each polarity process.
    first_arrival = {}
    for run in (pos_run, neg_run):
        for p in run.config.particles:
            if p.kind == "A":
                first_arrival[p.site0] = run.arrivals[p.pid]

    particles = []
    site_b = {}
    frozen_at = {}
    b_polarity = {}
    heap = []
    for bp in base.particles:
        p = _PolParticle(bp.pid, bp.kind, bp.site, polarity[bp.site], bp.stream)
        particles.append(p)
        if p.kind == "B":
            assert p.site not in site_b, "one particle per site initially"
            site_b[p.site] = p
            b_polarity[p.site] = p.polarity
        else:
            p.pending = p.stream.exp1() / params.lambda_a
            heapq.heappush(heap, (p.pending, p.pid))

    root_vis_a = sum(1 for p in particles
                     if p.kind == "A" and p.site == root)
    v_acc = 0.0
    t_last = 0.0
    horizon = params.horizon_t
    samples = params.sample_times
    si = 0
    n_out, v_out, trace_out = [], [], []
    counters = {"events": 0, "freezes": 0, "revivals": 0, "escapes": 0,
                "annihilations": 0}

    def snapshot():
        counts = {}
        for p in particles:
            if p.escaped or p.site is ESCAPED:
                continue
            if p.kind == "A" and p.visible:
                counts[p.site] = counts.get(p.site, 0) + 1
        for p in particles:
            if p.kind == "B" and p.alive:
                assert counts.get(p.site, 0) == 0, "sign purity violated"
                counts[p.site] = counts.get(p.site, 0) - 1
        return {k: v for k, v in counts.items() if v != 0}

    def emit(up_to):
        nonlocal si
        while si < len(samples) and samples[si] < up_to:
            s = samples[si]
            n_out.append(root_vis_a)
            v_out.append(v_acc + root_vis_a * (s - t_last))
            if record_trace:
                trace_out.append(snapshot())
            si += 1

    def arrival_key(p, site):
        t = first_arrival.get(p.site0, {}).get(site, math.inf)
        return (t, p.pid)

    def freeze(p, t):
        nonlocal root_vis_a
        counters["freezes"] += 1
        if p.visible and p.site == root:
            root_vis_a -= 1
        p.visible = False
        frozen_at[p.site] = p

    def revive(p, t):
        nonlocal root_vis_a
        counters["revivals"] += 1
        p.visible = True
        if p.site == root:
            root_vis_a += 1
        # Pause-before-wait semantics: the dwell wait is drawn at revival,
        # so the particle replays exactly the dwells of its stand-alone run.
        p.pending = t + p.stream.exp1() / params.lambda_a
        heapq.heappush(heap, (p.pending, p.pid))

    lam = params.lambda_a
    while heap:
        t_event, pid = heapq.heappop(heap)
        if t_event > horizon:
            break
        p = particles[pid]
        if not p.alive or not p.visible or p.pending != t_event:
            continue
        p.pending = None
        emit(t_event)
        v_acc += root_vis_a * (t_event - t_last)
        t_last = t_event
        counters["events"] += 1

        old = p.site
        if p.visible and old == root:
            root_vis_a -= 1
        new = graph.step(old, p.stream.below(graph.n_directions))
        if new is ESCAPED:
            counters["escapes"] += 1
            p.escaped = True
            p.alive = False
            p.site = ESCAPED
            continue
        p.site = new
        if new == root:
            root_vis_a += 1

        b = site_b.get(new)
        if b is not None and b.alive:
            counters["annihilations"] += 1
            b.alive = False
            del site_b[new]
            assert new not in frozen_at
            freeze(p, t_event)
            continue
        q = frozen_at.get(new)
        if q is not None:
            if q.polarity == p.polarity:
                # Same polarity: the earlier arriver in that polarity's
                # stand-alone process stays frozen.
                if arrival_key(q, new) < arrival_key(p, new):
                    stay_frozen, go = q, p
                else:
                    stay_frozen, go = p, q
            else:
                bpol = b_polarity[new]
                stay_frozen = p if p.polarity == bpol else q
                go = q if stay_frozen is p else p
            if stay_frozen is p:
                del frozen_at[new]  # q leaves the frozen slot, p takes it
                freeze(p, t_event)
                revive(q, t_event)
                continue
            # else: q stays frozen and p walks on
        w = p.stream.exp1() / lam
        p.pending = t_event + w
        heapq.heappush(heap, (p.pending, p.pid))

    emit(horizon)
    while si < len(samples):
        n_out.append(root_vis_a)
        v_out.append(v_acc + root_vis_a * (samples[si] - t_last))
        if record_trace:
            trace_out.append(snapshot())
        si += 1
    v_final = v_acc + root_vis_a * (horizon - t_last)

    series = ObservableSeries(sample_times=samples, n_root=n_out, v_at=v_out,
                              v_final=v_final, horizon=horizon, seed=params.seed)
    return PolarizedResult(series=series, positive=pos_run, negative=neg_run,
                           polarity=polarity, b_polarity=b_polarity,
                           trace=trace_out if record_trace else None,
                           counters=counters)
