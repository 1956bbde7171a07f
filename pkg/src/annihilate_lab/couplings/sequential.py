"""Sequential release of A-particles (requires stationary B's).

Walkers are released one at a time in a vertex order; each runs until
it lands on a surviving B (both die), the time horizon elapses, or a
step cap trips.  The direct generator draws fresh walks from each
particle's own stream.  The dominance check instead rebuilds the
sequential paths from the visible pieces of a path-swapping run by
chunk concatenation, which couples the two processes on one seed and
makes the occupation-time inequality checkable per trial.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from ..engine import SimParams, init_configuration
from ..graphs import ESCAPED, make_graph, site_sort_key
from .pathswap import run_path_swapping


@dataclass
class ParticleRun:
    site0: tuple
    number: int
    halt: str                 # HitB | TimeUp | StepCap | Escaped | Exhausted | Censored
    root_time: float
    visited_root: bool
    first_root: float | None
    steps: int


@dataclass
class SequentialRun:
    ordering: str
    horizon: float
    step_cap: int
    runs: list = field(default_factory=list)
    surviving_b: set = field(default_factory=set)
    censored: int = 0

    @property
    def v_total(self) -> float:
        return sum(r.root_time for r in self.runs)


def run_sequential(params: SimParams, horizon: float, step_cap: int = 10**7,
                   ordering: str = "distance") -> SequentialRun:
    """Direct generation with fresh per-particle walks.

    ordering: "distance" (distance-then-lexicographic) or "reverse".
    horizon may be math.inf, in which case step_cap guards termination
    and capped runs are flagged as censored.
    """
    if params.lambda_b != 0:
        raise ValueError("the sequential process requires lambda_b = 0")
    if horizon == math.inf and not (0 < step_cap < float("inf")):
        raise ValueError("infinite horizon needs a finite step cap")
    graph = make_graph(params.graph)
    config = init_configuration(params, graph)
    root = graph.root
    landscape = {p.site for p in config.particles if p.kind == "B"}
    a_parts = [p for p in config.particles if p.kind == "A"]
    a_parts.sort(key=lambda p: site_sort_key(graph, p.site))
    if ordering == "reverse":
        a_parts.reverse()
    elif ordering != "distance":
        raise ValueError("ordering must be 'distance' or 'reverse'")

    out = SequentialRun(ordering=ordering, horizon=horizon, step_cap=step_cap)
    lam = params.lambda_a
    for p in a_parts:
        site = p.site
        stream = p.stream
        t_used = 0.0
        root_time = 0.0
        visited = site == root
        first = 0.0 if visited else None
        steps = 0
        halt = None
        while True:
            w = stream.exp1() / lam
            dwell = w if horizon == math.inf else min(w, horizon - t_used)
            if site == root:
                root_time += dwell
            t_used += w
            if horizon != math.inf and t_used >= horizon:
                halt = "TimeUp"
                break
            steps += 1
            if steps > step_cap:
                halt = "StepCap"
                break
            new = graph.step(site, stream.below(graph.n_directions))
            if new is ESCAPED:
                halt = "Escaped"
                break
            site = new
            if site in landscape:
                landscape.discard(site)
                if site == root and first is None:
                    visited = True
                    first = t_used
                halt = "HitB"
                break
            if site == root and first is None:
                visited = True
                first = t_used
        if halt == "StepCap":
            out.censored += 1
        out.runs.append(ParticleRun(site0=p.site, number=p.number, halt=halt,
                                    root_time=root_time, visited_root=visited,
                                    first_root=first, steps=steps))
    out.surviving_b = landscape
    return out


@dataclass
class SequentialDominanceReport:
    v_dlas: float
    v_sequential: float
    dominates: bool
    halt_causes: dict
    mid_chunk_b_hits: int        # Lemma seq.induction (a) violations; must be 0
    chunk_gap_violations: int    # Lemma seq.induction (b) violations; must be 0
    harvest_censored: int


def sequential_dominance_check(params: SimParams, sim_cap_factor: float = 20.0
                               ) -> SequentialDominanceReport:
    """Build the sequential process from the visible pieces of the
    path-swapping run (chunk concatenation) and verify, on this one seed,
    that its root occupation time dominates the DLAS one.

    Chunks replay against the sequential B-landscape: a chunk ending at a
    surviving B annihilates it and halts the particle; otherwise the next
    visible piece is appended, until the per-particle time budget
    (the horizon) is spent.
    """
    if params.lambda_b != 0:
        raise ValueError("the sequential coupling requires lambda_b = 0")
    t_budget = params.horizon_t
    ps = run_path_swapping(params, harvest_budget=t_budget,
                           sim_cap=sim_cap_factor * t_budget)
    graph = make_graph(params.graph)
    root = graph.root
    landscape = {p.site0 for p in ps.particles if p.kind == "B"}
    a_parts = sorted((p for p in ps.particles if p.kind == "A"),
                     key=lambda p: p.number)

    halt_causes = {}
    mid_hits = 0
    gap_violations = 0
    v_seq = 0.0
    for p in a_parts:
        t_used = 0.0
        root_time = 0.0
        halt = None
        for piece in p.pieces:
            take = min(piece.duration, t_budget - t_used)
            budget_cut = take < piece.duration - 1e-15
            consumed = 0.0
            for site, enter, leave in piece.dwells():
                if take - consumed <= 0:
                    break
                seg = min(leave - enter, take - consumed)
                if site == root:
                    root_time += seg
                consumed += seg
            # Halt discipline: an arrival strictly before the chunk end at
            # a site holding a surviving B would contradict the coupling.
            for t_arr, site in piece.path[1:-1]:
                if t_arr - piece.t0 < take - 1e-15 and site in landscape:
                    mid_hits += 1
            t_used += take
            if budget_cut or t_used >= t_budget - 1e-15:
                halt = "TimeUp"
                break
            end = piece.end_site
            if end in landscape:
                landscape.discard(end)
                halt = "HitB"
                break
            if piece.cause == "escape":
                halt = "Escaped"
                break
            if piece.cause == "simend":
                halt = "Censored"
                break
        if halt is None:
            # Ran out of pieces: legitimate only for a particle certified
            # permanently invisible whose last chunk should have hit a B,
            # so reaching here without certification is just censoring,
            # and with certification it violates the chunk discipline.
            if p.permanent:
                gap_violations += 1
            halt = "Exhausted"
        halt_causes[halt] = halt_causes.get(halt, 0) + 1
        v_seq += root_time

    v_dlas = ps.series.v_final
    return SequentialDominanceReport(
        v_dlas=v_dlas, v_sequential=v_seq,
        dominates=v_seq >= v_dlas - 1e-9,
        halt_causes=halt_causes, mid_chunk_b_hits=mid_hits,
        chunk_gap_violations=gap_violations,
        harvest_censored=ps.harvest_censored)
