"""Path-swapping construction.

Three particle classes: visible A's, invisible A's, and B's.  Visible
A's follow paths originally assigned to A's; invisible A's and B's
follow paths originally assigned to B's.  On a visible-A/B collision
the B dies and the A goes invisible, adopting the B's braveness and the
unread remainder of its path; invisible and visible A's swap paths and
visibility according to the numbered interaction procedures.  Ignoring
invisible particles, the visible trace reproduces the reference engine
run on the same seed bit-for-bit, which is the core coupling test.

Paths are realized as stream objects: the stream state is the cursor,
so exchanging streams exchanges exactly the unread path remainders.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass, field

from ..engine import ObservableSeries, SimParams, init_configuration
from ..graphs import ESCAPED, make_graph


class _Token:
    """A putative trajectory: stream plus scheduling state.  Swaps move
    tokens between holders; the pending jump time travels with the token."""

    __slots__ = ("tid", "stream", "rate", "pending", "active", "holder", "origin")

    def __init__(self, tid, stream, rate, origin):
        self.tid = tid
        self.stream = stream
        self.rate = rate
        self.pending = None
        self.active = True
        self.holder = None
        self.origin = origin  # pid of the particle the path was assigned to


class _Piece:
    """One maximal visible stretch of an A-particle's trajectory."""

    __slots__ = ("t0", "path", "t1", "cause")

    def __init__(self, t0, site):
        self.t0 = t0
        self.path = [(t0, site)]   # (arrival time, site)
        self.t1 = None
        self.cause = None          # "annihilation" | "swap-out" | "escape" | "simend"

    @property
    def duration(self):
        return self.t1 - self.t0

    @property
    def end_site(self):
        return self.path[-1][1]

    def dwells(self):
        """Yield (site, enter, leave) within the closed piece."""
        for (t_in, site), (t_out, _) in zip(self.path, self.path[1:]):
            yield site, t_in, t_out
        yield self.path[-1][1], self.path[-1][0], self.t1


class _PsParticle:
    __slots__ = ("pid", "number", "kind", "site", "site0", "brav", "visible",
                 "alive", "escaped", "token", "source", "history", "pieces",
                 "piece", "cum_closed", "permanent")

    def __init__(self, pid, number, kind, site, brav):
        self.pid = pid
        self.number = number     # 1-based among A's; None for B's
        self.kind = kind
        self.site = site
        self.site0 = site
        self.brav = brav
        self.visible = kind == "A"
        self.alive = True
        self.escaped = False
        self.token = None
        self.source = None       # pid whose original path is being followed
        self.history = []        # (time, event) for the visibility log
        self.pieces = []
        self.piece = None
        self.cum_closed = 0.0
        self.permanent = False   # certified permanently invisible

    def cum_visible(self, now):
        if self.piece is not None:
            return self.cum_closed + (now - self.piece.t0)
        return self.cum_closed


@dataclass
class PathSwapResult:
    series: ObservableSeries
    particles: list
    trace: list | None = None        # visible-zeta snapshots at sample times
    full_snaps: list | None = None   # [(a_records, b_counts)] at sample times
    counters: dict = field(default_factory=dict)
    params: SimParams | None = None
    harvest_censored: int = 0        # particles under budget with no certificate


def run_path_swapping(params: SimParams, *, record_trace: bool = False,
                      record_full: bool = False, harvest_budget: float | None = None,
                      sim_cap: float | None = None) -> PathSwapResult:
    """Run the construction to params.horizon_t (observables are always
    accounted up to the horizon).

    With harvest_budget set, simulation continues past the horizon until
    every A-particle has accumulated that much visible duration or is
    certified permanently invisible (its number lies below every visible
    particle's, so no interaction can ever revive it), capped at sim_cap.
    """
    if params.lambda_a == 0 and params.lambda_b == 0:
        raise ValueError("path-swapping requires lambda_a, lambda_b not both 0")
    graph = make_graph(params.graph)
    base = init_configuration(params, graph)
    root = graph.root

    particles = []
    tokens = []
    site_particles = {}
    for bp in base.particles:
        p = _PsParticle(bp.pid, bp.number, bp.kind, bp.site, bp.brav)
        tok = _Token(bp.pid, bp.stream, bp.rate, bp.pid)
        tok.holder = p
        p.token = tok
        p.source = bp.pid
        particles.append(p)
        tokens.append(tok)
        site_particles.setdefault(p.site, []).append(p)

    heap = []
    now = 0.0
    for tok in tokens:
        if tok.rate > 0:
            tok.pending = tok.stream.exp1() / tok.rate
            heapq.heappush(heap, (tok.pending, tok.tid))

    a_parts = [p for p in particles if p.kind == "A"]
    for p in a_parts:
        p.piece = _Piece(0.0, p.site)

    horizon = params.horizon_t
    budget = harvest_budget
    run_until = horizon if budget is None else (sim_cap if sim_cap is not None
                                                else 20.0 * max(horizon, budget))
    root_vis_a = sum(1 for q in site_particles.get(root, ())
                     if q.kind == "A" and q.visible)
    v_acc = 0.0
    t_last = 0.0
    samples = params.sample_times
    si = 0
    n_out, v_out, trace_out, full_out = [], [], [], []
    counters = {"annihilations": 0, "swaps": 0, "escapes": 0, "events": 0}

    def vis_snapshot():
        snap = {}
        for site, plist in site_particles.items():
            if not plist:
                continue
            a = sum(1 for q in plist if q.kind == "A" and q.visible)
            b = sum(1 for q in plist if q.kind == "B")
            assert a == 0 or b == 0, "visible sign purity violated"
            if a:
                snap[site] = a
            elif b:
                snap[site] = -b
        return snap

    def full_snapshot():
        a_rec = [(p.number, p.site, p.visible) for p in a_parts if not p.escaped]
        b_cnt = {}
        for p in particles:
            if p.kind == "B" and p.alive:
                b_cnt[p.site] = b_cnt.get(p.site, 0) + 1
        return (a_rec, b_cnt)

    def emit_samples(up_to):
        nonlocal si
        while si < len(samples) and samples[si] < up_to:
            s = samples[si]
            n_out.append(root_vis_a)
            v_out.append(v_acc + root_vis_a * (s - t_last))
            if record_trace:
                trace_out.append(vis_snapshot())
            if record_full:
                full_out.append(full_snapshot())
            si += 1

    def advance_v(t_new):
        nonlocal v_acc, t_last
        dt = min(t_new, horizon) - min(t_last, horizon)
        if dt > 0:
            v_acc += root_vis_a * dt
        t_last = t_new

    def close_piece(p, t, cause):
        nonlocal root_vis_a
        if p.visible and p.site == root:
            root_vis_a -= 1
        p.visible = False
        p.piece.t1 = t
        p.piece.cause = cause
        p.cum_closed += p.piece.duration
        p.pieces.append(p.piece)
        p.piece = None

    def open_piece(p, t):
        nonlocal root_vis_a
        p.visible = True
        p.piece = _Piece(t, p.site)
        if p.site == root:
            root_vis_a += 1

    def swap(cur, tgt, t):
        # cur invisible <-> tgt visible is decided by the caller; here the
        # two exchange bravenesses and unread path remainders.
        counters["swaps"] += 1
        cur.brav, tgt.brav = tgt.brav, cur.brav
        cur.token, tgt.token = tgt.token, cur.token
        cur.token.holder = cur
        tgt.token.holder = tgt
        cur.source, tgt.source = tgt.source, cur.source

    def annihilate(a, b, t):
        # The B dies; the A goes invisible and adopts the B's braveness
        # and path remainder.  The A's current path is discarded.
        counters["annihilations"] += 1
        b.alive = False
        site_particles[b.site].remove(b)
        a.token.active = False
        a.token.holder = None
        a.token = b.token
        a.token.holder = a
        a.brav = b.brav
        a.source = b.token.origin
        close_piece(a, t, "annihilation")
        a.history.append((t, "annihilation"))
        b.history.append((t, "annihilation"))

    def interaction_set_i(x, k):
        return [q for q in site_particles.get(x, ())
                if q.kind == "B" or (q.kind == "A" and not q.visible
                                     and q.number > k)]

    def interaction_set_j(x, k):
        return [q for q in site_particles.get(x, ())
                if q.kind == "A" and q.visible and q.number < k]

    def procedure_visible_a(p, x, t):
        cur = p
        while True:
            cands = interaction_set_i(x, cur.number)
            if not cands:
                return
            tgt = max(cands, key=lambda q: (q.brav, q.pid))
            if tgt.kind == "B":
                annihilate(cur, tgt, t)
                return
            # Swapping: invisible higher-numbered tgt becomes visible.
            swap(cur, tgt, t)
            close_piece(cur, t, "swap-out")
            cur.history.append((t, "swap-out"))
            open_piece(tgt, t)
            tgt.history.append((t, "swap-in"))
            cur = tgt

    def procedure_invisible_a(p, x, t):
        cur = p
        while True:
            cands = interaction_set_j(x, cur.number)
            if not cands:
                return
            tgt = max(cands, key=lambda q: (q.brav, q.pid))
            # Swapping: cur becomes visible, tgt invisible.
            swap(cur, tgt, t)
            close_piece(tgt, t, "swap-out")
            tgt.history.append((t, "swap-out"))
            open_piece(cur, t)
            cur.history.append((t, "swap-in"))
            cur = tgt

    def procedure_b(p, x, t):
        cands = [q for q in site_particles.get(x, ())
                 if q.kind == "A" and q.visible]
        if not cands:
            return
        tgt = max(cands, key=lambda q: (q.brav, q.pid))
        annihilate(tgt, p, t)
        procedure_invisible_a(tgt, x, t)

    def harvest_done():
        vis_nums = [q.number for q in a_parts if q.visible and not q.escaped]
        min_vis = min(vis_nums) if vis_nums else None
        done = True
        for q in a_parts:
            if q.escaped:
                continue
            if q.cum_visible(now) >= budget:
                continue
            if not q.visible and (min_vis is None or q.number < min_vis):
                q.permanent = True
                continue
            done = False
        return done

    check_every = 64
    since_check = 0

    while heap:
        t_event, tid = heapq.heappop(heap)
        tok = tokens[tid]
        if not tok.active or tok.pending != t_event:
            continue
        if budget is None and t_event > horizon:
            break
        if budget is not None and t_event > run_until:
            break
        tok.pending = None
        p = tok.holder
        now = t_event
        emit_samples(t_event)
        advance_v(t_event)
        counters["events"] += 1

        old = p.site
        new = graph.step(old, tok.stream.below(graph.n_directions))
        site_particles[old].remove(p)
        if p.kind == "A" and p.visible:
            if old == root:
                root_vis_a -= 1
                # re-added below if still visible at root; piece tracks sites
        if new is ESCAPED:
            counters["escapes"] += 1
            p.escaped = True
            p.alive = False
            if p.kind == "A" and p.visible:
                p.piece.t1 = t_event
                p.piece.cause = "escape"
                p.cum_closed += p.piece.duration
                p.pieces.append(p.piece)
                p.piece = None
                p.visible = False
            p.site = ESCAPED
            tok.active = False
            tok.holder = None
        else:
            p.site = new
            site_particles.setdefault(new, []).append(p)
            if p.kind == "A" and p.visible:
                p.piece.path.append((t_event, new))
                if new == root:
                    root_vis_a += 1
                procedure_visible_a(p, new, t_event)
            elif p.kind == "A":
                procedure_invisible_a(p, new, t_event)
            else:
                procedure_b(p, new, t_event)
            if tok.active and tok.pending is None and tok.rate > 0 \
                    and tok.holder is not None and not tok.holder.escaped:
                tok.pending = t_event + tok.stream.exp1() / tok.rate
                heapq.heappush(heap, (tok.pending, tok.tid))

        if budget is not None:
            since_check += 1
            if since_check >= check_every:
                since_check = 0
                if harvest_done():
                    break

    emit_samples(horizon)
    while si < len(samples):
        n_out.append(root_vis_a)
        v_out.append(v_acc + root_vis_a * (samples[si] - t_last))
        if record_trace:
            trace_out.append(vis_snapshot())
        if record_full:
            full_out.append(full_snapshot())
        si += 1
    advance_v(max(now, horizon))
    v_final = v_acc

    censored = 0
    if budget is not None:
        harvest_done()  # refresh permanence certificates at the end
        for p in a_parts:
            if p.piece is not None:
                p.piece.t1 = now
                p.piece.cause = "simend"
                p.cum_closed += p.piece.duration
                p.pieces.append(p.piece)
                p.piece = None
                p.visible = False
            if (not p.escaped and not p.permanent
                    and p.cum_closed < budget - 1e-12):
                censored += 1
    else:
        for p in a_parts:
            if p.piece is not None:
                p.piece.t1 = max(now, horizon)
                p.piece.cause = "simend"
                p.cum_closed += p.piece.duration
                p.pieces.append(p.piece)
                p.piece = None

    series = ObservableSeries(sample_times=samples, n_root=n_out, v_at=v_out,
                              v_final=v_final, horizon=horizon, seed=params.seed)
    return PathSwapResult(series=series, particles=particles,
                          trace=trace_out if record_trace else None,
                          full_snaps=full_out if record_full else None,
                          counters=counters, params=params,
                          harvest_censored=censored)


@dataclass
class ChangeTrackingReport:
    ok: bool
    n: int
    checked: int
    first_counterexample: tuple | None  # (sample_index, site, identity, lhs, rhs)


def check_change_tracking(params: SimParams, n: int) -> ChangeTrackingReport:
    """Exact per-site identities between the full run and the run with
    A-particles numbered above n deleted from the initial configuration:

      zA(v) - zA_bar(v)   = #(visible A's numbered > n at v)
      zB_bar(v) - zB(v)   = #(invisible A's numbered > n at v)
      zeta(v) - zeta_bar(v) = #(A's numbered > n at v)

    checked at every sample time and site, integer-exactly.
    """
    full = run_path_swapping(params, record_full=True)
    kinds = {p.site0: p.kind for p in full.particles}
    kept = {p.site0 for p in full.particles
            if p.kind == "B" or (p.number is not None and p.number <= n)}
    reduced_kinds = tuple(sorted((s, kinds[s]) for s in kept))
    import dataclasses

    params_bar = dataclasses.replace(params, initial_kinds=reduced_kinds,
                                     region=tuple(sorted(kept)))
    bar = run_path_swapping(params_bar, record_full=True)

    checked = 0
    for idx, ((a_full, b_full), (a_bar, b_bar)) in enumerate(
            zip(full.full_snaps, bar.full_snaps)):
        za, zb = {}, dict(b_full)
        za_bar, zb_bar = {}, dict(b_bar)
        high_vis, high_inv, high_all = {}, {}, {}
        for number, site, visible in a_full:
            if visible:
                za[site] = za.get(site, 0) + 1
            if number > n:
                high_all[site] = high_all.get(site, 0) + 1
                key = high_vis if visible else high_inv
                key[site] = key.get(site, 0) + 1
        for number, site, visible in a_bar:
            if visible:
                za_bar[site] = za_bar.get(site, 0) + 1
        sites = (set(za) | set(zb) | set(za_bar) | set(zb_bar)
                 | set(high_all))
        for v in sites:
            lhs_a = za.get(v, 0) - za_bar.get(v, 0)
            rhs_a = high_vis.get(v, 0)
            if lhs_a != rhs_a:
                return ChangeTrackingReport(False, n, checked,
                                            (idx, v, "A", lhs_a, rhs_a))
            lhs_b = zb_bar.get(v, 0) - zb.get(v, 0)
            rhs_b = high_inv.get(v, 0)
            if lhs_b != rhs_b:
                return ChangeTrackingReport(False, n, checked,
                                            (idx, v, "B", lhs_b, rhs_b))
            lhs_z = (za.get(v, 0) - zb.get(v, 0)) - (za_bar.get(v, 0) - zb_bar.get(v, 0))
            rhs_z = high_all.get(v, 0)
            if lhs_z != rhs_z:
                return ChangeTrackingReport(False, n, checked,
                                            (idx, v, "zeta", lhs_z, rhs_z))
            checked += 3
    return ChangeTrackingReport(True, n, checked, None)
