"""Exact offline-optimal buffer sizes and certified schedules.

The offline problem is an LP over per-interval convex mixtures of
independent sets. Intervals are the segments between consecutive input
breakpoints (block model: between arrival times). Constant mixing weights
per interval lose nothing: with constant arrival and processing rates every
load is linear in time, so per-machine maxima and minima occur at interval
boundaries, and the availability condition "never process more than stored
plus arriving" is exactly "load >= 0 at the right boundary". The buffer
bound B enters as a plain LP variable, so no bisection is needed.

Correctness does not rely on graph perfection: the polytope is generated
from the enumerated independent sets themselves, not clique inequalities.
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Dict, FrozenSet, List, Optional, Sequence, Tuple

from .graph import ConflictGraph
from .inputs import BlockInput, FlowInput
from .lp import EQ, GE, LE, LinearProgram
from .rational import Q, ZERO, qstr, rat


class OracleError(Exception):
    pass


class ScheduleMismatch(ValueError):
    pass


Weights = Tuple[Tuple[FrozenSet[int], Q], ...]


@dataclass(frozen=True)
class ScheduleInterval:
    start: Q
    end: Q
    weights: Weights  # independent set -> mixing weight, weights sum <= 1

    def processing_rate(self, i: int) -> Q:
        return sum((w for s, w in self.weights if i in s), ZERO)


@dataclass(frozen=True)
class OfflineSchedule:
    intervals: Tuple[ScheduleInterval, ...]

    def __post_init__(self):
        prev = None
        for iv in self.intervals:
            if iv.end < iv.start:
                raise ScheduleMismatch("interval with negative length")
            if prev is not None and iv.start != prev:
                raise ScheduleMismatch("schedule intervals must be consecutive")
            prev = iv.end

    @property
    def end(self) -> Q:
        return self.intervals[-1].end if self.intervals else ZERO

    def boundaries(self) -> List[Q]:
        if not self.intervals:
            return [ZERO]
        return [self.intervals[0].start] + [iv.end for iv in self.intervals]

    def scale_times(self, factor: Q) -> "OfflineSchedule":
        """Rescale the time axis. For flow inputs whose times are scaled by
        the same factor this maps optimal schedules to optimal schedules
        (loads scale linearly with time when rates are pinned to 0/1)."""
        f = Q(factor)
        return OfflineSchedule(tuple(
            ScheduleInterval(iv.start * f, iv.end * f, iv.weights)
            for iv in self.intervals))

    def to_json(self) -> dict:
        return {"intervals": [
            {"start": qstr(iv.start), "end": qstr(iv.end),
             "weights": {",".join(str(m + 1) for m in sorted(s)): qstr(w)
                         for s, w in iv.weights}}
            for iv in self.intervals]}

    @staticmethod
    def from_json(doc: dict) -> "OfflineSchedule":
        ivs = []
        for d in doc["intervals"]:
            weights = tuple(
                (frozenset(int(p) - 1 for p in key.split(",")), rat(w))
                for key, w in d["weights"].items())
            ivs.append(ScheduleInterval(rat(d["start"]), rat(d["end"]), weights))
        return OfflineSchedule(tuple(ivs))

    def dumps(self) -> str:
        return json.dumps(self.to_json(), sort_keys=True)


@dataclass(frozen=True)
class OracleResult:
    buffer: Q
    schedule: OfflineSchedule


def _grid(g: ConflictGraph, inp) -> List[Q]:
    if isinstance(inp, FlowInput):
        return inp.breakpoints()
    pts = {ZERO}
    pts.update(inp.arrival_times())
    return sorted(pts)


def min_buffer(g: ConflictGraph, inp) -> OracleResult:
    """Exact minimum over offline schedules of the peak stored load."""
    if isinstance(inp, (FlowInput, BlockInput)) and g.n != inp.n:
        raise OracleError("graph and input disagree on machine count")
    ts = _grid(g, inp)
    sets = [s for s in g.independent_sets() if s]
    J = len(ts) - 1
    if inp.is_empty() or J < 0:
        return OracleResult(ZERO, OfflineSchedule(()))

    lp = LinearProgram()
    B = lp.var("B")
    lam = {}
    for j in range(J):
        for si, s in enumerate(sets):
            lam[j, si] = lp.var(f"l_{j}_{si}")
    z = {}
    machines = [i for i in range(g.n) if inp.total_load(i) > 0]
    for i in machines:
        for j in range(J + 1):
            z[i, j] = lp.var(f"z_{i}_{j}")

    for j in range(J):
        lp.add({lam[j, si]: Q(1) for si in range(len(sets))}, LE, Q(1))

    flow = isinstance(inp, FlowInput)
    for i in machines:
        # boundary value before anything happens
        if flow:
            lp.add({z[i, 0]: Q(1)}, EQ, ZERO)
        else:
            lp.add({z[i, 0]: Q(1)}, EQ, inp.jumps_at(ts[0])[i])
        for j in range(J):
            length = ts[j + 1] - ts[j]
            if flow:
                arr = length if inp.receiving(i, ts[j]) else ZERO
            else:
                arr = inp.jumps_at(ts[j + 1])[i]
            # z_{j+1} = z_j + arrivals - processed;  z >= 0 makes the
            # processed amount exactly the available load, not a relaxation
            coeffs = {z[i, j + 1]: Q(1), z[i, j]: Q(-1)}
            for si, s in enumerate(sets):
                if i in s:
                    coeffs[lam[j, si]] = length
            lp.add(coeffs, EQ, arr)
            if not flow and arr != 0:
                # block arrivals land at the right boundary, so the load
                # just before the jump must already be nonnegative
                pre = {z[i, j]: Q(1)}
                for si, s in enumerate(sets):
                    if i in s:
                        pre[lam[j, si]] = -length
                lp.add(pre, GE, ZERO)
        for j in range(J + 1):
            lp.add({z[i, j]: Q(1), B: Q(-1)}, LE, ZERO)

    lp.objective({B: Q(1)}, "min")
    res = lp.solve()
    if res.status != "optimal":
        raise OracleError(f"offline LP unexpectedly {res.status}; "
                          "valid inputs always admit a schedule")
    bstar = lp.value(res, B)
    # machines without arrivals have no LP constraints, so their membership
    # in the chosen sets is noise; project it away before emitting
    active = frozenset(machines)
    intervals = []
    for j in range(J):
        if ts[j + 1] == ts[j]:
            continue
        acc: Dict[FrozenSet[int], Q] = {}
        for si, s in enumerate(sets):
            w = lp.value(res, lam[j, si])
            if w != 0 and s & active:
                key = s & active
                acc[key] = acc.get(key, ZERO) + w
        intervals.append(ScheduleInterval(ts[j], ts[j + 1], tuple(acc.items())))
    return OracleResult(bstar, OfflineSchedule(tuple(intervals)))


def verify_schedule(g: ConflictGraph, inp, schedule: OfflineSchedule
                    ) -> Tuple[bool, Optional[Q]]:
    """Check a schedule independently of the LP and return its exact peak.

    The check recomputes the full load trajectory: mixture weights must be
    nonnegative, sum to at most 1 and name only independent sets; loads may
    never go negative (that would mean processing phantom load).
    """
    needed = inp.horizon if isinstance(inp, FlowInput) else \
        (inp.arrival_times()[-1] if not inp.is_empty() else ZERO)
    if inp.is_empty() and not schedule.intervals:
        return True, ZERO
    if schedule.end < needed:
        raise ScheduleMismatch("schedule stops before the input horizon")
    if schedule.intervals and schedule.intervals[0].start != 0:
        raise ScheduleMismatch("schedule must start at time 0")
    bounds = set(schedule.boundaries())
    for p in _grid(g, inp):
        if p < schedule.end and p not in bounds:
            raise ScheduleMismatch(f"input breakpoint {qstr(p)} is not a "
                                   "schedule boundary")
    flow = isinstance(inp, FlowInput)
    for iv in schedule.intervals:
        total = ZERO
        for s, w in iv.weights:
            if w < 0 or not g.is_independent(s):
                return False, None
            total += w
        if total > 1:
            return False, None

    z = [ZERO] * g.n
    peak = ZERO
    if not flow:
        jumps = inp.jumps_at(ZERO)
        z = [z[i] + jumps[i] for i in range(g.n)]
        peak = max([peak] + z)
    for iv in schedule.intervals:
        length = iv.end - iv.start
        for i in range(g.n):
            if flow:
                arr = length if inp.receiving(i, iv.start) else ZERO
            else:
                arr = ZERO
            z[i] += arr - length * iv.processing_rate(i)
            if z[i] < 0:
                return False, None
        if not flow:
            jumps = inp.jumps_at(iv.end)
            z = [z[i] + jumps[i] for i in range(g.n)]
        peak = max([peak] + z)
    return True, peak


class ZTrajectory:
    """Reference offline loads z_i(t) induced by a verified schedule.

    Piecewise linear between boundaries; right-continuous at block-model
    arrivals (z_at returns the post-arrival value, z_pre_at the other side).
    Frozen at its final value after the schedule ends: a reference that
    stops processing is still a valid buffer-1 offline run, and delay
    invariants proved against every such run apply to it.
    """

    def __init__(self, g: ConflictGraph, inp, schedule: OfflineSchedule):
        ok, peak = verify_schedule(g, inp, schedule)
        if not ok:
            raise ScheduleMismatch("reference schedule is infeasible")
        self.peak = peak
        self.n = g.n
        flow = isinstance(inp, FlowInput)
        ts: List[Q] = [ZERO]
        pre: List[List[Q]] = [[ZERO] * g.n]
        post: List[List[Q]] = []
        z = [ZERO] * g.n
        if not flow:
            jumps = inp.jumps_at(ZERO)
            z = [z[i] + jumps[i] for i in range(g.n)]
        post.append(list(z))
        for iv in schedule.intervals:
            if iv.end == iv.start:
                continue
            length = iv.end - iv.start
            for i in range(g.n):
                arr = length if flow and inp.receiving(i, iv.start) else ZERO
                z[i] += arr - length * iv.processing_rate(i)
            ts.append(iv.end)
            pre.append(list(z))
            if not flow:
                jumps = inp.jumps_at(iv.end)
                z = [z[i] + jumps[i] for i in range(g.n)]
            post.append(list(z))
        self.ts = ts
        self.pre = pre
        self.post = post

    def boundaries(self) -> List[Q]:
        return list(self.ts)

    def z_at(self, i: int, t: Q) -> Q:
        t = Q(t)
        if t <= self.ts[0]:
            return self.post[0][i]
        for j in range(len(self.ts) - 1):
            if t <= self.ts[j + 1]:
                if t == self.ts[j + 1]:
                    return self.post[j + 1][i]
                a, b = self.post[j][i], self.pre[j + 1][i]
                span = self.ts[j + 1] - self.ts[j]
                return a + (b - a) * (t - self.ts[j]) / span
        return self.post[-1][i]

    def z_pre_at(self, i: int, t: Q) -> Q:
        t = Q(t)
        for j, tj in enumerate(self.ts):
            if t == tj:
                return self.pre[j][i]
        return self.z_at(i, t)


def unit_slot_schedule(slots: Sequence[Tuple[Q, Q, FrozenSet[int]]],
                       end: Q) -> OfflineSchedule:
    """Build a schedule from (start, end, run-set) slots, filling gaps with
    idle intervals and splitting at every integer boundary in between."""
    bounds = {ZERO, Q(end)}
    for s, e, _ in slots:
        bounds.add(Q(s))
        bounds.add(Q(e))
    t = ZERO
    while t < end:  # integer grid keeps input breakpoints aligned
        bounds.add(t)
        t += 1
    pts = sorted(b for b in bounds if b <= end)
    intervals = []
    for a, b in zip(pts, pts[1:]):
        active = [fs for s, e, fs in slots if s <= a and b <= e]
        weights = tuple((fs, Q(1)) for fs in active)
        if sum((w for _, w in weights), ZERO) > 1:
            raise ScheduleMismatch("overlapping unit slots")
        intervals.append(ScheduleInterval(a, b, weights))
    return OfflineSchedule(tuple(intervals))
