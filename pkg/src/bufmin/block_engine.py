"""Simulation of the original (block) model: instantaneous job arrivals,
piecewise-linear draining in between.

Loads jump at arrivals and the policy re-decides on the post-arrival state;
between arrivals nothing flows in, so trajectories are non-increasing and
the decision logic never needs sliding resolution, but the same stabilizer
is used for uniformity (it settles in one step here).
"""
from __future__ import annotations

from typing import List, Optional, Tuple

from .engine import EngineError, Trace, TracePoint, WATCH, stabilize
from .graph import ConflictGraph
from .inputs import BlockInput
from .oracle import ZTrajectory
from .rational import Q, ZERO, qstr


class BlockSim:
    """Incremental block-model simulation; jobs may be appended while the
    run is in progress as long as they arrive in the simulated future."""

    def __init__(self, g: ConflictGraph, policy, watch: Tuple[Q, ...] = WATCH,
                 max_events: int = 50000):
        self.g = g
        self.policy = policy
        self.watch = watch
        self.max_events = max_events
        self.n = g.n
        self.t = ZERO
        self.loads: List[Q] = [ZERO] * g.n
        self.jobs: List[Tuple[Q, int, Q]] = []
        self._next_job = 0
        self.points: List[TracePoint] = []
        self._events = 0
        self._no_recv = tuple([False] * g.n)

    def add_job(self, t: Q, machine: int, size: Q) -> None:
        t, size = Q(t), Q(size)
        if t < self.t:
            raise EngineError("cannot add a job in the simulated past")
        if self.jobs and t < self.jobs[-1][0]:
            raise EngineError("jobs must be appended in arrival order")
        if size <= 0:
            raise EngineError("job sizes must be positive")
        self.jobs.append((t, machine, size))

    def build_input(self) -> BlockInput:
        return BlockInput(self.n, tuple(self.jobs))

    def _pending_arrival(self) -> Optional[Q]:
        if self._next_job < len(self.jobs):
            return self.jobs[self._next_job][0]
        return None

    def _apply_arrivals(self) -> Optional[Tuple[Q, ...]]:
        arr = [ZERO] * self.n
        seen = False
        while self._next_job < len(self.jobs) and \
                self.jobs[self._next_job][0] == self.t:
            _, k, s = self.jobs[self._next_job]
            arr[k] += s
            self.loads[k] += s
            self._next_job += 1
            seen = True
        return tuple(arr) if seen else None

    def _next_event_time(self, rates, sa) -> Optional[Q]:
        best: Optional[Q] = None

        def consider(tau):
            nonlocal best
            if tau is not None and tau > 0 and (best is None or tau < best):
                best = tau

        nxt = self._pending_arrival()
        if nxt is not None:
            consider(nxt - self.t)
        for i in range(self.n):
            if rates[i] != 0:
                for w in self.watch:
                    consider((w - self.loads[i]) / rates[i])
        for i in range(self.n):
            for j in range(i + 1, self.n):
                dr = rates[i] - rates[j]
                if dr != 0:
                    consider((self.loads[j] - self.loads[i]) / dr)
        for coeffs, const in sa.guards:
            v = sum((Q(c) * self.loads[i] for i, c in coeffs), ZERO)
            dv = sum((Q(c) * rates[i] for i, c in coeffs), ZERO)
            if dv != 0:
                consider((const - v) / dv)
        return best

    def run_until(self, target: Q) -> None:
        target = Q(target)
        while self.t < target:
            self._step(limit=target)

    def _step(self, limit: Optional[Q] = None) -> bool:
        self._events += 1
        if self._events > self.max_events:
            raise EngineError(f"event cascade exceeded {self.max_events} events "
                              f"at t={qstr(self.t)}")
        arrivals = self._apply_arrivals()
        sa, rates, _ = stabilize(self.g, self.policy, self.loads, self._no_recv)
        self.points.append(TracePoint(self.t, tuple(self.loads), sa.speeds,
                                      self._no_recv, sa.branch, arrivals))
        tau = self._next_event_time(rates, sa)
        if limit is not None:
            rem = limit - self.t
            tau = rem if tau is None or tau > rem else tau
        if tau is None:
            return False
        self.t += tau
        self.loads = [a + r * tau for a, r in zip(self.loads, rates)]
        assert all(a >= 0 for a in self.loads)
        return True

    def run_to_completion(self, horizon_extension: Optional[Q] = None) -> Trace:
        total = sum((s for _, _, s in self.jobs), ZERO)
        if horizon_extension is None:
            horizon_extension = total + self.n + 1
        horizon = self.jobs[-1][0] if self.jobs else ZERO
        cap = horizon + horizon_extension
        drained = False
        while True:
            done = self._next_job >= len(self.jobs)
            if done and all(a == 0 for a in self.loads):
                drained = True
                break
            if self.t >= cap:
                break
            if not self._step(limit=cap):
                break
        arrivals = self._apply_arrivals()
        sa, _, _ = stabilize(self.g, self.policy, self.loads, self._no_recv)
        self.points.append(TracePoint(self.t, tuple(self.loads), sa.speeds,
                                      self._no_recv, sa.branch, arrivals))
        return Trace("block", self.n, self.points, drained=drained)


def simulate_block(g: ConflictGraph, inp: BlockInput, policy,
                   horizon_extension: Optional[Q] = None) -> Trace:
    if inp.n != g.n:
        raise EngineError("graph and input disagree on machine count")
    sim = BlockSim(g, policy)
    for t, k, s in inp.jobs:
        sim.add_job(t, k, s)
    return sim.run_to_completion(horizon_extension)


def delay_jump_check(trace: Trace, ref: ZTrajectory) -> List[dict]:
    """Delays are continuous across arrivals: the online and reference loads
    jump by the same job sizes. Returns one verdict per arrival point."""
    out = []
    for p in trace.points:
        if p.arrivals is None:
            continue
        ok = True
        for i in range(trace.n):
            a_jump = p.arrivals[i]
            z_jump = ref.z_at(i, p.t) - ref.z_pre_at(i, p.t)
            if a_jump != z_jump:
                ok = False
        out.append({"t": p.t, "ok": ok})
    return out
