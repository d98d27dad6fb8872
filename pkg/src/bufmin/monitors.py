"""Invariant monitors evaluated along exact traces.

A monitor never changes a trace; it re-derives everything from the recorded
breakpoints and a reference offline trajectory z (which defines the delays
d_i = a_i - z_i). All quantities involved are piecewise linear, so each
check evaluates its expression on a finite grid containing every kink:
trace and reference breakpoints, plus the roots the specific expression
introduces (positive parts, argmax switches). Verdicts are exact; a failure
carries a rational witness time.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

from .engine import Trace
from .graph import ConflictGraph
from .oracle import ZTrajectory
from .rational import Q, ZERO, qstr

Term = Tuple[str, int, Q]  # (kind 'a'|'z'|'d', machine, coefficient)


class MonitorError(ValueError):
    pass


@dataclass(frozen=True)
class DelayFrame:
    """Snapshot of online load a, reference load z, delay d = a - z and
    headroom phi = 1 - z (how much could still arrive instantly under a
    buffer-1 reference) per machine."""

    t: Q
    a: Tuple[Q, ...]
    z: Tuple[Q, ...]

    @property
    def d(self) -> Tuple[Q, ...]:
        return tuple(a - z for a, z in zip(self.a, self.z))

    @property
    def phi(self) -> Tuple[Q, ...]:
        return tuple(Q(1) - z for z in self.z)


def delay_frames(trace: Trace, ref: ZTrajectory) -> List[DelayFrame]:
    """Frames at every breakpoint of the trace/reference pair."""
    out = []
    for t in _base_grid(trace, ref):
        out.append(DelayFrame(t,
                              tuple(trace.load_at(i, t) for i in range(trace.n)),
                              tuple(ref.z_at(i, t) for i in range(trace.n))))
    return out


@dataclass(frozen=True)
class LinearInvariant:
    """sum of terms <= bound, checked at every kink of the expression."""

    name: str
    terms: Tuple[Term, ...]
    bound: Q
    scope: str = "always"

    def needs_reference(self) -> bool:
        return any(kind in ("z", "d") for kind, _, _ in self.terms)


@dataclass(frozen=True)
class Verdict:
    invariant: str
    status: str  # pass | fail
    first_violation: Optional[dict] = None

    @property
    def ok(self) -> bool:
        return self.status == "pass"

    def to_json(self) -> dict:
        doc = {"invariant": self.invariant, "status": self.status,
               "firstViolation": None}
        if self.first_violation is not None:
            doc["firstViolation"] = {
                "t": qstr(self.first_violation["t"]),
                "values": {k: qstr(v)
                           for k, v in self.first_violation["values"].items()}}
        return doc


def d_invariant(name: str, coeffs: Dict[int, int], bound) -> LinearInvariant:
    terms = tuple(("d", i, Q(c)) for i, c in sorted(coeffs.items()))
    return LinearInvariant(name, terms, Q(bound))


def a_cap(machine: int, bound) -> LinearInvariant:
    return LinearInvariant(f"a{machine + 1}<={qstr(Q(bound))}",
                           (("a", machine, Q(1)),), Q(bound))


def invariant_suite(policy_name: str, n: int = 4) -> List[LinearInvariant]:
    """The delay-invariant family a policy's guarantee rests on."""
    key = policy_name.lower()
    if key == "prio_center":
        return [d_invariant("d1+d2+d3<=0", {0: 1, 1: 1, 2: 1}, 0),
                d_invariant("d2+d3+d4<=0", {1: 1, 2: 1, 3: 1}, 0),
                d_invariant("d2+d3<=0", {1: 1, 2: 1}, 0)]
    if key == "prio_greedy_original":
        return [d_invariant("d3<=5/4", {2: 1}, Q(5, 4)),
                d_invariant("d3+d4<=5/4", {2: 1, 3: 1}, Q(5, 4)),
                d_invariant("d4<=5/4", {3: 1}, Q(5, 4)),
                d_invariant("d1+d2+d3<=1", {0: 1, 1: 1, 2: 1}, 1),
                d_invariant("d1+d2<=1", {0: 1, 1: 1}, 1)]
    if key == "prio_greedy_flow":
        return [d_invariant("d1+d2+d3<=0", {0: 1, 1: 1, 2: 1}, 0),
                d_invariant("d3+d4<=1/3", {2: 1, 3: 1}, Q(1, 3)),
                a_cap(0, Q(4, 3)), a_cap(1, Q(4, 3)),
                a_cap(2, Q(4, 3)), a_cap(3, Q(4, 3))]
    if key == "prio_vl":
        out = []
        for i in range(1, n):
            out.append(d_invariant(f"d1+d{i + 1}<=0", {0: 1, i: 1}, 0))
        for i in range(1, n):
            out.append(a_cap(i, 1))
        return out
    raise MonitorError(f"no invariant suite for policy {policy_name!r}")


# -- evaluation machinery ----------------------------------------------------

def _base_grid(trace: Trace, ref: Optional[ZTrajectory]) -> List[Q]:
    pts = set(trace.breakpoints())
    if ref is not None:
        pts.update(p for p in ref.boundaries() if p <= trace.end)
    return sorted(pts)


def _value(trace: Trace, ref, kind: str, i: int, t: Q, pre: bool) -> Q:
    if kind == "a":
        return trace.pre_load_at(i, t) if pre else trace.load_at(i, t)
    z_post = ref.z_at(i, t)
    z = ref.z_pre_at(i, t) if pre else z_post
    if kind == "z":
        return z
    return (trace.pre_load_at(i, t) if pre else trace.load_at(i, t)) - z


def _eval_points(grid: Sequence[Q], trace: Trace) -> List[Tuple[Q, bool]]:
    """(time, pre-flag) pairs; block arrivals are checked on both sides."""
    arrivals = {p.t for p in trace.points if p.arrivals is not None}
    out: List[Tuple[Q, bool]] = []
    for t in grid:
        if t in arrivals:
            out.append((t, True))
        out.append((t, False))
    return out


def _linear_roots_on(grid: Sequence[Q], fns: Sequence) -> List[Q]:
    """Roots of pairwise differences of piecewise-linear functions, segment
    by segment. Each fn maps a rational time to a rational value and is
    linear between consecutive grid points."""
    extra = set()
    for t0, t1 in zip(grid, grid[1:]):
        for a in range(len(fns)):
            for b in range(a + 1, len(fns)):
                f0 = fns[a](t0) - fns[b](t0)
                f1 = fns[a](t1) - fns[b](t1)
                if f0 == f1:
                    continue
                root = t0 + (t1 - t0) * (-f0) / (f1 - f0)
                if t0 < root < t1:
                    extra.add(root)
    return sorted(set(grid) | extra)


def check_linear(trace: Trace, ref: Optional[ZTrajectory],
                 inv: LinearInvariant) -> Verdict:
    """Exact check of a linear invariant at every kink of its expression."""
    if inv.needs_reference() and ref is None:
        raise MonitorError(f"invariant {inv.name} needs a reference schedule")
    grid = _base_grid(trace, ref)
    for t, pre in _eval_points(grid, trace):
        total = ZERO
        values = {}
        for kind, i, coeff in inv.terms:
            v = _value(trace, ref, kind, i, t, pre)
            values[f"{kind}{i + 1}"] = v
            total += coeff * v
        if total > inv.bound:
            return Verdict(inv.name, "fail",
                           {"t": t, "values": values, "pre": pre})
    return Verdict(inv.name, "pass")


def check_suite(trace: Trace, ref: Optional[ZTrajectory],
                invs: Iterable[LinearInvariant]) -> List[Verdict]:
    return [check_linear(trace, ref, inv) for inv in invs]


def check_no_unique_max(trace: Trace) -> Verdict:
    """No single machine ever holds the strictly highest load.

    Between breakpoints the loads are linear, so after refining each segment
    at pairwise crossings the strict-max pattern is constant on every open
    piece and one midpoint probe per piece is exact.
    """
    name = "no-unique-max"
    if trace.n == 1:
        return Verdict(name, "pass")
    fns = [lambda t, i=i: trace.load_at(i, t) for i in range(trace.n)]
    grid = _linear_roots_on(trace.breakpoints(), fns)
    for t0, t1 in zip(grid, grid[1:]):
        mid = (t0 + t1) / 2
        loads = [trace.load_at(i, mid) for i in range(trace.n)]
        top = max(loads)
        if sum(1 for v in loads if v == top) == 1:
            i = loads.index(top)
            return Verdict(name, "fail",
                           {"t": mid, "values": {f"a{i + 1}": top},
                            "interval": (t0, t1)})
    return Verdict(name, "pass")


def check_smooth_clique(trace: Trace, ref: ZTrajectory, g: ConflictGraph,
                        clique: Iterable[int]) -> Verdict:
    """sum_K a <= sum_K z + |K| max_L a for a smooth clique K, L = N(K)."""
    K = sorted(set(clique))
    if not g.is_clique(K) or not g.is_smooth(K):
        raise MonitorError("monitored set must be a smooth clique")
    L = sorted(g.neighbors_outside(K))
    name = f"smooth-clique[{'+'.join(str(i + 1) for i in K)}]"
    base = _base_grid(trace, ref)
    fns = [lambda t, i=i: trace.load_at(i, t) for i in L]
    grid = _linear_roots_on(base, fns) if len(fns) > 1 else base
    for t, pre in _eval_points(grid, trace):
        lhs = sum((_value(trace, ref, "a", i, t, pre) for i in K), ZERO)
        rhs = sum((_value(trace, ref, "z", i, t, pre) for i in K), ZERO)
        if L:
            rhs += len(K) * max(_value(trace, ref, "a", i, t, pre) for i in L)
        if lhs > rhs:
            return Verdict(name, "fail", {"t": t, "values": {
                "lhs": lhs, "rhs": rhs}})
    return Verdict(name, "pass")


def check_kpartite(trace: Trace, ref: ZTrajectory, g: ConflictGraph,
                   classes: Sequence[Iterable[int]]) -> Verdict:
    """sum over classes of max [d]+ <= max(k * max_L a, k-1) for a smooth
    complete k-partite subgraph with outside neighborhood L."""
    classes = [sorted(set(c)) for c in classes]
    members = [i for c in classes for i in c]
    if len(set(members)) != len(members):
        raise MonitorError("classes must be disjoint")
    for a in range(len(classes)):
        for b in range(len(classes)):
            for u in classes[a]:
                for v in classes[b]:
                    if u == v:
                        continue
                    want = a != b
                    if g.adjacent(u, v) != want:
                        raise MonitorError("subgraph is not complete k-partite")
    if not g.is_smooth(members):
        raise MonitorError("subgraph must be smooth")
    L = sorted(g.neighbors_outside(members))
    k = len(classes)
    name = f"kpartite[{';'.join('+'.join(str(i + 1) for i in c) for c in classes)}]"

    base = _base_grid(trace, ref)
    # kinks: d_j = 0 and argmax switches inside classes, argmax in L, and
    # the switch between the two sides of the outer max
    fns = [lambda t: ZERO]
    for c in classes:
        for i in c:
            fns.append(lambda t, i=i: trace.load_at(i, t) - ref.z_at(i, t))
    for i in L:
        fns.append(lambda t, i=i: trace.load_at(i, t))
        fns.append(lambda t, i=i: Q(k) * trace.load_at(i, t) - Q(k - 1))
    grid = _linear_roots_on(base, fns)
    for t, pre in _eval_points(grid, trace):
        lhs = ZERO
        for c in classes:
            best = max(_value(trace, ref, "d", i, t, pre) for i in c)
            if best > 0:
                lhs += best
        rhs = Q(k - 1)
        if L:
            alt = Q(k) * max(_value(trace, ref, "a", i, t, pre) for i in L)
            rhs = max(rhs, alt)
        if lhs > rhs:
            return Verdict(name, "fail", {"t": t, "values": {
                "lhs": lhs, "rhs": rhs}})
    return Verdict(name, "pass")


def condition_a_strict_check(trace: Trace) -> Verdict:
    """The strict clause of the high-load branch must never be the active
    trigger along an engine trajectory."""
    name = "A-strict-never-fires"
    for p in trace.points:
        if p.branch == "A-strict":
            return Verdict(name, "fail", {"t": p.t, "values": {}})
    return Verdict(name, "pass")


def critical_intervals(trace: Trace) -> List[Tuple[Q, Q]]:
    """Diagnostic: maximal open intervals with max(a1,a2) > 1/3 and
    min(a1,a2) < 1/3."""
    third = Q(1, 3)
    fns = [lambda t: trace.load_at(0, t), lambda t: trace.load_at(1, t),
           lambda t: third]
    grid = _linear_roots_on(trace.breakpoints(), fns)
    out: List[Tuple[Q, Q]] = []
    for t0, t1 in zip(grid, grid[1:]):
        mid = (t0 + t1) / 2
        a, b = trace.load_at(0, mid), trace.load_at(1, mid)
        if max(a, b) > third and min(a, b) < third:
            if out and out[-1][1] == t0:
                out[-1] = (out[-1][0], t1)
            else:
                out.append((t0, t1))
    return out
