"""Exact event-driven simulation of the flow model.

Loads are piecewise linear with rational breakpoints. Between events every
machine evolves at rate (arrival rate - speed), clamped at zero; the policy
is re-invoked at every event. Events are input breakpoints, guard-form
crossings, loads reaching watch values, and loads becoming equal. Event
times are minimal positive roots of linear functions, so no tolerances
appear anywhere.

Boundary semantics. A policy decision must stay valid for a nonzero time
span, so decisions are evaluated on the *right limit* of the state: loads
compare as jets (value, then rate) and a decision is accepted only when it
reproduces itself under the rates it induces. When branch dynamics push the
state straight across the guard that selected the branch, the engine
instead enumerates the sign scenarios the policy can distinguish at the
boundary and keeps the decision whose own dynamics reproduce its assumed
signs; a load that a scenario assumes past a threshold but whose drift is
zero is accepted only if some branch actually pushes it across (it then
hovers there, held by infinitely fast alternation). A livelock or an
ambiguous boundary aborts with a diagnostic: the scheduling policies this
engine targets are constructed to have consistent boundary behavior, so an
abort means an implementation bug, not a model feature.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Tuple

from .graph import ConflictGraph
from .inputs import FlowInput
from .lp import EQ, LE, LinearProgram
from .rational import Q, ZERO, qstr

WATCH: Tuple[Q, ...] = (Q(0), Q(1, 3), Q(1), Q(5, 4), Q(4, 3))

GuardForm = Tuple[Tuple[Tuple[int, Q], ...], Q]  # (((machine, coeff), ...), const)


class EngineError(RuntimeError):
    pass


@dataclass(frozen=True)
class SpeedAssignment:
    """Per-machine speeds plus the linear forms whose sign changes must
    trigger a re-decision. Speeds must lie in the independent-set polytope."""

    speeds: Tuple[Q, ...]
    guards: Tuple[GuardForm, ...] = ()
    branch: str = ""


def guard(coeffs: Dict[int, Q], const) -> GuardForm:
    return (tuple(sorted((i, Q(c)) for i, c in coeffs.items())), Q(const))


# -- state views -----------------------------------------------------------
#
# Policies never touch raw numbers for control flow; they ask the view for
# signs. That lets the engine substitute right-limit and scenario semantics
# without the policies knowing.

class StateView:
    n: int

    def receiving(self, i: int) -> bool:
        raise NotImplementedError

    def load_sign(self, i: int, c) -> int:
        raise NotImplementedError

    def cmp_loads(self, i: int, j: int) -> int:
        raise NotImplementedError

    def form_sign(self, coeffs: Dict[int, Q], c) -> int:
        raise NotImplementedError

    def active(self, i: int) -> bool:
        return self.receiving(i) or self.load_sign(i, ZERO) > 0


def _sign(x) -> int:
    return (x > 0) - (x < 0)


class ExactView(StateView):
    """Plain values; used by the discretized reference engine."""

    def __init__(self, loads: Sequence[Q], recv: Sequence[bool]):
        self.loads = list(loads)
        self.recv = list(recv)
        self.n = len(self.loads)

    def receiving(self, i):
        return self.recv[i]

    def load_sign(self, i, c):
        return _sign(self.loads[i] - Q(c))

    def cmp_loads(self, i, j):
        return _sign(self.loads[i] - self.loads[j])

    def form_sign(self, coeffs, c):
        return _sign(sum((Q(v) * self.loads[i] for i, v in coeffs.items()), ZERO) - Q(c))


class JetView(StateView):
    """Right-limit values: compares (value, rate, hover) lexicographically.

    hover maps boundary keys to +1/-1 for expressions pinned infinitesimally
    past their boundary by an earlier sliding resolution.
    """

    def __init__(self, loads, rates, recv, hover: Optional[dict] = None):
        self.loads = list(loads)
        self.rates = list(rates)
        self.recv = list(recv)
        self.hover = hover or {}
        self.n = len(self.loads)

    def receiving(self, i):
        return self.recv[i]

    def load_sign(self, i, c):
        c = Q(c)
        s = _sign(self.loads[i] - c)
        if s:
            return s
        s = _sign(self.rates[i])
        if s:
            return s
        return self.hover.get(("lc", i, c), 0)

    def cmp_loads(self, i, j):
        s = _sign(self.loads[i] - self.loads[j])
        if s:
            return s
        s = _sign(self.rates[i] - self.rates[j])
        if s:
            return s
        key, flip = (("ll", i, j), 1) if i < j else (("ll", j, i), -1)
        return flip * self.hover.get(key, 0)

    def form_sign(self, coeffs, c):
        c = Q(c)
        v = sum((Q(w) * self.loads[i] for i, w in coeffs.items()), ZERO)
        s = _sign(v - c)
        if s:
            return s
        s = _sign(sum((Q(w) * self.rates[i] for i, w in coeffs.items()), ZERO))
        if s:
            return s
        return self.hover.get(("fc", _form_key(coeffs), c), 0)


def _form_key(coeffs: Dict[int, Q]) -> tuple:
    return tuple(sorted((i, Q(v)) for i, v in coeffs.items()))


class Fork(Exception):
    """A sign query landed exactly on its boundary without an assumption."""

    def __init__(self, key: tuple, signs: Tuple[int, ...]):
        self.key = key
        self.signs = signs


class BranchingView(StateView):
    """Answers strict comparisons by value and raises Fork for queries that
    sit exactly on their boundary, unless the scenario assumes a sign. Used
    to enumerate every sign scenario a decision function can distinguish."""

    def __init__(self, loads, recv, assumptions: dict):
        self.loads = list(loads)
        self.recv = list(recv)
        self.assume = assumptions
        self.n = len(self.loads)

    def receiving(self, i):
        return self.recv[i]

    def _resolve(self, key, value_sign, nonneg=False):
        if value_sign:
            return value_sign
        if key in self.assume:
            return self.assume[key]
        raise Fork(key, (0, 1) if nonneg else (0, 1, -1))

    def load_sign(self, i, c):
        c = Q(c)
        return self._resolve(("lc", i, c), _sign(self.loads[i] - c),
                             nonneg=(c == 0))

    def cmp_loads(self, i, j):
        if i < j:
            return self._resolve(("ll", i, j), _sign(self.loads[i] - self.loads[j]))
        return -self._resolve(("ll", j, i), _sign(self.loads[j] - self.loads[i]))

    def form_sign(self, coeffs, c):
        c = Q(c)
        v = sum((Q(w) * self.loads[i] for i, w in coeffs.items()), ZERO)
        return self._resolve(("fc", _form_key(coeffs), c), _sign(v - c))


# -- feasibility -----------------------------------------------------------

_FEAS_CACHE: Dict[tuple, bool] = {}


def feasible(speeds: Sequence[Q], g: ConflictGraph) -> bool:
    """True iff the speed vector is a convex combination of independent-set
    indicators (decided by an exact LP over the enumerated sets)."""
    key = (g, tuple(Q(s) for s in speeds))
    if key in _FEAS_CACHE:
        return _FEAS_CACHE[key]
    if any(s < 0 for s in speeds):
        _FEAS_CACHE[key] = False
        return False
    lp = LinearProgram()
    sets = [s for s in g.independent_sets() if s]
    for si in range(len(sets)):
        lp.var(f"l{si}")
    lp.add({f"l{si}": Q(1) for si in range(len(sets))}, LE, Q(1))
    for i in range(g.n):
        lp.add({f"l{si}": Q(1) for si, s in enumerate(sets) if i in s},
               EQ, Q(speeds[i]))
    lp.objective({}, "min")
    ok = lp.solve().status == "optimal"
    _FEAS_CACHE[key] = ok
    return ok


# -- derivative of a boundary expression under a rate vector ---------------

def _deriv(key: tuple, rates: Sequence[Q]) -> Q:
    kind = key[0]
    if kind == "lc":
        return rates[key[1]]
    if kind == "ll":
        return rates[key[1]] - rates[key[2]]
    if kind == "fc":
        return sum((Q(v) * rates[i] for i, v in key[1]), ZERO)
    raise AssertionError(key)


_EXPLORE_CAP = 4000


def _explore_scenarios(g, policy, loads, recv):
    """All (assumption map, decision) leaves of the policy's sign-query
    tree over the boundary-active expressions at this state."""
    leaves = []
    stack = [dict()]
    nodes = 0
    while stack:
        nodes += 1
        if nodes > _EXPLORE_CAP:
            raise EngineError("sliding scenario tree too wide")
        assume = stack.pop()
        try:
            sa = policy.decide(g, BranchingView(loads, recv, assume))
        except Fork as f:
            for s in f.signs:
                nxt = dict(assume)
                nxt[f.key] = s
                stack.append(nxt)
            continue
        leaves.append((assume, sa))
    return leaves


def stabilize(g: ConflictGraph, policy, loads: Sequence[Q],
              recv: Sequence[bool], check_feasible: bool = True):
    """Find the policy decision that is consistent on the right limit.

    Fast path: iterate decide on jets (value, then rate) until it returns a
    fixed point; ties and plain threshold holds settle here. If the
    iteration cycles, the state sits on a switching surface: enumerate the
    sign scenarios the policy can distinguish, keep those whose own dynamics
    reproduce their assumed signs (an expression assumed off its boundary
    with zero drift must be pushed that way by some other scenario's
    dynamics, else it would be a phantom), and demand a unique answer.

    Returns (assignment, rates, hover). Raises EngineError when the branch
    logic livelocks or the sliding decision is ambiguous.
    """
    n = len(loads)
    memo = _stab_memo(policy)
    sig = (g, _signature(loads, recv, getattr(policy, "watch_forms", ())))
    if sig in memo:
        return memo[sig]

    def rates_for(speeds):
        out = []
        for i in range(n):
            r = (Q(1) if recv[i] else ZERO) - speeds[i]
            if loads[i] == 0 and r < 0:
                r = ZERO  # an empty machine may run, but cannot go negative
            out.append(r)
        return tuple(out)

    def accept(sa, rates, hover):
        if check_feasible and not feasible(sa.speeds, g):
            raise EngineError(f"policy {getattr(policy, 'name', policy)} returned "
                              f"infeasible speeds {[qstr(s) for s in sa.speeds]}")
        memo[sig] = (sa, rates, hover)
        return memo[sig]

    sa = policy.decide(g, JetView(loads, [ZERO] * n, recv))
    seen = set()
    for _ in range(16):
        rates = rates_for(sa.speeds)
        sa2 = policy.decide(g, JetView(loads, rates, recv))
        if sa2.speeds == sa.speeds:
            return accept(sa2, rates, {})
        if sa2.speeds in seen:
            break
        seen.add(sa.speeds)
        sa = sa2
    else:
        raise EngineError("decision iteration did not settle")

    leaves = _explore_scenarios(g, policy, loads, recv)
    rated = [(assume, cand, rates_for(cand.speeds)) for assume, cand in leaves]

    def supported(key, sgn):
        return any(_sign(_deriv(key, r)) == sgn for _, _, r in rated)

    accepted = []
    for assume, cand, rates in rated:
        hover = {}
        ok = True
        for key, sgn in assume.items():
            d = _deriv(key, rates)
            if sgn == 0:
                if d != 0:
                    ok = False
                    break
            elif _sign(d) != sgn:
                if d == 0 and supported(key, sgn):
                    hover[key] = sgn  # held on the far side by chatter
                else:
                    ok = False
                    break
        if ok:
            accepted.append((cand, rates, hover))
    distinct = {c.speeds for c, _, _ in accepted}
    if len(distinct) == 1:
        return accept(*accepted[0])
    state = {f"m{i + 1}": qstr(loads[i]) for i in range(n)}
    raise EngineError(
        f"no consistent sliding decision (candidates={len(distinct)}) at state "
        f"{state}, receiving={list(recv)}")


def _signature(loads, recv, forms: Tuple[GuardForm, ...]) -> tuple:
    """Everything a decision function can observe about a state: sign
    pattern against the watch thresholds, the load ordering, the receiving
    flags, and the policy's declared comparison forms. Decisions are
    memoized per signature, which is sound because equal signatures answer
    every sign query identically and hence walk the same decision path to
    the same exact speeds."""
    n = len(loads)
    lc = tuple(tuple(_sign(loads[i] - w) for w in WATCH) for i in range(n))
    pairs = tuple(_sign(loads[i] - loads[j])
                  for i in range(n) for j in range(i + 1, n))
    fsigns = tuple(_sign(sum((Q(c) * loads[i] for i, c in coeffs), ZERO) - const)
                   for coeffs, const in forms)
    return (lc, pairs, fsigns, tuple(recv))


_STAB_MEMOS: Dict[int, Dict] = {}


def _stab_memo(policy) -> Dict:
    return _STAB_MEMOS.setdefault(id(policy), {})


# -- traces ----------------------------------------------------------------

@dataclass(frozen=True)
class TracePoint:
    t: Q
    loads: Tuple[Q, ...]
    speeds: Tuple[Q, ...]
    receiving: Tuple[bool, ...]
    branch: str = ""
    arrivals: Optional[Tuple[Q, ...]] = None  # block model: jump applied at t


@dataclass
class Trace:
    model: str
    n: int
    points: List[TracePoint]
    drained: bool = True

    @property
    def max_load(self) -> Q:
        """Peak stored load; loads are piecewise linear so the maximum is
        attained at a breakpoint."""
        best = ZERO
        for p in self.points:
            m = max(p.loads)
            if m > best:
                best = m
        return best

    @property
    def end(self) -> Q:
        return self.points[-1].t

    def load_at(self, i: int, t: Q) -> Q:
        """Load on machine i at time t (post-arrival at block breakpoints)."""
        t = Q(t)
        pts = self.points
        if t <= pts[0].t:
            return pts[0].loads[i]
        if t >= pts[-1].t:
            return pts[-1].loads[i]
        for k in range(len(pts) - 1):
            a, b = pts[k], pts[k + 1]
            if a.t <= t <= b.t:
                if t == b.t:
                    return b.loads[i]
                end = b.loads[i]
                if b.arrivals is not None:
                    end = end - b.arrivals[i]
                span = b.t - a.t
                return a.loads[i] + (end - a.loads[i]) * (t - a.t) / span
        raise AssertionError("time outside trace")

    def pre_load_at(self, i: int, t: Q) -> Q:
        t = Q(t)
        for p in self.points:
            if p.t == t and p.arrivals is not None:
                return p.loads[i] - p.arrivals[i]
        return self.load_at(i, t)

    def breakpoints(self) -> List[Q]:
        return [p.t for p in self.points]

    def to_json(self) -> dict:
        return {"model": self.model, "n": self.n, "drained": self.drained,
                "maxLoad": qstr(self.max_load),
                "points": [
                    {"t": qstr(p.t),
                     "loads": [qstr(v) for v in p.loads],
                     "speeds": [qstr(v) for v in p.speeds],
                     "receiving": list(p.receiving),
                     "branch": p.branch,
                     **({"arrivals": [qstr(v) for v in p.arrivals]}
                        if p.arrivals is not None else {})}
                    for p in self.points]}

    def to_csv(self) -> str:
        cols = ["t"] + [f"a_{i + 1}" for i in range(self.n)] \
            + [f"s_{i + 1}" for i in range(self.n)] \
            + [f"recv_{i + 1}" for i in range(self.n)]
        block = any(p.arrivals is not None for p in self.points)
        if block:
            cols += [f"arr_{i + 1}" for i in range(self.n)]
        rows = [",".join(cols)]
        for p in self.points:
            row = [qstr(p.t)] + [qstr(v) for v in p.loads] \
                + [qstr(v) for v in p.speeds] \
                + ["1" if r else "0" for r in p.receiving]
            if block:
                arr = p.arrivals or tuple([ZERO] * self.n)
                row += [qstr(v) for v in arr]
            rows.append(",".join(row))
        return "\n".join(rows) + "\n"


# -- the simulator ---------------------------------------------------------

class FluidSim:
    """Incremental flow-model simulation; adversaries extend the input while
    the run is in progress, so a run is also its own replay transcript."""

    def __init__(self, g: ConflictGraph, policy, watch: Tuple[Q, ...] = WATCH,
                 max_events: int = 50000):
        self.g = g
        self.policy = policy
        self.watch = watch
        self.max_events = max_events
        self.n = g.n
        self.t = ZERO
        self.loads: List[Q] = [ZERO] * g.n
        self.intervals: List[List[Tuple[Q, Q]]] = [[] for _ in range(g.n)]
        self.points: List[TracePoint] = []
        self._events = 0

    # input management
    def add_flow(self, i: int, s: Q, e: Q) -> None:
        s, e = Q(s), Q(e)
        if s < self.t:
            raise EngineError("cannot add flow in the simulated past")
        if e <= s:
            raise EngineError("empty flow interval")
        ivs = self.intervals[i]
        if ivs and s < ivs[-1][1]:
            raise EngineError("flow intervals must be appended in order")
        if ivs and ivs[-1][1] == s:
            ivs[-1] = (ivs[-1][0], e)
        else:
            ivs.append((s, e))

    def receiving_at(self, t: Q) -> Tuple[bool, ...]:
        return tuple(any(s <= t < e for s, e in ivs) for ivs in self.intervals)

    def _input_end(self) -> Q:
        ends = [ivs[-1][1] for ivs in self.intervals if ivs]
        return max(ends) if ends else ZERO

    def _next_input_breakpoint(self, t: Q) -> Optional[Q]:
        cands = [p for ivs in self.intervals for se in ivs for p in se if p > t]
        return min(cands) if cands else None

    def build_input(self) -> FlowInput:
        return FlowInput(self.n, tuple(tuple(ivs) for ivs in self.intervals),
                         self._input_end())

    # simulation core
    def _record(self, speeds, recv, branch):
        self.points.append(TracePoint(self.t, tuple(self.loads),
                                      tuple(speeds), tuple(recv), branch))

    def _next_event_time(self, rates, sa) -> Optional[Q]:
        best: Optional[Q] = None

        def consider(tau):
            nonlocal best
            if tau is not None and tau > 0 and (best is None or tau < best):
                best = tau

        nb = self._next_input_breakpoint(self.t)
        if nb is not None:
            consider(nb - self.t)
        for i in range(self.n):
            r = rates[i]
            if r != 0:
                for w in self.watch:
                    consider((w - self.loads[i]) / r)
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
        """Advance one segment; returns False when the run is complete."""
        self._events += 1
        if self._events > self.max_events:
            raise EngineError(f"event cascade exceeded {self.max_events} events "
                              f"at t={qstr(self.t)}; state="
                              f"{[qstr(v) for v in self.loads]}")
        recv = self.receiving_at(self.t)
        sa, rates, _ = stabilize(self.g, self.policy, self.loads, recv)
        self._record(sa.speeds, recv, sa.branch)
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
        total = sum((e - s for ivs in self.intervals for s, e in ivs), ZERO)
        if horizon_extension is None:
            horizon_extension = total + self.n + 1
        cap = self._input_end() + horizon_extension
        drained = False
        while True:
            if self.t >= self._input_end() and all(a == 0 for a in self.loads):
                drained = True
                break
            if self.t >= cap:
                break
            progressed = self._step(limit=cap)
            if not progressed:
                break
        recv = self.receiving_at(self.t)
        sa, _, _ = stabilize(self.g, self.policy, self.loads, recv)
        self._record(sa.speeds, recv, sa.branch)
        return Trace("flow", self.n, self.points, drained=drained)


def simulate(g: ConflictGraph, inp: FlowInput, policy,
             horizon_extension: Optional[Q] = None,
             watch: Tuple[Q, ...] = WATCH) -> Trace:
    """Run a complete flow input against a policy and return its trace."""
    if inp.n != g.n:
        raise EngineError("graph and input disagree on machine count")
    sim = FluidSim(g, policy, watch=watch)
    for i, ivs in enumerate(inp.per_machine):
        for s, e in ivs:
            sim.add_flow(i, s, e)
    return sim.run_to_completion(horizon_extension)


def discretized_simulate(g: ConflictGraph, inp: FlowInput, policy, h: Q,
                         horizon_extension: Optional[Q] = None) -> Trace:
    """Forward-Euler reference: re-invoke the policy every h on the exact
    state, clamping loads at zero. Used only to cross-validate the exact
    engine; the two must agree up to O(h)."""
    h = Q(h)
    if h <= 0:
        raise EngineError("step must be positive")
    total = sum((inp.total_load(i) for i in range(g.n)), ZERO)
    if horizon_extension is None:
        horizon_extension = total + g.n + 1
    cap = inp.horizon + horizon_extension
    t = ZERO
    loads = [ZERO] * g.n
    points: List[TracePoint] = []
    while True:
        recv = tuple(inp.receiving(i, t) for i in range(g.n))
        sa = policy.decide(g, ExactView(loads, recv))
        points.append(TracePoint(t, tuple(loads), sa.speeds, recv, sa.branch))
        if t >= inp.horizon and all(a == 0 for a in loads):
            return Trace("flow", g.n, points, drained=True)
        if t >= cap:
            return Trace("flow", g.n, points, drained=False)
        new = []
        for i in range(g.n):
            arr = Q(1) if recv[i] else ZERO
            v = loads[i] + (arr - sa.speeds[i]) * h
            new.append(v if v > 0 else ZERO)
        loads = new
        t += h
