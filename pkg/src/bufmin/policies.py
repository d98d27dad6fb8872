"""Online scheduling policies as pure decision functions.

Every policy maps (graph, state view) to a SpeedAssignment and is
deterministic and memoryless. State is only read through the view's sign
queries, so the same policy code runs on exact states, right-limit jets and
scenario probes.

Greedy ranks machines by (load, receiving) lexicographically descending.
Ranking ties form priority classes; classes are served top-down, and within
a class the speeds of active machines maximize the minimum speed subject to
the independent-set polytope and the speeds already fixed for higher
classes, with total speed as the secondary objective. Equal machines with
equal conflict structure therefore drain at equal rates and stay tied,
which is what makes the fluid limit of "alternate rapidly between tied
machines" well defined. A final lexicographic pass (by machine index) pins
any residual degeneracy so decisions are bit-for-bit reproducible.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import cmp_to_key
from typing import Callable, Dict, Iterable, List, Optional, Tuple

from .engine import GuardForm, SpeedAssignment, StateView, guard
from .graph import ConflictGraph
from .lp import EQ, GE, LE, LinearProgram
from .rational import Q, ZERO


class PolicyError(ValueError):
    pass


@dataclass(frozen=True)
class Policy:
    """A named deterministic, memoryless decision function.

    Policies must read state only through the view's sign queries, with
    thresholds drawn from the engine watch set; any other linear form they
    compare must be declared in watch_forms so the engine can key its
    decision cache (and its events) correctly.
    """

    name: str
    model_kind: str  # flow | block | both
    _decide: Callable[[ConflictGraph, StateView], SpeedAssignment]
    watch_forms: Tuple[GuardForm, ...] = ()

    def decide(self, g: ConflictGraph, view: StateView) -> SpeedAssignment:
        return self._decide(g, view)


# -- greedy speed computation ----------------------------------------------

_CLASS_CACHE: Dict[tuple, Tuple[Q, ...]] = {}


def _ranked_classes(view: StateView, candidates: List[int]) -> List[List[int]]:
    def cmp(i, j):
        c = view.cmp_loads(i, j)
        if c:
            return -c
        ri, rj = view.receiving(i), view.receiving(j)
        if ri != rj:
            return -1 if ri else 1
        return i - j

    order = sorted(candidates, key=cmp_to_key(cmp))
    classes: List[List[int]] = []
    for m in order:
        if classes and view.cmp_loads(classes[-1][0], m) == 0 \
                and view.receiving(classes[-1][0]) == view.receiving(m):
            classes[-1].append(m)
        else:
            classes.append([m])
    return classes


def _solve_classes(g: ConflictGraph, classes: List[List[int]],
                   fixed: Dict[int, Q]) -> Dict[int, Q]:
    """Max-min, then max-total, then lexicographic speeds per class."""
    runnable = {m for cls in classes for m in cls} | \
        {m for m, v in fixed.items() if v > 0}
    sets = [s for s in g.independent_sets() if s and s <= runnable]
    fixed = dict(fixed)
    for cls in classes:
        if not sets:
            for m in cls:
                fixed[m] = ZERO
            continue
        base = LinearProgram()
        for si in range(len(sets)):
            base.var(f"l{si}")
        t = base.var("t")
        names = {m: [f"l{si}" for si, s in enumerate(sets) if m in s]
                 for m in runnable}

        def speed(m):
            return {nm: Q(1) for nm in names.get(m, [])}

        base.add({f"l{si}": Q(1) for si in range(len(sets))}, LE, Q(1))
        for m, v in fixed.items():
            base.add(speed(m), EQ, v)
        pinned: List[Tuple[int, Q]] = []

        def solve(objective, extra):
            lp = LinearProgram()
            lp._names = list(base._names)
            lp._index = dict(base._index)
            lp._rows = list(base._rows) + extra
            lp.objective(objective, "max")
            return lp

        def solved(lp):
            res = lp.solve()
            if res.status != "optimal":
                raise PolicyError(f"class speed program {res.status}; "
                                  "inconsistent fixed speeds")
            return res

        # 1. maximize the minimum speed over the class
        rows = []
        for m in cls:
            coeffs = speed(m)
            coeffs[t] = Q(-1)
            rows.append(({base._index[k]: v for k, v in coeffs.items()}, GE, ZERO))
        lp1 = solve({t: Q(1)}, rows)
        r1 = solved(lp1)
        tstar = lp1.value(r1, t)
        floor_rows = []
        for m in cls:
            floor_rows.append(({base._index[k]: v for k, v in speed(m).items()},
                               GE, tstar))
        # 2. maximize total speed in the class at that floor
        total_obj = {}
        for m in cls:
            for nm in names[m]:
                total_obj[nm] = total_obj.get(nm, ZERO) + 1
        lp2 = solve(total_obj, list(floor_rows))
        r2 = solved(lp2)
        total = r2.objective
        sum_row = ({base._index[k]: v for k, v in total_obj.items()}, EQ, total)
        # 3. pin members one by one for determinism
        for m in sorted(cls):
            extra = list(floor_rows) + [sum_row]
            for mm, v in pinned:
                extra.append(({base._index[k]: c for k, c in speed(mm).items()},
                              EQ, v))
            lp3 = solve(speed(m), extra)
            r3 = solved(lp3)
            pinned.append((m, r3.objective))
        fixed.update(pinned)
    return fixed


def greedy_speeds(g: ConflictGraph, view: StateView,
                  allowed: Optional[Iterable[int]] = None,
                  fixed: Optional[Dict[int, Q]] = None) -> Tuple[Q, ...]:
    """Greedy's speed vector over `allowed` machines (default: all), with
    `fixed` speeds already committed by the caller's branch logic."""
    allowed = set(range(g.n)) if allowed is None else set(allowed)
    fixed = {m: Q(v) for m, v in (fixed or {}).items()}
    candidates = [i for i in sorted(allowed)
                  if i not in fixed and view.active(i)]
    classes = _ranked_classes(view, candidates)
    key = (g, tuple(tuple(c) for c in classes),
           tuple(sorted(fixed.items())))
    if key in _CLASS_CACHE:
        return _CLASS_CACHE[key]
    solved = _solve_classes(g, classes, fixed)
    speeds = tuple(solved.get(i, ZERO) for i in range(g.n))
    _CLASS_CACHE[key] = speeds
    return speeds


def greedy_guards(g: ConflictGraph, view: StateView,
                  candidates: Optional[Iterable[int]] = None) -> Tuple[GuardForm, ...]:
    """Pairwise equalities between adjacent priority classes plus load-zero
    guards. The engine's global event set already covers these; they are
    attached for completeness of the assignment's contract."""
    cand = [i for i in (candidates if candidates is not None else range(g.n))
            if view.active(i)]
    classes = _ranked_classes(view, cand)
    guards: List[GuardForm] = []
    for a, b in zip(classes, classes[1:]):
        for i in a:
            for j in b:
                guards.append(guard({i: Q(1), j: Q(-1)}, ZERO))
    for i in cand:
        guards.append(guard({i: Q(1)}, ZERO))
    return tuple(guards)


def _greedy_decide(g: ConflictGraph, view: StateView) -> SpeedAssignment:
    speeds = greedy_speeds(g, view)
    return SpeedAssignment(speeds, greedy_guards(g, view), branch="greedy")


# -- the star policy ---------------------------------------------------------

def _require_star(g: ConflictGraph) -> None:
    leaves = set(range(1, g.n))
    if g.neighbors(0) != frozenset(leaves) or \
            any(g.neighbors(i) != frozenset({0}) for i in leaves):
        raise PolicyError("this policy needs a star with center m1")


def _prio_vl_decide(g: ConflictGraph, view: StateView) -> SpeedAssignment:
    _require_star(g)
    leaves = range(1, g.n)
    full_leaf = any(view.load_sign(i, Q(1)) == 0 and view.receiving(i)
                    for i in leaves)
    guards = tuple([guard({0: Q(1)}, ZERO)] +
                   [guard({i: Q(1)}, Q(1)) for i in leaves])
    if view.load_sign(0, ZERO) == 0 or full_leaf:
        speeds = tuple([ZERO] + [Q(1) if view.active(i) else ZERO for i in leaves])
        return SpeedAssignment(speeds, guards, branch="leaves")
    speeds = tuple([Q(1)] + [ZERO] * (g.n - 1))
    return SpeedAssignment(speeds, guards, branch="center")


# -- K4-e ---------------------------------------------------------------------

_K4ME_EDGES = frozenset({(0, 1), (0, 2), (1, 2), (1, 3), (2, 3)})


def _require_k4me(g: ConflictGraph) -> None:
    if g.n != 4 or g.edges != _K4ME_EDGES:
        raise PolicyError("this policy needs the canonical K4-e labeling")


def _prio_center_decide(g: ConflictGraph, view: StateView) -> SpeedAssignment:
    _require_k4me(g)

    def outer_dominates(i):
        return view.load_sign(i, Q(1)) >= 0 and view.cmp_loads(i, 1) >= 0 \
            and view.cmp_loads(i, 2) >= 0

    center_empty = view.load_sign(1, ZERO) == 0 and view.load_sign(2, ZERO) == 0
    guards = (guard({0: Q(1)}, Q(1)), guard({3: Q(1)}, Q(1)))
    if outer_dominates(0) or outer_dominates(3) or center_empty:
        speeds = greedy_speeds(g, view)
        return SpeedAssignment(speeds, guards + greedy_guards(g, view), branch="all")
    speeds = greedy_speeds(g, view, allowed={1, 2})
    return SpeedAssignment(speeds, guards + greedy_guards(g, view, (1, 2)),
                           branch="center")


# -- K3+e ---------------------------------------------------------------------

_K3PE_EDGES = frozenset({(0, 1), (0, 2), (1, 2), (2, 3)})


def _require_k3pe(g: ConflictGraph) -> None:
    if g.n != 4 or g.edges != _K3PE_EDGES:
        raise PolicyError("this policy needs the canonical K3+e labeling")


def _prio_greedy_flow_decide(g: ConflictGraph, view: StateView,
                             run_m4_when_holding: bool = True) -> SpeedAssignment:
    _require_k3pe(g)
    trio = (0, 1, 3)
    high = [i for i in trio if view.load_sign(i, Q(4, 3)) >= 0]
    strict = any(view.load_sign(i, Q(4, 3)) > 0 for i in trio)
    receiving_high = any(view.receiving(i) for i in high)
    guards = tuple(guard({i: Q(1)}, Q(4, 3)) for i in trio) + \
        (guard({2: Q(1)}, Q(1, 3)),)
    if (high and receiving_high) or strict:
        fixed = {3: Q(1)} if view.active(3) else {3: ZERO}
        speeds = greedy_speeds(g, view, allowed={0, 1}, fixed=fixed)
        branch = "A" if receiving_high else "A-strict"
        return SpeedAssignment(speeds, guards + greedy_guards(g, view, (0, 1)),
                               branch=branch)
    if view.load_sign(2, Q(1, 3)) > 0 or \
            (view.load_sign(0, ZERO) == 0 and view.load_sign(1, ZERO) == 0):
        s3 = Q(1) if view.active(2) else ZERO
        s4 = Q(1) - s3 if run_m4_when_holding and view.active(3) else ZERO
        return SpeedAssignment((ZERO, ZERO, s3, s4), guards, branch="B")
    speeds = list(greedy_speeds(g, view, allowed={0, 1, 2}))
    if view.active(3):
        # "run m4 if possible": in the alternation view m4 joins every
        # selected set that leaves m3 idle, so its share is 1 - s3
        speeds[3] = Q(1) - speeds[2]
    return SpeedAssignment(tuple(speeds),
                           guards + greedy_guards(g, view, (0, 1, 2)), branch="G")


def _prio_greedy_original_decide(g: ConflictGraph, view: StateView) -> SpeedAssignment:
    _require_k3pe(g)
    guards = (guard({2: Q(1)}, Q(5, 4)), guard({3: Q(1)}, Q(5, 4)),
              guard({0: Q(1), 1: Q(1)}, Q(1)), guard({2: Q(1)}, ZERO))
    if view.load_sign(2, Q(5, 4)) > 0:
        return SpeedAssignment((ZERO, ZERO, Q(1), ZERO), guards, branch="m3-high")
    if view.load_sign(3, Q(5, 4)) > 0 or \
            view.form_sign({0: Q(1), 1: Q(1)}, Q(1)) > 0 or \
            view.load_sign(2, ZERO) == 0:
        fixed = {3: Q(1)} if view.active(3) else {3: ZERO}
        speeds = greedy_speeds(g, view, allowed={0, 1}, fixed=fixed)
        return SpeedAssignment(speeds, guards + greedy_guards(g, view, (0, 1)),
                               branch="pair")
    s3 = Q(1) if view.active(2) else ZERO
    return SpeedAssignment((ZERO, ZERO, s3, ZERO), guards, branch="m3")


# -- fixtures -----------------------------------------------------------------

def _m3_first_decide(g: ConflictGraph, view: StateView) -> SpeedAssignment:
    """Baseline that always serves the high-degree machine first."""
    _require_k3pe(g)
    if view.active(2):
        speeds = greedy_speeds(g, view, allowed={0, 1, 3}, fixed={2: Q(1)})
        return SpeedAssignment(speeds, greedy_guards(g, view), branch="m3-first")
    return _greedy_decide(g, view)


def _sabotage_decide(g: ConflictGraph, view: StateView) -> SpeedAssignment:
    """Deliberately broken: greedy that refuses to ever run m3."""
    allowed = set(range(g.n)) - {2}
    speeds = greedy_speeds(g, view, allowed=allowed)
    return SpeedAssignment(speeds, greedy_guards(g, view, sorted(allowed)),
                           branch="sabotage")


# -- registry -----------------------------------------------------------------

def get_policy(name: str, **opts) -> Policy:
    key = name.lower()
    if key == "greedy":
        return Policy("greedy", "both", _greedy_decide)
    if key == "greedy_block":
        return Policy("greedy_block", "block", _greedy_decide)
    if key == "prio_vl":
        return Policy("prio_vl", "flow", _prio_vl_decide)
    if key == "prio_center":
        return Policy("prio_center", "flow", _prio_center_decide)
    if key == "prio_greedy_flow":
        hold = opts.get("run_m4_when_holding", True)
        return Policy("prio_greedy_flow", "flow",
                      lambda g, v: _prio_greedy_flow_decide(g, v, hold))
    if key == "prio_greedy_original":
        return Policy("prio_greedy_original", "block", _prio_greedy_original_decide,
                      watch_forms=(guard({0: Q(1), 1: Q(1)}, Q(1)),))
    if key == "m3_first":
        return Policy("m3_first", "block", _m3_first_decide)
    if key == "sabotage":
        return Policy("sabotage", "flow", _sabotage_decide)
    raise PolicyError(f"unknown policy {name!r}")


POLICY_NAMES = ("greedy", "prio_vl", "prio_center", "prio_greedy_flow",
                "prio_greedy_original", "greedy_block", "m3_first", "sabotage")
