"""Input representations for both load models.

Flow inputs are per-machine lists of disjoint half-open intervals [s, e)
with arrival rate 1 (rate 0 elsewhere). The half-open convention makes
"is receiving at time t" right-continuous, so a re-decision at an input
breakpoint sees the new flags. Block inputs are finite job lists (t, k, s).

Everything is an exact rational; JSON carries rationals as "p/q" strings.
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

from .rational import Q, ZERO, qstr, rat

Interval = Tuple[Q, Q]


class InputError(ValueError):
    pass


def _validate_intervals(ivs: Sequence[Interval]) -> Tuple[Interval, ...]:
    out = tuple((Q(s), Q(e)) for s, e in ivs)
    prev_end = None
    for s, e in out:
        if s < 0 or e <= s:
            raise InputError(f"bad interval [{qstr(s)},{qstr(e)})")
        if prev_end is not None and s < prev_end:
            raise InputError("overlapping or unsorted intervals on one machine")
        prev_end = e
    return out


@dataclass(frozen=True)
class FlowInput:
    n: int
    per_machine: Tuple[Tuple[Interval, ...], ...]
    horizon: Q

    def __post_init__(self):
        if len(self.per_machine) != self.n:
            raise InputError("per-machine interval list length mismatch")
        object.__setattr__(self, "per_machine",
                           tuple(_validate_intervals(ivs) for ivs in self.per_machine))
        object.__setattr__(self, "horizon", Q(self.horizon))
        ends = [e for ivs in self.per_machine for _, e in ivs]
        if ends and max(ends) > self.horizon:
            raise InputError("interval ends past the horizon")
        if self.horizon < 0:
            raise InputError("negative horizon")

    @property
    def model(self) -> str:
        return "flow"

    def receiving(self, i: int, t: Q) -> bool:
        for s, e in self.per_machine[i]:
            if s <= t < e:
                return True
        return False

    def breakpoints(self) -> List[Q]:
        """All interval endpoints plus 0 and the horizon, sorted."""
        pts = {ZERO, self.horizon}
        for ivs in self.per_machine:
            for s, e in ivs:
                pts.add(s)
                pts.add(e)
        return sorted(pts)

    def next_breakpoint_after(self, t: Q) -> Optional[Q]:
        later = [p for p in self.breakpoints() if p > t]
        return min(later) if later else None

    def total_load(self, i: int) -> Q:
        return sum((e - s for s, e in self.per_machine[i]), ZERO)

    def arrived_until(self, i: int, t: Q) -> Q:
        acc = ZERO
        for s, e in self.per_machine[i]:
            if t > s:
                acc += min(t, e) - s
        return acc

    def is_empty(self) -> bool:
        return all(not ivs for ivs in self.per_machine)

    def scale_times(self, factor: Q) -> "FlowInput":
        f = Q(factor)
        return FlowInput(self.n,
                         tuple(tuple((s * f, e * f) for s, e in ivs)
                               for ivs in self.per_machine),
                         self.horizon * f)

    def to_json(self) -> dict:
        return {"model": "flow", "n": self.n,
                "machines": [{"intervals": [[qstr(s), qstr(e)] for s, e in ivs]}
                             for ivs in self.per_machine],
                "horizon": qstr(self.horizon)}


@dataclass(frozen=True)
class BlockInput:
    n: int
    jobs: Tuple[Tuple[Q, int, Q], ...]  # (time, machine, size), sorted by time

    def __post_init__(self):
        jobs = tuple(sorted(((Q(t), int(k), Q(s)) for t, k, s in self.jobs),
                            key=lambda j: (j[0], j[1])))
        for t, k, s in jobs:
            if t < 0:
                raise InputError("job with negative arrival time")
            if s <= 0:
                raise InputError("job sizes must be positive")
            if not 0 <= k < self.n:
                raise InputError(f"job on unknown machine {k + 1}")
        object.__setattr__(self, "jobs", jobs)

    @property
    def model(self) -> str:
        return "block"

    @property
    def horizon(self) -> Q:
        return self.jobs[-1][0] if self.jobs else ZERO

    def arrival_times(self) -> List[Q]:
        return sorted({t for t, _, _ in self.jobs})

    def jumps_at(self, t: Q) -> List[Q]:
        out = [ZERO] * self.n
        for tt, k, s in self.jobs:
            if tt == t:
                out[k] += s
        return out

    def total_load(self, i: int) -> Q:
        return sum((s for _, k, s in self.jobs if k == i), ZERO)

    def is_empty(self) -> bool:
        return not self.jobs

    def scale_sizes(self, factor: Q) -> "BlockInput":
        f = Q(factor)
        return BlockInput(self.n, tuple((t, k, s * f) for t, k, s in self.jobs))

    def scale_uniform(self, factor: Q) -> "BlockInput":
        """Scale times and sizes together. Processing runs at rate 1, so
        this maps trajectories exactly and the optimal buffer is linear in
        the factor -- in both directions, unlike size-only scaling, which
        is superlinear when scaling up against a fixed time axis."""
        f = Q(factor)
        return BlockInput(self.n, tuple((t * f, k, s * f) for t, k, s in self.jobs))

    def to_json(self) -> dict:
        return {"model": "block", "n": self.n,
                "jobs": [[qstr(t), k + 1, qstr(s)] for t, k, s in self.jobs]}


@dataclass(frozen=True)
class StepVectorScript:
    """Per-time-step arrival vectors (t; s_1..s_n) with integer times."""

    n: int
    steps: Tuple[Tuple[int, Tuple[Q, ...]], ...]

    def __post_init__(self):
        steps = tuple((int(t), tuple(Q(v) for v in loads)) for t, loads in self.steps)
        prev = None
        for t, loads in steps:
            if len(loads) != self.n:
                raise InputError("step vector length mismatch")
            if prev is not None and t <= prev:
                raise InputError("step times must be strictly increasing")
            if any(v < 0 for v in loads):
                raise InputError("negative step load")
            prev = t
        object.__setattr__(self, "steps", steps)


def from_script(script: StepVectorScript, model: str):
    """Unfold a step script into a canonical input.

    Flow mode: a load of 1 at step t means rate 1 on [t, t+1); adjacent
    steps merge into one interval. Fractional step loads are only legal in
    block mode.
    """
    if model == "flow":
        per: List[List[Interval]] = [[] for _ in range(script.n)]
        for t, loads in script.steps:
            for i, v in enumerate(loads):
                if v == 0:
                    continue
                if v != 1:
                    raise InputError("flow scripts only carry 0/1 step loads")
                seg = (Q(t), Q(t + 1))
                if per[i] and per[i][-1][1] == seg[0]:
                    per[i][-1] = (per[i][-1][0], seg[1])
                else:
                    per[i].append(seg)
        horizon = Q(max((t + 1 for t, _ in script.steps), default=0))
        return FlowInput(script.n, tuple(tuple(ivs) for ivs in per), horizon)
    if model == "block":
        jobs = [(Q(t), i, v) for t, loads in script.steps
                for i, v in enumerate(loads) if v != 0]
        return BlockInput(script.n, tuple(jobs))
    raise InputError(f"unknown model {model!r}")


class NormalizationError(ValueError):
    pass


def normalize(graph, inp, bstar: Optional[Q] = None):
    """Rescale so the offline-optimal buffer is exactly 1.

    Flow model: rates are pinned to 0/1, so divide all times; buffers scale
    linearly with time. Block model: divide job sizes and arrival times by
    B* together, which maps offline trajectories exactly (size-only scaling
    is not linear when scaling up, so it cannot normalize easy inputs).
    """
    if bstar is None:
        from .oracle import min_buffer
        bstar = min_buffer(graph, inp).buffer
    bstar = Q(bstar)
    if bstar == 0:
        raise NormalizationError("offline optimum needs no buffer; "
                                 "normalization is undefined")
    if bstar == 1:
        return inp
    if isinstance(inp, FlowInput):
        return inp.scale_times(Q(1) / bstar)
    if isinstance(inp, BlockInput):
        return inp.scale_uniform(Q(1) / bstar)
    raise InputError(f"cannot normalize {type(inp).__name__}")


def input_to_json(inp) -> dict:
    return inp.to_json()


def input_from_json(doc: dict):
    model = doc.get("model")
    n = int(doc["n"])
    if model == "flow":
        per = tuple(tuple((rat(s), rat(e)) for s, e in m["intervals"])
                    for m in doc["machines"])
        horizon = rat(doc["horizon"]) if "horizon" in doc else \
            max((e for ivs in per for _, e in ivs), default=ZERO)
        return FlowInput(n, per, horizon)
    if model == "block":
        jobs = tuple((rat(t), int(k) - 1, rat(s)) for t, k, s in doc["jobs"])
        return BlockInput(n, jobs)
    raise InputError(f"unknown model {model!r}")


def dumps(inp) -> str:
    return json.dumps(input_to_json(inp), sort_keys=True)


def loads(text: str):
    return input_from_json(json.loads(text))
