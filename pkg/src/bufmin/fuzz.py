"""Seeded random inputs and fixed stress scripts.

Upper-bound guarantees quantify over all inputs; the practical test surface
is the adversary constructions plus seeded fuzzing. Scripts use integer
breakpoints and are normalized through the exact oracle before simulation,
so every random run checks its bound against offline optimum exactly 1.
"""
from __future__ import annotations

import random
from typing import List

from .graph import ConflictGraph
from .inputs import StepVectorScript, from_script, normalize
from .oracle import OracleResult, min_buffer
from .rational import Q, ZERO

_BLOCK_SIZES = (Q(1, 2), Q(1), Q(3, 2), Q(2))


def random_flow_script(n: int, seed: int, steps: int = 4,
                       density: float = 0.5) -> StepVectorScript:
    rng = random.Random(f"flow:{n}:{seed}")
    rows = []
    for t in range(steps):
        loads = tuple(Q(1) if rng.random() < density else ZERO
                      for _ in range(n))
        if any(loads):
            rows.append((t, loads))
    if not rows:
        rows.append((0, tuple([Q(1)] + [ZERO] * (n - 1))))
    return StepVectorScript(n, tuple(rows))


def random_block_script(n: int, seed: int, steps: int = 4,
                        density: float = 0.5) -> StepVectorScript:
    rng = random.Random(f"block:{n}:{seed}")
    rows = []
    for t in range(steps):
        loads = tuple(rng.choice(_BLOCK_SIZES) if rng.random() < density else ZERO
                      for _ in range(n))
        if any(loads):
            rows.append((t, loads))
    if not rows:
        rows.append((0, tuple([Q(1)] + [ZERO] * (n - 1))))
    return StepVectorScript(n, tuple(rows))


def normalized_random_input(g: ConflictGraph, model: str, seed: int,
                            steps: int = 4):
    """(input, oracle result) with the input rescaled to offline optimum 1;
    inputs whose optimum needs no buffer at all are returned unscaled with
    their zero optimum (any policy must then keep all loads at zero).

    Flow schedules rescale along with the time axis, so the oracle runs
    once. Block normalization changes sizes against a fixed time axis, so
    there the scaled instance is solved again.
    """
    if model == "flow":
        script = random_flow_script(g.n, seed, steps)
    else:
        script = random_block_script(g.n, seed, steps)
    inp = from_script(script, model)
    res = min_buffer(g, inp)
    if res.buffer == 0:
        return inp, res
    scaled = normalize(g, inp, bstar=res.buffer)
    # both normalizations are pure time(-and-size) scalings, so the optimal
    # schedule rescales along with the input
    sched = res.schedule.scale_times(Q(1) / res.buffer)
    return scaled, OracleResult(Q(1), sched)


def star_stress_scripts(n: int) -> List[StepVectorScript]:
    """Deterministic pumping patterns for the star on n machines: leaves
    and center traded off in every rhythm the branch conditions care about."""
    leaves_on = tuple([ZERO] + [Q(1)] * (n - 1))
    center_on = tuple([Q(1)] + [ZERO] * (n - 1))
    all_on = tuple([Q(1)] * n)
    one_leaf = tuple(Q(1) if i <= 1 else ZERO for i in range(n))
    out = [
        ((0, all_on),),
        ((0, all_on), (1, all_on)),
        ((0, leaves_on), (1, center_on)),
        ((0, center_on), (1, leaves_on), (2, leaves_on)),
        ((0, one_leaf), (1, one_leaf), (2, leaves_on)),
        ((0, all_on), (2, center_on), (3, leaves_on)),
        ((0, leaves_on), (1, all_on), (2, center_on), (3, all_on)),
    ]
    return [StepVectorScript(n, rows) for rows in out]


def k3pe_stress_scripts() -> List[StepVectorScript]:
    """Fixed pressure patterns on K3+e aiming at the threshold structure:
    the isolated machine's cap, the pair's cap, and the center handoff."""
    rows = [
        ((0, (1, 1, 0, 0)), (1, (1, 1, 0, 0)), (2, (1, 1, 0, 0))),
        ((0, (0, 0, 0, 1)), (1, (0, 0, 0, 1)), (2, (1, 1, 0, 1))),
        ((0, (0, 0, 1, 1)), (1, (1, 1, 0, 1)), (2, (1, 0, 1, 0))),
        ((0, (1, 1, 1, 0)), (1, (1, 1, 0, 0)), (3, (0, 0, 1, 1))),
        ((0, (1, 0, 1, 0)), (1, (1, 1, 0, 0)), (2, (0, 1, 1, 1))),
        ((0, (1, 1, 1, 1)), (1, (1, 1, 1, 1))),
        ((0, (1, 0, 0, 1)), (1, (0, 1, 0, 1)), (2, (0, 0, 1, 1)), (3, (1, 1, 0, 0))),
        ((0, (1, 1, 0, 1)), (2, (1, 1, 0, 1)), (4, (1, 1, 1, 0))),
    ]
    return [StepVectorScript(4, r) for r in rows]
