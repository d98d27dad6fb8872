"""Command-line surface: simulations, oracle queries and the bound table.

Every command is deterministic given its flags; random fuzzing happens only
under an explicit seed. Numeric flags accept exact rationals as "p/q".
Exit codes: 0 clean, 1 monitor violation or bound failure, 2 usage errors.
"""
from __future__ import annotations

import argparse
import json
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path
from typing import List, Optional

from .adversaries import (AdversaryRun, adv_c4, adv_complete, adv_k3pe_block,
                          adv_k4me, adv_kpartite, fixed_tightness,
                          induced_restriction, kpartite_lower_bound)
from .block_engine import simulate_block
from .engine import EngineError, simulate
from .fuzz import normalized_random_input, star_stress_scripts
from .graph import ConflictGraph, PartiteSpec, parse_graph_arg
from .inputs import from_script, input_from_json, input_to_json
from .monitors import (check_no_unique_max, check_suite,
                       condition_a_strict_check, invariant_suite)
from .oracle import ZTrajectory, min_buffer, verify_schedule
from .policies import POLICY_NAMES, get_policy
from .rational import Q, harmonic, qstr, rat


def _load_input(spec: str, n_hint: int):
    if spec.startswith("tightness:"):
        return fixed_tightness(spec.split(":", 1)[1])
    if spec.startswith("{"):
        return input_from_json(json.loads(spec))
    with open(spec) as fh:
        return input_from_json(json.load(fh))


def _run_adversary(name: str, g: ConflictGraph, policy, epsilon: Q,
                   phases: int, subset: Optional[List[int]]) -> AdversaryRun:
    if subset:
        return induced_restriction(name, g, [m - 1 for m in subset], policy)
    if name == "complete":
        return adv_complete(g.n, policy)
    if name == "c4":
        return adv_c4(policy, epsilon, phases)
    if name == "k4me":
        return adv_k4me(policy, epsilon, phases)
    if name == "kpartite":
        if not g.params or not g.family or not g.family.startswith("K_"):
            raise SystemExit("kpartite adversary needs a k-partite --graph")
        return adv_kpartite(PartiteSpec(tuple(g.params)), policy, epsilon, phases)
    if name == "k3pe_block":
        return adv_k3pe_block(policy, epsilon if epsilon < Q(1, 6) else Q(1, 12),
                              phases)
    raise SystemExit(f"unknown adversary {name!r}")


def _monitor_reports(policy_name: str, g, trace, inp, schedule):
    reports = []
    ref = None
    if schedule is not None:
        ref = ZTrajectory(g, inp, schedule)
    try:
        suite = invariant_suite(policy_name, g.n)
    except Exception:
        suite = []
    if suite and ref is not None:
        reports += check_suite(trace, ref, suite)
    if policy_name in ("greedy", "greedy_block", "sabotage") \
            and trace.model == "flow":
        reports.append(check_no_unique_max(trace))
    if policy_name == "prio_greedy_flow":
        reports.append(condition_a_strict_check(trace))
    return reports


def cmd_run(args) -> int:
    g = parse_graph_arg(args.graph)
    policy = get_policy(args.policy)
    model = args.model or ("block" if policy.model_kind == "block" else "flow")
    if policy.model_kind != "both" and model != policy.model_kind:
        raise SystemExit(f"policy {policy.name} runs in the "
                         f"{policy.model_kind} model")
    epsilon = rat(args.epsilon)
    run: Optional[AdversaryRun] = None
    if args.adversary:
        subset = [int(x) for x in args.subset.split(",")] if args.subset else None
        run = _run_adversary(args.adversary, g, policy, epsilon, args.phases,
                             subset)
        inp, trace, schedule = run.input, run.trace, run.certified
        bstar = Q(1)  # certified upper bound on the offline optimum
    elif args.input:
        inp = _load_input(args.input, g.n)
        if inp.model != model:
            raise SystemExit(f"input is a {inp.model}-model input")
        res = min_buffer(g, inp)
        bstar, schedule = res.buffer, res.schedule
        trace = simulate(g, inp, policy) if model == "flow" else \
            simulate_block(g, inp, policy)
    elif args.seed is not None:
        inp, res = normalized_random_input(g, model, args.seed)
        bstar, schedule = max(res.buffer, Q(1)), res.schedule
        trace = simulate(g, inp, policy) if model == "flow" else \
            simulate_block(g, inp, policy)
    else:
        raise SystemExit("need --input, --adversary or --seed")

    reports = _monitor_reports(policy.name, g, trace, inp, schedule) \
        if args.monitors else []
    outdir = Path(args.out) if args.out else None
    if outdir:
        outdir.mkdir(parents=True, exist_ok=True)
        if args.format in ("csv", "both"):
            (outdir / "trace.csv").write_text(trace.to_csv())
        if args.format in ("json", "both"):
            (outdir / "trace.json").write_text(json.dumps(trace.to_json(), indent=1))
        (outdir / "input.json").write_text(json.dumps(input_to_json(inp)))
        if schedule is not None:
            (outdir / "schedule.json").write_text(schedule.dumps())
        if reports:
            (outdir / "monitors.json").write_text(json.dumps(
                [r.to_json() for r in reports], indent=1))
        if run is not None and run.ledger:
            (outdir / "ledger.csv").write_text(run.ledger_csv())
    for r in reports:
        print(f"monitor {r.invariant}: {r.status}")
    ratio = "n/a" if bstar == 0 and trace.max_load > 0 else \
        qstr(trace.max_load / bstar) if bstar > 0 else "0"
    print(f"maxLoad={qstr(trace.max_load)} ratio={ratio}")
    if any(not r.ok for r in reports):
        return 1
    return 0


def cmd_opt(args) -> int:
    g = parse_graph_arg(args.graph)
    inp = _load_input(args.input, g.n)
    res = min_buffer(g, inp)
    ok, peak = verify_schedule(g, inp, res.schedule)
    assert ok and peak == res.buffer
    if args.out:
        Path(args.out).write_text(res.schedule.dumps())
    print(f"B*={qstr(res.buffer)}")
    return 0


# -- the bound table ----------------------------------------------------------

def _row_kn(n: int, eps: Q) -> dict:
    run = adv_complete(n, get_policy("greedy"))
    bound = harmonic(n) - Q(1, 2)
    ok = run.observed_max == bound and \
        min_buffer(parse_graph_arg(f"k{n}"), run.input).buffer == 1
    return {"row": f"K{n} flow/greedy", "bound": qstr(bound),
            "achieved": qstr(run.observed_max), "pass": ok}


def _row_star(eps: Q) -> dict:
    g = parse_graph_arg("k1,3")
    worst = Q(0)
    policy = get_policy("prio_vl")
    for script in star_stress_scripts(4):
        inp, res = _normalized_script(g, script)
        if inp is None:
            continue
        tr = simulate(g, inp, policy)
        worst = max(worst, tr.max_load)
    return {"row": "K1,3 flow/prio_vl", "bound": "1",
            "achieved": qstr(worst), "pass": worst <= 1}


def _normalized_script(g, script):
    from .inputs import normalize
    inp = from_script(script, "flow")
    res = min_buffer(g, inp)
    if res.buffer == 0:
        return None, None
    return normalize(g, inp, bstar=res.buffer), res


def _row_c4(eps: Q) -> dict:
    run = adv_c4(get_policy("greedy"), eps)
    lo, hi = Q(3, 2) - eps / 2, Q(3, 2)
    return {"row": "C4 flow/greedy", "bound": "3/2",
            "achieved": qstr(run.observed_max),
            "pass": lo <= run.observed_max <= hi}


def _row_kpartite(sizes, eps: Q) -> dict:
    spec = PartiteSpec(sizes)
    run = adv_kpartite(spec, get_policy("greedy"), eps)
    lb = kpartite_lower_bound(spec)
    ub = harmonic(spec.k - 1) + Q(1, 2)
    name = "K" + ",".join(map(str, sizes))
    return {"row": f"{name} flow/greedy", "bound": f"[{qstr(lb)},{qstr(ub)}]",
            "achieved": qstr(run.observed_max),
            "pass": lb - eps <= run.observed_max <= ub}


def _row_k4me(eps: Q) -> dict:
    run = adv_k4me(get_policy("prio_center"), eps)
    return {"row": "K4-e flow/prio_center", "bound": "3/2",
            "achieved": qstr(run.observed_max),
            "pass": Q(3, 2) - eps <= run.observed_max <= Q(3, 2)}


def _row_k3pe_flow(eps: Q) -> dict:
    g = parse_graph_arg("k3+e")
    run = induced_restriction("complete", g, [0, 1, 2],
                              get_policy("prio_greedy_flow"))
    return {"row": "K3+e flow/prio_greedy_flow", "bound": "4/3",
            "achieved": qstr(run.observed_max),
            "pass": run.observed_max == Q(4, 3)}


def _row_k3pe_block(eps: Q) -> dict:
    g = parse_graph_arg("k3+e")
    I = fixed_tightness("k3pe_original_tight_I")
    tr = simulate_block(g, I, get_policy("prio_greedy_original"))
    r = Q(1, 12)
    lb_run = adv_k3pe_block(get_policy("prio_greedy_original"), r)
    ok = tr.max_load == Q(9, 4) and lb_run.observed_max > 2 + r
    return {"row": "K3+e block/prio_greedy_original", "bound": "9/4 (LB>13/6-d)",
            "achieved": f"{qstr(tr.max_load)} (LB {qstr(lb_run.observed_max)})",
            "pass": ok}


_TABLE_JOBS = (
    ("k2", lambda eps: _row_kn(2, eps)),
    ("k3", lambda eps: _row_kn(3, eps)),
    ("k4", lambda eps: _row_kn(4, eps)),
    ("k5", lambda eps: _row_kn(5, eps)),
    ("k6", lambda eps: _row_kn(6, eps)),
    ("k13", _row_star),
    ("c4", _row_c4),
    ("k222", lambda eps: _row_kpartite((2, 2, 2), eps)),
    ("k122", lambda eps: _row_kpartite((1, 2, 2), eps)),
    ("k4me", _row_k4me),
    ("k3pe_flow", _row_k3pe_flow),
    ("k3pe_block", _row_k3pe_block),
)


def _table_job(payload):
    key, eps_str = payload
    fn = dict(_TABLE_JOBS)[key]
    return fn(rat(eps_str))


def cmd_table(args) -> int:
    eps = rat(args.epsilon)
    workers = int(os.environ.get("BUFMIN_WORKERS", "1"))
    payloads = [(key, qstr(eps)) for key, _ in _TABLE_JOBS]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(_table_job, payloads))
    else:
        rows = [_table_job(p) for p in payloads]
    width = max(len(r["row"]) for r in rows)
    failed = False
    for r in rows:
        status = "PASS" if r["pass"] else "FAIL"
        failed |= not r["pass"]
        print(f"{r['row']:<{width}}  bound={r['bound']:<12} "
              f"achieved={r['achieved']:<18} {status}")
    if args.out:
        Path(args.out).write_text(json.dumps(rows, indent=1, default=str))
    return 1 if failed else 0


def main(argv: Optional[List[str]] = None) -> int:
    ap = argparse.ArgumentParser(prog="bufmin",
                                 description="online buffer minimization on "
                                             "conflict graphs, exactly")
    sub = ap.add_subparsers(dest="cmd", required=True)

    runp = sub.add_parser("run", help="simulate a policy on an input or "
                                      "against an adversary")
    runp.add_argument("--graph", required=True)
    runp.add_argument("--model", choices=("flow", "block"))
    runp.add_argument("--policy", required=True, choices=POLICY_NAMES)
    runp.add_argument("--input", help="JSON file, inline JSON, or tightness:NAME")
    runp.add_argument("--adversary",
                      choices=("complete", "c4", "k4me", "kpartite", "k3pe_block"))
    runp.add_argument("--subset", help="1-based machines for induced adversaries")
    runp.add_argument("--epsilon", default="1/100")
    runp.add_argument("--phases", type=int, default=10000)
    runp.add_argument("--seed", type=int)
    runp.add_argument("--monitors", action="store_true")
    runp.add_argument("--out")
    runp.add_argument("--format", choices=("csv", "json", "both"), default="both")
    runp.set_defaults(fn=cmd_run)

    optp = sub.add_parser("opt", help="offline-optimal buffer size")
    optp.add_argument("--graph", required=True)
    optp.add_argument("--input", required=True)
    optp.add_argument("--out")
    optp.set_defaults(fn=cmd_opt)

    tabp = sub.add_parser("table", help="reproduce the bound table")
    tabp.add_argument("--epsilon", default="1/100")
    tabp.add_argument("--out")
    tabp.set_defaults(fn=cmd_table)

    args = ap.parse_args(argv)
    try:
        return args.fn(args)
    except EngineError as exc:
        print(f"engine abort: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
