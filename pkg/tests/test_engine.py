import pytest

from bufmin.engine import (EngineError, SpeedAssignment,
                           discretized_simulate, feasible, simulate)
from bufmin.graph import build_named
from bufmin.inputs import FlowInput, StepVectorScript, from_script
from bufmin.policies import Policy, get_policy
from bufmin.rational import Q

K2 = build_named("kn", 2)
GREEDY = get_policy("greedy")


def flow(n, *steps):
    return from_script(StepVectorScript(n, steps), "flow")


def test_feasible_examples():
    assert feasible((Q(1, 2), Q(1, 2)), K2)
    assert not feasible((Q(3, 4), Q(1, 2)), K2)  # edge capacity exceeded
    c4 = build_named("c4")
    assert feasible((Q(1), Q(0), Q(1), Q(0)), c4)
    assert not feasible((Q(1), Q(1), Q(0), Q(0)), c4)
    assert not feasible((Q(-1, 2), Q(0)), K2)


def test_k2_greedy_trace():
    tr = simulate(K2, flow(2, (0, (1, 1))), GREEDY)
    assert tr.max_load == Q(1, 2)
    assert tr.load_at(0, Q(1)) == Q(1, 2)
    assert tr.load_at(0, Q(1, 2)) == Q(1, 4)
    assert tr.load_at(1, Q(2)) == 0
    assert tr.drained
    assert tr.end == 2


def test_empty_input_trace():
    tr = simulate(K2, FlowInput(2, ((), ()), Q(0)), GREEDY)
    assert tr.max_load == 0
    assert len(tr.points) == 1


def test_single_machine_runs_while_receiving():
    g = build_named("kn", 1)
    tr = simulate(g, flow(1, (0, (1,))), GREEDY)
    assert tr.max_load == 0
    assert all(p.loads == (Q(0),) for p in tr.points)


def test_loads_never_negative_and_ties_preserved():
    g = build_named("kn", 3)
    tr = simulate(g, flow(3, (0, (1, 1, 1)), (2, (1, 0, 0))), GREEDY)
    for p in tr.points:
        assert all(v >= 0 for v in p.loads)
    # machines 2 and 3 see identical inputs: they stay exactly tied
    for p in tr.points:
        assert p.loads[1] == p.loads[2]


def test_replay_determinism():
    g = build_named("k3+e")
    inp = flow(4, (0, (1, 1, 0, 0)), (1, (0, 1, 1, 1)), (3, (1, 0, 0, 1)))
    a = simulate(g, inp, get_policy("prio_greedy_flow"))
    b = simulate(g, inp, get_policy("prio_greedy_flow"))
    assert a.to_json() == b.to_json()


def test_infeasible_policy_rejected():
    bad = Policy("bad", "flow",
                 lambda g, v: SpeedAssignment(tuple(Q(1) for _ in range(g.n))))
    with pytest.raises(EngineError):
        simulate(K2, flow(2, (0, (1, 1))), bad)


def test_zeno_guard_aborts():
    # flips between running m1 and m2 depending on which load is larger,
    # always preferring the loaded one at full speed; from a tied positive
    # state this demands a mix, which pure branches cannot express
    def decide(g, view):
        if view.cmp_loads(0, 1) >= 0:
            return SpeedAssignment((Q(1), Q(0)), branch="left")
        return SpeedAssignment((Q(0), Q(1)), branch="right")

    flipper = Policy("flipper", "flow", decide)
    with pytest.raises(EngineError):
        simulate(K2, flow(2, (0, (1, 1)), (1, (1, 1)), (2, (1, 1))), flipper)


def test_trace_csv_and_json():
    tr = simulate(K2, flow(2, (0, (1, 1))), GREEDY)
    csv = tr.to_csv()
    assert csv.splitlines()[0] == "t,a_1,a_2,s_1,s_2,recv_1,recv_2"
    doc = tr.to_json()
    assert doc["maxLoad"] == "1/2"


def test_discretized_matches_exact_on_k2():
    inp = flow(2, (0, (1, 1)))
    exact = simulate(K2, inp, GREEDY)
    for h in (Q(1, 64), Q(1, 128)):
        disc = discretized_simulate(K2, inp, GREEDY, h)
        sup = max(abs(exact.load_at(i, p.t) - p.loads[i])
                  for p in disc.points for i in range(2))
        assert sup == 0  # no chattering here: Euler is exact on this input


def test_discretized_error_shrinks_with_h():
    g = build_named("k4-e")
    inp = FlowInput(4, (((Q(0), Q(3)),), ((Q(1), Q(3)),), ((Q(0), Q(1)),), ()),
                    Q(3))
    exact = simulate(g, inp, get_policy("prio_center"))
    sups = []
    for h in (Q(1, 64), Q(1, 128)):
        disc = discretized_simulate(g, inp, get_policy("prio_center"), h)
        sup = max(abs(exact.load_at(i, p.t) - p.loads[i])
                  for p in disc.points for i in range(4))
        sups.append(sup)
    assert sups[0] <= 4 * Q(1, 64)  # c stays small on this instance
    assert sups[1] <= sups[0]
    assert sups[1] <= Q(3, 4) * sups[0] + Q(1, 1000)


def test_sliding_all_ones_prio_center():
    # all four machines tied at 1, nobody receiving: the dominance guard
    # keeps re-firing; the consistent limit drains the center pair while
    # the outer machines hover just under their cap
    from bufmin.engine import stabilize
    g = build_named("k4-e")
    sa, rates, hover = stabilize(g, get_policy("prio_center"),
                                 [Q(1)] * 4, [False] * 4)
    assert sa.speeds == (Q(0), Q(1, 2), Q(1, 2), Q(0))
    assert rates == (Q(0), Q(-1, 2), Q(-1, 2), Q(0))
    assert set(hover) == {("lc", 0, Q(1)), ("lc", 3, Q(1))}


def test_sliding_zero_state_holds_receiver():
    # empty state, outer machines receiving: the center-empty branch would
    # run the pair equally, but its own dynamics leave the branch at once;
    # the limit holds m3 at zero and lets m1 fill
    from bufmin.engine import stabilize
    g = build_named("k4-e")
    sa, rates, _ = stabilize(g, get_policy("prio_center"), [Q(0)] * 4,
                             [True, False, True, False])
    assert sa.speeds == (Q(0), Q(0), Q(1), Q(0))
    assert rates == (Q(1), Q(0), Q(0), Q(0))


def test_sliding_regression_seed60_flow_suite():
    # the input that exposed the starving-m4 interpretation: the tied
    # center drain must share capacity with m4, or its delay cap breaks
    g = build_named("k3+e")
    inp = FlowInput(4, ((), ((Q(0), Q(2)),), ((Q(1), Q(2)), (Q(3), Q(4))),
                        ((Q(0), Q(4)),)), Q(4))
    tr = simulate(g, inp, get_policy("prio_greedy_flow"))
    assert tr.max_load <= Q(4, 3)
    at = tr.load_at
    # while m2 and m3 drain tied at 1/2 each, m4 gets the other half of the
    # alternation and fills at only 1/2 instead of starving
    assert at(3, Q(7, 3)) == Q(2, 3)
    assert at(3, Q(8, 3)) == Q(5, 6)


def test_run_until_then_continue_matches_one_shot():
    from bufmin.engine import FluidSim
    g = build_named("kn", 3)
    sim = FluidSim(g, GREEDY)
    for i in range(3):
        sim.add_flow(i, 0, 1)
    sim.run_until(Q(2))
    sim.add_flow(0, Q(2), Q(3))
    tr = sim.run_to_completion()
    inp = sim.build_input()
    replay = simulate(g, inp, GREEDY)
    assert tr.to_json() == replay.to_json()
