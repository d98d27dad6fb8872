import pytest

from bufmin.engine import ExactView, feasible
from bufmin.graph import PartiteSpec, build_named
from bufmin.policies import PolicyError, get_policy, greedy_speeds
from bufmin.rational import Q

K3PE = build_named("k3+e")
K4ME = build_named("k4-e")


def view(g, loads, recv=None):
    recv = recv or [False] * g.n
    return ExactView([Q(v) for v in loads], recv)


def test_greedy_unique_max_runs_full_speed():
    g = build_named("kn", 2)
    speeds = greedy_speeds(g, view(g, (2, 1)))
    assert speeds == (Q(1), Q(0))


def test_greedy_k3_split():
    g = build_named("kn", 3)
    assert greedy_speeds(g, view(g, (2, 2, 1))) == (Q(1, 2), Q(1, 2), Q(0))
    assert greedy_speeds(g, view(g, (1, 1, 1))) == (Q(1, 3), Q(1, 3), Q(1, 3))


def test_greedy_star_split():
    g = PartiteSpec((1, 2)).build()  # star with center m1
    assert greedy_speeds(g, view(g, (1, 1, 1))) == (Q(1, 2), Q(1, 2), Q(1, 2))


def test_greedy_c4_top_pair():
    g = build_named("c4")
    assert greedy_speeds(g, view(g, (3, 1, 3, 1))) == (Q(1), Q(0), Q(1), Q(0))


def test_greedy_secondary_objective_uses_slack():
    # tied class where one member is conflict-free: max-min 1/2, then the
    # free machine is raised to full speed by the total-speed objective
    g = build_named("pn", 3)
    speeds = greedy_speeds(g, view(g, (1, 1, 1)))
    assert speeds == (Q(1, 2), Q(1, 2), Q(1, 2))
    speeds = greedy_speeds(g, view(g, (1, 0, 1)))
    assert speeds == (Q(1), Q(0), Q(1))


def test_greedy_receiving_breaks_ties():
    g = build_named("kn", 2)
    speeds = greedy_speeds(g, view(g, (1, 1), [False, True]))
    assert speeds == (Q(0), Q(1))


def test_greedy_inactive_machines_idle():
    g = build_named("kn", 3)
    speeds = greedy_speeds(g, view(g, (0, 1, 0), [False, False, False]))
    assert speeds == (Q(0), Q(1), Q(0))
    # zero-load receiving machines are active and may run
    speeds = greedy_speeds(g, view(g, (0, 0, 0), [True, False, False]))
    assert speeds == (Q(1), Q(0), Q(0))


def test_greedy_work_conservation_never_blocks_active():
    g = build_named("k3+e")
    for loads, recv in (((1, 1, 1, 1), [False] * 4),
                        ((0, 0, 2, 1), [True, False, False, False])):
        speeds = greedy_speeds(g, view(g, loads, recv))
        assert feasible(speeds, g)
        for i in range(4):
            if Q(loads[i]) == 0 and not recv[i]:
                assert speeds[i] == 0


def test_prio_vl_branches():
    g = PartiteSpec((1, 3)).build()
    p = get_policy("prio_vl")
    sa = p.decide(g, view(g, (0, 1, 0, 0), [False, True, False, False]))
    assert sa.branch == "leaves"
    assert sa.speeds[1] == 1 and sa.speeds[0] == 0
    sa = p.decide(g, view(g, (Q(1, 2), Q(1, 2), 0, 0)))
    assert sa.branch == "center" and sa.speeds[0] == 1
    sa = p.decide(g, view(g, (Q(1, 2), 1, 0, 0), [False, True, False, False]))
    assert sa.branch == "leaves"  # a full leaf that still receives wins


def test_prio_vl_rejects_non_star():
    with pytest.raises(PolicyError):
        get_policy("prio_vl").decide(build_named("kn", 3),
                                     view(build_named("kn", 3), (0, 0, 0)))


def test_prio_center_branches():
    p = get_policy("prio_center")
    sa = p.decide(K4ME, view(K4ME, (0, 0, 0, 0)))
    assert sa.branch == "all"
    sa = p.decide(K4ME, view(K4ME, (1, 0, 1, 0)))
    assert sa.branch == "all"  # outer machine at the cap dominates
    sa = p.decide(K4ME, view(K4ME, (Q(1, 2), 1, 1, Q(1, 2))))
    assert sa.branch == "center"
    assert sa.speeds == (Q(0), Q(1, 2), Q(1, 2), Q(0))


def test_prio_center_rejects_wrong_graph():
    with pytest.raises(PolicyError):
        get_policy("prio_center").decide(K3PE, view(K3PE, (0, 0, 0, 0)))


def test_prio_greedy_flow_branches():
    p = get_policy("prio_greedy_flow")
    sa = p.decide(K3PE, view(K3PE, (0, 0, Q(1, 2), 0)))
    assert sa.branch == "B" and sa.speeds[2] == 1
    sa = p.decide(K3PE, view(K3PE, (0, 0, 0, 0)))
    assert sa.branch == "B"
    sa = p.decide(K3PE, view(K3PE, (Q(4, 3), 0, 0, 0), [True, False, False, False]))
    assert sa.branch == "A"
    assert sa.speeds[0] == 1 and sa.speeds[3] == 0  # m4 idle: nothing stored
    sa = p.decide(K3PE, view(K3PE, (Q(4, 3), 0, 0, 1), [True, False, False, False]))
    assert sa.speeds[3] == 1
    sa = p.decide(K3PE, view(K3PE, (1, Q(1, 2), Q(1, 4), 1)))
    assert sa.branch == "G"
    assert sa.speeds == (Q(1), Q(0), Q(0), Q(1))  # m4 rides along when m3 idles


def test_prio_greedy_flow_m4_holding_flag():
    p = get_policy("prio_greedy_flow", run_m4_when_holding=False)
    sa = p.decide(K3PE, view(K3PE, (0, 0, 0, 1)))
    assert sa.branch == "B" and sa.speeds[3] == 0
    p = get_policy("prio_greedy_flow")
    sa = p.decide(K3PE, view(K3PE, (0, 0, 0, 1)))
    assert sa.speeds[3] == 1


def test_prio_greedy_original_branches():
    p = get_policy("prio_greedy_original")
    sa = p.decide(K3PE, view(K3PE, (0, 0, Q(3, 2), 0)))
    assert sa.branch == "m3-high" and sa.speeds == (Q(0), Q(0), Q(1), Q(0))
    sa = p.decide(K3PE, view(K3PE, (1, 1, 1, 0)))
    assert sa.branch == "pair"
    assert sa.speeds == (Q(1, 2), Q(1, 2), Q(0), Q(0))
    sa = p.decide(K3PE, view(K3PE, (0, 0, 1, 2)))
    assert sa.branch == "pair" and sa.speeds[3] == 1
    sa = p.decide(K3PE, view(K3PE, (Q(1, 4), Q(1, 4), 1, 0)))
    assert sa.branch == "m3" and sa.speeds[2] == 1


def test_greedy_block_examples():
    g = build_named("kn", 2)
    p = get_policy("greedy_block")
    assert p.decide(g, view(g, (2, 1))).speeds == (Q(1), Q(0))
    g3 = build_named("kn", 3)
    assert p.decide(g3, view(g3, (1, 1, 1))).speeds == (Q(1, 3),) * 3
    assert p.decide(g, view(g, (0, 0))).speeds == (Q(0), Q(0))


def test_all_policies_emit_feasible_speeds():
    import random
    rng = random.Random(11)
    cases = [("greedy", build_named("kn", 4)), ("prio_center", K4ME),
             ("prio_greedy_flow", K3PE), ("prio_greedy_original", K3PE),
             ("prio_vl", PartiteSpec((1, 3)).build()), ("sabotage", K3PE),
             ("m3_first", K3PE)]
    for name, g in cases:
        p = get_policy(name)
        for _ in range(40):
            loads = [Q(rng.randint(0, 8), 4) for _ in range(g.n)]
            recv = [rng.random() < 0.4 for _ in range(g.n)]
            sa = p.decide(g, ExactView(loads, recv))
            assert feasible(sa.speeds, g), (name, loads, recv, sa.speeds)
