import pytest

from conftest import traces_equivalent

from bufmin.adversaries import (AdversaryError, adv_c4, adv_complete,
                                adv_complete_induced, adv_k3pe_block,
                                adv_k4me, adv_kpartite, fixed_tightness,
                                induced_restriction, kpartite_lower_bound)
from bufmin.block_engine import simulate_block
from bufmin.engine import SpeedAssignment, simulate
from bufmin.graph import PartiteSpec, build_named
from bufmin.oracle import min_buffer, verify_schedule
from bufmin.policies import Policy, get_policy
from bufmin.rational import Q, harmonic

EPS = Q(1, 100)


def assert_certified(g, run):
    ok, peak = verify_schedule(g, run.input, run.certified)
    assert ok and peak <= 1


def test_adv_complete_small():
    run = adv_complete(2, get_policy("greedy"))
    assert run.observed_max == 1
    assert_certified(build_named("kn", 2), run)
    run = adv_complete(3, get_policy("greedy"))
    assert run.observed_max == harmonic(3) - Q(1, 2) == Q(4, 3)


def test_adv_complete_replays_identically():
    run = adv_complete(4, get_policy("greedy"))
    replay = simulate(build_named("kn", 4), run.input, get_policy("greedy"))
    assert traces_equivalent(run.trace, replay)
    assert run.trace.to_json() == replay.to_json()


def test_adv_complete_oracle_confirms_tight():
    run = adv_complete(4, get_policy("greedy"))
    assert min_buffer(build_named("kn", 4), run.input).buffer == 1


def test_adv_c4_reaches_threshold():
    run = adv_c4(get_policy("greedy"), EPS)
    assert run.observed_max >= Q(3, 2) - EPS / 2
    assert run.observed_max <= Q(3, 2)
    assert_certified(build_named("c4"), run)


def test_adv_c4_ledger_recurrence():
    run = adv_c4(get_policy("greedy"), EPS)
    rows = [r for r in run.ledger if "joint_start" in r]
    assert rows
    for r in rows:
        assert r["joint_end"] >= (r["joint_start"] + 1) / 2


def test_adv_c4_detects_idle_policy():
    idle = Policy("idle", "flow",
                  lambda g, v: SpeedAssignment((Q(0),) * g.n, branch="idle"))
    run = adv_c4(idle, EPS)
    assert run.phases <= 2  # an idle policy hands over a heavy pair at once
    assert run.observed_max >= Q(3, 2)


def test_adv_k4me_vs_prio_center():
    run = adv_k4me(get_policy("prio_center"), EPS)
    assert Q(3, 2) - EPS <= run.observed_max <= Q(3, 2)
    assert_certified(build_named("k4-e"), run)


def test_adv_k4me_vs_greedy_finishes_and_ledger_grows():
    run = adv_k4me(get_policy("greedy"), EPS)
    assert run.observed_max >= Q(3, 2) - EPS
    assert_certified(build_named("k4-e"), run)
    assert run.phases <= (1 / (2 * EPS)) + 2
    for row in run.ledger:
        if "growth" in row and not row.get("finale"):
            assert row["growth"] >= 2 * EPS


def test_adv_kpartite_mu0():
    spec = PartiteSpec((2, 2, 2))
    run = adv_kpartite(spec, get_policy("greedy"), EPS)
    bound = kpartite_lower_bound(spec)
    assert bound == 2
    assert bound - EPS <= run.observed_max <= harmonic(2) + Q(1, 2)
    assert_certified(spec.build(), run)


def test_adv_kpartite_mu1():
    spec = PartiteSpec((1, 2, 2))
    run = adv_kpartite(spec, get_policy("greedy"), EPS)
    bound = kpartite_lower_bound(spec)
    assert bound == 2  # H_2 - 1/2 + (k-mu)/(k-1) at k=3, mu=1
    assert run.observed_max >= bound - EPS
    assert_certified(spec.build(), run)


def test_adv_kpartite_round_ledger():
    run = adv_kpartite(PartiteSpec((2, 2, 2)), get_policy("greedy"), EPS)
    failed = [r for r in run.ledger if r.get("advanced") is False]
    assert failed
    for r in failed:
        assert r["total_after"] - r["total_before"] > EPS


def test_adv_k3pe_block_vs_prio_greedy_original():
    run = adv_k3pe_block(get_policy("prio_greedy_original"), Q(1, 12))
    assert run.observed_max > 2 + Q(1, 12)
    assert_certified(build_named("k3+e"), run)
    r = Q(1, 12)
    for row in run.ledger:
        if row["branch"] == "table":
            assert row["growth"] >= Q(1, 2) - 3 * r


def test_adv_k3pe_block_replays_identically():
    run = adv_k3pe_block(get_policy("prio_greedy_original"), Q(1, 12))
    replay = simulate_block(build_named("k3+e"), run.input,
                            get_policy("prio_greedy_original"))
    assert traces_equivalent(run.trace, replay)


def test_adv_k3pe_block_rejects_bad_r():
    with pytest.raises(AdversaryError):
        adv_k3pe_block(get_policy("greedy_block"), Q(1, 6))


def test_fixed_tightness_inputs():
    inp = fixed_tightness("k4me_tight")
    tr = simulate(build_named("k4-e"), inp, get_policy("prio_center"))
    assert tr.max_load == Q(3, 2)
    final = tr.points[-1]
    assert all(v == 0 for v in final.loads)
    peak = next(p for p in tr.points if max(p.loads) == Q(3, 2))
    assert peak.loads == (Q(3, 2), Q(3, 2), Q(0), Q(0))

    I = fixed_tightness("k3pe_original_tight_I")
    tr = simulate_block(build_named("k3+e"), I, get_policy("prio_greedy_original"))
    assert tr.max_load == Q(9, 4)

    base = fixed_tightness("k3pe_baseline")
    tr = simulate_block(build_named("k3+e"), base, get_policy("m3_first"))
    assert tr.max_load == Q(5, 2)

    with pytest.raises(AdversaryError):
        fixed_tightness("nosuch")


def test_induced_restriction():
    g = build_named("k3+e")
    run = induced_restriction("complete", g, [0, 1, 2],
                              get_policy("prio_greedy_flow"))
    assert run.observed_max == Q(4, 3)  # tight against the 4/3 guarantee
    assert_certified(g, run)
    # nothing ever arrives outside the subset
    assert run.input.per_machine[3] == ()


def test_induced_restriction_rejects_non_clique():
    g = build_named("k3+e")
    with pytest.raises(AdversaryError):
        induced_restriction("complete", g, [0, 1, 3], get_policy("greedy"))


def test_induced_k2_on_c4():
    g = build_named("c4")
    run = adv_complete_induced(g, [0, 1], get_policy("greedy"))
    assert run.observed_max >= 1
    assert_certified(g, run)


def test_ledger_csv_renders():
    run = adv_complete(3, get_policy("greedy"))
    text = run.ledger_csv()
    assert text.splitlines()[0].startswith("phase")
