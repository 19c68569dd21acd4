import dataclasses
import math

import pytest
from hypothesis import given, settings, strategies as st

from oracles import tx_joules
from rbebp.engine import NetworkState, SimConfig, initial_state, run_round, run_simulation, table1_preset
from rbebp.errors import InvalidParameter, SimulationEnded
from rbebp.field import FieldConfig, NodeState, Region, Role, deploy
from rbebp.protocol_rbebp import SINK, RBEBPProtocol, RoundPlan
from rbebp.radio import RadioParams


def lone_node_round_cost(cfg, pos):
    r = cfg.radio
    k = r.packet_bits
    d0 = math.sqrt(r.eps_fs / r.eps_mp)
    control = tx_joules(cfg.control_bits, d0, r.e_elec, r.eps_fs, r.eps_mp)
    aggregate = r.e_da * k * 1
    uplink = tx_joules(k, math.dist(pos, cfg.field.sink), r.e_elec, r.eps_fs, r.eps_mp)
    return control + aggregate + uplink


@pytest.mark.parametrize("protocol", ["rbebp", "leach"])
@pytest.mark.parametrize("seed", [0, 1, 2, 3])
def test_single_node_closed_form(protocol, seed):
    cfg = table1_preset(node_count=1, protocol=protocol, seed=seed, field=FieldConfig(width=200, height=300))
    (nd,) = deploy(1, cfg.field, cfg.initial_energy, seed)
    cost = lone_node_round_cost(cfg, nd.pos)
    full_rounds = math.floor(2.0 / cost)
    series, summary = run_simulation(cfg)
    assert all(rec.consumed == pytest.approx(cost, rel=1e-9) for rec in series[:full_rounds])
    assert summary.total_throughput == full_rounds
    leftover = 2.0 - full_rounds * cost
    expected_death = full_rounds if leftover > cfg.resolved_death_threshold else full_rounds - 1
    assert summary.and_ == expected_death


def _manual_state(energies, positions, radio=None, sink=(0.0, 0.0)):
    radio = radio or RadioParams()
    nodes = [NodeState(i, p, e, Region.INNER) for i, (e, p) in enumerate(zip(energies, positions))]
    return NetworkState(nodes, radio, sink, radio.e_elec * radio.packet_bits)


class FixedPlan:
    def __init__(self, plan):
        self.plan = plan

    def plan_round(self, nodes, round_index):
        return self.plan


def test_exact_energy_boundary_death():
    radio = RadioParams()
    # Node 1 is a member 50 m from its CH, with exactly control + data tx left.
    cost = tx_joules(100, 50, radio.e_elec, radio.eps_fs, radio.eps_mp) + tx_joules(
        2000, 50, radio.e_elec, radio.eps_fs, radio.eps_mp
    )
    state = _manual_state([2.0, cost], [(10.0, 0.0), (60.0, 0.0)], radio)
    plan = RoundPlan(frozenset({0}), {1: 0}, {0: SINK})
    state, rec = run_round(state, FixedPlan(plan))
    assert not state.nodes[1].alive
    assert state.nodes[1].energy == pytest.approx(0.0, abs=1e-18)
    assert rec.alive == 1
    assert rec.delivered == 2


def test_dead_relay_drops_packet():
    radio = RadioParams()
    state = _manual_state([2.0, 2.0], [(40.0, 0.0), (110.0, 0.0)], radio)
    state.nodes[0].energy = 1e-4  # at the death threshold
    state.nodes[0].alive = False
    plan = RoundPlan(frozenset({1}), {}, {1: 0})
    state, rec = run_round(state, FixedPlan(plan))
    assert rec.delivered == 0


def test_relay_charges_rx_and_tx():
    radio = RadioParams()
    e, fs, mp = radio.e_elec, radio.eps_fs, radio.eps_mp
    state = _manual_state([2.0, 2.0], [(40.0, 0.0), (110.0, 0.0)], radio)
    plan = RoundPlan(frozenset({0, 1}), {}, {0: SINK, 1: 0})
    state, rec = run_round(state, FixedPlan(plan))
    control = tx_joules(100, radio.d0, e, fs, mp)
    agg = radio.e_da * 2000
    relay = 2.0 - control - agg - tx_joules(2000, 40, e, fs, mp) - 2000 * e - tx_joules(2000, 40, e, fs, mp)
    far = 2.0 - control - agg - tx_joules(2000, 70, e, fs, mp)
    assert state.nodes[0].energy == pytest.approx(relay, rel=1e-12)
    assert state.nodes[1].energy == pytest.approx(far, rel=1e-12)
    assert rec.delivered == 2


def test_roles_follow_plan():
    state = initial_state(table1_preset(node_count=20, seed=3))
    proto = RBEBPProtocol(sink=state.sink, radio=state.radio)
    state, _ = run_round(state, proto)
    heads = state.last_plan.cluster_heads
    for nd in state.nodes:
        assert (nd.role is Role.CLUSTER_HEAD) == (nd.id in heads)


def test_run_round_needs_alive_nodes():
    state = _manual_state([1e-5], [(1.0, 1.0)])
    state.nodes[0].alive = False
    with pytest.raises(SimulationEnded):
        run_round(state, FixedPlan(None))


def test_zero_rounds():
    series, summary = run_simulation(table1_preset(max_rounds=0))
    assert series == []
    assert (summary.fnd, summary.hnd, summary.and_) == (None, None, None)


def test_invalid_config_rejected():
    for bad in (dict(node_count=0), dict(protocol="pegasis"), dict(leach_p=1.0), dict(max_rounds=-1)):
        with pytest.raises(InvalidParameter):
            run_simulation(dataclasses.replace(SimConfig(), **bad))


def test_control_charging_switch():
    on = run_simulation(table1_preset(node_count=30, seed=2, max_rounds=5))[0]
    off = run_simulation(table1_preset(node_count=30, seed=2, max_rounds=5, charge_control=False))[0]
    assert off[0].consumed < on[0].consumed


@pytest.mark.parametrize("protocol", ["rbebp", "leach"])
def test_conservation_and_monotonicity(protocol):
    cfg = table1_preset(node_count=100, protocol=protocol, seed=42)
    series, summary = run_simulation(cfg)
    total = 100 * cfg.initial_energy
    assert math.fsum(r.consumed for r in series) + series[-1].remaining == pytest.approx(total, abs=1e-6)
    prev_alive, prev_rem = 100, total
    for rec in series:
        assert rec.alive <= prev_alive
        assert rec.remaining <= prev_rem
        assert prev_rem - rec.remaining == pytest.approx(rec.consumed, abs=1e-9)
        prev_alive, prev_rem = rec.alive, rec.remaining
    assert summary.and_ is not None


def test_no_zombies_and_throughput_bound():
    cfg = table1_preset(node_count=50, seed=8)
    dead = set()
    budget = 0
    delivered = 0

    def check(rec, plan, state):
        nonlocal budget, delivered
        used = set(plan.cluster_heads) | set(plan.membership) | {h for h in plan.relay_next_hop.values() if h != SINK}
        assert not used & dead
        budget += len(plan.membership) + len(plan.cluster_heads)
        delivered += rec.delivered
        assert delivered <= budget
        for nd in state.nodes:
            assert nd.energy >= 0
            assert nd.alive == (nd.energy > state.death_threshold)
            if not nd.alive:
                dead.add(nd.id)

    run_simulation(cfg, check)


def test_deterministic():
    cfg = table1_preset(node_count=35, protocol="leach", seed=5)
    assert run_simulation(cfg) == run_simulation(cfg)


def test_shared_deployment_diverges_at_first_election():
    plans = {}
    for protocol in ("rbebp", "leach"):
        cfg = table1_preset(node_count=50, protocol=protocol, seed=13, max_rounds=1)
        state = initial_state(cfg)
        plans[protocol] = (state.nodes[:], cfg.make_protocol().plan_round(state.nodes, 0))
    assert plans["rbebp"][0] == plans["leach"][0]
    assert plans["rbebp"][1].cluster_heads != plans["leach"][1].cluster_heads


@settings(max_examples=40, deadline=None)
@given(
    n=st.integers(1, 30),
    seed=st.integers(0, 2**32 - 1),
    protocol=st.sampled_from(["rbebp", "leach"]),
    side=st.floats(50, 1200),
    energy=st.floats(0.01, 0.5),
)
def test_conservation_and_liveness_properties(n, seed, protocol, side, energy):
    cfg = table1_preset(node_count=n, protocol=protocol, seed=seed, initial_energy=energy, max_rounds=400,
                        field=FieldConfig(width=side, height=side, sink=(side / 2, side / 2)))
    dead = set()
    seen = []

    def on_round(rec, plan, state):
        used = set(plan.cluster_heads) | set(plan.membership)
        assert not used & dead
        dead.update(nd.id for nd in state.nodes if not nd.alive)
        seen.append(rec)

    series, summary = run_simulation(cfg, on_round)
    assert seen == series
    total = n * energy
    for rec in series:
        assert math.isclose(rec.remaining + sum(r.consumed for r in series[: rec.round + 1]), total, abs_tol=1e-9)
    alive = [rec.alive for rec in series]
    assert alive == sorted(alive, reverse=True)
    assert summary.total_throughput == sum(rec.delivered for rec in series)
