"""Region-based energy-balanced cluster-head election and inter-cluster relaying.

CHs are drawn from whichever region (inner disk around the sink, or the
rest of the field) holds more residual energy, highest-energy nodes first.
Each CH then forwards its aggregated packet either straight to the sink or
through a CH strictly closer to the sink, whichever is cheaper under the
one-hop relay cost tx(CH_i -> CH_j) + rx + tx(CH_j -> sink).
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Mapping, Sequence

from .errors import InvalidParameter, SimulationEnded
from .field import NodeState, Point, Region, distance
from .radio import RadioParams, rx_energy, tx_energy

log = logging.getLogger(__name__)

SINK = -1
COST_TIE_RTOL = 1e-9
RELAY_RULES = ("eq4", "nearest")


@dataclass
class RoundPlan:
    cluster_heads: frozenset
    membership: dict  # member id -> CH id
    relay_next_hop: dict  # CH id -> CH id or SINK
    active_region: Region | None = None

    def to_json(self) -> dict:
        return {
            "cluster_heads": sorted(self.cluster_heads),
            "membership": {str(m): c for m, c in sorted(self.membership.items())},
            "relay_next_hop": {
                str(c): ("sink" if nxt == SINK else nxt) for c, nxt in sorted(self.relay_next_hop.items())
            },
            "active_region": None if self.active_region is None else self.active_region.value,
        }

    def route(self, ch: int) -> list:
        """Hop sequence from ``ch`` to the sink, ending with SINK."""
        path = [ch]
        while path[-1] != SINK:
            if len(path) > len(self.relay_next_hop) + 1:
                raise RuntimeError(f"relay cycle reached from CH {ch}")
            path.append(self.relay_next_hop[path[-1]])
        return path


def select_active_region(nodes: Sequence[NodeState]) -> Region:
    """Outer iff the alive outer nodes hold strictly more energy than the alive inner ones."""
    inner, outer = [], []
    for nd in nodes:
        if nd.alive:
            (inner if nd.region is Region.INNER else outer).append(nd.energy)
    if not inner and not outer:
        raise SimulationEnded("no alive nodes")
    return Region.OUTER if math.fsum(inner) < math.fsum(outer) else Region.INNER


def elect_cluster_heads(nodes: Sequence[NodeState], region: Region, ch_count: int) -> frozenset:
    """The ``ch_count`` highest-energy alive nodes of ``region`` (ties to lower id).

    An empty region hands the election to the other region.
    """
    if ch_count < 1:
        raise InvalidParameter(f"ch_count must be >= 1, got {ch_count}")
    pool = [nd for nd in nodes if nd.alive and nd.region is region]
    if not pool:
        pool = [nd for nd in nodes if nd.alive]
        if not pool:
            raise SimulationEnded("no alive nodes")
        log.info("region %s has no alive nodes; electing from the other region", region.value)
    pool.sort(key=lambda nd: (-nd.energy, nd.id))
    return frozenset(nd.id for nd in pool[:ch_count])


def form_clusters(nodes: Sequence[NodeState], cluster_heads) -> dict:
    """Attach every alive non-CH node to its nearest CH (ties to lower CH id)."""
    if not cluster_heads:
        raise InvalidParameter("cluster_heads must be non-empty")
    by_id = {nd.id: nd for nd in nodes}
    heads = [(c, by_id[c].pos) for c in sorted(cluster_heads)]
    membership = {}
    for nd in nodes:
        if not nd.alive or nd.id in cluster_heads:
            continue
        x, y = nd.pos
        best, best_d = None, math.inf
        for c, (cx, cy) in heads:
            d = math.hypot(x - cx, y - cy)
            if d < best_d:
                best, best_d = c, d
        membership[nd.id] = best
    return membership


def relay_cost(ch_i: Point, ch_j: Point, sink: Point, radio: RadioParams) -> float:
    """Energy to move one packet CH_i -> CH_j -> sink, counting CH_j's reception."""
    if tuple(ch_i) == tuple(ch_j):
        raise InvalidParameter("relay endpoints must differ")
    k = radio.packet_bits
    return tx_energy(radio, k, distance(ch_i, ch_j)) + rx_energy(radio, k) + tx_energy(radio, k, distance(ch_j, sink))


def _ties(a: float, b: float) -> bool:
    return abs(a - b) <= COST_TIE_RTOL * max(abs(a), abs(b))


def build_relay_routes(
    cluster_heads: Mapping[int, Point],
    sink: Point,
    radio: RadioParams,
    residual_energies: Mapping[int, float],
    rule: str = "eq4",
) -> dict:
    """Next hop (CH id or SINK) for every CH.

    Candidates are the sink and every CH strictly closer to the sink. Under
    ``rule="eq4"`` the cheapest candidate wins, with the sink cost being a
    direct transmission and a CH's cost the relay cost. ``rule="nearest"``
    picks the candidate nearest to the transmitting CH instead. Among
    candidates tied within COST_TIE_RTOL the sink is preferred, then the
    relay with more residual energy, then the lower id.
    """
    if not cluster_heads:
        raise InvalidParameter("cluster_heads must be non-empty")
    if rule not in RELAY_RULES:
        raise InvalidParameter(f"unknown relay rule {rule!r}")
    k = radio.packet_bits
    to_sink = {c: distance(p, sink) for c, p in cluster_heads.items()}
    routes = {}
    for c, pos in cluster_heads.items():
        if rule == "eq4":
            options = [(tx_energy(radio, k, to_sink[c]), SINK)]
            options += [
                (relay_cost(pos, cluster_heads[j], sink, radio), j)
                for j in cluster_heads
                if to_sink[j] < to_sink[c]
            ]
        else:
            options = [(to_sink[c], SINK)]
            options += [(distance(pos, cluster_heads[j]), j) for j in cluster_heads if to_sink[j] < to_sink[c]]
        best = min(score for score, _ in options)
        tied = [j for score, j in options if _ties(score, best)]
        if SINK in tied:
            routes[c] = SINK
        else:
            routes[c] = min(tied, key=lambda j: (-residual_energies[j], j))
    return routes


def default_ch_count(alive: int, fraction: float = 0.05, minimum: int = 3) -> int:
    return max(minimum, int(round(fraction * alive)))


@dataclass
class RBEBPProtocol:
    sink: Point
    radio: RadioParams
    ch_count: int | None = None
    ch_fraction: float = 0.05
    ch_min: int = 3
    relay_rule: str = "eq4"
    name: str = field(default="rbebp", init=False)

    def plan_round(self, nodes: Sequence[NodeState], round_index: int) -> RoundPlan:
        region = select_active_region(nodes)
        n_alive = sum(1 for nd in nodes if nd.alive)
        count = self.ch_count if self.ch_count is not None else default_ch_count(n_alive, self.ch_fraction, self.ch_min)
        heads = elect_cluster_heads(nodes, region, count)
        by_id = {nd.id: nd for nd in nodes}
        routes = build_relay_routes(
            {c: by_id[c].pos for c in heads},
            self.sink,
            self.radio,
            {c: by_id[c].energy for c in heads},
            rule=self.relay_rule,
        )
        return RoundPlan(heads, form_clusters(nodes, heads), routes, region)
