"""LEACH baseline: rotating threshold election, CHs send straight to the sink."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import InvalidParameter, SimulationEnded
from .field import NodeState
from .protocol_rbebp import SINK, RoundPlan, form_clusters


def _check_p(p: float) -> None:
    if not 0 < p < 1:
        raise InvalidParameter(f"p must lie in (0, 1), got {p}")


def epoch_length(p: float) -> int:
    _check_p(p)
    # Guard against 1/p landing a hair above an integer (e.g. 1/0.05).
    return math.ceil(round(1.0 / p, 9))


def leach_threshold(p: float, round_index: int, is_eligible: bool) -> float:
    """T(n) = p / (1 - p * (r mod ceil(1/p))) for eligible nodes, clamped to 1."""
    _check_p(p)
    if not is_eligible:
        return 0.0
    epoch = epoch_length(p)
    m = round_index % epoch
    if m == epoch - 1:
        return 1.0
    return min(1.0, p / (1.0 - p * m))


@dataclass
class LeachState:
    p: float = 0.05
    eligible: set = field(default_factory=set)
    round_index: int = 0

    def __post_init__(self):
        _check_p(self.p)


def elect_cluster_heads_leach(nodes: Sequence[NodeState], state: LeachState, rng: np.random.Generator) -> frozenset:
    """Run one election round and advance ``state``.

    Every alive node draws u ~ U(0, 1) in id order and self-elects iff
    u < T(n). A round with no volunteer promotes the eligible node closest
    to its threshold, or failing that the highest-energy alive node.
    """
    alive = [nd for nd in nodes if nd.alive]
    if not alive:
        raise SimulationEnded("no alive nodes")
    epoch = epoch_length(state.p)
    if state.round_index % epoch == 0:
        state.eligible = {nd.id for nd in alive}
    draws = rng.random(len(alive)).tolist()
    heads = set()
    margin_best, promoted = -math.inf, None
    for nd, u in zip(alive, draws):
        t = leach_threshold(state.p, state.round_index, nd.id in state.eligible)
        if u < t:
            heads.add(nd.id)
        elif nd.id in state.eligible and t - u > margin_best:
            margin_best, promoted = t - u, nd.id
    if not heads:
        if promoted is None:
            promoted = min(alive, key=lambda nd: (-nd.energy, nd.id)).id
        heads.add(promoted)
    state.eligible -= heads
    state.round_index += 1
    return frozenset(heads)


@dataclass
class LeachProtocol:
    p: float = 0.05
    seed: int = 0
    name: str = field(default="leach", init=False)

    def __post_init__(self):
        self.state = LeachState(self.p)
        # Separate stream from deployment so both protocols share placements.
        self.rng = np.random.default_rng([self.seed, 1])

    def plan_round(self, nodes: Sequence[NodeState], round_index: int) -> RoundPlan:
        self.state.round_index = round_index
        heads = elect_cluster_heads_leach(nodes, self.state, self.rng)
        return RoundPlan(heads, form_clusters(nodes, heads), {c: SINK for c in heads}, None)
