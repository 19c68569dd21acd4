"""Round-based simulation loop shared by both protocols.

One round: election and routing, control exchange, one data packet per
member, aggregation at each CH, forwarding of every CH packet to the sink.
Each energy charge is applied in full when the node can afford it.
Otherwise the node is drained to zero and the operation fails. A node
whose residual drops to the death threshold or below is dead from that
point on and initiates nothing more.
"""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

from .errors import InvalidParameter, SimulationEnded
from .field import FieldConfig, NodeState, Point, Role, deploy
from .metrics import LifetimeSummary, RoundRecord, summarize
from .protocol_leach import LeachProtocol
from .protocol_rbebp import RELAY_RULES, SINK, RBEBPProtocol, RoundPlan
from .radio import CONTROL_BITS, RadioParams, aggregation_energy, rx_energy, tx_energy

PROTOCOLS = ("rbebp", "leach")


@dataclass(frozen=True)
class SimConfig:
    node_count: int = 100
    field: FieldConfig = dataclasses.field(default_factory=FieldConfig)
    radio: RadioParams = dataclasses.field(default_factory=RadioParams)
    initial_energy: float = 2.0
    protocol: str = "rbebp"
    ch_count: int | None = None
    ch_fraction: float = 0.05
    ch_min: int = 3
    relay_rule: str = "eq4"
    leach_p: float = 0.05
    control_bits: int = CONTROL_BITS
    charge_control: bool = True
    death_threshold: float | None = None
    max_rounds: int = 20000
    seed: int = 0
    round_seconds: float = 1.0

    def validate(self) -> "SimConfig":
        if self.node_count < 1:
            raise InvalidParameter(f"node_count must be >= 1, got {self.node_count}")
        if not self.initial_energy > 0:
            raise InvalidParameter(f"initial_energy must be positive, got {self.initial_energy}")
        if self.protocol not in PROTOCOLS:
            raise InvalidParameter(f"unknown protocol {self.protocol!r}; expected one of {PROTOCOLS}")
        if self.ch_count is not None and self.ch_count < 1:
            raise InvalidParameter(f"ch_count must be >= 1, got {self.ch_count}")
        if not 0 < self.ch_fraction <= 1 or self.ch_min < 1:
            raise InvalidParameter("ch_fraction must lie in (0, 1] and ch_min be >= 1")
        if self.relay_rule not in RELAY_RULES:
            raise InvalidParameter(f"unknown relay rule {self.relay_rule!r}")
        if not 0 < self.leach_p < 1:
            raise InvalidParameter(f"leach_p must lie in (0, 1), got {self.leach_p}")
        if self.control_bits < 1:
            raise InvalidParameter(f"control_bits must be >= 1, got {self.control_bits}")
        if self.death_threshold is not None and self.death_threshold < 0:
            raise InvalidParameter(f"death_threshold must be >= 0, got {self.death_threshold}")
        if self.max_rounds < 0:
            raise InvalidParameter(f"max_rounds must be >= 0, got {self.max_rounds}")
        if not self.round_seconds > 0:
            raise InvalidParameter(f"round_seconds must be positive, got {self.round_seconds}")
        return self

    @property
    def resolved_death_threshold(self) -> float:
        # Dead once the node can no longer afford a single data reception.
        if self.death_threshold is None:
            return self.radio.e_elec * self.radio.packet_bits
        return self.death_threshold

    def make_protocol(self):
        if self.protocol == "leach":
            return LeachProtocol(p=self.leach_p, seed=self.seed)
        return RBEBPProtocol(
            sink=self.field.sink,
            radio=self.radio,
            ch_count=self.ch_count,
            ch_fraction=self.ch_fraction,
            ch_min=self.ch_min,
            relay_rule=self.relay_rule,
        )


def table1_preset(**overrides) -> SimConfig:
    """Evaluation-setup parameters plus documented defaults for the omitted ones."""
    return dataclasses.replace(SimConfig(), **overrides).validate()


@dataclass
class NetworkState:
    nodes: list
    radio: RadioParams
    sink: Point
    death_threshold: float
    control_bits: int = CONTROL_BITS
    charge_control: bool = True
    round_index: int = 0
    last_plan: RoundPlan | None = None

    def remaining(self) -> float:
        return math.fsum(nd.energy for nd in self.nodes)

    def alive_count(self) -> int:
        return sum(1 for nd in self.nodes if nd.alive)


def run_round(state: NetworkState, protocol) -> tuple[NetworkState, RoundRecord]:
    nodes = state.nodes
    if not any(nd.alive for nd in nodes):
        raise SimulationEnded("no alive nodes")
    radio, thr, k = state.radio, state.death_threshold, state.radio.packet_bits

    plan = protocol.plan_round(nodes, state.round_index)
    state.last_plan = plan
    for nd in nodes:
        nd.role = Role.CLUSTER_HEAD if nd.id in plan.cluster_heads else Role.MEMBER

    spent = []

    def charge(nd: NodeState, cost: float) -> bool:
        e = nd.energy
        if cost <= e:
            nd.energy = e - cost
            spent.append(cost)
            ok = True
        else:
            nd.energy = 0.0
            spent.append(e)
            ok = False
        if nd.energy <= thr:
            nd.alive = False
        return ok

    heads = sorted(plan.cluster_heads)
    members = sorted(plan.membership)
    link = {m: math.dist(nodes[m].pos, nodes[plan.membership[m]].pos) for m in members}

    if state.charge_control:
        reach = dict.fromkeys(heads, 0.0)
        for m in members:
            c = plan.membership[m]
            reach[c] = max(reach[c], link[m])
        for c in heads:
            if nodes[c].alive:
                charge(nodes[c], tx_energy(radio, state.control_bits, reach[c] or radio.d0))
        for m in members:
            if nodes[m].alive:
                charge(nodes[m], tx_energy(radio, state.control_bits, link[m]))

    received = dict.fromkeys(heads, 0)
    for m in members:
        sender, c = nodes[m], plan.membership[m]
        if not sender.alive:
            continue
        if charge(sender, tx_energy(radio, k, link[m])) and nodes[c].alive:
            if charge(nodes[c], rx_energy(radio, k)):
                received[c] += 1

    packets = []
    for c in heads:
        ch = nodes[c]
        if ch.alive and charge(ch, aggregation_energy(radio, k, received[c] + 1)):
            packets.append((math.dist(ch.pos, state.sink), c, received[c] + 1))
    packets.sort()

    delivered = 0
    for _, c, readings in packets:
        t = c
        while True:
            sender = nodes[t]
            if not sender.alive:
                break
            nxt = plan.relay_next_hop[t]
            target = state.sink if nxt == SINK else nodes[nxt].pos
            if not charge(sender, tx_energy(radio, k, math.dist(sender.pos, target))):
                break
            if nxt == SINK:
                delivered += readings
                break
            if not nodes[nxt].alive or not charge(nodes[nxt], rx_energy(radio, k)):
                break
            t = nxt

    after = state.remaining()
    record = RoundRecord(
        round=state.round_index,
        alive=state.alive_count(),
        remaining=after,
        consumed=math.fsum(spent),
        delivered=delivered,
        active_region=None if plan.active_region is None else plan.active_region.value,
        ch_count=len(heads),
    )
    state.round_index += 1
    return state, record


def initial_state(config: SimConfig, nodes: Sequence[NodeState] | None = None) -> NetworkState:
    if nodes is None:
        nodes = deploy(config.node_count, config.field, config.initial_energy, config.seed)
    if any(nd.id != i for i, nd in enumerate(nodes)):
        raise InvalidParameter("node ids must equal their list positions")
    return NetworkState(
        nodes=list(nodes),
        radio=config.radio,
        sink=config.field.sink,
        death_threshold=config.resolved_death_threshold,
        control_bits=config.control_bits,
        charge_control=config.charge_control,
    )


def run_simulation(
    config: SimConfig,
    on_round: Callable[[RoundRecord, RoundPlan, NetworkState], None] | None = None,
) -> tuple[list, LifetimeSummary]:
    """Run rounds until every node is dead or ``max_rounds`` is reached."""
    config.validate()
    state = initial_state(config)
    protocol = config.make_protocol()
    series = []
    while state.round_index < config.max_rounds and any(nd.alive for nd in state.nodes):
        state, record = run_round(state, protocol)
        series.append(record)
        if on_round is not None:
            on_round(record, state.last_plan, state)
    return series, summarize(series, config.node_count, config.round_seconds)


# --- flat key/value form (config files, manifests, sweeps) -------------------

def _opt(conv):
    def parse(v):
        if v is None or (isinstance(v, str) and v.strip().lower() in ("", "auto", "none", "null")):
            return None
        return conv(v)

    return parse


def _bool(v) -> bool:
    if isinstance(v, bool):
        return v
    s = str(v).strip().lower()
    if s in ("1", "true", "yes", "on"):
        return True
    if s in ("0", "false", "no", "off"):
        return False
    raise InvalidParameter(f"not a boolean: {v!r}")


def _int(v) -> int:
    f = float(v)
    if f != int(f):
        raise InvalidParameter(f"not an integer: {v!r}")
    return int(f)


FLAT_KEYS = {
    "node_count": _int,
    "protocol": str,
    "seed": _int,
    "max_rounds": _int,
    "initial_energy": float,
    "round_seconds": float,
    "ch_count": _opt(_int),
    "ch_fraction": float,
    "ch_min": _int,
    "relay_rule": str,
    "leach_p": float,
    "control_bits": _int,
    "charge_control": _bool,
    "death_threshold": _opt(float),
    "width": float,
    "height": float,
    "sink_x": float,
    "sink_y": float,
    "center_x": _opt(float),
    "center_y": _opt(float),
    "inner_radius": _opt(float),
    "e_elec": float,
    "eps_fs": float,
    "eps_mp": float,
    "e_da": float,
    "packet_bits": _int,
}


def config_to_flat(cfg: SimConfig) -> dict:
    """Fully resolved flat form; feeding it back yields an equal config."""
    f, r = cfg.field, cfg.radio
    return {
        "node_count": cfg.node_count,
        "protocol": cfg.protocol,
        "seed": cfg.seed,
        "max_rounds": cfg.max_rounds,
        "initial_energy": cfg.initial_energy,
        "round_seconds": cfg.round_seconds,
        "ch_count": cfg.ch_count,
        "ch_fraction": cfg.ch_fraction,
        "ch_min": cfg.ch_min,
        "relay_rule": cfg.relay_rule,
        "leach_p": cfg.leach_p,
        "control_bits": cfg.control_bits,
        "charge_control": cfg.charge_control,
        "death_threshold": cfg.death_threshold,
        "width": f.width,
        "height": f.height,
        "sink_x": f.sink[0],
        "sink_y": f.sink[1],
        "center_x": f.region_center[0],
        "center_y": f.region_center[1],
        "inner_radius": f.inner_radius,
        "e_elec": r.e_elec,
        "eps_fs": r.eps_fs,
        "eps_mp": r.eps_mp,
        "e_da": r.e_da,
        "packet_bits": r.packet_bits,
    }


def config_from_flat(values: dict, base: SimConfig | None = None) -> SimConfig:
    """Overlay ``values`` (strings or native types) on ``base``."""
    unknown = set(values) - set(FLAT_KEYS)
    if unknown:
        raise InvalidParameter(f"unknown config key(s): {', '.join(sorted(unknown))}")
    flat = config_to_flat(base or SimConfig())
    # A moved sink drags the default region geometry with it unless pinned.
    if {"sink_x", "sink_y", "width", "height"} & set(values):
        for key in ("center_x", "center_y", "inner_radius"):
            flat[key] = None
    try:
        for key, raw in values.items():
            flat[key] = FLAT_KEYS[key](raw)
    except (TypeError, ValueError) as exc:
        raise InvalidParameter(str(exc)) from exc
    center = None
    if flat["center_x"] is not None or flat["center_y"] is not None:
        center = (
            flat["sink_x"] if flat["center_x"] is None else flat["center_x"],
            flat["sink_y"] if flat["center_y"] is None else flat["center_y"],
        )
    fld = FieldConfig(
        width=flat["width"],
        height=flat["height"],
        sink=(flat["sink_x"], flat["sink_y"]),
        region_center=center,
        inner_radius=flat["inner_radius"],
    )
    radio = RadioParams(
        e_elec=flat["e_elec"],
        eps_fs=flat["eps_fs"],
        eps_mp=flat["eps_mp"],
        e_da=flat["e_da"],
        packet_bits=flat["packet_bits"],
    )
    scalar = {k: flat[k] for k in (f.name for f in dataclasses.fields(SimConfig)) if k in flat}
    return SimConfig(field=fld, radio=radio, **scalar).validate()


def parse_config_text(text: str) -> dict:
    """Parse ``key = value`` lines; ``#`` starts a comment."""
    values = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        if not sep:
            raise InvalidParameter(f"line {lineno}: expected key = value, got {line!r}")
        values[key.strip()] = value.strip()
    return values
