"""Field geometry, region partition and node deployment."""

from __future__ import annotations

import csv
import enum
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .errors import InvalidParameter

Point = tuple[float, float]

# Default inner radius as a fraction of the distance from the region
# center to the farthest field corner.
INNER_RADIUS_FRACTION = 0.62


class Region(str, enum.Enum):
    INNER = "inner"
    OUTER = "outer"


class Role(str, enum.Enum):
    MEMBER = "member"
    CLUSTER_HEAD = "cluster-head"


def distance(a: Point, b: Point) -> float:
    return math.hypot(a[0] - b[0], a[1] - b[1])


def annulus_area(R: float, r: float) -> float:
    """Area between concentric circles of radii ``R >= r >= 0``."""
    if r < 0 or R < r:
        raise InvalidParameter(f"annulus needs R >= r >= 0, got R={R}, r={r}")
    return math.pi * (R * R - r * r)


@dataclass(frozen=True)
class FieldConfig:
    """Rectangular field ``[0, width] x [0, height]`` with a point sink.

    ``region_center`` defaults to the sink and ``inner_radius`` to
    INNER_RADIUS_FRACTION of the center-to-farthest-corner distance.
    Everything in the field outside the inner disk is the outer region.
    """

    width: float = 1000.0
    height: float = 1000.0
    sink: Point = (75.0, 175.0)
    region_center: Point | None = None
    inner_radius: float | None = None

    def __post_init__(self):
        if not (self.width > 0 and self.height > 0):
            raise InvalidParameter(f"field dimensions must be positive, got {self.width}x{self.height}")
        object.__setattr__(self, "sink", (float(self.sink[0]), float(self.sink[1])))
        center = self.sink if self.region_center is None else self.region_center
        center = (float(center[0]), float(center[1]))
        if not (0 <= center[0] <= self.width and 0 <= center[1] <= self.height):
            raise InvalidParameter(f"region center {center} lies outside the field")
        object.__setattr__(self, "region_center", center)
        if self.inner_radius is None:
            object.__setattr__(self, "inner_radius", INNER_RADIUS_FRACTION * self.farthest_corner_distance())
        if not self.inner_radius > 0:
            raise InvalidParameter(f"inner_radius must be positive, got {self.inner_radius}")

    def farthest_corner_distance(self) -> float:
        corners = [(0.0, 0.0), (self.width, 0.0), (0.0, self.height), (self.width, self.height)]
        return max(distance(self.region_center, c) for c in corners)


def classify_region(pos: Point, fld: FieldConfig) -> Region:
    # Boundary points (distance == inner_radius) count as inner.
    if distance(pos, fld.region_center) <= fld.inner_radius:
        return Region.INNER
    return Region.OUTER


@dataclass
class NodeState:
    id: int
    pos: Point
    energy: float
    region: Region
    alive: bool = True
    role: Role = Role.MEMBER

    def __setattr__(self, name, value):
        # Nodes are stationary; position and region are fixed at deployment.
        if name in ("pos", "region", "id") and name in self.__dict__:
            raise AttributeError(f"NodeState.{name} is immutable after deployment")
        object.__setattr__(self, name, value)


def deploy(n: int, fld: FieldConfig, initial_energy: float, seed) -> list[NodeState]:
    """Place ``n`` nodes uniformly at random over the field rectangle.

    ``seed`` is anything accepted by ``numpy.random.default_rng``.
    """
    if n < 1:
        raise InvalidParameter(f"node count must be >= 1, got {n}")
    if not initial_energy > 0:
        raise InvalidParameter(f"initial energy must be positive, got {initial_energy}")
    rng = np.random.default_rng(seed)
    xs = rng.uniform(0.0, fld.width, n).tolist()
    ys = rng.uniform(0.0, fld.height, n).tolist()
    nodes = []
    for i, (x, y) in enumerate(zip(xs, ys)):
        pos = (x, y)
        nodes.append(NodeState(id=i, pos=pos, energy=float(initial_energy), region=classify_region(pos, fld)))
    return nodes


def write_placements_csv(nodes: Sequence[NodeState], path) -> Path:
    path = Path(path)
    with path.open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["id", "x", "y", "region"])
        for nd in nodes:
            w.writerow([nd.id, repr(nd.pos[0]), repr(nd.pos[1]), nd.region.value])
    return path
