"""Scoring assignments: load fairness, cluster compactness, and their
convex combination.

The Jain index scores how evenly producer loads are spread (1 means
perfectly even, 1/k means one producer carries everything). The
distance index scores how short the within-producer node-pair
distances are relative to the whole network (0 when one producer holds
every node, 1 when every node stands alone). The combined KPI mixes
the two with a weight kpi_alpha.
"""

from __future__ import annotations

import dataclasses

import numpy as np

from . import graphs
from .demand import WeightVector
from .solvers import Assignment


class FairnessError(ValueError):
    """Raised for undefined metrics or invalid inputs."""


@dataclasses.dataclass(frozen=True)
class ProducerLoads:
    """Per-producer share of total demand, nonnegative, summing to the
    total node weight."""

    y: np.ndarray

    def __post_init__(self) -> None:
        arr = np.asarray(self.y, dtype=float)
        if arr.ndim != 1 or arr.size < 1:
            raise FairnessError(f"loads must be a non-empty vector, got {arr.shape}")
        if not np.all(np.isfinite(arr)) or np.any(arr < 0.0):
            raise FairnessError("loads must be finite and nonnegative")
        arr = arr.copy()
        arr.flags.writeable = False
        object.__setattr__(self, "y", arr)

    @property
    def k(self) -> int:
        return int(self.y.size)


def producer_loads(a: Assignment, w: WeightVector) -> ProducerLoads:
    if a.n != w.nodes:
        raise FairnessError(
            f"assignment covers {a.n} nodes but weights cover {w.nodes}"
        )
    loads = np.bincount(
        np.asarray(a.producer_of), weights=w.values, minlength=a.k
    )
    return ProducerLoads(y=loads)


def jain_index(loads: ProducerLoads) -> float:
    """(sum y)^2 / (k * sum y^2); 1 iff all shares equal, 1/k at full
    concentration."""
    y = loads.y
    total = float(y.sum())
    if total == 0.0:
        raise FairnessError("all producer loads are zero; the index is undefined")
    return float(total * total / (loads.k * float(y @ y)))


def distance_index(
    a: Assignment, topo: graphs.Topology, sp: np.ndarray | None = None
) -> float:
    """1 minus the within-producer share of total pairwise shortest-path
    distance.

    Both sums run over unordered node pairs. At k=1 the numerator is
    the same masked array as the denominator, so the result is exactly
    0; with singleton producers the numerator is empty, giving exactly
    1. A one-node network has no pairs and scores 0.
    """
    if a.n != topo.nodes:
        raise FairnessError(
            f"assignment covers {a.n} nodes but topology has {topo.nodes}"
        )
    n = topo.nodes
    if n == 1:
        return 0.0
    if sp is None:
        sp = graphs.all_pairs_shortest_paths(topo)
    iu, ju = np.triu_indices(n, k=1)
    pair_dist = sp[iu, ju]
    if not np.all(np.isfinite(pair_dist)):
        raise FairnessError(
            "topology is disconnected; pairwise distances are unbounded"
        )
    producers = np.asarray(a.producer_of)
    within = producers[iu] == producers[ju]
    numerator = float(pair_dist[within].sum())
    denominator = float(pair_dist.sum())
    return 1.0 - numerator / denominator


def combined_kpi(jain: float, distance_idx: float, kpi_alpha: float = 0.5) -> float:
    """kpi_alpha * jain + (1 - kpi_alpha) * distance_idx, all in [0, 1]."""
    for name, value in (
        ("jain", jain),
        ("distance index", distance_idx),
        ("kpi_alpha", kpi_alpha),
    ):
        if not (0.0 <= value <= 1.0):
            raise FairnessError(f"{name} must lie in [0, 1], got {value!r}")
    return kpi_alpha * jain + (1.0 - kpi_alpha) * distance_idx


@dataclasses.dataclass(frozen=True)
class KpiReport:
    """One scored solve: indices plus the solver context they came from."""

    k: int
    jain: float
    distance_index: float
    kpi: float
    kpi_alpha: float
    solver_name: str
    energy: float
    assignment: tuple[int, ...] = ()

    def __post_init__(self) -> None:
        recomputed = self.kpi_alpha * self.jain + (1.0 - self.kpi_alpha) * self.distance_index
        if abs(recomputed - self.kpi) > 1e-12:
            raise FairnessError(
                f"kpi {self.kpi!r} does not recompute from its parts "
                f"({recomputed!r})"
            )
        object.__setattr__(self, "assignment", tuple(int(p) for p in self.assignment))

    def as_dict(self) -> dict:
        return {
            "k": self.k,
            "solver": self.solver_name,
            "jain": self.jain,
            "distance_index": self.distance_index,
            "kpi": self.kpi,
            "kpi_alpha": self.kpi_alpha,
            "energy": self.energy,
            "assignment": list(self.assignment),
        }


def score_assignment(
    a: Assignment,
    topo: graphs.Topology,
    w: WeightVector,
    kpi_alpha: float = 0.5,
    solver_name: str = "",
    energy: float = float("nan"),
    sp: np.ndarray | None = None,
) -> KpiReport:
    jain = jain_index(producer_loads(a, w))
    d_idx = distance_index(a, topo, sp=sp)
    kpi = combined_kpi(jain, d_idx, kpi_alpha)
    return KpiReport(
        k=a.k,
        jain=jain,
        distance_index=d_idx,
        kpi=kpi,
        kpi_alpha=kpi_alpha,
        solver_name=solver_name,
        energy=energy,
        assignment=a.producer_of,
    )
