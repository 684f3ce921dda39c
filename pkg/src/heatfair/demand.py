"""Heat demand profiles and the node weights derived from them.

A demand matrix holds one column per substation and one row per
timestep. The weight of a node is its peak demand over the horizon,
normalised so all weights sum to one; peaks rather than means because
the network must be sized for the worst hour.
"""

from __future__ import annotations

import csv
import dataclasses
import json

import numpy as np

from .ioutil import atomic_write_text


class DemandError(ValueError):
    """Raised when a demand table or weight vector is invalid."""


@dataclasses.dataclass(frozen=True)
class DemandMatrix:
    """Demand samples, shape (timesteps, nodes), all values >= 0."""

    values: np.ndarray
    labels: tuple[str, ...] | None = None

    def __post_init__(self) -> None:
        values = np.asarray(self.values, dtype=float)
        if values.ndim != 2:
            raise DemandError(
                f"demand table must be two-dimensional, got shape {values.shape}"
            )
        if values.shape[0] < 1 or values.shape[1] < 1:
            raise DemandError(
                f"demand table needs at least one row and one column, "
                f"got shape {values.shape}"
            )
        if not np.all(np.isfinite(values)):
            bad = np.argwhere(~np.isfinite(values))[0]
            raise DemandError(
                f"non-finite demand at timestep {bad[0]}, node {bad[1]}"
            )
        if np.any(values < 0.0):
            bad = np.argwhere(values < 0.0)[0]
            raise DemandError(
                f"negative demand at timestep {bad[0]}, node {bad[1]}"
            )
        values = values.copy()
        values.flags.writeable = False
        object.__setattr__(self, "values", values)
        if self.labels is not None:
            if len(self.labels) != values.shape[1]:
                raise DemandError(
                    f"got {len(self.labels)} labels for {values.shape[1]} nodes"
                )
            object.__setattr__(self, "labels", tuple(str(s) for s in self.labels))

    @property
    def timesteps(self) -> int:
        return int(self.values.shape[0])

    @property
    def nodes(self) -> int:
        return int(self.values.shape[1])

    def node_label(self, i: int) -> str:
        if self.labels is not None:
            return self.labels[i]
        return str(i)


@dataclasses.dataclass(frozen=True)
class WeightVector:
    """Normalised node weights: strictly positive, summing to one."""

    values: np.ndarray

    def __post_init__(self) -> None:
        values = np.asarray(self.values, dtype=float)
        if values.ndim != 1 or values.size < 1:
            raise DemandError(
                f"weights must be a non-empty vector, got shape {values.shape}"
            )
        if not np.all(np.isfinite(values)) or np.any(values <= 0.0):
            raise DemandError("every weight must be finite and strictly positive")
        total = float(values.sum())
        if abs(total - 1.0) > 1e-12:
            raise DemandError(f"weights must sum to 1, got {total!r}")
        values = values.copy()
        values.flags.writeable = False
        object.__setattr__(self, "values", values)

    @property
    def nodes(self) -> int:
        return int(self.values.size)


def compute_weights(demands: DemandMatrix) -> WeightVector:
    """Peak demand per node divided by the sum of peaks.

    A node whose demand is zero at every timestep has no defined share
    and is rejected by name.
    """
    peaks = demands.values.max(axis=0)
    zero = np.flatnonzero(peaks == 0.0)
    if zero.size:
        names = ", ".join(demands.node_label(int(i)) for i in zero)
        raise DemandError(
            f"node(s) {names} have zero demand at every timestep; "
            f"weights are undefined"
        )
    return WeightVector(values=peaks / peaks.sum())


def uniform_weights(nodes: int) -> WeightVector:
    if nodes < 1:
        raise DemandError(f"need at least one node, got {nodes}")
    return WeightVector(values=np.full(nodes, 1.0 / nodes))


def synthetic_demands(
    nodes: int,
    timesteps: int = 168,
    seed: int = 0,
    anchor_scale: float = 10.0,
) -> DemandMatrix:
    """Heterogeneous weekly profiles for experiments.

    Each node gets a random peak level in [0.5, 2.0); node 0 is scaled
    up by anchor_scale to mimic one dominant consumer (an industrial
    site among households). The shape over time is a daily sinusoid
    plus noise, clipped at zero.
    """
    if nodes < 1:
        raise DemandError(f"need at least one node, got {nodes}")
    if timesteps < 1:
        raise DemandError(f"need at least one timestep, got {timesteps}")
    if anchor_scale <= 0.0:
        raise DemandError(f"anchor_scale must be positive, got {anchor_scale}")
    rng = np.random.default_rng(seed)
    peaks = rng.uniform(0.5, 2.0, size=nodes)
    peaks[0] *= anchor_scale
    hours = np.arange(timesteps)[:, None]
    phase = rng.uniform(0.0, 2.0 * np.pi, size=nodes)[None, :]
    base = 0.6 + 0.4 * np.sin(2.0 * np.pi * hours / 24.0 + phase)
    noise = rng.normal(0.0, 0.05, size=(timesteps, nodes))
    values = np.clip(base + noise, 0.0, None) * peaks[None, :]
    # guarantee the per-node peak survives clipping and noise exactly once
    peak_rows = rng.integers(0, timesteps, size=nodes)
    values[peak_rows, np.arange(nodes)] = peaks
    return DemandMatrix(values=values)


def demands_to_csv_text(demands: DemandMatrix) -> str:
    lines = [",".join(demands.node_label(i) for i in range(demands.nodes))]
    for row in demands.values:
        lines.append(",".join(repr(float(v)) for v in row))
    return "\n".join(lines) + "\n"


def load_demands(path: str) -> DemandMatrix:
    """Read a demand table from CSV: header of node labels, rows of samples."""
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise DemandError(f"{path}: file is empty") from None
        labels = tuple(cell.strip() for cell in header)
        if any(not lbl for lbl in labels):
            raise DemandError(f"{path}: header contains an empty label")
        rows = []
        for lineno, row in enumerate(reader, start=2):
            if not row or (len(row) == 1 and not row[0].strip()):
                continue
            if len(row) != len(labels):
                raise DemandError(
                    f"{path}: line {lineno} has {len(row)} cells, "
                    f"expected {len(labels)}"
                )
            parsed = []
            for col, cell in enumerate(row):
                try:
                    parsed.append(float(cell))
                except ValueError:
                    raise DemandError(
                        f"{path}: line {lineno}, column {labels[col]!r}: "
                        f"{cell!r} is not a number"
                    ) from None
            rows.append(parsed)
    if not rows:
        raise DemandError(f"{path}: no data rows after the header")
    try:
        return DemandMatrix(values=np.array(rows), labels=labels)
    except DemandError as exc:
        raise DemandError(f"{path}: {exc}") from exc


def save_weights(w: WeightVector, path: str, labels=None) -> None:
    doc: dict = {"weights": [float(v) for v in w.values]}
    if labels is not None:
        doc["labels"] = list(labels)
    atomic_write_text(path, json.dumps(doc, indent=2) + "\n")


def load_weights(path: str) -> WeightVector:
    with open(path, "r", encoding="utf-8") as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise DemandError(f"{path}: not valid JSON ({exc})") from exc
    if not isinstance(doc, dict) or "weights" not in doc:
        raise DemandError(f"{path}: expected an object with a 'weights' array")
    try:
        return WeightVector(values=np.asarray(doc["weights"], dtype=float))
    except (DemandError, ValueError) as exc:
        raise DemandError(f"{path}: {exc}") from exc
