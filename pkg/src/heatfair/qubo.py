"""Assemble the producer-assignment objective as a QUBO.

The assignment of n nodes to k producers is encoded in n*k binary
variables x[i, j] ("node i belongs to producer j"), flattened as
var = j*n + i. The objective combines three terms:

  beta  * sum_j x_j' DL x_j           pipe distance between same-producer
                                      neighbours (DL is the zero-diagonal
                                      edge-distance matrix)
  alpha_j * (sum_i w_i x_ij - W/k)^2  producer load balance, W = sum w_i
  gamma_i * (sum_j x_ij - 1)^2        each node picks exactly one producer

Expanding the squares yields linear coefficients, strictly
upper-triangular quadratic coefficients, and a constant offset, so QUBO
energies equal the objective value directly, with no dropped constants.
"""

from __future__ import annotations

import dataclasses
import math

import numpy as np

from . import graphs
from .demand import WeightVector
from .ioutil import atomic_write_text


class QuboError(ValueError):
    """Raised when an instance or its inputs are invalid."""


class QuboFormatError(QuboError):
    """Raised when a coordinate-format file cannot be parsed."""


def _positive_entries(value, name: str):
    if np.isscalar(value):
        entries = (float(value),)
        out = float(value)
    else:
        entries = tuple(float(v) for v in np.asarray(value).ravel())
        out = entries
    for v in entries:
        if not math.isfinite(v) or v <= 0.0:
            raise QuboError(f"{name} entries must be finite and positive, got {v!r}")
    return out


@dataclasses.dataclass(frozen=True)
class PenaltyConfig:
    """Penalty constants: scalars broadcast, vectors are per-producer
    (alpha) or per-node (gamma)."""

    beta: float = 1.0
    alpha: float | tuple[float, ...] = 1.0
    gamma: float | tuple[float, ...] = 1.0

    def __post_init__(self) -> None:
        object.__setattr__(self, "beta", float(self.beta))
        if not math.isfinite(self.beta) or self.beta <= 0.0:
            raise QuboError(f"beta must be finite and positive, got {self.beta!r}")
        object.__setattr__(self, "alpha", _positive_entries(self.alpha, "alpha"))
        object.__setattr__(self, "gamma", _positive_entries(self.gamma, "gamma"))

    def alpha_vector(self, k: int) -> np.ndarray:
        if isinstance(self.alpha, float):
            return np.full(k, self.alpha)
        if len(self.alpha) != k:
            raise QuboError(
                f"alpha vector has length {len(self.alpha)}, expected k={k}"
            )
        return np.array(self.alpha)

    def gamma_vector(self, n: int) -> np.ndarray:
        if isinstance(self.gamma, float):
            return np.full(n, self.gamma)
        if len(self.gamma) != n:
            raise QuboError(
                f"gamma vector has length {len(self.gamma)}, expected n={n}"
            )
        return np.array(self.gamma)


@dataclasses.dataclass(frozen=True)
class QuboInstance:
    """Coefficients of one assignment problem.

    linear maps variable -> coefficient; quadratic maps (v1, v2) with
    v1 < v2 -> coefficient; zero coefficients are not stored. Treat
    instances as immutable even though dicts technically are not.
    """

    n: int
    k: int
    linear: dict[int, float]
    quadratic: dict[tuple[int, int], float]
    offset: float

    def __post_init__(self) -> None:
        if self.n < 1 or self.k < 1:
            raise QuboError(f"need n >= 1 and k >= 1, got n={self.n}, k={self.k}")
        nv = self.num_vars
        for v, coeff in self.linear.items():
            if not (0 <= v < nv):
                raise QuboError(f"linear variable {v} outside 0..{nv - 1}")
            if coeff == 0.0:
                raise QuboError(f"zero linear coefficient stored for variable {v}")
        for (a, b), coeff in self.quadratic.items():
            if not (0 <= a < b < nv):
                raise QuboError(
                    f"quadratic key ({a}, {b}) is not strictly upper-triangular "
                    f"within 0..{nv - 1}"
                )
            if coeff == 0.0:
                raise QuboError(f"zero quadratic coefficient stored for ({a}, {b})")

    @property
    def num_vars(self) -> int:
        return self.n * self.k

    def var_index(self, node: int, producer: int) -> int:
        if not (0 <= node < self.n) or not (0 <= producer < self.k):
            raise QuboError(
                f"(node={node}, producer={producer}) outside "
                f"n={self.n}, k={self.k}"
            )
        return producer * self.n + node

    def node_producer(self, var: int) -> tuple[int, int]:
        if not (0 <= var < self.num_vars):
            raise QuboError(f"variable {var} outside 0..{self.num_vars - 1}")
        return var % self.n, var // self.n

    def to_arrays(self) -> tuple[np.ndarray, np.ndarray]:
        """Dense (linear vector, upper-triangular quadratic matrix)."""
        lin = np.zeros(self.num_vars)
        for v, coeff in self.linear.items():
            lin[v] = coeff
        quad = np.zeros((self.num_vars, self.num_vars))
        for (a, b), coeff in self.quadratic.items():
            quad[a, b] = coeff
        return lin, quad


class _Accumulator:
    """Collects coefficients, dropping anything that cancels to zero."""

    def __init__(self) -> None:
        self.linear: dict[int, float] = {}
        self.quadratic: dict[tuple[int, int], float] = {}
        self.offset = 0.0

    def add_linear(self, var: int, coeff: float) -> None:
        self.linear[var] = self.linear.get(var, 0.0) + coeff

    def add_quadratic(self, v1: int, v2: int, coeff: float) -> None:
        if v1 > v2:
            v1, v2 = v2, v1
        key = (v1, v2)
        self.quadratic[key] = self.quadratic.get(key, 0.0) + coeff

    def build(self, n: int, k: int) -> QuboInstance:
        return QuboInstance(
            n=n,
            k=k,
            linear={v: c for v, c in self.linear.items() if c != 0.0},
            quadratic={key: c for key, c in self.quadratic.items() if c != 0.0},
            offset=self.offset,
        )


def _weight_array(w, n: int) -> np.ndarray:
    if isinstance(w, WeightVector):
        arr = np.asarray(w.values, dtype=float)
    else:
        arr = np.asarray(w, dtype=float)
        if arr.ndim != 1:
            raise QuboError(f"weights must be a vector, got shape {arr.shape}")
        if not np.all(np.isfinite(arr)) or np.any(arr <= 0.0):
            raise QuboError("weights must be finite and strictly positive")
    if arr.size != n:
        raise QuboError(f"got {arr.size} weights for {n} nodes")
    return arr


def _check_k(n: int, k: int) -> None:
    if k < 1:
        raise QuboError(f"need at least one producer, got k={k}")
    if k > n:
        raise QuboError(
            f"more producers than nodes (k={k} > n={n}) makes balance "
            f"targets degenerate"
        )


def build_qubo(topo: graphs.Topology, w, k: int, cfg: PenaltyConfig) -> QuboInstance:
    """Weighted objective over n*k variables; see module docstring.

    w may be a WeightVector or any positive vector; the balance target
    is W/k with W its actual sum, so unnormalised weights work too.
    """
    n = topo.nodes
    _check_k(n, k)
    weights = _weight_array(w, n)
    alpha = cfg.alpha_vector(k)
    gamma = cfg.gamma_vector(n)
    total = float(weights.sum())
    target = total / k
    acc = _Accumulator()

    def var(i: int, j: int) -> int:
        return j * n + i

    for j in range(k):
        for u, v, dist in topo.edges:
            acc.add_quadratic(var(u, j), var(v, j), 2.0 * cfg.beta * dist)
    for j in range(k):
        aj = float(alpha[j])
        for i in range(n):
            wi = float(weights[i])
            acc.add_linear(var(i, j), aj * (wi * wi - 2.0 * target * wi))
        for u in range(n):
            for v in range(u + 1, n):
                acc.add_quadratic(
                    var(u, j), var(v, j),
                    2.0 * aj * float(weights[u]) * float(weights[v]),
                )
        acc.offset += aj * target * target
    for i in range(n):
        gi = float(gamma[i])
        for j in range(k):
            acc.add_linear(var(i, j), -gi)
        for j1 in range(k):
            for j2 in range(j1 + 1, k):
                acc.add_quadratic(var(i, j1), var(i, j2), 2.0 * gi)
        acc.offset += gi
    return acc.build(n, k)


def build_unweighted_qubo(topo: graphs.Topology, k: int, cfg: PenaltyConfig) -> QuboInstance:
    """Node-count variant: cut edges via the combinatorial Laplacian and
    a balance target of n/k nodes per producer.

    Unlike the weighted form, the graph term here rewards keeping
    neighbours together (it counts edges leaving each group), while the
    weighted form's distance term counts edges kept inside each group.
    """
    n = topo.nodes
    _check_k(n, k)
    alpha = cfg.alpha_vector(k)
    gamma = cfg.gamma_vector(n)
    target = n / k
    degree = [0] * n
    for u, v, _ in topo.edges:
        degree[u] += 1
        degree[v] += 1
    acc = _Accumulator()

    def var(i: int, j: int) -> int:
        return j * n + i

    for j in range(k):
        for i in range(n):
            if degree[i]:
                acc.add_linear(var(i, j), cfg.beta * degree[i])
        for u, v, _ in topo.edges:
            acc.add_quadratic(var(u, j), var(v, j), -2.0 * cfg.beta)
    for j in range(k):
        aj = float(alpha[j])
        for i in range(n):
            acc.add_linear(var(i, j), aj * (1.0 - 2.0 * target))
        for u in range(n):
            for v in range(u + 1, n):
                acc.add_quadratic(var(u, j), var(v, j), 2.0 * aj)
        acc.offset += aj * target * target
    for i in range(n):
        gi = float(gamma[i])
        for j in range(k):
            acc.add_linear(var(i, j), -gi)
        for j1 in range(k):
            for j2 in range(j1 + 1, k):
                acc.add_quadratic(var(i, j1), var(i, j2), 2.0 * gi)
        acc.offset += gi
    return acc.build(n, k)


def energy(q: QuboInstance, bits) -> float:
    """offset + sum(linear_i b_i) + sum(quad_ij b_i b_j), term by term."""
    vec = np.asarray(bits).ravel()
    if vec.size != q.num_vars:
        raise QuboError(f"got {vec.size} bits for {q.num_vars} variables")
    total = q.offset
    for v, coeff in q.linear.items():
        if vec[v]:
            total += coeff
    for (a, b), coeff in q.quadratic.items():
        if vec[a] and vec[b]:
            total += coeff
    return float(total)


def energies(q: QuboInstance, bit_matrix: np.ndarray) -> np.ndarray:
    """Vectorised energy of many bit vectors, one per row."""
    mat = np.asarray(bit_matrix, dtype=float)
    if mat.ndim != 2 or mat.shape[1] != q.num_vars:
        raise QuboError(
            f"bit matrix must be (rows, {q.num_vars}), got shape {mat.shape}"
        )
    lin, quad = q.to_arrays()
    return q.offset + mat @ lin + ((mat @ quad) * mat).sum(axis=1)


def assignment_cost(
    topo: graphs.Topology, w, k: int, cfg: PenaltyConfig, producer_of
) -> float:
    """Objective value of a feasible assignment, evaluated directly.

    For one-producer-per-node assignments the one-hot term vanishes, so
    this equals the QUBO energy of the corresponding bit vector. Kept
    as a second route on purpose: the local-search solver optimises
    this, and tests cross-check it against QUBO energies.
    """
    n = topo.nodes
    _check_k(n, k)
    weights = _weight_array(w, n)
    assign = np.asarray(producer_of, dtype=int)
    if assign.size != n:
        raise QuboError(f"got {assign.size} producer ids for {n} nodes")
    if assign.size and (assign.min() < 0 or assign.max() >= k):
        raise QuboError(f"producer ids must lie in 0..{k - 1}")
    alpha = cfg.alpha_vector(k)
    total = float(weights.sum())
    target = total / k
    cost = 0.0
    for u, v, dist in topo.edges:
        if assign[u] == assign[v]:
            cost += 2.0 * cfg.beta * dist
    loads = np.bincount(assign, weights=weights, minlength=k)
    cost += float(np.sum(alpha * (loads - target) ** 2))
    return cost


def default_penalties(topo: graphs.Topology, w, k: int) -> PenaltyConfig:
    """Deterministic penalty heuristic: beta = 1, alpha and gamma scaled
    so that violating balance or one-hot feasibility never pays off on
    desk-scale instances.

    The distance scale S is the largest row sum of the edge-distance
    matrix; an edgeless graph has S = 0, which would zero out alpha, so
    S falls back to 1 there to keep every penalty strictly positive.
    """
    n = topo.nodes
    _check_k(n, k)
    weights = _weight_array(w, n)
    beta = 1.0
    row_sums = np.zeros(n)
    for u, v, dist in topo.edges:
        row_sums[u] += dist
        row_sums[v] += dist
    scale = float(row_sums.max())
    if scale == 0.0:
        scale = 1.0
    w_min = float(weights.min())
    w_max = float(weights.max())
    alpha = beta * scale / (w_min * w_min)
    gamma = 2.0 * (beta * scale + alpha * w_max)
    return PenaltyConfig(beta=beta, alpha=alpha, gamma=gamma)


def export_qubo(q: QuboInstance, path: str) -> None:
    """Write coordinate text plus a <path>.map sidecar tying variables
    to (node, producer) pairs. Floats use shortest round-trip decimals,
    so import reproduces every coefficient bit-exactly.
    """
    lines = [
        f"p qubo {q.num_vars} {len(q.linear)} {len(q.quadratic)} {q.offset!r}"
    ]
    for v in sorted(q.linear):
        lines.append(f"{v} {v} {q.linear[v]!r}")
    for a, b in sorted(q.quadratic):
        lines.append(f"{a} {b} {q.quadratic[(a, b)]!r}")
    atomic_write_text(path, "\n".join(lines) + "\n")

    map_lines = [f"map {q.n} {q.k}"]
    for var in range(q.num_vars):
        node, producer = q.node_producer(var)
        map_lines.append(f"{var} {node} {producer}")
    atomic_write_text(path + ".map", "\n".join(map_lines) + "\n")


def _parse_header(path: str, line: str) -> tuple[int, int, int, float]:
    parts = line.split()
    if len(parts) != 6 or parts[0] != "p" or parts[1] != "qubo":
        raise QuboFormatError(
            f"{path}: line 1: expected 'p qubo <vars> <linear> <quad> <offset>', "
            f"got {line!r}"
        )
    try:
        return int(parts[2]), int(parts[3]), int(parts[4]), float(parts[5])
    except ValueError:
        raise QuboFormatError(f"{path}: line 1: malformed header {line!r}") from None


def import_qubo(path: str) -> QuboInstance:
    with open(path, "r", encoding="utf-8") as fh:
        raw = fh.read().splitlines()
    if not raw:
        raise QuboFormatError(f"{path}: file is empty")
    num_vars, num_linear, num_quad, offset = _parse_header(path, raw[0])
    linear: dict[int, float] = {}
    quadratic: dict[tuple[int, int], float] = {}
    for lineno, line in enumerate(raw[1:], start=2):
        if not line.strip():
            continue
        parts = line.split()
        if len(parts) != 3:
            raise QuboFormatError(
                f"{path}: line {lineno}: expected '<i> <j> <value>', got {line!r}"
            )
        try:
            a, b, value = int(parts[0]), int(parts[1]), float(parts[2])
        except ValueError:
            raise QuboFormatError(
                f"{path}: line {lineno}: malformed entry {line!r}"
            ) from None
        if not (0 <= a < num_vars) or not (0 <= b < num_vars):
            raise QuboFormatError(
                f"{path}: line {lineno}: variable outside 0..{num_vars - 1}"
            )
        if a == b:
            if a in linear:
                raise QuboFormatError(
                    f"{path}: line {lineno}: duplicate linear entry for {a}"
                )
            linear[a] = value
        elif a < b:
            if (a, b) in quadratic:
                raise QuboFormatError(
                    f"{path}: line {lineno}: duplicate quadratic entry ({a}, {b})"
                )
            quadratic[(a, b)] = value
        else:
            raise QuboFormatError(
                f"{path}: line {lineno}: quadratic entry must have i < j"
            )
    if len(linear) != num_linear or len(quadratic) != num_quad:
        raise QuboFormatError(
            f"{path}: header promises {num_linear} linear and {num_quad} "
            f"quadratic entries, found {len(linear)} and {len(quadratic)}"
        )

    map_path = path + ".map"
    try:
        with open(map_path, "r", encoding="utf-8") as fh:
            map_raw = fh.read().splitlines()
    except FileNotFoundError:
        raise QuboFormatError(f"{map_path}: sidecar mapping file not found") from None
    if not map_raw:
        raise QuboFormatError(f"{map_path}: file is empty")
    head = map_raw[0].split()
    if len(head) != 3 or head[0] != "map":
        raise QuboFormatError(
            f"{map_path}: line 1: expected 'map <n> <k>', got {map_raw[0]!r}"
        )
    try:
        n, k = int(head[1]), int(head[2])
    except ValueError:
        raise QuboFormatError(f"{map_path}: line 1: malformed header") from None
    if n * k != num_vars:
        raise QuboFormatError(
            f"{map_path}: n*k = {n * k} does not match {num_vars} variables"
        )
    entries = [line for line in map_raw[1:] if line.strip()]
    if len(entries) != num_vars:
        raise QuboFormatError(
            f"{map_path}: expected {num_vars} mapping rows, found {len(entries)}"
        )
    for lineno, line in enumerate(entries, start=2):
        parts = line.split()
        if len(parts) != 3:
            raise QuboFormatError(
                f"{map_path}: line {lineno}: expected '<var> <node> <producer>'"
            )
        try:
            var, node, producer = (int(p) for p in parts)
        except ValueError:
            raise QuboFormatError(
                f"{map_path}: line {lineno}: malformed entry {line!r}"
            ) from None
        if var != producer * n + node:
            raise QuboFormatError(
                f"{map_path}: line {lineno}: mapping is not producer-major "
                f"(expected var = producer*{n} + node)"
            )
    return QuboInstance(n=n, k=k, linear=linear, quadratic=quadratic, offset=offset)
