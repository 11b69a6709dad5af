"""Core data model: risks, networks, event panels, likelihood normalization.

A risk network couples a set of named risks with an undirected simple graph
of interdependencies. Each risk carries a raw expert-assessed likelihood and
a normalized likelihood in the open interval (0, 1); the normalized value is
what drives every transition probability in the model, so endpoints are
forbidden (a likelihood of exactly 0 or 1 makes the transition kernel
degenerate). All types here validate eagerly on construction: a malformed
network is an error, never a warning.

Likelihood normalization
------------------------
Raw likelihoods arrive on an arbitrary positive scale (survey scores, counts,
probabilities) and must be mapped into (0, 1) first. The mapping is explicit
and configurable through :class:`NormalizationScheme`:

* ``MINMAX``, the default for :func:`normalize_likelihoods`: linear map of
  ``[min, max]`` onto ``[eps, 1 - eps]``. Errors out when all raw values are
  equal, since the range collapses.
* ``DIVIDE_BY_MAX``: ``raw / max * (1 - eps)``, preserving ratios.
* ``IDENTITY``: values are declared already normalized; they are validated
  to lie strictly inside (0, 1) and then clamped into ``[eps, 1 - eps]``.

Every scheme is monotone: raising a raw value never lowers its normalized
counterpart.

File formats
------------
Networks are stored as JSON with a ``risks`` list, an ``edges`` list of id
pairs, and an optional ``normalization`` block. A file without that block
declares its likelihoods pre-normalized (IDENTITY). Saved files always
include each risk's explicit ``normalized_likelihood`` so a save/load round
trip is bit-exact even for networks whose likelihoods were modified after
normalization. Event panels (binary risk-by-month activity matrices) are
stored as CSV with one row per risk and one column per month.
"""

from __future__ import annotations

import csv
import json
import math
import re
from dataclasses import dataclass, replace
from enum import Enum
from functools import cached_property
from pathlib import Path
from typing import Iterable, Sequence

import networkx as nx
import numpy as np

from .errors import ValidationError
from .utils import atomic_write_text

DEFAULT_EPSILON = 0.01

_MONTH_LABEL = re.compile(r"\d{4}-(0[1-9]|1[0-2])")


class Category(Enum):
    """The five fixed risk categories used throughout."""

    ECONOMIC = "Economic"
    ENVIRONMENTAL = "Environmental"
    GEOPOLITICAL = "Geopolitical"
    SOCIETAL = "Societal"
    TECHNOLOGICAL = "Technological"


CATEGORIES: tuple[Category, ...] = tuple(Category)


class NormalizationScheme(Enum):
    MINMAX = "minmax"
    DIVIDE_BY_MAX = "divide_by_max"
    IDENTITY = "identity"


def normalize_likelihoods(
    raw: Sequence[float],
    scheme: NormalizationScheme = NormalizationScheme.MINMAX,
    epsilon: float = DEFAULT_EPSILON,
) -> list[float]:
    """Map positive raw likelihoods into the open interval (0, 1).

    ``epsilon`` controls how far the output stays from the endpoints and must
    lie in (0, 0.1). The result is monotone in the input for every scheme.
    """
    values = [float(v) for v in raw]
    if not values:
        raise ValidationError("cannot normalize an empty likelihood list")
    if not (0.0 < epsilon < 0.1):
        raise ValidationError(f"epsilon must lie in (0, 0.1), got {epsilon}")
    for v in values:
        if not (math.isfinite(v) and v > 0.0):
            raise ValidationError(f"raw likelihoods must be positive and finite, got {v}")
    if scheme is NormalizationScheme.MINMAX:
        lo, hi = min(values), max(values)
        if hi == lo:
            raise ValidationError(
                "min-max normalization needs a non-degenerate range, all raw values equal "
                f"{lo}"
            )
        span = (1.0 - 2.0 * epsilon) / (hi - lo)
        return [epsilon + (v - lo) * span for v in values]
    if scheme is NormalizationScheme.DIVIDE_BY_MAX:
        hi = max(values)
        return [v / hi * (1.0 - epsilon) for v in values]
    if scheme is NormalizationScheme.IDENTITY:
        for v in values:
            if not (0.0 < v < 1.0):
                raise ValidationError(
                    f"identity scheme requires likelihoods strictly inside (0, 1), got {v}"
                )
        return [min(max(v, epsilon), 1.0 - epsilon) for v in values]
    raise ValidationError(f"unknown normalization scheme {scheme!r}")


@dataclass(frozen=True)
class Risk:
    """A single risk: dense integer id, display name, category, likelihoods."""

    id: int
    name: str
    category: Category
    raw_likelihood: float
    normalized_likelihood: float

    def __post_init__(self) -> None:
        if not isinstance(self.category, Category):
            raise ValidationError(f"risk {self.id} category must be a Category, got {self.category!r}")
        if not (math.isfinite(self.raw_likelihood) and self.raw_likelihood > 0.0):
            raise ValidationError(
                f"risk {self.id} raw likelihood must be positive and finite, got {self.raw_likelihood}"
            )
        if not (0.0 < self.normalized_likelihood < 1.0):
            raise ValidationError(
                f"risk {self.id} normalized likelihood must lie strictly inside (0, 1), "
                f"got {self.normalized_likelihood}"
            )


@dataclass(frozen=True)
class ModelParams:
    """The three positive scalars that drive every transition probability.

    ``alpha`` scales internal activation, ``beta`` scales external activation
    per active neighbor, and ``gamma`` scales continuation: an active risk
    stays active with p_con and recovers with 1 - p_con.
    """

    alpha: float
    beta: float
    gamma: float

    def __post_init__(self) -> None:
        for name, value in (("alpha", self.alpha), ("beta", self.beta), ("gamma", self.gamma)):
            if not (isinstance(value, (int, float)) and math.isfinite(value) and value > 0.0):
                raise ValidationError(f"{name} must be strictly positive and finite, got {value!r}")

    def as_tuple(self) -> tuple[float, float, float]:
        return (self.alpha, self.beta, self.gamma)


def _canonical_edges(edges: Iterable[Sequence[int]], size: int) -> tuple[tuple[int, int], ...]:
    seen: set[tuple[int, int]] = set()
    for edge in edges:
        pair = tuple(edge)
        if len(pair) != 2:
            raise ValidationError(f"edge must be a pair of risk ids, got {pair!r}")
        i, j = int(pair[0]), int(pair[1])
        if i == j:
            raise ValidationError(f"self-loop on risk {i} is not allowed")
        if not (0 <= i < size and 0 <= j < size):
            raise ValidationError(f"edge ({i}, {j}) references a risk id outside 0..{size - 1}")
        key = (i, j) if i < j else (j, i)
        if key in seen:
            raise ValidationError(f"duplicate edge {key}")
        seen.add(key)
    return tuple(sorted(seen))


@dataclass(frozen=True, eq=False)
class RiskNetwork:
    """Immutable risk network: risks with dense ids plus an undirected simple graph.

    Edges are canonicalized to sorted (low, high) pairs; self-loops and
    duplicates are rejected. Risks must carry ids 0..R-1 (any input order is
    accepted and sorted).
    """

    risks: tuple[Risk, ...]
    edges: tuple[tuple[int, int], ...]
    scheme: NormalizationScheme = NormalizationScheme.IDENTITY
    epsilon: float = DEFAULT_EPSILON

    def __post_init__(self) -> None:
        risks = tuple(sorted(self.risks, key=lambda r: r.id))
        if not risks:
            raise ValidationError("a risk network needs at least one risk")
        if [r.id for r in risks] != list(range(len(risks))):
            raise ValidationError("risk ids must be exactly 0..R-1 with no gaps or duplicates")
        if not isinstance(self.scheme, NormalizationScheme):
            raise ValidationError(f"scheme must be a NormalizationScheme, got {self.scheme!r}")
        if not (0.0 < self.epsilon < 0.1):
            raise ValidationError(f"epsilon must lie in (0, 0.1), got {self.epsilon}")
        object.__setattr__(self, "risks", risks)
        object.__setattr__(self, "edges", _canonical_edges(self.edges, len(risks)))

    @property
    def size(self) -> int:
        return len(self.risks)

    @property
    def edge_count(self) -> int:
        return len(self.edges)

    @cached_property
    def likelihoods(self) -> np.ndarray:
        out = np.array([r.normalized_likelihood for r in self.risks], dtype=np.float64)
        out.setflags(write=False)
        return out

    @cached_property
    def degrees(self) -> np.ndarray:
        out = np.zeros(self.size, dtype=np.int64)
        for i, j in self.edges:
            out[i] += 1
            out[j] += 1
        out.setflags(write=False)
        return out

    @property
    def average_degree(self) -> float:
        return 2.0 * self.edge_count / self.size

    @property
    def edge_probability(self) -> float:
        """Fraction of possible pairs that are connected; 0 for a single risk."""
        if self.size < 2:
            return 0.0
        return 2.0 * self.edge_count / (self.size * (self.size - 1))

    @cached_property
    def adjacency_matrix(self) -> np.ndarray:
        mat = np.zeros((self.size, self.size), dtype=np.int8)
        for i, j in self.edges:
            mat[i, j] = 1
            mat[j, i] = 1
        mat.setflags(write=False)
        return mat

    @cached_property
    def adjacency(self) -> tuple[tuple[int, ...], ...]:
        """Neighbor id tuples, sorted, indexed by risk id."""
        lists: list[list[int]] = [[] for _ in range(self.size)]
        for i, j in self.edges:
            lists[i].append(j)
            lists[j].append(i)
        return tuple(tuple(sorted(ns)) for ns in lists)

    def neighbors(self, risk_id: int) -> tuple[int, ...]:
        if not (0 <= risk_id < self.size):
            raise ValidationError(f"risk id {risk_id} outside 0..{self.size - 1}")
        return self.adjacency[risk_id]

    def to_graph(self) -> nx.Graph:
        graph = nx.Graph()
        graph.add_nodes_from(range(self.size))
        graph.add_edges_from(self.edges)
        return graph

    @cached_property
    def average_clustering(self) -> float:
        return float(nx.average_clustering(self.to_graph()))

    @cached_property
    def diameter(self) -> float:
        """Longest shortest path; ``inf`` when the graph is disconnected."""
        graph = self.to_graph()
        if not nx.is_connected(graph):
            return math.inf
        return float(nx.diameter(graph))

    def with_normalized_likelihood(self, risk_id: int, value: float) -> "RiskNetwork":
        """Copy of the network with one risk's normalized likelihood replaced."""
        if not (0 <= risk_id < self.size):
            raise ValidationError(f"risk id {risk_id} outside 0..{self.size - 1}")
        risks = list(self.risks)
        risks[risk_id] = replace(risks[risk_id], normalized_likelihood=float(value))
        return RiskNetwork(tuple(risks), self.edges, self.scheme, self.epsilon)

    def to_dict(self) -> dict:
        return {
            "risks": [
                {
                    "id": r.id,
                    "name": r.name,
                    "category": r.category.value,
                    "likelihood": r.raw_likelihood,
                    "normalized_likelihood": r.normalized_likelihood,
                }
                for r in self.risks
            ],
            "edges": [[i, j] for i, j in self.edges],
            "normalization": {"scheme": self.scheme.value, "epsilon": self.epsilon},
        }

    @staticmethod
    def from_dict(data: dict) -> "RiskNetwork":
        if not isinstance(data, dict):
            raise ValidationError("network document must be a JSON object")
        entries = data.get("risks")
        if not isinstance(entries, list) or not entries:
            raise ValidationError("network document needs a non-empty 'risks' list")
        block = data.get("normalization")
        if block is None:
            scheme, epsilon = NormalizationScheme.IDENTITY, DEFAULT_EPSILON
        else:
            try:
                scheme = NormalizationScheme(block["scheme"])
            except (KeyError, TypeError, ValueError) as exc:
                raise ValidationError(f"bad normalization block: {block!r}") from exc
            epsilon = float(block.get("epsilon", DEFAULT_EPSILON))

        def field(entry: dict, key: str):
            try:
                return entry[key]
            except (KeyError, TypeError) as exc:
                raise ValidationError(f"risk entry missing field {key!r}: {entry!r}") from exc

        raws = [float(field(e, "likelihood")) for e in entries]
        explicit = ["normalized_likelihood" in e for e in entries]
        if any(explicit) and not all(explicit):
            raise ValidationError(
                "either every risk entry carries 'normalized_likelihood' or none does"
            )
        if all(explicit):
            normalized = [float(e["normalized_likelihood"]) for e in entries]
        else:
            normalized = normalize_likelihoods(raws, scheme, epsilon)
        risks = []
        for entry, raw, norm in zip(entries, raws, normalized):
            name = field(entry, "name")
            try:
                category = Category(field(entry, "category"))
            except ValueError as exc:
                raise ValidationError(f"unknown category {entry.get('category')!r}") from exc
            risks.append(
                Risk(
                    id=int(field(entry, "id")),
                    name=str(name),
                    category=category,
                    raw_likelihood=raw,
                    normalized_likelihood=norm,
                )
            )
        edges = data.get("edges", [])
        if not isinstance(edges, list):
            raise ValidationError("'edges' must be a list of id pairs")
        return RiskNetwork(tuple(risks), tuple((e[0], e[1]) for e in edges), scheme, epsilon)


def load_network(path: str | Path, fmt: str = "json") -> RiskNetwork:
    """Load a risk network from disk.

    A file without a ``normalization`` block is treated as pre-normalized
    (IDENTITY scheme), so out-of-range likelihoods in such a file are load
    errors.
    """
    if fmt != "json":
        raise ValidationError(f"unsupported network format {fmt!r}, only 'json' is implemented")
    text = Path(path).read_text(encoding="utf-8")
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ValidationError(f"{path}: not valid JSON: {exc}") from exc
    return RiskNetwork.from_dict(data)


def save_network(network: RiskNetwork, path: str | Path) -> None:
    """Write a network as JSON, atomically; a reload is bit-exact."""
    atomic_write_text(path, json.dumps(network.to_dict(), indent=2, sort_keys=True) + "\n")


def _month_labels(start_label: str | None, n_steps: int) -> list[str]:
    if start_label is None:
        return [f"t{t}" for t in range(n_steps)]
    if not _MONTH_LABEL.fullmatch(start_label):
        raise ValidationError(f"start label must look like YYYY-MM, got {start_label!r}")
    year, month = int(start_label[:4]), int(start_label[5:7])
    labels = []
    for _ in range(n_steps):
        labels.append(f"{year:04d}-{month:02d}")
        month += 1
        if month == 13:
            year, month = year + 1, 1
    return labels


@dataclass(frozen=True, eq=False)
class EventPanel:
    """Binary activity matrix: row r is risk id r, column t is month t.

    ``states[r, t]`` is 1 when risk r was active during month t. The optional
    ``start_label`` ("YYYY-MM") names column 0; later columns advance by one
    month. Time steps are always months.
    """

    states: np.ndarray
    start_label: str | None = None

    def __post_init__(self) -> None:
        mat = np.asarray(self.states)
        if mat.ndim != 2 or mat.size == 0:
            raise ValidationError(f"panel states must be a non-empty 2-D matrix, got shape {mat.shape}")
        if not np.isin(mat, (0, 1)).all():
            raise ValidationError("panel states must contain only 0 and 1")
        mat = np.ascontiguousarray(mat, dtype=np.int8)
        mat.setflags(write=False)
        object.__setattr__(self, "states", mat)
        if self.start_label is not None and not _MONTH_LABEL.fullmatch(self.start_label):
            raise ValidationError(f"start label must look like YYYY-MM, got {self.start_label!r}")

    @property
    def n_risks(self) -> int:
        return int(self.states.shape[0])

    @property
    def n_steps(self) -> int:
        return int(self.states.shape[1])

    @property
    def labels(self) -> list[str]:
        return _month_labels(self.start_label, self.n_steps)


def save_panel(panel: EventPanel, path: str | Path) -> None:
    """Write a panel as CSV: header of time labels, one row of 0/1 per risk."""
    lines = [",".join(panel.labels)]
    for row in panel.states:
        lines.append(",".join(str(int(v)) for v in row))
    atomic_write_text(path, "\n".join(lines) + "\n")


def load_panel(path: str | Path) -> EventPanel:
    """Load a CSV panel; calendar labels in the header are recovered if present."""
    with open(path, newline="", encoding="utf-8") as handle:
        rows = [row for row in csv.reader(handle) if row]
    if len(rows) < 2:
        raise ValidationError(f"{path}: panel needs a header row and at least one risk row")
    header, body = rows[0], rows[1:]
    width = len(header)
    states = np.empty((len(body), width), dtype=np.int8)
    for r, row in enumerate(body):
        if len(row) != width:
            raise ValidationError(f"{path}: row {r + 1} has {len(row)} cells, expected {width}")
        for t, cell in enumerate(row):
            if cell == "0":
                states[r, t] = 0
            elif cell == "1":
                states[r, t] = 1
            else:
                raise ValidationError(f"{path}: cell ({r}, {t}) must be 0 or 1, got {cell!r}")
    start = header[0] if _MONTH_LABEL.fullmatch(header[0]) else None
    return EventPanel(states, start_label=start)
