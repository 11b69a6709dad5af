"""Knockout influence analysis: how much each risk feeds others' activations.

Disabling a risk (flooring its normalized likelihood at a negligible value)
and recomputing the mean-field steady state isolates that risk's causal
contribution to every other risk's external activation share. The pairwise
matrix aggregates to category level by exact pair counting, excluding
self-pairs inside a category, and the category matrix is additionally
rescaled to [0, 1] by a global min-max transform for comparability.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .domain import CATEGORIES, Category, ModelParams, RiskNetwork
from .errors import ConvergenceError, ValidationError
from .meanfield import DEFAULT_MAX_ITER, DEFAULT_TOL, fixed_point, transition_fractions
from .utils import ordered_map

KNOCKOUT_FLOOR = 1e-12


def knockout(network: RiskNetwork, risk_id: int) -> RiskNetwork:
    """Copy of the network with one risk's normalized likelihood floored.

    A literal zero would make the transition kernel degenerate, so the
    likelihood is set to ``KNOCKOUT_FLOOR``; the residual activation mass is
    orders of magnitude below solver tolerances at month-scale parameters.
    Edges are kept, so the risk still counts neighbors, it just never fires.
    """
    if not (0 <= risk_id < network.size):
        raise ValidationError(f"risk id {risk_id} outside 0..{network.size - 1}")
    return network.with_normalized_likelihood(risk_id, KNOCKOUT_FLOOR)


@dataclass(frozen=True, eq=False)
class InfluenceMatrix:
    """Pairwise knockout influence: entry (i, j) is how much risk i feeds risk j.

    Each entry is the drop in risk j's external-activation share when risk i
    is disabled; the diagonal is zero by definition.
    """

    values: np.ndarray
    tol: float

    def __post_init__(self) -> None:
        values = np.ascontiguousarray(self.values, dtype=np.float64)
        if values.ndim != 2 or values.shape[0] != values.shape[1]:
            raise ValidationError(f"influence matrix must be square, got shape {values.shape}")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    @property
    def size(self) -> int:
        return int(self.values.shape[0])

    def top_influenced(self, risk_id: int, count: int) -> tuple[int, ...]:
        """Ids of the ``count`` risks most influenced by ``risk_id``, best first.

        Ties are broken by lower id so the answer is deterministic.
        """
        if not (0 <= risk_id < self.size):
            raise ValidationError(f"risk id {risk_id} outside 0..{self.size - 1}")
        if not (0 <= count <= self.size - 1):
            raise ValidationError(f"count must lie in [0, {self.size - 1}], got {count}")
        row = self.values[risk_id]
        order = sorted((j for j in range(self.size) if j != risk_id), key=lambda j: (-row[j], j))
        return tuple(order[:count])


def influence_matrix(
    network: RiskNetwork,
    params: ModelParams,
    tol: float = DEFAULT_TOL,
    max_iter: int = DEFAULT_MAX_ITER,
    threads: int = 1,
) -> InfluenceMatrix:
    """Knockout influence of every risk on every other risk.

    Solves one baseline and R knockout steady states; raises
    :class:`ConvergenceError` if any of them fails to converge, since a
    half-converged influence number is worse than none.
    """
    baseline = fixed_point(network, params, tol=tol, max_iter=max_iter)
    if not baseline.converged:
        raise ConvergenceError("baseline steady state did not converge")
    base_ext = transition_fractions(baseline, network, params).a_ext

    def knocked_row(risk_id: int) -> np.ndarray:
        reduced = knockout(network, risk_id)
        steady = fixed_point(reduced, params, tol=tol, max_iter=max_iter)
        if not steady.converged:
            raise ConvergenceError(f"steady state with risk {risk_id} disabled did not converge")
        return transition_fractions(steady, reduced, params).a_ext

    rows = ordered_map(knocked_row, range(network.size), threads=threads)
    values = np.empty((network.size, network.size), dtype=np.float64)
    for i, knocked_ext in enumerate(rows):
        values[i] = base_ext - knocked_ext
        values[i, i] = 0.0
    return InfluenceMatrix(values=values, tol=tol)


@dataclass(frozen=True, eq=False)
class CategoryInfluence:
    """Category-level aggregation of an influence matrix.

    ``raw[a, b]`` is the mean pairwise influence from risks in category a to
    risks in category b, counting only cross-risk pairs; ``normalized``
    rescales ``raw`` to [0, 1] by a global min-max transform. Categories with
    no risks in the network are omitted.
    """

    categories: tuple[Category, ...]
    raw: np.ndarray
    normalized: np.ndarray

    def __post_init__(self) -> None:
        for name in ("raw", "normalized"):
            arr = np.ascontiguousarray(getattr(self, name), dtype=np.float64)
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)


def category_influence(matrix: InfluenceMatrix, network: RiskNetwork) -> CategoryInfluence:
    """Aggregate pairwise influence to the category level.

    Diagonal cells average over ordered cross-risk pairs inside the category,
    so a single-member category has an undefined self-influence, reported as
    0 with a warning. If every cell comes out equal the min-max rescale is
    undefined too; that degenerate case normalizes to all zeros, again with a
    warning.
    """
    if matrix.size != network.size:
        raise ValidationError(
            f"influence matrix covers {matrix.size} risks but the network has {network.size}"
        )
    members: dict[Category, list[int]] = {}
    for risk in network.risks:
        members.setdefault(risk.category, []).append(risk.id)
    present = tuple(cat for cat in CATEGORIES if cat in members)
    count = len(present)
    raw = np.zeros((count, count), dtype=np.float64)
    for a, cat_a in enumerate(present):
        ids_a = members[cat_a]
        for b, cat_b in enumerate(present):
            ids_b = members[cat_b]
            block = matrix.values[np.ix_(ids_a, ids_b)]
            if cat_a is cat_b:
                pairs = len(ids_a) * (len(ids_a) - 1)
                if pairs == 0:
                    warnings.warn(
                        f"category {cat_a.value} has a single risk, self-influence reported as 0",
                        stacklevel=2,
                    )
                    raw[a, b] = 0.0
                else:
                    raw[a, b] = (block.sum() - np.trace(block)) / pairs
            else:
                raw[a, b] = block.mean()
    lo, hi = float(raw.min()), float(raw.max())
    if hi == lo:
        warnings.warn("constant category influence, normalized matrix set to all zeros", stacklevel=2)
        normalized = np.zeros_like(raw)
    else:
        normalized = (raw - lo) / (hi - lo)
    return CategoryInfluence(categories=present, raw=raw, normalized=normalized)
