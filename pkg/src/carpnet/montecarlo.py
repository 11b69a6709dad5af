"""Seeded ensemble simulation of risk cascades and temporal influence curves.

Runs are embarrassingly parallel and exactly reproducible: run r of an
ensemble draws from the Philox stream keyed (master seed, r), one synchronous
step consumes exactly R uniforms, and per-cell activity is accumulated as
integer counts that are divided by the run count once at the end. Results are
therefore exact multiples of 1/runs and bit-identical however the runs are
scheduled across threads.

Temporal influence compares two ensembles that share every random draw: in
ensemble A the source risk starts active, in ensemble B it does not, and
otherwise both start from the same per-run initial condition and consume the
same uniforms. The difference of activation frequencies is the influence of
the source on each risk over time; sharing draws cancels most sampling noise
and makes each ensemble's marginal law identical to a standalone
:func:`simulate` with the same seed.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import Sequence

import networkx as nx
import numpy as np

from .domain import EventPanel, ModelParams, RiskNetwork
from .dynamics import NetworkState, philox_stream, step
from .errors import ValidationError
from .meanfield import fixed_point
from .utils import ordered_map

DEFAULT_MAX_CELLS = 2**31


@dataclass(frozen=True)
class SimulationConfig:
    """Ensemble size, horizon, seeding, and resource limits for a simulation.

    ``initial_state`` is ``"dormant"``, ``"active"``, or an explicit 0/1
    vector. ``max_cells`` caps ``runs * horizon * n_risks`` so a typo cannot
    exhaust memory. ``record_panels`` keeps every run's full trajectory.
    """

    runs: int = 1000
    horizon: int = 120
    seed: int = 0
    initial_state: str | Sequence[int] = "dormant"
    record_panels: bool = False
    max_cells: int = DEFAULT_MAX_CELLS
    threads: int = 1

    def __post_init__(self) -> None:
        if self.runs < 1:
            raise ValidationError(f"runs must be at least 1, got {self.runs}")
        if self.horizon < 1:
            raise ValidationError(f"horizon must be at least 1, got {self.horizon}")
        if self.max_cells < 1:
            raise ValidationError(f"max_cells must be positive, got {self.max_cells}")
        if self.threads < 1:
            raise ValidationError(f"threads must be at least 1, got {self.threads}")


def _initial_bits(spec: str | Sequence[int], network: RiskNetwork) -> np.ndarray:
    if isinstance(spec, str):
        if spec == "dormant":
            return np.zeros(network.size, dtype=np.int8)
        if spec == "active":
            return np.ones(network.size, dtype=np.int8)
        raise ValidationError(
            f"initial_state must be 'dormant', 'active', or a 0/1 vector, got {spec!r}"
        )
    bits = np.asarray(spec)
    if bits.shape != (network.size,):
        raise ValidationError(
            f"initial state vector must have shape ({network.size},), got {bits.shape}"
        )
    return NetworkState(bits).bits


@dataclass(frozen=True, eq=False)
class FrequencyTrajectory:
    """Per-risk activation frequencies over time from a finished ensemble.

    ``counts[r, t]`` is the number of runs in which risk r was active at step
    t; column 0 is the initial condition. ``frequencies`` divides by the run
    count, so every value is an exact multiple of ``1 / runs``.
    """

    counts: np.ndarray
    runs: int
    panels: tuple[EventPanel, ...] | None = None

    def __post_init__(self) -> None:
        counts = np.ascontiguousarray(self.counts, dtype=np.int64)
        if counts.ndim != 2:
            raise ValidationError(f"counts must be 2-D, got shape {counts.shape}")
        if self.runs < 1:
            raise ValidationError(f"runs must be at least 1, got {self.runs}")
        if counts.min(initial=0) < 0 or counts.max(initial=0) > self.runs:
            raise ValidationError("counts must lie in [0, runs]")
        counts.setflags(write=False)
        object.__setattr__(self, "counts", counts)

    @property
    def n_risks(self) -> int:
        return int(self.counts.shape[0])

    @property
    def horizon(self) -> int:
        return int(self.counts.shape[1])

    @property
    def frequencies(self) -> np.ndarray:
        return self.counts / float(self.runs)


def _run_trajectory(
    network: RiskNetwork,
    params: ModelParams,
    init_bits: np.ndarray,
    horizon: int,
    rng: np.random.Generator,
) -> np.ndarray:
    track = np.empty((network.size, horizon), dtype=np.int8)
    state = NetworkState(init_bits)
    track[:, 0] = state.bits
    for t in range(1, horizon):
        state = step(state, network, params, rng)
        track[:, t] = state.bits
    return track


def simulate(network: RiskNetwork, params: ModelParams, config: SimulationConfig) -> FrequencyTrajectory:
    """Run the ensemble and return per-risk activation frequencies over time.

    Column t holds the state after t synchronous steps (column 0 is the
    initial condition), so a horizon of H covers H - 1 steps. Identical
    inputs give bit-identical outputs for any thread count.
    """
    cells = config.runs * config.horizon * network.size
    if cells > config.max_cells:
        raise ValidationError(
            f"requested {cells} state cells, above the configured cap {config.max_cells}"
        )
    init_bits = _initial_bits(config.initial_state, network)

    def run_block(run_ids: range):
        counts = np.zeros((network.size, config.horizon), dtype=np.int64)
        panels = []
        for r in run_ids:
            track = _run_trajectory(network, params, init_bits, config.horizon, philox_stream(config.seed, r))
            counts += track
            if config.record_panels:
                panels.append(EventPanel(track))
        return counts, panels

    blocks = _partition(config.runs, config.threads)
    results = ordered_map(run_block, blocks, threads=config.threads)
    counts = sum(block_counts for block_counts, _ in results)
    panels: tuple[EventPanel, ...] | None = None
    if config.record_panels:
        panels = tuple(panel for _, block_panels in results for panel in block_panels)
    return FrequencyTrajectory(counts=counts, runs=config.runs, panels=panels)


def _partition(runs: int, threads: int) -> list[range]:
    if threads <= 1:
        return [range(runs)]
    block = -(-runs // threads)
    return [range(lo, min(lo + block, runs)) for lo in range(0, runs, block)]


@dataclass(frozen=True, eq=False)
class TemporalInfluence:
    """Influence of one source risk on the rest of the network over time.

    ``per_risk[j, t]`` is the activation-frequency difference of risk j at
    step t between the source-active and source-dormant ensembles. The
    ``one_hop`` and ``two_hop`` curves average ``per_risk`` over the source's
    distance-1 and distance-2 neighborhoods and are ``None`` when the
    corresponding layer is empty.
    """

    source: int
    per_risk: np.ndarray
    one_hop_ids: tuple[int, ...]
    two_hop_ids: tuple[int, ...]
    one_hop: np.ndarray | None
    two_hop: np.ndarray | None
    runs: int


def _distance_layers(network: RiskNetwork, source: int) -> tuple[tuple[int, ...], tuple[int, ...]]:
    distances = nx.single_source_shortest_path_length(network.to_graph(), source, cutoff=2)
    one = tuple(sorted(n for n, d in distances.items() if d == 1))
    two = tuple(sorted(n for n, d in distances.items() if d == 2))
    return one, two


def temporal_influence(
    network: RiskNetwork,
    params: ModelParams,
    source: int,
    config: SimulationConfig,
    baseline: str = "dormant",
) -> TemporalInfluence:
    """Trace how activating one risk raises activation frequencies elsewhere.

    ``baseline`` picks the shared initial condition of both ensembles:
    ``"dormant"`` starts every other risk dormant, ``"steady"`` draws each
    run's initial state independently from the mean-field steady state (one
    extra uniform per risk, consumed before any stepping). The source risk is
    forced active at step 0 in ensemble A and left at the baseline in
    ensemble B; all subsequent draws are shared, so for a source with no
    neighbors the per-risk influence is exactly zero everywhere else.
    """
    if not (0 <= source < network.size):
        raise ValidationError(f"risk id {source} outside 0..{network.size - 1}")
    if baseline not in ("dormant", "steady"):
        raise ValidationError(f"baseline must be 'dormant' or 'steady', got {baseline!r}")
    cells = config.runs * config.horizon * network.size
    if cells > config.max_cells:
        raise ValidationError(
            f"requested {cells} state cells, above the configured cap {config.max_cells}"
        )
    p_steady = None
    if baseline == "steady":
        solution = fixed_point(network, params)
        if not solution.converged:
            raise ValidationError("steady baseline requires a converged mean-field solve")
        p_steady = solution.p_hat

    def run_block(run_ids: range):
        counts_a = np.zeros((network.size, config.horizon), dtype=np.int64)
        counts_b = np.zeros_like(counts_a)
        for r in run_ids:
            rng_a = philox_stream(config.seed, r)
            rng_b = philox_stream(config.seed, r)
            if p_steady is None:
                base = np.zeros(network.size, dtype=np.int8)
            else:
                base = (rng_a.random(network.size) < p_steady).astype(np.int8)
                rng_b.random(network.size)  # keep the two streams aligned
            bits_a = base.copy()
            bits_a[source] = 1
            counts_a += _run_trajectory(network, params, bits_a, config.horizon, rng_a)
            counts_b += _run_trajectory(network, params, base, config.horizon, rng_b)
        return counts_a, counts_b

    blocks = _partition(config.runs, config.threads)
    results = ordered_map(run_block, blocks, threads=config.threads)
    counts_a = sum(a for a, _ in results)
    counts_b = sum(b for _, b in results)
    per_risk = (counts_a - counts_b) / float(config.runs)
    one_ids, two_ids = _distance_layers(network, source)
    one_curve = per_risk[list(one_ids)].mean(axis=0) if one_ids else None
    two_curve = per_risk[list(two_ids)].mean(axis=0) if two_ids else None
    if not two_ids:
        warnings.warn(
            f"risk {source} has no distance-2 neighborhood, two-hop curve omitted",
            stacklevel=2,
        )
    return TemporalInfluence(
        source=source,
        per_risk=per_risk,
        one_hop_ids=one_ids,
        two_hop_ids=two_ids,
        one_hop=one_curve,
        two_hop=two_curve,
        runs=config.runs,
    )
