"""Shared builders and independent oracles for the test suite.

The exact-chain oracle deliberately uses plain ``**`` arithmetic and its own
state enumeration rather than any package helper, so it stays an independent
route to the same quantities the mean-field code approximates.
"""

from __future__ import annotations

import numpy as np

from carpnet import CATEGORIES, ModelParams, Risk, RiskNetwork

# Two realistic month-scale parameter sets: a slow regime (rare activations,
# long active spells) and a faster one (more contagion, quicker recovery).
PARAMS_SLOW = ModelParams(alpha=3.04e-3, beta=1.17e-3, gamma=3.56)
PARAMS_FAST = ModelParams(alpha=5.28e-3, beta=3.03e-3, gamma=2.50)


def make_network(
    likelihoods,
    edges=(),
    categories=None,
) -> RiskNetwork:
    """Quick network builder: explicit normalized likelihoods and edges."""
    n = len(likelihoods)
    if categories is None:
        categories = [CATEGORIES[i % len(CATEGORIES)] for i in range(n)]
    risks = tuple(
        Risk(
            id=i,
            name=f"risk-{i}",
            category=categories[i],
            raw_likelihood=float(likelihoods[i]),
            normalized_likelihood=float(likelihoods[i]),
        )
        for i in range(n)
    )
    return RiskNetwork(risks, tuple(edges))


def random_graph_edges(rng: np.random.Generator, nodes: int, edges: int):
    """Uniform simple graph with an exact edge count, as an edge tuple."""
    max_edges = nodes * (nodes - 1) // 2
    upper_i, upper_j = np.triu_indices(nodes, k=1)
    chosen = rng.choice(max_edges, size=edges, replace=False)
    return tuple((int(upper_i[e]), int(upper_j[e])) for e in sorted(chosen))


def random_network(
    rng: np.random.Generator,
    nodes: int,
    edges: int,
    likelihood_low: float,
    likelihood_high: float,
) -> RiskNetwork:
    likelihoods = rng.uniform(likelihood_low, likelihood_high, size=nodes)
    return make_network(likelihoods, random_graph_edges(rng, nodes, edges))


def exact_stationary_marginals(
    network: RiskNetwork,
    params: ModelParams,
    tol: float = 1e-13,
    max_iter: int = 200_000,
) -> np.ndarray:
    """Stationary per-risk activation probabilities of the exact 2^R chain.

    Enumerates every joint state, builds the exact synchronous transition
    matrix with plain power arithmetic, and runs power iteration until the
    distribution stops moving in L1. Only feasible for R <= ~12.
    """
    size = network.size
    n_states = 1 << size
    states = np.array(
        [[(s >> i) & 1 for i in range(size)] for s in range(n_states)], dtype=np.float64
    )
    likelihoods = np.array([r.normalized_likelihood for r in network.risks])
    adjacency = np.zeros((size, size))
    for i, j in network.edges:
        adjacency[i, j] = 1.0
        adjacency[j, i] = 1.0
    active_neighbors = states @ adjacency  # (n_states, size)
    p_act = 1.0 - (1.0 - likelihoods) ** (params.alpha + params.beta * active_neighbors)
    p_con = 1.0 - (1.0 - likelihoods) ** params.gamma
    next_active = np.where(states == 1, p_con, p_act)  # (n_states, size)

    transition = np.ones((n_states, n_states))
    for i in range(size):
        target_bit = states[:, i][None, :]
        q = next_active[:, i][:, None]
        transition *= np.where(target_bit == 1.0, q, 1.0 - q)

    dist = np.full(n_states, 1.0 / n_states)
    for _ in range(max_iter):
        updated = dist @ transition
        if np.abs(updated - dist).sum() <= tol:
            dist = updated
            break
        dist = updated
    else:
        raise AssertionError("exact chain power iteration did not settle")
    return dist @ states


def count_based_log_likelihood(panel, network, params: ModelParams) -> float:
    """Transition-by-transition panel log-likelihood with plain arithmetic.

    Slow reference route used to check the vectorized implementation.
    """
    states = panel.states
    likelihoods = np.array([r.normalized_likelihood for r in network.risks])
    adjacency = np.zeros((network.size, network.size))
    for i, j in network.edges:
        adjacency[i, j] = 1.0
        adjacency[j, i] = 1.0
    total = 0.0
    for t in range(states.shape[1] - 1):
        active = states[:, t].astype(float)
        counts = adjacency @ active
        for i in range(network.size):
            survival = 1.0 - likelihoods[i]
            if states[i, t] == 0:
                stay_prob = survival ** (params.alpha + params.beta * counts[i])
                total += np.log(1.0 - stay_prob) if states[i, t + 1] == 1 else np.log(stay_prob)
            else:
                con_prob = 1.0 - survival ** params.gamma
                total += np.log(con_prob) if states[i, t + 1] == 1 else np.log(1.0 - con_prob)
    return float(total)
