"""Mean-field steady state of a risk network and its transition decomposition.

Replacing random neighbor states by their expected activation probabilities
turns the synchronous stochastic kernel into a deterministic self-consistency
problem: each risk's stationary activation probability p_i must satisfy

    p_i = P01_i(p) / (P01_i(p) + p_rec_i)

where ``P01_i(p) = 1 - (1 - L_i)**(alpha + beta * m_i)`` and ``m_i`` is the
sum of the neighbors' probabilities (a real-valued expected active-neighbor
count, unlike the integer counts of the stochastic kernel). The fixed point
is solved by damped successive approximation with synchronous sweeps, so the
iteration is deterministic and independent of risk ordering.

Transition decomposition
------------------------
At a steady state the expected per-month rates of the three transition
classes are

    A_int = (1 - p) * p_int                        internal activation
    A_ext = (1 - p) * (1 - (1 - p_ext)**m)         external activation
    A_rec = p * p_rec                              recovery

The internal and external classes overlap on the (tiny) event that both
mechanisms fire in the same month, which this decomposition ignores; the
normalized fractions a_* = A_* / (A_int + A_ext + A_rec) therefore sum to 1
by construction, and recovery accounts for half of all transitions up to
that overlap term. For small exponents the external-to-internal ratio
``A_ext / A_int`` is approximately ``beta * m / alpha``, which is how the
relative strength of contagion versus spontaneous activation is usually
quoted.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .domain import ModelParams, RiskNetwork
from .dynamics import activation_prob, survival_prob
from .errors import ValidationError

DEFAULT_TOL = 1e-10
DEFAULT_MAX_ITER = 100_000


class InitMode(Enum):
    """Starting vector for the fixed-point iteration."""

    ZEROS = "zeros"
    LIKELIHOODS = "likelihoods"
    ONES = "ones"


@dataclass(frozen=True, eq=False)
class SteadyState:
    """Result of the fixed-point solve."""

    p_hat: np.ndarray
    iterations: int
    residual: float
    converged: bool

    def __post_init__(self) -> None:
        p = np.ascontiguousarray(self.p_hat, dtype=np.float64)
        p.setflags(write=False)
        object.__setattr__(self, "p_hat", p)


def _p01(p: np.ndarray, network: RiskNetwork, params: ModelParams) -> np.ndarray:
    m = network.adjacency_matrix @ p
    return activation_prob(network.likelihoods, params.alpha + params.beta * m)


def fixed_point(
    network: RiskNetwork,
    params: ModelParams,
    tol: float = DEFAULT_TOL,
    max_iter: int = DEFAULT_MAX_ITER,
    init: InitMode = InitMode.LIKELIHOODS,
    damping: float = 1.0,
) -> SteadyState:
    """Solve the self-consistency equations for every risk at once.

    Iterates ``p <- p + damping * (F(p) - p)`` until the update is at most
    ``tol`` in the max norm. The undamped map is a monotone contraction for
    realistic month-scale parameters, so ``damping=1.0`` is the default;
    smaller values trade speed for robustness. Returns ``converged=False``
    instead of raising when ``max_iter`` is exhausted.
    """
    if not (tol > 0.0):
        raise ValidationError(f"tol must be positive, got {tol}")
    if max_iter < 1:
        raise ValidationError(f"max_iter must be at least 1, got {max_iter}")
    if not (0.0 < damping <= 1.0):
        raise ValidationError(f"damping must lie in (0, 1], got {damping}")
    if not isinstance(init, InitMode):
        raise ValidationError(f"init must be an InitMode, got {init!r}")

    if init is InitMode.ZEROS:
        p = np.zeros(network.size)
    elif init is InitMode.ONES:
        p = np.ones(network.size)
    else:
        p = network.likelihoods.copy()

    p_rec = survival_prob(network.likelihoods, params.gamma)
    residual = math.inf
    for iteration in range(1, max_iter + 1):
        p01 = _p01(p, network, params)
        target = p01 / (p01 + p_rec)
        new = p + damping * (target - p)
        residual = float(np.max(np.abs(new - p)))
        p = new
        if residual <= tol:
            return SteadyState(p, iteration, residual, True)
    return SteadyState(p, max_iter, residual, False)


def stationarity_residual(p: np.ndarray, network: RiskNetwork, params: ModelParams) -> float:
    """Max one-step drift of the mean-field map at probability vector ``p``.

    Computes ``max_i |(1 - p_i) * P01_i(p) + p_i * p_con_i - p_i|``, the gap
    between ``p`` and its image under one expected synchronous update. Zero
    exactly at a fixed point.
    """
    p = np.asarray(p, dtype=np.float64)
    if p.shape != (network.size,):
        raise ValidationError(f"probability vector must have shape ({network.size},), got {p.shape}")
    if not ((p >= 0.0) & (p <= 1.0)).all():
        raise ValidationError("probabilities must lie in [0, 1]")
    p01 = _p01(p, network, params)
    p_con = activation_prob(network.likelihoods, params.gamma)
    return float(np.max(np.abs((1.0 - p) * p01 + p * p_con - p)))


@dataclass(frozen=True, eq=False)
class TransitionFractions:
    """Per-risk decomposition of steady-state transition activity.

    ``raw_*`` are expected per-month transition rates; ``a_*`` are the same
    rates normalized to sum to 1 for each risk.
    """

    a_int: np.ndarray
    a_ext: np.ndarray
    a_rec: np.ndarray
    raw_int: np.ndarray
    raw_ext: np.ndarray
    raw_rec: np.ndarray

    def __post_init__(self) -> None:
        for name in ("a_int", "a_ext", "a_rec", "raw_int", "raw_ext", "raw_rec"):
            arr = np.ascontiguousarray(getattr(self, name), dtype=np.float64)
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)


def transition_fractions(steady: SteadyState, network: RiskNetwork, params: ModelParams) -> TransitionFractions:
    """Split each risk's steady-state transition rate into its three classes."""
    if not steady.converged:
        raise ValidationError("transition fractions require a converged steady state")
    p = steady.p_hat
    if p.shape != (network.size,):
        raise ValidationError(f"steady state has {p.shape[0]} risks but the network has {network.size}")
    likelihoods = network.likelihoods
    m = network.adjacency_matrix @ p
    raw_int = (1.0 - p) * activation_prob(likelihoods, params.alpha)
    raw_ext = (1.0 - p) * activation_prob(likelihoods, params.beta * m)
    raw_rec = p * survival_prob(likelihoods, params.gamma)
    total = raw_int + raw_ext + raw_rec
    if not (total > 0.0).all():
        raise ValidationError("degenerate steady state: some risk has zero total transition rate")
    return TransitionFractions(
        a_int=raw_int / total,
        a_ext=raw_ext / total,
        a_rec=raw_rec / total,
        raw_int=raw_int,
        raw_ext=raw_ext,
        raw_rec=raw_rec,
    )


def ext_int_ratio(
    steady: SteadyState,
    network: RiskNetwork,
    params: ModelParams,
    risk_id: int,
) -> tuple[float, float]:
    """External-to-internal activation ratio of one risk, exact and linearized.

    Returns ``(exact, taylor)`` where ``exact = A_ext / A_int`` at the steady
    state and ``taylor = beta * m / alpha`` is its small-exponent expansion
    (both numerator and denominator expanded to first order). The pair lets
    callers check whether the linearized reading is trustworthy for their
    parameters.
    """
    if not (0 <= risk_id < network.size):
        raise ValidationError(f"risk id {risk_id} outside 0..{network.size - 1}")
    if not steady.converged:
        raise ValidationError("ratio requires a converged steady state")
    likelihood = network.risks[risk_id].normalized_likelihood
    m = float(network.adjacency_matrix[risk_id] @ steady.p_hat)
    denom = float(activation_prob(likelihood, params.alpha))
    if denom <= 0.0:
        raise ValidationError(
            f"internal activation probability underflowed to zero for risk {risk_id}"
        )
    exact = float(activation_prob(likelihood, params.beta * m)) / denom
    taylor = params.beta * m / params.alpha
    return exact, taylor
