"""Orthogonal-polynomial chain mapping of a bosonic bath.

The bath measure dmu = J(omega) d omega is discretized with composite
Gauss-Legendre quadrature. A Lanczos tridiagonalization of the node matrix
with start vector sqrt(weights) yields the three-term recurrence of the monic
orthogonal polynomials, whose coefficients are the chain parameters:

    w_n = alpha_n,    t_{n+1,n} = sqrt(beta_{n+1}),    t_0 = sqrt(beta_0)
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from tedopa_sim.errors import InvalidInputError, NumericalError
from tedopa_sim.units import CM1_PS_TO_RAD

DEFAULT_PANELS = 400
DEFAULT_NODES_PER_PANEL = 16
REFINE_RTOL = 1e-8
MAX_REFINEMENTS = 4


@dataclass(frozen=True)
class DiscretizedMeasure:
    nodes: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        nodes = np.asarray(self.nodes, dtype=float)
        weights = np.asarray(self.weights, dtype=float)
        if nodes.ndim != 1 or nodes.shape != weights.shape:
            raise InvalidInputError("nodes and weights must be 1-D arrays of equal length")
        if nodes.size > 1 and np.any(np.diff(nodes) <= 0):
            raise InvalidInputError("nodes must be strictly increasing")
        if np.any(weights < 0):
            raise InvalidInputError("weights must be non-negative")
        object.__setattr__(self, "nodes", nodes)
        object.__setattr__(self, "weights", weights)

    @property
    def total_weight(self):
        return float(np.sum(self.weights))

    def scaled(self, factor):
        return DiscretizedMeasure(self.nodes, self.weights * factor)


@dataclass(frozen=True)
class ChainCoefficients:
    """System-chain coupling ``t0``, on-site energies ``w`` and hoppings ``t``.

    ``t[n]`` couples oscillators n and n+1, so ``len(t) == len(w) - 1``.
    """

    t0: float
    w: np.ndarray
    t: np.ndarray

    def __post_init__(self):
        w = np.asarray(self.w, dtype=float)
        t = np.asarray(self.t, dtype=float)
        if w.size < 1 or t.size != w.size - 1:
            raise InvalidInputError("need len(t) == len(w) - 1 >= 0")
        if self.t0 < 0 or np.any(t <= 0):
            raise InvalidInputError("couplings must be positive")
        object.__setattr__(self, "w", w)
        object.__setattr__(self, "t", t)

    @property
    def length(self):
        return int(self.w.size)

    def truncated(self, length):
        if not 1 <= length <= self.length:
            raise InvalidInputError(f"cannot truncate a chain of {self.length} to {length}")
        return ChainCoefficients(self.t0, self.w[:length], self.t[: length - 1])


def _panel_edges(a, b, panels):
    edges = np.linspace(a, b, panels + 1)
    if a < 0.0 < b and not np.any(edges == 0.0):
        # keep the kink of |omega| at a panel boundary
        edges = np.sort(np.append(edges, 0.0))
    return edges


def discretize_measure(sd, panels=DEFAULT_PANELS, nodes_per_panel=DEFAULT_NODES_PER_PANEL):
    """Composite Gauss-Legendre nodes on the support of ``sd``, weighted by J."""
    if not (math.isfinite(sd.omega_min) and math.isfinite(sd.omega_max)):
        raise InvalidInputError("discretization needs finite hard cutoffs")
    if panels < 1 or nodes_per_panel < 2:
        raise InvalidInputError("need panels >= 1 and nodes_per_panel >= 2")
    x, wq = np.polynomial.legendre.leggauss(nodes_per_panel)
    edges = _panel_edges(sd.omega_min, sd.omega_max, panels)
    half = 0.5 * np.diff(edges)
    mid = 0.5 * (edges[:-1] + edges[1:])
    nodes = (mid[:, None] + half[:, None] * x[None, :]).ravel()
    weights = (half[:, None] * wq[None, :]).ravel() * sd(nodes)
    if not np.any(weights > 0):
        raise InvalidInputError("spectral density vanishes on its whole support")
    return DiscretizedMeasure(nodes, weights)


def stieltjes_recurrence(measure, n_max):
    """Monic recurrence coefficients (alpha_k, beta_k), k < n_max.

    Lanczos on diag(nodes) with twice-applied full Gram-Schmidt
    reorthogonalization; ``beta[0]`` is the total weight.
    """
    n_nodes = measure.nodes.size
    if n_max < 1:
        raise InvalidInputError("n_max must be at least 1")
    if n_max > n_nodes // 4:
        raise InvalidInputError(
            f"n_max={n_max} exceeds a quarter of the {n_nodes} quadrature nodes"
        )
    total = measure.total_weight
    if not total > 0:
        raise InvalidInputError("measure has zero total weight")

    x = measure.nodes
    q = np.sqrt(measure.weights / total)
    basis = np.empty((n_max, n_nodes))
    alpha = np.empty(n_max)
    beta = np.empty(n_max)
    beta[0] = total
    prev_norm = 0.0
    prev = np.zeros(n_nodes)
    for k in range(n_max):
        basis[k] = q
        r = x * q
        alpha[k] = q @ r
        r -= alpha[k] * q + prev_norm * prev
        active = basis[: k + 1]
        for _ in range(2):
            r -= active.T @ (active @ r)
        if k + 1 == n_max:
            break
        norm2 = r @ r
        if not norm2 > 0:
            raise NumericalError(
                f"recurrence lost positivity at beta[{k + 1}] = {norm2:.3e}", residual=norm2
            )
        beta[k + 1] = norm2
        prev_norm = math.sqrt(norm2)
        prev = q
        q = r / prev_norm
    return alpha, beta


def _close(old, new, scale):
    return np.all(np.abs(new - old) <= REFINE_RTOL * np.maximum(np.abs(new), scale))


def recurrence_coefficients(
    sd, n_max, panels=DEFAULT_PANELS, nodes_per_panel=DEFAULT_NODES_PER_PANEL
):
    """Recurrence coefficients of J d omega, refining the grid until stable.

    The panel count doubles until successive coefficient sets agree to
    ``REFINE_RTOL`` (relative to the band width for near-zero entries).
    """
    band = sd.omega_max - sd.omega_min
    panels = max(panels, -(-4 * n_max // nodes_per_panel))
    alpha, beta = stieltjes_recurrence(discretize_measure(sd, panels, nodes_per_panel), n_max)
    for _ in range(MAX_REFINEMENTS):
        panels *= 2
        a2, b2 = stieltjes_recurrence(discretize_measure(sd, panels, nodes_per_panel), n_max)
        stable = _close(alpha, a2, band) and _close(np.sqrt(beta[1:]), np.sqrt(b2[1:]), band)
        stable = stable and _close(beta[:1], b2[:1], 0.0)
        alpha, beta = a2, b2
        if stable:
            return alpha, beta
    raise NumericalError(
        f"recurrence coefficients not stable to {REFINE_RTOL} after "
        f"{MAX_REFINEMENTS} refinements ({panels} panels)"
    )


def chain_coefficients(sd, l, pi_normalization=True, **discretization):
    """Chain parameters for a chain of ``l`` oscillators.

    With ``pi_normalization`` the coupling uses the measure (J/pi) d omega,
    which only rescales ``t0`` by 1/sqrt(pi).
    """
    if l < 1:
        raise InvalidInputError("chain length must be at least 1")
    alpha, beta = recurrence_coefficients(sd, l, **discretization)
    norm = beta[0] / math.pi if pi_normalization else beta[0]
    return ChainCoefficients(t0=math.sqrt(norm), w=alpha, t=np.sqrt(beta[1:]))


def asymptotic_limits(omega_min, omega_max):
    """Limits of (w_n, t_{n+1,n}) for large n with hard cutoffs."""
    return 0.5 * (omega_max + omega_min), 0.25 * (omega_max - omega_min)


def chain_length_heuristic(t_infinity, t_max):
    """Oscillators needed to keep reflections away up to ``t_max`` ps.

    ``l = ceil(2 t_inf T)`` with ``t_infinity`` in cm^-1 converted to rad/ps.
    """
    if not t_infinity > 0:
        raise InvalidInputError("t_infinity must be positive")
    if t_max < 0:
        raise InvalidInputError("simulation horizon must be non-negative")
    return math.ceil(2.0 * t_infinity * CM1_PS_TO_RAD * t_max)
