"""Global functionals of a graph: area, enclosed volume, oscillation, rates."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np

from .fiber import FiberGrid
from .geometry import GraphState
from .warping import WarpingFactor


@dataclass(frozen=True)
class Functionals:
    area: float
    volume: float
    osc: float
    umbilicity_deficit: float
    area_rate_prediction: float

    def as_dict(self):
        return asdict(self)


def integrate_on_graph(grid: FiberGrid, state: GraphState, f):
    """``int_Sigma f d omega_g`` using the fiber weights and ``sqrt(det g) = theta^n v``."""
    return math.fsum((grid.weights * state.theta**grid.n * state.v * f).reshape(-1))


def area(grid: FiberGrid, w: WarpingFactor, state: GraphState) -> float:
    return integrate_on_graph(grid, state, 1.0)


def area_from_rho(grid, w, rho, v2):
    t = w.theta(rho)
    return math.fsum((grid.weights * t**grid.n * np.sqrt(v2)).reshape(-1))


def enclosed_volume(grid: FiberGrid, w: WarpingFactor, rho) -> float:
    """Spacetime volume between the slice ``{r = a}`` and the graph.

    Raises ``WarpingDomainError`` if ``rho < a`` anywhere.
    """
    rho = np.asarray(rho, dtype=float)
    return math.fsum((grid.weights * w.power_integral(rho, grid.n)).reshape(-1))


def oscillation(grid: FiberGrid, w: WarpingFactor, rho) -> float:
    """``max Theta(rho) - min Theta(rho)`` over the nodes."""
    Th = w.antiderivative(np.asarray(rho, dtype=float))
    return float(np.max(Th) - np.min(Th))


def umbilicity_deficit(grid, w, state) -> float:
    """``int |A_0|^2 u``; round-off negatives of ``|A_0|^2`` are clipped."""
    return integrate_on_graph(grid, state, np.maximum(state.ringA2, 0.0) * state.u)


def area_rate_prediction(grid: FiberGrid, w: WarpingFactor, state: GraphState):
    """Predicted ``d|Sigma|/dt = int (H^2 u - n theta' H)`` and its lower bound.

    Returns ``(rate, bound)`` with ``bound = n/(n-1) int |A_0|^2 u``; the bound is
    ``None`` when ``n = 1``.
    """
    n = grid.n
    rate = integrate_on_graph(grid, state, state.H**2 * state.u - n * state.dtheta * state.H)
    if n < 2:
        return rate, None
    return rate, n / (n - 1) * integrate_on_graph(grid, state, state.ringA2 * state.u)


def functionals(grid, w, state) -> Functionals:
    return Functionals(
        area=area(grid, w, state),
        volume=enclosed_volume(grid, w, state.rho),
        osc=oscillation(grid, w, state.rho),
        umbilicity_deficit=umbilicity_deficit(grid, w, state),
        area_rate_prediction=area_rate_prediction(grid, w, state)[0],
    )
