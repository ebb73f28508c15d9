"""Time stepping of the locally constrained mean curvature flow.

The surface moves with normal speed ``F = Delta Theta``. In the graphical
gauge (vertical motion of the points ``(rho(xi), xi)``) this is the scalar
quasilinear parabolic equation ``d_t rho = v * Delta Theta``, discretised with
explicit Euler or the explicit midpoint rule.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .errors import SpacelikeViolation, WarpingDomainError
from .fiber import FiberGrid
from .geometry import DEFAULT_EPS_V, GraphState, _ghat_inv, laplace_beltrami
from .integrals import umbilicity_deficit
from .warping import WarpingFactor

log = logging.getLogger(__name__)

TRACE_COLUMNS = ("t", "area", "volume", "osc", "sup_speed", "min_v2", "max_u", "umbilicity")
INTEGRATORS = ("euler", "rk2")


@dataclass
class FlowConfig:
    integrator: str = "rk2"
    cfl: float = 0.2
    t_max: float = 50.0
    tol_osc: float = 1e-6
    tol_speed: float = 1e-8
    eps_v: float = DEFAULT_EPS_V
    record_every: int = 1
    max_halvings: int = 10
    max_steps: int = 10_000_000

    def __post_init__(self):
        if self.integrator not in INTEGRATORS:
            raise ValueError(f"integrator must be one of {INTEGRATORS}")
        if not 0.0 < self.cfl < 1.0:
            raise ValueError("cfl must lie in (0, 1)")
        for name in ("t_max", "tol_osc", "tol_speed", "eps_v"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if self.record_every < 1:
            raise ValueError("record_every must be >= 1")


@dataclass
class FlowTrace:
    """Recorded functionals.

    ``records`` holds full rows (``TRACE_COLUMNS``) every ``record_every``
    steps plus the final state; ``monitor`` holds cheap per-step series
    (``t, area, volume, osc, sup_speed, rho_min, rho_max, max_u``) for every
    accepted step including ``t = 0``.
    """

    records: list = field(default_factory=list)
    monitor: dict = field(default_factory=lambda: {k: [] for k in (
        "t", "area", "volume", "osc", "sup_speed", "rho_min", "rho_max", "max_u")})
    steps: int = 0
    halvings: int = 0

    def column(self, name):
        return np.array([r[name] for r in self.records])

    def series(self, name):
        return np.asarray(self.monitor[name])

    def decay_rate(self):
        """Observed exponential decay rate of ``osc`` over the later half of the run."""
        t, osc = self.series("t"), self.series("osc")
        keep = (t >= 0.5 * t[-1]) & (osc > 1e-13)
        if keep.sum() < 3:
            return None
        slope = np.polyfit(t[keep], np.log(osc[keep]), 1)[0]
        return float(-slope)


@dataclass
class FlowResult:
    trace: FlowTrace
    state: GraphState
    verdict: str  # converged | timeout | aborted
    t: float
    message: str = ""
    checks: dict = field(default_factory=dict)


def speed(grid: FiberGrid, w: WarpingFactor, state: GraphState):
    """Normal speed ``F = Delta Theta`` (divergence form)."""
    return state.lap_theta


def _gii(grid, t, d, v2):
    # diagonal of g^{-1} = theta^-2 (ghat^-1 + (ghat^-1 d)(ghat^-1 d)^T / (theta^2 v^2))
    gh_inv = _ghat_inv(grid)
    q = np.einsum("...ij,...j->...i", gh_inv, d)
    diag = np.diagonal(gh_inv, axis1=-2, axis2=-1)
    return (diag + q**2 / (t**2 * v2)[..., None]) / (t**2)[..., None]


def _cfl(grid, t, d, v2, cfl):
    gii = _gii(grid, t, d, v2)
    v = np.sqrt(v2)
    n = grid.n
    best = np.inf
    for a in grid.active:
        coef = 2 * n * t * gii[..., a] / v
        best = min(best, float(np.min(grid.spacing[a] ** 2 / coef)))
    return cfl * best


def cfl_dt(grid: FiberGrid, w: WarpingFactor, state: GraphState, cfl=0.2):
    """Explicit stability step ``cfl * min h_a^2 v / (2 n theta g^aa)``.

    The linearisation of ``d_t rho = v Delta Theta`` has principal coefficients
    ``theta g^ab / v``, so steep graphs (small ``v``) need smaller steps.
    """
    return _cfl(grid, state.theta, state.drho, state.v2, cfl)


def _rhs(grid, w, rho, eps_v, cfl=None):
    """``(d_t rho, Delta Theta, v^2, cfl step)`` at ``rho``."""
    if grid.kind != "sphere2_axisym":
        t_node = w.theta(rho)  # domain check; face values lie inside the node range
        face = [w._theta(0.5 * (rho + np.roll(rho, -1, axis=a))) for a in grid.active]
    if grid.kind == "torus1":
        lap, v2, dt = _kernels.lap_theta_torus1(rho, t_node, face[0], grid.spacing[0],
                                                 cfl or 0.0)
    elif grid.kind == "torus2":
        lap, v2, dt = _kernels.lap_theta_torus2(rho, t_node, face[0], face[1],
                                                 grid.spacing[0], grid.spacing[1], cfl or 0.0)
    else:
        lap, v2 = laplace_beltrami(grid, w, rho, eps_v=eps_v, return_v2=True)
        dt = _cfl(grid, w.theta(rho), grid.gradient(rho), v2, cfl) if cfl else 0.0
        return np.sqrt(v2) * lap, lap, v2, dt
    if eps_v is not None and not (np.min(v2) > eps_v and np.isfinite(lap).all()):
        laplace_beltrami(grid, w, rho, eps_v=eps_v)  # raises with the worst node
        k = int(np.argmin(v2))
        raise SpacelikeViolation(k, float(v2.reshape(-1)[k]), eps_v)
    return np.sqrt(v2) * lap, lap, v2, dt


def _advance(grid, w, rho, dt, integrator, eps_v, k1=None):
    if k1 is None:
        k1 = _rhs(grid, w, rho, eps_v)[0]
    if integrator == "euler":
        new = rho + dt * k1
    else:
        mid = rho + 0.5 * dt * k1
        new = rho + dt * _rhs(grid, w, mid, eps_v)[0]
    return new


def step(grid: FiberGrid, w: WarpingFactor, state: GraphState, dt, integrator="rk2",
         eps_v=DEFAULT_EPS_V):
    """One explicit step; returns the fully derived new state.

    Raises ``SpacelikeViolation`` if the stage or result leaves the guard.
    """
    if integrator not in INTEGRATORS:
        raise ValueError(f"integrator must be one of {INTEGRATORS}")
    k1 = state.v * state.lap_theta
    new = _advance(grid, w, np.asarray(state.rho), dt, integrator, eps_v, k1)
    return GraphState.from_graph(grid, w, new, eps_v)


def run(grid: FiberGrid, w: WarpingFactor, rho0, config: FlowConfig | None = None,
        callback=None):
    """Evolve ``rho0`` until it is a slice to tolerance or ``t_max`` is reached.

    Convergence requires both ``osc < tol_osc`` and ``sup |Delta Theta| <
    tol_speed``. A step that breaks the spacelike guard is retried with half
    the step size up to ``max_halvings`` times, after which the run aborts and
    returns the last good state.
    """
    cfg = config or FlowConfig()
    state = GraphState.from_graph(grid, w, rho0, cfg.eps_v)
    trace = FlowTrace()
    rho = np.array(state.rho)
    t = 0.0
    k1, lap, v2, dt_cfl = _rhs(grid, w, rho, cfg.eps_v, cfg.cfl)
    h2 = grid.h**2
    rho_lo, rho_hi = float(rho.min()), float(rho.max())

    def monitor(rho, lap, v2):
        th = w.theta(rho)
        v = np.sqrt(v2)
        area = float(np.sum(grid.weights * th**grid.n * v))
        Th = w.antiderivative(rho)
        m = trace.monitor
        m["t"].append(t)
        m["area"].append(area)
        m["volume"].append(float(np.sum(grid.weights * w.power_integral(rho, grid.n))))
        m["osc"].append(float(Th.max() - Th.min()))
        m["sup_speed"].append(float(np.max(np.abs(lap))))
        m["rho_min"].append(float(rho.min()))
        m["rho_max"].append(float(rho.max()))
        m["max_u"].append(float(np.max(th / v)))

    def record(st):
        m = trace.monitor
        trace.records.append({
            "t": t, "area": m["area"][-1], "volume": m["volume"][-1], "osc": m["osc"][-1],
            "sup_speed": m["sup_speed"][-1], "min_v2": float(np.min(st.v2)),
            "max_u": float(np.max(st.u)), "umbilicity": umbilicity_deficit(grid, w, st),
        })

    def converged():
        m = trace.monitor
        return m["osc"][-1] < cfg.tol_osc and m["sup_speed"][-1] < cfg.tol_speed

    monitor(rho, lap, v2)
    record(state)
    verdict, message = "timeout", ""
    if converged():
        verdict = "converged"
    while verdict == "timeout" and t < cfg.t_max and trace.steps < cfg.max_steps:
        dt = min(dt_cfl, cfg.t_max - t)
        for attempt in range(cfg.max_halvings + 1):
            try:
                new = _advance(grid, w, rho, dt, cfg.integrator, cfg.eps_v, k1)
                k1_new, lap_new, v2_new, dt_new = _rhs(grid, w, new, cfg.eps_v, cfg.cfl)
                break
            except (SpacelikeViolation, WarpingDomainError) as exc:
                trace.halvings += 1
                dt *= 0.5
                last_exc = exc
        else:
            verdict, message = "aborted", str(last_exc)
            log.warning("flow aborted at t=%.6g: %s", t, message)
            break
        rho, k1, lap, v2, dt_cfl = new, k1_new, lap_new, v2_new, dt_new
        t += dt
        trace.steps += 1
        monitor(rho, lap, v2)
        done = converged()
        if done or trace.steps % cfg.record_every == 0:
            state = GraphState.from_graph(grid, w, rho, cfg.eps_v)
            record(state)
        if callback is not None:
            callback(t, rho)
        if done:
            verdict = "converged"
    if trace.records[-1]["t"] != t:
        state = GraphState.from_graph(grid, w, rho, cfg.eps_v)
        record(state)
    m = trace.monitor
    slack = 10.0 * h2
    checks = {
        "range_ok": bool(min(m["rho_min"]) >= rho_lo - slack and max(m["rho_max"]) <= rho_hi + slack),
        "u_ceiling": float(np.max(w.theta(np.linspace(rho_lo, rho_hi, 65))) / math.sqrt(cfg.eps_v)),
        "max_u": float(max(m["max_u"])),
        "decay_rate": trace.decay_rate(),
    }
    checks["u_bounded"] = checks["max_u"] <= checks["u_ceiling"]
    return FlowResult(trace=trace, state=state, verdict=verdict, t=t, message=message,
                      checks=checks)
