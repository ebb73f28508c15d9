"""Independent checks of the curvature formulas and geometric identities.

Three layers:

* :class:`CurvatureOracle` differentiates the ambient metric
  ``-dr^2 + theta(r)^2 ghat(xi)`` numerically (fourth-order stencils) and
  contracts the Riemann tensor in an orthonormal frame. Every closed-form
  curvature expression in the package is compared against it.
* :func:`check_spatial_identities` evaluates pointwise and integral identities
  of a single graph, whose residuals must vanish under grid refinement.
* :func:`check_evolution_identities` follows a cloud of marker points moving
  purely normally (``x' = Delta Theta nu``) while the graph is stepped in the
  graphical gauge, and measures the evolution laws of ``Theta``, ``g_ij``,
  ``nu`` and ``u`` along the markers.
"""

from __future__ import annotations

import logging
import math

import numpy as np

from .fiber import FiberGrid
from .flow import _advance
from .geometry import GraphState, laplace_beltrami, ricci_closed_form
from .integrals import integrate_on_graph
from .warping import WarpingFactor, ncc_margin

log = logging.getLogger(__name__)

_C1 = {-2: 1.0, -1: -8.0, 1: 8.0, 2: -1.0}  # / 12 delta
_C2 = {-2: -1.0, -1: 16.0, 0: -30.0, 1: 16.0, 2: -1.0}  # / 12 delta^2


class CurvatureOracle:
    """Finite-difference curvature of the ambient metric in the chart ``(r, xi)``.

    Parameters
    ----------
    w : WarpingFactor
    grid : FiberGrid
        Supplies the fiber metric ``ghat(xi)`` and dimension ``n``.
    delta : float
        Finite-difference step.
    """

    def __init__(self, w: WarpingFactor, grid: FiberGrid, delta=2e-3):
        self.w = w
        self.grid = grid
        self.n = grid.n
        self.delta = float(delta)

    def metric(self, x):
        x = np.asarray(x, dtype=float)
        D = self.n + 1
        G = np.zeros((D, D))
        G[0, 0] = -1.0
        G[1:, 1:] = self.w.theta(x[0]) ** 2 * self.grid.ghat_at(x[1:])[0]
        return G

    def _derivs(self, x):
        x = np.asarray(x, dtype=float)
        D = self.n + 1
        d = self.delta
        E = np.eye(D) * d
        g0 = self.metric(x)
        dg = np.zeros((D, D, D))
        ddg = np.zeros((D, D, D, D))
        for m in range(D):
            vals = {p: self.metric(x + p * E[m]) for p in (-2, -1, 1, 2)}
            dg[m] = sum(c * vals[p] for p, c in _C1.items()) / (12 * d)
            vals[0] = g0
            ddg[m, m] = sum(c * vals[p] for p, c in _C2.items()) / (12 * d * d)
            for k in range(m):
                acc = np.zeros((D, D))
                for p, cp in _C1.items():
                    for q, cq in _C1.items():
                        acc += cp * cq * self.metric(x + p * E[m] + q * E[k])
                ddg[m, k] = ddg[k, m] = acc / (144 * d * d)
        return g0, dg, ddg

    def christoffel(self, x):
        """``Gamma^r_{mn}`` with shape ``(D, D, D)``."""
        g, dg, _ = self._derivs(x)
        gi = np.linalg.inv(g)
        # T[m, n, l] = d_m g_nl + d_n g_ml - d_l g_mn
        T = dg + dg.transpose(1, 0, 2) - dg.transpose(1, 2, 0)
        return 0.5 * np.einsum("rl,mnl->rmn", gi, T)

    def riemann(self, x):
        """``R^r_{smn}`` for ``R(X, Y) = [nabla_X, nabla_Y] - nabla_[X,Y]``."""
        g, dg, ddg = self._derivs(x)
        gi = np.linalg.inv(g)
        T = dg + dg.transpose(1, 0, 2) - dg.transpose(1, 2, 0)
        Gam = 0.5 * np.einsum("rl,mnl->rmn", gi, T)
        dgi = -np.einsum("ra,sab,bl->srl", gi, dg, gi)
        # dT[s, m, n, l] = d_s (d_m g_nl + d_n g_ml - d_l g_mn)
        dT = ddg + ddg.transpose(0, 2, 1, 3) - ddg.transpose(0, 2, 3, 1)
        dGam = 0.5 * (np.einsum("srl,mnl->srmn", dgi, T) + np.einsum("rl,smnl->srmn", gi, dT))
        R = (np.einsum("mrns->rsmn", dGam) - np.einsum("nrms->rsmn", dGam)
             + np.einsum("rml,lns->rsmn", Gam, Gam) - np.einsum("rnl,lms->rsmn", Gam, Gam))
        return R

    def riemann_lower(self, x):
        return np.einsum("ar,rsmn->asmn", self.metric(x), self.riemann(x))

    def ricci_coordinates(self, x):
        return np.einsum("rsrn->sn", self.riemann(x))

    def frame(self, x):
        """Orthonormal frame as columns; the last column is the timelike ``d_r`` direction."""
        g = self.metric(x)
        D = g.shape[0]
        e_t = np.zeros(D)
        e_t[0] = 1.0 / math.sqrt(-g[0, 0])
        cols = []
        for k in range(1, D):
            e = np.zeros(D)
            e[k] = 1.0
            e = e + (e @ g @ e_t) * e_t  # remove timelike part (<e_t, e_t> = -1)
            for c in cols:
                e = e - (e @ g @ c) * c
            cols.append(e / math.sqrt(e @ g @ e))
        return np.column_stack(cols + [e_t])

    def self_consistency(self, x):
        """Relative residuals of the Riemann symmetries and the first Bianchi identity."""
        Rl = self.riemann_lower(x)
        scale = max(1.0, float(np.max(np.abs(Rl))))
        anti = max(np.max(np.abs(Rl + Rl.transpose(1, 0, 2, 3))),
                   np.max(np.abs(Rl + Rl.transpose(0, 1, 3, 2))),
                   np.max(np.abs(Rl - Rl.transpose(2, 3, 0, 1))))
        bianchi = np.max(np.abs(Rl + Rl.transpose(0, 2, 3, 1) + Rl.transpose(0, 3, 1, 2)))
        return float(anti / scale), float(bianchi / scale)


def oracle_ricci(oracle: CurvatureOracle, point, X, Y):
    """``Ric(X, Y)`` by frame contraction of the oracle curvature.

    ``Ric(X, Y) = sum_i <Rm(E_i, X) E_i, Y> - <Rm(E_t, X) E_t, Y>`` with
    ``Rm = -R`` the opposite-sign curvature operator and ``E_t`` timelike.
    """
    R = oracle.riemann(point)
    g = oracle.metric(point)
    F = oracle.frame(point)
    X = np.asarray(X, dtype=float)
    Y = np.asarray(Y, dtype=float)
    total = 0.0
    D = F.shape[1]
    for i in range(D):
        E = F[:, i]
        Rm = -np.einsum("rsmn,m,n,s->r", R, E, X, E)
        sign = -1.0 if i == D - 1 else 1.0
        total += sign * (Rm @ g @ Y)
    return float(total)


def null_vector(oracle, point, e_hat):
    """``K = d_r + e / theta`` for a fiber direction ``e_hat`` (normalised w.r.t. ``ghat``)."""
    point = np.asarray(point, dtype=float)
    gh = oracle.grid.ghat_at(point[1:])[0]
    e = np.asarray(e_hat, dtype=float)
    e = e / math.sqrt(e @ gh @ e)
    K = np.zeros(oracle.n + 1)
    K[0] = 1.0
    K[1:] = e / oracle.w.theta(point[0])
    return K


def oracle_ncc_margin(oracle, point, e_hat):
    """``theta^2 Ric(K, K)`` for the null vector ``K`` of :func:`null_vector`."""
    K = null_vector(oracle, point, e_hat)
    return oracle.w.theta(point[0]) ** 2 * oracle_ricci(oracle, point, K, K)


def graph_vectors(w, grid, point, drho):
    """Ambient components of ``nu``, tangential ``grad Theta`` and ``W`` at a graph point.

    ``point = (r, xi)`` and ``drho`` is the fiber covector ``d rho`` there.
    """
    point = np.asarray(point, dtype=float)
    r = point[0]
    gh = grid.ghat_at(point[1:])[0]
    gh_inv = np.linalg.inv(gh)
    t = w.theta(r)
    q = gh_inv @ np.asarray(drho, dtype=float)
    v2 = 1.0 - (drho @ q) / t**2
    v = math.sqrt(v2)
    u = t / v
    D = grid.n + 1
    nu = np.zeros(D)
    nu[0] = 1.0 / v
    nu[1:] = q / (t**2 * v)
    grad_bar = np.zeros(D)
    grad_bar[0] = -t
    grad = grad_bar + u * nu
    V = nu.copy()
    V[0] = 0.0
    W = V + math.sqrt(max(u**2 / t**2 - 1.0, 0.0)) * grad_bar / t
    return nu, grad, W, u


def closed_form_vs_oracle(w: WarpingFactor, grid: FiberGrid, samples=20, seed=0,
                          delta=2e-3, max_slope=0.6):
    """Compare closed-form curvature values with the oracle at random points.

    Returns a dict of maximum absolute errors: ``ncc_margin``,
    ``ric_gradtheta_nu`` and ``ric_ww``, plus the worst null-ness of ``W`` and
    the oracle self-consistency residuals.
    """
    rng = np.random.default_rng(seed)
    oracle = CurvatureOracle(w, grid, delta)
    span = w.b - w.a
    err = {"ncc_margin": 0.0, "ric_gradtheta_nu": 0.0, "ric_ww": 0.0, "w_null": 0.0,
           "antisymmetry": 0.0, "bianchi": 0.0}
    n = grid.n
    for _ in range(samples):
        r = w.a + span * rng.uniform(0.1, 0.9)
        if grid.kind == "sphere2_axisym":
            xi = np.array([rng.uniform(0.3, math.pi - 0.3), rng.uniform(0, 2 * math.pi)])
        else:
            xi = rng.uniform(0, 1, n) * np.array(grid.side_lengths)
        point = np.concatenate([[r], xi])
        e = rng.normal(size=n)
        mu_or = oracle_ncc_margin(oracle, point, e)
        mu_cf = ncc_margin(w, r, grid.lam, n)
        err["ncc_margin"] = max(err["ncc_margin"], abs(mu_or - mu_cf))
        gh = grid.ghat_at(xi)[0]
        # random spacelike slope with |d rho|_ghat < max_slope * theta
        dr = rng.normal(size=n)
        dr *= max_slope * w.theta(r) * rng.uniform(0.2, 1.0) / math.sqrt(dr @ np.linalg.inv(gh) @ dr)
        nu, grad, W, u = graph_vectors(w, grid, point, dr)
        ric_or = oracle_ricci(oracle, point, grad, nu)
        ww_or = oracle_ricci(oracle, point, W, W)
        grad2 = dr @ np.linalg.inv(gh) @ dr
        ric_cf, ww_cf = ricci_closed_form(w, r, grad2, grid.lam, n)
        err["ric_gradtheta_nu"] = max(err["ric_gradtheta_nu"], abs(ric_or - ric_cf))
        err["ric_ww"] = max(err["ric_ww"], abs(ww_or - ww_cf))
        g = oracle.metric(point)
        err["w_null"] = max(err["w_null"], abs(W @ g @ W))
        anti, bianchi = oracle.self_consistency(point)
        err["antisymmetry"] = max(err["antisymmetry"], anti)
        err["bianchi"] = max(err["bianchi"], bianchi)
    return {k: float(v) for k, v in err.items()}


def einstein_constant(w, grid, samples=5, seed=1, delta=2e-3):
    """Least-squares ``c`` in ``Ric = c g`` from random oracle points and its max residual."""
    rng = np.random.default_rng(seed)
    oracle = CurvatureOracle(w, grid, delta)
    num = den = 0.0
    pairs = []
    for _ in range(samples):
        r = w.a + (w.b - w.a) * rng.uniform(0.1, 0.9)
        xi = (np.array([rng.uniform(0.3, math.pi - 0.3), rng.uniform(0, 2 * math.pi)])
              if grid.kind == "sphere2_axisym" else rng.uniform(0, 1, grid.n) * np.array(grid.side_lengths))
        x = np.concatenate([[r], xi])
        for _ in range(3):
            X = rng.normal(size=grid.n + 1)
            Y = rng.normal(size=grid.n + 1)
            ric = oracle_ricci(oracle, x, X, Y)
            gxy = X @ oracle.metric(x) @ Y
            pairs.append((ric, gxy))
            num += ric * gxy
            den += gxy * gxy
    c = num / den
    resid = max(abs(ric - c * gxy) for ric, gxy in pairs)
    return float(c), float(resid)


# -- spatial identities ---------------------------------------------------------


def check_spatial_identities(grid: FiberGrid, w: WarpingFactor, state: GraphState):
    """Residuals of the pointwise and integral identities of one graph.

    Keys
    ----
    grad_u
        ``sup |d_i u - h_i^k d_k Theta|``.
    laplace_u
        ``sup |Delta u - (g(grad H, grad Theta) + |A|^2 u + Ric(grad Theta, nu) - theta' H)|``.
    sigma2_integral
        ``|int (2 sigma_2 u - (n-1) theta' H) - int Ric(nu, grad Theta)|``.
    grad_theta_norm
        ``sup |g^ij d_i Theta d_j Theta - (u^2 - theta^2)|``.
    trace_vs_div
        ``sup |Delta Theta (divergence form) - (u H - n theta')|``.

    ``d Theta`` is taken by central differences of the node values ``Theta(rho)``,
    independently of the ``theta * d rho`` used inside the geometry.
    """
    n = grid.n
    s = state
    dTh = grid.gradient(s.Theta)
    du = grid.gradient(s.u)
    dH = grid.gradient(s.H)
    h_mixed = np.einsum("...ij,...jk->...ik", s.h, s.ginv)  # h_i^k
    grad_u = np.max(np.abs(du - np.einsum("...ik,...k->...i", h_mixed, dTh)))
    ric, _ = ricci_closed_form(w, s.rho, s.theta**2 * (1.0 - s.v2), grid.lam, n)
    lap_u = laplace_beltrami(grid, w, s.rho, f=s.u, parity=1, eps_v=None)
    gHT = np.einsum("...i,...ij,...j->...", dH, s.ginv, dTh)
    rhs = gHT + s.normA2 * s.u + ric - s.dtheta * s.H
    laplace_u = np.max(np.abs(lap_u - rhs))
    sig = integrate_on_graph(grid, s, 2.0 * s.sigma2() * s.u - (n - 1) * s.dtheta * s.H)
    sigma2_integral = abs(sig - integrate_on_graph(grid, s, ric))
    gt = np.einsum("...i,...ij,...j->...", dTh, s.ginv, dTh)
    grad_theta_norm = np.max(np.abs(gt - (s.u**2 - s.theta**2)))
    trace_vs_div = np.max(np.abs(s.lap_theta - s.lap_theta_trace))
    return {"grad_u": float(grad_u), "laplace_u": float(laplace_u),
            "sigma2_integral": float(sigma2_integral), "grad_theta_norm": float(grad_theta_norm),
            "trace_vs_div": float(trace_vs_div)}


SPATIAL_MIN_ORDER = {"grad_u": 1.8, "laplace_u": 1.0, "sigma2_integral": 1.8,
                     "grad_theta_norm": 1.8, "trace_vs_div": 1.8}


def observed_orders(resolutions, residuals):
    """``log2`` ratios of successive residuals for resolutions doubling each time."""
    out = []
    for k in range(len(resolutions) - 1):
        ratio = resolutions[k + 1] / resolutions[k]
        a, b = residuals[k], residuals[k + 1]
        out.append(float(math.log(a / b) / math.log(ratio)) if a > 0 and b > 0 else math.inf)
    return out


def spatial_refinement(make_grid, w, rho_fn, resolutions=(32, 64, 128), floor=1e-11):
    """Run :func:`check_spatial_identities` over a sequence of resolutions.

    ``make_grid(N)`` builds the grid and ``rho_fn(grid)`` the graph. Returns
    ``{name: {"residuals": [...], "orders": [...], "min_order": p, "ok": bool}}``.
    An identity whose residual is already below ``floor`` counts as satisfied.
    """
    table = {k: [] for k in SPATIAL_MIN_ORDER}
    for N in resolutions:
        grid = make_grid(N)
        st = GraphState.from_graph(grid, w, rho_fn(grid))
        res = check_spatial_identities(grid, w, st)
        for k in table:
            table[k].append(res[k])
    report = {}
    for k, vals in table.items():
        orders = observed_orders(resolutions, vals)
        p = SPATIAL_MIN_ORDER[k]
        ok = all(o >= p or vals[i + 1] <= floor for i, o in enumerate(orders))
        report[k] = {"residuals": vals, "orders": orders, "min_order": p, "ok": bool(ok)}
    return report


# -- evolution identities along normal markers ---------------------------------


def _marker_sites(grid, M):
    """Fixed quasi-random chart points (independent of the resolution)."""
    k = np.arange(1, M + 1)
    if grid.kind == "sphere2_axisym":
        th = math.pi * (0.25 + 0.5 * ((k * 0.6180339887498949) % 1.0))
        return np.stack([th, np.zeros(M)], axis=-1)
    alphas = [0.7548776662466927, 0.5698402909980532][: grid.n]
    return np.stack([((k * a) % 1.0) * L for a, L in zip(alphas, grid.side_lengths)], axis=-1)


class _Fields:
    """Grid fields of one time level, sampled at arbitrary chart points."""

    def __init__(self, grid, w, rho):
        self.grid, self.w = grid, w
        self.rho = rho
        self.lap = laplace_beltrami(grid, w, rho)
        self.eps = 1e-5 * grid.h

    def rho_at(self, xi):
        return self.grid.interpolate(self.rho, xi)

    def drho_at(self, xi):
        cols = []
        for a in range(self.grid.n):
            if a not in self.grid.active:
                cols.append(np.zeros(len(xi)))
                continue
            e = np.zeros(self.grid.n)
            e[a] = self.eps
            cols.append((self.rho_at(xi + e) - self.rho_at(xi - e)) / (2 * self.eps))
        return np.stack(cols, axis=-1)

    def normal_at(self, xi):
        """Ambient components of ``nu`` and ``u`` at graph points over ``xi``."""
        r = self.rho_at(xi)
        d = self.drho_at(xi)
        gh = self.grid.ghat_at(xi)
        q = np.einsum("mij,mj->mi", np.linalg.inv(gh), d)
        t = self.w.theta(r)
        v = np.sqrt(1.0 - np.einsum("mi,mi->m", d, q) / t**2)
        nu = np.concatenate([(1.0 / v)[:, None], q / (t**2 * v)[:, None]], axis=1)
        return nu, t / v

    def velocity(self, xi):
        nu, _ = self.normal_at(xi)
        F = self.grid.interpolate(self.lap, xi)
        return F[:, None] * nu


def _move(levels, X, dt):
    """Midpoint rule for ``x' = Delta Theta nu`` using graph fields at t, t+dt/2."""
    f0, fh = levels
    k1 = f0.velocity(X[:, 1:])
    Xh = X + 0.5 * dt * k1
    k2 = fh.velocity(Xh[:, 1:])
    return X + dt * k2


def check_evolution_identities(grid: FiberGrid, w: WarpingFactor, state: GraphState, dt,
                               markers=64, integrator="rk2", eta=None, delta=2e-3):
    """Residuals of the normal-gauge evolution laws, sampled on marker points.

    The input state is taken as time ``t - dt``; the graph is advanced twice
    and all time derivatives are centred differences at the middle level ``t``.

    Keys: ``theta_law`` (``d/dt Theta = u Delta Theta``), ``theta_graph`` (its
    graphical-gauge form on the grid), ``metric_law`` (``g' = 2 h Delta Theta``),
    ``normal_law`` (``D nu/dt = grad Delta Theta``), ``u_law`` (the support
    function equation), ``off_graph`` (marker distance from the graph) and
    ``dropped`` (markers that left the chart).
    """
    n = grid.n
    D = n + 1
    rho0 = np.array(state.rho)
    adv = lambda r, s: _advance(grid, w, r, s, integrator, None)
    rho_h0 = adv(rho0, 0.5 * dt)
    rho1 = adv(rho0, dt)
    rho_h1 = adv(rho1, 0.5 * dt)
    rho2 = adv(rho1, dt)
    F0, Fh0, F1, Fh1, F2 = (_Fields(grid, w, r) for r in (rho0, rho_h0, rho1, rho_h1, rho2))

    eta = eta or grid.h
    sites = _marker_sites(grid, markers)
    # base point followed by +-eta neighbours in each active direction
    offsets = [np.zeros(n)]
    for a in grid.active:
        for sgn in (1, -1):
            e = np.zeros(n)
            e[a] = sgn * eta
            offsets.append(e)
    xi0 = np.concatenate([sites + o for o in offsets])
    X0 = np.concatenate([F0.rho_at(xi0)[:, None], xi0], axis=1)
    X1 = _move((F0, Fh0), X0, dt)
    X2 = _move((F1, Fh1), X1, dt)
    M = len(sites)
    keep = np.ones(M, dtype=bool)
    if grid.kind == "sphere2_axisym":
        for X in (X1, X2):
            th = X[:, 1].reshape(-1, M)
            keep &= np.all((th > 0) & (th < math.pi), axis=0)
        if not keep.all():
            log.warning("dropping %d markers that left the chart", int((~keep).sum()))
    base = [X[:M][keep] for X in (X0, X1, X2)]
    xi_mid = base[1][:, 1:]
    st1 = GraphState.from_graph(grid, w, rho1, eps_v=None)

    # Theta law at markers
    Th = [w.antiderivative(X[:, 0]) for X in base]
    lap_mid = grid.interpolate(F1.lap, xi_mid)
    u_mid = grid.interpolate(st1.u, xi_mid)
    theta_law = np.max(np.abs((Th[2] - Th[0]) / (2 * dt) - u_mid * lap_mid))

    # graphical gauge: d_t Theta(rho) = u Delta Theta + dTheta(T), T = -Delta Theta nu^fiber
    nu_f = np.einsum("...ij,...j->...i", _ghat_inv_nodes(grid), st1.drho) / (st1.theta**2 * st1.v)[..., None]
    dTh = grid.gradient(st1.Theta)
    pred = st1.u * st1.lap_theta - st1.lap_theta * np.einsum("...i,...i->...", nu_f, dTh)
    theta_graph = np.max(np.abs((w.antiderivative(rho2) - w.antiderivative(rho0)) / (2 * dt) - pred))

    off_graph = max(float(np.max(np.abs(X[:M][keep][:, 0] - F.rho_at(X[:M][keep][:, 1:]))))
                    for X, F in ((X1, F1), (X2, F2)))

    # induced metric in material coordinates
    def material_frame(X):
        cols = []
        for j, a in enumerate(grid.active):
            plus = X[(1 + 2 * j) * M:(2 + 2 * j) * M][keep]
            minus = X[(2 + 2 * j) * M:(3 + 2 * j) * M][keep]
            cols.append((plus - minus) / (2 * eta))
        return np.stack(cols, axis=1)  # (m, k, D)

    def material_metric(X):
        Xa = material_frame(X)
        centre = X[:M][keep]
        G = np.zeros((len(centre), D, D))
        G[:, 0, 0] = -1.0
        G[:, 1:, 1:] = (w.theta(centre[:, 0]) ** 2)[:, None, None] * grid.ghat_at(centre[:, 1:])
        return np.einsum("mka,mab,mlb->mkl", Xa, G, Xa), Xa

    g0, _ = material_metric(X0)
    g2, _ = material_metric(X2)
    _, frame1 = material_metric(X1)
    h_mid = np.stack([np.stack([grid.interpolate(st1.h[..., i, j], xi_mid) for j in range(n)], -1)
                      for i in range(n)], -2)
    Xf = frame1[:, :, 1:]  # fiber components of the material frame
    h_mat = np.einsum("mki,mij,mlj->mkl", Xf, h_mid, Xf)
    metric_law = np.max(np.abs((g2 - g0) / (2 * dt) - 2.0 * h_mat * lap_mid[:, None, None]))

    # normal law: D nu / dt = grad Delta Theta
    nu0, _ = F0.normal_at(base[0][:, 1:])
    nu1, _ = F1.normal_at(xi_mid)
    nu2, _ = F2.normal_at(base[2][:, 1:])
    oracle = CurvatureOracle(w, grid, delta)
    xdot = lap_mid[:, None] * nu1
    conn = np.array([np.einsum("rmn,m,n->r", oracle.christoffel(x), a, b)
                     for x, a, b in zip(base[1], xdot, nu1)])
    Dnu = (nu2 - nu0) / (2 * dt) + conn
    dlap = grid.gradient(F1.lap)
    grad_f = np.einsum("...ij,...j->...i", st1.ginv, dlap)
    grad_f_m = np.stack([grid.interpolate(grad_f[..., i], xi_mid) for i in range(n)], -1)
    drho_m = F1.drho_at(xi_mid)
    target = np.concatenate([np.einsum("mi,mi->m", drho_m, grad_f_m)[:, None], grad_f_m], axis=1)
    normal_law = np.max(np.abs(Dnu - target))

    # support function law (before completing the square)
    _, u0 = F0.normal_at(base[0][:, 1:])
    _, u2 = F2.normal_at(base[2][:, 1:])
    ric, _ = ricci_closed_form(w, rho1, st1.theta**2 * (1.0 - st1.v2), grid.lam, n)
    lap_u = laplace_beltrami(grid, w, rho1, f=st1.u, eps_v=None)
    du = grid.gradient(st1.u)
    g_du_dth = np.einsum("...i,...ij,...j->...", du, st1.ginv, dTh)
    t, dt1, ddt = st1.theta, st1.dtheta, st1.ddtheta
    u = st1.u
    rhs = (u * lap_u - st1.normA2 * u**2 + st1.H * g_du_dth - n * ddt / t * (u**2 - t**2)
           + dt1 * st1.lap_theta - u * ric + dt1 * u * st1.H)
    u_law = np.max(np.abs((u2 - u0) / (2 * dt) - grid.interpolate(rhs, xi_mid)))

    return {"theta_law": float(theta_law), "theta_graph": float(theta_graph),
            "metric_law": float(metric_law), "normal_law": float(normal_law),
            "u_law": float(u_law), "off_graph": float(off_graph),
            "dropped": int((~keep).sum())}


def _ghat_inv_nodes(grid):
    from .geometry import _ghat_inv

    return _ghat_inv(grid)


# -- suite driver ----------------------------------------------------------------

ORACLE_TOL = 1e-6
SYMMETRY_TOL = 1e-8
POSITIVITY_TOL = 1e-10
RESIDUAL_FLOOR = 1e-11


def default_test_graph(w, grid):
    """Smooth, mildly tilted graph around the middle of ``[a, b)`` used when no data is given."""
    R = w.a + 0.5 * (w.b - w.a)
    amp = 0.05 * float(w.theta(R))
    if grid.kind == "sphere2_axisym":
        return R + amp * np.cos(grid.coords[0]) ** 2
    X = [2 * math.pi * c / L for c, L in zip(grid.coords, grid.side_lengths)]
    return R + amp * np.prod([np.sin(x) for x in X], axis=0) + 0.5 * amp * np.cos(X[0])


def oracle_selftest(w, grid, samples=20, seed=0, delta=2e-3):
    """Closed-form vs oracle agreement; returns ``(ok, report)``."""
    rep = closed_form_vs_oracle(w, grid, samples=samples, seed=seed, delta=delta)
    ok = (max(rep["ncc_margin"], rep["ric_gradtheta_nu"], rep["ric_ww"]) <= ORACLE_TOL
          and max(rep["antisymmetry"], rep["bianchi"]) <= SYMMETRY_TOL)
    rep["passed"] = bool(ok)
    return bool(ok), rep


def run_suite(w, make_grid, rho_fn, resolutions=(32, 64, 128), markers=64, delta=2e-3,
              cfl=0.2, integrator="rk2", seed=0):
    """Oracle self-test, spatial refinement and evolution refinement.

    Returns ``(ok, report)`` where ``report["failures"]`` lists every violated
    threshold together with its worst value.
    """
    failures = []
    grid0 = make_grid(resolutions[0])
    ok_or, oracle = oracle_selftest(w, grid0, seed=seed, delta=delta)
    if not ok_or:
        failures.append(f"oracle self-test: {oracle}")
    report = {"oracle": oracle}
    if w.family == "de_sitter" and grid0.kind == "sphere2_axisym":
        c, resid = einstein_constant(w, grid0, delta=delta)
        report["einstein"] = {"constant": c, "residual": resid}
        if resid > ORACLE_TOL:
            failures.append(f"de Sitter Einstein residual {resid:.3e}")

    spatial = spatial_refinement(make_grid, w, rho_fn, resolutions)
    report["spatial"] = spatial
    for name, rec in spatial.items():
        if not rec["ok"]:
            failures.append(f"spatial {name}: orders {rec['orders']} < {rec['min_order']}")

    from .flow import cfl_dt
    from .warping import ncc_holds

    # positivity of Ric(grad Theta, nu) on the test graph for NCC families
    if ncc_holds(w, grid0.lam, grid0.n)[0]:
        st = GraphState.from_graph(grid0, w, rho_fn(grid0))
        ric, _ = ricci_closed_form(w, st.rho, st.theta**2 * (1 - st.v2), grid0.lam, grid0.n)
        k = int(np.argmin(ric))
        report["ric_min"] = float(ric.reshape(-1)[k])
        if report["ric_min"] < -POSITIVITY_TOL:
            failures.append(f"Ric(grad Theta, nu) = {report['ric_min']:.3e} at node {k}")

    evol = []
    for N in resolutions[:2]:
        grid = make_grid(N)
        st = GraphState.from_graph(grid, w, rho_fn(grid))
        dt = cfl_dt(grid, w, st, cfl)
        evol.append(check_evolution_identities(grid, w, st, dt, markers=markers,
                                               integrator=integrator, delta=delta))
    laws = ("theta_law", "theta_graph", "metric_law", "normal_law", "u_law", "off_graph")
    report["evolution"] = {"resolutions": list(resolutions[:2]),
                           **{k: [e[k] for e in evol] for k in laws + ("dropped",)}}
    if len(evol) == 2:
        for k in laws:
            a, b = evol[0][k], evol[1][k]
            if b > RESIDUAL_FLOOR and not b < 0.5 * a:
                failures.append(f"evolution {k}: {a:.3e} -> {b:.3e} does not decay")
    report["failures"] = failures
    report["passed"] = not failures
    return not failures, report
