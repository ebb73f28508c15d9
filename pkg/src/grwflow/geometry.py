"""Induced geometry of a spacelike graph ``r = rho(xi)`` over the fiber grid.

Conventions: the normal ``nu`` is future directed with ``<nu, nu> = -1`` and the
second fundamental form is taken with respect to ``-nu``, so coordinate slices
of an expanding spacetime have positive mean curvature ``n theta'/theta``.

Two discretisations of the Laplace-Beltrami operator are used:

* *divergence form* on cell faces (``laplace_beltrami``). Its weighted
  integral ``sum_k w_k theta^n v f_k`` telescopes to zero, which is what makes
  the flow conserve the enclosed volume exactly in the semi-discrete sense.
* *trace form* ``u H - n theta'`` from node-centred differences, kept for
  diagnostics only.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import SpacelikeViolation
from .fiber import FiberGrid
from .warping import WarpingFactor, ncc_margin

DEFAULT_EPS_V = 1e-4


def _det_inv(m):
    """Determinant and inverse of stacked 1x1 / 2x2 symmetric matrices."""
    n = m.shape[-1]
    if n == 1:
        det = m[..., 0, 0]
        return det, (1.0 / det)[..., None, None]
    det = m[..., 0, 0] * m[..., 1, 1] - m[..., 0, 1] * m[..., 1, 0]
    inv = np.empty_like(m)
    inv[..., 0, 0] = m[..., 1, 1] / det
    inv[..., 1, 1] = m[..., 0, 0] / det
    inv[..., 0, 1] = -m[..., 0, 1] / det
    inv[..., 1, 0] = -m[..., 1, 0] / det
    return det, inv


def _adjugate(m):
    n = m.shape[-1]
    if n == 1:
        return np.ones_like(m)
    adj = np.empty_like(m)
    adj[..., 0, 0] = m[..., 1, 1]
    adj[..., 1, 1] = m[..., 0, 0]
    adj[..., 0, 1] = -m[..., 0, 1]
    adj[..., 1, 0] = -m[..., 1, 0]
    return adj


def _guard(v2, eps_v):
    if eps_v is not None:
        k = int(np.argmin(v2))
        worst = v2.reshape(-1)[k]
        if not worst > eps_v:
            raise SpacelikeViolation(k, worst, eps_v)


def _ghat_inv(grid):
    if grid.kind == "sphere2_axisym":
        return _det_inv(grid.ghat)[1]
    return grid.ghat


@dataclass(frozen=True, eq=False)
class GraphState:
    """All node fields derived from a graph function ``rho``.

    Tensor fields carry two trailing axes of size ``n``; ``gamma[..., k, i, j]``
    is ``Gamma^k_ij``.
    """

    rho: np.ndarray
    theta: np.ndarray
    dtheta: np.ndarray
    ddtheta: np.ndarray
    Theta: np.ndarray
    drho: np.ndarray
    g: np.ndarray
    ginv: np.ndarray
    detg: np.ndarray
    v2: np.ndarray
    v: np.ndarray
    u: np.ndarray
    gamma: np.ndarray
    hess_rho: np.ndarray
    h: np.ndarray
    H: np.ndarray
    normA2: np.ndarray
    ringA2: np.ndarray
    lap_theta: np.ndarray
    lap_theta_trace: np.ndarray
    detg_residual: float

    @property
    def n(self):
        return self.g.shape[-1]

    @classmethod
    def from_graph(cls, grid: FiberGrid, w: WarpingFactor, rho, eps_v=DEFAULT_EPS_V):
        rho = np.array(rho, dtype=float).reshape(grid.shape)
        met = induced_metric(grid, w, rho, eps_v)
        sff = _second_fundamental_form(grid, w, rho, met)
        lap_div = laplace_beltrami(grid, w, rho, eps_v=eps_v)
        n = grid.n
        trace = met["u"] * sff["H"] - n * met["dtheta"]
        rho.setflags(write=False)
        return cls(rho=rho, lap_theta=lap_div, lap_theta_trace=trace, **met, **sff)

    # shape operator eigenvalues, ascending
    def principal_curvatures(self):
        n = self.n
        if n == 1:
            return self.H[..., None]
        S = np.einsum("...ik,...kj->...ij", self.ginv, self.h)
        tr = S[..., 0, 0] + S[..., 1, 1]
        # (k1 - k2)^2 written without cancellation at umbilic points
        gap2 = (S[..., 0, 0] - S[..., 1, 1]) ** 2 + 4.0 * S[..., 0, 1] * S[..., 1, 0]
        disc = np.sqrt(np.maximum(gap2, 0.0))
        return np.stack([(tr - disc) / 2.0, (tr + disc) / 2.0], axis=-1)

    def sigma2(self):
        return 0.5 * (self.H**2 - self.normA2)


def induced_metric(grid: FiberGrid, w: WarpingFactor, rho, eps_v=DEFAULT_EPS_V):
    """Induced metric data ``g = -d rho d rho + theta^2 ghat`` and ``v``, ``u``.

    Returns a dict with ``g, ginv, detg, v, u`` plus the warping values, ``drho``,
    ``v2`` and the relative residual of ``det g = theta^(2n) det(ghat) v^2``.

    Raises
    ------
    SpacelikeViolation
        If ``v**2 <= eps_v`` at some node.
    """
    rho = np.asarray(rho, dtype=float).reshape(grid.shape)
    n = grid.n
    t, dt, ddt, Th = w.eval(rho)
    d = grid.gradient(rho)
    ghat = grid.ghat
    gh_inv = _ghat_inv(grid)
    grad2 = np.einsum("...i,...ij,...j->...", d, gh_inv, d)
    v2 = 1.0 - grad2 / t**2
    _guard(v2, eps_v)
    v = np.sqrt(v2)
    g = -d[..., :, None] * d[..., None, :] + (t**2)[..., None, None] * ghat
    detg, ginv = _det_inv(g)
    det_ghat = _det_inv(np.asarray(ghat))[0]
    pred = t ** (2 * n) * det_ghat * v2
    resid = float(np.max(np.abs(detg - pred) / np.abs(pred)))
    return dict(theta=t, dtheta=dt, ddtheta=ddt, Theta=Th, drho=d, g=g, ginv=ginv,
                detg=detg, v2=v2, v=v, u=t / v, detg_residual=resid)


def christoffel(grid: FiberGrid, g, ginv):
    """``Gamma^k_ij`` of the node metric by central differences of ``g``."""
    n = grid.n
    dg = np.empty(g.shape[:-2] + (n, n, n))
    for c in range(n):
        for a in range(n):
            for b in range(a, n):
                dg[..., c, a, b] = dg[..., c, b, a] = grid.partial(g[..., a, b], c)
    # T_ijl = d_i g_jl + d_j g_il - d_l g_ij
    T = dg + np.swapaxes(dg, -3, -2) - np.moveaxis(dg, -3, -1)
    return 0.5 * np.einsum("...kl,...ijl->...kij", ginv, T)


def _second_fundamental_form(grid, w, rho, met):
    n = grid.n
    d = met["drho"]
    gam = christoffel(grid, met["g"], met["ginv"])
    hess = np.empty(met["g"].shape)
    for i in range(n):
        for j in range(i, n):
            hess[..., i, j] = hess[..., j, i] = grid.partial2(rho, i, j)
    hess = hess - np.einsum("...kij,...k->...ij", gam, d)
    t, dt, v = met["theta"], met["dtheta"], met["v"]
    h = v[..., None, None] * (hess + (t * dt)[..., None, None] * grid.ghat)
    ginv = met["ginv"]
    H = np.einsum("...ij,...ij->...", ginv, h)
    normA2 = np.einsum("...ik,...jl,...ij,...kl->...", ginv, ginv, h, h)
    ringA2 = normA2 - H**2 / n
    return dict(gamma=gam, hess_rho=hess, h=h, H=H, normA2=normA2, ringA2=ringA2)


def second_fundamental_form(grid: FiberGrid, w: WarpingFactor, state: GraphState):
    """``(h, H, |A|^2, |A_0|^2)`` of a computed state."""
    return state.h, state.H, state.normA2, state.ringA2


def laplace_beltrami(grid: FiberGrid, w: WarpingFactor, rho, f=None, parity=1,
                     eps_v=DEFAULT_EPS_V, return_v2=False):
    """Conservative Laplace-Beltrami operator of the graph metric.

    With ``f=None`` computes ``Delta Theta(rho)``, using the face gradient
    ``theta(rho_face) * d rho``; otherwise ``Delta f`` for a node field ``f``
    of reflection parity ``parity``.

    The result satisfies ``sum_k weights_k theta_k^n v_k (Delta f)_k = 0`` up
    to round-off on every fiber.
    """
    rho = np.asarray(rho, dtype=float).reshape(grid.shape)
    n = grid.n
    d_node = grid.gradient(rho)
    gh_inv = _ghat_inv(grid)
    t_node = w.theta(rho)
    v2 = 1.0 - np.einsum("...i,...ij,...j->...", d_node, gh_inv, d_node) / t_node**2
    _guard(v2, eps_v)
    df_node = None if f is None else grid.gradient(f, parity)
    div = np.zeros(grid.shape)
    for a in grid.active:
        ha = grid.spacing[a]
        rp = grid.shift(rho, a, 1)
        rf = 0.5 * (rho + rp)
        dface = np.empty(grid.shape + (n,))
        for b in range(n):
            if b == a:
                dface[..., b] = (rp - rho) / ha
            else:
                dface[..., b] = 0.5 * (d_node[..., b] + grid.shift(d_node[..., b], a, 1, -1))
        tf = w.theta(rf)
        if f is None:
            grad = tf[..., None] * dface
        else:
            grad = np.empty_like(dface)
            for b in range(n):
                if b == a:
                    grad[..., b] = (grid.shift(f, a, 1, parity) - f) / ha
                else:
                    grad[..., b] = 0.5 * (df_node[..., b] + grid.shift(df_node[..., b], a, 1, -parity))
        gh_f, _ = grid.face_ghat(a)
        gf = -dface[..., :, None] * dface[..., None, :] + (tf**2)[..., None, None] * gh_f
        det, _ = _det_inv(gf)
        if eps_v is not None and not np.all(det > 0):
            k = int(np.argmin(det))
            raise SpacelikeViolation(k, float(det.reshape(-1)[k]), eps_v)
        flux = np.einsum("...j,...j->...", _adjugate(gf)[..., a, :], grad) / np.sqrt(det)
        if grid.kind == "sphere2_axisym":
            flux[-1] = 0.0
        div += (flux - grid.back_face(flux, a)) / ha
    v = np.sqrt(v2)
    out = div / (t_node**n * v * grid.cell_density)
    return (out, v2) if return_v2 else out


def laplace_theta(grid: FiberGrid, w: WarpingFactor, state: GraphState):
    """``(Delta Theta in divergence form, Delta Theta in trace form)``."""
    return state.lap_theta, state.lap_theta_trace


def ricci_closed_form(w: WarpingFactor, r, grad2_hat, lam, n):
    """Closed-form ``(Ric(grad Theta, nu), Ric(W, W))`` at points of a graph.

    ``grad2_hat`` is ``ghat^{ij} d_i rho d_j rho``. Assumes an Einstein fiber,
    ``Ric_ghat = lam ghat``. ``W`` is the null vector built from the fiber part
    of ``nu``; ``Ric(W, W) = (1/v^2 - 1) theta^-2 * margin(r)``.
    """
    t = w.theta(r)
    v2 = 1.0 - grad2_hat / t**2
    s2 = 1.0 / v2 - 1.0
    ric_ww = s2 / t**2 * ncc_margin(w, r, lam, n)
    u = t / np.sqrt(v2)
    return u * ric_ww, ric_ww


def ambient_ricci_terms(grid: FiberGrid, w: WarpingFactor, state: GraphState):
    """Node fields ``Ric(grad Theta, nu)`` and ``Ric(W, W)``."""
    grad2 = state.theta**2 * (1.0 - state.v2)
    return ricci_closed_form(w, state.rho, grad2, grid.lam, grid.n)
