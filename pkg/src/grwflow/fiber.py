"""Discrete compact fibers: flat tori and the axisymmetric round sphere.

Node storage is a numpy array of shape ``grid.shape``; the flat index of a node
is its row-major (C order) position, which is also the ordering used by
external profile files.

* ``torus1``: ``N`` nodes ``xi_k = k L / N`` on ``R / L Z``.
* ``torus2``: ``N1 x N2`` nodes on ``R^2 / (L1 Z x L2 Z)``; axis 0 is ``xi^1``.
* ``sphere2_axisym``: ``N`` midpoint nodes ``theta_k = (k + 1/2) pi / N`` in the
  polar angle of the unit sphere; fields are independent of the azimuth, which
  is kept as a passive second chart direction (``n = 2``).

Sphere fields are extended across the poles by reflection (even parity for
scalars such as ``rho``, odd for ``d_theta`` of a scalar).
"""

from __future__ import annotations

import numpy as np

KINDS = ("torus1", "torus2", "sphere2_axisym")


class FiberGrid:
    """Immutable discretisation of the fiber ``(S_0, ghat)``.

    Parameters
    ----------
    kind : {'torus1', 'torus2', 'sphere2_axisym'}
    resolution : int or tuple of int
    side_lengths : float or tuple of float, optional
        Torus periods. Defaults to ``2 pi``. Ignored for the sphere.
    """

    def __init__(self, kind, resolution, side_lengths=None):
        if kind not in KINDS:
            raise ValueError(f"unknown fiber kind {kind!r}")
        res = tuple(np.atleast_1d(resolution).astype(int).tolist())
        self.kind = kind
        if kind == "torus1":
            self.n = 1
            if len(res) != 1:
                raise ValueError("torus1 takes one resolution")
            L = _lengths(side_lengths, 1)
        elif kind == "torus2":
            self.n = 2
            if len(res) == 1:
                res = res * 2
            if len(res) != 2:
                raise ValueError("torus2 takes two resolutions")
            L = _lengths(side_lengths, 2)
        else:
            self.n = 2
            if len(res) != 1:
                raise ValueError("sphere2_axisym takes one resolution (polar nodes)")
            L = (np.pi, 2.0 * np.pi)
        if min(res) < 4:
            raise ValueError("need at least 4 nodes per direction")
        self.shape = res
        self.side_lengths = tuple(float(x) for x in L)
        self.lam = 1.0 if kind == "sphere2_axisym" else 0.0  # Ric_ghat >= lam ghat
        self.active = tuple(range(len(res)))  # chart directions carrying derivatives

        if kind == "sphere2_axisym":
            N = res[0]
            self.spacing = (np.pi / N, 2.0 * np.pi)
            th = (np.arange(N) + 0.5) * self.spacing[0]
            self.coords = (th,)
            edges = np.arange(N + 1) * self.spacing[0]
            # exact cell areas: sum is 4 pi to round-off
            self.cell_density = (np.cos(edges[:-1]) - np.cos(edges[1:])) / self.spacing[0]
            self.weights = 2.0 * np.pi * self.spacing[0] * self.cell_density
            ghat = np.zeros((N, 2, 2))
            ghat[:, 0, 0] = 1.0
            ghat[:, 1, 1] = np.sin(th) ** 2
            self.ghat = ghat
            self.sqrt_det_ghat = np.sin(th)
            # faces k + 1/2 for k = 0..N-1 (the last one is the south pole)
            self._face_theta = edges[1:]
        else:
            self.spacing = tuple(Li / Ni for Li, Ni in zip(self.side_lengths, res))
            axes = [np.arange(Ni) * hi for Ni, hi in zip(res, self.spacing)]
            self.coords = tuple(np.meshgrid(*axes, indexing="ij"))
            self.cell_density = np.ones(res)
            self.weights = np.full(res, float(np.prod(self.spacing)))
            self.ghat = np.broadcast_to(np.eye(self.n), res + (self.n, self.n))
            self.sqrt_det_ghat = np.ones(res)
        for arr in (self.cell_density, self.weights, self.sqrt_det_ghat):
            arr.setflags(write=False)

    def __repr__(self):
        return f"FiberGrid({self.kind!r}, {self.shape}, side_lengths={self.side_lengths})"

    @property
    def size(self):
        return int(np.prod(self.shape))

    @property
    def h(self):
        """Smallest active grid spacing."""
        return min(self.spacing[a] for a in self.active)

    # -- neighbour access -----------------------------------------------------

    def shift(self, f, a, s, parity=1):
        """Node values ``f_{k+s}`` along direction ``a`` (``s = +-1``)."""
        if self.kind != "sphere2_axisym":
            return np.roll(f, -s, axis=a)
        if s == 1:
            return np.concatenate([f[1:], parity * f[-1:]])
        return np.concatenate([parity * f[:1], f[:-1]])

    def back_face(self, F, a):
        """Face array shifted so entry ``k`` holds the flux through face ``k - 1/2``.

        Face arrays store face ``k + 1/2`` at index ``k``. On the sphere the
        north pole face carries no flux.
        """
        if self.kind != "sphere2_axisym":
            return np.roll(F, 1, axis=a)
        return np.concatenate([np.zeros_like(F[:1]), F[:-1]])

    # -- stencils -------------------------------------------------------------

    def partial(self, f, i, parity=1):
        """Second-order central difference ``d_i f``.

        ``parity`` is the reflection parity of ``f`` across the poles (sphere
        only); tori are exactly periodic.
        """
        if not 0 <= i < self.n:
            raise IndexError(f"direction {i} out of range for n = {self.n}")
        if i not in self.active:
            return np.zeros_like(f)
        return (self.shift(f, i, 1, parity) - self.shift(f, i, -1, parity)) / (2.0 * self.spacing[i])

    def partial2(self, f, i, j, parity=1):
        """Second derivative ``d_i d_j f``; compact 3-point stencil when ``i == j``."""
        if not (0 <= i < self.n and 0 <= j < self.n):
            raise IndexError("direction out of range")
        if i not in self.active or j not in self.active:
            return np.zeros_like(f)
        if i == j:
            h = self.spacing[i]
            return (self.shift(f, i, 1, parity) - 2.0 * f + self.shift(f, i, -1, parity)) / h**2
        return self.partial(self.partial(f, j, parity), i, -parity)

    def gradient(self, f, parity=1):
        """Stack of ``d_i f`` on the last axis, shape ``shape + (n,)``."""
        return np.stack([self.partial(f, i, parity) for i in range(self.n)], axis=-1)

    def face_ghat(self, a):
        """``ghat`` and ``sqrt(det ghat)`` on the faces normal to direction ``a``."""
        if self.kind != "sphere2_axisym":
            return self.ghat, self.sqrt_det_ghat
        th = self._face_theta
        gh = np.zeros(th.shape + (2, 2))
        gh[:, 0, 0] = 1.0
        gh[:, 1, 1] = np.sin(th) ** 2
        return gh, np.abs(np.sin(th))

    def ghat_at(self, xi):
        """``ghat`` at arbitrary chart points ``xi`` of shape ``(M, n)``."""
        xi = np.atleast_2d(xi)
        M = xi.shape[0]
        if self.kind != "sphere2_axisym":
            return np.broadcast_to(np.eye(self.n), (M, self.n, self.n)).copy()
        gh = np.zeros((M, 2, 2))
        gh[:, 0, 0] = 1.0
        gh[:, 1, 1] = np.sin(xi[:, 0]) ** 2
        return gh

    # -- quadrature & interpolation ------------------------------------------

    def integrate(self, f):
        """``int f d omega_ghat`` with the grid weights (compensated sum)."""
        return _fsum(self.weights * f)

    def interpolate(self, f, xi):
        """Cubic-spline interpolation of a node field at chart points ``xi`` (M, n).

        Even reflection across the poles on the sphere; periodic on tori.
        """
        from scipy import ndimage

        xi = np.atleast_2d(xi)
        if self.kind == "sphere2_axisym":
            idx = xi[:, 0] / self.spacing[0] - 0.5
            return ndimage.map_coordinates(f, idx[None, :], order=3, mode="reflect")
        idx = np.stack([xi[:, a] / self.spacing[a] for a in range(self.n)])
        return ndimage.map_coordinates(f, idx, order=3, mode="grid-wrap")

    def node_points(self):
        """Chart coordinates of all nodes, shape ``(size, n)`` in flat order."""
        if self.kind == "sphere2_axisym":
            th = self.coords[0]
            return np.stack([th, np.zeros_like(th)], axis=-1)
        return np.stack([c.reshape(-1) for c in self.coords], axis=-1)


def fiber_volume(grid: FiberGrid) -> float:
    """Sum of the quadrature weights (``|S_0|`` with respect to ``ghat``)."""
    return _fsum(grid.weights)


def partial(grid: FiberGrid, f, i, parity=1):
    return grid.partial(f, i, parity)


def _lengths(side_lengths, n):
    if side_lengths is None:
        return (2.0 * np.pi,) * n
    L = tuple(float(x) for x in np.atleast_1d(side_lengths))
    if len(L) == 1 and n == 2:
        L = L * 2
    if len(L) != n or min(L) <= 0:
        raise ValueError(f"need {n} positive side lengths")
    return L


def _fsum(a):
    import math

    return math.fsum(np.asarray(a, dtype=float).reshape(-1))
