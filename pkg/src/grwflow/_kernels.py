"""Compiled hot loops for the flow on flat tori.

These mirror :func:`grwflow.geometry.laplace_beltrami` (``f=None`` branch)
node for node; the test suite checks agreement with the numpy path.
Warping values are passed in precomputed so the kernels stay family-agnostic.
"""

import math

import numba
import numpy as np


@numba.njit(cache=True)
def lap_theta_torus1(rho, t_node, t_face, h, cfl_scale):
    N = rho.shape[0]
    flux = np.empty(N)
    for i in range(N):
        ip = (i + 1) % N
        d = (rho[ip] - rho[i]) / h
        tf = t_face[i]
        det = tf * tf - d * d
        if det <= 0.0:
            det = -1.0
            flux[i] = np.nan
        else:
            flux[i] = tf * d / math.sqrt(det)
    lap = np.empty(N)
    v2 = np.empty(N)
    dt_min = np.inf
    for i in range(N):
        ip = (i + 1) % N
        im = (i - 1) % N
        c = (rho[ip] - rho[im]) / (2.0 * h)
        t = t_node[i]
        q = 1.0 - c * c / (t * t)
        v2[i] = q
        if q <= 0.0:
            lap[i] = np.nan
            continue
        v = math.sqrt(q)
        lap[i] = (flux[i] - flux[im]) / h / (t * v)
        gii = (1.0 + c * c / (t * t * q)) / (t * t)
        dt = h * h * v / (2.0 * t * gii)
        if dt < dt_min:
            dt_min = dt
    return lap, v2, cfl_scale * dt_min


@numba.njit(cache=True)
def lap_theta_torus2(rho, t_node, t_face0, t_face1, h0, h1, cfl_scale):
    N0, N1 = rho.shape
    nxt0 = np.roll(np.arange(N0), -1)
    prv0 = np.roll(np.arange(N0), 1)
    nxt1 = np.roll(np.arange(N1), -1)
    prv1 = np.roll(np.arange(N1), 1)
    c0 = np.empty((N0, N1))
    c1 = np.empty((N0, N1))
    for i in range(N0):
        ip = nxt0[i]
        im = prv0[i]
        for j in range(N1):
            jp = nxt1[j]
            jm = prv1[j]
            c0[i, j] = (rho[ip, j] - rho[im, j]) / (2.0 * h0)
            c1[i, j] = (rho[i, jp] - rho[i, jm]) / (2.0 * h1)
    F0 = np.empty((N0, N1))
    F1 = np.empty((N0, N1))
    for i in range(N0):
        ip = nxt0[i]
        for j in range(N1):
            jp = nxt1[j]
            # face (i + 1/2, j)
            tf = t_face0[i, j]
            a = (rho[ip, j] - rho[i, j]) / h0
            b = 0.5 * (c1[i, j] + c1[ip, j])
            g00 = tf * tf - a * a
            g01 = -a * b
            g11 = tf * tf - b * b
            det = g00 * g11 - g01 * g01
            F0[i, j] = tf * (g11 * a - g01 * b) / math.sqrt(det) if det > 0.0 else np.nan
            # face (i, j + 1/2)
            tf = t_face1[i, j]
            a = 0.5 * (c0[i, j] + c0[i, jp])
            b = (rho[i, jp] - rho[i, j]) / h1
            g00 = tf * tf - a * a
            g01 = -a * b
            g11 = tf * tf - b * b
            det = g00 * g11 - g01 * g01
            F1[i, j] = tf * (g00 * b - g01 * a) / math.sqrt(det) if det > 0.0 else np.nan
    lap = np.empty((N0, N1))
    v2 = np.empty((N0, N1))
    dt_min = np.inf
    for i in range(N0):
        im = prv0[i]
        for j in range(N1):
            jm = prv1[j]
            t = t_node[i, j]
            a = c0[i, j]
            b = c1[i, j]
            q = 1.0 - (a * a + b * b) / (t * t)
            v2[i, j] = q
            if q <= 0.0:
                lap[i, j] = np.nan
                continue
            v = math.sqrt(q)
            div = (F0[i, j] - F0[im, j]) / h0 + (F1[i, j] - F1[i, jm]) / h1
            lap[i, j] = div / (t * t * v)
            g00 = (1.0 + a * a / (t * t * q)) / (t * t)
            g11 = (1.0 + b * b / (t * t * q)) / (t * t)
            dt = h0 * h0 * v / (4.0 * t * g00)
            if dt < dt_min:
                dt_min = dt
            dt = h1 * h1 * v / (4.0 * t * g11)
            if dt < dt_min:
                dt_min = dt
    return lap, v2, cfl_scale * dt_min
