"""Warping factors of the spacetime metric ``-dr^2 + theta(r)^2 ghat``.

A :class:`WarpingFactor` bundles the positive function ``theta`` on ``[a, b)``
with its first two derivatives and the antiderivative ``Theta`` normalised by
``Theta(a) = 0``. Three closed-form families are built in:

============  =================================  ============================
family        theta(r)                           params
============  =================================  ============================
product       c                                  (c,) default (1.0,)
de_sitter     cosh(alpha r) / alpha              (alpha,) default (1.0,)
gaussian      exp(-r^2 / (2 s^2))                (s,) default (1.0,)
custom        user callables                     ignored
============  =================================  ============================

All evaluation routines accept scalars or numpy arrays.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy import integrate, special

from .errors import InvalidWarpingError, WarpingDomainError

FAMILIES = ("product", "de_sitter", "gaussian", "custom")
_DEFAULT_PARAMS = {"product": (1.0,), "de_sitter": (1.0,), "gaussian": (1.0,), "custom": ()}

Func = Callable[[float], float]


@dataclass(frozen=True)
class WarpingFactor:
    """Warping factor ``theta`` on the time interval ``[a, b)``.

    Parameters
    ----------
    family : str
        One of ``product``, ``de_sitter``, ``gaussian``, ``custom``.
    a, b : float
        Interval endpoints, ``a < b``.
    params : tuple of float
        Family parameters (see module docstring). Empty means defaults.
    funcs : tuple of callables, optional
        ``(theta, dtheta, ddtheta)`` for the ``custom`` family. Derivatives
        must be supplied analytically.
    """

    family: str
    a: float
    b: float
    params: tuple = ()
    funcs: Optional[tuple] = field(default=None, compare=False, repr=False)

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ValueError(f"unknown warping family {self.family!r}")
        if not self.a < self.b:
            raise ValueError(f"need a < b, got a={self.a}, b={self.b}")
        if not self.params:
            object.__setattr__(self, "params", _DEFAULT_PARAMS[self.family])
        object.__setattr__(self, "params", tuple(float(p) for p in self.params))
        if self.family == "custom":
            if self.funcs is None or len(self.funcs) != 3:
                raise ValueError("custom warping needs funcs=(theta, dtheta, ddtheta)")
        elif len(self.params) != 1:
            raise ValueError(f"{self.family} takes exactly one parameter")
        if self.family != "custom" and self.params[0] <= 0:
            raise InvalidWarpingError(f"{self.family} parameter must be positive")

    # -- constructors ---------------------------------------------------------

    @classmethod
    def product(cls, a=0.0, b=1.0, c=1.0):
        return cls("product", a, b, (c,))

    @classmethod
    def de_sitter(cls, a=-1.0, b=2.0, alpha=1.0):
        return cls("de_sitter", a, b, (alpha,))

    @classmethod
    def gaussian(cls, a=-1.0, b=3.0, s=1.0):
        return cls("gaussian", a, b, (s,))

    @classmethod
    def custom(cls, theta: Func, dtheta: Func, ddtheta: Func, a, b):
        return cls("custom", a, b, (), (theta, dtheta, ddtheta))

    # -- evaluation -----------------------------------------------------------

    def _check(self, r):
        r = np.asarray(r, dtype=float)
        if r.size and (np.min(r) < self.a or np.max(r) >= self.b or np.isnan(r).any()):
            raise WarpingDomainError(
                f"r outside [{self.a}, {self.b}): range [{np.min(r)}, {np.max(r)}]"
            )
        return r

    def theta(self, r):
        r = self._check(r)
        val = self._theta(r)
        if np.any(val <= 0):
            raise InvalidWarpingError("warping factor is not positive")
        return val

    def _theta(self, r):
        p = self.params[0] if self.params else None
        if self.family == "product":
            return np.full_like(r, p)
        if self.family == "de_sitter":
            return np.cosh(p * r) / p
        if self.family == "gaussian":
            return np.exp(-0.5 * (r / p) ** 2)
        return _apply(self.funcs[0], r)

    def dtheta(self, r):
        r = self._check(r)
        p = self.params[0] if self.params else None
        if self.family == "product":
            return np.zeros_like(r)
        if self.family == "de_sitter":
            return np.sinh(p * r)
        if self.family == "gaussian":
            return -r / p**2 * np.exp(-0.5 * (r / p) ** 2)
        return _apply(self.funcs[1], r)

    def ddtheta(self, r):
        r = self._check(r)
        p = self.params[0] if self.params else None
        if self.family == "product":
            return np.zeros_like(r)
        if self.family == "de_sitter":
            return p * np.cosh(p * r)
        if self.family == "gaussian":
            return (r**2 / p**4 - 1.0 / p**2) * np.exp(-0.5 * (r / p) ** 2)
        return _apply(self.funcs[2], r)

    def antiderivative(self, r):
        """``Theta(r) = int_a^r theta``."""
        return self.power_integral(r, 1)

    def power_integral(self, r, n):
        """``int_a^r theta(s)**n ds``; closed form for built-in families."""
        r = self._check(r)
        a = self.a
        fam = self.family
        p = self.params[0] if self.params else None
        if fam == "product":
            return p**n * (r - a)
        if fam == "gaussian":
            # theta**n is a gaussian of width s / sqrt(n)
            sn = p / np.sqrt(n)
            k = sn * np.sqrt(2.0)
            return sn * np.sqrt(np.pi / 2.0) * (special.erf(r / k) - special.erf(a / k))
        if fam == "de_sitter" and n == 1:
            return (np.sinh(p * r) - np.sinh(p * a)) / p**2
        if fam == "de_sitter" and n == 2:
            def prim(s):
                return (s / 2.0 + np.sinh(2.0 * p * s) / (4.0 * p)) / p**2
            return prim(r) - prim(a)
        return self._quad_power(r, n)

    def _quad_power(self, r, n):
        f = self.funcs[0] if self.family == "custom" else (lambda s: float(self._theta(np.asarray(s))))
        out = np.empty(r.shape)
        flat = out.reshape(-1)
        for i, ri in enumerate(r.reshape(-1)):
            val, _ = integrate.quad(lambda s: f(s) ** n, self.a, float(ri),
                                    epsabs=0.0, epsrel=1e-10, limit=200)
            flat[i] = val
        return out if r.ndim else float(out)

    def eval(self, r):
        """Return ``(theta, theta', theta'', Theta)`` at ``r``."""
        return self.theta(r), self.dtheta(r), self.ddtheta(r), self.antiderivative(r)

    def sample_points(self, m=400):
        """Dense sample of ``[a, b)`` used for interval-wide checks."""
        return np.linspace(self.a, self.b, m, endpoint=False)


def _apply(f, r):
    out = np.vectorize(f, otypes=[float])(r)
    return out if np.ndim(r) else float(out)


def eval_warping(w: WarpingFactor, r):
    """Module-level alias of :meth:`WarpingFactor.eval`."""
    return w.eval(r)


def ncc_margin(w: WarpingFactor, r, lam, n):
    """Null-convergence margin ``lam - (n-1) (theta theta'' - theta'^2)``.

    ``lam`` is a lower bound for the fiber Ricci curvature, ``Ric_ghat >= lam ghat``.
    For constant-curvature fibers, ``margin(r) = theta(r)**2 Ric(K, K)`` for every
    null vector ``K = d_r + e / theta`` with ``ghat(e, e) = 1``; nonnegative
    everywhere means the null convergence condition holds, positive means it
    holds strictly.
    """
    t, dt, ddt = w.theta(r), w.dtheta(r), w.ddtheta(r)
    return lam - (n - 1) * (t * ddt - dt * dt)


def ncc_holds(w: WarpingFactor, lam, n, tol=1e-10, m=400):
    """Minimum NCC margin over a dense sample of ``[a, b)`` and whether it is ``>= -tol``."""
    mu = ncc_margin(w, w.sample_points(m), lam, n)
    lo = float(np.min(mu))
    return lo >= -tol, lo
