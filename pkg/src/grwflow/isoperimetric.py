"""Slice profile functions and the isoperimetric verdict.

For the slice ``S_R = {r = R}``, ``f0(R)`` is the volume enclosed between
``{r = a}`` and ``S_R`` and ``f1(R)`` is the area of ``S_R``. The profile is
``phi = f1 o f0^{-1}``; a spacelike graph satisfies the inequality when
``phi(vol) >= area``.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, field

import numpy as np
from scipy import optimize

from .errors import WarpingDomainError
from .fiber import FiberGrid, fiber_volume
from .geometry import GraphState
from .integrals import area, enclosed_volume
from .warping import WarpingFactor, ncc_holds

DEFAULT_TOL = 1e-8


class IsoperimetricProfile:
    """``f0``, ``f1`` and ``phi`` for a warping factor over a fiber of volume ``fiber_vol``."""

    def __init__(self, w: WarpingFactor, fiber_vol: float, n: int):
        self.w = w
        self.fiber_vol = float(fiber_vol)
        self.n = int(n)
        self._r_top = float(np.nextafter(w.b, w.a))

    @classmethod
    def from_grid(cls, grid: FiberGrid, w: WarpingFactor):
        return cls(w, fiber_volume(grid), grid.n)

    def f0(self, R):
        return self.fiber_vol * self.w.power_integral(R, self.n)

    def f1(self, R):
        return self.fiber_vol * self.w.theta(R) ** self.n

    @property
    def max_volume(self):
        return float(self.f0(self._r_top))

    def slice_for_volume(self, V):
        """Unique ``R`` with ``f0(R) = V`` (``f0`` is strictly increasing)."""
        V = float(V)
        vmax = self.max_volume
        if not 0.0 <= V < vmax:
            raise WarpingDomainError(f"volume {V} outside [0, {vmax})")
        if V == 0.0:
            return float(self.w.a)
        return optimize.brentq(lambda R: float(self.f0(R)) - V, self.w.a, self._r_top,
                               xtol=1e-15, rtol=4 * np.finfo(float).eps, maxiter=200)

    def phi(self, V):
        return float(self.f1(self.slice_for_volume(V)))

    def tabulate(self, m=201):
        """Rows ``(R, f0, f1, phi(f0(R)))`` on ``m`` points of ``[a, b)``."""
        R = np.linspace(self.w.a, self.w.b, m, endpoint=False)
        f0 = self.f0(R)
        f1 = self.f1(R)
        phi = np.array([self.phi(V) for V in f0])
        return np.column_stack([R, f0, f1, phi])


def slice_for_volume(profile: IsoperimetricProfile, V):
    return profile.slice_for_volume(V)


def phi(profile: IsoperimetricProfile, V):
    return profile.phi(V)


@dataclass
class Verdict:
    slack: float
    passed: bool
    status: str  # "pass", "fail" or "not-applicable"
    applicable: bool
    ncc_min_margin: float
    area: float
    volume: float
    phi: float
    reason: str = ""
    equality: dict = field(default_factory=dict)

    def as_dict(self):
        return asdict(self)


def verdict(grid: FiberGrid, w: WarpingFactor, state: GraphState, tol=DEFAULT_TOL,
            profile=None, tol_ncc=1e-10):
    """Isoperimetric slack ``phi(vol) - area`` and pass flag.

    Passing means ``slack >= -tol * area``. The verdict is ``not-applicable``
    when the null convergence condition fails somewhere on ``[a, b)`` or the
    fiber dimension is below 2; the slack is still reported. Near equality,
    ``equality`` carries ``max |A_0|^2`` and ``max (1 - v^2)``.
    """
    profile = profile or IsoperimetricProfile.from_grid(grid, w)
    A = area(grid, w, state)
    V = enclosed_volume(grid, w, state.rho)
    ph = profile.phi(V)
    slack = ph - A
    passed = bool(slack >= -tol * A)
    ok, mu_min = ncc_holds(w, grid.lam, grid.n, tol=tol_ncc)
    reason = ""
    if not ok:
        reason = "null convergence condition fails"
    elif grid.n < 2:
        reason = "fiber dimension below 2"
    applicable = not reason
    status = ("pass" if passed else "fail") if applicable else "not-applicable"
    eq = {}
    if abs(slack) <= tol * A:
        eq = {"max_ringA2": float(np.max(np.abs(state.ringA2))),
              "max_one_minus_v2": float(np.max(1.0 - state.v2))}
    return Verdict(slack=slack, passed=passed, status=status, applicable=applicable,
                   ncc_min_margin=mu_min, area=A, volume=V, phi=ph, reason=reason,
                   equality=eq)
