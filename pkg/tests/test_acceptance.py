"""Acceptance criteria, one test per criterion.

Each test records a ``CRITERION k: PASS|FAIL`` line, echoed in the pytest
terminal summary. Run on its own with ``pytest tests/test_acceptance.py -v``.
"""

import math
import time

import numpy as np
import pytest

from conftest import ACCEPTANCE_LINES
from grwflow.config import random_perturbation
from grwflow.fiber import FiberGrid
from grwflow.flow import FlowConfig, cfl_dt, run
from grwflow.geometry import GraphState
from grwflow.integrals import integrate_on_graph
from grwflow.isoperimetric import IsoperimetricProfile, verdict
from grwflow.warping import WarpingFactor
from grwflow import verify


def report(k, ok, detail):
    line = f"CRITERION {k}: {'PASS' if ok else 'FAIL'}  {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)
    assert ok, line


GAUSS = WarpingFactor.gaussian(-1.0, 3.0, 1.0)


def initial_bump(grid):
    return 0.5 + 0.2 * np.sin(grid.coords[0]) * np.sin(grid.coords[1])


def _flow(N):
    grid = FiberGrid("torus2", N)
    t0 = time.perf_counter()
    res = run(grid, GAUSS, initial_bump(grid), FlowConfig(integrator="rk2", record_every=10**9))
    return grid, res, time.perf_counter() - t0


@pytest.fixture(scope="module")
def flow64():
    return _flow(64)


@pytest.fixture(scope="module")
def flow128():
    return _flow(128)


def test_criterion_1_volume_conservation(flow64):
    grid, res, secs = flow64
    vol = res.trace.series("volume")
    drift = float(np.max(np.abs(vol - vol[0])) / vol[0])
    ok = res.verdict == "converged" and drift <= 1e-6
    report(1, ok, f"relative volume drift {drift:.2e} (<= 1e-6), {res.trace.steps} steps, "
                  f"verdict {res.verdict}, {secs:.1f}s")


def test_criterion_2_area_monotonicity(flow64):
    grid, res, _ = flow64
    area = res.trace.series("area")
    worst = float(np.min(np.diff(area)) / area[0])
    ok = worst >= -1e-10 and area[-1] > area[0]
    report(2, ok, f"min per-step area change {worst:.2e} * area(0) (>= -1e-10); "
                  f"area {area[0]:.6f} -> {area[-1]:.6f}")


def test_criterion_3_convergence_to_slice(flow128):
    grid, res, secs = flow128
    prof = IsoperimetricProfile.from_grid(grid, GAUSS)
    vol0 = res.trace.series("volume")[0]
    area_f = res.trace.series("area")[-1]
    osc = res.trace.series("osc")[-1]
    gap = abs(area_f - prof.phi(vol0)) / area_f
    ok = res.verdict == "converged" and osc <= 1e-6 and gap <= 5e-4
    report(3, ok, f"128^2: final osc {osc:.2e} (<= 1e-6), |area - phi(vol0)| / area {gap:.2e} "
                  f"(<= 5e-4), t = {res.t:.3f}, {secs:.1f}s")


def _random_cases(count=50):
    """(family label, grid, warping, rho) for NCC-valid families, seeded."""
    rng = np.random.default_rng(2024)
    cases = []
    for k in range(count):
        fam = ("product", "de_sitter", "gaussian")[k % 3]
        if fam == "product":
            w = WarpingFactor.product(0.0, 2.0, float(rng.uniform(0.5, 2.0)))
            grid = FiberGrid("torus2", 48)
            base = rng.uniform(0.5, 1.5)
        elif fam == "de_sitter":
            w = WarpingFactor("de_sitter", -1.0, 1.0, (1.0,))
            grid = FiberGrid("sphere2_axisym", 96)
            base = rng.uniform(-0.5, 0.5)
        else:
            w = WarpingFactor.gaussian(-1.0, 3.0, float(rng.uniform(0.7, 1.5)))
            grid = FiberGrid("torus2", 48)
            base = rng.uniform(-0.3, 1.5)
        amp = rng.uniform(0.02, 0.3) * float(w.theta(base))
        rho = base + random_perturbation(grid, amp, int(rng.integers(1 << 30)))
        cases.append((fam, grid, w, rho, base))
    return cases


def test_criterion_4_isoperimetric_suite():
    worst, worst_slice, n_ok = math.inf, 0.0, 0
    cases = _random_cases()
    for fam, grid, w, rho, base in cases:
        st = GraphState.from_graph(grid, w, rho)
        v = verdict(grid, w, st)
        assert v.applicable, (fam, v.reason)
        worst = min(worst, v.slack / v.area)
        n_ok += v.slack >= -1e-8 * v.area
        sl = verdict(grid, w, GraphState.from_graph(grid, w, np.full(grid.shape, base)))
        worst_slice = max(worst_slice, abs(sl.slack) / sl.area)
    ok = n_ok == len(cases) and worst_slice <= 1e-10
    report(4, ok, f"{n_ok}/{len(cases)} random graphs with slack >= -1e-8 area "
                  f"(min slack/area {worst:.2e}); slice |slack|/area max {worst_slice:.1e} (<= 1e-10)")


def test_criterion_5_identity_suite():
    w = GAUSS
    seed = 11

    def rho_fn(grid):
        return 0.5 + random_perturbation(grid, 0.15, seed)

    spatial = verify.spatial_refinement(lambda N: FiberGrid("torus2", N), w, rho_fn, (32, 64, 128))
    orders = {k: min(r["orders"]) for k, r in spatial.items() if k != "trace_vs_div"}
    ok_sp = all(spatial[k]["ok"] for k in orders)
    evol = []
    for N in (32, 64):
        grid = FiberGrid("torus2", N)
        st = GraphState.from_graph(grid, w, rho_fn(grid))
        evol.append(verify.check_evolution_identities(grid, w, st, cfl_dt(grid, w, st, 0.2)))
    laws = ("theta_law", "theta_graph", "metric_law", "normal_law", "u_law")
    ratios = {k: evol[0][k] / evol[1][k] for k in laws}
    ok_ev = all(r > 2.0 for r in ratios.values())
    report(5, ok_sp and ok_ev,
           "spatial orders " + ", ".join(f"{k} {p:.2f}" for k, p in orders.items())
           + " (>= 1.8, laplace_u >= 1); evolution residual ratios 32->64 "
           + ", ".join(f"{k} {r:.1f}" for k, r in ratios.items()))


def test_criterion_6_curvature_oracle():
    fams = [(WarpingFactor.product(0.0, 2.0, 1.5), "torus2"),
            (WarpingFactor("de_sitter", -1.0, 1.0, (1.0,)), "sphere2_axisym"),
            (GAUSS, "torus2")]
    worst = 0.0
    for w, kind in fams:
        rep = verify.closed_form_vs_oracle(w, FiberGrid(kind, 8), samples=20)
        worst = max(worst, rep["ncc_margin"], rep["ric_gradtheta_nu"], rep["ric_ww"])
    c, resid = verify.einstein_constant(fams[1][0], FiberGrid("sphere2_axisym", 8))
    ok = worst <= 1e-6 and resid <= 1e-6 and abs(c - 2.0) <= 1e-6
    report(6, ok, f"max closed-form vs oracle error {worst:.1e} (<= 1e-6); de Sitter Ric = {c:.9f} g, "
                  f"residual {resid:.1e}")


def test_criterion_7_equality_diagnostics(flow64):
    grid, res, _ = flow64
    v = verdict(grid, GAUSS, res.state)
    eq = v.equality
    slices = [verdict(FiberGrid(k, 32), GAUSS, GraphState.from_graph(FiberGrid(k, 32), GAUSS,
                                                                     np.full(FiberGrid(k, 32).shape, 0.7)))
              for k in ("torus2", "sphere2_axisym")]
    ok = bool(eq) and eq["max_ringA2"] <= 1e-8 and eq["max_one_minus_v2"] <= 1e-8
    ok = ok and all(s.equality and s.equality["max_ringA2"] <= 1e-8 for s in slices)
    detail = (f"converged flow: slack/area {v.slack / v.area:.1e}, max|A0|^2 {eq.get('max_ringA2', math.nan):.1e}, "
              f"max(1 - v^2) {eq.get('max_one_minus_v2', math.nan):.1e} (both <= 1e-8)")
    report(7, ok, detail)


def test_criterion_8_discrete_exactness():
    rng = np.random.default_rng(8)
    worst = 0.0
    for kind in ("torus1", "torus2", "sphere2_axisym"):
        for w in (GAUSS, WarpingFactor("de_sitter", -1.0, 1.0, (1.0,))):
            for _ in range(5):
                grid = FiberGrid(kind, int(rng.integers(16, 80)))
                rho = 0.3 + 0.05 * grid.h * rng.standard_normal(grid.shape) + random_perturbation(
                    grid, 0.1, int(rng.integers(1000)))
                st = GraphState.from_graph(grid, w, rho)
                a = integrate_on_graph(grid, st, 1.0)
                worst = max(worst, abs(integrate_on_graph(grid, st, st.lap_theta)) / a)
    report(8, worst <= 1e-13, f"max |int Delta Theta| / area {worst:.1e} (<= 1e-13) over 30 graphs")


if __name__ == "__main__":
    raise SystemExit(pytest.main([__file__, "-v"]))
