"""Flat ``section.key = value`` run configuration.

Blank lines and ``#`` comments are ignored. Every key is validated against
:data:`SCHEMA`; unknown keys are an error. Example::

    warping.family = gaussian
    warping.a = -1
    warping.b = 3
    fiber.kind = torus2
    fiber.resolution = 64
    initial.slice = 0.5
    initial.modes = 0.2*sin(1)*sin(1)

Initial data
------------
``initial.slice`` is the base height. ``initial.modes`` adds ``;``-separated
terms ``AMP*f(k)[*f(k)]`` with ``f`` in ``sin``/``cos`` on tori (one factor per
fiber direction, frequency ``k`` in periods per side) or ``AMP*P(l)``
(Legendre polynomial in ``cos(theta)``) on the axisymmetric sphere.
``initial.random = AMP`` adds four seeded random low modes of total amplitude
``AMP``. ``initial.file`` replaces all of the above with whitespace-separated
node values in C order (the last fiber axis varies fastest; sphere nodes run
from the north pole to the south pole).
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.special import eval_legendre

from .errors import ConfigError
from .fiber import FiberGrid
from .flow import FlowConfig
from .warping import WarpingFactor


def _floats(s):
    return tuple(float(x) for x in s.replace(",", " ").split())


def _ints(s):
    return tuple(int(x) for x in s.replace(",", " ").split())


def _bool(s):
    low = s.strip().lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {s!r}")


SCHEMA = {
    "warping.family": str,
    "warping.a": float,
    "warping.b": float,
    "warping.params": _floats,
    "fiber.kind": str,
    "fiber.resolution": int,
    "fiber.side_lengths": _floats,
    "flow.integrator": str,
    "flow.cfl": float,
    "flow.t_max": float,
    "flow.tol_osc": float,
    "flow.tol_speed": float,
    "flow.eps_v": float,
    "flow.record_every": int,
    "flow.max_halvings": int,
    "flow.max_steps": int,
    "iso.tol": float,
    "iso.tol_ncc": float,
    "verify.strict": _bool,
    "verify.markers": int,
    "verify.delta": float,
    "verify.resolutions": _ints,
    "initial.slice": float,
    "initial.modes": str,
    "initial.random": float,
    "initial.file": str,
    "run.seed": int,
    "run.out": str,
    "profile.points": int,
}

DEFAULTS = {
    "fiber.resolution": 64,
    "iso.tol": 1e-8,
    "iso.tol_ncc": 1e-10,
    "verify.strict": False,
    "verify.markers": 64,
    "verify.delta": 2e-3,
    "verify.resolutions": (32, 64, 128),
    "initial.modes": "",
    "initial.random": 0.0,
    "run.seed": 0,
    "profile.points": 201,
}

_TERM = re.compile(r"^\s*([-+]?[0-9.]+(?:[eE][-+]?\d+)?)\s*((?:\*\s*(?:sin|cos|P)\s*\(\s*\d+\s*\)\s*)*)$")
_FACTOR = re.compile(r"(sin|cos|P)\s*\(\s*(\d+)\s*\)")


@dataclass
class RunConfig:
    values: dict
    source: str = ""
    base_dir: Path = field(default_factory=Path.cwd)

    def __getitem__(self, key):
        return self.values[key]

    def get(self, key, default=None):
        return self.values.get(key, default)

    # -- derived objects -----------------------------------------------------

    def warping(self) -> WarpingFactor:
        fam = self.values["warping.family"]
        if fam == "custom":
            raise ConfigError("the custom warping family needs Python callables; use the library API")
        try:
            return WarpingFactor(fam, self.values["warping.a"], self.values["warping.b"],
                                 self.values.get("warping.params", ()))
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc

    def grid(self, resolution=None) -> FiberGrid:
        try:
            return FiberGrid(self.values["fiber.kind"], resolution or self.values["fiber.resolution"],
                             self.values.get("fiber.side_lengths"))
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc

    def flow(self) -> FlowConfig:
        kw = {k.split(".", 1)[1]: v for k, v in self.values.items() if k.startswith("flow.")}
        try:
            return FlowConfig(**kw)
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc

    def has_perturbation(self):
        v = self.values
        return bool(v["initial.modes"].strip()) or v["initial.random"] != 0.0 or "initial.file" in v

    def initial(self, grid: FiberGrid):
        """Initial height ``rho0`` on ``grid``."""
        v = self.values
        if "initial.file" in v:
            path = Path(v["initial.file"])
            if not path.is_absolute():
                path = self.base_dir / path
            try:
                data = np.loadtxt(path, ndmin=1).reshape(-1)
            except OSError as exc:
                raise ConfigError(f"cannot read initial.file: {exc}") from exc
            if data.size != grid.size:
                raise ConfigError(f"initial.file has {data.size} values, grid has {grid.size} nodes")
            return data.reshape(grid.shape)
        if "initial.slice" not in v:
            raise ConfigError("initial.slice or initial.file is required")
        rho = np.full(grid.shape, v["initial.slice"])
        for amp, factors in parse_modes(v["initial.modes"], grid):
            rho = rho + amp * _mode_field(grid, factors)
        if v["initial.random"]:
            rho = rho + random_perturbation(grid, v["initial.random"], v["run.seed"])
        return rho


def parse_modes(text, grid: FiberGrid):
    """List of ``(amplitude, [(kind, k), ...])`` terms, validated against ``grid``."""
    terms = []
    for raw in filter(None, (t.strip() for t in text.split(";"))):
        m = _TERM.match(raw)
        if not m:
            raise ConfigError(f"cannot parse mode term {raw!r}")
        factors = [(f, int(k)) for f, k in _FACTOR.findall(m.group(2))]
        if grid.kind == "sphere2_axisym":
            if len(factors) != 1 or factors[0][0] != "P":
                raise ConfigError(f"sphere modes take the form AMP*P(l), got {raw!r}")
        elif len(factors) != grid.n or any(f == "P" for f, _ in factors):
            raise ConfigError(f"{grid.kind} modes need {grid.n} sin/cos factor(s), got {raw!r}")
        terms.append((float(m.group(1)), factors))
    return terms


def _mode_field(grid, factors):
    out = np.ones(grid.shape)
    for axis, (f, k) in enumerate(factors):
        x = grid.coords[axis]
        if f == "P":
            out = out * eval_legendre(k, np.cos(x))
        else:
            arg = 2 * math.pi * k * x / grid.side_lengths[axis]
            out = out * (np.sin(arg) if f == "sin" else np.cos(arg))
    return out


def random_perturbation(grid, amplitude, seed, count=4):
    """Seeded sum of ``count`` low modes with weights summing to ``amplitude``."""
    rng = np.random.default_rng(seed)
    wts = rng.dirichlet(np.ones(count)) * amplitude * rng.choice([-1.0, 1.0], count)
    out = np.zeros(grid.shape)
    for wt in wts:
        if grid.kind == "sphere2_axisym":
            factors = [("P", int(rng.integers(1, 5)))]
        else:
            factors = [(str(rng.choice(["sin", "cos"])), int(rng.integers(1, 3))) for _ in range(grid.n)]
        out += wt * _mode_field(grid, factors)
    return out


def parse_config(text, source="<string>", base_dir=None) -> RunConfig:
    values = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{source}:{lineno}: expected 'section.key = value'")
        key, val = (s.strip() for s in line.split("=", 1))
        if key not in SCHEMA:
            raise ConfigError(f"{source}:{lineno}: unknown key {key!r}")
        if key in values:
            raise ConfigError(f"{source}:{lineno}: duplicate key {key!r}")
        try:
            values[key] = SCHEMA[key](val)
        except ValueError as exc:
            raise ConfigError(f"{source}:{lineno}: bad value for {key}: {exc}") from exc
    for req in ("warping.family", "warping.a", "warping.b", "fiber.kind"):
        if req not in values:
            raise ConfigError(f"{source}: missing required key {req!r}")
    cfg = RunConfig({**DEFAULTS, **values}, source, Path(base_dir) if base_dir else Path.cwd())
    # build everything once so errors surface before any computation
    grid = cfg.grid()
    cfg.warping()
    cfg.flow()
    cfg.initial(grid)
    return cfg


def load_config(path) -> RunConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc}") from exc
    return parse_config(text, str(path), path.parent)
