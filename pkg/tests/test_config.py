import numpy as np
import pytest

from grwflow.config import load_config, parse_config, parse_modes
from grwflow.errors import ConfigError
from grwflow.fiber import FiberGrid

BASE = """
warping.family = gaussian
warping.a = -1
warping.b = 3
fiber.kind = torus2
fiber.resolution = 8
initial.slice = 0.5
"""


def test_parse_defaults_and_types():
    cfg = parse_config(BASE + "flow.cfl = 0.1\nverify.resolutions = 16, 32\n# comment\n")
    assert cfg["flow.cfl"] == 0.1
    assert cfg["verify.resolutions"] == (16, 32)
    assert cfg["verify.markers"] == 64
    assert cfg.flow().cfl == 0.1
    assert cfg.grid().shape == (8, 8)


@pytest.mark.parametrize("extra,msg", [
    ("flow.bogus = 1", "unknown key"),
    ("flow.cfl = fast", "bad value"),
    ("flow.cfl = 2.0", "cfl"),
    ("initial.slice = 0.7", "duplicate"),
    ("just text", "expected"),
    ("initial.modes = 0.1*sin(1)", "sin/cos"),
    ("initial.modes = banana", "cannot parse"),
    ("initial.file = /nonexistent/rho.txt", "cannot read"),
])
def test_bad_configs(extra, msg):
    with pytest.raises(ConfigError, match=msg):
        parse_config(BASE + extra + "\n")


def test_missing_required_and_custom_family():
    with pytest.raises(ConfigError, match="missing"):
        parse_config("warping.family = gaussian\n")
    with pytest.raises(ConfigError, match="custom"):
        parse_config(BASE.replace("gaussian", "custom"))


def test_modes_build_expected_field():
    cfg = parse_config(BASE + "initial.modes = 0.2*sin(1)*cos(2); -0.1*cos(0)*sin(1)\n")
    g = cfg.grid()
    x, y = g.coords
    np.testing.assert_allclose(cfg.initial(g), 0.5 + 0.2 * np.sin(x) * np.cos(2 * y) - 0.1 * np.sin(y),
                               atol=1e-15)


def test_sphere_legendre_modes():
    g = FiberGrid("sphere2_axisym", 16)
    [(amp, fac)] = parse_modes("0.3*P(2)", g)
    assert amp == 0.3 and fac == [("P", 2)]
    with pytest.raises(ConfigError):
        parse_modes("0.3*sin(1)", g)


def test_random_data_is_seeded():
    text = BASE + "initial.random = 0.1\nrun.seed = 7\n"
    a = parse_config(text)
    b = parse_config(text)
    c = parse_config(text.replace("= 7", "= 8"))
    g = a.grid()
    np.testing.assert_array_equal(a.initial(g), b.initial(g))
    assert not np.array_equal(a.initial(g), c.initial(g))
    assert np.max(np.abs(a.initial(g) - 0.5)) <= 0.1 + 1e-15


def test_profile_file_in_c_order(tmp_path):
    g = FiberGrid("torus2", (4, 8))
    vals = 0.5 + 0.01 * np.arange(32)
    (tmp_path / "rho.txt").write_text("\n".join("%.17g" % x for x in vals))
    text = BASE.replace("fiber.resolution = 8", "fiber.resolution = 4").replace("initial.slice = 0.5", "")
    (tmp_path / "c.cfg").write_text(text + "initial.file = rho.txt\n")
    with pytest.raises(ConfigError, match="values"):
        load_config(tmp_path / "c.cfg")
    g = FiberGrid("torus2", 4)
    (tmp_path / "rho.txt").write_text(" ".join("%.17g" % x for x in vals[:16]))
    cfg = load_config(tmp_path / "c.cfg")
    rho = cfg.initial(cfg.grid())
    assert rho[0, 1] == vals[1] and rho[1, 0] == vals[4]
