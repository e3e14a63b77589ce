import math

import numpy as np
import pytest

from beltgap.model import (
    BeltParams,
    ParameterError,
    PhysicalParams,
    SupercriticalSpeedError,
    belt_params_from_mapping,
    nondimensionalize,
    read_config,
    validate,
)


def test_nondimensionalize_zero_stiffness_zero_speed():
    p = PhysicalParams(linear_density=1, tension=1, base_stiffness=0,
                       sigma=0, period=2 * math.pi, speed=0)
    bp = nondimensionalize(p, M=0)
    assert bp == BeltParams(v=0, s=0, sigma=0, M=0)


def test_nondimensionalize_unit_reciprocal_density():
    # period = 2 pi makes phi = 1, so s = S0 / P directly
    p = PhysicalParams(1, 1, 0.1, 0.5, 2 * math.pi, 0.5)
    bp = nondimensionalize(p, M=3)
    assert bp.v == pytest.approx(0.5, abs=1e-15)
    assert bp.s == pytest.approx(0.1, abs=1e-15)
    assert bp.sigma == 0.5
    assert bp.M == 3


def test_nondimensionalize_wave_speed():
    # rho = 4, P = 1 -> c = 0.5, so V = 0.25 gives v = 0.5
    p = PhysicalParams(4, 1, 0.1, 0.2, 2 * math.pi, 0.25)
    bp = nondimensionalize(p)
    assert bp.v == pytest.approx(0.5, rel=1e-14)
    # direct evaluation of the definitions as an independent check
    c = math.sqrt(1 / 4)
    phi = 2 * math.pi / (2 * math.pi)
    assert bp.v == pytest.approx(0.25 / c, rel=1e-14)
    assert bp.s == pytest.approx(0.1 / (phi ** 2 * 1), rel=1e-14)


def test_nondimensionalize_rejects_supercritical():
    p = PhysicalParams(1, 1, 0.1, 0.2, 2 * math.pi, 1.0)
    with pytest.raises(SupercriticalSpeedError):
        nondimensionalize(p)


@pytest.mark.parametrize("field,value", [
    ("linear_density", 0.0), ("linear_density", -1.0),
    ("tension", 0.0), ("period", 0.0), ("base_stiffness", -0.1),
])
def test_physical_params_reject_bad_values(field, value):
    kwargs = dict(linear_density=1.0, tension=1.0, base_stiffness=0.1,
                  sigma=0.2, period=1.0, speed=0.1)
    kwargs[field] = value
    with pytest.raises(ParameterError):
        PhysicalParams(**kwargs)


def test_scale_invariance():
    # multiplying (rho, P, S0) by a common factor leaves (v, s) unchanged;
    # note S0 must scale with P since s = S0 / (phi^2 P)
    rng = np.random.RandomState(7)
    for _ in range(25):
        rho, tension, s0 = rng.uniform(0.1, 5, size=3)
        period = rng.uniform(0.5, 10)
        speed = rng.uniform(0, 0.9) * math.sqrt(tension / rho)
        lam = rng.uniform(0.1, 20)
        a = nondimensionalize(PhysicalParams(rho, tension, s0, 0.3, period, speed))
        b = nondimensionalize(PhysicalParams(lam * rho, lam * tension, lam * s0,
                                             0.3, period, speed))
        assert b.v == pytest.approx(a.v, rel=1e-12)
        assert b.s == pytest.approx(a.s, rel=1e-12)


def test_s_monotone_in_period():
    periods = np.linspace(0.5, 20, 30)
    ss = [nondimensionalize(PhysicalParams(1, 1, 0.1, 0, p, 0)).s for p in periods]
    assert np.all(np.diff(ss) > 0)
    # quadratic growth: s proportional to period^2
    assert ss[-1] / ss[0] == pytest.approx((periods[-1] / periods[0]) ** 2, rel=1e-12)


def test_validate_paper_parameter_set():
    report = validate(BeltParams(0.5, 0.1, 0.5, 3))
    assert report.ok
    assert report.warnings == ()


def test_validate_critical_speed_hard():
    report = validate(BeltParams(1.0, 0.1, 0.0, 1))
    assert not report.ok
    assert any("critical" in msg for msg in report.hard_violations)


def test_validate_truncation_warning():
    report = validate(BeltParams(0.5, 1.5, 0.5, 3))
    assert report.ok
    assert any("s = 1.5" in msg for msg in report.warnings)


def test_validate_m0_with_modulation_warns():
    report = validate(BeltParams(0.2, 0.1, 0.3, 0))
    assert report.ok
    assert any("M = 0" in msg for msg in report.warnings)


def test_belt_params_reject_bad_truncation():
    with pytest.raises(ParameterError):
        BeltParams(0.1, 0.1, 0.1, -1)
    with pytest.raises(ParameterError):
        BeltParams(0.1, 0.1, 0.1, 1.5)
    with pytest.raises(ParameterError):
        BeltParams(float("nan"), 0.1, 0.1, 1)


def test_read_config_text(tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("# a comment\nv = 0.5\ns = 0.1\nsigma = 0.5\nM = 3\n")
    bp = belt_params_from_mapping(read_config(cfg))
    assert bp == BeltParams(0.5, 0.1, 0.5, 3)


def test_read_config_physical_keys(tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("rho = 1\ntension = 1\nstiffness = 0.1\nsigma = 0.5\n"
                   f"period = {2 * math.pi}\nspeed = 0.5\nM = 2\n")
    bp = belt_params_from_mapping(read_config(cfg))
    assert bp.v == pytest.approx(0.5)
    assert bp.s == pytest.approx(0.1)
    assert bp.M == 2


def test_read_config_rejects_unknown_key(tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("vv = 0.5\n")
    with pytest.raises(ParameterError):
        read_config(cfg)


def test_read_config_incomplete_physical_set(tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("rho = 1\ntension = 1\n")
    with pytest.raises(ParameterError):
        belt_params_from_mapping(read_config(cfg))
