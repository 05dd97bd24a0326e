import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from collgate.errors import ContractError, DomainError
from collgate.model import (HBAR, KB, PRESETS, RB87_MASS, TWO_PI, GateSchedule, SeparatedWellWarning,
                            SITrap, TrapParams, effective_1d_coupling, load_config,
                            params_from_mapping, parse_config_text, potential_va, potential_vb,
                            preset, temperature_kelvin, time_seconds, to_dimensionless, to_si)


def test_preset_length_unit(base):
    assert base.length_unit_m == pytest.approx(82.2e-9, abs=0.5e-9)


def test_preset_dimensionless_values(base):
    assert base.omega0 == 2.0
    assert base.x0 == 5.0
    assert base.omega_perp == pytest.approx(150 / 17.23)
    assert base.a_bb == pytest.approx(5.1e-9 / base.length_unit_m)
    assert base.a_ab == base.a_bb


def test_schedule_default_seven_periods():
    s = preset("paper-fig2")[1]
    assert s.n_periods == 7
    assert s.tau_internal == pytest.approx(7 * TWO_PI)


def test_coupling_is_twice_a_times_omega_perp(base):
    assert effective_1d_coupling(base, "bb") == pytest.approx(2 * base.a_bb * base.omega_perp)
    assert effective_1d_coupling(base, "aa") == 0.0


def test_temperature_mapping(base):
    # k_B T = 2 hbar omega0 with omega0 = 2 omega
    expect = 2 * HBAR * 2 * TWO_PI * 17.23e3 / KB
    assert temperature_kelvin(2.0, base) == pytest.approx(expect)
    assert temperature_kelvin(2.0, base) * 1e6 == pytest.approx(3.3, abs=0.1)
    assert time_seconds(TWO_PI, base) == pytest.approx(1 / 17.23e3)


def test_si_requires_anchors():
    with pytest.raises(ContractError):
        temperature_kelvin(1.0, TrapParams())


@settings(max_examples=50, deadline=None)
@given(st.floats(1.5, 4.0), st.floats(3.5, 8.0), st.floats(0.0, 0.2), st.floats(1.0, 20.0))
def test_si_roundtrip(w0, x0, a, wp):
    p = TrapParams(omega0=w0, x0=x0, a_bb=a, a_ab=a / 2, omega_perp=wp,
                   mass_si=RB87_MASS, omega_si=TWO_PI * 1e4)
    q = to_dimensionless(to_si(p))
    for k in ("omega0", "x0", "a_bb", "a_ab", "omega_perp"):
        assert getattr(q, k) == pytest.approx(getattr(p, k), rel=1e-12, abs=1e-15)


@pytest.mark.parametrize("kw", [dict(omega0=-1), dict(x0=-1), dict(omega=2.0), dict(a_bb=math.nan),
                                dict(omega_perp=-1)])
def test_invalid_params(kw):
    with pytest.raises(DomainError):
        TrapParams(**kw)


def test_overlapping_wells_warn():
    with pytest.warns(SeparatedWellWarning):
        TrapParams(x0=1.0)


def test_potentials_switch(base):
    s = GateSchedule(n_periods=1)
    x = 1.3
    assert potential_vb(x, 1.0, base, s) == pytest.approx(0.5 * x * x)
    assert potential_vb(x, -1.0, base, s) == pytest.approx(potential_va(x, base))
    assert potential_vb(x, 2 * TWO_PI, base, s) == pytest.approx(potential_va(x, base))


def test_config_parse_and_errors(tmp_path):
    cfg = parse_config_text("# comment\nomega0_ratio = 3\nn_periods = 2  # trailing\n")
    assert cfg == {"omega0_ratio": 3.0, "n_periods": 2}
    with pytest.raises(ContractError):
        parse_config_text("bogus = 1")
    with pytest.raises(ContractError):
        parse_config_text("x0_over_ax = abc")
    with pytest.raises(ContractError):
        parse_config_text("x0_over_ax 4")
    f = tmp_path / "c.cfg"
    f.write_text("x0_over_ax = 4\n")
    assert load_config(f) == {"x0_over_ax": 4.0}


def test_params_from_mapping_dimensionless():
    p, s = params_from_mapping({"omega0_ratio": 3.0, "a_bb_over_ax": 0.05, "n_periods": 3})
    assert (p.omega0, p.a_bb, p.a_ab, s.n_periods) == (3.0, 0.05, 0.05, 3)


def test_params_from_mapping_si_incomplete():
    with pytest.raises(ContractError):
        params_from_mapping({"mass_kg": RB87_MASS})


def test_unknown_preset():
    with pytest.raises(ContractError):
        preset("nope")
    assert "paper-fig2" in PRESETS


def test_si_trap_validation():
    with pytest.raises(DomainError):
        to_dimensionless(SITrap(RB87_MASS, -1.0, 1.0, 1.0, 1.0, 0.0, 0.0))
