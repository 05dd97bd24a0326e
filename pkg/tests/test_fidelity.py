import math

import numpy as np
import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st

from collgate import fidelity as fd
from collgate.errors import ContractError, DomainError
from collgate.model import GateSchedule

unit = st.floats(0.0, 1.0)
angle = st.floats(-2 * math.pi, 2 * math.pi)


def _psd(A, B, C, phi):
    return np.linalg.eigvalsh(fd.gram_matrix(A, B, C, phi)).min() >= -1e-12


def _brute_min(G, n=60):
    """Minimum of w^T G w on a barycentric lattice of the simplex."""
    best = math.inf
    for i in range(n + 1):
        for j in range(n + 1 - i):
            for k in range(n + 1 - i - j):
                w = np.array([i, j, k, n - i - j - k]) / n
                best = min(best, w @ G @ w)
    return best


@settings(max_examples=15, deadline=None)
@given(unit, unit, unit, angle)
def test_simplex_minimum_against_lattice(A, B, C, phi):
    G = fd.gram_matrix(A, B, C, phi)
    exact, w = fd._simplex_min(G)
    assert w.sum() == pytest.approx(1.0) and np.all(w >= 0)
    assert exact == pytest.approx(w @ G @ w, abs=1e-12)
    lattice = _brute_min(G, 40)
    assert exact <= lattice + 1e-12
    assert lattice - exact < 0.02


@settings(max_examples=200, deadline=None)
@given(unit, angle)
def test_specialization_identity(C, phi):
    """A = 1, B = C reduces the full minimum fidelity to (1 - C^2 cos phi) / 2."""
    assert fd.fidelity_full(1.0, C, C, phi) == pytest.approx(fd.fidelity_simple(C * C, phi), abs=1e-12)


@settings(max_examples=200, deadline=None)
@given(unit, unit, unit, angle)
def test_fidelity_in_unit_interval(A, B, C, phi):
    assume(_psd(A, B, C, phi))
    F = fd.fidelity_full(A, B, C, phi)
    assert 0.0 <= F <= 1.0


def test_perfect_gate():
    assert fd.fidelity_full(1.0, 1.0, 1.0, math.pi) == pytest.approx(1.0)
    assert fd.fidelity_full(1.0, 1.0, 1.0, 0.0) == pytest.approx(0.0, abs=1e-12)


def test_closed_form_matches_interior_minimum():
    hits = 0
    rng = np.random.default_rng(3)
    for _ in range(400):
        A, B, C = rng.uniform(0.85, 0.999, 3)
        phi = rng.uniform(0.8 * math.pi, 1.2 * math.pi)
        F, w = fd.fidelity_full(A, B, C, phi, return_state=True)
        if np.all(w > 1e-6):
            hits += 1
            assert fd.fidelity_closed_form(A, B, C, phi) == pytest.approx(F, rel=1e-9)
    assert hits > 20


def test_contract_and_domain_errors():
    with pytest.raises(ContractError):
        fd.fidelity_full(1.2, 1.0, 1.0, 0.0)
    with pytest.raises(ContractError):
        fd.fidelity_simple(-0.1, 0.0)
    with pytest.raises(DomainError):
        fd.boltzmann_gamma(-1.0)
    with pytest.raises(DomainError):
        fd.thermal_weights(1.0, 0)
    with pytest.raises(ContractError):
        fd.fidelity_thermal([(1.0, 0.0)], 1.0)
    with pytest.raises(DomainError):
        fd.GatePhases(0.0, math.inf, 0.0)


def test_gate_unitary_residue():
    p = fd.GatePhases(phi_a=0.3, phi_b=1.1, phi_bb=math.pi)
    U, chi = fd.gate_unitary(p)
    assert np.allclose(np.abs(U), 1)
    assert chi == pytest.approx(-math.pi)
    assert p.quality_residue == pytest.approx(0.0, abs=1e-12)
    # single-qubit phases drop out of chi
    q = fd.GatePhases(phi_a=2.0, phi_b=-0.4, phi_bb=math.pi)
    assert q.chi == pytest.approx(chi)


@pytest.mark.parametrize("kT", [0.0, 0.3, 1.0, 2.0, 10.0])
def test_thermal_weights_normalized(kT):
    P = fd.thermal_weights(kT)
    assert P.sum() == pytest.approx(1.0, abs=1e-14)
    assert np.all(np.diff(P) <= 0)


def test_gamma_seventh_power():
    assert fd.boltzmann_gamma(2.0) ** 7 == pytest.approx(0.030, abs=0.001)


def test_thermal_expansion_and_limits():
    per_n = [(0.97 - 0.01 * n, math.pi * (1 + 0.02 * n)) for n in range(7)]
    full0, exp0 = fd.fidelity_thermal(per_n, 0.0)
    X0 = per_n[0][0] * math.cos(per_n[0][1])
    assert full0 == exp0 == pytest.approx(0.5 * (1 - X0))
    full, exp_ = fd.fidelity_thermal(per_n, 0.2)
    assert full == pytest.approx(exp_, abs=1e-3)
    # identical excited-state data: temperature has no effect
    same = [per_n[0]] * 7
    assert fd.fidelity_thermal(same, 2.0)[0] == pytest.approx(full0)


def test_zero_temperature_pipeline(bb_gate):
    A, B, C, phi = fd.overlap_roots(*bb_gate)
    assert A == pytest.approx(1.0, abs=1e-8)
    F = fd.fidelity_full(A, B, C, phi)
    assert F == pytest.approx(0.99, abs=0.01)
    rep = fd.fidelity_report(*bb_gate)
    assert rep.F0 == F
    assert '"F0"' in rep.to_json()


def test_thermal_pipeline(base, tmp_path):
    per_n = fd.excited_phase_data(base, GateSchedule(), n_cut=6, jobs=4)
    assert len(per_n) == 7
    # the ground-state row matches the N_max = 80 zero-temperature run
    from collgate.basis import initial_coeffs_same, relative_basis
    from collgate.dynamics import free_trajectory, propagate_same
    tr = propagate_same(initial_coeffs_same(base, relative_basis(base, fd.THERMAL_N_MAX)), base)
    rep = fd.fidelity_report(tr, free_trajectory(tr), per_n, [0.0, 2.0])
    assert rep.FT[0][2] == pytest.approx(rep.F0, abs=1e-12)
    assert rep.FT[1][2] == pytest.approx(0.96, abs=0.02)
    f = tmp_path / "t.csv"
    fd.write_thermal_csv(f, rep.FT)
    lines = f.read_text().splitlines()
    assert lines[0].startswith("# collgate thermal csv v1")
    assert lines[1] == ",".join(fd.THERMAL_CSV_COLUMNS)
    assert len(lines) == 4
