import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from collgate.basis import (M_CM, MU_REL, ModeCoefficients, OscillatorBasis, delta_matrix_elements,
                            displaced_gaussian_coeffs, eigenfunctions, excited_relative_state,
                            gauss_hermite, hermite_functions, initial_coeffs_diff,
                            initial_coeffs_same, pair_bases, pair_offsets, project, psi0_rel,
                            relative_basis)
from collgate.errors import ContractError, DomainError
from collgate.model import SeparatedWellWarning, TrapParams


def test_hermite_functions_orthonormal():
    xi, w = gauss_hermite(200)
    H = hermite_functions(120, xi)
    G = (H * w) @ H.T
    assert np.max(np.abs(G - np.eye(121))) < 1e-12


def test_hermite_low_orders():
    x = np.linspace(-3, 3, 7)
    H = hermite_functions(2, x)
    g = math.pi ** -0.25 * np.exp(-x * x / 2)
    assert np.allclose(H[0], g)
    assert np.allclose(H[1], math.sqrt(2) * x * g)
    assert np.allclose(H[2], (2 * x * x - 1) / math.sqrt(2) * g)


def test_eigenfunctions_normalized_in_x():
    b = OscillatorBasis(1.0, MU_REL, 0.7, 30)
    x = np.linspace(-40, 40, 40001)
    phi = eigenfunctions(b, x)
    G = phi @ phi.T * (x[1] - x[0])
    assert np.max(np.abs(G - np.eye(31))) < 1e-10


@settings(max_examples=30, deadline=None)
@given(st.floats(0.5, 4.0), st.floats(-6.0, 6.0), st.sampled_from([MU_REL, 1.0, M_CM]))
def test_displaced_gaussian_closed_form_matches_quadrature(W, d, mass):
    b = OscillatorBasis(1.0, mass, 0.0, 90)
    c = displaced_gaussian_coeffs(b, W, d)
    f = lambda x: (mass * W / math.pi) ** 0.25 * np.exp(-mass * W * (x - d) ** 2 / 2)  # noqa: E731
    q = project(b, f, n_nodes=400)
    assert np.max(np.abs(c - q)) < 1e-10


def test_initial_same_parity_and_norm(base):
    c = initial_coeffs_same(base, relative_basis(base, 80))
    assert np.all(c.amps[1::2] == 0)
    # lobes of psi_rel are normalized separately; cross term exp(-2 w0 x0^2)-small
    assert c.norm == pytest.approx(1.0, abs=1e-8)
    q = project(c.basis, lambda r: psi0_rel(r, base), n_nodes=400)
    assert np.max(np.abs(q - c.amps)) < 1e-10


def test_initial_same_coherent_limit():
    with pytest.warns(SeparatedWellWarning):
        p = TrapParams(omega0=1.0, x0=0.0, a_bb=0.0)
    c = initial_coeffs_same(p, relative_basis(p, 10))
    assert c.amps[0] == pytest.approx(math.sqrt(2))
    assert np.allclose(c.amps[1:], 0)


def test_initial_same_rejects_pair_basis(base):
    with pytest.raises(ContractError):
        initial_coeffs_same(base, OscillatorBasis(1.0, M_CM, 0.0, 10))


@pytest.mark.parametrize("n", range(7))
def test_excited_states_normalized(base, n):
    _, c = excited_relative_state(n, base, relative_basis(base, 80))
    assert c.norm == pytest.approx(1.0, abs=1e-6)
    assert np.all(c.amps[1::2] == 0)


def test_delta_matrix_rank_one():
    b = OscillatorBasis(1.0, MU_REL, 0.0, 20)
    D = delta_matrix_elements(b)
    assert np.linalg.matrix_rank(D) == 1
    assert np.allclose(D[1::2], 0)


def test_pair_initial_product(base):
    bR, br = pair_bases(base, 60, 100)
    c = initial_coeffs_diff(base, bR, br)
    assert c.norm == pytest.approx(1.0, abs=1e-6)
    assert np.linalg.matrix_rank(c.amps, tol=1e-10) == 1
    R_c, r_c = pair_offsets(base)
    assert (R_c, r_c) == pytest.approx((-4.0, 8.0))


def test_mode_coefficients_json_roundtrip(base):
    c = initial_coeffs_same(base, relative_basis(base, 12))
    d = ModeCoefficients.from_json(c.to_json(), c.basis)
    assert np.array_equal(d.amps, c.amps)
    with pytest.raises(ContractError):
        ModeCoefficients.from_json(c.to_json(), c.basis.resized(5))
    with pytest.raises(ContractError):
        ModeCoefficients(c.basis, np.zeros(3))


def test_basis_validation():
    with pytest.raises(DomainError):
        OscillatorBasis(-1.0, 1.0)
    with pytest.raises(DomainError):
        OscillatorBasis(1.0, 1.0, 0.0, 2.5)
