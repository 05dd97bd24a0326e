import json
import math

import numpy as np
import pytest

from collgate import analytic, oracle
from collgate.errors import ContractError, DomainError
from collgate.model import TWO_PI


def test_regularized_delta_is_normalized():
    u = np.linspace(-5, 5, 20001)
    for s in (0.05, 0.2):
        assert np.sum(oracle.regularized_delta(u, s)) * (u[1] - u[0]) == pytest.approx(1.0, abs=1e-10)


def test_richardson_exact_for_quadratic_in_sigma2():
    s = np.array([0.1, 0.05, 0.025])
    v = 2.0 + 3.0 * s**2 - 7.0 * s**4
    est, _ = oracle.richardson_sigma2(s, v)
    assert est == pytest.approx(2.0, abs=1e-12)
    est2, err2 = oracle.richardson_sigma2(s[:2], 2.0 + 3.0 * s[:2] ** 2)
    assert est2 == pytest.approx(2.0) and err2 == 0.0


@pytest.mark.parametrize("t", [0.7, math.pi / 2, math.pi, 4.0])
def test_free_grid_matches_closed_form(base, t):
    init = oracle.initial_grid_same(base, n=1024)
    psi_t = oracle.grid_propagate(init, base, t, coupling=0.0).final
    O = psi_t.inner(init)
    assert abs(O - analytic.rel_overlap_free(base, t)) < 1e-6


def test_grid_phase_weak_coupling_matches_first_order(base):
    """At tiny g the phase after one period is g int |psi^(0)(0, t)|^2 dt (sigma -> 0).

    The Gaussian smears the k ~ 5 interference fringes at the collision, so
    single-sigma values are several percent low and are extrapolated.
    """
    from collgate.observables import integrated_energy_shift
    g = 2 * base.a_bb * base.omega_perp
    eps = 1e-3
    sigmas = (0.1, 0.075, 0.05)
    vals = []
    for s in sigmas:
        init = oracle.initial_grid_same(base, n=2048, sigma=s)
        vals.append(np.angle(oracle.grid_overlap_vs_free(init, base, TWO_PI, coupling=eps * g)) / eps)
    assert vals[0] < vals[1] < vals[2]
    est, _ = oracle.richardson_sigma2(sigmas, vals)
    assert est == pytest.approx(integrated_energy_shift(base), rel=5e-3)


def test_sigma_below_two_dx_rejected(base):
    init = oracle.initial_grid_same(base, n=512, sigma=0.01)
    with pytest.raises(ContractError):
        oracle.grid_propagate(init, base, 0.1)


def test_coarse_dt_rejected(base):
    init = oracle.initial_grid_same(base, n=2048)
    with pytest.raises(ContractError):
        oracle.grid_propagate(init, base, 0.5, dt=0.05)


def test_small_domain_rejected(base):
    init = oracle.initial_grid_same(base, half_width=2 * base.x0 + 1.5, n=1024)
    with pytest.raises(DomainError):
        oracle.grid_propagate(init, base, 1.0, coupling=0.0)


def test_norm_and_frames(base, tmp_path):
    init = oracle.initial_grid_same(base, n=1024, sigma=0.1)
    gt = oracle.grid_propagate(init, base, 1.0, n_frames=5)
    assert len(gt.frames) == 5
    assert gt.times[0] == 0.0 and gt.times[-1] == pytest.approx(1.0)
    assert gt.meta["norm_drift"] < 1e-10
    path = tmp_path / "rho.bin"
    gt.dump_density(path)
    raw = path.read_bytes()
    head, body = raw.split(b"\n", 1)
    h = json.loads(head)
    assert (h["nx"], h["ny"], h["frames"]) == (1024, 1, 5)
    rho = np.frombuffer(body, dtype="<f8").reshape(5, 1024)
    assert np.sum(rho[-1]) * init.dx == pytest.approx(1.0, abs=1e-8)


def test_inner_shape_mismatch(base):
    a = oracle.initial_grid_same(base, n=256, sigma=0.2)
    b = oracle.initial_grid_same(base, n=512, sigma=0.2)
    with pytest.raises(ContractError):
        a.inner(b)


def test_regularization_study_needs_three_sigmas(base):
    with pytest.raises(ContractError):
        oracle.delta_regularization_study(base, sigmas=(0.1, 0.05))


@pytest.mark.slow
def test_pair_grid_against_spectral(base):
    """ab case on the (x1, x2) plane: |O(T)| extrapolated in sigma^2 vs the product-basis solver."""
    from collgate.basis import initial_coeffs_diff, pair_bases
    from collgate.dynamics import SolverSettings, overlap_initial_series, propagate_diff

    bR, br = pair_bases(base, 40, 70)
    tr = propagate_diff(initial_coeffs_diff(base, bR, br), base, t_end=TWO_PI,
                        solver=SolverSettings(samples_per_period=64, tail_tol=1e-3))
    spectral = abs(overlap_initial_series(tr)[-1])
    sig, vals = [], []
    for n in (192, 256):
        init = oracle.initial_grid_diff(base, n=n)
        vals.append(abs(oracle.grid_propagate(init, base, TWO_PI).final.inner(init)))
        sig.append(init.regularization_sigma)
    est, _ = oracle.richardson_sigma2(sig, vals)
    assert vals[1] < vals[0]  # approaches from above as sigma shrinks
    assert est == pytest.approx(spectral, abs=5e-3)
