"""Overlaps and phases extracted from trajectories, plus perturbative estimates.

Conventions (hbar = 1):

    O(t)  = <psi(t)|psi(0)>            Phi   = arg O
    O0(t) = <psi(t)|psi^(0)(t)>        phi   = unwrapped arg O0

so that |psi(t)> ~ e^{-i phi} |psi^(0)(t)> gives a positive phi for a
repulsive interaction.  Transverse ground-state energies (omega_perp per
atom) never enter the longitudinal simulation and are added analytically.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize_scalar

from . import analytic
from .basis import eigenfunctions, excited_relative_state, relative_basis
from .dynamics import (Trajectory, cm_overlap_series, overlap_initial_series,
                       overlap_pair_series)
from .errors import (AccuracyError, ContractError, DomainError, PhaseUndefinedError)
from .model import TWO_PI, GateSchedule, TrapParams, effective_1d_coupling

PHASE_MIN_OVERLAP = 0.5
DELTA_E_FLAG = 0.3  # max Delta E / hbar omega above which first order is suspect
FLAG_PERTURBATIVE = "perturbative regime violated"


@dataclass(frozen=True)
class PhaseRecord:
    t: float
    O_abs: float
    O0_abs: float
    phi_coll: float
    phi_kin_a: float
    phi_kin_b: float
    Phi_total: float


def _index(traj: Trajectory, t: float):
    if t < -1e-12 or t > traj.t_end * (1 + 1e-12) + 1e-12:
        raise ContractError(f"t = {t} outside trajectory [0, {traj.t_end}]")
    i = int(np.argmin(np.abs(traj.times - t)))
    return i if abs(traj.times[i] - t) <= 1e-12 * max(1.0, t) else None


def overlap_with_initial(traj: Trajectory, t: float) -> complex:
    """O(psi, t); for bb runs the analytic CM factor is included."""
    i = _index(traj, t)
    psi_t = traj.state_at(t if i is None else traj.times[i])
    val = complex(np.vdot(psi_t, traj.initial))
    if traj.kind == "bb":
        val *= analytic.cm_overlap(traj.params, t)
    return val


def overlap_interacting_vs_free(traj: Trajectory, free_traj: Trajectory, t: float) -> complex:
    """O0(psi, t).  The CM motion is identical in both runs and drops out."""
    if traj.kind != free_traj.kind or traj.bases != free_traj.bases:
        raise ContractError("trajectories must share kind and basis")
    return complex(np.vdot(traj.amps_at(t), free_traj.amps_at(t)))


def overlap_series(traj: Trajectory, free_traj: Trajectory | None = None):
    """(O(t), O0(t)) sampled on the trajectory grid."""
    O = overlap_initial_series(traj) * cm_overlap_series(traj)
    O0 = overlap_pair_series(traj, free_traj) if free_traj is not None else None
    return O, O0


def collisional_phase(traj: Trajectory, free_traj: Trajectory, *,
                      min_overlap: float = PHASE_MIN_OVERLAP) -> np.ndarray:
    """Unwrapped arg O0(t) on the trajectory grid."""
    O0 = overlap_pair_series(traj, free_traj)
    low = np.abs(O0) < min_overlap
    if np.any(low):
        k = int(np.argmax(low))
        raise PhaseUndefinedError(
            f"|O0| = {abs(O0[k]):.3g} < {min_overlap} at t/T_osc = {traj.times[k] / TWO_PI:.4g}")
    return np.unwrap(np.angle(O0))


# -- perturbative estimates ----------------------------------------------------

def energy_shift_bb(params: TrapParams, t):
    """First-order energy shift g |psi_rel^(0)(0, t)|^2 of the free bb state.

    Delta E(t) = a_s omega_perp sqrt(8 Omega / pi) exp(-2 Omega x0^2 cos^2 wt).
    """
    Om = analytic.breathing_width(params, t)
    c = np.cos(params.omega * np.asarray(t, dtype=float))
    return params.a_bb * params.omega_perp * np.sqrt(8 * Om / math.pi) * np.exp(
        -2 * Om * params.x0**2 * c**2)


def max_energy_shift(params: TrapParams) -> tuple[float, float]:
    """(t*, max Delta E) over a period; the maximum sits at the first collision."""
    T = TWO_PI / params.omega
    res = minimize_scalar(lambda t: -energy_shift_bb(params, t), bounds=(0.15 * T, 0.35 * T),
                          method="bounded", options={"xatol": 1e-10})
    return float(res.x), float(-res.fun)


def integrated_energy_shift(params: TrapParams, n_samples: int = 4096) -> float:
    """int_0^T Delta E dt (periodic trapezoid rule, spectrally accurate)."""
    T = TWO_PI / params.omega
    t = np.arange(n_samples) * (T / n_samples)
    return float(np.sum(energy_shift_bb(params, t)) * T / n_samples)


def perturbative_phase_period(params: TrapParams) -> float:
    """Saddle-point phase per period, 4 a_s omega_perp / sqrt(x0^2 w^2 - a0^2 w0^2 / 4)."""
    arg = params.x0**2 * params.omega**2 - params.a0**2 * params.omega0**2 / 4
    if arg <= 0:
        raise DomainError("x0^2 omega^2 must exceed a0^2 omega0^2 / 4 (collision velocity "
                          "condition); the saddle-point phase is undefined")
    return 4 * params.a_bb * params.omega_perp / math.sqrt(arg)


def perturbative_phase_excited(params: TrapParams, n: int, *, n_max: int = 80,
                               n_samples: int = 2048, rtol: float = 1e-6) -> float:
    """First-order phase per period for the n-th excited separated-well state.

    The state is projected on the relative basis and evolved freely (exact
    phases), and g |psi(0, t)|^2 is integrated over one period.
    """
    if n < 0:
        raise DomainError("excitation index must be >= 0")
    basis = relative_basis(params, n_max)
    _, coeffs = excited_relative_state(n, params, basis)
    g = effective_1d_coupling(params, "bb")
    v = eigenfunctions(basis, np.array(0.0)) * coeffs.amps

    def integral(m):
        t = np.arange(m) * (TWO_PI / params.omega / m)
        psi0 = np.exp(-1j * np.outer(t, basis.energies)) @ v
        return g * float(np.sum(np.abs(psi0) ** 2)) * (TWO_PI / params.omega / m)

    coarse, fine = integral(n_samples), integral(2 * n_samples)
    if abs(fine - coarse) > rtol * max(abs(fine), 1e-300):
        raise AccuracyError(f"time quadrature not converged ({coarse:.10g} vs {fine:.10g})")
    return fine


def constant_velocity_phase(params: TrapParams, v: float, per: str = "collision") -> float:
    """Phase 2 a_s omega_perp / v of a single straight-line flyby; per='period' doubles it."""
    if not v > 0:
        raise DomainError("relative speed must be positive")
    phi = 2 * params.a_bb * params.omega_perp / v
    if per == "period":
        return 2 * phi
    if per != "collision":
        raise ContractError("per must be 'collision' or 'period'")
    return phi


def validity_ratio(params: TrapParams) -> float:
    """a0 omega0 / (4 x0 omega): small when the collision speed is nearly constant."""
    return params.a0 * params.omega0 / (4 * params.x0 * params.omega)


def kinematic_phases(params: TrapParams, N) -> tuple[float, float]:
    """(phi_a, phi_b) = N pi (omega0 + 2 omega_perp) / omega, N pi (omega + 2 omega_perp) / omega.

    Only valid for gate times that are whole trap periods; ``N`` may be a
    GateSchedule, which must then have is_integer_periods.
    """
    if isinstance(N, GateSchedule):
        if not N.is_integer_periods:
            raise ContractError("kinematic closed forms need tau = N T_osc; compute phi_kin "
                                "numerically as Phi - phi_coll for other gate times")
        N = N.n_periods
    if abs(N - round(N)) > 1e-12:
        raise ContractError(f"N = {N} is not an integer number of periods")
    w = params.omega
    return (N * math.pi * (params.omega0 + 2 * params.omega_perp) / w,
            N * math.pi * (w + 2 * params.omega_perp) / w)


def transverse_phase(params: TrapParams, t, atoms: int = 2):
    """Ground-state transverse phase omega_perp t per atom (two transverse directions)."""
    return atoms * params.omega_perp * np.asarray(t, dtype=float)


# -- period shift ----------------------------------------------------------------

def recurrence_shift(traj: Trajectory, k: int = 1) -> float:
    """delta t / T_osc: displacement of the k-th full revival of |O(t)| from k T_osc.

    The peak is located on the sampled grid and refined by a parabola
    through the three highest samples.
    """
    T = TWO_PI / traj.params.omega
    if k * T + 0.25 * T > traj.t_end:
        raise ContractError("trajectory too short for the requested revival")
    O = np.abs(overlap_initial_series(traj) * cm_overlap_series(traj))
    win = np.flatnonzero(np.abs(traj.times - k * T) <= 0.25 * T)
    i = win[np.argmax(O[win])]
    y0, y1, y2 = O[i - 1], O[i], O[i + 1]
    denom = y0 - 2 * y1 + y2
    shift = 0.5 * (y0 - y2) / denom if denom != 0 else 0.0
    dt = traj.times[1] - traj.times[0]
    t_peak = traj.times[i] + shift * dt
    return float((t_peak - k * T) / T / k)


# -- bundles -------------------------------------------------------------------

def phase_records(traj: Trajectory, free_traj: Trajectory) -> list[PhaseRecord]:
    """PhaseRecord per grid time (longitudinal and transverse phases combined)."""
    O, O0 = overlap_series(traj, free_traj)
    phi = collisional_phase(traj, free_traj, min_overlap=0.0)
    Phi = np.unwrap(np.angle(O))
    out = []
    for i, t in enumerate(traj.times):
        n = t / TWO_PI * traj.params.omega
        pa, pb = (kinematic_phases(traj.params, round(n)) if abs(n - round(n)) < 1e-9
                  else (math.nan, math.nan))
        out.append(PhaseRecord(float(t), float(abs(O[i])), float(abs(O0[i])), float(phi[i]),
                               pa, pb, float(Phi[i] + transverse_phase(traj.params, t))))
    return out


def phase_decomposition_residual(traj: Trajectory, free_traj: Trajectory) -> float:
    """[Phi - phi_coll - sum of kinematic phases] mod 2 pi at tau, mapped to (-pi, pi]."""
    rec = phase_records(traj, free_traj)[-1]
    if math.isnan(rec.phi_kin_a):
        raise ContractError("decomposition check needs tau = N T_osc")
    kin = 2 * rec.phi_kin_b if traj.kind == "bb" else rec.phi_kin_a + rec.phi_kin_b
    r = rec.Phi_total - rec.phi_coll - kin
    return float(math.remainder(r, TWO_PI))


def flags(params: TrapParams) -> list[str]:
    out = []
    if max_energy_shift(params)[1] / params.omega > DELTA_E_FLAG:
        out.append(FLAG_PERTURBATIVE)
    return out


def summary(traj: Trajectory, free_traj: Trajectory) -> dict:
    """Summary dict: phi_coll, phi_a, phi_b, O0_abs, flags (+ a few diagnostics)."""
    rec = phase_records(traj, free_traj)[-1]
    return {
        "kind": traj.kind,
        "t_over_Tosc": rec.t / TWO_PI,
        "phi_coll": rec.phi_coll,
        "phi_coll_over_pi": rec.phi_coll / math.pi,
        "phi_a": None if math.isnan(rec.phi_kin_a) else rec.phi_kin_a,
        "phi_b": None if math.isnan(rec.phi_kin_b) else rec.phi_kin_b,
        "O_abs": rec.O_abs,
        "O0_abs": rec.O0_abs,
        "norm_drift_per_period": float(traj.meta.get("drift_per_period", 0.0)),
        "max_tail": float(traj.meta.get("max_tail", 0.0)),
        "flags": flags(traj.params),
    }


def summary_json(traj: Trajectory, free_traj: Trajectory) -> str:
    return json.dumps(summary(traj, free_traj), indent=2, sort_keys=True)

