"""Propagation of the interacting two-atom coefficient equations.

Both cases are integrated in the interaction picture of the diagonal
oscillator Hamiltonian, c' = -i e^{iEt} V e^{-iEt} c, with an adaptive
explicit Runge-Kutta scheme (DOP853).

* bb: relative coordinate only (the CM decouples), V = g |psi(0)><psi(0)|.
* ab: CM x relative product basis at frequency omega_tilde.  V holds the
  R r cross term of the asymmetric trap, the linear terms left after
  completing squares, a constant, and the contact term at r = 0.
"""

from __future__ import annotations

import csv
import logging
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import solve_ivp
from scipy.interpolate import CubicSpline

from . import analytic
from .basis import (ModeCoefficients, OscillatorBasis, PairCoefficients,
                    eigenfunctions, pair_offsets)
from .errors import ContractError, ResolutionError, SolverError, TruncationError
from .model import TWO_PI, GateSchedule, TrapParams, effective_1d_coupling

log = logging.getLogger(__name__)

CSV_COLUMNS = ("t_over_Tosc", "norm", "re_O0", "im_O0", "abs_O", "phase_coll_rad")
CSV_SCHEMA_VERSION = 1


@dataclass(frozen=True)
class SolverSettings:
    method: str = "DOP853"
    rtol: float = 1e-10
    atol: float = 1e-12
    samples_per_period: int = 512
    norm_tol: float = 1e-6  # hard failure threshold on norm drift per T_osc
    # |c_Nmax|^2 allowed at any recorded time.  None picks the per-case
    # default: the contact term feeds a power-law tail |c_n|^2 ~ n^(-5/2), so
    # the bb relative mode cannot reach 1e-8 at any practical n_max.
    tail_tol: float | None = None
    dense: bool = False


@dataclass(frozen=True, eq=False)
class Trajectory:
    """Coefficient snapshots on a time grid.

    ``times`` are internal (1/omega); ``snapshots[i]`` are interaction-picture
    amplitudes, flattened for the pair case.  ``energies`` holds the free
    phases needed to go back to the Schrodinger picture.
    """

    kind: str  # "bb" or "ab"
    params: TrapParams
    coupling: float
    times: np.ndarray
    snapshots: np.ndarray
    energies: np.ndarray
    bases: tuple
    norms: np.ndarray
    meta: dict = field(default_factory=dict)
    dense: object = None

    @property
    def t_over_tosc(self) -> np.ndarray:
        return self.times / TWO_PI

    @property
    def t_end(self) -> float:
        return float(self.times[-1])

    @property
    def initial(self) -> np.ndarray:
        return self.snapshots[0]

    def amps_at(self, t: float) -> np.ndarray:
        """Interaction-picture amplitudes at ``t`` (exact on grid, interpolated off it)."""
        if t < -1e-12 or t > self.t_end * (1 + 1e-12) + 1e-12:
            raise ContractError(f"t = {t} outside trajectory [0, {self.t_end}]")
        i = np.searchsorted(self.times, t)
        for j in (i - 1, i):
            if 0 <= j < len(self.times) and abs(self.times[j] - t) <= 1e-12 * max(1.0, abs(t)):
                return self.snapshots[j]
        if self.dense is not None:
            return self.dense(t)
        return self._spline(t)

    def _spline(self, t):
        spline = self.meta.get("_spline")
        if spline is None:
            spline = CubicSpline(self.times, self.snapshots, axis=0)
            self.meta["_spline"] = spline
        return spline(t)

    def state_at(self, t: float) -> np.ndarray:
        """Schrodinger-picture amplitudes at ``t``."""
        return np.exp(-1j * self.energies * t) * self.amps_at(t)

    def state_series(self) -> np.ndarray:
        return np.exp(-1j * np.outer(self.times, self.energies)) * self.snapshots

    def mode(self, t: float | None = None):
        """The state at ``t`` as ModeCoefficients / PairCoefficients."""
        t = self.t_end if t is None else t
        amps = self.amps_at(t)
        if self.kind == "bb":
            return ModeCoefficients(self.bases[0], amps, t=t)
        bR, br = self.bases
        return PairCoefficients(bR, br, amps.reshape(bR.size, br.size), t=t)


def _time_grid(t_end: float, samples_per_period: int) -> np.ndarray:
    n = max(1, int(math.ceil(t_end / TWO_PI * samples_per_period - 1e-9)))
    return np.linspace(0.0, t_end, n + 1)


def _integrate(rhs, y0, t_grid, solver: SolverSettings, dense: bool):
    sol = solve_ivp(rhs, (t_grid[0], t_grid[-1]), y0, method=solver.method,
                    t_eval=t_grid, rtol=solver.rtol, atol=solver.atol,
                    dense_output=dense)
    if not sol.success:
        raise SolverError(f"integrator failed: {sol.message}", {"status": sol.status})
    return sol


TAIL_TOL_DEFAULT = {"bb": 1e-4, "ab": 1e-6}
INIT_NORM_TOL = 1e-3  # a normalized initial state must be captured by the basis to this level


def _check_run(norms, tails, times, solver: SolverSettings, n_max_hint: str, kind: str):
    if abs(1.0 - norms[0]) > INIT_NORM_TOL:
        raise TruncationError(
            f"basis captures only {norms[0]:.3g} of the initial state norm; increase {n_max_hint}")
    periods = max(times[-1] / TWO_PI, 1.0)
    drift = float(np.max(np.abs(norms - norms[0])))
    if drift / periods > solver.norm_tol:
        raise SolverError(
            f"norm drift {drift:.3g} over {periods:.3g} periods exceeds {solver.norm_tol:g}/T_osc",
            {"max_drift": drift, "periods": periods, "rtol": solver.rtol, "atol": solver.atol})
    worst = float(np.max(tails))
    tol = TAIL_TOL_DEFAULT[kind] if solver.tail_tol is None else solver.tail_tol
    if worst > tol:
        raise TruncationError(
            f"truncation tail reached {worst:.3g} > {tol:g}; increase {n_max_hint}")
    return drift / periods, worst


def propagate_same(init: ModeCoefficients, params: TrapParams, schedule: GateSchedule | None = None,
                   solver: SolverSettings | None = None, *, coupling: float | None = None,
                   t_end: float | None = None, even_only: bool = True) -> Trajectory:
    """Propagate the bb relative coefficients over [0, tau].

    ``coupling`` defaults to g = 2 a_bb omega_perp.  With ``even_only`` the
    odd levels (untouched by an even initial state and an even interaction)
    are dropped from the integration and reinserted as exact zeros.
    """
    solver = solver or SolverSettings()
    g = effective_1d_coupling(params, "bb") if coupling is None else coupling
    if t_end is None:
        t_end = (schedule or GateSchedule()).tau_internal
    basis = init.basis
    E_full = basis.energies
    v_full = eigenfunctions(basis, np.array(0.0))
    keep = np.arange(basis.size)
    if even_only:
        if np.any(np.abs(init.amps[1::2]) > 1e-14):
            raise ContractError("even_only propagation needs an even initial state")
        keep = keep[::2]
    E, v = E_full[keep], v_full[keep]
    y0 = np.asarray(init.amps, dtype=complex)[keep]

    def rhs(t, y):
        ph = np.exp(1j * E * t)
        return (-1j * g) * (v * ph) * np.dot(v / ph, y)

    t_grid = _time_grid(t_end, solver.samples_per_period)
    if g == 0.0:
        ys = np.tile(y0, (len(t_grid), 1))
        sol = None
    else:
        sol = _integrate(rhs, y0, t_grid, solver, solver.dense)
        ys = sol.y.T
    dense_fn = None
    if solver.dense:
        def dense_fn(t, _s=(sol.sol if sol is not None else (lambda t: y0)), _k=keep, _n=basis.size):
            out = np.zeros(_n, dtype=complex)
            out[_k] = _s(t)
            return out
    snaps = np.zeros((len(t_grid), basis.size), dtype=complex)
    snaps[:, keep] = ys
    norms = np.einsum("ij,ij->i", snaps.conj(), snaps).real
    tails = np.abs(snaps[:, -1 if not even_only or basis.n_max % 2 == 0 else -2]) ** 2
    drift, tail = _check_run(norms, tails, t_grid, solver, "n_max", "bb")
    log.debug("bb propagation: %d samples, drift/T_osc %.2e", len(t_grid), drift)
    return Trajectory("bb", params, g, t_grid, snaps, E_full, (basis,), norms,
                      meta={"drift_per_period": drift, "max_tail": tail, "even_only": even_only}, dense=dense_fn)


def _position_matrix(basis: OscillatorBasis) -> np.ndarray:
    """<n|x - center|n'> (tridiagonal)."""
    off = np.sqrt(np.arange(1, basis.size) / (2.0 * basis.mass * basis.frequency))
    return np.diag(off, 1) + np.diag(off, -1)


def pair_coupling_terms(params: TrapParams, basis_R: OscillatorBasis, basis_r: OscillatorBasis,
                        coupling: float):
    """Pieces of V for the ab Hamiltonian in the shifted product basis."""
    R_c, r_c = pair_offsets(params)
    if not (math.isclose(basis_R.center, R_c) and math.isclose(basis_r.center, r_c)):
        raise ContractError("pair bases must be centred on the completed-square wells")
    w, w0, x0 = params.omega, params.omega0, params.x0
    kappa = 0.5 * (w**2 - w0**2)  # (m/2)(w^2 - w0^2) R r
    const = 0.5 * w0**2 * x0**2 * (1.0 - w0**2 / params.omega_tilde**2)
    return {
        "XR": _position_matrix(basis_R),
        "Xr": _position_matrix(basis_r),
        "kappa": kappa,
        "lin_R": kappa * r_c,
        "lin_r": kappa * R_c,
        "diag": kappa * R_c * r_c + const,
        # contact at r = 0, i.e. r - r_c = -r_c (= -sqrt(2) xi)
        "v": eigenfunctions(basis_r, np.array(0.0)),
        "g": coupling,
    }


def _pair_apply(terms, Y):
    XR, Xr = terms["XR"], terms["Xr"]
    out = terms["kappa"] * (XR @ Y @ Xr.T)
    out += terms["lin_R"] * (XR @ Y)
    out += terms["lin_r"] * (Y @ Xr.T)
    out += terms["diag"] * Y
    if terms["g"] != 0.0:
        v = terms["v"]
        out += terms["g"] * np.outer(Y @ v, v)
    return out


def pair_hamiltonian(params: TrapParams, basis_R: OscillatorBasis, basis_r: OscillatorBasis,
                     coupling: float) -> np.ndarray:
    """Dense Schrodinger-picture H_ab in the product basis (for cross-checks)."""
    terms = pair_coupling_terms(params, basis_R, basis_r, coupling)
    n = basis_R.size * basis_r.size
    H = np.empty((n, n))
    eye = np.eye(n)
    for k in range(n):
        H[:, k] = _pair_apply(terms, eye[k].reshape(basis_R.size, basis_r.size)).ravel()
    E = (basis_R.energies[:, None] + basis_r.energies[None, :]).ravel()
    return H + np.diag(E)


def propagate_diff(init: PairCoefficients, params: TrapParams, schedule: GateSchedule | None = None,
                   solver: SolverSettings | None = None, *, coupling: float | None = None,
                   t_end: float | None = None) -> Trajectory:
    """Propagate c_jk for one atom in |a> (left well) and one in |b> (merged well)."""
    solver = solver or SolverSettings()
    g = effective_1d_coupling(params, "ab") if coupling is None else coupling
    if t_end is None:
        t_end = (schedule or GateSchedule()).tau_internal
    bR, br = init.basis_R, init.basis_r
    terms = pair_coupling_terms(params, bR, br, g)
    E = init.energies
    shape = E.shape

    def rhs(t, y):
        ph = np.exp(-1j * E * t)
        return -1j * (ph.conj() * _pair_apply(terms, ph * y.reshape(shape))).ravel()

    t_grid = _time_grid(t_end, solver.samples_per_period)
    sol = _integrate(rhs, np.asarray(init.amps, dtype=complex).ravel(), t_grid, solver, False)
    snaps = sol.y.T
    norms = np.einsum("ij,ij->i", snaps.conj(), snaps).real
    a2 = np.abs(snaps.reshape(len(t_grid), *shape)) ** 2
    tails = np.maximum(a2[:, -1, :].sum(1), a2[:, :, -1].sum(1))
    drift, tail = _check_run(norms, tails, t_grid, solver, "n_R / n_r", "ab")
    return Trajectory("ab", params, g, t_grid, snaps, E.ravel(), (bR, br), norms,
                      meta={"drift_per_period": drift, "max_tail": tail})


def free_trajectory(traj: Trajectory, solver: SolverSettings | None = None) -> Trajectory:
    """Same initial state and grid, interaction switched off."""
    solver = solver or SolverSettings(samples_per_period=_spp(traj))
    if traj.kind == "bb":
        init = ModeCoefficients(traj.bases[0], traj.initial)
        return propagate_same(init, traj.params, solver=solver, coupling=0.0, t_end=traj.t_end,
                              even_only=traj.meta.get("even_only", True))
    bR, br = traj.bases
    init = PairCoefficients(bR, br, traj.initial.reshape(bR.size, br.size))
    return propagate_diff(init, traj.params, solver=solver, coupling=0.0, t_end=traj.t_end)


def _spp(traj: Trajectory) -> int:
    return int(round((len(traj.times) - 1) / (traj.t_end / TWO_PI)))


def reconstruct_wavefunction(state, grid, t: float | None = None):
    """Position-space wavefunction of a coefficient state.

    ``state`` is ModeCoefficients (``grid`` a 1D array of r) or
    PairCoefficients (``grid`` a pair (R, r) of 1D arrays; returns psi[R, r]).
    Free phases for time ``t`` are re-attached (default: the state's own t).
    """
    if not isinstance(state, (ModeCoefficients, PairCoefficients)):
        raise ContractError(f"cannot reconstruct {type(state).__name__}")
    t = state.t if t is None else t
    if isinstance(state, ModeCoefficients):
        x = np.asarray(grid, dtype=float)
        _check_resolution(state.basis, x)
        return state.schrodinger_amps(t) @ eigenfunctions(state.basis, x)
    R, r = (np.asarray(g, dtype=float) for g in grid)
    _check_resolution(state.basis_R, R)
    _check_resolution(state.basis_r, r)
    return eigenfunctions(state.basis_R, R).T @ state.schrodinger_amps(t) @ eigenfunctions(state.basis_r, r)


def _check_resolution(basis: OscillatorBasis, x: np.ndarray):
    if x.ndim != 1 or len(x) < 2:
        raise ResolutionError("grid must be a 1D array of at least two points")
    dx = float(np.max(np.diff(x)))
    k_max = basis.scale * math.sqrt(2 * basis.n_max + 1)
    if dx * k_max > math.pi:
        raise ResolutionError(f"grid spacing {dx:.3g} does not resolve mode n_max={basis.n_max} "
                              f"(need dx < {math.pi / k_max:.3g})")


# -- overlaps on coefficient states -------------------------------------------

def overlap_initial_series(traj: Trajectory) -> np.ndarray:
    """<psi(t)|psi(0)> in the coefficient space of ``traj`` (CM not included)."""
    psi0 = traj.initial
    return np.einsum("ij,j->i", traj.state_series().conj(), psi0)


def overlap_pair_series(traj: Trajectory, free: Trajectory) -> np.ndarray:
    """<psi(t)|psi^(0)(t)> sample by sample."""
    if traj.bases != free.bases or len(traj.times) != len(free.times) or not np.allclose(traj.times, free.times):
        raise ContractError("trajectories must share basis and time grid")
    # free phases cancel in the interaction picture
    return np.einsum("ij,ij->i", traj.snapshots.conj(), free.snapshots)


def cm_overlap_series(traj: Trajectory) -> np.ndarray:
    if traj.kind != "bb":
        return np.ones(len(traj.times), dtype=complex)
    return np.array([analytic.cm_overlap(traj.params, t) for t in traj.times])


def write_trajectory_csv(path, traj: Trajectory, free: Trajectory):
    """One row per sample: t/T_osc, norm, O0, |O| and the unwrapped collisional phase.

    For bb runs |O| is the full two-atom overlap (CM factor included).
    """
    O0 = overlap_pair_series(traj, free)
    O = overlap_initial_series(traj) * cm_overlap_series(traj)
    phase = np.unwrap(np.angle(O0))
    with open(path, "w", newline="", encoding="utf-8") as fh:
        fh.write(f"# collgate trajectory csv v{CSV_SCHEMA_VERSION} kind={traj.kind}\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(CSV_COLUMNS)
        for row in zip(traj.t_over_tosc, traj.norms, O0.real, O0.imag, np.abs(O), phase):
            w.writerow([fmt(x) for x in row])


def fmt(x) -> str:
    """15 significant digits, no trailing noise (deterministic output)."""
    return format(float(x), ".15g")
