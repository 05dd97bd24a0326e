"""Split-operator grid solver used as an independent reference.

The contact interaction g delta(x) has no grid representation and is
replaced by a normalized Gaussian of width sigma; results are then
extrapolated to sigma -> 0.  The bb case runs on the relative coordinate
(mass m/2); the ab case runs on the (x1, x2) plane so that no coordinate
transform is shared with the spectral code.
"""

from __future__ import annotations

import json
import math
import warnings
from dataclasses import dataclass, field, replace

import numpy as np

from .basis import MU_REL, psi0_pair, psi0_rel
from .errors import ContractError, DomainError
from .model import TWO_PI, GateSchedule, TrapParams, effective_1d_coupling, potential_va, potential_vb

BOUNDARY_TOL = 1e-8
NORM_TOL = 1e-8
KINETIC_PHASE_MAX = 0.25  # per step, at the largest populated or scattered |k|
DT_MAX = 5e-4
DEFAULT_SIGMA = 1.0 / 20  # a_x / 20


@dataclass(frozen=True, eq=False)
class GridState:
    """psi on a uniform periodic grid; ``axes`` holds one 1D array per coordinate."""

    axes: tuple
    psi: np.ndarray
    regularization_sigma: float = DEFAULT_SIGMA
    t: float = 0.0
    kind: str = "bb"  # bb: relative coordinate; ab: (x1, x2)

    @property
    def dx(self) -> float:
        return float(self.axes[0][1] - self.axes[0][0])

    @property
    def cell(self) -> float:
        return self.dx ** len(self.axes)

    @property
    def norm(self) -> float:
        return float(np.sum(np.abs(self.psi) ** 2) * self.cell)

    def inner(self, other: "GridState") -> complex:
        """<self|other>."""
        if self.psi.shape != other.psi.shape:
            raise ContractError("grid shapes differ")
        return complex(np.vdot(self.psi, other.psi) * self.cell)

    def boundary_amplitude(self) -> float:
        a = np.abs(self.psi)
        if a.ndim == 1:
            return float(max(a[0], a[-1]))
        return float(max(a[0].max(), a[-1].max(), a[:, 0].max(), a[:, -1].max()))


def make_axis(half_width: float, n: int) -> np.ndarray:
    """n points on [-L, L) (periodic)."""
    return (np.arange(n) - n // 2) * (2.0 * half_width / n)


def initial_grid_same(params: TrapParams, *, half_width: float | None = None, n: int = 4096,
                      sigma: float = DEFAULT_SIGMA) -> GridState:
    """Two-lobe relative state on the r grid (default |r| <= 2 x0 + 14)."""
    L = 2 * params.x0 + 14.0 if half_width is None else half_width
    r = make_axis(L, n)
    return GridState((r,), psi0_rel(r, params).astype(complex), sigma, kind="bb")


def initial_grid_diff(params: TrapParams, *, half_width: float | None = None, n: int = 512,
                      sigma: float | None = None) -> GridState:
    """psi_-(x1) psi_+(x2) on the (x1, x2) grid (default |x| <= x0 + 8)."""
    L = params.x0 + 8.0 if half_width is None else half_width
    x = make_axis(L, n)
    dx = x[1] - x[0]
    sigma = 2.5 * dx if sigma is None else sigma
    psi = psi0_pair(x[:, None], x[None, :], params).astype(complex)
    return GridState((x, x), psi, sigma, kind="ab")


def regularized_delta(u, sigma: float):
    return np.exp(-0.5 * (u / sigma) ** 2) / (math.sqrt(TWO_PI) * sigma)


def _potential(state: GridState, params: TrapParams, coupling: float):
    if state.kind == "bb":
        (r,) = state.axes
        return 0.5 * MU_REL * params.omega**2 * r**2 + coupling * regularized_delta(r, state.regularization_sigma)
    x1, x2 = state.axes
    # atom a keeps its split well; atom b sees the merged well during the gate
    V = potential_va(x1, params)[:, None] + potential_vb(x2, 0.0, params, GateSchedule())[None, :]
    return V + coupling * regularized_delta(x1[:, None] - x2[None, :], state.regularization_sigma)


def _masses(state: GridState):
    return (MU_REL,) if state.kind == "bb" else (1.0, 1.0)


def _kinetic(state: GridState):
    ks = [TWO_PI * np.fft.fftfreq(len(a), a[1] - a[0]) for a in state.axes]
    ms = _masses(state)
    if len(ks) == 1:
        return ks[0] ** 2 / (2 * ms[0])
    return ks[0][:, None] ** 2 / (2 * ms[0]) + ks[1][None, :] ** 2 / (2 * ms[1])


def effective_k_max(state: GridState, rel: float = 1e-12) -> float:
    """Largest |k| carrying spectral weight above ``rel`` of the peak."""
    P = np.abs(np.fft.fftn(state.psi)) ** 2
    ks = [np.abs(TWO_PI * np.fft.fftfreq(len(a), a[1] - a[0])) for a in state.axes]
    K = ks[0] if len(ks) == 1 else np.maximum(ks[0][:, None], ks[1][None, :])
    return float(K[P > rel * P.max()].max())


@dataclass(eq=False)
class GridTrajectory:
    times: np.ndarray
    frames: list  # GridState per sample time
    dt: float
    coupling: float
    meta: dict = field(default_factory=dict)

    @property
    def final(self) -> GridState:
        return self.frames[-1]

    def dump_density(self, path):
        """|psi|^2 frames as little-endian float64 after a one-line JSON header."""
        f0 = self.frames[0]
        nx = len(f0.axes[0])
        ny = len(f0.axes[1]) if len(f0.axes) > 1 else 1
        head = {"nx": nx, "ny": ny, "dx": f0.dx, "dt": self.dt, "frames": len(self.frames)}
        with open(path, "wb") as fh:
            fh.write((json.dumps(head, sort_keys=True) + "\n").encode())
            for fr in self.frames:
                fh.write(np.ascontiguousarray(np.abs(fr.psi) ** 2, dtype="<f8").tobytes())


def _k_scale(initial: GridState, g: float) -> float:
    # populated modes of the state, plus the ~1/sigma momenta kicked up by the
    # regularized contact; the grid cutoff itself is irrelevant for an exact
    # kinetic step
    k = effective_k_max(initial)
    return max(k, 1.0 / initial.regularization_sigma) if g else k


def auto_dt(initial: GridState, coupling: float = 1.0) -> float:
    """Largest step meeting the kinetic-phase limit with a 20% margin, capped at DT_MAX."""
    m = min(_masses(initial))
    return min(DT_MAX, 0.8 * KINETIC_PHASE_MAX * 2 * m / _k_scale(initial, coupling) ** 2)


def grid_propagate(initial: GridState, params: TrapParams, t_end: float, dt: float | None = None, *,
                   coupling: float | None = None, n_frames: int = 2) -> GridTrajectory:
    """Strang-split propagation exp(-iV dt/2) exp(-iK dt) exp(-iV dt/2).

    ``n_frames`` evenly spaced snapshots (including t = 0 and t_end) are kept.
    ``dt`` defaults to auto_dt of the interacting problem, so that free and
    interacting runs of the same state share a step.
    """
    pair = "bb" if initial.kind == "bb" else "ab"
    g = effective_1d_coupling(params, pair) if coupling is None else coupling
    if g != 0.0 and initial.regularization_sigma < 2 * initial.dx:
        raise ContractError(f"sigma = {initial.regularization_sigma:g} below 2 dx = {2 * initial.dx:g}")
    if dt is None:
        dt = auto_dt(initial)
    m = min(_masses(initial))
    k_eff = _k_scale(initial, g)
    if dt * k_eff**2 / (2 * m) >= KINETIC_PHASE_MAX:
        raise ContractError(f"dt = {dt:g} too coarse: kinetic phase per step "
                            f"{dt * k_eff**2 / (2 * m):.3g} >= {KINETIC_PHASE_MAX}")
    steps = max(1, int(math.ceil(t_end / dt - 1e-9)))
    dt = t_end / steps
    half_v = np.exp(-0.5j * dt * _potential(initial, params, g))
    kin = np.exp(-1j * dt * _kinetic(initial))
    marks = np.unique(np.round(np.linspace(0, steps, max(n_frames, 2))).astype(int))
    psi = initial.psi.astype(complex).copy()
    n0 = initial.norm
    frames, times = [], []
    for s in range(steps + 1):
        if s in marks:
            st = replace(initial, psi=psi.copy(), t=initial.t + s * dt)
            if st.boundary_amplitude() > BOUNDARY_TOL:
                raise DomainError(f"|psi| = {st.boundary_amplitude():.3g} at the domain edge "
                                  f"(t = {st.t:.4g}); enlarge the grid")
            frames.append(st)
            times.append(st.t)
        if s == steps:
            break
        psi = half_v * np.fft.ifftn(kin * np.fft.fftn(half_v * psi))
    drift = abs(frames[-1].norm - n0)
    if drift > NORM_TOL:
        raise DomainError(f"grid norm drifted by {drift:.3g}")
    return GridTrajectory(np.array(times), frames, dt, g, {"steps": steps, "norm_drift": drift})


def grid_overlap_vs_free(initial: GridState, params: TrapParams, t_end: float, dt: float | None = None,
                         coupling: float | None = None) -> complex:
    """O0 = <psi(t)|psi^(0)(t)> on the grid."""
    a = grid_propagate(initial, params, t_end, dt, coupling=coupling).final
    b = grid_propagate(initial, params, t_end, dt, coupling=0.0).final
    return a.inner(b)


@dataclass(frozen=True)
class RegularizationStudy:
    sigmas: tuple
    overlaps: tuple  # complex O0 per sigma
    phases: tuple
    extrapolated: float
    error: float
    monotone: bool


def richardson_sigma2(sigmas, values) -> tuple[float, float]:
    """Limit of values(sigma) = v0 + a sigma^2 + b sigma^4 + ...

    Returns (estimate, error bar).  With three or more points a quadratic in
    sigma^2 is fitted; the error bar compares against the linear fit through
    the two smallest sigmas.
    """
    s2 = np.asarray(sigmas, dtype=float) ** 2
    v = np.asarray(values, dtype=float)
    order = np.argsort(s2)
    s2, v = s2[order], v[order]
    lin = v[0] - s2[0] * (v[1] - v[0]) / (s2[1] - s2[0])
    if len(v) >= 3:
        est = float(np.polyval(np.polyfit(s2[:3], v[:3], 2), 0.0))
    else:
        est = float(lin)
    return est, float(abs(est - lin))


def delta_regularization_study(params: TrapParams, sigmas=(0.1, 0.05, 0.025), *, t_end: float = TWO_PI,
                               n: int = 4096, dt: float | None = None, jobs: int = 1) -> RegularizationStudy:
    """Collisional phase at ``t_end`` versus sigma and its sigma -> 0 limit."""
    sigmas = tuple(sorted(float(s) for s in sigmas))
    if len(sigmas) < 3:
        raise ContractError("need at least three sigma values")
    args = [(params, s, t_end, n, dt) for s in sigmas]
    if jobs > 1:
        from concurrent.futures import ProcessPoolExecutor
        with ProcessPoolExecutor(max_workers=jobs) as ex:
            overlaps = list(ex.map(_one_sigma, args))
    else:
        overlaps = [_one_sigma(a) for a in args]
    phases = [float(np.angle(o)) for o in overlaps]
    d = np.diff(phases)
    monotone = bool(np.all(d <= 0) or np.all(d >= 0))
    if not monotone:
        warnings.warn("non-monotone convergence in sigma; extrapolation unreliable", RuntimeWarning,
                      stacklevel=2)
    est, err = richardson_sigma2(sigmas, phases)
    return RegularizationStudy(sigmas, tuple(overlaps), tuple(phases), est, err, monotone)


def _one_sigma(arg):
    params, s, t_end, n, dt = arg
    init = initial_grid_same(params, n=n, sigma=s)
    return grid_overlap_vs_free(init, params, t_end, dt)


def spectral_phase_study(params: TrapParams, n_maxes=(120, 240, 480), *, t_end: float = TWO_PI):
    """Spectral collisional phase at ``t_end`` versus N_max and its N -> inf limit.

    The truncated contact converges like N^(-1/2); the limit is taken from a
    fit in x = N^(-1/2) (quadratic through the three largest N).
    """
    from .basis import initial_coeffs_same, relative_basis
    from .dynamics import free_trajectory, overlap_pair_series, propagate_same

    phases = []
    for N in n_maxes:
        tr = propagate_same(initial_coeffs_same(params, relative_basis(params, N)), params,
                            t_end=t_end)
        phases.append(float(np.angle(overlap_pair_series(tr, free_trajectory(tr))[-1])))
    x = np.asarray(n_maxes, dtype=float) ** -0.5
    k = np.argsort(x)[:3]
    est = float(np.polyval(np.polyfit(x[k], np.asarray(phases)[k], min(2, len(k) - 1)), 0.0))
    return tuple(n_maxes), tuple(phases), est
