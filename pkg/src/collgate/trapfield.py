"""Magnetic-mirror microtrap: field, potential, minima and local frequencies.

Axis convention: the tape surface is z = 0 with atoms at z > 0, the
magnetization varies along x.  The mirror field is

    B_x = B0 e^{-k z} cos(k x),   B_z = B0 e^{-k z} sin(k x)

with B0 = mu0 M0 (1 - e^{-k delta}) / 2, and a uniform bias (0, B_y, B_z)
is added.  Only |B| enters the potential, so the results that matter
(periodicity, field floor, minima spacing, frequencies) do not depend on
these sign choices.

In s = k x, w = k z and units of B0 the squared field modulus reduces to

    F = e^{-2w} + 2 b_z e^{-w} sin s + b_y^2 + b_z^2

which is what the minimum search works with.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np

from .errors import ContractError, DomainError, NotATrapError, SpinFlipHazard
from .model import MU_0, MU_B, RB87_MASS

ZERO_FIELD_REL = 1e-9  # |B| / B0 below which a point counts as a field zero


@dataclass(frozen=True)
class MirrorParams:
    M0: float  # magnetization amplitude, A/m
    k_M: float  # magnetization wavenumber, rad/m
    delta: float  # tape thickness, m
    B_ext_y: float = 0.0  # T
    B_ext_z: float = 0.0  # T
    gF: float = 0.5
    mF: int = 2
    mu_B: float = MU_B

    def __post_init__(self):
        if not self.k_M > 0:
            raise DomainError("k_M must be positive")
        if not self.delta > 0:
            raise DomainError("tape thickness must be positive")
        if not self.M0 > 0:
            raise DomainError("M0 must be positive")
        if not self.gF * self.mF > 0:
            raise DomainError("gF mF must be positive (low-field seeker) for magnetic trapping")

    @property
    def B0(self) -> float:
        return MU_0 * self.M0 * (1.0 - math.exp(-self.k_M * self.delta)) / 2.0

    @property
    def period(self) -> float:
        return 2 * math.pi / self.k_M

    @property
    def moment(self) -> float:
        """gF mu_B mF (J/T)."""
        return self.gF * self.mu_B * self.mF


def field(mp: MirrorParams, x, z):
    """(B_x, B_y, B_z) in tesla; broadcasting over x and z."""
    x, z = np.broadcast_arrays(np.asarray(x, dtype=float), np.asarray(z, dtype=float))
    if np.any(z <= 0):
        raise DomainError("z must be above the surface (z > 0)")
    amp = mp.B0 * np.exp(-mp.k_M * z)
    return (amp * np.cos(mp.k_M * x),
            np.full_like(amp, mp.B_ext_y),
            amp * np.sin(mp.k_M * x) + mp.B_ext_z)


def field_modulus(mp: MirrorParams, x, z):
    Bx, By, Bz = field(mp, x, z)
    return np.sqrt(Bx**2 + By**2 + Bz**2)


def magnetic_potential(mp: MirrorParams, x, z):
    """V = gF mu_B mF |B| in joules.

    Raises SpinFlipHazard (with the offending (x, z) points) if |B| vanishes
    at any evaluated point.
    """
    B = field_modulus(mp, x, z)
    zero = B < ZERO_FIELD_REL * mp.B0
    if np.any(zero):
        xb, zb = np.broadcast_arrays(np.asarray(x, dtype=float), np.asarray(z, dtype=float))
        pts = list(zip(xb[zero].ravel().tolist(), zb[zero].ravel().tolist()))
        raise SpinFlipHazard(f"|B| = 0 at {len(pts)} evaluated point(s); add a B_y bias", pts)
    return mp.moment * B


def zero_field_points(mp: MirrorParams, n_periods: int = 1):
    """Analytic field zeros within [0, n_periods * period) in x (empty if B_y != 0)."""
    if mp.B_ext_y != 0 or mp.B_ext_z == 0 or abs(mp.B_ext_z) >= mp.B0:
        return []
    z = math.log(mp.B0 / abs(mp.B_ext_z)) / mp.k_M
    s = -math.pi / 2 if mp.B_ext_z > 0 else math.pi / 2
    x0 = (s % (2 * math.pi)) / mp.k_M
    return [(x0 + j * mp.period, z) for j in range(n_periods)]


def trap_height(mp: MirrorParams) -> float:
    """z0 = ln(mu0 M0 / B0) / k_M."""
    ratio = MU_0 * mp.M0 / mp.B0
    assert ratio > 1.0, "mu0 M0 > B0 holds for any finite tape thickness"
    return math.log(ratio) / mp.k_M


# -- minima ----------------------------------------------------------------

def _F_derivs(mp: MirrorParams, s: float, w: float):
    by, bz = mp.B_ext_y / mp.B0, mp.B_ext_z / mp.B0
    u = math.exp(-w)
    ss, cs = math.sin(s), math.cos(s)
    F = u * u + 2 * bz * u * ss + by * by + bz * bz
    grad = np.array([2 * bz * u * cs, -2 * u * u - 2 * bz * u * ss])
    hess = np.array([[-2 * bz * u * ss, -2 * bz * u * cs],
                     [-2 * bz * u * cs, 4 * u * u + 2 * bz * u * ss]])
    return F, grad, hess


def _newton(mp: MirrorParams, s: float, w: float, tol: float = 1e-13, max_iter: int = 200):
    """Damped Newton on F(s, w); falls back to gradient steps off convex regions."""
    for _ in range(max_iter):
        F, g, H = _F_derivs(mp, s, w)
        if np.linalg.norm(g) < tol:
            return s, w, True
        try:
            ev = np.linalg.eigvalsh(H)
            step = -np.linalg.solve(H, g) if ev.min() > 0 else -g / max(abs(ev).max(), 1e-12)
        except np.linalg.LinAlgError:
            step = -g
        lam = 1.0
        while lam > 1e-12:
            s1, w1 = s + lam * step[0], w + lam * step[1]
            if w1 > 0 and _F_derivs(mp, s1, w1)[0] <= F + 1e-4 * lam * g @ step:
                break
            lam *= 0.5
        s, w = s1, w1
    return s, w, np.linalg.norm(_F_derivs(mp, s, w)[1]) < 1e-9


def find_minima(mp: MirrorParams, n_periods: int = 1, z_max: float | None = None,
                n_seeds: int = 24) -> list[tuple[float, float]]:
    """Local minima of |B| (hence of V) over n_periods periods in x, sorted by x.

    Seeds come from a coarse scan; each is refined by damped Newton.
    """
    w_max = mp.k_M * (z_max if z_max is not None else 10.0 / mp.k_M)
    found = []
    for s0 in np.linspace(0, 2 * math.pi * n_periods, n_seeds * n_periods, endpoint=False):
        for w0 in np.linspace(0.05 * w_max, 0.95 * w_max, 6):
            s, w, ok = _newton(mp, float(s0), float(w0))
            if not ok or not 0 < w < w_max:
                continue
            H = _F_derivs(mp, s, w)[2]
            if np.linalg.eigvalsh(H).min() <= 0:
                continue
            s_mod = s % (2 * math.pi * n_periods)
            if all(abs(s_mod - a) > 1e-6 and abs(abs(s_mod - a) - 2 * math.pi * n_periods) > 1e-6
                   for a, _ in found):
                found.append((s_mod, w))
    return sorted((float(s / mp.k_M), float(w / mp.k_M)) for s, w in found)


def minimum_height(mp: MirrorParams) -> float:
    """Height of the field minima, ln(B0 / |B_z|) / k_M (needs 0 < |B_z| < B0)."""
    if not 0 < abs(mp.B_ext_z) < mp.B0:
        raise NotATrapError("minima above the surface need 0 < |B_ext_z| < B0")
    return math.log(mp.B0 / abs(mp.B_ext_z)) / mp.k_M


# -- local frequencies -------------------------------------------------------------

def _hessian(mp, x, z, h):
    V = lambda a, b: float(magnetic_potential(mp, a, b))  # noqa: E731
    Hxx = (V(x + h, z) - 2 * V(x, z) + V(x - h, z)) / h**2
    Hzz = (V(x, z + h) - 2 * V(x, z) + V(x, z - h)) / h**2
    Hxz = (V(x + h, z + h) - V(x + h, z - h) - V(x - h, z + h) + V(x - h, z - h)) / (4 * h * h)
    return np.array([[Hxx, Hxz], [Hxz, Hzz]])


def local_frequencies(mp: MirrorParams, minimum, mass: float = RB87_MASS,
                      rel_tol: float = 1e-4) -> tuple[float, float]:
    """(omega_x, omega_z) in rad/s from the numeric Hessian of V at ``minimum``.

    Central differences at steps h and h/2 are combined by Richardson
    extrapolation; their relative disagreement must stay below ``rel_tol``.
    """
    x, z = minimum
    h = 1e-3 / mp.k_M
    gx = (float(magnetic_potential(mp, x + h, z)) - float(magnetic_potential(mp, x - h, z))) / (2 * h)
    gz = (float(magnetic_potential(mp, x, z + h)) - float(magnetic_potential(mp, x, z - h))) / (2 * h)
    H1, H2 = _hessian(mp, x, z, h), _hessian(mp, x, z, h / 2)
    H = (4 * H2 - H1) / 3
    scale = np.abs(H).max()
    # implied displacement to the true stationary point, relative to the period scale
    if math.hypot(gx, gz) / scale > 1e-4 / mp.k_M:
        raise ContractError("point is not a stationary point of V (gradient too large)")
    if np.abs(H2 - H1).max() > rel_tol * scale:
        raise ContractError("numeric Hessian not converged under step halving")
    ev, vec = np.linalg.eigh(H)
    if ev.min() <= 0:
        raise NotATrapError(f"curvature eigenvalues {ev} are not all positive (saddle)")
    om = np.sqrt(ev / mass)
    ix = int(np.argmax(np.abs(vec[0])))  # eigenvector mostly along x
    return float(om[ix]), float(om[1 - ix])


def write_field_map(path, mp: MirrorParams, xs, zs):
    """CSV x_m,z_m,V_joule,Bx_T,By_T,Bz_T over the grid xs x zs."""
    from .dynamics import fmt

    X, Z = np.meshgrid(np.asarray(xs, dtype=float), np.asarray(zs, dtype=float), indexing="ij")
    Bx, By, Bz = field(mp, X, Z)
    V = mp.moment * np.sqrt(Bx**2 + By**2 + Bz**2)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        fh.write("# collgate field_map csv v1\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(("x_m", "z_m", "V_joule", "Bx_T", "By_T", "Bz_T"))
        for row in zip(X.ravel(), Z.ravel(), V.ravel(), Bx.ravel(), By.ravel(), Bz.ravel()):
            w.writerow([fmt(v) for v in row])


# a plausible video-tape configuration used by the CLI default
EXAMPLE_MIRROR = dict(M0=8.0e4, k_M=2 * math.pi / 1e-6, delta=1e-6, B_ext_y=1e-4, B_ext_z=1e-3,
                      gF=0.5, mF=2)
