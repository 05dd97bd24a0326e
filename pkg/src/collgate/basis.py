"""Harmonic-oscillator eigenbases and projections of the gate's initial states.

Everything is evaluated through the three-term recurrence of the *normalized*
Hermite functions, so nothing overflows for the orders used here (n <= a few
hundred).
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy.special import roots_hermite

from .errors import ContractError, DomainError
from .model import TrapParams

MU_REL = 0.5  # reduced mass m/2
M_CM = 2.0  # total mass 2m


def hermite_functions(n_max: int, xi) -> np.ndarray:
    """Normalized Hermite functions phi_0..phi_n_max at dimensionless ``xi``.

    Returns an array of shape ``(n_max + 1,) + xi.shape``.
    """
    xi = np.asarray(xi, dtype=float)
    out = np.empty((n_max + 1,) + xi.shape)
    out[0] = math.pi**-0.25 * np.exp(-0.5 * xi**2)
    if n_max >= 1:
        out[1] = math.sqrt(2.0) * xi * out[0]
    for n in range(2, n_max + 1):
        out[n] = math.sqrt(2.0 / n) * xi * out[n - 1] - math.sqrt((n - 1) / n) * out[n - 2]
    return out


@lru_cache(maxsize=32)
def gauss_hermite(n_nodes: int) -> tuple[np.ndarray, np.ndarray]:
    """Gauss-Hermite nodes and *scaled* weights w_i exp(x_i^2).

    The scaled weights come from the Christoffel function of the Hermite
    functions, which stays finite where the plain weights underflow.
    """
    x, _ = roots_hermite(n_nodes)
    phi = hermite_functions(n_nodes - 1, x)
    w_scaled = 1.0 / np.einsum("ki,ki->i", phi, phi)
    x.setflags(write=False)
    w_scaled.setflags(write=False)
    return x, w_scaled


@dataclass(frozen=True)
class OscillatorBasis:
    """Eigenbasis of p^2/2M + M w^2 (x - center)^2 / 2, truncated at n_max."""

    frequency: float
    mass: float
    center: float = 0.0
    n_max: int = 60

    def __post_init__(self):
        if not self.frequency > 0 or not self.mass > 0:
            raise DomainError("basis frequency and mass must be positive")
        if self.n_max < 0 or int(self.n_max) != self.n_max:
            raise DomainError("n_max must be a non-negative integer")

    @property
    def scale(self) -> float:
        """Inverse oscillator length sqrt(M w / hbar)."""
        return math.sqrt(self.mass * self.frequency)

    @property
    def size(self) -> int:
        return self.n_max + 1

    @property
    def energies(self) -> np.ndarray:
        return self.frequency * (np.arange(self.size) + 0.5)

    def xi(self, x):
        return self.scale * (np.asarray(x, dtype=float) - self.center)

    def resized(self, n_max: int) -> "OscillatorBasis":
        return OscillatorBasis(self.frequency, self.mass, self.center, n_max)

    def to_dict(self) -> dict:
        return {"frequency": self.frequency, "mass": self.mass,
                "center": self.center, "n_max": self.n_max}


def relative_basis(params: TrapParams, n_max: int = 60) -> OscillatorBasis:
    """Basis for the bb relative coordinate r = x2 - x1 (mass m/2, frequency omega)."""
    return OscillatorBasis(frequency=params.omega, mass=MU_REL, center=0.0, n_max=n_max)


def eigenfunctions(basis: OscillatorBasis, x) -> np.ndarray:
    """All psi_n(x), n = 0..n_max, shape ``(n_max + 1,) + x.shape``."""
    return math.sqrt(basis.scale) * hermite_functions(basis.n_max, basis.xi(x))


def eigenfunction(basis: OscillatorBasis, n: int, x):
    if not 0 <= n <= basis.n_max:
        raise DomainError(f"level {n} outside 0..{basis.n_max}")
    return eigenfunctions(basis.resized(n), x)[n]


def delta_matrix_elements(basis: OscillatorBasis, x_c: float = 0.0) -> np.ndarray:
    """<k|delta(x - x_c)|l> = psi_k(x_c) psi_l(x_c) in the truncated basis (rank one)."""
    v = eigenfunctions(basis, np.asarray(x_c, dtype=float))
    return np.outer(v, v)


def project(basis: OscillatorBasis, f, n_nodes: int | None = None) -> np.ndarray:
    """<n|f> for n = 0..n_max by Gauss-Hermite quadrature (default 4 n_max nodes)."""
    n_nodes = n_nodes or max(4 * basis.n_max, 64)
    xi, w = gauss_hermite(n_nodes)
    x = basis.center + xi / basis.scale
    phi = hermite_functions(basis.n_max, xi)
    fx = np.asarray(f(x))
    return (phi * w) @ fx / math.sqrt(basis.scale)


def displaced_gaussian_coeffs(basis: OscillatorBasis, width_frequency: float,
                              center: float) -> np.ndarray:
    """Closed-form <n|g> for g(x) = (M W/pi)^(1/4) exp(-M W (x - d)^2 / 2).

    Same mass M as the basis, W = ``width_frequency``, d = ``center``.  With
    kappa = W/w and delta = sqrt(M w)(d - center_basis) the amplitudes are
    c_0 u_n where u_n = lambda^(n/2) H_n(z) / sqrt(2^n n!), lambda =
    (kappa - 1)/(kappa + 1), z = kappa delta / sqrt(kappa^2 - 1).  The
    recurrence below only involves sqrt(lambda) z = kappa delta/(kappa + 1),
    so it stays real and regular through kappa = 1 (coherent state).
    """
    if not width_frequency > 0:
        raise DomainError("width frequency must be positive")
    kappa = width_frequency / basis.frequency
    delta = basis.scale * (center - basis.center)
    lam = (kappa - 1.0) / (kappa + 1.0)
    b = kappa * delta / (kappa + 1.0)
    c0 = kappa**0.25 * math.sqrt(2.0 / (1.0 + kappa)) * math.exp(
        -kappa * delta**2 / (2.0 * (1.0 + kappa)))
    u = np.empty(basis.size)
    u[0] = 1.0
    if basis.n_max >= 1:
        u[1] = math.sqrt(2.0) * b
    for n in range(2, basis.size):
        u[n] = math.sqrt(2.0 / n) * b * u[n - 1] - lam * math.sqrt((n - 1) / n) * u[n - 2]
    return c0 * u


@dataclass(frozen=True, eq=False)
class ModeCoefficients:
    """Amplitudes of one 1D mode in a fixed oscillator basis.

    In the interaction picture the free phases exp(-i (n + 1/2) w t) are kept
    out of ``amps``; ``t`` records the time they refer to.
    """

    basis: OscillatorBasis
    amps: np.ndarray
    picture: str = "interaction"
    t: float = 0.0

    def __post_init__(self):
        amps = np.asarray(self.amps, dtype=complex)
        if amps.shape != (self.basis.size,):
            raise ContractError(f"expected {self.basis.size} amplitudes, got {amps.shape}")
        amps.setflags(write=False)
        object.__setattr__(self, "amps", amps)

    @property
    def norm(self) -> float:
        return float(np.vdot(self.amps, self.amps).real)

    @property
    def tail(self) -> float:
        return float(abs(self.amps[-1]) ** 2)

    def schrodinger_amps(self, t: float | None = None) -> np.ndarray:
        t = self.t if t is None else t
        if self.picture == "schrodinger":
            return self.amps
        return np.exp(-1j * self.basis.energies * t) * self.amps

    def to_json(self) -> str:
        return json.dumps({"n_max": self.basis.n_max,
                           "re": self.amps.real.tolist(),
                           "im": self.amps.imag.tolist()})

    @classmethod
    def from_json(cls, text: str, basis: OscillatorBasis) -> "ModeCoefficients":
        d = json.loads(text)
        if d["n_max"] != basis.n_max:
            raise ContractError("n_max in JSON does not match basis")
        return cls(basis, np.asarray(d["re"]) + 1j * np.asarray(d["im"]))


@dataclass(frozen=True, eq=False)
class PairCoefficients:
    """c_jk over CM (j) x relative (k) oscillator states, interaction picture.

    Free phase bookkeeping is exp(-i (E_j^R + E_k^r) t), which for the
    omega-tilde bases used here equals exp(-i (j + k + 1) omega_tilde t).
    """

    basis_R: OscillatorBasis
    basis_r: OscillatorBasis
    amps: np.ndarray
    picture: str = "interaction"
    t: float = 0.0

    def __post_init__(self):
        amps = np.asarray(self.amps, dtype=complex)
        if amps.shape != (self.basis_R.size, self.basis_r.size):
            raise ContractError(f"amplitude matrix has shape {amps.shape}")
        amps.setflags(write=False)
        object.__setattr__(self, "amps", amps)

    @property
    def energies(self) -> np.ndarray:
        return self.basis_R.energies[:, None] + self.basis_r.energies[None, :]

    @property
    def norm(self) -> float:
        return float(np.vdot(self.amps, self.amps).real)

    @property
    def tail(self) -> float:
        a = np.abs(self.amps) ** 2
        return float(max(a[-1, :].sum(), a[:, -1].sum()))

    def schrodinger_amps(self, t: float | None = None) -> np.ndarray:
        t = self.t if t is None else t
        if self.picture == "schrodinger":
            return self.amps
        return np.exp(-1j * self.energies * t) * self.amps


# -- same-state (bb) initial condition --------------------------------------

def psi0_rel(r, params: TrapParams):
    """Symmetrized two-lobe relative wavefunction at t = 0 (lobes at r = -+2 x0)."""
    r = np.asarray(r, dtype=float)
    k = MU_REL * params.omega0
    lobes = np.exp(-0.5 * k * (2 * params.x0 + r) ** 2) + np.exp(-0.5 * k * (2 * params.x0 - r) ** 2)
    return (k / (4 * math.pi)) ** 0.25 * lobes


def initial_coeffs_same(params: TrapParams, basis: OscillatorBasis | None = None) -> ModeCoefficients:
    """c_n(0) of the bb relative state in the omega, m/2 oscillator basis.

    Closed form (sum of two displaced, squeezed Gaussians).  Odd n vanish
    identically.  omega0 = omega is regular here: lambda = 0 turns each lobe
    into a coherent state, and x0 = 0 as well gives c_0 = sqrt(2).
    """
    basis = basis or relative_basis(params)
    if basis.mass != MU_REL or basis.center != 0.0:
        raise ContractError("initial_coeffs_same expects the centred relative basis")
    plus = displaced_gaussian_coeffs(basis, params.omega0, 2 * params.x0)
    # the -2 x0 lobe is the parity image: c_n -> (-1)^n c_n
    parity = (-1.0) ** np.arange(basis.size)
    amps = (plus + parity * plus) / math.sqrt(2.0)
    amps[1::2] = 0.0
    return ModeCoefficients(basis, amps)


def excited_relative_function(n: int, params: TrapParams):
    """psi_(n)(r): symmetrized displaced n-th oscillator state of the separated wells."""
    if n < 0:
        raise DomainError("excitation index must be >= 0")
    s = math.sqrt(params.omega0 / 2.0)
    pre = (params.omega0 / (2 * math.pi)) ** 0.25 * math.pi**0.25 / math.sqrt(2.0)

    def psi(r):
        r = np.asarray(r, dtype=float)
        zp = s * (2 * params.x0 + r)
        zm = s * (2 * params.x0 - r)
        return pre * (hermite_functions(n, zp)[n] + hermite_functions(n, zm)[n])

    return psi


def excited_relative_state(n: int, params: TrapParams, basis: OscillatorBasis | None = None):
    """Return (psi_(n) as a function of r, its projection on the relative basis)."""
    basis = basis or relative_basis(params)
    psi = excited_relative_function(n, params)
    amps = project(basis, psi)
    amps[1::2] = 0.0  # even by construction; drop quadrature round-off
    return psi, ModeCoefficients(basis, amps)


# -- different-state (ab) initial condition ----------------------------------

def pair_offsets(params: TrapParams) -> tuple[float, float]:
    """Centres (R_c, r_c) of the completed-square CM and relative wells for H_ab."""
    wt2 = params.omega_tilde**2
    return -params.omega0**2 * params.x0 / (2 * wt2), params.omega0**2 * params.x0 / wt2


def collision_offset(params: TrapParams) -> float:
    """xi = x0 omega0^2 / (sqrt(2) omega_tilde^2).

    This is the distance of the contact point from the relative-well centre
    measured in the mass-m coordinate r / sqrt(2).  In the r coordinate used
    throughout this package the contact sits at r - r_c = -sqrt(2) xi.
    """
    return params.x0 * params.omega0**2 / (math.sqrt(2.0) * params.omega_tilde**2)


def pair_bases(params: TrapParams, n_R: int = 60, n_r: int = 100):
    """Default sizes: the CM Gaussian starts ~25 quanta up its well; the contact
    term drives a slow power-law tail in r."""
    R_c, r_c = pair_offsets(params)
    wt = params.omega_tilde
    return (OscillatorBasis(wt, M_CM, R_c, n_R), OscillatorBasis(wt, MU_REL, r_c, n_r))


def initial_coeffs_diff(params: TrapParams, basis_R: OscillatorBasis | None = None,
                        basis_r: OscillatorBasis | None = None) -> PairCoefficients:
    """c_jk(0) for psi_-(x1) psi_+(x2) (atom a left, atom b right).

    The product state factorizes into a CM Gaussian (mass 2m, width omega0,
    centred at R = 0) times a relative Gaussian (mass m/2, width omega0,
    centred at r = 2 x0), so c_jk = a_j b_k.
    """
    dR, dr = pair_bases(params)
    basis_R = basis_R or dR
    basis_r = basis_r or dr
    if basis_R.mass != M_CM or basis_r.mass != MU_REL:
        raise ContractError("pair bases must carry masses 2m (CM) and m/2 (relative)")
    a = displaced_gaussian_coeffs(basis_R, params.omega0, 0.0)
    b = displaced_gaussian_coeffs(basis_r, params.omega0, 2 * params.x0)
    return PairCoefficients(basis_R, basis_r, np.outer(a, b))


def psi0_pair(x1, x2, params: TrapParams):
    """psi_-(x1) psi_+(x2) on position arrays (broadcasting)."""
    k = params.omega0
    n = (k / math.pi) ** 0.5
    return n * np.exp(-0.5 * k * ((np.asarray(x1) + params.x0) ** 2 + (np.asarray(x2) - params.x0) ** 2))
