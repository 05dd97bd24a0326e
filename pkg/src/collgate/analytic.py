"""Closed-form noninteracting evolution for two |b> atoms after the barrier drops.

Both the CM and the free relative wavefunction are displaced, breathing
Gaussians in the merged omega-well.  Each one is kept in the form

    g(x, t) = exp(-a x^2 + b x + c)      (a, b, c complex, Re a > 0)

so that every overlap is an exact Gaussian integral.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass

import numpy as np

from .basis import M_CM, MU_REL
from .model import TrapParams


@dataclass(frozen=True)
class BreathingState:
    omega0: float
    omega: float
    t: float
    Omega_t: float
    phase_curvature: float  # coefficient k of the (mass/2) k x^2 phase term
    gouy: float  # continuous arg of (cos wt + i (omega0/omega) sin wt)


def breathing_width(params: TrapParams, t):
    """Omega(t) = w^2 w0 / (w^2 cos^2 wt + w0^2 sin^2 wt)."""
    w, w0 = params.omega, params.omega0
    c, s = np.cos(w * np.asarray(t)), np.sin(w * np.asarray(t))
    return w**2 * w0 / (w**2 * c**2 + w0**2 * s**2)


def _gouy(params: TrapParams, t):
    # arg(cos wt + i (w0/w) sin wt) = wt + arctan[(w0 - w) cs / (w c^2 + w0 s^2)];
    # the denominator never vanishes, so this is already continuous in t.
    w, w0 = params.omega, params.omega0
    c, s = np.cos(w * t), np.sin(w * t)
    return w * t + np.arctan((w0 - w) * c * s / (w * c**2 + w0 * s**2))


def breathing_state(params: TrapParams, t: float) -> BreathingState:
    w, w0 = params.omega, params.omega0
    Om = float(breathing_width(params, t))
    k = Om * (w0**2 - w**2) / (w0 * w) * math.cos(w * t) * math.sin(w * t)
    return BreathingState(w0, w, t, Om, k, float(_gouy(params, t)))


@dataclass(frozen=True)
class _Gauss:
    a: complex
    b: complex
    c: complex

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        return np.exp(-self.a * x**2 + self.b * x + self.c)

    def inner(self, other: "_Gauss") -> complex:
        """<self|other> = int conj(self) other dx."""
        A = self.a.conjugate() + other.a
        B = self.b.conjugate() + other.b
        return cmath.sqrt(math.pi / A) * cmath.exp(B * B / (4 * A) + self.c.conjugate() + other.c)


def _evolved_gaussian(params: TrapParams, mass: float, q0: float, t: float) -> _Gauss:
    """Free evolution in the omega-well of (mass w0/pi)^(1/4) exp(-mass w0 (x - q0)^2 / 2)."""
    w, w0 = params.omega, params.omega0
    c, s = math.cos(w * t), math.sin(w * t)
    alpha = w * complex(w0 * c, w * s) / complex(w * c, w0 * s)
    q = q0 * c
    p = -mass * w * q0 * s
    action = -0.25 * mass * w * q0**2 * math.sin(2 * w * t)
    log_norm = 0.25 * math.log(mass * w0 / math.pi) - 0.5 * (
        math.log(abs(complex(c, w0 / w * s))) + 1j * float(_gouy(params, t)))
    a = 0.5 * mass * alpha
    b = mass * alpha * q + 1j * p
    cc = -0.5 * mass * alpha * q * q - 1j * p * q + 1j * action + log_norm
    return _Gauss(a, b, cc)


def cm_wavefunction(params: TrapParams, R, t: float):
    """psi_CM(R, t): breathing Gaussian of mass 2m, starting with width omega0."""
    return _evolved_gaussian(params, M_CM, 0.0, t)(R)


def cm_overlap(params: TrapParams, t: float) -> complex:
    """O(psi_CM, t) = <psi_CM(t)|psi_CM(0)>."""
    return _evolved_gaussian(params, M_CM, 0.0, t).inner(_evolved_gaussian(params, M_CM, 0.0, 0.0))


def cm_overlap_sq(params: TrapParams, t):
    """|O(psi_CM, t)|^2 = [1 + (w0^2 - w^2)^2 / (4 w0^2 w^2) sin^2 wt]^(-1/2)."""
    w, w0 = params.omega, params.omega0
    s2 = np.sin(w * np.asarray(t)) ** 2
    return (1.0 + (w0**2 - w**2) ** 2 / (4 * w0**2 * w**2) * s2) ** -0.5


def _rel_lobes(params: TrapParams, t: float):
    d = 2.0 * params.x0
    return (_evolved_gaussian(params, MU_REL, d, t), _evolved_gaussian(params, MU_REL, -d, t))


def rel_wavefunction_free(params: TrapParams, r, t: float):
    """Noninteracting relative motion: two lobes at r = +-2 x0 cos(wt), sum / sqrt(2).

    Each lobe is normalized separately; the total norm is 1 + <lobe+|lobe->
    which is exp(-2 omega0 x0^2)-small in the separated-well regime.
    """
    plus, minus = _rel_lobes(params, t)
    return (plus(r) + minus(r)) / math.sqrt(2.0)


def rel_overlap_free(params: TrapParams, t: float) -> complex:
    """O(psi_rel^(0), t) = <psi_rel^(0)(t)|psi_rel(0)> from exact Gaussian integrals."""
    now = _rel_lobes(params, t)
    start = _rel_lobes(params, 0.0)
    return 0.5 * sum(g.inner(h) for g in now for h in start)


def rel_overlap_free_sq(params: TrapParams, t):
    """Closed-form |O(psi_rel^(0), t)|^2.

    Direct + exchange + interference terms of the two lobes, with
    w_pm^2(t) = w^2 + w0^2 +- (w^2 - w0^2) cos wt, times the squeezing
    factor shared with the CM motion.  The lobe-return terms depend on the
    half angle wt/2 and the interference phase carries a factor sin wt.
    """
    w, w0, x0 = params.omega, params.omega0, params.x0
    t = np.asarray(t, dtype=float)
    c, s = np.cos(w * t), np.sin(w * t)
    ch2, sh2 = np.cos(w * t / 2) ** 2, np.sin(w * t / 2) ** 2
    wp2 = w**2 + w0**2 + (w**2 - w0**2) * c
    wm2 = w**2 + w0**2 - (w**2 - w0**2) * c
    k = w0 * w**2 * x0**2
    exchange = np.exp(-8 * k * ch2 / wp2)
    direct = np.exp(-8 * k * sh2 / wm2)
    interference = 2 * np.cos(4 * w * w0**2 * (w0**2 + w**2) * x0**2 * s / (wp2 * wm2)) * np.exp(
        -4 * k * (ch2 / wp2 + sh2 / wm2))
    return (exchange + direct + interference) * cm_overlap_sq(params, t)
