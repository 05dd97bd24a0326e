"""Trap parameters, units, switching potentials and the 1D contact strength.

Internal units: hbar = m = omega = 1, where omega is the angular frequency of
the merged well seen by |b> atoms during the gate.  Lengths are in
a_x = sqrt(hbar / m omega), energies in hbar*omega, times in 1/omega.  One
oscillation period T_osc is therefore 2*pi.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import asdict, dataclass, replace
from pathlib import Path

import numpy as np

from .errors import ContractError, DomainError

HBAR = 1.054571817e-34  # J s
KB = 1.380649e-23  # J/K
MU_B = 9.2740100783e-24  # J/T
MU_0 = 1.25663706212e-6  # T m / A
RB87_MASS = 1.4432e-25  # kg

TWO_PI = 2.0 * math.pi
SEPARATION_OVERLAP_LIMIT = 1e-6


class SeparatedWellWarning(UserWarning):
    """The two initial wells are not well separated."""


class AttractiveInteractionWarning(UserWarning):
    pass


@dataclass(frozen=True)
class TrapParams:
    """Dimensionless gate parameters.

    ``omega`` is the unit of frequency and is kept only so formulas read
    like the physics; it must be 1.
    """

    omega0: float = 2.0
    omega_perp: float = 150.0 / 17.23
    x0: float = 5.0
    a_bb: float = 0.0621
    a_ab: float = 0.0621
    omega: float = 1.0
    mass_si: float | None = None
    omega_si: float | None = None

    def __post_init__(self):
        for name in ("omega0", "omega", "x0", "a_bb", "a_ab", "omega_perp"):
            if not math.isfinite(getattr(self, name)):
                raise DomainError(f"{name} must be finite")
        if self.omega0 <= 0 or self.omega <= 0:
            raise DomainError("trap frequencies must be positive")
        if self.omega_perp < 0:
            raise DomainError("omega_perp must be non-negative")
        if self.x0 < 0:
            raise DomainError("x0 must be non-negative")
        if not math.isclose(self.omega, 1.0):
            raise DomainError("internal units fix omega = 1")
        for name in ("mass_si", "omega_si"):
            v = getattr(self, name)
            if v is not None and not v > 0:
                raise DomainError(f"{name} must be positive")
        if self.omega0 <= self.omega:
            warnings.warn(
                "omega0 <= omega: the barrier wells are not stiffer than the merged well",
                SeparatedWellWarning,
                stacklevel=3,
            )
        if self.well_overlap > SEPARATION_OVERLAP_LIMIT:
            warnings.warn(
                f"ground-state overlap of the two wells is {self.well_overlap:.3g} "
                f"> {SEPARATION_OVERLAP_LIMIT:g}; separated-well assumption degrades",
                SeparatedWellWarning,
                stacklevel=3,
            )

    @property
    def well_overlap(self) -> float:
        """<psi_-|psi_+> = exp(-omega0 x0^2) for the two initial wells."""
        return math.exp(-self.omega0 * self.x0**2)

    @property
    def a0(self) -> float:
        """Ground-state width of a separated well, sqrt(hbar / m omega0)."""
        return math.sqrt(1.0 / self.omega0)

    @property
    def omega_tilde(self) -> float:
        return math.sqrt((self.omega**2 + self.omega0**2) / 2.0)

    @property
    def t_osc(self) -> float:
        return TWO_PI / self.omega

    @property
    def length_unit_m(self) -> float:
        """a_x in metres; needs the SI anchors."""
        self._require_si()
        return math.sqrt(HBAR / (self.mass_si * self.omega_si))

    def _require_si(self):
        if self.mass_si is None or self.omega_si is None:
            raise ContractError("SI anchors (mass_si, omega_si) are not set")

    def with_(self, **changes) -> "TrapParams":
        return replace(self, **changes)

    def scattering_length(self, pair: str) -> float:
        if pair == "bb":
            return self.a_bb
        if pair in ("ab", "ba"):
            return self.a_ab
        if pair == "aa":
            return 0.0
        raise ContractError(f"unknown internal-state pair {pair!r}")


@dataclass(frozen=True)
class SITrap:
    """Physical trap description.  Frequencies are ordinary (Hz), omega = 2 pi nu."""

    mass_kg: float
    omega_hz: float
    omega_perp_hz: float
    omega0_hz: float
    x0_m: float
    a_bb_m: float
    a_ab_m: float


def to_dimensionless(si: SITrap) -> TrapParams:
    values = asdict(si)
    for key in ("mass_kg", "omega_hz", "omega0_hz"):
        if not values[key] > 0:
            raise DomainError(f"{key} must be positive, got {values[key]!r}")
    for key in ("omega_perp_hz", "x0_m"):
        if values[key] < 0:
            raise DomainError(f"{key} must be non-negative")
    omega_si = TWO_PI * si.omega_hz
    a_x = math.sqrt(HBAR / (si.mass_kg * omega_si))
    return TrapParams(
        omega0=si.omega0_hz / si.omega_hz,
        omega_perp=si.omega_perp_hz / si.omega_hz,
        x0=si.x0_m / a_x,
        a_bb=si.a_bb_m / a_x,
        a_ab=si.a_ab_m / a_x,
        mass_si=si.mass_kg,
        omega_si=omega_si,
    )


def to_si(params: TrapParams) -> SITrap:
    params._require_si()
    a_x = params.length_unit_m
    nu = params.omega_si / TWO_PI
    return SITrap(
        mass_kg=params.mass_si,
        omega_hz=nu,
        omega_perp_hz=params.omega_perp * nu,
        omega0_hz=params.omega0 * nu,
        x0_m=params.x0 * a_x,
        a_bb_m=params.a_bb * a_x,
        a_ab_m=params.a_ab * a_x,
    )


def temperature_kelvin(kT_over_hw0: float, params: TrapParams) -> float:
    """Convert k_B T in units of hbar*omega0 to kelvin."""
    params._require_si()
    return kT_over_hw0 * HBAR * params.omega0 * params.omega_si / KB


def time_seconds(t_internal: float, params: TrapParams) -> float:
    params._require_si()
    return t_internal / params.omega_si


def effective_1d_coupling(params: TrapParams, pair: str = "bb") -> float:
    """Strength g of u(x1 - x2) = g delta(x1 - x2) after integrating out y, z.

    Returns 2 a_s omega_perp in units of hbar*omega*a_x.
    """
    a_s = params.scattering_length(pair)
    if a_s < 0:
        warnings.warn("negative scattering length (attractive contact)",
                      AttractiveInteractionWarning, stacklevel=2)
    return 2.0 * a_s * params.omega_perp


@dataclass(frozen=True)
class GateSchedule:
    """Gate timing.  ``tau`` is measured in T_osc."""

    n_periods: int = 7
    use_shifted_period: bool = False
    delta_t: float | None = None  # period increase, in T_osc

    def __post_init__(self):
        if int(self.n_periods) != self.n_periods or self.n_periods < 0:
            raise DomainError("n_periods must be a non-negative integer")
        if self.use_shifted_period and self.delta_t is None:
            raise ContractError("use_shifted_period needs a measured delta_t")

    @property
    def tau(self) -> float:
        if self.use_shifted_period:
            return self.n_periods * (1.0 + self.delta_t)
        return float(self.n_periods)

    @property
    def tau_internal(self) -> float:
        return self.tau * TWO_PI

    @property
    def is_integer_periods(self) -> bool:
        return not self.use_shifted_period or self.delta_t == 0.0


def potential_va(x, params: TrapParams):
    """Double half-parabola with minima at +-x0 (cusp at the origin)."""
    x = np.asarray(x, dtype=float)
    return 0.5 * params.omega0**2 * np.where(x >= 0, (x - params.x0) ** 2,
                                             (x + params.x0) ** 2)


def potential_vb(x, t, params: TrapParams, schedule: GateSchedule):
    """Potential seen by |b>: merged omega-well for 0 <= t <= tau, v_a otherwise.

    ``t`` is in internal units (1/omega).
    """
    x = np.asarray(x, dtype=float)
    if 0.0 <= t <= schedule.tau_internal:
        return 0.5 * params.omega**2 * x**2
    return potential_va(x, params)


# -- configuration ---------------------------------------------------------

_DIMENSIONLESS_KEYS = {
    "omega0_ratio": "omega0",
    "omega_perp_ratio": "omega_perp",
    "x0_over_ax": "x0",
    "a_bb_over_ax": "a_bb",
    "a_ab_over_ax": "a_ab",
}
_SI_KEYS = {"mass_kg", "omega_hz", "omega_perp_hz", "omega0_hz", "a_bb_nm",
            "a_ab_nm", "x0_nm"}
_SCHEDULE_KEYS = {"n_periods"}
KNOWN_KEYS = set(_DIMENSIONLESS_KEYS) | _SI_KEYS | _SCHEDULE_KEYS

PRESETS = {
    "paper-fig2": {
        "mass_kg": RB87_MASS,
        "omega_hz": 17.23e3,
        "omega_perp_hz": 150e3,
        "omega0_ratio": 2.0,
        "x0_over_ax": 5.0,
        "a_bb_nm": 5.1,
        "a_ab_nm": 5.1,
        "n_periods": 7,
    },
}


def parse_config_text(text: str) -> dict:
    """Parse ``key = value`` lines; ``#`` starts a comment."""
    out = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ContractError(f"line {lineno}: expected key = value")
        key, value = (s.strip() for s in line.split("=", 1))
        if key not in KNOWN_KEYS:
            raise ContractError(f"line {lineno}: unknown key {key!r}")
        try:
            out[key] = int(value) if key == "n_periods" else float(value)
        except ValueError:
            raise ContractError(f"line {lineno}: bad number {value!r}") from None
    return out


def load_config(path) -> dict:
    return parse_config_text(Path(path).read_text(encoding="utf-8"))


def params_from_mapping(cfg: dict) -> tuple[TrapParams, GateSchedule]:
    """Build parameters from a merged config mapping (preset/file/flags)."""
    unknown = set(cfg) - KNOWN_KEYS
    if unknown:
        raise ContractError(f"unknown config keys: {sorted(unknown)}")
    schedule = GateSchedule(n_periods=int(cfg.get("n_periods", 7)))
    if "mass_kg" in cfg or "omega_hz" in cfg:
        missing = {"mass_kg", "omega_hz"} - set(cfg)
        if "omega_perp_hz" not in cfg and "omega_perp_ratio" not in cfg:
            missing.add("omega_perp_hz")
        if missing:
            raise ContractError(f"SI config lacks {sorted(missing)}")
        omega_si = TWO_PI * cfg["omega_hz"]
        if cfg["mass_kg"] <= 0 or omega_si <= 0:
            raise DomainError("mass_kg and omega_hz must be positive")
        a_x = math.sqrt(HBAR / (cfg["mass_kg"] * omega_si))
        omega0_hz = cfg.get("omega0_hz", cfg.get("omega0_ratio", 2.0) * cfg["omega_hz"])
        x0_m = cfg["x0_nm"] * 1e-9 if "x0_nm" in cfg else cfg.get("x0_over_ax", 5.0) * a_x
        a_bb_m = cfg["a_bb_nm"] * 1e-9 if "a_bb_nm" in cfg else cfg.get("a_bb_over_ax", 0.0) * a_x
        if "a_ab_nm" in cfg:
            a_ab_m = cfg["a_ab_nm"] * 1e-9
        elif "a_ab_over_ax" in cfg:
            a_ab_m = cfg["a_ab_over_ax"] * a_x
        else:
            a_ab_m = a_bb_m
        si = SITrap(mass_kg=cfg["mass_kg"], omega_hz=cfg["omega_hz"],
                    omega_perp_hz=cfg.get("omega_perp_hz",
                                          cfg.get("omega_perp_ratio", 0.0) * cfg["omega_hz"]),
                    omega0_hz=omega0_hz,
                    x0_m=x0_m, a_bb_m=a_bb_m, a_ab_m=a_ab_m)
        return to_dimensionless(si), schedule
    kwargs = {field: cfg[key] for key, field in _DIMENSIONLESS_KEYS.items() if key in cfg}
    if "a_bb" in kwargs and "a_ab" not in kwargs:
        kwargs["a_ab"] = kwargs["a_bb"]
    return TrapParams(**kwargs), schedule


def preset(name: str) -> tuple[TrapParams, GateSchedule]:
    try:
        return params_from_mapping(PRESETS[name])
    except KeyError:
        raise ContractError(f"unknown preset {name!r}; have {sorted(PRESETS)}") from None
