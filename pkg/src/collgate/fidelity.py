"""Gate map, minimum fidelity and its thermal average.

The minimum fidelity over internal input states reduces to minimizing a
quadratic form w^T G w over the probability simplex (w_k = |chi_k|^2 for
the four internal basis states aa, ab, ba, bb).  With c = cos phi_bb

        [ 1       A       A      -B^2 c ]
    G = [ A       1       A^2    -B C c ]
        [ A       A^2     1      -B C c ]
        [ -B^2 c  -B C c  -B C c  1     ]

where A, B, C are the square roots of |O(psi^(0)_bb)|, |O(psi_bb)| and
|O0(psi_bb)| at the gate time.  ``fidelity_full`` solves the simplex
problem exactly; ``fidelity_closed_form`` is the interior stationary value,
which coincides with it whenever all four weights are positive.
"""

from __future__ import annotations

import csv
import itertools
import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np

from .basis import excited_relative_state, relative_basis
from .errors import AccuracyError, ContractError, DomainError
from .model import TWO_PI, GateSchedule, TrapParams

N_CUT_DEFAULT = 6
THERMAL_N_MAX = 80  # n = 6 needs ~80 levels for a 1e-8 projection tail
THERMAL_CSV_COLUMNS = ("kT_over_hw0", "gamma", "F_full", "F_expansion")


@dataclass(frozen=True)
class GatePhases:
    phi_a: float
    phi_b: float
    phi_bb: float
    phi_ab: float = 0.0

    def __post_init__(self):
        for k, v in asdict(self).items():
            if not math.isfinite(v):
                raise DomainError(f"{k} must be finite")

    @property
    def chi(self) -> float:
        return gate_unitary(self)[1]

    @property
    def quality_residue(self) -> float:
        """Distance of chi from pi on the circle, in [0, pi]."""
        return abs(math.remainder(self.chi - math.pi, TWO_PI))


def gate_unitary(phases: GatePhases) -> tuple[np.ndarray, float]:
    """Diagonal phases for aa, ab, ba, bb and the residue chi.

    chi = Phi_aa + Phi_bb - Phi_ab - Phi_ba is invariant under single-qubit
    phases; the map is a phase gate iff chi = pi (mod 2 pi).
    """
    p = phases
    diag = -np.array([2 * p.phi_a,
                      p.phi_a + p.phi_b + p.phi_ab,
                      p.phi_a + p.phi_b + p.phi_ab,
                      2 * p.phi_b + p.phi_bb])
    chi = float(diag[0] + diag[3] - diag[1] - diag[2])
    return np.exp(1j * diag), chi


def gram_matrix(A: float, B: float, C: float, phi_bb: float) -> np.ndarray:
    c = math.cos(phi_bb)
    bb, bc = -B * B * c, -B * C * c
    return np.array([[1.0, A, A, bb],
                     [A, 1.0, A * A, bc],
                     [A, A * A, 1.0, bc],
                     [bb, bc, bc, 1.0]])


def _simplex_min(G: np.ndarray) -> tuple[float, np.ndarray]:
    """min w^T G w over the probability simplex by enumerating faces.

    On each face S the constrained stationary point solves the bordered
    system [G_SS -1; 1^T 0] [w; lam] = [0; 1]; every feasible solution is a
    candidate and the true minimizer is among them.
    """
    n = len(G)
    best, arg = math.inf, None
    for k in range(1, n + 1):
        for S in itertools.combinations(range(n), k):
            S = list(S)
            K = np.zeros((k + 1, k + 1))
            K[:k, :k] = G[np.ix_(S, S)]
            K[:k, k] = -1.0
            K[k, :k] = 1.0
            rhs = np.zeros(k + 1)
            rhs[k] = 1.0
            sol, *_ = np.linalg.lstsq(K, rhs, rcond=1e-13)
            if not np.allclose(K @ sol, rhs, atol=1e-10):
                continue
            w = sol[:k]
            if np.any(w < -1e-12):
                continue
            val = float(w @ G[np.ix_(S, S)] @ w)
            if val < best:
                best, arg = val, np.zeros(n)
                arg[S] = np.clip(w, 0.0, None)
    return best, arg


def _check_unit(**kw):
    for k, v in kw.items():
        if not (-1e-12 <= v <= 1 + 1e-12):
            raise ContractError(f"{k} = {v} outside [0, 1]")


def fidelity_full(A: float, B: float, C: float, phi_bb: float, *, return_state: bool = False):
    """Minimum gate fidelity from the overlap roots A, B, C and phi_bb."""
    _check_unit(A=A, B=B, C=C)
    F, w = _simplex_min(gram_matrix(A, B, C, phi_bb))
    if not (-1e-9 <= F <= 1 + 1e-9):
        raise AccuracyError(f"fidelity {F} outside [0, 1]; inconsistent overlap inputs")
    F = min(max(F, 0.0), 1.0)
    return (F, w) if return_state else F


def fidelity_closed_form(A: float, B: float, C: float, phi_bb: float) -> float:
    """Interior stationary value of the simplex problem.

        F = 1/2 [1 - A^2 - B^2 ((1 + A^2) B^2 - 4 A B C + 2 C^2) c^2]
            / [(1 - A) (2 + B ((1 - A) B + 2 C) c) - B^2 (B - C)^2 c^2]

    Equal to fidelity_full when the minimizing input state has weight on
    all four basis states; undefined (0/0) at A = 1.
    """
    c = math.cos(phi_bb)
    num = 1 - A**2 - B**2 * ((1 + A**2) * B**2 - 4 * A * B * C + 2 * C**2) * c**2
    den = (1 - A) * (2 + B * ((1 - A) * B + 2 * C) * c) - B**2 * (B - C) ** 2 * c**2
    if den == 0:
        raise DomainError("closed form is singular for these inputs")
    return 0.5 * num / den


def fidelity_simple(O0_abs: float, phi_bb: float) -> float:
    """F = (1 - |O0| cos phi_bb) / 2, valid for tau = N T_osc."""
    _check_unit(O0_abs=O0_abs)
    return 0.5 * (1.0 - O0_abs * math.cos(phi_bb))


# -- thermal ensemble ----------------------------------------------------------

def boltzmann_gamma(kT: float) -> float:
    """gamma = exp(-hbar omega0 / k_B T) with kT in units of hbar omega0."""
    if kT < 0:
        raise DomainError("temperature must be >= 0")
    return 0.0 if kT == 0 else math.exp(-1.0 / kT)


def thermal_weights(kT: float, n_cut: int = N_CUT_DEFAULT) -> np.ndarray:
    """P_n proportional to (1 - gamma) gamma^n, n = 0..n_cut, normalized."""
    if n_cut < 1:
        raise DomainError("n_cut must be >= 1")
    g = boltzmann_gamma(kT)
    P = (1 - g) * g ** np.arange(n_cut + 1)
    if g == 0:
        P[0] = 1.0
    return P / P.sum()


def _per_n_array(per_n, n_cut):
    if per_n is None or len(per_n) < n_cut + 1:
        have = 0 if per_n is None else len(per_n)
        raise ContractError(f"per_n data needed for n = 0..{n_cut}, got {have} entries")
    arr = np.asarray(per_n, dtype=float)[: n_cut + 1]
    return arr[:, 0] * np.cos(arr[:, 1])  # X_n = |O0_n| cos phi_n


def fidelity_thermal(per_n, kT: float, n_cut: int = N_CUT_DEFAULT) -> tuple[float, float]:
    """(full weighted sum, telescoped gamma expansion) at temperature kT / hbar omega0.

    ``per_n`` holds (|O0|, phi) at the gate time for n = 0..n_cut.  The full
    form averages (1 - X_n)/2 over the normalized weights; the expansion is
    F(0) - 1/2 sum_{n>=1} gamma^n (X_n - X_{n-1}).
    """
    X = _per_n_array(per_n, n_cut)
    P = thermal_weights(kT, n_cut)
    full = 0.5 * (1.0 - float(P @ X))
    g = boltzmann_gamma(kT)
    expansion = 0.5 * (1.0 - X[0]) - 0.5 * sum(g**n * (X[n] - X[n - 1]) for n in range(1, n_cut + 1))
    return full, expansion


def excited_phase_data(params: TrapParams, schedule: GateSchedule | None = None, *,
                       n_cut: int = N_CUT_DEFAULT, n_max: int = THERMAL_N_MAX, jobs: int = 1):
    """(|O0(psi_(n), tau)|, phi_(n)(tau)) for n = 0..n_cut."""
    schedule = schedule or GateSchedule()
    args = [(params, schedule, n, n_max) for n in range(n_cut + 1)]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as ex:
            return list(ex.map(_excited_one, args))
    return [_excited_one(a) for a in args]


def _excited_one(arg):
    from .dynamics import free_trajectory, propagate_same
    from .observables import collisional_phase

    params, schedule, n, n_max = arg
    _, init = excited_relative_state(n, params, relative_basis(params, n_max))
    tr = propagate_same(init, params, schedule)
    fr = free_trajectory(tr)
    O0 = complex(np.vdot(tr.snapshots[-1], fr.snapshots[-1]))
    return abs(O0), float(collisional_phase(tr, fr)[-1])


@dataclass
class FidelityReport:
    A: float
    B: float
    C: float
    F0: float
    gamma: float
    per_n: list = field(default_factory=list)
    FT: list = field(default_factory=list)  # rows (kT, gamma, F_full, F_expansion)
    phi_bb: float = 0.0

    def to_dict(self) -> dict:
        return asdict(self)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)


def overlap_roots(traj, free_traj) -> tuple[float, float, float, float]:
    """(A, B, C, phi_bb) at the end of a bb trajectory."""
    from .observables import collisional_phase, overlap_series

    O, O0 = overlap_series(traj, free_traj)
    O_free, _ = overlap_series(free_traj)
    phi = float(collisional_phase(traj, free_traj)[-1])
    roots = [min(abs(x[-1]), 1.0) ** 0.5 for x in (O_free, O, O0)]
    return (*roots, phi)


def fidelity_report(traj, free_traj, per_n=None, temperatures=(), n_cut: int = N_CUT_DEFAULT):
    A, B, C, phi = overlap_roots(traj, free_traj)
    rep = FidelityReport(A, B, C, fidelity_full(A, B, C, phi), 0.0, phi_bb=phi)
    if per_n is not None:
        rep.per_n = [list(map(float, row)) for row in per_n]
        for kT in temperatures:
            full, exp_ = fidelity_thermal(per_n, kT, n_cut)
            rep.FT.append([float(kT), boltzmann_gamma(kT), full, exp_])
        if temperatures:
            rep.gamma = boltzmann_gamma(max(temperatures))
    return rep


def write_thermal_csv(path, rows):
    from .dynamics import fmt

    with open(path, "w", newline="", encoding="utf-8") as fh:
        fh.write("# collgate thermal csv v1\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(THERMAL_CSV_COLUMNS)
        for row in rows:
            w.writerow([fmt(x) for x in row])
