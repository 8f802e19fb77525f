"""Kossakowski matrices and complete-positivity audits.

Writing any of the master-equation generators in the canonical form

    drho/dt = -(i/hbar)[H', rho]
              + sum_jk a_jk (F_j rho F_k - (1/2){F_k F_j, rho})

with F_1 = q, F_2 = p fixes a 2x2 Hermitian coefficient matrix `a` (the
Kossakowski matrix) up to Hamiltonian reshuffling.  The generator is of
completely positive (Lindblad) type exactly when a >= 0.  For the
time-dependent coefficient set the matrix is

    a(t) = [[ -2 Gamma,        -Theta + i Upsilon ],
            [ -Theta - i Upsilon,            0    ]] / hbar^2

whose determinant -(Theta^2 + Upsilon^2)/hbar^4 can never be positive:
the exact generator is never of CP-semigroup form unless Theta and
Upsilon both vanish.

Constant-coefficient variants:

    JZ  : diag(4 m gamma kB T / hbar^2, 0)             (CP)
    CL  : adds  a_12 = -i gamma / hbar                 (det < 0, never CP)
    CCL : adds  a_22 = gamma / (4 m kB T)              (det = 0, rank 1, CP)
"""

import json
from dataclasses import dataclass, field

import numpy as np

from .bath import PhysicalConstants
from .dynamics import Variant

_HERMITICITY_TOL = 1e-12
_DEFAULT_CP_TOL = 1e-12  # relative to the spectral norm


@dataclass(frozen=True)
class KossakowskiMatrix:
    """2x2 Hermitian coefficient matrix in the (q, p) operator basis."""

    a: np.ndarray
    t: float | None = None

    def __post_init__(self):
        a = np.asarray(self.a, dtype=complex)
        if a.shape != (2, 2):
            raise ValueError("Kossakowski matrix must be 2x2")
        object.__setattr__(self, "a", a)

    @property
    def norm(self):
        """Spectral norm (largest singular value)."""
        return float(np.linalg.norm(self.a, 2))

    def det(self):
        return float(np.linalg.det(self.a).real)


def min_eigenvalue(matrix):
    """Smaller eigenvalue of a 2x2 Hermitian matrix, in closed form.

    Checks Hermiticity to a relative 1e-12 first; the closed form
    (tr - sqrt(tr^2 - 4 det)) / 2 avoids any iterative solver.
    """
    a = matrix.a if isinstance(matrix, KossakowskiMatrix) else \
        np.asarray(matrix, dtype=complex)
    scale = max(float(np.max(np.abs(a))), 1e-300)
    if np.max(np.abs(a - a.conj().T)) > _HERMITICITY_TOL * scale:
        raise ValueError("matrix is not Hermitian to 1e-12")
    tr = a[0, 0].real + a[1, 1].real
    det = (a[0, 0] * a[1, 1] - a[0, 1] * a[1, 0]).real
    disc = max(tr * tr - 4.0 * det, 0.0)
    return 0.5 * (tr - np.sqrt(disc))


def assemble_hpz_matrix(coefficients, t, constants=PhysicalConstants()):
    """Kossakowski matrix of the time-dependent generator at grid time t."""
    grid = coefficients.grid
    h = grid[1] - grid[0]
    idx = int(round((t - grid[0]) / h))
    if idx < 0 or idx >= grid.size or abs(grid[idx] - t) > 1e-9 * max(h, 1.0):
        raise ValueError(f"t = {t:g} is not a node of the coefficient grid")
    hb2 = constants.hbar ** 2
    gamma_t = coefficients.Gamma[idx]
    theta_t = coefficients.Theta[idx]
    upsilon_t = coefficients.Upsilon[idx]
    a = np.array([[-2.0 * gamma_t, -theta_t + 1j * upsilon_t],
                  [-theta_t - 1j * upsilon_t, 0.0]], dtype=complex) / hb2
    return KossakowskiMatrix(a=a, t=float(t))


def assemble_constant_matrix(variant, *, m, gamma, T,
                             constants=PhysicalConstants()):
    """Kossakowski matrix of a constant-coefficient variant."""
    variant = Variant(variant)
    if m <= 0.0 or gamma < 0.0 or T <= 0.0:
        raise ValueError("require m > 0, gamma >= 0, T > 0")
    hbar, kb = constants.hbar, constants.k_B
    a11 = 4.0 * m * gamma * kb * T / hbar ** 2
    if variant is Variant.JZ:
        a = np.diag([a11, 0.0]).astype(complex)
    elif variant is Variant.CL:
        a = np.array([[a11, -1j * gamma / hbar],
                      [1j * gamma / hbar, 0.0]], dtype=complex)
    elif variant is Variant.CCL:
        a = np.array([[a11, -1j * gamma / hbar],
                      [1j * gamma / hbar, gamma / (4.0 * m * kb * T)]],
                     dtype=complex)
    else:
        raise ValueError(
            f"no constant Kossakowski matrix for variant {variant.value}")
    return KossakowskiMatrix(a=a)


@dataclass
class CPAuditReport:
    """Eigenvalue scan of Kossakowski matrices over a time window."""

    times: np.ndarray
    lambda_min: np.ndarray
    det: np.ndarray
    norm: np.ndarray
    verdict: str  # "CP-semigroup-form" or "NotCP"
    tol: float
    first_violation_time: float | None
    flags: list[str] = field(default_factory=list)

    def to_json_dict(self):
        return {
            "verdict": self.verdict,
            "tol": self.tol,
            "first_violation_time": self.first_violation_time,
            "flags": list(self.flags),
            "n_times": int(self.times.size),
            "min_lambda_min": float(np.min(self.lambda_min)),
            "max_norm": float(np.max(self.norm)),
            "times": [float(t) for t in self.times],
            "lambda_min": [float(v) for v in self.lambda_min],
            "det": [float(v) for v in self.det],
            "norm": [float(v) for v in self.norm],
        }

    def to_json(self, indent=2):
        return json.dumps(self.to_json_dict(), indent=indent, sort_keys=True)


def audit_cp(source, t_grid=None, tol=_DEFAULT_CP_TOL,
             constants=PhysicalConstants()):
    """Scan min eigenvalues and classify the generator.

    `source` is either an HPZCoefficients table (t_grid defaults to its
    grid, and must be a subset of grid nodes) or a single constant
    KossakowskiMatrix (t_grid then only labels the report).  The verdict
    is "NotCP" as soon as one sampled eigenvalue dips below
    -tol * spectral norm at that time.
    """
    matrices = []
    if isinstance(source, KossakowskiMatrix):
        times = np.atleast_1d(np.asarray(
            t_grid if t_grid is not None else [0.0], dtype=float))
        matrices = [source] * times.size
    else:
        times = np.asarray(t_grid if t_grid is not None else source.grid,
                           dtype=float)
        matrices = [assemble_hpz_matrix(source, float(t), constants)
                    for t in times]

    lam = np.array([min_eigenvalue(m) for m in matrices])
    det = np.array([m.det() for m in matrices])
    norm = np.array([m.norm for m in matrices])
    floor = -tol * np.maximum(norm, 1e-300)
    bad = lam < floor
    first = float(times[np.argmax(bad)]) if np.any(bad) else None
    verdict = "NotCP" if np.any(bad) else "CP-semigroup-form"

    flags = []
    # rank-1 flag: positive semidefinite with a vanishing determinant,
    # i.e. a single Lindblad operator reproduces the dissipator
    if verdict == "CP-semigroup-form" and np.all(
            np.abs(det) <= tol * np.maximum(norm, 1e-300) ** 2) \
            and np.all(norm > 0.0):
        flags.append("rank-1")

    return CPAuditReport(times=times, lambda_min=lam, det=det, norm=norm,
                         verdict=verdict, tol=tol,
                         first_violation_time=first, flags=flags)
