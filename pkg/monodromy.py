"""
monodromy.py
Discretized monodromy operator M(t0) = U(t0, t0 - 1): assembly, spectrum,
unit-circle part, time invariance of multipliers and resolvent solves
"""

from dataclasses import dataclass, field
from typing import List, Optional, Tuple

import numpy as np
from scipy.linalg import eig, get_lapack_funcs, lu_factor, lu_solve

from apfun import CircleSet, circle_angle
from config import NumericsConfig
from health_monitor import health_monitor
from logger import logger
from phasespace import FDEModel, Segment, apply_matrix
from propagator import evolution_matrix

# Eigenvalues at or below this modulus approximate the compact tail of M
NONZERO_THRESHOLD = 0.01


class NearSingularError(Exception):
    """z lies within the resolvent guard of the discrete spectrum"""

    def __init__(self, message: str, distance: float, condition: float):
        super().__init__(message)
        self.distance = distance
        self.condition = condition


def _ordering(eigenvalues: np.ndarray) -> np.ndarray:
    """Indices sorting by decreasing modulus, then by angle, so reports are reproducible"""
    return np.lexsort((np.round(circle_angle(np.angle(eigenvalues)), 12),
                       -np.round(np.abs(eigenvalues), 12)))


def hausdorff_distance(a: np.ndarray, b: np.ndarray) -> float:
    """Hausdorff distance between finite point sets in the complex plane"""
    a = np.asarray(a, dtype=complex)
    b = np.asarray(b, dtype=complex)
    if len(a) == 0 and len(b) == 0:
        return 0.0
    if len(a) == 0 or len(b) == 0:
        return float("inf")
    d = np.abs(a[:, None] - b[None, :])
    return float(max(d.min(axis=1).max(), d.min(axis=0).max()))


@dataclass(frozen=True, eq=False)
class MonodromyOperator:
    """Dense N x N realization of U(t0, t0 - 1) with its eigendata, N = n(m+1)"""

    model: FDEModel
    base_time: float
    matrix: np.ndarray
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray
    unit_band_tol: float
    m: int
    substeps: int
    cfg: NumericsConfig = field(repr=False, default=None)

    @property
    def size(self) -> int:
        return self.matrix.shape[0]

    @property
    def spectral_radius(self) -> float:
        return float(np.max(np.abs(self.eigenvalues))) if self.size else 0.0

    def leading(self, count: int = 1) -> np.ndarray:
        """The count eigenvalues of largest modulus"""
        return self.eigenvalues[:count].copy()

    def nonzero_eigenvalues(self, threshold: float = NONZERO_THRESHOLD) -> np.ndarray:
        return self.eigenvalues[np.abs(self.eigenvalues) > threshold]

    def band_candidates(self) -> np.ndarray:
        """Eigenvalues with ||mu| - 1| <= unit_band_tol"""
        return self.eigenvalues[np.abs(np.abs(self.eigenvalues) - 1.0) <= self.unit_band_tol]

    def backward_error(self) -> float:
        """max_j ||M v_j - mu_j v_j|| / ||M|| over unit eigenvectors"""
        scale = max(float(np.linalg.norm(self.matrix, 2)), 1e-300)
        residual = self.matrix @ self.eigenvectors - self.eigenvectors * self.eigenvalues[None, :]
        return float(np.max(np.linalg.norm(residual, axis=0)) / scale)

    def to_dict(self) -> dict:
        return {
            "base_time": float(self.base_time),
            "eigenvalues": [[float(z.real), float(z.imag)] for z in self.eigenvalues],
            "resolution": {"m": self.m, "substeps": self.substeps},
        }


def assemble(model: FDEModel, t0: float, cfg: Optional[NumericsConfig] = None) -> MonodromyOperator:
    """
    Assemble M(t0) column by column and compute its eigendata

    All basis segments are propagated as one batch over [t0 - 1, t0].

    Raises:
        PropagationConfigError: step or output grid incompatible with the model
    """
    cfg = cfg or NumericsConfig.from_env()
    matrix = evolution_matrix(model, t0 - 1.0, t0, cfg.m, cfg.stepper())
    eigenvalues, eigenvectors = eig(matrix)
    health_monitor.increment_eigensolves()
    order = _ordering(eigenvalues)
    eigenvalues = eigenvalues[order]
    eigenvectors = eigenvectors[:, order]
    logger.debug(f"Monodromy of '{model.name}' at t0={t0}: N={matrix.shape[0]}, "
                 f"spectral radius {np.max(np.abs(eigenvalues)):.6g}")
    return MonodromyOperator(model, float(t0), matrix, eigenvalues, eigenvectors,
                             cfg.unit_band_tol, cfg.m, cfg.substeps, cfg)


@dataclass(frozen=True)
class UnitCircleReport:
    """Confirmed unit-circle angles and the band candidates rejected as spurious"""

    angles: CircleSet
    spurious: Tuple[complex, ...]
    confirmation_m: Optional[int]

    def to_dict(self) -> dict:
        return {
            "unit_circle": self.angles.to_list(),
            "spurious": [[float(z.real), float(z.imag)] for z in self.spurious],
            "confirmation_m": self.confirmation_m,
        }


def unit_circle_report(M: MonodromyOperator, confirm: Optional[bool] = None) -> UnitCircleReport:
    """
    Band test ||mu| - 1| <= unit_band_tol with cross-resolution confirmation

    Candidates are recomputed at twice the collocation order (capped at 128);
    a candidate with no refined eigenvalue within 10 * unit_band_tol is spurious.
    """
    cfg = M.cfg or NumericsConfig.from_env()
    confirm = cfg.confirm_unit_circle if confirm is None else confirm
    candidates = M.band_candidates()
    angle_tol = cfg.angle_merge_tol
    if len(candidates) == 0 or not confirm:
        angles = CircleSet.from_angles(np.angle(candidates), angle_tol)
        return UnitCircleReport(angles, (), None)

    refined_cfg = cfg.refined(2)
    if refined_cfg.m == cfg.m:
        refined_cfg = refined_cfg.with_overrides(m=max(cfg.m - 8, 2))
    refined = assemble(M.model, M.base_time, refined_cfg)
    confirmed, spurious = [], []
    for mu in candidates:
        if np.min(np.abs(refined.eigenvalues - mu)) <= 10.0 * M.unit_band_tol:
            confirmed.append(mu)
        else:
            spurious.append(complex(mu))
    if spurious:
        logger.warning(f"Discarded {len(spurious)} spurious unit-circle eigenvalue(s) for "
                       f"'{M.model.name}': {[f'{z:.6g}' for z in spurious]}")
    angles = CircleSet.from_angles(np.angle(np.array(confirmed, dtype=complex)), angle_tol)
    return UnitCircleReport(angles, tuple(spurious), refined_cfg.m)


def unit_circle_spectrum(M: MonodromyOperator, confirm: Optional[bool] = None) -> CircleSet:
    """sigma_Gamma(M) as a set of angles"""
    return unit_circle_report(M, confirm).angles


@dataclass(frozen=True)
class InvarianceReport:
    """Comparison of the nonzero multipliers of M(t0) and M(t1)"""

    t0: float
    t1: float
    hausdorff: float
    periodicity_gap: float
    count_t0: int
    count_t1: int

    def to_dict(self) -> dict:
        return {
            "t0": self.t0,
            "t1": self.t1,
            "hausdorff": self.hausdorff,
            "periodicity_gap": self.periodicity_gap,
            "count_t0": self.count_t0,
            "count_t1": self.count_t1,
        }


def multiplier_invariance_check(model: FDEModel, t0: float, t1: float,
                                cfg: Optional[NumericsConfig] = None) -> InvarianceReport:
    """
    Hausdorff distance of {|mu| > 0.01} between M(t0) and M(t1), plus ||M(t0 + 1) - M(t0)||
    """
    cfg = cfg or NumericsConfig.from_env()
    first = assemble(model, t0, cfg)
    second = assemble(model, t1, cfg)
    shifted = evolution_matrix(model, t0, t0 + 1.0, cfg.m, cfg.stepper())
    gap = float(np.max(np.abs(shifted - first.matrix)))
    a = first.nonzero_eigenvalues()
    b = second.nonzero_eigenvalues()
    distance = hausdorff_distance(a, b)
    logger.debug(f"Multiplier invariance for '{model.name}': t0={t0}, t1={t1}, "
                 f"hausdorff={distance:.3g}, periodicity gap={gap:.3g}")
    return InvarianceReport(float(t0), float(t1), distance, gap, len(a), len(b))


def resolvent_condition(M: MonodromyOperator, z: complex) -> float:
    """2-norm condition number of zI - M"""
    return float(np.linalg.cond(z * np.eye(M.size) - M.matrix))


def _lu_condition(system: np.ndarray, factors) -> float:
    """LAPACK 1-norm condition estimate from the LU factors of system"""
    lu, _ = factors
    gecon, = get_lapack_funcs(("gecon",), (lu,))
    rcond, _ = gecon(lu, float(np.linalg.norm(system, 1)), norm="1")
    return float(1.0 / rcond) if rcond > 0 else float("inf")


def resolvent_solve(M: MonodromyOperator, z: complex, g: Segment, refinements: int = 3,
                    guard: Optional[float] = None, return_condition: bool = False):
    """
    Solve (zI - M) phi = g by LU with iterative refinement

    Args:
        M: monodromy operator
        z: complex shift
        g: right-hand side on the operator's grid
        refinements: refinement sweeps after the first solve
        guard: minimum admissible distance from z to the discrete spectrum
        return_condition: also return the 1-norm condition estimate of zI - M

    Returns:
        phi as a Segment, or (phi, condition) when return_condition is set

    Raises:
        NearSingularError: min |z - mu| <= guard
    """
    guard = (M.cfg.resolvent_guard if M.cfg is not None else 1e-8) if guard is None else guard
    distance = float(np.min(np.abs(M.eigenvalues - z))) if M.size else float("inf")
    system = z * np.eye(M.size) - M.matrix
    if distance <= guard:
        condition = float(np.linalg.cond(system))
        raise NearSingularError(
            f"z={z:.12g} lies {distance:.3g} from the spectrum (guard {guard:.3g}, "
            f"condition {condition:.3g})", distance, condition)

    rhs = g.coordinates()
    factors = lu_factor(system)
    phi = lu_solve(factors, rhs)
    for _ in range(refinements):
        residual = rhs - apply_matrix(system, phi)
        if not np.any(residual):
            break
        phi = phi + lu_solve(factors, residual)

    backward = float(np.linalg.norm(apply_matrix(system, phi) - rhs) /
                     max(np.linalg.norm(system, 2) * np.linalg.norm(phi) + np.linalg.norm(rhs), 1e-300))
    if backward > 1e-10:
        logger.warning(f"Resolvent solve at z={z:.6g} has backward error {backward:.3g}")
    condition = _lu_condition(system, factors)
    logger.debug(f"Resolvent solve at z={z:.6g}: condition estimate {condition:.3g}")
    phi = Segment.from_coordinates(phi, g.dimension, g.horizon)
    return (phi, condition) if return_condition else phi


def leading_multipliers(M: MonodromyOperator, count: int) -> List[complex]:
    return [complex(z) for z in M.leading(count)]


if __name__ == "__main__":
    from phasespace import PeriodicMatrix

    delay = FDEModel.build(1, 1.0, PeriodicMatrix.from_constant([[0.0]]),
                           delays=[(1.0, PeriodicMatrix.from_constant([[-np.pi / 2]]))],
                           name="quarter-turn")
    operator = assemble(delay, 1.0)
    print("leading:", leading_multipliers(operator, 4))
    print("unit circle:", unit_circle_spectrum(operator))
