"""
fleet.py
Acceptance models with closed-form oracles, and the demo runner over them
"""

import time
from dataclasses import dataclass
from typing import Callable, Dict, List, Optional, Sequence

import numpy as np
from scipy.optimize import newton

from apfun import TrigPolynomial
from config import NumericsConfig
from logger import logger
from monodromy import assemble
from phasespace import DistributedKernel, FDEModel, PeriodicMatrix
from solver import solve_ap

SQRT2 = float(np.sqrt(2.0))

COUPLED_A = [[-1.0, 0.5], [0.0, -2.0]]
COUPLED_B = [[0.0, -0.3], [0.2, 0.0]]
COUPLED_FORCING = ((1.0, [1.0, 0.5j]), (SQRT2, [0.0, 1.0]))


def characteristic_root(a: complex, b: complex, tau: float, guess: complex) -> complex:
    """
    Root of lambda = a + b exp(-lambda tau) by Newton's method

    The multiplier of the scalar autonomous delay equation x' = a x + b x(t - tau)
    belonging to this root is exp(lambda).
    """
    f = lambda lam: lam - a - b * np.exp(-lam * tau)
    fprime = lambda lam: 1.0 + b * tau * np.exp(-lam * tau)
    return complex(newton(f, complex(guess), fprime=fprime, tol=1e-15, maxiter=100, disp=False))


# ============================================
# MODELS
# ============================================

def _scalar(value) -> PeriodicMatrix:
    return PeriodicMatrix.from_constant([[value]])


def decay() -> FDEModel:
    """x' = -x"""
    return FDEModel.build(1, 1.0, _scalar(-1.0), name="decay")


def periodic_decay() -> FDEModel:
    """x' = (-1 + cos 2 pi t) x"""
    A = PeriodicMatrix.from_fourier({0: [[-1.0]], 1: [[0.5]], -1: [[0.5]]})
    return FDEModel.build(1, 1.0, A, name="periodic_decay")


def unit_delay() -> FDEModel:
    """x'(t) = -x(t - 1)"""
    return FDEModel.build(1, 1.0, _scalar(0.0), delays=[(1.0, _scalar(-1.0))], name="unit_delay")


def quarter_turn(forcing_frequency: Optional[float] = None, amplitude: complex = 1.0) -> FDEModel:
    """x'(t) = -(pi/2) x(t - 1), optionally forced by amplitude * exp(i lambda t)"""
    forcing = (TrigPolynomial.single(forcing_frequency, [amplitude])
               if forcing_frequency is not None else None)
    name = "quarter_turn" if forcing is None else f"quarter_turn_forced_{forcing_frequency:.6g}"
    return FDEModel.build(1, 1.0, _scalar(0.0), delays=[(1.0, _scalar(-np.pi / 2.0))],
                          forcing=forcing, name=name)


def forced_decay() -> FDEModel:
    """x' = -x + exp(i t)"""
    return FDEModel.build(1, 1.0, _scalar(-1.0), forcing=TrigPolynomial.single(1.0, [1.0]),
                          name="forced_decay")


def forced_delay() -> FDEModel:
    """x'(t) = -0.5 x(t - 1) + exp(i t) + 0.4 exp(i sqrt2 t)"""
    forcing = TrigPolynomial.from_terms([(1.0, [1.0]), (SQRT2, [0.4])], 1)
    return FDEModel.build(1, 1.0, _scalar(0.0), delays=[(1.0, _scalar(-0.5))],
                          forcing=forcing, name="forced_delay")


def constant_drive() -> FDEModel:
    """x' = 1: resonant, the multiplier 1 meets the constant forcing"""
    return FDEModel.build(1, 1.0, _scalar(0.0), forcing=TrigPolynomial.single(0.0, [1.0]),
                          name="constant_drive")


def kernel_feedback(forcing_frequency: Optional[float] = None) -> FDEModel:
    """x'(t) = -x(t) - 2 int_{-1}^{0} exp(theta) x(t + theta) d theta, optionally forced by exp(i lambda t)"""
    kernel = DistributedKernel.exponential([[-2.0]], decay=1.0, order=32)
    forcing = (TrigPolynomial.single(forcing_frequency, [1.0])
               if forcing_frequency is not None else None)
    return FDEModel.build(1, 1.0, _scalar(-1.0), kernel=kernel, forcing=forcing, name="kernel_feedback")


def coupled_delay() -> FDEModel:
    """Two-dimensional x'(t) = A x(t) + B x(t - 1) + f(t) with COUPLED_A, COUPLED_B, COUPLED_FORCING"""
    forcing = TrigPolynomial.from_terms([(lam, c) for lam, c in COUPLED_FORCING], 2)
    return FDEModel.build(2, 1.0, PeriodicMatrix.from_constant(COUPLED_A),
                          delays=[(1.0, PeriodicMatrix.from_constant(COUPLED_B))],
                          forcing=forcing, name="coupled_delay")


# ============================================
# ORACLES
# ============================================

def forced_decay_amplitude(frequency: float = 1.0) -> complex:
    return 1.0 / (1.0 + 1j * frequency)


def forced_delay_amplitude(frequency: float, coefficient: complex, b: float = -0.5) -> complex:
    """C with i lambda C = b C exp(-i lambda) + c"""
    return coefficient / (1j * frequency - b * np.exp(-1j * frequency))


def _kernel_mean(s: complex) -> complex:
    """int_{-1}^{0} exp(s theta) d theta"""
    return (1.0 - np.exp(-s)) / s if abs(s) > 1e-12 else 1.0 - s / 2.0


def kernel_characteristic_root(guess: complex) -> complex:
    """Root of lambda = -1 - 2 int_{-1}^{0} exp((1 + lambda) theta) d theta, the kernel_feedback spectrum"""
    def f(lam):
        return lam + 1.0 + 2.0 * _kernel_mean(1.0 + lam)

    def fprime(lam):
        s = 1.0 + lam
        return 1.0 + 2.0 * (np.exp(-s) * (s + 1.0) - 1.0) / s ** 2

    return complex(newton(f, complex(guess), fprime=fprime, tol=1e-15, maxiter=100, disp=False))


def kernel_feedback_amplitude(frequency: float) -> complex:
    return 1.0 / (1j * frequency + 1.0 + 2.0 * _kernel_mean(1.0 + 1j * frequency))


def coupled_delay_amplitude(frequency: float, coefficient) -> np.ndarray:
    """C with (i lambda I - A - B exp(-i lambda)) C = c"""
    system = 1j * frequency * np.eye(2) - np.asarray(COUPLED_A) - np.asarray(COUPLED_B) * np.exp(-1j * frequency)
    return np.linalg.solve(system, np.asarray(coefficient, dtype=complex))


def unit_delay_multipliers() -> List[complex]:
    root = characteristic_root(0.0, -1.0, 1.0, -0.3 + 1.3j)
    return [complex(np.exp(root)), complex(np.exp(np.conj(root)))]


@dataclass(frozen=True)
class FleetRow:
    case: str
    quantity: str
    computed: complex
    expected: complex
    error: float
    tolerance: float

    @property
    def passed(self) -> bool:
        return bool(np.isfinite(self.error) and self.error <= self.tolerance)

    def to_dict(self) -> dict:
        finite = lambda x: float(x) if np.isfinite(x) else None
        return {
            "case": self.case,
            "quantity": self.quantity,
            "computed": [finite(self.computed.real), finite(self.computed.imag)],
            "expected": [finite(self.expected.real), finite(self.expected.imag)],
            "error": finite(self.error),
            "tolerance": self.tolerance,
            "passed": self.passed,
        }


def _nearest(eigenvalues: np.ndarray, target: complex) -> complex:
    return complex(eigenvalues[int(np.argmin(np.abs(eigenvalues - target)))])


def _multiplier_rows(case: str, model: FDEModel, targets: Sequence[complex], tol: float,
                     cfg: NumericsConfig) -> List[FleetRow]:
    operator = assemble(model, 1.0, cfg)
    rows = []
    for target in targets:
        mu = _nearest(operator.eigenvalues, target)
        rows.append(FleetRow(case, f"multiplier near {target:.6g}", mu, complex(target),
                             float(abs(mu - target)), tol))
    return rows


def _amplitude_rows(case: str, model: FDEModel, expected: Dict[float, complex], tol: float,
                    cfg: NumericsConfig) -> List[FleetRow]:
    solution = solve_ap(model, cfg)
    rows = []
    for lam, value in expected.items():
        got = complex(solution.amplitude(lam)[0])
        rows.append(FleetRow(case, f"amplitude at {lam:.6g}", got, complex(value),
                             float(abs(got - value)), tol))
    return rows


@dataclass(frozen=True)
class FleetCase:
    name: str
    build: Callable[[], FDEModel]
    run: Callable[[FDEModel, NumericsConfig], List[FleetRow]]


def acceptance_fleet() -> List[FleetCase]:
    """The six acceptance models in order (a) to (f)"""
    e_inv = float(np.exp(-1.0))
    return [
        FleetCase("decay", decay,
                  lambda m, cfg: _multiplier_rows("decay", m, [e_inv], 1e-8, cfg)),
        FleetCase("periodic_decay", periodic_decay,
                  lambda m, cfg: _multiplier_rows("periodic_decay", m, [e_inv], 1e-8, cfg)),
        FleetCase("unit_delay", unit_delay,
                  lambda m, cfg: _multiplier_rows("unit_delay", m, unit_delay_multipliers(), 1e-6, cfg)),
        FleetCase("quarter_turn", quarter_turn,
                  lambda m, cfg: _multiplier_rows("quarter_turn", m, [1j, -1j], 1e-6, cfg)),
        FleetCase("forced_decay", forced_decay,
                  lambda m, cfg: _amplitude_rows("forced_decay", m, {1.0: forced_decay_amplitude()},
                                                 1e-7, cfg)),
        FleetCase("forced_delay", forced_delay,
                  lambda m, cfg: _amplitude_rows(
                      "forced_delay", m,
                      {1.0: forced_delay_amplitude(1.0, 1.0), SQRT2: forced_delay_amplitude(SQRT2, 0.4)},
                      1e-6, cfg)),
    ]


def run_fleet(cfg: Optional[NumericsConfig] = None,
              only: Optional[Sequence[str]] = None) -> List[FleetRow]:
    """
    Run the selected fleet cases (all when only is None), one row per case

    A case checking several quantities reports its worst one. Cases that raise
    (for example a step incompatible with the delays) report a failed row.
    """
    cfg = cfg or NumericsConfig.from_env()
    rows: List[FleetRow] = []
    for case in acceptance_fleet():
        if only is not None and case.name not in only:
            continue
        started = time.time()
        try:
            checks = case.run(case.build(), cfg)
            rows.append(max(checks, key=lambda row: row.error))
        except Exception as e:
            logger.error(f"Fleet case '{case.name}' failed: {type(e).__name__}: {e}")
            rows.append(FleetRow(case.name, type(e).__name__, complex("nan"), complex("nan"),
                                 float("inf"), 0.0))
        logger.debug(f"Fleet case '{case.name}' took {time.time() - started:.2f}s")
    return rows


if __name__ == "__main__":
    for row in run_fleet():
        print(row.case, row.quantity, f"{row.error:.3g}", "PASS" if row.passed else "FAIL")
