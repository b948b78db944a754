"""
solver.py
Almost periodic solutions of periodic FDEs: resonance classification, the
per-frequency solve of the period-map difference equation, and verification
"""

import csv
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np

from apfun import (
    CircleSet,
    TrigPolynomial,
    bohr_mean_quadrature,
    bohr_spectrum,
    circle_angle,
    circle_distance,
    circle_image,
    epsilon_period_check,
    fourier_coeff,
    quadrature_grid,
    split_by_circle_sets,
)
from config import Config, NumericsConfig, canonical_float
from health_monitor import health_monitor, worker_count
from logger import logger
from monodromy import (
    MonodromyOperator,
    UnitCircleReport,
    assemble,
    resolvent_condition,
    resolvent_solve,
    unit_circle_report,
)
from phasespace import FDEModel, ModelError, Segment, lobatto_grid
from propagator import (
    FunctionHistory,
    StepperConfig,
    Trajectory,
    forced_response_zero_ic,
    propagate,
    vcf_gamma_oracle,
)

NON_RESONANT = "non_resonant"
NEAR_RESONANT = "near_resonant"
RESONANT = "resonant"

# Base time of the difference equation w(t) = M(t) w(t - 1) + g(t)
BASE_TIME = 1.0


class ResonanceError(Exception):
    """Refusal to solve: a forcing frequency maps onto (or too near) a unit-circle multiplier"""

    def __init__(self, message: str, frequency: Optional[float], angle: Optional[float],
                 classification: str = RESONANT):
        super().__init__(message)
        self.frequency = frequency
        self.angle = angle
        self.classification = classification


class PreconditionError(Exception):
    """Inputs violate an operation's precondition"""
    pass


class SearchError(Exception):
    """No epsilon-period found below the search horizon"""

    def __init__(self, message: str, horizon: float):
        super().__init__(message)
        self.horizon = horizon


# ============================================
# RESONANCE
# ============================================

@dataclass(frozen=True)
class ResonanceReport:
    """sigma_Gamma(M) against the circle image of the forcing spectrum"""

    sigma_gamma: CircleSet
    forcing_image: CircleSet
    min_separation: float
    classification: str
    conditions: Dict[float, float] = field(default_factory=dict)
    closest_pair: Optional[Tuple[float, float]] = None
    spurious: Tuple[complex, ...] = ()
    resolution: Dict[str, int] = field(default_factory=dict)

    @property
    def exit_code(self) -> int:
        return {NON_RESONANT: 0, NEAR_RESONANT: 10, RESONANT: 11}[self.classification]

    def to_dict(self) -> dict:
        separation = self.min_separation if np.isfinite(self.min_separation) else None
        return {
            "classification": self.classification,
            "sigma_gamma": self.sigma_gamma.to_list(),
            "forcing_image": self.forcing_image.to_list(),
            "min_separation": separation,
            "closest_pair": (None if self.closest_pair is None else
                             {"frequency": self.closest_pair[0], "angle": self.closest_pair[1]}),
            "conditions": [{"frequency": lam, "condition": cond}
                           for lam, cond in sorted(self.conditions.items())],
            "difference_set_closed": True,
            "flags": {"spurious": [[float(z.real), float(z.imag)] for z in self.spurious]},
            "resolution": dict(self.resolution),
        }


def classify(sigma_gamma: CircleSet, forcing_image: CircleSet, resonance_tol: float,
             angle_merge_tol: float) -> Tuple[str, float]:
    """Classification and minimum circle distance of the two sets"""
    separation = sigma_gamma.separation(forcing_image)
    if separation <= angle_merge_tol:
        return RESONANT, separation
    if separation > resonance_tol:
        return NON_RESONANT, separation
    return NEAR_RESONANT, separation


def _closest_pair(model: FDEModel, sigma_gamma: CircleSet) -> Optional[Tuple[float, float]]:
    best = None
    for lam in bohr_spectrum(model.forcing):
        angle = float(circle_angle(lam))
        for mu in sigma_gamma:
            d = float(circle_distance(angle, mu))
            if best is None or d < best[0]:
                best = (d, lam, mu)
    return None if best is None else (best[1], best[2])


def analyze(model: FDEModel, cfg: NumericsConfig) -> Tuple[MonodromyOperator, ResonanceReport]:
    """Monodromy at the base time and the resonance report built from it"""
    operator = assemble(model, BASE_TIME, cfg)
    circle: UnitCircleReport = unit_circle_report(operator)
    image = circle_image(bohr_spectrum(model.forcing), cfg.angle_merge_tol)
    classification, separation = classify(circle.angles, image, cfg.resonance_tol, cfg.angle_merge_tol)
    conditions = {}
    for lam in bohr_spectrum(model.forcing):
        cond = resolvent_condition(operator, np.exp(1j * lam))
        conditions[float(lam)] = cond if np.isfinite(cond) else 1e300
    report = ResonanceReport(
        sigma_gamma=circle.angles,
        forcing_image=image,
        min_separation=separation,
        classification=classification,
        conditions=conditions,
        closest_pair=_closest_pair(model, circle.angles),
        spurious=circle.spurious,
        resolution={"m": cfg.m, "substeps": cfg.substeps},
    )
    logger.debug(f"Resonance check for '{model.name}': {classification}, separation {separation:.3g}")
    return operator, report


def check_resonance(model: FDEModel, cfg: Optional[NumericsConfig] = None) -> ResonanceReport:
    """
    Classify the model as non_resonant, near_resonant or resonant

    The closedness of sigma_Gamma(M) minus sigma(f) holds for finite sets and is
    reported as satisfied.
    """
    return analyze(model, cfg or NumericsConfig.from_env())[1]


# ============================================
# SOLUTION BUNDLE
# ============================================

@dataclass(frozen=True, eq=False)
class APComponent:
    """One frequency of the solution: u(t + 1) = exp(i lambda) u(t) on all of R"""

    frequency: float
    coefficient: np.ndarray
    initial: Segment
    trajectory: Trajectory
    condition: float = float("nan")

    def evaluate(self, times: np.ndarray) -> np.ndarray:
        whole = np.floor(times)
        frac = times - whole
        values = self.trajectory.sample(frac)
        return np.exp(1j * self.frequency * whole)[:, None] * values

    def fixed_point_gap(self) -> float:
        """||u_1 - exp(i lambda) phi|| on the grid nodes"""
        grid = lobatto_grid(self.initial.horizon, self.initial.m)
        end = self.trajectory.sample(1.0 + grid)
        return float(np.max(np.abs(end - np.exp(1j * self.frequency) * self.initial.values)))


@dataclass(frozen=True, eq=False)
class APSolution:
    """
    Almost periodic solution as a per-frequency bundle

    u(t) = sum_k exp(i lambda_k floor(t)) y_k(t - floor(t)), where y_k solves the
    model on [0, 1] from phi_k under the single forcing term of frequency lambda_k.
    """

    model: FDEModel
    components: Tuple[APComponent, ...]
    resolution: Dict[str, int] = field(default_factory=dict)

    @property
    def frequencies(self) -> List[float]:
        return [c.frequency for c in self.components]

    def is_zero(self) -> bool:
        return not self.components

    def evaluate(self, times) -> np.ndarray:
        """u at the given times, shape (k, n)"""
        times = np.atleast_1d(np.asarray(times, dtype=float))
        total = np.zeros((len(times), self.model.dimension), dtype=complex)
        for component in self.components:
            total += component.evaluate(times)
        return total

    def __call__(self, times) -> np.ndarray:
        return self.evaluate(times)

    def fixed_point_gap(self) -> float:
        return max((c.fixed_point_gap() for c in self.components), default=0.0)

    def peak(self) -> float:
        """Largest node value of the initial segments phi_k"""
        return max((c.initial.norm() for c in self.components), default=0.0)

    def to_trig_polynomial(self, harmonics: Optional[int] = None,
                           drop_tol: float = 1e-13) -> TrigPolynomial:
        """
        Frequency content: each component is exp(i lambda t) p(t) with p 1-periodic,
        so its terms sit at lambda + 2 pi j, read off an FFT of p
        """
        terms = []
        n = self.model.dimension
        for component in self.components:
            count = harmonics or component.trajectory.config.substeps
            times = np.arange(count) / count
            envelope = np.exp(-1j * component.frequency * times)[:, None] * component.evaluate(times)
            spectrum = np.fft.fft(envelope, axis=0) / count
            js = np.fft.fftfreq(count, d=1.0 / count).round().astype(int)
            scale = max(float(np.max(np.abs(spectrum))), 1e-300)
            for j, row in zip(js, spectrum):
                if np.max(np.abs(row)) > drop_tol * scale:
                    terms.append((component.frequency + 2.0 * np.pi * j, row))
        return TrigPolynomial.from_terms(terms, n, freq_merge_tol=0.0)

    def amplitude(self, frequency: float, tol: float = 1e-9) -> np.ndarray:
        """Mean of exp(-i lambda t) u(t) over one period for the component at lambda"""
        for component in self.components:
            if abs(component.frequency - frequency) <= tol:
                count = component.trajectory.config.substeps
                times = np.arange(count) / count
                envelope = np.exp(-1j * frequency * times)[:, None] * component.evaluate(times)
                return envelope.mean(axis=0)
        return np.zeros(self.model.dimension, dtype=complex)

    def perturbed(self, index: int, delta) -> "APSolution":
        """Copy with phi_index shifted by delta and its trajectory re-propagated"""
        components = list(self.components)
        old = components[index]
        shifted = Segment(old.initial.horizon, old.initial.values + np.asarray(delta, dtype=complex))
        forcing_model = self.model.with_forcing(
            TrigPolynomial.from_terms([(old.frequency, old.coefficient)], self.model.dimension))
        trajectory = propagate(forcing_model, shifted, 0.0, 1.0, True, old.trajectory.config)
        components[index] = APComponent(old.frequency, old.coefficient, shifted, trajectory, old.condition)
        return APSolution(self.model, tuple(components), dict(self.resolution))

    @classmethod
    def from_trig_polynomial(cls, model: FDEModel, u: TrigPolynomial, m: int,
                             stepper: Optional[StepperConfig] = None) -> "APSolution":
        """
        Wrap a given trigonometric polynomial as a solution bundle

        Each term becomes a component whose one-period trajectory is the exact
        function with its exact derivative as Hermite data.
        """
        stepper = stepper or StepperConfig()
        nodes = np.arange(stepper.substeps + 1) / stepper.substeps
        components = []
        for lam, c in u.terms():
            initial = Segment.from_function(
                lambda th, lam=lam, c=c: np.exp(1j * lam * th)[:, None] * c[None, :], model.horizon, m)
            values = np.exp(1j * lam * nodes)[:, None] * c[None, :]
            coefficient = fourier_coeff(model.forcing, lam)
            forcing = TrigPolynomial.from_terms([(lam, coefficient)], model.dimension)
            trajectory = Trajectory(model, initial, 0.0, 1.0, nodes, values, 1j * lam * values,
                                    forcing, stepper)
            components.append(APComponent(float(lam), coefficient, initial, trajectory))
        return cls(model, tuple(components), {"m": m, "substeps": stepper.substeps})

    def to_dict(self) -> dict:
        return {
            "model_sha256": self.model.fingerprint(),
            "resolution": dict(self.resolution),
            "components": [
                {
                    "frequency": c.frequency,
                    "coefficient": {"re": c.coefficient.real.tolist(), "im": c.coefficient.imag.tolist()},
                    "initial_segment": c.initial.to_dict(),
                    "trajectory": c.trajectory.to_dict(),
                    "condition": c.condition,
                }
                for c in self.components
            ],
        }

    @classmethod
    def from_dict(cls, document: dict, model: FDEModel) -> "APSolution":
        """
        Rebuild a bundle written by ``to_dict``

        Frequencies, coefficients and the delay horizon are taken from the model
        whenever the written values match it, since artifacts carry rounded numbers.

        Raises:
            ModelError: malformed document or a different model fingerprint
        """
        try:
            if document.get("model_sha256") not in (None, model.fingerprint()):
                raise ModelError("solution was computed for a different model")
            resolution = {k: int(v) for k, v in document.get("resolution", {}).items()}
            stepper = StepperConfig(substeps=resolution.get("substeps", StepperConfig().substeps))
            components = []
            for entry in document["components"]:
                lam = float(entry["frequency"])
                coefficient = (np.asarray(entry["coefficient"]["re"], dtype=float)
                               + 1j * np.asarray(entry["coefficient"]["im"], dtype=float))
                match = min(model.forcing.terms(), key=lambda term: abs(term[0] - lam), default=None)
                if match is not None and abs(match[0] - lam) <= Config.ARTIFACT_RTOL * max(1.0, abs(match[0])):
                    lam, coefficient = float(match[0]), np.array(match[1])
                initial = Segment(model.horizon, Segment.from_dict(entry["initial_segment"]).values)
                forcing = TrigPolynomial.from_terms([(lam, coefficient)], model.dimension)
                trajectory = Trajectory.from_dict(entry["trajectory"], model, initial, forcing, stepper)
                condition = entry.get("condition")
                components.append(APComponent(lam, coefficient, initial, trajectory,
                                              float("nan") if condition is None else float(condition)))
        except (KeyError, TypeError, ValueError) as e:
            raise ModelError(f"malformed solution document: {type(e).__name__}: {e}") from e
        return cls(model, tuple(components), resolution)

    def to_csv(self, path, times: Sequence[float]) -> Path:
        """Write t, re(u_1..u_n), im(u_1..u_n) at the requested times"""
        path = Path(path)
        times = np.asarray(times, dtype=float)
        values = self.evaluate(times)
        n = self.model.dimension
        with path.open("w", newline="", encoding="utf-8") as handle:
            handle.write(f"# model_sha256={self.model.fingerprint()} "
                         f"m={self.resolution.get('m')} substeps={self.resolution.get('substeps')}\n")
            writer = csv.writer(handle)
            writer.writerow(["t"] + [f"re_u{i + 1}" for i in range(n)] + [f"im_u{i + 1}" for i in range(n)])
            for t, row in zip(times, values):
                writer.writerow([f"{canonical_float(x):.17g}" for x in (t, *row.real, *row.imag)])
        return path


# ============================================
# SOLVE
# ============================================

def _solve_component(model: FDEModel, operator: MonodromyOperator, frequency: float,
                     coefficient: np.ndarray, cfg: NumericsConfig) -> APComponent:
    stepper = cfg.stepper()
    G = forced_response_zero_ic(model, frequency, coefficient, BASE_TIME, stepper, cfg.m)
    phi, condition = resolvent_solve(operator, np.exp(1j * frequency), G, guard=cfg.resolvent_guard,
                                     return_condition=True)
    forcing_model = model.with_forcing(
        TrigPolynomial.from_terms([(frequency, coefficient)], model.dimension))
    trajectory = propagate(forcing_model, phi, 0.0, 1.0, True, stepper)
    health_monitor.increment_solves()
    return APComponent(float(frequency), np.array(coefficient), phi, trajectory, condition)


def solve_with_operator(model: FDEModel, operator: MonodromyOperator, report: ResonanceReport,
                        cfg: NumericsConfig) -> APSolution:
    """Solve (exp(i lambda_k) I - M) phi_k = G_k for every forcing term"""
    if report.classification == RESONANT:
        lam, angle = report.closest_pair or (None, None)
        raise ResonanceError(
            f"'{model.name}' is resonant: frequency {lam} maps onto multiplier angle {angle}",
            lam, angle, RESONANT)
    if report.classification == NEAR_RESONANT:
        lam, angle = report.closest_pair or (None, None)
        if not cfg.force:
            raise ResonanceError(
                f"'{model.name}' is near resonant (separation {report.min_separation:.3g}); "
                f"pass force to solve anyway", lam, angle, NEAR_RESONANT)
        logger.warning(f"Solving near-resonant '{model.name}': frequency {lam}, condition "
                       f"{report.conditions.get(lam, float('nan')):.3g}")

    terms = model.forcing.terms()
    if not terms:
        return APSolution(model, (), {"m": cfg.m, "substeps": cfg.substeps})
    workers = min(worker_count(), len(terms))
    with ThreadPoolExecutor(max_workers=workers) as pool:
        components = list(pool.map(
            lambda term: _solve_component(model, operator, term[0], term[1], cfg), terms))
    solution = APSolution(model, tuple(components), {"m": cfg.m, "substeps": cfg.substeps})
    gap = solution.fixed_point_gap()
    if gap > cfg.solve_tol:
        logger.warning(f"Solution of '{model.name}' misses the fixed point: gap {gap:.3g} "
                       f"exceeds solve_tol {cfg.solve_tol:.3g}")
    logger.debug(f"Solved '{model.name}' with {len(components)} component(s), fixed-point gap {gap:.3g}, "
                 f"conditions {[round(c.condition, 3) for c in components]}")
    return solution


def solve_ap(model: FDEModel, cfg: Optional[NumericsConfig] = None) -> APSolution:
    """
    Construct the almost periodic solution with sigma(u) inside sigma(f)

    Raises:
        ResonanceError: resonant model, or near resonant without cfg.force
        NearSingularError: a resolvent shift lies within the guard of the spectrum
    """
    cfg = cfg or NumericsConfig.from_env()
    operator, report = analyze(model, cfg)
    return solve_with_operator(model, operator, report, cfg)


# ============================================
# VERIFICATION
# ============================================

def residual(model: FDEModel, sol: APSolution, horizon: float = 2.0,
             cfg: Optional[NumericsConfig] = None, window: float = 1.0 / 16.0,
             points_per_unit: int = 32) -> float:
    """
    sup_t ||u(t) - [U(t, s) u_s + forced part]|| with s = t - window

    Each bracket is re-integrated from the evaluated solution used as history.
    """
    if horizon < 1:
        raise PreconditionError(f"horizon must be at least 1, got {horizon}")
    cfg = cfg or NumericsConfig.from_env()
    stepper = cfg.stepper()
    times = np.arange(1, int(round(horizon * points_per_unit)) + 1) / points_per_unit
    worst = 0.0
    for t in times:
        s = t - window
        history = FunctionHistory(sol.evaluate, s, model.horizon, model.dimension)
        trajectory = propagate(model, history, s, t, True, stepper)
        worst = max(worst, float(np.max(np.abs(trajectory.head() - sol.evaluate([t])[0]))))
    return worst


def spectrum_containment_check(sol: APSolution, probes: Iterable[float], T: Optional[float] = None,
                               cfg: Optional[NumericsConfig] = None, window: str = "hann") -> float:
    """
    Largest windowed Bohr mean of u at frequencies foreign to the forcing

    Raises:
        PreconditionError: a probe within freq_merge_tol of a solution frequency
    """
    cfg = cfg or NumericsConfig.from_env()
    T = cfg.verify_T if T is None else T
    probes = [float(mu) for mu in probes]
    for mu in probes:
        for lam in sol.frequencies:
            if abs(mu - lam) <= cfg.freq_merge_tol:
                raise PreconditionError(f"probe {mu} coincides with solution frequency {lam}")
    if sol.is_zero() or not probes:
        return 0.0
    top = max([abs(mu) for mu in probes] + [abs(lam) for lam in sol.frequencies])
    times = quadrature_grid(T, top)
    samples = sol.evaluate(times)
    return max(float(np.linalg.norm(bohr_mean_quadrature(times, samples, mu, T, window=window,
                                                         t_min=min(T, 200.0))))
               for mu in probes)


def gamma_oracle_gap(model: FDEModel, sol: APSolution, cfg: Optional[NumericsConfig] = None) -> float:
    """
    ||vcf_gamma_oracle(n_gamma) - G|| / ||c|| for the component with the largest coefficient

    G is the zero-history forced response the solve started from, so this
    cross-checks the head treatment of the forcing against the Gamma^n limit.
    """
    cfg = cfg or NumericsConfig.from_env()
    if sol.is_zero():
        return 0.0
    component = max(sol.components, key=lambda c: float(np.linalg.norm(c.coefficient)))
    stepper = cfg.stepper()
    G = forced_response_zero_ic(model, component.frequency, component.coefficient, BASE_TIME, stepper, cfg.m)
    oracle = vcf_gamma_oracle(model, component.frequency, component.coefficient, BASE_TIME,
                              cfg.n_gamma, stepper, cfg.m)
    gap = (oracle - G).norm() / max(float(np.linalg.norm(component.coefficient)), 1e-300)
    logger.debug(f"Gamma^{cfg.n_gamma} oracle gap for '{model.name}' at {component.frequency:.6g}: {gap:.3g}")
    return float(gap)


def decompose_solution(u: TrigPolynomial, forcing_image: CircleSet, sigma_gamma: CircleSet,
                       guard: float) -> Tuple[TrigPolynomial, TrigPolynomial]:
    """
    (Pu, (I - P)u) for S1 = forcing image and S2 = sigma_Gamma minus the forcing image

    Raises:
        ApfunError: S1 and S2 closer than 2*guard
        ClassificationError: a term near neither or both sets
    """
    S2 = sigma_gamma.minus(forcing_image, guard)
    return split_by_circle_sets(u, forcing_image, S2, guard)


@dataclass(frozen=True)
class APCertificate:
    tau: float
    witness: float
    constant: float
    forcing_bound: float
    eps: float
    integer_shift: bool

    @property
    def passed(self) -> bool:
        return self.witness <= self.constant * self.eps * (1.0 + 1e-6) + 1e-9

    def to_dict(self) -> dict:
        return {
            "tau": self.tau,
            "witness": self.witness,
            "constant": self.constant if np.isfinite(self.constant) else None,
            "forcing_bound": self.forcing_bound,
            "eps": self.eps,
            "integer_shift": self.integer_shift,
            "passed": self.passed,
        }


def _refine_shift(frequencies: np.ndarray, weights: np.ndarray, tau: float, cell: float) -> float:
    """Newton steps on d/dtau sum_k w_k (1 - cos lambda_k tau), kept inside the cell"""
    x = tau
    for _ in range(30):
        grad = float(np.sum(weights * frequencies * np.sin(frequencies * x)))
        curv = float(np.sum(weights * frequencies ** 2 * np.cos(frequencies * x)))
        if curv <= 0:
            break
        step = grad / curv
        if abs(x - step - tau) > cell:
            break
        x -= step
        if abs(step) < 1e-16 * max(1.0, abs(x)):
            break
    return x


def _find_shift(forcing: TrigPolynomial, eps: float, horizon: float, integer: bool) -> Tuple[float, float]:
    """Smallest grid candidate tau >= 1 whose forcing eps-period bound holds"""
    freqs = forcing.frequencies
    norms = np.linalg.norm(forcing.coefficients, axis=1)
    lipschitz = float(np.sum(norms * np.abs(freqs)))
    if integer:
        cell = 0.0
        step = 1.0
    else:
        step = min(0.01, np.pi / (8.0 * max(1.0, float(np.max(np.abs(freqs))))))
        cell = step
    chunk = 200000
    start = 1.0
    while start <= horizon:
        grid = start + step * np.arange(chunk)
        grid = grid[grid <= horizon]
        bounds = np.abs(np.exp(1j * np.outer(grid, freqs)) - 1.0) @ norms
        for i in np.flatnonzero(bounds <= eps + lipschitz * cell):
            tau = float(grid[i])
            if not integer:
                tau = _refine_shift(freqs, norms ** 2, tau, cell)
            ok, bound = epsilon_period_check(forcing, tau, eps)
            if ok:
                return tau, bound
        if len(grid) < chunk:
            break
        start = float(grid[-1]) + step
    raise SearchError(f"no {eps}-period of the forcing found in [1, {horizon}]", horizon)


def ap_certificate(sol: APSolution, eps: float, cfg: Optional[NumericsConfig] = None,
                   samples: int = 256) -> APCertificate:
    """
    Find an eps-period tau of the forcing and bound the solution's shift by C eps

    Autonomous models search real tau; otherwise tau runs over the integers so the
    1-periodic coefficients are shifted onto themselves. C is the largest ratio of
    a component's sup norm to its forcing coefficient norm.

    Raises:
        SearchError: no tau found below cfg.search_horizon
    """
    if eps <= 0:
        raise PreconditionError(f"eps must be positive, got {eps}")
    cfg = cfg or NumericsConfig.from_env()
    if sol.is_zero():
        return APCertificate(1.0, 0.0, 0.0, 0.0, eps, False)
    forcing = TrigPolynomial.from_terms([(c.frequency, c.coefficient) for c in sol.components],
                                        sol.model.dimension)
    integer = not sol.model.is_autonomous
    tau, bound = _find_shift(forcing, eps, cfg.search_horizon, integer)
    grid = np.arange(samples) / samples
    constant = 0.0
    for component in sol.components:
        sup = float(np.max(np.linalg.norm(component.evaluate(grid), axis=1)))
        weight = float(np.linalg.norm(component.coefficient))
        constant = max(constant, sup / weight if weight > 0 else (float("inf") if sup > 0 else 0.0))
    witness = float(np.max(np.linalg.norm(sol.evaluate(grid + tau) - sol.evaluate(grid), axis=1)))
    logger.debug(f"eps-period {tau:.12g} with forcing bound {bound:.3g}, witness {witness:.3g}")
    return APCertificate(tau, witness, constant, bound, eps, integer)


@dataclass(frozen=True)
class UniquenessReport:
    classification: str
    difference: Optional[float]
    resolutions: Tuple[Dict[str, int], Dict[str, int]]
    condition: Optional[float]
    passed: Optional[bool]

    def to_dict(self) -> dict:
        return {
            "classification": self.classification,
            "difference": self.difference,
            "resolutions": list(self.resolutions),
            "condition": self.condition,
            "passed": self.passed,
        }


def uniqueness_check(model: FDEModel, cfg: Optional[NumericsConfig] = None,
                     tolerance: float = 1e-6, points: int = 129) -> UniquenessReport:
    """
    Solve at (m, substeps) and (2m, 2 substeps) and compare on [0, 2]

    Near-resonant models are solved anyway and reported without a verdict;
    resonant models are reported without a solve.
    """
    cfg = cfg or NumericsConfig.from_env()
    fine_cfg = cfg.refined(2, substeps=True)
    resolutions = ({"m": cfg.m, "substeps": cfg.substeps},
                   {"m": fine_cfg.m, "substeps": fine_cfg.substeps})
    operator, report = analyze(model, cfg)
    condition = max(report.conditions.values(), default=None)
    if report.classification == RESONANT:
        return UniquenessReport(RESONANT, None, resolutions, condition, None)
    informational = report.classification == NEAR_RESONANT
    coarse = solve_with_operator(model, operator, report, cfg.with_overrides(force=True))
    fine = solve_ap(model, fine_cfg.with_overrides(force=True))
    times = np.linspace(0.0, 2.0, points)
    difference = float(np.max(np.abs(coarse.evaluate(times) - fine.evaluate(times))))
    passed = None if informational else difference <= tolerance
    return UniquenessReport(report.classification, difference, resolutions, condition, passed)


if __name__ == "__main__":
    from phasespace import PeriodicMatrix

    forced = FDEModel.build(1, 1.0, PeriodicMatrix.from_constant([[-1.0]]),
                            forcing=TrigPolynomial.single(1.0, [1.0]), name="forced-decay")
    print(check_resonance(forced).to_dict())
    solution = solve_ap(forced)
    print("amplitude:", solution.amplitude(1.0), "expected", 1 / (1 + 1j))
