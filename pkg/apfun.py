"""
apfun.py
Almost periodic functions as trigonometric polynomials: evaluation, Bohr means,
spectra, circle images, epsilon-periods and frequency splitting
"""

from dataclasses import dataclass
from typing import Callable, Iterable, List, Optional, Sequence, Tuple

import numpy as np
from scipy.integrate import trapezoid

from config import config

TWO_PI = 2.0 * np.pi

# Frequencies are plain floats (radians per unit time)
Frequency = float


class ApfunError(Exception):
    """Base error for almost periodic function operations"""
    pass


class SamplingError(ApfunError):
    """Quadrature samples too sparse or not covering [-T, T]"""
    pass


class ClassificationError(ApfunError):
    """A term could not be assigned to exactly one circle set"""

    def __init__(self, message: str, frequency: float):
        super().__init__(message)
        self.frequency = frequency


class SerializationError(ApfunError):
    """Malformed trigonometric polynomial document"""
    pass


def circle_angle(value) -> np.ndarray:
    """Map frequencies (or angles) onto [0, 2pi)"""
    angle = np.mod(np.asarray(value, dtype=float), TWO_PI)
    # mod can return exactly 2pi for tiny negative inputs
    return np.where(angle >= TWO_PI, 0.0, angle)


def circle_distance(a, b) -> np.ndarray:
    """Arc distance between angles, in [0, pi]"""
    d = np.mod(np.asarray(a, dtype=float) - np.asarray(b, dtype=float), TWO_PI)
    return np.minimum(d, TWO_PI - d)


# ============================================
# TRIGONOMETRIC POLYNOMIALS
# ============================================

@dataclass(frozen=True, eq=False)
class TrigPolynomial:
    """
    Finite sum of c_k exp(i lambda_k t) with complex n-vector coefficients

    Build through ``from_terms`` so the canonical form holds: frequencies sorted
    and pairwise distinct beyond the merge tolerance, no zero coefficients.
    """

    dimension: int
    frequencies: np.ndarray
    coefficients: np.ndarray

    def __post_init__(self):
        freqs = np.array(self.frequencies, dtype=float).reshape(-1)
        coefs = np.array(self.coefficients, dtype=complex).reshape(-1, self.dimension)
        freqs.setflags(write=False)
        coefs.setflags(write=False)
        object.__setattr__(self, "frequencies", freqs)
        object.__setattr__(self, "coefficients", coefs)

    @classmethod
    def from_terms(cls, terms: Iterable[Tuple[float, Sequence[complex]]], dimension: int,
                   freq_merge_tol: Optional[float] = None, drop_tol: float = 0.0) -> "TrigPolynomial":
        """
        Canonicalize a list of (frequency, coefficient) pairs

        Args:
            terms: pairs of frequency and coefficient (scalar allowed when n = 1)
            dimension: vector dimension n
            freq_merge_tol: frequencies closer than this are summed into one term
            drop_tol: coefficients with norm <= drop_tol are discarded

        Returns:
            Canonical TrigPolynomial
        """
        if dimension < 1:
            raise ApfunError(f"dimension must be positive, got {dimension}")
        tol = config.FREQ_MERGE_TOL if freq_merge_tol is None else freq_merge_tol

        pairs = []
        for freq, coef in terms:
            freq = float(freq)
            if not np.isfinite(freq):
                raise ApfunError(f"frequency must be finite, got {freq}")
            vec = np.atleast_1d(np.asarray(coef, dtype=complex)).reshape(-1)
            if vec.shape[0] != dimension:
                raise ApfunError(f"coefficient of length {vec.shape[0]} for dimension {dimension}")
            pairs.append((freq, vec))
        pairs.sort(key=lambda p: p[0])

        merged_freqs: List[float] = []
        merged_coefs: List[np.ndarray] = []
        for freq, vec in pairs:
            if merged_freqs and freq - merged_freqs[-1] <= tol:
                merged_coefs[-1] = merged_coefs[-1] + vec
            else:
                merged_freqs.append(freq)
                merged_coefs.append(vec.copy())

        keep = [i for i, c in enumerate(merged_coefs) if np.linalg.norm(c) > drop_tol]
        freqs = np.array([merged_freqs[i] for i in keep], dtype=float)
        coefs = (np.array([merged_coefs[i] for i in keep], dtype=complex)
                 if keep else np.zeros((0, dimension), dtype=complex))
        return cls(dimension, freqs, coefs)

    @classmethod
    def zero(cls, dimension: int = 1) -> "TrigPolynomial":
        return cls(dimension, np.zeros(0), np.zeros((0, dimension), dtype=complex))

    @classmethod
    def single(cls, frequency: float, coefficient, dimension: int = 1) -> "TrigPolynomial":
        return cls.from_terms([(frequency, coefficient)], dimension)

    @classmethod
    def from_real_cosines(cls, terms: Iterable[Tuple[float, Sequence[float]]],
                          dimension: int = 1) -> "TrigPolynomial":
        """Real signal sum a_k cos(omega_k t) as conjugate-symmetric pairs"""
        pairs = []
        for omega, amp in terms:
            half = 0.5 * np.atleast_1d(np.asarray(amp, dtype=complex))
            pairs.append((omega, half))
            pairs.append((-omega, np.conj(half)))
        return cls.from_terms(pairs, dimension)

    # -- algebra --------------------------------------------------------

    def terms(self) -> List[Tuple[float, np.ndarray]]:
        return [(float(f), c.copy()) for f, c in zip(self.frequencies, self.coefficients)]

    def __len__(self) -> int:
        return len(self.frequencies)

    def is_zero(self) -> bool:
        return len(self.frequencies) == 0

    def __add__(self, other: "TrigPolynomial") -> "TrigPolynomial":
        self._check_dimension(other)
        return TrigPolynomial.from_terms(self.terms() + other.terms(), self.dimension)

    def __sub__(self, other: "TrigPolynomial") -> "TrigPolynomial":
        return self + other.scale(-1.0)

    def scale(self, factor: complex) -> "TrigPolynomial":
        return TrigPolynomial.from_terms(
            [(f, factor * c) for f, c in self.terms()], self.dimension)

    def shift(self, tau: float) -> "TrigPolynomial":
        """The translate t -> f(t + tau); coefficients rotate, frequencies stay"""
        rot = np.exp(1j * self.frequencies * tau)[:, None]
        return TrigPolynomial(self.dimension, self.frequencies.copy(), self.coefficients * rot)

    def _check_dimension(self, other: "TrigPolynomial"):
        if other.dimension != self.dimension:
            raise ApfunError(f"dimension mismatch: {self.dimension} vs {other.dimension}")

    # -- evaluation -----------------------------------------------------

    def evaluate(self, times) -> np.ndarray:
        """Values at an array of times, shape (len(times), n)"""
        times = np.atleast_1d(np.asarray(times, dtype=float))
        if self.is_zero():
            return np.zeros((times.shape[0], self.dimension), dtype=complex)
        phases = np.exp(1j * np.outer(times, self.frequencies))
        out = phases[:, :1] * self.coefficients[0]
        for k in range(1, len(self)):
            out = out + phases[:, k:k + 1] * self.coefficients[k]
        return out

    def __call__(self, t: float) -> np.ndarray:
        return self.evaluate([t])[0]

    def sup_norm_bound(self) -> float:
        """Sum of coefficient norms, an upper bound of sup_t ||f(t)||"""
        return float(np.sum(np.linalg.norm(self.coefficients, axis=1))) if len(self) else 0.0

    # -- serialization --------------------------------------------------

    def to_dict(self) -> dict:
        return {
            "dimension": int(self.dimension),
            "terms": [
                {"frequency": float(f), "re": [float(x) for x in c.real],
                 "im": [float(x) for x in c.imag]}
                for f, c in zip(self.frequencies, self.coefficients)
            ],
        }

    @classmethod
    def from_dict(cls, document: dict) -> "TrigPolynomial":
        """Parse {"dimension": n, "terms": [{"frequency", "re", "im"}]}"""
        try:
            dimension = int(document["dimension"])
            terms = []
            for term in document.get("terms", []):
                re = np.asarray(term["re"], dtype=float)
                im = np.asarray(term.get("im", [0.0] * len(re)), dtype=float)
                if re.shape != im.shape:
                    raise SerializationError("re and im parts differ in length")
                terms.append((float(term["frequency"]), re + 1j * im))
        except (KeyError, TypeError, ValueError) as e:
            raise SerializationError(f"malformed trigonometric polynomial: {e}") from e
        try:
            return cls.from_terms(terms, dimension)
        except ApfunError as e:
            raise SerializationError(str(e)) from e

    def __repr__(self) -> str:
        parts = ", ".join(f"{f:.6g}: {np.round(c, 6).tolist()}"
                          for f, c in zip(self.frequencies, self.coefficients))
        return f"TrigPolynomial(n={self.dimension}, {{{parts}}})"


# ============================================
# CIRCLE SETS
# ============================================

@dataclass(frozen=True, eq=False)
class CircleSet:
    """Finite set of points on the unit circle, stored as sorted angles in [0, 2pi)"""

    angles: np.ndarray

    def __post_init__(self):
        angles = np.array(self.angles, dtype=float).reshape(-1)
        angles.setflags(write=False)
        object.__setattr__(self, "angles", angles)

    @classmethod
    def from_angles(cls, angles: Iterable[float], angle_merge_tol: Optional[float] = None) -> "CircleSet":
        tol = config.ANGLE_MERGE_TOL if angle_merge_tol is None else angle_merge_tol
        values = np.sort(circle_angle(np.fromiter(angles, dtype=float)))
        kept: List[float] = []
        for a in values:
            if kept and a - kept[-1] <= tol:
                continue
            kept.append(float(a))
        # wrap-around: a point just below 2pi merges with one just above 0
        if len(kept) > 1 and circle_distance(kept[-1], kept[0]) <= tol:
            kept.pop()
        return cls(np.array(kept, dtype=float))

    @classmethod
    def empty(cls) -> "CircleSet":
        return cls(np.zeros(0))

    def __len__(self) -> int:
        return len(self.angles)

    def __iter__(self):
        return iter(self.angles.tolist())

    def is_empty(self) -> bool:
        return len(self.angles) == 0

    def distance_to(self, angle: float) -> float:
        """Arc distance from angle to the nearest point (inf for the empty set)"""
        if self.is_empty():
            return float("inf")
        return float(np.min(circle_distance(self.angles, angle)))

    def separation(self, other: "CircleSet") -> float:
        """Minimum arc distance between the two sets (inf if either is empty)"""
        if self.is_empty() or other.is_empty():
            return float("inf")
        return float(np.min(circle_distance(self.angles[:, None], other.angles[None, :])))

    def minus(self, other: "CircleSet", guard: float) -> "CircleSet":
        """Points farther than guard from every point of other"""
        return CircleSet(np.array([a for a in self.angles if other.distance_to(a) > guard]))

    def to_list(self) -> List[float]:
        return [float(a) for a in self.angles]

    def __repr__(self) -> str:
        return f"CircleSet({[round(a, 9) for a in self.angles]})"


# ============================================
# SPECTRAL OPERATIONS
# ============================================

def evaluate(f: TrigPolynomial, t) -> np.ndarray:
    """
    Evaluate f at a time (returns an n-vector) or an array of times

    Args:
        f: trigonometric polynomial
        t: real time or array of times

    Returns:
        sum_k c_k exp(i lambda_k t)
    """
    if np.ndim(t) == 0:
        return f(float(t))
    return f.evaluate(t)


def fourier_coeff(f: TrigPolynomial, frequency: float,
                  freq_merge_tol: Optional[float] = None) -> np.ndarray:
    """Bohr mean a(lambda, f): the matching coefficient, or zero"""
    tol = config.FREQ_MERGE_TOL if freq_merge_tol is None else freq_merge_tol
    if len(f):
        gaps = np.abs(f.frequencies - frequency)
        k = int(np.argmin(gaps))
        if gaps[k] <= tol:
            return f.coefficients[k].copy()
    return np.zeros(f.dimension, dtype=complex)


def quadrature_grid(T: float, max_frequency: float) -> np.ndarray:
    """Uniform sample times on [-T, T] dense enough for bohr_mean_quadrature"""
    step = np.pi / (32.0 * max(1.0, abs(max_frequency)))
    count = int(np.ceil(2.0 * T / step)) + 1
    return np.linspace(-T, T, count)


def bohr_mean_quadrature(times, values, frequency: float, T: float,
                         window: str = "rect", t_min: float = 200.0) -> np.ndarray:
    """
    Numerical Bohr mean (1/2T) int_{-T}^{T} f(t) exp(-i lambda t) dt

    The rectangular window is the plain trapezoid mean; off-spectrum leakage
    decays like 1/T. The Hann window weights by cos^2(pi t / 2T) and leaks like 1/T^3.

    Args:
        times: uniform sample times covering [-T, T]
        values: samples, shape (len(times),) or (len(times), n)
        frequency: lambda
        T: half-width of the averaging window
        window: "rect" or "hann"
        t_min: smallest admissible T

    Returns:
        complex n-vector (scalar-shaped input gives a length-1 vector)

    Raises:
        SamplingError: when T < t_min, the grid does not cover [-T, T],
            or the spacing is too coarse for the frequency
    """
    times = np.asarray(times, dtype=float)
    values = np.asarray(values, dtype=complex)
    if values.ndim == 1:
        values = values[:, None]
    if T < t_min:
        raise SamplingError(f"averaging half-width T={T} below minimum {t_min}")
    if times.ndim != 1 or times.shape[0] < 3 or values.shape[0] != times.shape[0]:
        raise SamplingError("need at least three samples matching the time grid")
    span_tol = 1e-9 * max(1.0, T)
    if abs(times[0] + T) > span_tol or abs(times[-1] - T) > span_tol:
        raise SamplingError(f"samples must cover [-{T}, {T}]")
    step = float(np.max(np.diff(times)))
    if step * max(1.0, abs(frequency)) > np.pi / 4.0:
        raise SamplingError(
            f"sample spacing {step:.4g} too coarse for frequency {frequency:.4g}")

    if window == "rect":
        weights = np.ones_like(times)
    elif window == "hann":
        weights = np.cos(np.pi * times / (2.0 * T)) ** 2
    else:
        raise ApfunError(f"unknown window '{window}'")

    integrand = values * (weights * np.exp(-1j * frequency * times))[:, None]
    return trapezoid(integrand, times, axis=0) / trapezoid(weights, times)


def bohr_spectrum(f: TrigPolynomial) -> List[Frequency]:
    """Frequencies carrying a nonzero coefficient"""
    return [float(x) for x in f.frequencies]


def circle_image(freqs: Iterable[Frequency], angle_merge_tol: Optional[float] = None) -> CircleSet:
    """Image exp(i sp) of a frequency set, as angles modulo 2pi"""
    return CircleSet.from_angles(list(freqs), angle_merge_tol)


def epsilon_period_check(f: TrigPolynomial, tau: float, eps: float) -> Tuple[bool, float]:
    """
    Check tau as an eps-period using the coefficient bound

    sup_t ||f(t + tau) - f(t)|| <= sum_k ||c_k|| |exp(i lambda_k tau) - 1|

    Returns:
        (bound <= eps, bound)
    """
    if eps <= 0:
        raise ApfunError(f"eps must be positive, got {eps}")
    if f.is_zero():
        return True, 0.0
    norms = np.linalg.norm(f.coefficients, axis=1)
    bound = float(np.sum(norms * np.abs(np.exp(1j * f.frequencies * tau) - 1.0)))
    return bound <= eps, bound


def split_by_circle_sets(f: TrigPolynomial, S1: CircleSet, S2: CircleSet,
                         guard: float) -> Tuple[TrigPolynomial, TrigPolynomial]:
    """
    Partition the terms of f by the circle set their image lies near

    Args:
        f: trigonometric polynomial
        S1, S2: disjoint circle sets separated by more than 2*guard
        guard: classification radius

    Returns:
        (part near S1, part near S2); the parts sum to f term by term

    Raises:
        ApfunError: S1 and S2 closer than 2*guard
        ClassificationError: a term near neither or both sets
    """
    if guard <= 0:
        raise ApfunError(f"guard must be positive, got {guard}")
    if S1.separation(S2) <= 2.0 * guard:
        raise ApfunError(
            f"circle sets separated by {S1.separation(S2):.3g}, need more than {2 * guard:.3g}")

    first, second = [], []
    for freq, coef in f.terms():
        angle = float(circle_angle(freq))
        near1 = S1.distance_to(angle) <= guard
        near2 = S2.distance_to(angle) <= guard
        if near1 and not near2:
            first.append((freq, coef))
        elif near2 and not near1:
            second.append((freq, coef))
        else:
            where = "both" if near1 else "neither"
            raise ClassificationError(
                f"frequency {freq:.12g} (angle {angle:.9f}) lies near {where} of the circle sets",
                freq)
    return (TrigPolynomial.from_terms(first, f.dimension, freq_merge_tol=0.0),
            TrigPolynomial.from_terms(second, f.dimension, freq_merge_tol=0.0))


def detected_frequencies(fn: Callable[[np.ndarray], np.ndarray], candidates: Iterable[float],
                         T: float, threshold: float, window: str = "hann") -> List[float]:
    """Candidate frequencies whose windowed Bohr mean of fn exceeds threshold"""
    candidates = list(candidates)
    if not candidates:
        return []
    times = quadrature_grid(T, max(abs(c) for c in candidates))
    samples = fn(times)
    found = []
    for mu in candidates:
        mean = bohr_mean_quadrature(times, samples, mu, T, window=window, t_min=0.0)
        if np.linalg.norm(mean) > threshold:
            found.append(float(mu))
    return found


if __name__ == "__main__":
    f = TrigPolynomial.from_terms([(1.0, 1.0), (np.sqrt(2.0), 0.4)], 1)
    print(f)
    print("f(0) =", evaluate(f, 0.0))
    print("image =", circle_image(bohr_spectrum(f)))
    print("pi-shift check:", epsilon_period_check(f, np.pi, 0.1))
