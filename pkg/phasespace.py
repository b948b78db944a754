"""
phasespace.py
FDE models dx/dt = A(t)x + F(t)x_t + f(t) and the discretized phase space C([-r,0], C^n)
"""

import hashlib
import json
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Callable, Dict, Optional, Sequence, Tuple

import numpy as np
from scipy.interpolate import BarycentricInterpolator

from apfun import ApfunError, TrigPolynomial


class ModelError(Exception):
    """Malformed or inconsistent model definition"""
    pass


class DomainError(Exception):
    """Argument outside the domain of a phase-space operation"""
    pass


# ============================================
# COLLOCATION GRID
# ============================================

def lobatto_grid(horizon: float, m: int) -> np.ndarray:
    """m+1 Chebyshev-Gauss-Lobatto nodes on [-horizon, 0], ascending, last node exactly 0"""
    if m < 1:
        raise DomainError(f"need at least two nodes, got m={m}")
    x = -np.cos(np.pi * np.arange(m + 1) / m)
    theta = 0.5 * horizon * (x - 1.0)
    theta[0], theta[-1] = -horizon, 0.0
    return theta


def clenshaw_curtis_weights(horizon: float, m: int) -> np.ndarray:
    """Clenshaw-Curtis weights for the lobatto_grid nodes on [-horizon, 0]"""
    theta = np.pi * np.arange(m + 1) / m
    w = np.zeros(m + 1)
    inner = np.arange(1, m)
    v = np.ones(m - 1)
    if m % 2 == 0:
        w[0] = w[m] = 1.0 / (m ** 2 - 1)
        for k in range(1, m // 2):
            v -= 2.0 * np.cos(2 * k * theta[inner]) / (4 * k ** 2 - 1)
        v -= np.cos(m * theta[inner]) / (m ** 2 - 1)
    else:
        w[0] = w[m] = 1.0 / m ** 2
        for k in range(1, (m - 1) // 2 + 1):
            v -= 2.0 * np.cos(2 * k * theta[inner]) / (4 * k ** 2 - 1)
    w[inner] = 2.0 * v / m
    return 0.5 * horizon * w


def apply_matrix(M: np.ndarray, y: np.ndarray) -> np.ndarray:
    """
    M y contracted over the leading axis of y, shape (n, *batch)

    Columns are accumulated one at a time with elementwise products, so the
    result does not depend on BLAS kernels or memory alignment.
    """
    M = np.asarray(M)
    expand = (slice(None),) + (None,) * (np.ndim(y) - 1)
    out = M[:, 0][expand] * y[0]
    for j in range(1, M.shape[1]):
        out = out + M[:, j][expand] * y[j]
    return out


# ============================================
# HISTORIES AND SEGMENTS
# ============================================

class History:
    """
    Initial data for the propagator: a function on [-horizon, 0]

    ``sample`` returns an array of shape (len(thetas), n, *batch_shape).
    """

    horizon: float
    dimension: int
    batch_shape: Tuple[int, ...] = ()

    def sample(self, thetas) -> np.ndarray:
        raise NotImplementedError

    def head(self) -> np.ndarray:
        return self.sample([0.0])[0]


@dataclass(frozen=True, eq=False)
class Segment(History):
    """
    Element of C([-r, 0], C^n) stored on Chebyshev-Gauss-Lobatto nodes

    values has shape (m+1, n) for one segment or (m+1, n, B) for a batch of B segments.
    """

    horizon: float
    values: np.ndarray
    grid: np.ndarray = field(init=False, repr=False)
    _interp: BarycentricInterpolator = field(init=False, repr=False)

    def __post_init__(self):
        values = np.array(self.values, dtype=complex)
        if values.ndim < 2 or values.shape[0] < 2:
            raise DomainError("a segment needs at least two nodes and a dimension axis")
        if not self.horizon > 0:
            raise DomainError(f"horizon must be positive, got {self.horizon}")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)
        grid = lobatto_grid(self.horizon, values.shape[0] - 1)
        object.__setattr__(self, "grid", grid)
        object.__setattr__(self, "_interp", BarycentricInterpolator(grid, values, axis=0))

    # -- construction -------------------------------------------------

    @classmethod
    def from_function(cls, fn: Callable[[np.ndarray], np.ndarray], horizon: float,
                      m: int) -> "Segment":
        """Sample fn (vectorized over theta, returning (k, n)) on the grid"""
        grid = lobatto_grid(horizon, m)
        values = np.asarray(fn(grid), dtype=complex)
        if values.ndim == 1:
            values = values[:, None]
        return cls(horizon, values)

    @classmethod
    def constant(cls, vector, horizon: float, m: int) -> "Segment":
        vec = np.atleast_1d(np.asarray(vector, dtype=complex))
        return cls(horizon, np.tile(vec, (m + 1, 1)))

    @classmethod
    def zeros(cls, dimension: int, horizon: float, m: int) -> "Segment":
        return cls(horizon, np.zeros((m + 1, dimension), dtype=complex))

    @classmethod
    def basis(cls, dimension: int, horizon: float, m: int) -> "Segment":
        """Batch of the N = n(m+1) coordinate segments; column j has coordinate j equal to 1"""
        size = dimension * (m + 1)
        return cls(horizon, np.eye(size, dtype=complex).reshape(m + 1, dimension, size))

    @classmethod
    def from_coordinates(cls, coords, dimension: int, horizon: float) -> "Segment":
        coords = np.asarray(coords, dtype=complex)
        return cls(horizon, coords.reshape(-1, dimension, *coords.shape[1:]))

    # -- accessors ------------------------------------------------------

    @property
    def m(self) -> int:
        return self.values.shape[0] - 1

    @property
    def dimension(self) -> int:
        return self.values.shape[1]

    @property
    def batch_shape(self) -> Tuple[int, ...]:
        return self.values.shape[2:]

    def coordinates(self) -> np.ndarray:
        """Node values flattened node-major: index = node * n + component"""
        return self.values.reshape(self.values.shape[0] * self.values.shape[1],
                                   *self.batch_shape)

    def column(self, j: int) -> "Segment":
        return Segment(self.horizon, self.values[..., j])

    def head(self) -> np.ndarray:
        return self.values[-1].copy()

    def sample(self, thetas) -> np.ndarray:
        thetas = np.clip(np.atleast_1d(np.asarray(thetas, dtype=float)), -self.horizon, 0.0)
        return np.asarray(self._interp(thetas), dtype=complex)

    def interpolate(self, theta: float) -> np.ndarray:
        """Barycentric interpolation at theta in [-r, 0]"""
        if theta < -self.horizon or theta > 0.0:
            raise DomainError(f"theta={theta} outside [-{self.horizon}, 0]")
        return self.sample([theta])[0]

    def norm(self) -> float:
        """Sup norm over the nodes"""
        return float(np.max(np.linalg.norm(self.values, axis=1)))

    def __add__(self, other: "Segment") -> "Segment":
        return Segment(self.horizon, self.values + other.values)

    def __sub__(self, other: "Segment") -> "Segment":
        return Segment(self.horizon, self.values - other.values)

    def scale(self, factor: complex) -> "Segment":
        return Segment(self.horizon, factor * self.values)

    def to_dict(self) -> dict:
        return {
            "horizon": float(self.horizon),
            "re": self.values.real.tolist(),
            "im": self.values.imag.tolist(),
        }

    @classmethod
    def from_dict(cls, document: dict) -> "Segment":
        try:
            values = np.asarray(document["re"], dtype=float) + 1j * np.asarray(document["im"], dtype=float)
            return cls(float(document["horizon"]), values)
        except (KeyError, TypeError, ValueError) as e:
            raise ModelError(f"malformed segment: {e}") from e


@dataclass(frozen=True, eq=False)
class TentSegment(Segment):
    """
    Segment theta -> (k theta + 1) x on [-1/k, 0], zero before

    Node values are the tent samples; ``sample`` evaluates the tent exactly
    instead of its polynomial interpolant.
    """

    steepness: int = 1
    vector: np.ndarray = None

    def sample(self, thetas) -> np.ndarray:
        thetas = np.clip(np.atleast_1d(np.asarray(thetas, dtype=float)), -self.horizon, 0.0)
        profile = np.maximum(self.steepness * thetas + 1.0, 0.0)
        return profile[:, None] * np.asarray(self.vector, dtype=complex)[None, :]


def head(phi: Segment) -> np.ndarray:
    """p(phi) = phi(0): the last node value"""
    return phi.head()


def interpolate(phi: Segment, theta: float) -> np.ndarray:
    return phi.interpolate(theta)


# ============================================
# PERIODIC COEFFICIENTS
# ============================================

@dataclass(frozen=True, eq=False)
class PeriodicMatrix:
    """
    Periodic n x n matrix function of time

    kind "constant": fixed matrix; "fourier": sum_k M_k exp(2 pi i k t / period);
    "callable": closed-form fn(t) -> matrix.
    """

    dimension: int
    kind: str
    matrix: Optional[np.ndarray] = None
    harmonics: Tuple[int, ...] = ()
    matrices: Optional[np.ndarray] = None
    fn: Optional[Callable[[float], np.ndarray]] = None
    period: float = 1.0

    @classmethod
    def from_constant(cls, matrix) -> "PeriodicMatrix":
        mat = np.atleast_2d(np.asarray(matrix, dtype=complex))
        if mat.shape[0] != mat.shape[1]:
            raise ModelError(f"matrix must be square, got shape {mat.shape}")
        mat.setflags(write=False)
        return cls(mat.shape[0], "constant", matrix=mat)

    @classmethod
    def from_fourier(cls, terms: Dict[int, object], period: float = 1.0) -> "PeriodicMatrix":
        if not terms:
            raise ModelError("fourier matrix needs at least one harmonic")
        ks = tuple(sorted(int(k) for k in terms))
        mats = np.array([np.atleast_2d(np.asarray(terms[k], dtype=complex)) for k in ks])
        if mats.shape[1] != mats.shape[2]:
            raise ModelError(f"matrices must be square, got shape {mats.shape[1:]}")
        if ks == (0,):
            return cls.from_constant(mats[0])
        mats.setflags(write=False)
        return cls(mats.shape[1], "fourier", harmonics=ks, matrices=mats, period=period)

    @classmethod
    def from_callable(cls, fn: Callable[[float], np.ndarray], dimension: int,
                      period: float = 1.0, samples: int = 16) -> "PeriodicMatrix":
        """Wrap fn, checking fn(t + period) = fn(t) on sample times"""
        probe = np.linspace(0.0, period, samples, endpoint=False) + 0.137 * period
        for t in probe:
            a = np.atleast_2d(np.asarray(fn(t), dtype=complex))
            b = np.atleast_2d(np.asarray(fn(t + period), dtype=complex))
            if a.shape != (dimension, dimension):
                raise ModelError(f"callable returned shape {a.shape}, expected {(dimension, dimension)}")
            if not np.all(np.isfinite(a)):
                raise ModelError(f"callable not finite at t={t}")
            if np.max(np.abs(a - b)) > 1e-9 * max(1.0, np.max(np.abs(a))):
                raise ModelError(f"callable is not {period}-periodic at t={t:.4f}")
        return cls(dimension, "callable", fn=fn, period=period)

    @property
    def is_constant(self) -> bool:
        return self.kind == "constant"

    def __call__(self, t: float) -> np.ndarray:
        if self.kind == "constant":
            return self.matrix
        if self.kind == "fourier":
            phases = np.exp(2j * np.pi * np.asarray(self.harmonics) * t / self.period)
            total = phases[0] * self.matrices[0]
            for phase, matrix in zip(phases[1:], self.matrices[1:]):
                total = total + phase * matrix
            return total
        return np.atleast_2d(np.asarray(self.fn(t), dtype=complex))

    def sup_norm(self, samples: int = 64) -> float:
        """Spectral-norm sup over one period, estimated by sampling"""
        if self.kind == "constant":
            return float(np.linalg.norm(self.matrix, 2))
        times = np.linspace(0.0, self.period, samples, endpoint=False)
        return float(max(np.linalg.norm(self(t), 2) for t in times))

    def normalized(self, scale: float = 1.0) -> "PeriodicMatrix":
        """Same function in time units where the period is 1, multiplied by scale"""
        p = self.period
        if self.kind == "constant":
            return PeriodicMatrix.from_constant(scale * self.matrix)
        if self.kind == "fourier":
            return PeriodicMatrix.from_fourier(
                {k: scale * M for k, M in zip(self.harmonics, self.matrices)}, period=1.0)
        fn = self.fn
        return PeriodicMatrix(self.dimension, "callable", fn=lambda t: scale * np.asarray(fn(p * t)),
                              period=1.0)

    def to_dict(self) -> dict:
        if self.kind == "constant":
            return {"constant": matrix_to_json(self.matrix)}
        if self.kind == "fourier":
            return {"fourier_terms": [{"harmonic": k, "matrix": matrix_to_json(M)}
                                      for k, M in zip(self.harmonics, self.matrices)]}
        raise ModelError("callable coefficients cannot be serialized")


def matrix_to_json(matrix: np.ndarray) -> list:
    return [[[float(z.real), float(z.imag)] for z in row] for row in np.atleast_2d(matrix)]


def matrix_from_json(document, dimension: int) -> np.ndarray:
    """Row-major rows of [re, im] pairs; a bare number is accepted for 1 x 1"""
    if isinstance(document, (int, float)):
        document = [[[float(document), 0.0]]]
    try:
        rows = []
        for row in document:
            entries = []
            for entry in row:
                if isinstance(entry, (int, float)):
                    entries.append(complex(entry))
                else:
                    re, im = entry
                    entries.append(complex(float(re), float(im)))
            rows.append(entries)
        mat = np.array(rows, dtype=complex)
    except (TypeError, ValueError) as e:
        raise ModelError(f"malformed matrix: {e}") from e
    if mat.shape != (dimension, dimension):
        raise ModelError(f"matrix shape {mat.shape}, expected {(dimension, dimension)}")
    return mat


def periodic_matrix_from_json(document: dict, dimension: int, period: float) -> PeriodicMatrix:
    if not isinstance(document, dict):
        return PeriodicMatrix.from_constant(matrix_from_json(document, dimension))
    if "constant" in document:
        return PeriodicMatrix.from_constant(matrix_from_json(document["constant"], dimension))
    if "fourier_terms" in document:
        terms = {}
        for term in document["fourier_terms"]:
            k = int(term["harmonic"])
            mat = matrix_from_json(term["matrix"], dimension)
            terms[k] = terms.get(k, 0) + mat
        return PeriodicMatrix.from_fourier(terms, period=period)
    raise ModelError("matrix function needs 'constant' or 'fourier_terms'")


# ============================================
# DELAY STRUCTURE
# ============================================

@dataclass(frozen=True)
class DiscreteDelay:
    """Atom of eta at -tau: contributes B(t) x(t - tau)"""

    tau: float
    B: PeriodicMatrix


@dataclass(frozen=True, eq=False)
class DistributedKernel:
    """
    Absolutely continuous part of eta: int_{-r}^{0} K(t, theta) x(t + theta) d theta

    fn(t, thetas) returns an array of shape (len(thetas), n, n). The integral is
    computed with Clenshaw-Curtis quadrature of the given order.
    """

    dimension: int
    fn: Callable[[float, np.ndarray], np.ndarray]
    order: int = 32
    autonomous: bool = False
    document: Optional[dict] = None
    period: float = 1.0

    @classmethod
    def exponential(cls, matrix, decay: float = 0.0, order: int = 32) -> "DistributedKernel":
        """K(t, theta) = M exp(decay * theta), independent of t"""
        mat = np.atleast_2d(np.asarray(matrix, dtype=complex))

        def kernel(t, thetas):
            return np.exp(decay * np.asarray(thetas))[:, None, None] * mat[None, :, :]

        document = {"matrix": matrix_to_json(mat), "decay": float(decay), "order": int(order)}
        return cls(mat.shape[0], kernel, order=order, autonomous=True, document=document)

    def nodes(self, horizon: float) -> Tuple[np.ndarray, np.ndarray]:
        return lobatto_grid(horizon, self.order), clenshaw_curtis_weights(horizon, self.order)

    def normalized(self, period: float) -> "DistributedKernel":
        """Kernel in time units where the period is 1: p^2 K(p t, p theta)"""
        fn = self.fn
        document = None
        if self.document is not None:
            document = dict(self.document)
            document["matrix"] = matrix_to_json(
                period ** 2 * matrix_from_json(self.document["matrix"], self.dimension))
            document["decay"] = float(self.document.get("decay", 0.0)) * period
        return DistributedKernel(
            self.dimension,
            lambda t, thetas: period ** 2 * np.asarray(fn(period * t, period * np.asarray(thetas))),
            order=self.order, autonomous=self.autonomous, document=document)


@dataclass(frozen=True)
class DelayStructure:
    discrete_delays: Tuple[DiscreteDelay, ...] = ()
    distributed_kernel: Optional[DistributedKernel] = None

    @property
    def is_empty(self) -> bool:
        return not self.discrete_delays and self.distributed_kernel is None

    def min_delay(self) -> float:
        return min((d.tau for d in self.discrete_delays), default=float("inf"))


# ============================================
# MODEL
# ============================================

@dataclass(frozen=True, eq=False)
class FDEModel:
    """
    1-periodic linear FDE  dx/dt = A(t) x(t) + F(t) x_t + f(t)

    Build through ``FDEModel.build`` so inputs with another period are rescaled.
    """

    dimension: int
    horizon: float
    A: PeriodicMatrix
    delays: DelayStructure
    forcing: TrigPolynomial
    name: str = ""
    source_period: float = 1.0

    def __post_init__(self):
        n = self.dimension
        if n < 1:
            raise ModelError(f"dimension must be positive, got {n}")
        if not (np.isfinite(self.horizon) and self.horizon > 0):
            raise ModelError(f"delay horizon must be positive and finite, got {self.horizon}")
        if self.A.dimension != n:
            raise ModelError(f"A has dimension {self.A.dimension}, model has {n}")
        if self.A.period != 1.0:
            raise ModelError("coefficients must be normalized to period 1")
        for delay in self.delays.discrete_delays:
            if not 0.0 < delay.tau <= self.horizon * (1.0 + 1e-12):
                raise ModelError(f"delay {delay.tau} outside (0, r={self.horizon}]")
            if delay.B.dimension != n:
                raise ModelError(f"delay matrix dimension {delay.B.dimension}, model has {n}")
        kernel = self.delays.distributed_kernel
        if kernel is not None and kernel.dimension != n:
            raise ModelError(f"kernel dimension {kernel.dimension}, model has {n}")
        if self.forcing.dimension != n:
            raise ModelError(f"forcing dimension {self.forcing.dimension}, model has {n}")
        if not np.isfinite(self.A.sup_norm()) or not np.isfinite(self.F_sup_norm()):
            raise ModelError("coefficients are not bounded on the sampled period")

    @classmethod
    def build(cls, dimension: int, horizon: float, A: PeriodicMatrix,
              delays: Sequence[Tuple[float, PeriodicMatrix]] = (),
              kernel: Optional[DistributedKernel] = None,
              forcing: Optional[TrigPolynomial] = None,
              period: float = 1.0, name: str = "") -> "FDEModel":
        """
        Assemble a model, rescaling t -> t/period so the result is 1-periodic

        Args:
            dimension: n
            horizon: delay horizon r in the input time units
            A: state matrix function with the input period
            delays: (tau, B) pairs in the input time units
            kernel: optional distributed kernel
            forcing: trigonometric polynomial forcing (zero if omitted)
            period: common period of A, B_j and the kernel
            name: label used in logs and reports

        Returns:
            FDEModel with period exactly 1
        """
        if not period > 0:
            raise ModelError(f"period must be positive, got {period}")
        forcing = forcing if forcing is not None else TrigPolynomial.zero(dimension)
        p = float(period)
        if A.period != p and not A.is_constant:
            A = replace(A, period=p)
        A = A.normalized(scale=p)
        discrete = []
        for tau, B in delays:
            if not B.is_constant:
                B = replace(B, period=p)
            discrete.append(DiscreteDelay(float(tau) / p, B.normalized(scale=p)))
        if kernel is not None and p != 1.0:
            kernel = kernel.normalized(p)
        if p != 1.0:
            forcing = TrigPolynomial.from_terms(
                [(lam * p, p * c) for lam, c in forcing.terms()], dimension)
        return cls(dimension, float(horizon) / p, A,
                   DelayStructure(tuple(discrete), kernel), forcing, name=name, source_period=p)

    # -- properties -------------------------------------------------

    @property
    def is_autonomous(self) -> bool:
        kernel = self.delays.distributed_kernel
        return (self.A.is_constant
                and all(d.B.is_constant for d in self.delays.discrete_delays)
                and (kernel is None or kernel.autonomous))

    def min_delay(self) -> float:
        return self.delays.min_delay()

    def F_sup_norm(self) -> float:
        """Estimate of sup_t ||F(t)|| (operator norm on C_r with the sup norm)"""
        total = sum(d.B.sup_norm() for d in self.delays.discrete_delays)
        kernel = self.delays.distributed_kernel
        if kernel is not None:
            thetas, weights = kernel.nodes(self.horizon)
            times = np.linspace(0.0, 1.0, 16, endpoint=False)
            total += max(
                float(np.sum(np.abs(weights) * np.linalg.norm(kernel.fn(t, thetas), 2, axis=(1, 2))))
                for t in times)
        return float(total)

    def grid(self, m: int) -> np.ndarray:
        return lobatto_grid(self.horizon, m)

    def with_forcing(self, forcing: TrigPolynomial) -> "FDEModel":
        return replace(self, forcing=forcing)

    # -- delay functional -----------------------------------------------

    def delay_term(self, t: float, sampler: Callable[[np.ndarray], np.ndarray]) -> np.ndarray:
        """
        F(t) applied to a history given by sampler(thetas) -> (k, n, *batch)

        Returns:
            array of shape (n, *batch), or zeros(n) when there is no delay
        """
        result = None
        discrete = self.delays.discrete_delays
        if discrete:
            past = sampler(np.array([-d.tau for d in discrete]))
            for j, d in enumerate(discrete):
                term = apply_matrix(d.B(t), past[j])
                result = term if result is None else result + term
        kernel = self.delays.distributed_kernel
        if kernel is not None:
            thetas, weights = kernel.nodes(self.horizon)
            values = sampler(thetas)
            K = kernel.fn(t, thetas) * weights[:, None, None]
            for q in range(len(thetas)):
                term = apply_matrix(K[q], values[q])
                result = term if result is None else result + term
        if result is None:
            return np.zeros(self.dimension, dtype=complex)
        return result

    # -- serialization --------------------------------------------------

    def to_dict(self) -> dict:
        kernel = self.delays.distributed_kernel
        if kernel is not None and kernel.document is None:
            raise ModelError("callable kernels cannot be serialized")
        document = {
            "name": self.name,
            "dimension": self.dimension,
            "horizon_r": self.horizon,
            "A": self.A.to_dict(),
            "delays": [{"tau": d.tau, "B": d.B.to_dict()} for d in self.delays.discrete_delays],
            "forcing": self.forcing.to_dict(),
        }
        if kernel is not None:
            document["kernel"] = kernel.document
        return document

    @classmethod
    def from_dict(cls, document: dict) -> "FDEModel":
        """
        Parse a model document

        Schema:
            {"name"?: str, "dimension": n, "horizon_r": r, "period"?: p,
             "A": {"constant": M} | {"fourier_terms": [{"harmonic": k, "matrix": M}]},
             "delays": [{"tau": float, "B": <same as A>}],
             "kernel"?: {"matrix": M, "decay"?: a, "order"?: q},
             "forcing"?: {"dimension": n, "terms": [{"frequency", "re", "im"}]}}
            with M a row-major list of rows of [re, im] pairs.
        """
        if not isinstance(document, dict):
            raise ModelError("model document must be a JSON object")
        try:
            n = int(document["dimension"])
            r = float(document["horizon_r"])
            period = float(document.get("period", 1.0))
            A = periodic_matrix_from_json(document["A"], n, period)
            delays = [(float(d["tau"]), periodic_matrix_from_json(d["B"], n, period))
                      for d in document.get("delays", [])]
            kernel = None
            if document.get("kernel") is not None:
                kdoc = document["kernel"]
                kernel = DistributedKernel.exponential(
                    matrix_from_json(kdoc["matrix"], n), float(kdoc.get("decay", 0.0)),
                    int(kdoc.get("order", 32)))
            forcing = (TrigPolynomial.from_dict(document["forcing"])
                       if document.get("forcing") else TrigPolynomial.zero(n))
        except (KeyError, TypeError, ValueError, ApfunError) as e:
            raise ModelError(f"malformed model document: {type(e).__name__}: {e}") from e
        return cls.build(n, r, A, delays, kernel, forcing, period=period,
                         name=str(document.get("name", "")))

    def fingerprint(self) -> str:
        """sha256 of the canonical model document ("callable" when not serializable)"""
        try:
            canonical = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        except ModelError:
            return "callable"
        return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


def load_model(path) -> FDEModel:
    """Read a model JSON file"""
    path = Path(path)
    try:
        document = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as e:
        raise ModelError(f"{path}: invalid JSON: {e}") from e
    model = FDEModel.from_dict(document)
    if not model.name:
        model = replace(model, name=path.stem)
    return model


def apply_F(model: FDEModel, t: float, phi: History) -> np.ndarray:
    """
    Delay functional F(t) phi

    Args:
        model: FDE model
        t: time
        phi: segment (or any history) on [-r, 0]

    Returns:
        sum_j B_j(t) phi(-tau_j) + sum_q w_q K(t, theta_q) phi(theta_q)
    """
    return model.delay_term(t, phi.sample)


if __name__ == "__main__":
    model = FDEModel.build(1, 1.0, PeriodicMatrix.from_constant([[0.0]]),
                           delays=[(1.0, PeriodicMatrix.from_constant([[-1.0]]))])
    phi = Segment.constant([1.0], model.horizon, 32)
    print("F(0) phi =", apply_F(model, 0.0, phi))
    print("head =", head(phi))
