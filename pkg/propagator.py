"""
propagator.py
Method-of-steps integration of mild solutions, the evolution operators U(t,s),
forced responses from a zero history, the Gamma^n embedding and the evolution semigroup
"""

import csv
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Optional, Tuple

import numpy as np
from scipy.linalg import expm

from apfun import TrigPolynomial
from config import Config, canonical_float
from health_monitor import health_monitor
from logger import logger
from phasespace import DomainError, FDEModel, History, Segment, TentSegment, apply_matrix, lobatto_grid


class PropagationConfigError(Exception):
    """Step size, output grid or time interval incompatible with the model"""
    pass


# ============================================
# CONFIGURATION
# ============================================

@dataclass(frozen=True)
class StepperConfig:
    """Fixed-step integrator settings"""

    substeps: int = Config.SUBSTEPS
    history_order: str = "cubic"
    output_step: float = Config.OUTPUT_STEP

    def __post_init__(self):
        if self.substeps < 16:
            raise PropagationConfigError(f"substeps must be at least 16, got {self.substeps}")
        if self.history_order != "cubic":
            raise PropagationConfigError(f"unsupported history order '{self.history_order}'")
        if not self.output_step > 0:
            raise PropagationConfigError(f"output step must be positive, got {self.output_step}")

    @property
    def step(self) -> float:
        return 1.0 / self.substeps

    def check_model(self, model: FDEModel):
        """Reject step sizes longer than the shortest delay and too coarse output grids"""
        min_tau = model.min_delay()
        if self.step > min_tau:
            raise PropagationConfigError(
                f"step 1/{self.substeps} exceeds the shortest delay {min_tau:.6g}")
        limit = 1.0 / (4.0 * max(1.0, 1.0 / min_tau))
        if self.output_step > limit:
            raise PropagationConfigError(
                f"output step {self.output_step:.6g} exceeds {limit:.6g} for this model")


# ============================================
# DENSE OUTPUT
# ============================================

def _broadcast(weights: np.ndarray, ndim: int) -> np.ndarray:
    return weights.reshape(weights.shape + (1,) * (ndim - 1))


def _hermite(nodes: np.ndarray, values: np.ndarray, slopes: np.ndarray, q: np.ndarray,
             last: Optional[int] = None) -> np.ndarray:
    """
    Piecewise cubic Hermite interpolation on nodes[0..last]

    When the slope at nodes[last] is not yet known (``last`` given), queries in
    the final interval use the quadratic through both values and the left slope.
    """
    top = len(nodes) - 1 if last is None else last
    if top == 0:
        return np.repeat(values[:1], len(q), axis=0)
    idx = np.clip(np.searchsorted(nodes[:top + 1], q, side="right") - 1, 0, top - 1)
    x0 = nodes[idx]
    dx = nodes[idx + 1] - x0
    x = (q - x0) / dx
    nd = values.ndim
    v0, v1 = values[idx], values[idx + 1]
    d0, d1 = slopes[idx], slopes[idx + 1]
    xb = _broadcast(x, nd)
    dxb = _broadcast(dx, nd)
    h00 = (1 + 2 * xb) * (1 - xb) ** 2
    h10 = xb * (1 - xb) ** 2
    h01 = xb ** 2 * (3 - 2 * xb)
    h11 = xb ** 2 * (xb - 1)
    cubic = h00 * v0 + h10 * dxb * d0 + h01 * v1 + h11 * dxb * d1
    if last is not None:
        open_interval = _broadcast((idx == top - 1).astype(float), nd)
        quad = v0 + xb * dxb * d0 + xb ** 2 * (v1 - v0 - dxb * d0)
        cubic = open_interval * quad + (1 - open_interval) * cubic
    return cubic


@dataclass(frozen=True, eq=False)
class Trajectory:
    """
    Numerical mild solution on [start - r, end]

    Node values and slopes on the step grid form a cubic Hermite dense output;
    times before ``start`` are read from the initial history.
    """

    model: FDEModel
    history: History
    start: float
    end: float
    nodes: np.ndarray
    values: np.ndarray
    slopes: np.ndarray
    forcing: TrigPolynomial
    config: StepperConfig

    @property
    def dimension(self) -> int:
        return self.model.dimension

    @property
    def batch_shape(self) -> Tuple[int, ...]:
        return self.values.shape[2:]

    def sample(self, times) -> np.ndarray:
        """u at absolute times in [start - r, end], shape (k, n, *batch)"""
        times = np.atleast_1d(np.asarray(times, dtype=float))
        rel = times - self.start
        span = self.end - self.start
        tol = 1e-12 * max(1.0, abs(self.start), abs(self.end))
        if np.any(rel < -self.model.horizon - tol) or np.any(rel > span + tol):
            raise DomainError(
                f"trajectory covers [{self.start - self.model.horizon}, {self.end}], "
                f"asked for [{times.min()}, {times.max()}]")
        out = np.empty((len(times), self.dimension) + self.batch_shape, dtype=complex)
        before = rel < 0.0
        if np.any(before):
            out[before] = self.history.sample(rel[before])
        after = ~before
        if np.any(after):
            out[after] = _hermite(self.nodes, self.values, self.slopes, np.clip(rel[after], 0.0, span))
        return out

    def head(self) -> np.ndarray:
        """u(end)"""
        return self.values[-1].copy()

    def segment_at(self, time: float, m: int) -> "TrajectoryWindow":
        """The segment u_time on an (m+1)-node grid, backed by the dense output"""
        return TrajectoryWindow.capture(self, time, m)

    def output_grid(self) -> Tuple[np.ndarray, np.ndarray]:
        """Samples on the uniform output grid of [start - r, end]"""
        lo = self.start - self.model.horizon
        count = int(np.ceil((self.end - lo) / self.config.output_step - 1e-9)) + 1
        times = np.linspace(lo, self.end, max(count, 2))
        return times, self.sample(times)

    def to_csv(self, path, extra_header: str = "") -> Path:
        """Write t, re(u_1..u_n), im(u_1..u_n) on the output grid"""
        if self.batch_shape:
            raise DomainError("batched trajectories cannot be exported")
        path = Path(path)
        times, values = self.output_grid()
        n = self.dimension
        with path.open("w", newline="", encoding="utf-8") as handle:
            handle.write(f"# model_sha256={self.model.fingerprint()} substeps={self.config.substeps} "
                         f"output_step={self.config.output_step!r} start={self.start!r} "
                         f"end={self.end!r}{extra_header}\n")
            writer = csv.writer(handle)
            writer.writerow(["t"] + [f"re_u{i + 1}" for i in range(n)] + [f"im_u{i + 1}" for i in range(n)])
            for t, row in zip(times, values):
                writer.writerow([f"{canonical_float(x):.17g}" for x in (t, *row.real, *row.imag)])
        return path

    def to_dict(self) -> dict:
        return {
            "start": float(self.start),
            "end": float(self.end),
            "nodes": self.nodes.tolist(),
            "values_re": self.values.real.tolist(),
            "values_im": self.values.imag.tolist(),
            "slopes_re": self.slopes.real.tolist(),
            "slopes_im": self.slopes.imag.tolist(),
        }

    @classmethod
    def from_dict(cls, document: dict, model: FDEModel, history: History,
                  forcing: TrigPolynomial, config: StepperConfig) -> "Trajectory":
        values = np.asarray(document["values_re"], dtype=float) + 1j * np.asarray(document["values_im"], dtype=float)
        slopes = np.asarray(document["slopes_re"], dtype=float) + 1j * np.asarray(document["slopes_im"], dtype=float)
        return cls(model, history, float(document["start"]), float(document["end"]),
                   np.asarray(document["nodes"], dtype=float), values, slopes, forcing, config)


@dataclass(frozen=True, eq=False)
class TrajectoryWindow(Segment):
    """Segment u_t read from a trajectory; ``sample`` uses the dense output, not the interpolant"""

    trajectory: Optional[Trajectory] = None
    time: float = 0.0

    @classmethod
    def capture(cls, trajectory: Trajectory, time: float, m: int) -> "TrajectoryWindow":
        grid = lobatto_grid(trajectory.model.horizon, m)
        values = trajectory.sample(time + grid)
        return cls(trajectory.model.horizon, values, trajectory=trajectory, time=time)

    def sample(self, thetas) -> np.ndarray:
        thetas = np.clip(np.atleast_1d(np.asarray(thetas, dtype=float)), -self.horizon, 0.0)
        return self.trajectory.sample(self.time + thetas)


@dataclass(frozen=True, eq=False)
class FunctionHistory(History):
    """History theta -> fn(anchor + theta) for a vectorized fn(times) -> (k, n)"""

    fn: Callable[[np.ndarray], np.ndarray]
    anchor: float
    horizon: float
    dimension: int
    batch_shape: Tuple[int, ...] = ()

    def sample(self, thetas) -> np.ndarray:
        thetas = np.clip(np.atleast_1d(np.asarray(thetas, dtype=float)), -self.horizon, 0.0)
        return np.asarray(self.fn(self.anchor + thetas), dtype=complex)


# ============================================
# INTEGRATOR
# ============================================

def _step_nodes(span: float, h: float) -> np.ndarray:
    """Relative node times 0, h, 2h, ... plus a final partial step ending at span"""
    full = int(np.floor(span / h + 1e-9))
    nodes = np.arange(full + 1) * h
    if span - nodes[-1] > 1e-12 * max(1.0, span):
        nodes = np.append(nodes, span)
    else:
        nodes[-1] = span if full > 0 else 0.0
    return nodes


def _integrate(model: FDEModel, history: History, s: float, t: float,
               forcing: TrigPolynomial, cfg: StepperConfig) -> Trajectory:
    if t < s:
        raise PropagationConfigError(f"processes run forward only: t={t} < s={s}")
    cfg.check_model(model)
    if abs(history.horizon - model.horizon) > 1e-12 * model.horizon:
        raise DomainError(f"history horizon {history.horizon} differs from model horizon {model.horizon}")
    if history.dimension != model.dimension:
        raise DomainError(f"history dimension {history.dimension} differs from model {model.dimension}")

    n = model.dimension
    batch = tuple(history.batch_shape)
    nodes = _step_nodes(t - s, cfg.step)
    steps = len(nodes) - 1
    shape = (steps + 1, n) + batch
    values = np.zeros(shape, dtype=complex)
    slopes = np.zeros(shape, dtype=complex)
    values[0] = history.sample([0.0])[0]

    expand = (slice(None),) + (None,) * len(batch)
    has_forcing = not forcing.is_zero()
    has_delay = not model.delays.is_empty
    constant_A = model.A.is_constant

    def nonlinear_part(k: int, sigma: float, y: np.ndarray, slope_known: bool) -> np.ndarray:
        """F(t) u_t + f(t) at relative time sigma inside step k with stage value y"""
        total = np.zeros((n,) + batch, dtype=complex)
        if has_delay:
            base = nodes[k]

            def past(thetas):
                q = sigma + np.asarray(thetas, dtype=float)
                out = np.empty((len(q), n) + batch, dtype=complex)
                before = q < 0.0
                current = q > base
                known = ~before & ~current
                if np.any(before):
                    out[before] = history.sample(q[before])
                if np.any(known):
                    out[known] = _hermite(nodes[:k + 1], values[:k + 1], slopes[:k + 1],
                                          q[known], last=None if slope_known else k)
                if np.any(current):
                    width = sigma - base
                    w = (q[current] - base) / width if width > 0 else np.ones(int(np.sum(current)))
                    wb = _broadcast(w, values.ndim)
                    out[current] = (1 - wb) * values[k] + wb * y
                return out

            total = total + model.delay_term(s + sigma, past)
        if has_forcing:
            total = total + forcing(s + sigma)[expand]
        return total

    exp_cache = {}

    def exponentials(h: float):
        key = round(h, 15)
        if key not in exp_cache:
            half = expm(model.A.matrix * (h / 2.0))
            exp_cache[key] = (half, apply_matrix(half, half))
        return exp_cache[key]

    for k in range(steps):
        h = nodes[k + 1] - nodes[k]
        sig = nodes[k]
        y = values[k]
        if constant_A:
            A = model.A.matrix
            E_half, E = exponentials(h)
            N1 = nonlinear_part(k, sig, y, slope_known=False)
            slopes[k] = apply_matrix(A, y) + N1
            U2 = apply_matrix(E_half, y + 0.5 * h * N1)
            N2 = nonlinear_part(k, sig + 0.5 * h, U2, True)
            U3 = apply_matrix(E_half, y) + 0.5 * h * N2
            N3 = nonlinear_part(k, sig + 0.5 * h, U3, True)
            U4 = apply_matrix(E, y) + h * apply_matrix(E_half, N3)
            N4 = nonlinear_part(k, sig + h, U4, True)
            values[k + 1] = (apply_matrix(E, y)
                             + (h / 6.0) * (apply_matrix(E, N1) + 2.0 * apply_matrix(E_half, N2 + N3) + N4))
        else:
            A0 = model.A(s + sig)
            Am = model.A(s + sig + 0.5 * h)
            A1 = model.A(s + sig + h)
            k1 = apply_matrix(A0, y) + nonlinear_part(k, sig, y, slope_known=False)
            slopes[k] = k1
            y2 = y + 0.5 * h * k1
            k2 = apply_matrix(Am, y2) + nonlinear_part(k, sig + 0.5 * h, y2, True)
            y3 = y + 0.5 * h * k2
            k3 = apply_matrix(Am, y3) + nonlinear_part(k, sig + 0.5 * h, y3, True)
            y4 = y + h * k3
            k4 = apply_matrix(A1, y4) + nonlinear_part(k, sig + h, y4, True)
            values[k + 1] = y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)

    last_sigma = nodes[-1]
    slopes[-1] = (apply_matrix(model.A(s + last_sigma), values[-1])
                  + nonlinear_part(steps, last_sigma, values[-1], slope_known=False))

    health_monitor.increment_propagations(int(np.prod(batch)) if batch else 1)
    return Trajectory(model, history, float(s), float(t), nodes, values, slopes, forcing, cfg)


# ============================================
# PUBLIC OPERATIONS
# ============================================

def propagate(model: FDEModel, phi: History, s: float, t: float, forcing_on: bool = True,
              cfg: Optional[StepperConfig] = None) -> Trajectory:
    """
    Numerical mild solution on [s, t] from the initial segment phi

    Args:
        model: FDE model
        phi: initial segment (any History, possibly batched)
        s: start time
        t: end time, t >= s
        forcing_on: include the model forcing f
        cfg: stepper configuration

    Returns:
        Trajectory with u_s = phi

    Raises:
        PropagationConfigError: t < s, or step longer than the shortest delay
    """
    cfg = cfg or StepperConfig()
    forcing = model.forcing if forcing_on else TrigPolynomial.zero(model.dimension)
    return _integrate(model, phi, s, t, forcing, cfg)


def _grid_size(phi: History) -> int:
    return phi.m if isinstance(phi, Segment) else Config.COLLOCATION_NODES


def evolution_apply(model: FDEModel, phi: History, s: float, t: float,
                    cfg: Optional[StepperConfig] = None, m: Optional[int] = None) -> Segment:
    """U(t, s) phi: the segment at t of the homogeneous solution"""
    if t == s and isinstance(phi, Segment) and (m is None or m == phi.m):
        return phi
    trajectory = propagate(model, phi, s, t, forcing_on=False, cfg=cfg)
    return trajectory.segment_at(t, m or _grid_size(phi))


def evolution_matrix(model: FDEModel, s: float, t: float, m: int,
                     cfg: Optional[StepperConfig] = None) -> np.ndarray:
    """
    Dense N x N realization of U(t, s) on the collocation grid, N = n(m+1)

    Column j holds the node coordinates of U(t, s) applied to the j-th basis segment.
    """
    basis = Segment.basis(model.dimension, model.horizon, m)
    trajectory = propagate(model, basis, s, t, forcing_on=False, cfg=cfg)
    image = trajectory.sample(t + lobatto_grid(model.horizon, m))
    size = model.dimension * (m + 1)
    logger.debug(f"Assembled U({t:.4g}, {s:.4g}) of size {size} for '{model.name}'")
    return image.reshape(size, size)


def forced_response_zero_ic(model: FDEModel, frequency: float, coefficient, t0: float,
                            cfg: Optional[StepperConfig] = None, m: int = Config.COLLOCATION_NODES) -> Segment:
    """
    Segment at t0 of the solution on [t0 - 1, t0] with zero history and forcing c exp(i lambda t)

    This is the discrete g(t0) of the single-frequency forcing.
    """
    forcing = TrigPolynomial.from_terms([(frequency, coefficient)], model.dimension)
    zero = Segment.zeros(model.dimension, model.horizon, m)
    trajectory = _integrate(model, zero, t0 - 1.0, t0, forcing, cfg or StepperConfig())
    return trajectory.segment_at(t0, m)


def gamma_embed(n: int, x, horizon: float, m: int) -> TentSegment:
    """
    Gamma^n x: theta -> (n theta + 1) x on [-1/n, 0], zero before

    Raises:
        DomainError: n < 1 or 1/n > horizon
    """
    if n < 1:
        raise DomainError(f"n must be at least 1, got {n}")
    if 1.0 / n > horizon * (1.0 + 1e-12):
        raise DomainError(f"1/n = {1.0 / n:.6g} exceeds the horizon {horizon}")
    vector = np.atleast_1d(np.asarray(x, dtype=complex))
    grid = lobatto_grid(horizon, m)
    profile = np.maximum(n * grid + 1.0, 0.0)
    return TentSegment(horizon, profile[:, None] * vector[None, :], steepness=n, vector=vector)


def vcf_gamma_oracle(model: FDEModel, frequency: float, coefficient, t0: float, n: int,
                     cfg: Optional[StepperConfig] = None, m: int = Config.COLLOCATION_NODES,
                     quadrature_nodes: Optional[int] = None) -> Segment:
    """
    n-th variation-of-constants approximant int_{t0-1}^{t0} U(t0, s) Gamma^n f(s) ds

    Composite trapezoid rule over s; each integrand value is one homogeneous
    propagation of a tent segment. Independent oracle for forced_response_zero_ic.
    """
    cfg = cfg or StepperConfig()
    q = quadrature_nodes or (4 * n + 32)
    starts = np.linspace(t0 - 1.0, t0, q + 1)
    weights = np.full(q + 1, 1.0 / q)
    weights[0] = weights[-1] = 0.5 / q
    coefficient = np.atleast_1d(np.asarray(coefficient, dtype=complex))
    targets = t0 + lobatto_grid(model.horizon, m)
    total = np.zeros((m + 1, model.dimension), dtype=complex)
    if not np.any(coefficient):
        return Segment(model.horizon, total)
    for s_j, w_j in zip(starts, weights):
        tent = gamma_embed(n, coefficient * np.exp(1j * frequency * s_j), model.horizon, m)
        trajectory = _integrate(model, tent, s_j, t0, TrigPolynomial.zero(model.dimension), cfg)
        total += w_j * trajectory.sample(targets)
    return Segment(model.horizon, total)


# ============================================
# EVOLUTION SEMIGROUP
# ============================================

@dataclass(frozen=True, eq=False)
class SegmentPath:
    """C_r-valued function sampled on an increasing time grid"""

    times: np.ndarray
    segments: Tuple[Segment, ...]

    def __post_init__(self):
        times = np.array(self.times, dtype=float)
        if len(times) != len(self.segments) or len(times) == 0:
            raise DomainError("a segment path needs one segment per grid time")
        if np.any(np.diff(times) <= 0):
            raise DomainError("segment path times must increase")
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "segments", tuple(self.segments))

    def at(self, time: float) -> Segment:
        """Segment at a time inside the grid (linear in time between grid points)"""
        tol = 1e-9 * max(1.0, abs(time))
        if time < self.times[0] - tol or time > self.times[-1] + tol:
            raise DomainError(f"time {time} outside [{self.times[0]}, {self.times[-1]}]")
        j = int(np.argmin(np.abs(self.times - time)))
        if abs(self.times[j] - time) <= tol:
            return self.segments[j]
        j = int(np.searchsorted(self.times, time)) - 1
        w = (time - self.times[j]) / (self.times[j + 1] - self.times[j])
        return self.segments[j].scale(1 - w) + self.segments[j + 1].scale(w)

    def node_values(self) -> np.ndarray:
        return np.array([seg.values for seg in self.segments])


def evolution_semigroup_apply(model: FDEModel, g: SegmentPath, h: float,
                              cfg: Optional[StepperConfig] = None) -> SegmentPath:
    """
    (T^h g)(t) = U(t, t - h) g(t - h) at every grid time t with t - h on the grid span

    Raises:
        DomainError: h < 0 or no grid time has t - h covered
    """
    if h < 0:
        raise DomainError(f"h must be non-negative, got {h}")
    tol = 1e-9 * max(1.0, abs(g.times[0]))
    keep = [t for t in g.times if t - h >= g.times[0] - tol]
    if not keep:
        raise DomainError(f"grid of length {g.times[-1] - g.times[0]:.6g} does not cover shift h={h}")
    segments = []
    for t in keep:
        source = g.at(max(t - h, g.times[0]))
        segments.append(evolution_apply(model, source, t - h, t, cfg))
    return SegmentPath(np.array(keep), tuple(segments))


# ============================================
# DIAGNOSTICS
# ============================================

@dataclass(frozen=True)
class GrowthBound:
    """Constants of ||U(t,s)|| <= N exp(omega (t - s))"""

    N: float
    omega: float


def growth_bound(model: FDEModel, m: int, cfg: Optional[StepperConfig] = None,
                 horizon: float = 3.0, samples: int = 12) -> GrowthBound:
    """
    Estimate N and omega from discretized evolution matrices

    omega is the log of the monodromy spectral radius plus a margin; N is the
    largest observed ||U(s + tau, s)|| exp(-omega tau) for s in {0, 1/2}.
    """
    monodromy = evolution_matrix(model, 0.0, 1.0, m, cfg)
    radius = float(np.max(np.abs(np.linalg.eigvals(monodromy))))
    omega = float(np.log(max(radius, 1e-12))) + 0.05
    grid = lobatto_grid(model.horizon, m)
    size = model.dimension * (m + 1)
    N = 1.0
    for s in (0.0, 0.5):
        basis = Segment.basis(model.dimension, model.horizon, m)
        trajectory = propagate(model, basis, s, s + horizon, forcing_on=False, cfg=cfg)
        for tau in np.linspace(horizon / samples, horizon, samples):
            U = trajectory.sample(s + tau + grid).reshape(size, size)
            N = max(N, float(np.linalg.norm(U, np.inf)) * float(np.exp(-omega * tau)))
    return GrowthBound(N=N, omega=omega)


def trajectory_residual(trajectory: Trajectory, stride: int = 8) -> float:
    """
    Re-integrate single substeps from the trajectory's own dense output

    Returns:
        max over checked nodes of ||u(t_i) - [U(t_i, t_i - h) u_{t_i - h} + forced part]||
    """
    model = trajectory.model
    worst = 0.0
    nodes = trajectory.nodes
    for i in range(1, len(nodes), max(1, stride)):
        s = trajectory.start + nodes[i - 1]
        t = trajectory.start + nodes[i]
        window = FunctionHistory(trajectory.sample, s, model.horizon, model.dimension,
                                 trajectory.batch_shape)
        again = _integrate(model, window, s, t, trajectory.forcing, trajectory.config)
        worst = max(worst, float(np.max(np.abs(again.values[-1] - trajectory.values[i]))))
    return worst


if __name__ == "__main__":
    from phasespace import PeriodicMatrix

    decay = FDEModel.build(1, 1.0, PeriodicMatrix.from_constant([[-1.0]]))
    phi = Segment.constant([1.0], 1.0, 32)
    trajectory = propagate(decay, phi, 0.0, 1.0)
    print("u(1) =", trajectory.head(), "expected", np.exp(-1.0))
