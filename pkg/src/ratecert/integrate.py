"""Integration of the damped-oscillator flow.

The vector field splits into friction, potential force and inertia. A
four-stage additive Runge-Kutta scheme applies the pieces in that order and
reproduces one momentum-method step exactly: with steplength h, the scheme at
(alpha = h^2, beta = 1 - h b sqrt(m)) maps [d_k, x_k] to [d_{k+1}, x_{k+1}].
A classical fourth-order one-step method at fixed steplength serves as the
high-accuracy reference.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .certify_continuous import ContinuousCertificate
from .discrete import DivergenceError, initial_state, nesterov_system, run
from .objectives import ObjectiveOracle

__all__ = [
    "PhaseState",
    "SplitField",
    "ContinuousTrajectory",
    "LimitReport",
    "polyak_field",
    "ark_step",
    "ark_stages",
    "reference_integrate",
    "lyapunov_continuous",
    "limit_consistency",
]


@dataclass(frozen=True)
class PhaseState:
    """Phase point (v, x) at time t, with v the scaled velocity x'/sqrt(m)."""

    v: np.ndarray
    x: np.ndarray
    t: float = 0.0

    def __post_init__(self):
        v = np.asarray(self.v, dtype=float).reshape(-1)
        x = np.asarray(self.x, dtype=float).reshape(-1)
        if v.shape != x.shape:
            raise ValueError("v and x must have the same dimension")
        if not (np.all(np.isfinite(v)) and np.all(np.isfinite(x)) and math.isfinite(self.t)):
            raise ValueError("phase state entries must be finite")
        object.__setattr__(self, "v", v)
        object.__setattr__(self, "x", x)

    @property
    def d(self) -> int:
        return self.x.size

    def vector(self) -> np.ndarray:
        return np.concatenate([self.v, self.x])

    @classmethod
    def from_vector(cls, z: np.ndarray, t: float = 0.0) -> "PhaseState":
        z = np.asarray(z, dtype=float).reshape(-1)
        d = z.size // 2
        return cls(z[:d], z[d:], t)


@dataclass(frozen=True)
class SplitField:
    """Additive split of the oscillator field into its three mechanisms.

    Each piece maps a phase vector z = [v, x] to a phase vector; their sum is
    the full right-hand side.
    """

    friction: Callable[[np.ndarray], np.ndarray]
    potential: Callable[[np.ndarray], np.ndarray]
    inertia: Callable[[np.ndarray], np.ndarray]
    d: int

    def total(self, z: np.ndarray) -> np.ndarray:
        return self.friction(z) + self.potential(z) + self.inertia(z)


def polyak_field(oracle: ObjectiveOracle, b_bar: float) -> SplitField:
    """Split field of x'' + b sqrt(m) x' + grad f(x) = 0 in (v, x) variables."""
    if b_bar <= 0.0:
        raise ValueError("friction must be positive")
    d = oracle.d
    rm = math.sqrt(oracle.m)
    zeros = np.zeros(d)

    def friction(z):
        return np.concatenate([-b_bar * rm * z[:d], zeros])

    def potential(z):
        return np.concatenate([-oracle.gradient(z[d:]) / rm, zeros])

    def inertia(z):
        return np.concatenate([zeros, rm * z[:d]])

    return SplitField(friction, potential, inertia, d)


def ark_stages(state: PhaseState, h: float, field: SplitField):
    """One additive Runge-Kutta step, returning also the four stage vectors.

    Stages incorporate friction, inertia and potential force in succession;
    the potential piece (the only gradient evaluation) is computed once, at
    the third stage, and reused in the update.
    """
    if h <= 0.0:
        raise ValueError("steplength must be positive")
    z = state.vector()
    k_friction = h * field.friction(z)
    stage1 = z
    stage2 = z + k_friction
    k_inertia2 = h * field.inertia(stage2)
    stage3 = stage2 + k_inertia2
    k_potential3 = h * field.potential(stage3)
    stage4 = stage3 + k_potential3
    z_next = z + k_friction + k_potential3 + h * field.inertia(stage4)
    return PhaseState.from_vector(z_next, state.t + h), (stage1, stage2, stage3, stage4)


def ark_step(state: PhaseState, h: float, field: SplitField) -> PhaseState:
    new_state, _ = ark_stages(state, h, field)
    return new_state


@dataclass(frozen=True)
class ContinuousTrajectory:
    """Fixed-step samples of an integrated flow."""

    t: np.ndarray  # (k+1,)
    z: np.ndarray  # (k+1, 2d)

    @property
    def d(self) -> int:
        return self.z.shape[1] // 2

    def state(self, i: int) -> PhaseState:
        return PhaseState.from_vector(self.z[i], float(self.t[i]))

    def x(self) -> np.ndarray:
        return self.z[:, self.d:]

    def v(self) -> np.ndarray:
        return self.z[:, : self.d]

    def index_at(self, time: float) -> int:
        """Nearest-step sample index (no interpolation)."""
        h = self.t[1] - self.t[0] if self.t.size > 1 else 1.0
        i = int(round(time / h))
        return min(max(i, 0), self.t.size - 1)


def reference_integrate(field, z0, t_end: float, h_ref: float = 1e-3) -> ContinuousTrajectory:
    """Classical fourth-order one-step integration at fixed steplength.

    field may be a SplitField (its pieces are summed) or a plain callable
    z -> dz/dt. Fixed stepping keeps results bit-reproducible; the global
    error is O(h_ref^4).
    """
    if h_ref <= 0.0:
        raise ValueError("reference steplength must be positive")
    if t_end < 0.0:
        raise ValueError("t_end must be >= 0")
    rhs = field.total if isinstance(field, SplitField) else field
    if isinstance(z0, PhaseState):
        z = z0.vector()
        t0 = z0.t
    else:
        z = np.asarray(z0, dtype=float).reshape(-1)
        t0 = 0.0
    steps = int(round(t_end / h_ref))
    out = np.empty((steps + 1, z.size))
    out[0] = z
    guard = 1e12 * (1.0 + float(np.linalg.norm(z)))
    for k in range(steps):
        k1 = rhs(z)
        k2 = rhs(z + 0.5 * h_ref * k1)
        k3 = rhs(z + 0.5 * h_ref * k2)
        k4 = rhs(z + h_ref * k3)
        z = z + (h_ref / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        norm = float(np.linalg.norm(z))
        if not math.isfinite(norm) or norm > guard:
            raise DivergenceError(k + 1, norm)
        out[k + 1] = z
    return ContinuousTrajectory(t0 + h_ref * np.arange(steps + 1), out)


def lyapunov_continuous(
    cert: ContinuousCertificate, oracle: ObjectiveOracle, state: PhaseState
) -> float:
    """V(xi, t) = e^{lambda t} (f(x) - f* + (xi - xi*)^T P (xi - xi*))."""
    if oracle.minimizer is None:
        raise ValueError("Lyapunov evaluation needs an oracle with a known minimizer")
    xi = state.vector()
    xi_star = np.concatenate([np.zeros(state.d), oracle.minimizer])
    dxi = xi - xi_star
    gap = oracle.value(state.x) - oracle.min_value()
    return math.exp(cert.lam * state.t) * (gap + float(dxi @ cert.P.array() @ dxi))


@dataclass(frozen=True)
class LimitReport:
    """Deviation of the discrete method from the flow for a steplength ladder."""

    h: tuple
    deviation: tuple
    monotone: bool


def limit_consistency(
    x0,
    b_bar: float,
    oracle: ObjectiveOracle,
    t_end: float,
    h_sequence,
    h_ref: float | None = None,
) -> LimitReport:
    """Run the momentum method at alpha = h^2, beta = 1 - h b sqrt(m) for each
    h and measure the worst deviation of x_k from the reference flow at t = kh.

    The start x_{-1} = x_0 matches the flow started at rest from x_0.
    """
    hs = [float(h) for h in h_sequence]
    if not hs or any(h <= 0.0 for h in hs):
        raise ValueError("need a sequence of positive steplengths")
    if any(h2 >= h1 for h1, h2 in zip(hs, hs[1:])):
        raise ValueError("steplengths must be strictly decreasing")
    if h_ref is None:
        h_ref = min(1e-3, min(hs) / 20.0)
    x0 = np.asarray(x0, dtype=float).reshape(oracle.d)
    m = oracle.m
    field = polyak_field(oracle, b_bar)
    horizon = t_end + max(hs)
    ref = reference_integrate(field, PhaseState(np.zeros(oracle.d), x0), horizon, h_ref)
    ref_x = ref.x()

    deviations = []
    for h in hs:
        steps = int(math.ceil(t_end / h))
        # beta = 1 - h b sqrt(m) means the friction parameter equals b itself:
        # delta = sqrt(m * h^2) = h sqrt(m)
        system = nesterov_system(h * h, b_bar, m, oracle.L, oracle.d, strict=False)
        traj = run(system, oracle, initial_state(system, x0), steps)
        worst = 0.0
        for k in range(steps + 1):
            i = ref.index_at(k * h)
            worst = max(worst, float(np.max(np.abs(traj.x[k] - ref_x[i]))))
        deviations.append(worst)
    monotone = all(b < a for a, b in zip(deviations, deviations[1:]))
    return LimitReport(h=tuple(hs), deviation=tuple(deviations), monotone=monotone)
