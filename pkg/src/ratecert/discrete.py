"""State-space form of the discrete methods and trajectory simulation.

Methods are linear systems in feedback with a gradient:

    xi_{k+1} = A xi_k + B u_k,   u_k = grad f(y_k),   y_k = C xi_k,   x_k = E xi_k.

The momentum family uses the state xi = [d^T, x^T]^T with d_k the scaled
divided difference (x_k - x_{k-1}) / delta and the nondimensional steplength
delta = sqrt(m * alpha). All four system matrices are then Kronecker products
of a small hat-factor with I_d.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import TYPE_CHECKING

import numpy as np

from .matrices import Matrix, kron_collapse, sym_eigvals
from .objectives import ObjectiveOracle

if TYPE_CHECKING:  # pragma: no cover
    from .certify_discrete import DiscreteCertificate

__all__ = [
    "DiscreteSystem",
    "Trajectory",
    "DivergenceError",
    "nesterov_system",
    "generalized_system",
    "gradient_descent_system",
    "initial_state",
    "step",
    "run",
    "lyapunov_discrete",
    "output_gram_max_eig",
]

DIVERGENCE_FACTOR = 1e12


class DivergenceError(RuntimeError):
    def __init__(self, step_index: int, norm: float):
        super().__init__(f"iteration diverged at step {step_index} (state norm {norm:g})")
        self.step_index = step_index


@dataclass(frozen=True)
class DiscreteSystem:
    """Matrices (A, B, C, E) plus the scalar hat-factors and method parameters."""

    A: Matrix
    B: Matrix
    C: Matrix
    E: Matrix
    d: int
    a_hat: Matrix | None = None
    b_hat: Matrix | None = None
    c_hat: Matrix | None = None
    e_hat: Matrix | None = None
    alpha: float | None = None
    beta: float | None = None
    gamma: float | None = None
    delta: float | None = None
    b: float | None = None
    m: float | None = None
    L: float | None = None

    @property
    def n(self) -> int:
        return self.A.rows

    def fixed_state(self, x_star: np.ndarray) -> np.ndarray:
        """The state xi* with E xi* = x* and u* = 0 (momentum part at rest)."""
        x_star = np.asarray(x_star, dtype=float).reshape(self.d)
        if self.n == self.d:
            return x_star.copy()
        return np.concatenate([np.zeros(self.n - self.d), x_star])

    def requires_params(self, *names: str):
        missing = [name for name in names if getattr(self, name) is None]
        if missing:
            raise ValueError(f"system lacks parameters: {', '.join(missing)}")


def _momentum_system(
    alpha: float, beta: float, gamma: float, m: float, L: float, d: int, b: float
) -> DiscreteSystem:
    delta = math.sqrt(m * alpha)
    a_hat = Matrix([[beta, 0.0], [delta * beta, 1.0]])
    b_hat = Matrix([[-alpha / delta], [-alpha]])
    c_hat = Matrix([[delta * gamma, 1.0]])
    e_hat = Matrix([[0.0, 1.0]])
    return DiscreteSystem(
        A=a_hat.kron_identity(d),
        B=b_hat.kron_identity(d),
        C=c_hat.kron_identity(d),
        E=e_hat.kron_identity(d),
        d=d,
        a_hat=a_hat,
        b_hat=b_hat,
        c_hat=c_hat,
        e_hat=e_hat,
        alpha=alpha,
        beta=beta,
        gamma=gamma,
        delta=delta,
        b=b,
        m=m,
        L=L,
    )


def nesterov_system(
    alpha: float, b: float, m: float, L: float, d: int = 1, strict: bool = True
) -> DiscreteSystem:
    """Momentum method with gradient evaluated at the extrapolated point.

    The momentum coefficient is beta = 1 - b*delta with delta = sqrt(m*alpha);
    the output momentum equals beta (gamma = beta), which makes EA - C = 0.
    With strict=True, beta < 0 (delta >= 1/b) is rejected.
    """
    if alpha <= 0.0:
        raise ValueError("alpha must be positive")
    if not (0.0 < m <= L):
        raise ValueError("need 0 < m <= L")
    delta = math.sqrt(m * alpha)
    beta = 1.0 - b * delta
    if strict and b > 0.0 and beta < 0.0:
        raise ValueError(f"delta={delta:g} >= 1/b={1.0 / b:g} gives negative momentum")
    return _momentum_system(alpha, beta, beta, m, L, d, b)


def generalized_system(
    alpha: float, beta: float, gamma: float, m: float, L: float, d: int = 1
) -> DiscreteSystem:
    """Two-momentum family: gamma controls where the gradient is evaluated.

    gamma = beta recovers nesterov_system; gamma = 0 is the heavy-ball method
    (gradient at x_k itself).
    """
    if alpha <= 0.0:
        raise ValueError("alpha must be positive")
    if not (0.0 < m <= L):
        raise ValueError("need 0 < m <= L")
    delta = math.sqrt(m * alpha)
    b = (1.0 - beta) / delta
    return _momentum_system(alpha, beta, gamma, m, L, d, b)


def gradient_descent_system(step_size: float, d: int = 1) -> DiscreteSystem:
    """Plain gradient descent x_{k+1} = x_k - step_size * grad f(x_k)."""
    if step_size <= 0.0:
        raise ValueError("step size must be positive")
    a_hat = Matrix([[1.0]])
    b_hat = Matrix([[-step_size]])
    c_hat = Matrix([[1.0]])
    return DiscreteSystem(
        A=a_hat.kron_identity(d),
        B=b_hat.kron_identity(d),
        C=c_hat.kron_identity(d),
        E=c_hat.kron_identity(d),
        d=d,
        a_hat=a_hat,
        b_hat=b_hat,
        c_hat=c_hat,
        e_hat=c_hat,
        alpha=step_size,
    )


def initial_state(system: DiscreteSystem, x0) -> np.ndarray:
    """State for the y_0 = x_0 start: divided differences zero (x_{-1} = x_0)."""
    x0 = np.asarray(x0, dtype=float).reshape(system.d)
    if system.n == system.d:
        return x0.copy()
    return np.concatenate([np.zeros(system.n - system.d), x0])


def step(system: DiscreteSystem, oracle: ObjectiveOracle, xi: np.ndarray) -> np.ndarray:
    """One update xi -> A xi + B grad f(C xi)."""
    if oracle.d != system.d:
        raise ValueError(f"oracle dimension {oracle.d} != system dimension {system.d}")
    xi = np.asarray(xi, dtype=float).reshape(system.n)
    u = oracle.gradient(system.C.array() @ xi)
    return system.A.array() @ xi + system.B.array() @ u


@dataclass(frozen=True)
class Trajectory:
    """Per-step records of a simulated run (index 0 is the initial state)."""

    states: np.ndarray       # (k+1, n)
    x: np.ndarray            # (k+1, d) iterates E xi
    y: np.ndarray            # (k+1, d) gradient evaluation points C xi
    u: np.ndarray            # (k+1, d) gradients at y
    f_gap: np.ndarray        # (k+1,) objective gaps f(x_k) - f(x*)
    dist_sq: np.ndarray      # (k+1,) squared distances ||x_k - x*||^2
    lyapunov: np.ndarray | None = None   # (k+1,) V_k when a certificate is attached
    bound: np.ndarray | None = None      # (k+1,) certified bound on dist_sq

    @property
    def steps(self) -> int:
        return self.states.shape[0] - 1


def output_gram_max_eig(system: DiscreteSystem) -> float:
    """max eigenvalue of E^T E, via the hat-factor when available."""
    e = system.e_hat if system.e_hat is not None else system.E
    ea = e.array()
    from .matrices import SymMatrix

    return sym_eigvals(SymMatrix(ea.T @ ea))[-1]


def lyapunov_discrete(
    cert: "DiscreteCertificate",
    system: DiscreteSystem,
    oracle: ObjectiveOracle,
    k: int,
    xi: np.ndarray,
) -> float:
    """V_k(xi) = rho^{-2k} (a0 (f(x) - f*) + (xi - xi*)^T P (xi - xi*))."""
    if oracle.minimizer is None:
        raise ValueError("Lyapunov evaluation needs an oracle with a known minimizer")
    xi = np.asarray(xi, dtype=float).reshape(system.n)
    xi_star = system.fixed_state(oracle.minimizer)
    dxi = xi - xi_star
    gap = oracle.value(system.E.array() @ xi) - oracle.min_value()
    quad = float(dxi @ cert.P.array() @ dxi)
    return cert.rho_sq ** (-k) * (cert.a0 * gap + quad)


def run(
    system: DiscreteSystem,
    oracle: ObjectiveOracle,
    xi0,
    steps: int,
    cert: "DiscreteCertificate | None" = None,
) -> Trajectory:
    """Simulate the method, recording gaps, distances and certificate data.

    With a certificate attached, V_k and the guaranteed decay envelope
    (max eig(E^T E) / min eig(P_eff)) * V_0 * rho^{2k} are recorded too.
    """
    if steps < 0:
        raise ValueError("steps must be >= 0")
    if oracle.minimizer is None:
        raise ValueError("run needs an oracle with a known minimizer")
    xi = np.asarray(xi0, dtype=float).reshape(system.n)
    x_star = oracle.minimizer
    f_star = oracle.min_value()

    a_mat, b_mat, c_mat, e_mat = (mm.array() for mm in (system.A, system.B, system.C, system.E))
    n_rec = steps + 1
    states = np.empty((n_rec, system.n))
    xs = np.empty((n_rec, system.d))
    ys = np.empty((n_rec, system.d))
    us = np.empty((n_rec, system.d))
    f_gap = np.empty(n_rec)
    dist_sq = np.empty(n_rec)
    lyap = np.empty(n_rec) if cert is not None else None

    guard = DIVERGENCE_FACTOR * (1.0 + float(np.linalg.norm(xi)))
    for k in range(n_rec):
        norm = float(np.linalg.norm(xi))
        if not math.isfinite(norm) or norm > guard:
            raise DivergenceError(k, norm)
        states[k] = xi
        xs[k] = e_mat @ xi
        ys[k] = c_mat @ xi
        us[k] = oracle.gradient(ys[k])
        f_gap[k] = oracle.value(xs[k]) - f_star
        dist_sq[k] = float(np.sum((xs[k] - x_star) ** 2))
        if lyap is not None:
            lyap[k] = lyapunov_discrete(cert, system, oracle, k, xi)
        if k < steps:
            xi = a_mat @ xi + b_mat @ us[k]

    bound = None
    if cert is not None:
        coef = output_gram_max_eig(system) / cert.p_eff_min_eig
        bound = coef * lyap[0] * cert.rho_sq ** np.arange(n_rec)
    return Trajectory(states, xs, ys, us, f_gap, dist_sq, lyap, bound)
