"""Objective oracles for strongly convex, smooth functions.

An oracle carries value/gradient access together with the moduli (m, L) it
claims, and (when available) the minimizer. Claimed class membership can be
spot-checked empirically with validate_class.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .matrices import SymMatrix, sym_eigvals
from .rootfind import bisect_root

__all__ = [
    "ObjectiveOracle",
    "ValidationReport",
    "quadratic_oracle",
    "softplus_quadratic_oracle",
    "validate_class",
    "scaled_oracle",
]


@dataclass(frozen=True)
class ObjectiveOracle:
    """Value/gradient access to an m-strongly convex, L-smooth function."""

    d: int
    value: Callable[[np.ndarray], float]
    gradient: Callable[[np.ndarray], np.ndarray]
    m: float
    L: float
    minimizer: np.ndarray | None = None
    name: str = field(default="oracle", compare=False)

    def __post_init__(self):
        if not (0.0 < self.m <= self.L * (1.0 + 1e-12)):
            raise ValueError("need 0 < m <= L")
        if self.minimizer is not None:
            x = np.asarray(self.minimizer, dtype=float).reshape(self.d)
            object.__setattr__(self, "minimizer", x)
            g = np.linalg.norm(self.gradient(x))
            if g > 1e-8 * (1.0 + self.L * np.linalg.norm(x)):
                raise ValueError(f"claimed minimizer has gradient norm {g:g}")

    @property
    def kappa(self) -> float:
        return self.L / self.m

    def min_value(self) -> float:
        if self.minimizer is None:
            raise ValueError(f"oracle '{self.name}' has no known minimizer")
        return self.value(self.minimizer)


def quadratic_oracle(h: SymMatrix, x_star) -> ObjectiveOracle:
    """f(x) = (1/2)(x - x*)^T H (x - x*) for a positive definite H.

    m and L are taken from the extreme eigenvalues of H.
    """
    eigs = sym_eigvals(h)
    m, big_l = eigs[0], eigs[-1]
    if m <= 0.0:
        raise ValueError("curvature matrix must be positive definite")
    d = h.order
    ha = h.array()
    x_star = np.asarray(x_star, dtype=float).reshape(d)

    def value(x) -> float:
        dx = np.asarray(x, dtype=float).reshape(d) - x_star
        return float(0.5 * dx @ ha @ dx)

    def gradient(x) -> np.ndarray:
        dx = np.asarray(x, dtype=float).reshape(d) - x_star
        return ha @ dx

    return ObjectiveOracle(d, value, gradient, m, big_l, x_star, name="quadratic")


def _softplus(t: float) -> float:
    # log(1 + e^t), stable for large |t|
    if t > 0.0:
        return t + math.log1p(math.exp(-t))
    return math.log1p(math.exp(t))


def _sigmoid(t: float) -> float:
    if t >= 0.0:
        return 1.0 / (1.0 + math.exp(-t))
    e = math.exp(t)
    return e / (1.0 + e)


def softplus_quadratic_oracle(m: float, L: float) -> ObjectiveOracle:
    """The 1-d test objective f(x) = (m/2) x^2 + 4 (L - m) log(1 + e^-x).

    Its second derivative is m + 4(L-m) s(x)(1-s(x)) with s the logistic
    sigmoid, so it lies in (m, L] and the oracle reports exactly (m, L).
    The minimizer is located at construction by bisection on f'.
    """
    if not (0.0 < m <= L):
        raise ValueError("need 0 < m <= L")
    c = 4.0 * (L - m)

    def scalar_value(x: float) -> float:
        return 0.5 * m * x * x + c * _softplus(-x)

    def scalar_grad(x: float) -> float:
        return m * x - c * _sigmoid(-x)

    if c == 0.0:
        x_star = 0.0
    else:
        # f'(0) = -2(L-m) < 0; double outward for the upper bracket
        hi = 1.0
        while scalar_grad(hi) < 0.0:
            hi *= 2.0
        x_star = bisect_root(scalar_grad, 0.0, hi, xtol=1e-15, ftol=1e-14)

    def value(x) -> float:
        return scalar_value(float(np.asarray(x, dtype=float).reshape(1)[0]))

    def gradient(x) -> np.ndarray:
        return np.array([scalar_grad(float(np.asarray(x, dtype=float).reshape(1)[0]))])

    return ObjectiveOracle(
        1, value, gradient, m, L, np.array([x_star]), name="softplus-quadratic"
    )


def scaled_oracle(oracle: ObjectiveOracle, c: float) -> ObjectiveOracle:
    """The oracle for c*f, c > 0: m, L, values and gradients scale by c."""
    if c <= 0.0:
        raise ValueError("scale must be positive")
    return ObjectiveOracle(
        oracle.d,
        lambda x: c * oracle.value(x),
        lambda x: c * oracle.gradient(x),
        c * oracle.m,
        c * oracle.L,
        oracle.minimizer,
        name=f"{oracle.name}*{c:g}",
    )


@dataclass(frozen=True)
class ValidationReport:
    violations: int
    worst_margin: float


def validate_class(
    oracle: ObjectiveOracle,
    pairs: int,
    seed: int,
    box: float = 10.0,
    rel_tol: float = 1e-9,
) -> ValidationReport:
    """Empirically check the claimed (m, L) on random point pairs.

    For each sampled (x, y) three inequalities are tested: the strong-convexity
    lower bound m||x-y||^2 <= (x-y)^T (grad(x)-grad(y)), the co-coercivity bound
    mL/(m+L)||x-y||^2 + 1/(m+L)||grad(x)-grad(y)||^2 <= (x-y)^T (grad(x)-grad(y)),
    and the smoothness upper bound
    f(x)-f(y) <= grad(y)^T (x-y) + (L/2)||x-y||^2.
    A pair violates when its normalized slack drops below -rel_tol.
    """
    if pairs < 1:
        raise ValueError("need at least one pair")
    rng = np.random.default_rng(seed)
    m, big_l, d = oracle.m, oracle.L, oracle.d
    worst = math.inf
    violations = 0
    for _ in range(pairs):
        x = rng.uniform(-box, box, size=d)
        y = rng.uniform(-box, box, size=d)
        dx = x - y
        dg = oracle.gradient(x) - oracle.gradient(y)
        nx2 = float(dx @ dx)
        inner = float(dx @ dg)
        slacks = (
            inner - m * nx2,
            inner - (m * big_l / (m + big_l)) * nx2 - float(dg @ dg) / (m + big_l),
            float(oracle.gradient(y) @ dx) + 0.5 * big_l * nx2 - (oracle.value(x) - oracle.value(y)),
        )
        scale = max(1.0, abs(inner), big_l * nx2, abs(oracle.value(x) - oracle.value(y)))
        for s in slacks:
            rel = s / scale
            if rel < worst:
                worst = rel
            if rel < -rel_tol:
                violations += 1
    return ValidationReport(violations=violations, worst_margin=worst)
