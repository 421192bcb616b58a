"""Certificates for the damped-oscillator flow driven by the gradient.

The flow is xi' = A xi + B grad f(C xi) with state xi = [v^T, x^T]^T and
scaled velocity v = x'/sqrt(m). A certificate (P, lambda, sigma) proves decay
of V(xi, t) = e^{lambda t} (f(x) - f* + (xi - xi*)^T P (xi - xi*)) whenever
the assembled matrix is negative semidefinite and P + (m/2) C^T C is
positive definite.

With the decay rate written as lambda = sqrt(m) r, the best certifiable r at
friction b is 2b/3 up to the knee b = 3 sqrt(2)/2 and b - sqrt(b^2 - 4)
beyond it; r = sqrt(2) itself is a supremum that is never attained.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .matrices import Matrix, SymMatrix, congruence, kron_collapse, sym_eigvals
from .rootfind import bisect_boundary

__all__ = [
    "ContinuousSystem",
    "ContinuousCertificate",
    "ContinuousRate",
    "CertificateInfeasibleError",
    "polyak_system",
    "assemble_decay_lmi",
    "closed_form_decay_hat",
    "rate_discriminant",
    "continuous_rate",
    "build_certificate",
    "psd_baseline_certificate",
    "continuous_rate_psd",
    "quadratic_sharp_rate",
    "convergence_bound_continuous",
]

SQRT2 = math.sqrt(2.0)
BRANCH_KNEE = 3.0 * SQRT2 / 2.0
FEAS_TOL = 1e-9


class CertificateInfeasibleError(RuntimeError):
    def __init__(self, max_eig: float):
        super().__init__(f"certificate infeasible: max eigenvalue {max_eig:g} > 0")
        self.max_eig = max_eig


@dataclass(frozen=True)
class ContinuousSystem:
    A: Matrix
    B: Matrix
    C: Matrix
    d: int
    a_hat: Matrix
    b_hat: Matrix
    c_hat: Matrix
    b_bar: float
    m: float
    L: float

    @property
    def n(self) -> int:
        return self.A.rows

    def fixed_state(self, x_star: np.ndarray) -> np.ndarray:
        x_star = np.asarray(x_star, dtype=float).reshape(self.d)
        return np.concatenate([np.zeros(self.n - self.d), x_star])


def polyak_system(b_bar: float, m: float, L: float, d: int = 1) -> ContinuousSystem:
    """First-order form of x'' + b sqrt(m) x' + grad f(x) = 0.

    State [v, x] with v = x'/sqrt(m), so both components carry the same units.
    """
    if b_bar <= 0.0:
        raise ValueError("friction must be positive")
    if not (0.0 < m <= L):
        raise ValueError("need 0 < m <= L")
    rm = math.sqrt(m)
    a_hat = Matrix([[-b_bar * rm, 0.0], [rm, 0.0]])
    b_hat = Matrix([[-1.0 / rm], [0.0]])
    c_hat = Matrix([[0.0, 1.0]])
    return ContinuousSystem(
        A=a_hat.kron_identity(d),
        B=b_hat.kron_identity(d),
        C=c_hat.kron_identity(d),
        d=d,
        a_hat=a_hat,
        b_hat=b_hat,
        c_hat=c_hat,
        b_bar=b_bar,
        m=m,
        L=L,
    )


def assemble_decay_lmi(
    system: ContinuousSystem,
    p: SymMatrix,
    lam: float,
    sigma: float,
    m: float | None = None,
    L: float | None = None,
) -> SymMatrix:
    """Assemble the continuous decay matrix from the general recipe."""
    if lam <= 0.0:
        raise ValueError("decay rate must be positive")
    if sigma < 0.0:
        raise ValueError("sigma must be >= 0")
    m = m if m is not None else system.m
    L = L if L is not None else system.L
    n, d = system.n, system.d
    if p.order != n:
        raise ValueError(f"P has order {p.order}, expected {n}")
    a, b, c = system.A.array(), system.B.array(), system.C.array()
    pa = p.array()

    m0 = np.block(
        [
            [pa @ a + a.T @ pa + lam * pa, pa @ b],
            [b.T @ pa, np.zeros((d, d))],
        ]
    )
    ca = c @ a
    cb = c @ b
    m1 = 0.5 * np.block(
        [
            [np.zeros((n, n)), ca.T],
            [ca, cb + cb.T],
        ]
    )
    eye = np.eye(d)
    f3 = Matrix(np.block([[c, np.zeros((d, d))], [np.zeros((d, n)), eye]]))
    w2 = SymMatrix(np.block([[-m / 2.0 * eye, eye / 2.0], [eye / 2.0, 0.0 * eye]]))
    w4 = SymMatrix(
        np.block(
            [
                [-m * L / (m + L) * eye, eye / 2.0],
                [eye / 2.0, -1.0 / (m + L) * eye],
            ]
        )
    )
    m2 = congruence(f3, w2).array()
    m3 = congruence(f3, w4).array()
    return SymMatrix(m0 + m1 + lam * m2 + sigma * m3)


def closed_form_decay_hat(
    b_bar: float, r_bar: float, m: float, p11: float, p12: float, p22: float
) -> SymMatrix:
    """Order-3 hat decay matrix from the explicit entries (sigma = 0)."""
    rm = math.sqrt(m)
    lam = rm * r_bar
    t11 = -2.0 * b_bar * rm * p11 + 2.0 * rm * p12 + lam * p11
    t12 = -b_bar * rm * p12 + rm * p22 + lam * p12
    t13 = -p11 / rm + rm / 2.0
    t22 = lam * p22 - (m / 2.0) * lam
    t23 = -p12 / rm + lam / 2.0
    t33 = 0.0
    return SymMatrix([[t11, t12, t13], [t12, t22, t23], [t13, t23, t33]])


def rate_discriminant(b_bar: float, r_bar: float, p22: float, m: float) -> float:
    """Determinant of the leading 2x2 decay block at p11 = m/2, p12 = m r/2.

    Nonnegativity of this quantity (with nonpositive diagonal) is what limits
    the certifiable rate; it is concave quadratic in p22 with its maximizer at
    p22 = m r^2 / 4.
    """
    rm = math.sqrt(m)
    return (
        -rm * r_bar * (1.5 * m * rm * r_bar - b_bar * m * rm) * (m / 2.0 - p22)
        - m * (p22 + r_bar * r_bar * m / 2.0 - b_bar * r_bar * m / 2.0) ** 2
    )


@dataclass(frozen=True)
class ContinuousRate:
    r_bar: float
    attained: bool


def continuous_rate(b_bar: float) -> ContinuousRate:
    """Best certifiable scaled rate r at friction b.

    r = 2b/3 up to the knee 3 sqrt(2)/2, then b - sqrt(b^2 - 4). The value
    sqrt(2) (reached only at the knee) is a supremum: the required positive
    definiteness degenerates there, so attained is False at that single point.
    """
    if b_bar <= 0.0:
        raise ValueError("friction must be positive")
    if b_bar <= BRANCH_KNEE:
        r = 2.0 * b_bar / 3.0
    else:
        r = b_bar - math.sqrt(b_bar * b_bar - 4.0)
    return ContinuousRate(r_bar=r, attained=r < SQRT2 - 1e-12)


@dataclass(frozen=True)
class ContinuousCertificate:
    P: SymMatrix
    lam: float            # certified decay exponent, lambda = sqrt(m) * r
    sigma: float
    lmi: SymMatrix
    p_eff: SymMatrix      # P + (m/2) C^T C
    lmi_max_eig: float
    p_eff_min_eig: float
    feasible: bool
    r_bar: float          # reported scaled rate (the supremum when not attained)
    attained: bool = True


@dataclass(frozen=True)
class _CertParts:
    p: SymMatrix
    lmi: SymMatrix
    p_eff: SymMatrix
    lmi_max: float
    p_eff_min: float


def _assemble_parts(system: ContinuousSystem, p: SymMatrix, lam: float, sigma: float) -> _CertParts:
    lmi = assemble_decay_lmi(system, p, lam, sigma)
    c = system.C.array()
    p_eff = SymMatrix(p.array() + (system.m / 2.0) * (c.T @ c))
    d = system.d
    lmi_eigs = sym_eigvals(lmi if lmi.order <= 8 else kron_collapse(lmi, d))
    p_eigs = sym_eigvals(p_eff if p_eff.order <= 8 else kron_collapse(p_eff, d))
    return _CertParts(p, lmi, p_eff, lmi_eigs[-1], p_eigs[0])


def _closed_form_p(r_bar: float, m: float, d: int) -> SymMatrix:
    p_hat = SymMatrix(
        [
            [m / 2.0, m * r_bar / 2.0],
            [m * r_bar / 2.0, m * r_bar * r_bar / 4.0],
        ]
    )
    return p_hat.kron_identity(d)


def build_certificate(
    b_bar: float, r_bar: float, m: float, L: float, d: int = 1, tol: float | None = None
) -> ContinuousCertificate:
    """Closed-form certificate at scaled rate r (lambda = sqrt(m) r).

    P is the m-scaled matrix [[1/2, r/2], [r/2, r^2/4]] per output block.
    Requesting exactly a non-attained supremum certifies r - 1e-9 internally
    and reports the supremum. A rate beyond the curve raises
    CertificateInfeasibleError carrying the offending max eigenvalue.
    """
    if r_bar <= 0.0:
        raise ValueError("rate must be positive")
    best = continuous_rate(b_bar)
    attained = True
    r_cert = r_bar
    if not best.attained and abs(r_bar - best.r_bar) <= 1e-12:
        r_cert = r_bar - 1e-9
        attained = False
    system = polyak_system(b_bar, m, L, d)
    parts = _assemble_parts(system, _closed_form_p(r_cert, m, d), math.sqrt(m) * r_cert, 0.0)
    if tol is None:
        tol = FEAS_TOL * max(m, 1.0)
    feasible = parts.lmi_max <= tol and parts.p_eff_min > tol
    if not feasible:
        raise CertificateInfeasibleError(parts.lmi_max)
    return ContinuousCertificate(
        P=parts.p,
        lam=math.sqrt(m) * r_cert,
        sigma=0.0,
        lmi=parts.lmi,
        p_eff=parts.p_eff,
        lmi_max_eig=parts.lmi_max,
        p_eff_min_eig=parts.p_eff_min,
        feasible=True,
        r_bar=r_bar,
        attained=attained,
    )


def psd_baseline_certificate(
    b_bar: float, r_bar: float, m: float, L: float, d: int = 1, tol: float | None = None
) -> ContinuousCertificate:
    """Certificate candidate under the classical constraint P >= 0.

    p22 sits on the positive-semidefiniteness boundary m r^2 / 2 (the best
    admissible choice: the unconstrained optimum m r^2 / 4 is not allowed).
    Infeasibility is recorded in the flag rather than raised, so the matrix
    can still be used to track a (possibly growing) Lyapunov candidate.
    """
    if r_bar <= 0.0:
        raise ValueError("rate must be positive")
    p_hat = SymMatrix(
        [
            [m / 2.0, m * r_bar / 2.0],
            [m * r_bar / 2.0, m * r_bar * r_bar / 2.0],
        ]
    )
    system = polyak_system(b_bar, m, L, d)
    parts = _assemble_parts(system, p_hat.kron_identity(d), math.sqrt(m) * r_bar, 0.0)
    if tol is None:
        tol = FEAS_TOL * max(m, 1.0)
    return ContinuousCertificate(
        P=parts.p,
        lam=math.sqrt(m) * r_bar,
        sigma=0.0,
        lmi=parts.lmi,
        p_eff=parts.p_eff,
        lmi_max_eig=parts.lmi_max,
        p_eff_min_eig=parts.p_eff_min,
        feasible=parts.lmi_max <= tol and parts.p_eff_min > tol,
        r_bar=r_bar,
        attained=True,
    )


def continuous_rate_psd(b_bar: float) -> float:
    """Best rate certifiable with P >= 0 (scale invariant; computed at m = 1).

    The search space collapses to the choice of p22 in [m r^2/2, m/2]; the
    discriminant is decreasing there, so the boundary value is optimal and a
    scan plus bisection on r locates the feasibility boundary. Maximized at
    b = 2 where it equals exactly 1.
    """
    if b_bar <= 0.0:
        raise ValueError("friction must be positive")
    r_cap = min(2.0 * b_bar / 3.0, 1.0)

    def ok(r: float) -> bool:
        return rate_discriminant(b_bar, r, r * r / 2.0, 1.0) >= -1e-15

    grid = np.linspace(0.0, r_cap, 201)[1:]
    feas = [ok(float(r)) for r in grid]
    if not any(feas):
        return 0.0
    i = max(k for k, good in enumerate(feas) if good)
    if i + 1 >= grid.size:
        return float(grid[i])
    return bisect_boundary(ok, float(grid[i]), float(grid[i + 1]), xtol=1e-12)


def quadratic_sharp_rate(b_bar: float, m: float, L: float) -> float:
    """Exact decay exponent of ||x - x*||^2 for quadratics with spectrum in [m, L].

    Each curvature mu contributes the characteristic roots of
    s^2 + b sqrt(m) s + mu; the squared distance decays at twice the slowest
    modal decay, and the minimum over mu is attained at an endpoint (the real
    branch is increasing in mu, the complex branch is constant).
    """
    if b_bar <= 0.0:
        raise ValueError("friction must be positive")

    def modal(mu: float) -> float:
        disc = b_bar * b_bar * m - 4.0 * mu
        if disc <= 0.0:
            return b_bar * math.sqrt(m)
        return b_bar * math.sqrt(m) - math.sqrt(disc)

    return min(modal(m), modal(L))


def convergence_bound_continuous(cert: ContinuousCertificate, system, oracle, z0, t: float) -> float:
    """Certified envelope (max eig(C^T C) / min eig(P_eff)) e^{-lambda t} V(xi0, 0)."""
    if oracle.minimizer is None:
        raise ValueError("bound needs an oracle with a known minimizer")
    if cert.p_eff_min_eig <= 0.0:
        raise ValueError("certificate lacks a positive definite P_eff")
    xi0 = _as_state_vector(z0, system.n, system.d)
    xi_star = system.fixed_state(oracle.minimizer)
    x0 = system.C.array() @ xi0
    v0 = oracle.value(x0) - oracle.min_value() + float(
        (xi0 - xi_star) @ cert.P.array() @ (xi0 - xi_star)
    )
    c_hat = system.c_hat.array()
    c_gram_max = sym_eigvals(SymMatrix(c_hat.T @ c_hat))[-1]
    return (c_gram_max / cert.p_eff_min_eig) * math.exp(-cert.lam * t) * v0


def _as_state_vector(z0, n: int, d: int) -> np.ndarray:
    if hasattr(z0, "v") and hasattr(z0, "x"):
        return np.concatenate(
            [np.asarray(z0.v, dtype=float).reshape(d), np.asarray(z0.x, dtype=float).reshape(d)]
        )
    return np.asarray(z0, dtype=float).reshape(n)
