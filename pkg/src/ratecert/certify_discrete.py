"""Certificate construction and verification for the discrete methods.

A certificate (P, a0, rho^2, ell) proves the decay of

    V_k = rho^{-2k} (a0 (f(x_k) - f*) + (xi_k - xi*)^T P (xi_k - xi*))

whenever the assembled matrix T is negative semidefinite and the effective
quadratic form P_eff = P + (a0 m / 2) E^T E is positive definite. P itself is
allowed to be indefinite, which is what buys the improved rates over the
classical P >= 0 hypothesis.

For the momentum family everything reduces to 2x2 / 3x3 hat-factors with
closed-form entries; the general assembly is kept as an independent
cross-check of those closed forms.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .discrete import DiscreteSystem, generalized_system
from .matrices import (
    Matrix,
    SymMatrix,
    _sym2_min_eig,
    _sym3_max_eig,
    congruence,
    kron_collapse,
    sym_eigvals,
)
from .rootfind import bisect_boundary

__all__ = [
    "DiscreteCertificate",
    "RateCurvePoint",
    "CertificateReport",
    "ObstructionReport",
    "assemble_decrement_lmi",
    "closed_form_p_hat",
    "closed_form_lmi_hat",
    "rate_determinant",
    "solve_rate",
    "trace_curve",
    "baseline_psd_rate",
    "certification_search",
    "obstruction_breakdown",
    "verify_certificate",
    "discrete_certificate",
    "certificate_from_rate",
]

FEAS_TOL = 1e-9  # absolute, on hat-matrix eigenvalues with m normalized to 1
RATE_SCAN_POINTS = 400
RATE_CAP = 2.0   # certified rates stay below sqrt(2); cap the scan with margin


def assemble_decrement_lmi(
    system: DiscreteSystem,
    p: SymMatrix,
    a0: float,
    rho_sq: float,
    ell: float,
    m: float | None = None,
    L: float | None = None,
) -> SymMatrix:
    """Assemble the (n+d)-order decrement matrix T from the general recipe.

    T = M0 + a0 rho^2 (N1 + N2) + a0 (1 - rho^2) (N1 + N3) + ell N4, where M0
    carries the quadratic-form update, N1 the smoothness bound between the
    gradient point and the next iterate, N2/N3 strong convexity anchored at
    the previous iterate / the minimizer, and N4 co-coercivity.
    """
    if m is None:
        system.requires_params("m")
        m = system.m
    if L is None:
        system.requires_params("L")
        L = system.L
    if a0 <= 0.0:
        raise ValueError("a0 must be positive")
    if ell < 0.0:
        raise ValueError("ell must be >= 0")
    n, d = system.n, system.d
    if p.order != n:
        raise ValueError(f"P has order {p.order}, expected the state dimension {n}")
    a, b, c, e = (mm.array() for mm in (system.A, system.B, system.C, system.E))
    pa = p.array()

    m0 = np.block(
        [
            [a.T @ pa @ a - rho_sq * pa, a.T @ pa @ b],
            [b.T @ pa @ a, b.T @ pa @ b],
        ]
    )

    eye = np.eye(d)
    zed = np.zeros((d, n))
    zdd = np.zeros((d, d))

    def sandwich(top_left, top_right, w11, w12, w22) -> np.ndarray:
        f = Matrix(np.block([[top_left, top_right], [zed, eye]]))
        w = SymMatrix(np.block([[w11 * eye, w12 * eye], [w12 * eye, w22 * eye]]))
        return congruence(f, w).array()

    n1 = sandwich(e @ a - c, e @ b, L / 2.0, 0.5, 0.0)
    n2 = sandwich(c - e, zdd, -m / 2.0, 0.5, 0.0)
    n3 = sandwich(c, zdd, -m / 2.0, 0.5, 0.0)
    n4 = sandwich(c, zdd, -m * L / (m + L), 0.5, -1.0 / (m + L))

    t = m0 + a0 * (n1 + rho_sq * n2 + (1.0 - rho_sq) * n3) + ell * n4
    return SymMatrix(t)


def closed_form_p_hat(delta: float, b: float, r: float, m: float):
    """Hat-factor entries (p11, p12, p22) that zero the gradient couplings.

    p22 maximizes the 2x2 determinant of the decrement matrix; p12 and p11
    then make its third row vanish except for the (3,3) entry.
    """
    den = 4.0 * delta * r - 4.0
    if den == 0.0:
        raise ValueError("singular parameters: delta * r = 1")
    p22 = (
        m
        * r
        * (
            b * b * delta**3
            - b * b * delta
            - 2.0 * r * b * delta**3
            + 2.0 * r * b * delta
            + 3.0 * r * delta * delta
            - 2.0 * delta
            - r
        )
        / den
    )
    p12 = m * r / 2.0 - delta * p22
    p11 = p22 * delta * delta - m * r * delta + m / 2.0
    return p11, p12, p22


def _hat_entries(delta, beta, gamma, r, m, L, p11, p12, p22, ell):
    """Entries of the order-3 hat decrement matrix for the two-momentum family.

    Vectorized: any argument may be an array. a0 = 1 (homogeneity).
    """
    alpha = delta * delta / m
    rho_sq = 1.0 - r * delta
    w = m * L / (m + L)
    dg = delta * gamma
    t11 = (
        (beta * beta - rho_sq) * p11
        + 2.0 * delta * beta * beta * p12
        + delta * delta * beta * beta * p22
        + (L / 2.0) * delta * delta * (beta - gamma) ** 2
        - (m / 2.0) * dg * dg
        - ell * w * dg * dg
    )
    t12 = (
        beta * p12
        + delta * beta * p22
        - rho_sq * p12
        - (1.0 - rho_sq) * (m / 2.0) * dg
        - ell * w * dg
    )
    t13 = (
        -alpha * beta * p11 / delta
        - 2.0 * alpha * beta * p12
        - delta * alpha * beta * p22
        + delta * (beta - gamma) * (1.0 - L * alpha) / 2.0
        + dg / 2.0
        + ell * dg / 2.0
    )
    t22 = (1.0 - rho_sq) * (p22 - m / 2.0) - ell * w
    t23 = -alpha * p12 / delta - alpha * p22 + (1.0 - rho_sq) / 2.0 + ell / 2.0
    t33 = (
        alpha * alpha * p11 / (delta * delta)
        + 2.0 * alpha * alpha * p12 / delta
        + alpha * alpha * p22
        + alpha * alpha * L / 2.0
        - alpha
        - ell / (m + L)
    )
    return t11, t12, t13, t22, t23, t33


def closed_form_lmi_hat(
    delta: float, b: float, r: float, m: float, L: float,
    p11: float, p12: float, p22: float,
) -> SymMatrix:
    """Order-3 hat decrement matrix from the explicit entry formulas.

    Momentum beta = 1 - b*delta and decay rho^2 = 1 - r*delta are substituted;
    the gradient is evaluated at the extrapolated point (gamma = beta).
    """
    beta = 1.0 - b * delta
    t11, t12, t13, t22, t23, t33 = _hat_entries(
        delta, beta, beta, r, m, L, p11, p12, p22, 0.0
    )
    return SymMatrix([[t11, t12, t13], [t12, t22, t23], [t13, t23, t33]])


def rate_determinant(r: float, b: float, delta: float, m: float) -> float:
    """Determinant of the leading 2x2 block at the closed-form P.

    Its zero set is the relation between the friction parameter b and the
    certifiable rate r; on the certified curve it vanishes with t11 <= 0.
    """
    p11, p12, p22 = closed_form_p_hat(delta, b, r, m)
    beta = 1.0 - b * delta
    t11, t12, _, t22, _, _ = _hat_entries(delta, beta, beta, r, m, 2.0 * m, p11, p12, p22, 0.0)
    # t11, t12, t22 do not involve L; any valid L gives the same values
    return t11 * t22 - t12 * t12


@dataclass(frozen=True)
class RateCurvePoint:
    b: float
    r: float
    feasible: bool
    margin: float  # max eigenvalue of the hat decrement matrix at the solution


def _closed_feasibility(rs, b, delta, kappa, tol):
    """Vectorized feasibility of the closed-form certificate at m = 1."""
    rs = np.asarray(rs, dtype=float)
    p11, p12, p22 = closed_form_p_hat(delta, b, rs, 1.0)
    beta = 1.0 - b * delta
    t11, t12, t13, t22, t23, t33 = _hat_entries(
        delta, beta, beta, rs, 1.0, kappa, p11, p12, p22, 0.0
    )
    max_t = _sym3_max_eig(t11, t12, t13, t22, t23, t33)
    min_p_eff = _sym2_min_eig(p11, p12, p22 + 0.5)
    return (max_t <= tol) & (min_p_eff > tol), max_t


def solve_rate(
    b: float, delta: float, m: float, L: float, tol: float = FEAS_TOL
) -> RateCurvePoint:
    """Largest certifiable rate r at friction b and steplength delta.

    Scans r over (0, min(1/delta, 2)), then bisects the feasibility boundary
    to 1e-12. Feasibility means the closed-form hat certificate satisfies
    max eig(T_hat) <= tol and P_eff_hat positive definite. All quantities are
    scale invariant, so the computation runs at m = 1 internally.
    """
    kappa = L / m
    if delta > 1.0 / math.sqrt(kappa) * (1.0 + 1e-12):
        raise ValueError("steplength exceeds 1/sqrt(kappa); the (3,3) entry turns positive")
    r_hi = min((1.0 / delta) * (1.0 - 1e-12), RATE_CAP)
    grid = np.linspace(0.0, r_hi, RATE_SCAN_POINTS + 1)[1:]
    feas, max_t = _closed_feasibility(grid, b, delta, kappa, tol)
    idx = np.nonzero(feas)[0]
    if idx.size == 0:
        return RateCurvePoint(b=b, r=0.0, feasible=False, margin=float(max_t[0]))
    i = int(idx[-1])
    if i + 1 >= grid.size:
        return RateCurvePoint(b=b, r=float(grid[i]), feasible=True, margin=float(max_t[i]))

    def ok(r: float) -> bool:
        good, _ = _closed_feasibility(r, b, delta, kappa, tol)
        return bool(good)

    r = bisect_boundary(ok, float(grid[i]), float(grid[i + 1]), xtol=1e-12)
    _, margin = _closed_feasibility(r, b, delta, kappa, tol)
    return RateCurvePoint(b=b, r=r, feasible=True, margin=float(margin))


def trace_curve(delta: float, m: float, L: float, b_grid, tol: float = FEAS_TOL):
    """solve_rate on every grid point, in grid order."""
    points = [solve_rate(float(b), delta, m, L, tol) for b in b_grid]
    if not points:
        raise ValueError("b grid must be nonempty")
    return points


# Inner feasibility search for certificates without closed forms. The grid
# descent runs over (p11, p12, p22, ell) at m = 1; max eig(T_hat) and the
# definiteness side constraints are evaluated with the vectorized closed
# forms, then refined around the incumbent.

_SEARCH_ROUNDS = 5
_SEARCH_POINTS = 15
_SEARCH_SHRINK = 4.0


def _search_hat_certificate(
    delta: float,
    beta: float,
    gamma: float,
    r: float,
    kappa: float,
    require_psd: bool,
    rounds: int = _SEARCH_ROUNDS,
    npts: int = _SEARCH_POINTS,
):
    """Minimize the infeasibility margin over (P_hat, ell) at m = 1.

    Returns (margin, (p11, p12, p22, ell)). margin <= 0 means a certificate
    exists (up to the search resolution): max eig(T_hat) <= 0, P_eff_hat
    positive definite and, with require_psd, P_hat >= 0 as well.
    """
    p_floor = 0.0 if require_psd else -0.75
    lo = np.array([p_floor, -1.0, p_floor, 0.0])
    hi = np.array([2.0, 1.0, 1.0, max(8.0 * delta, 0.05)])
    center = 0.5 * (lo + hi)
    width = hi - lo
    best = math.inf
    best_p = center.copy()
    for _ in range(rounds):
        axes = [
            np.linspace(center[i] - width[i] / 2.0, center[i] + width[i] / 2.0, npts)
            for i in range(4)
        ]
        p11, p12, p22, ell = (g.ravel() for g in np.meshgrid(*axes, indexing="ij"))
        ell = np.maximum(ell, 0.0)
        if require_psd:
            p11 = np.maximum(p11, 0.0)
            p22 = np.maximum(p22, 0.0)
        t = _hat_entries(delta, beta, gamma, r, 1.0, kappa, p11, p12, p22, ell)
        margin = _sym3_max_eig(*t)
        margin = np.maximum(margin, -_sym2_min_eig(p11, p12, p22 + 0.5))
        if require_psd:
            margin = np.maximum(margin, -_sym2_min_eig(p11, p12, p22))
        j = int(np.argmin(margin))
        if margin[j] < best:
            best = float(margin[j])
            best_p = np.array([p11[j], p12[j], p22[j], ell[j]])
        center = best_p
        width = width / _SEARCH_SHRINK
    return best, tuple(float(v) for v in best_p)


def baseline_psd_rate(
    b: float,
    delta: float,
    m: float,
    L: float,
    tol: float = FEAS_TOL,
    r_resolution: float = 1e-4,
) -> RateCurvePoint:
    """Best rate certifiable under the classical hypothesis P >= 0.

    For each candidate rate, a coordinate-refined grid descent searches
    (p11, p12, p22) together with the co-coercivity multiplier for a feasible
    certificate; the rate boundary is then located by bisection.
    """
    kappa = L / m
    if delta > 1.0 / math.sqrt(kappa) * (1.0 + 1e-12):
        raise ValueError("steplength exceeds 1/sqrt(kappa)")
    beta = 1.0 - b * delta

    def margin_at(r: float) -> float:
        value, _ = _search_hat_certificate(delta, beta, beta, r, kappa, require_psd=True)
        return value

    r_hi = min((1.0 / delta) * (1.0 - 1e-12), RATE_CAP)
    if margin_at(r_hi) <= tol:
        return RateCurvePoint(b=b, r=r_hi, feasible=True, margin=margin_at(r_hi))
    r = bisect_boundary(lambda rr: margin_at(rr) <= tol, 0.0, r_hi, xtol=r_resolution)
    final = margin_at(r)
    return RateCurvePoint(b=b, r=r, feasible=final <= tol, margin=final)


def certification_search(system: DiscreteSystem, r: float, require_psd: bool = False):
    """Search for any feasible hat certificate for a two-momentum system.

    Returns (margin, (p11, p12, p22, ell)); margin <= 0 (up to the search
    resolution) means certifiable at rate r. The margin is reported at the
    normalized scale m = 1 (the feasibility verdict is scale invariant; the
    returned P entries are mapped back to the system's own m units).
    """
    system.requires_params("delta", "beta", "gamma", "m", "L")
    kappa = system.L / system.m
    margin, params = _search_hat_certificate(
        system.delta, system.beta, system.gamma, r, kappa, require_psd
    )
    scale = system.m
    return margin, tuple(v * scale for v in params[:3]) + (params[3],)


@dataclass(frozen=True)
class ObstructionReport:
    """Breakdown of the scaled (1,1) entry c = t11 / (m delta).

    kappa_term is the smoothness-driven excess delta (kappa - 1) (beta-gamma)^2 / 2,
    obtained by differencing the assembly at L against the assembly at L = m.
    It vanishes exactly when the gradient point matches the free update
    (gamma = beta), and grows like sqrt(kappa) at the accelerated steplength
    otherwise, which rules out certificates for the heavy-ball method.
    """

    c: float
    kappa_term: float
    base_term: float
    t11: float


def obstruction_breakdown(system: DiscreteSystem, p: SymMatrix, r: float) -> ObstructionReport:
    system.requires_params("delta", "m", "L")
    delta, m = system.delta, system.m
    rho_sq = 1.0 - r * delta
    t = assemble_decrement_lmi(system, p, 1.0, rho_sq, 0.0)
    t_flat = assemble_decrement_lmi(system, p, 1.0, rho_sq, 0.0, L=m)
    t11 = t.entry(0, 0)
    kappa_term = (t11 - t_flat.entry(0, 0)) / (m * delta)
    c = t11 / (m * delta)
    return ObstructionReport(c=c, kappa_term=kappa_term, base_term=c - kappa_term, t11=t11)


@dataclass(frozen=True)
class DiscreteCertificate:
    P: SymMatrix           # order n, possibly indefinite
    a0: float
    rho_sq: float
    ell: float
    lmi: SymMatrix         # assembled decrement matrix, order n + d
    p_eff: SymMatrix       # P + (a0 m / 2) E^T E
    lmi_max_eig: float
    p_eff_min_eig: float
    feasible: bool
    r: float | None = None                 # rate when built as rho^2 = 1 - r*delta
    p_hat: tuple | None = None             # (p11, p12, p22) for Kronecker systems

    @property
    def rho(self) -> float:
        return math.sqrt(self.rho_sq)


@dataclass(frozen=True)
class CertificateReport:
    lmi_max_eig: float
    p_eff_min_eig: float
    feasible: bool


def _extreme_eigs(s: SymMatrix, d: int) -> tuple[float, float]:
    if s.order <= 8:
        eigs = sym_eigvals(s)
    else:
        eigs = sym_eigvals(kron_collapse(s, d))
    return eigs[0], eigs[-1]


def discrete_certificate(
    system: DiscreteSystem,
    p: SymMatrix,
    a0: float = 1.0,
    rho_sq: float = 0.99,
    ell: float = 0.0,
    m: float | None = None,
    L: float | None = None,
    tol: float | None = None,
    r: float | None = None,
    p_hat: tuple | None = None,
) -> DiscreteCertificate:
    """Assemble and judge a certificate; feasibility is recorded, not enforced."""
    if not (0.0 < rho_sq <= 1.0):
        raise ValueError("rho^2 must lie in (0, 1]")
    m_val = m if m is not None else system.m
    if m_val is None:
        raise ValueError("m is required")
    lmi = assemble_decrement_lmi(system, p, a0, rho_sq, ell, m=m_val, L=L)
    e = system.E.array()
    p_eff = SymMatrix(p.array() + (a0 * m_val / 2.0) * (e.T @ e))
    if tol is None:
        tol = FEAS_TOL * max(m_val, 1.0)
    lo_t, hi_t = _extreme_eigs(lmi, system.d)
    lo_p, _ = _extreme_eigs(p_eff, system.d)
    return DiscreteCertificate(
        P=p,
        a0=a0,
        rho_sq=rho_sq,
        ell=ell,
        lmi=lmi,
        p_eff=p_eff,
        lmi_max_eig=hi_t,
        p_eff_min_eig=lo_p,
        feasible=(hi_t <= tol and lo_p > tol),
        r=r,
        p_hat=p_hat,
    )


def certificate_from_rate(system: DiscreteSystem, r: float, tol: float | None = None) -> DiscreteCertificate:
    """Closed-form certificate for a momentum system at rate r."""
    system.requires_params("delta", "b", "m", "L")
    p11, p12, p22 = closed_form_p_hat(system.delta, system.b, r, system.m)
    p_hat = SymMatrix([[p11, p12], [p12, p22]])
    return discrete_certificate(
        system,
        p_hat.kron_identity(system.d),
        a0=1.0,
        rho_sq=1.0 - r * system.delta,
        ell=0.0,
        tol=tol,
        r=r,
        p_hat=(p11, p12, p22),
    )


def verify_certificate(
    system: DiscreteSystem,
    cert: DiscreteCertificate,
    m: float | None = None,
    L: float | None = None,
    tol: float | None = None,
) -> CertificateReport:
    """Re-verify a certificate through the full assembly path."""
    m_val = m if m is not None else system.m
    fresh = discrete_certificate(
        system, cert.P, cert.a0, cert.rho_sq, cert.ell, m=m_val, L=L, tol=tol
    )
    return CertificateReport(
        lmi_max_eig=fresh.lmi_max_eig,
        p_eff_min_eig=fresh.p_eff_min_eig,
        feasible=fresh.feasible,
    )
