"""Small dense real matrix algebra for certificate assembly.

Everything here is structurally tiny: Kronecker hat-factors of order 2 or 3
and full assemblies of order n+d. Symmetric eigenvalues are computed by
closed forms (orders 1-3) or cyclic Jacobi iteration (orders 4-8); there is
deliberately no dependence on an external eigensolver so that certification
margins are reproducible bit-for-bit.
"""

from __future__ import annotations

import math

import numpy as np

__all__ = [
    "Matrix",
    "SymMatrix",
    "sym_eigvals",
    "is_nsd",
    "is_pd",
    "congruence",
    "kron_identity",
    "kron_collapse",
    "default_tol",
]

_MAX_EIG_ORDER = 8


def _as_readonly(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=float, order="C")
    if not np.all(np.isfinite(a)):
        raise ValueError("matrix entries must be finite")
    a.flags.writeable = False
    return a


class Matrix:
    """Immutable dense real matrix (row-major), entries validated finite."""

    __slots__ = ("_a",)

    def __init__(self, entries):
        a = _as_readonly(entries)
        if a.ndim != 2:
            raise ValueError("expected a 2-d array of entries")
        self._a = a

    @classmethod
    def identity(cls, n: int) -> "Matrix":
        return cls(np.eye(n))

    @classmethod
    def zeros(cls, rows: int, cols: int) -> "Matrix":
        return cls(np.zeros((rows, cols)))

    @property
    def rows(self) -> int:
        return self._a.shape[0]

    @property
    def cols(self) -> int:
        return self._a.shape[1]

    @property
    def T(self) -> "Matrix":
        return Matrix(self._a.T)

    def array(self) -> np.ndarray:
        """Writable copy of the entries."""
        return self._a.copy()

    def entry(self, i: int, j: int) -> float:
        return float(self._a[i, j])

    def __matmul__(self, other: "Matrix") -> "Matrix":
        if self.cols != other.rows:
            raise ValueError(
                f"dimension mismatch: ({self.rows}x{self.cols}) @ ({other.rows}x{other.cols})"
            )
        return Matrix(self._a @ other._a)

    def __add__(self, other: "Matrix") -> "Matrix":
        return Matrix(self._a + other._a)

    def __sub__(self, other: "Matrix") -> "Matrix":
        return Matrix(self._a - other._a)

    def scaled(self, c: float) -> "Matrix":
        return Matrix(c * self._a)

    def kron_identity(self, d: int) -> "Matrix":
        """Expand each entry m_ij into m_ij * I_d (the block structure M (x) I_d)."""
        return Matrix(np.kron(self._a, np.eye(d)))

    def __repr__(self) -> str:
        return f"Matrix({self._a.tolist()!r})"


class SymMatrix:
    """Immutable symmetric matrix; only the upper triangle is authoritative."""

    __slots__ = ("_a", "order")

    def __init__(self, entries):
        a = np.array(entries, dtype=float, order="C")
        if a.ndim != 2 or a.shape[0] != a.shape[1]:
            raise ValueError("expected a square array of entries")
        if a.shape[0] < 1:
            raise ValueError("order must be >= 1")
        # symmetrize from the upper triangle so asymmetric rounding cannot leak in
        upper = np.triu(a)
        sym = upper + np.triu(a, 1).T
        self._a = _as_readonly(sym)
        self.order = a.shape[0]

    @classmethod
    def diag(cls, values) -> "SymMatrix":
        return cls(np.diag(np.asarray(values, dtype=float)))

    @classmethod
    def from_upper(cls, order: int, upper_entries) -> "SymMatrix":
        """Build from the packed row-major upper triangle."""
        upper = np.asarray(upper_entries, dtype=float)
        if upper.size != order * (order + 1) // 2:
            raise ValueError("wrong number of upper-triangular entries")
        a = np.zeros((order, order))
        a[np.triu_indices(order)] = upper
        return cls(a)

    @property
    def upper(self) -> np.ndarray:
        """Packed row-major upper triangle."""
        return self._a[np.triu_indices(self.order)].copy()

    def array(self) -> np.ndarray:
        return self._a.copy()

    def entry(self, i: int, j: int) -> float:
        return float(self._a[i, j])

    def max_abs(self) -> float:
        return float(np.max(np.abs(self._a)))

    def trace(self) -> float:
        return float(np.trace(self._a))

    def __add__(self, other: "SymMatrix") -> "SymMatrix":
        return SymMatrix(self._a + other._a)

    def __sub__(self, other: "SymMatrix") -> "SymMatrix":
        return SymMatrix(self._a - other._a)

    def scaled(self, c: float) -> "SymMatrix":
        return SymMatrix(c * self._a)

    def kron_identity(self, d: int) -> "SymMatrix":
        return SymMatrix(np.kron(self._a, np.eye(d)))

    def __repr__(self) -> str:
        return f"SymMatrix({self._a.tolist()!r})"


def default_tol(s: SymMatrix) -> float:
    """Definiteness tolerance scaled to the matrix entries."""
    return 1e-10 * (1.0 + s.max_abs())


def _eigvals2(a11: float, a12: float, a22: float) -> list[float]:
    mid = 0.5 * (a11 + a22)
    rad = math.hypot(0.5 * (a11 - a22), a12)
    return [mid - rad, mid + rad]


def _eigvals3(a: np.ndarray) -> list[float]:
    # trigonometric closed form for symmetric 3x3
    p1 = a[0, 1] ** 2 + a[0, 2] ** 2 + a[1, 2] ** 2
    if p1 == 0.0:
        return sorted(float(x) for x in np.diag(a))
    q = float(np.trace(a)) / 3.0
    p2 = sum((float(a[i, i]) - q) ** 2 for i in range(3)) + 2.0 * p1
    p = math.sqrt(p2 / 6.0)
    b = (a - q * np.eye(3)) / p
    r = float(np.linalg.det(b)) / 2.0
    # rounding can push r marginally outside [-1, 1]
    r = min(1.0, max(-1.0, r))
    phi = math.acos(r) / 3.0
    hi = q + 2.0 * p * math.cos(phi)
    lo = q + 2.0 * p * math.cos(phi + 2.0 * math.pi / 3.0)
    mid = 3.0 * q - hi - lo
    return [lo, mid, hi]


def _eigvals_jacobi(a: np.ndarray) -> list[float]:
    a = a.copy()
    n = a.shape[0]
    scale = np.max(np.abs(a))
    if scale == 0.0:
        return [0.0] * n
    for _ in range(60):
        off = math.sqrt(sum(a[p, q] ** 2 for p in range(n) for q in range(p + 1, n)))
        if off <= 1e-16 * scale * n:
            break
        for p in range(n):
            for q in range(p + 1, n):
                apq = a[p, q]
                if abs(apq) <= 1e-18 * scale:
                    continue
                theta = 0.5 * (a[q, q] - a[p, p]) / apq
                t = math.copysign(1.0, theta) / (abs(theta) + math.hypot(1.0, theta))
                c = 1.0 / math.hypot(1.0, t)
                s = t * c
                rp, rq = a[p, :].copy(), a[q, :].copy()
                a[p, :] = c * rp - s * rq
                a[q, :] = s * rp + c * rq
                cp, cq = a[:, p].copy(), a[:, q].copy()
                a[:, p] = c * cp - s * cq
                a[:, q] = s * cp + c * cq
    return sorted(float(x) for x in np.diag(a))


def sym_eigvals(s: SymMatrix) -> list[float]:
    """Eigenvalues of a symmetric matrix of order <= 8, ascending."""
    if s.order > _MAX_EIG_ORDER:
        raise ValueError(f"eigenvalue queries support order <= {_MAX_EIG_ORDER}")
    a = s.array()
    if s.order == 1:
        return [float(a[0, 0])]
    if s.order == 2:
        return _eigvals2(a[0, 0], a[0, 1], a[1, 1])
    if s.order == 3:
        return _eigvals3(a)
    return _eigvals_jacobi(a)


def is_nsd(s: SymMatrix, tol: float | None = None) -> bool:
    """True iff the maximum eigenvalue is <= tol."""
    if tol is None:
        tol = default_tol(s)
    if not math.isfinite(tol) or tol < 0:
        raise ValueError("tol must be finite and >= 0")
    return sym_eigvals(s)[-1] <= tol


def is_pd(s: SymMatrix, tol: float | None = None) -> bool:
    """True iff the minimum eigenvalue is > tol."""
    if tol is None:
        tol = default_tol(s)
    if not math.isfinite(tol) or tol < 0:
        raise ValueError("tol must be finite and >= 0")
    return sym_eigvals(s)[0] > tol


def congruence(f: Matrix, w: SymMatrix) -> SymMatrix:
    """The congruence transform F^T W F (symmetric for any conformable F)."""
    if f.rows != w.order:
        raise ValueError(
            f"dimension mismatch: F is {f.rows}x{f.cols}, W has order {w.order}"
        )
    fa = f.array()
    return SymMatrix(fa.T @ w.array() @ fa)


def kron_identity(m, d: int):
    """M (x) I_d for either matrix flavour."""
    return m.kron_identity(d)


def kron_collapse(s: SymMatrix, d: int, check: bool = False, tol: float = 1e-9) -> SymMatrix:
    """Extract the hat-factor M of a block matrix S = M (x) I_d.

    With check=True, verifies that S actually has the Kronecker structure.
    """
    if s.order % d != 0:
        raise ValueError("order is not a multiple of the block size")
    k = s.order // d
    a = s.array()
    hat = a[::d, ::d][:k, :k]
    if check:
        rebuilt = np.kron(hat, np.eye(d))
        err = np.max(np.abs(rebuilt - a))
        if err > tol * (1.0 + np.max(np.abs(a))):
            raise ValueError(f"matrix lacks Kronecker-with-identity structure (err={err:g})")
    return SymMatrix(hat)


# Vectorized eigenvalue bounds for parameter sweeps. These mirror the closed
# forms above but act entrywise on arrays of matrix entries.

def _sym2_min_eig(a11, a12, a22):
    mid = 0.5 * (a11 + a22)
    rad = np.hypot(0.5 * (a11 - a22), a12)
    return mid - rad


def _sym3_max_eig(t11, t12, t13, t22, t23, t33):
    q = (t11 + t22 + t33) / 3.0
    a11, a22, a33 = t11 - q, t22 - q, t33 - q
    p2 = a11 * a11 + a22 * a22 + a33 * a33 + 2.0 * (t12 * t12 + t13 * t13 + t23 * t23)
    p = np.sqrt(p2 / 6.0)
    safe = np.where(p > 0.0, p, 1.0)
    b11, b22, b33 = a11 / safe, a22 / safe, a33 / safe
    b12, b13, b23 = t12 / safe, t13 / safe, t23 / safe
    det_b = (
        b11 * (b22 * b33 - b23 * b23)
        - b12 * (b12 * b33 - b23 * b13)
        + b13 * (b12 * b23 - b22 * b13)
    )
    r = np.clip(det_b / 2.0, -1.0, 1.0)
    lam = q + 2.0 * p * np.cos(np.arccos(r) / 3.0)
    return np.where(p2 > 0.0, lam, q)
