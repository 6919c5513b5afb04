"""Dense symmetric-matrix kernels for small problems.

Everything in this package runs on symmetric matrices of modest size (the
K x K Gram matrices of the Krylov components and the p x p covariate Gram
matrix, with K and p at most a few hundred).  The kernels here favour
robustness and transparent failure modes over raw speed: eigendecomposition
is a cyclic Jacobi iteration with an explicit sweep cap, and the SPD solver
refuses to return garbage when the system is numerically singular instead
of silently regularizing.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from numpy.typing import NDArray

#: Sweep cap for the Jacobi eigendecomposition.
MAX_SWEEPS = 100

#: Off-diagonal tolerance for Jacobi, relative to the Frobenius norm.
JACOBI_TOL = 1e-14

#: Eigenvalues of a PSD-labelled matrix in (-TOL_EIG_REL * rho_max, 0) are
#: clamped to zero; anything more negative means the matrix is indefinite.
TOL_EIG_REL = 1e-10

#: Reciprocal-condition floor below which solve_spd refuses to solve.
RCOND_MIN = 1e-12

#: Column-drop threshold for rank-revealing Gram-Schmidt, relative to the
#: first retained column norm.
ORTH_DROP_TOL = 1e-10


class NumericalFailureError(RuntimeError):
    """Eigendecomposition failed to converge within the sweep cap."""

    def __init__(self, message: str, residual: float):
        super().__init__(message)
        self.residual = residual


class NotPositiveDefiniteError(ValueError):
    """The matrix has a genuinely negative eigenvalue."""


class SingularSystemError(ValueError):
    """The system's reciprocal condition is below the configured floor."""

    def __init__(self, message: str, rcond: float):
        super().__init__(message)
        self.rcond = rcond


@dataclass(frozen=True)
class SymMatrix:
    """A dense symmetric matrix; symmetry is enforced at construction."""

    a: NDArray[np.float64]

    def __post_init__(self):
        a = np.asarray(self.a, dtype=float)
        if a.ndim != 2 or a.shape[0] != a.shape[1]:
            raise ValueError(f"expected a square matrix, got shape {a.shape}")
        if a.shape[0] < 1:
            raise ValueError("dimension must be >= 1")
        if not np.all(np.isfinite(a)):
            raise ValueError("matrix has non-finite entries")
        object.__setattr__(self, "a", (a + a.T) / 2.0)

    @property
    def dim(self) -> int:
        return self.a.shape[0]

    def diag(self) -> NDArray[np.float64]:
        return np.diag(self.a).copy()

    def __matmul__(self, other):
        return self.a @ other


@dataclass(frozen=True)
class SpectralSummary:
    """Eigenvalues sorted descending plus the derived conditioning numbers."""

    eigenvalues: NDArray[np.float64]
    rho_max: float
    rho_min: float
    cond: float


def as_sym(m) -> SymMatrix:
    """Coerce an ndarray (or SymMatrix) to SymMatrix."""
    return m if isinstance(m, SymMatrix) else SymMatrix(np.asarray(m, dtype=float))


def _round_robin_pairs(m: int) -> list[tuple[NDArray, NDArray]]:
    # Round-robin tournament schedule: m-1 rounds of disjoint pairs that
    # together visit every (p, q) once, so one pass is one cyclic sweep.
    players = list(range(m)) if m % 2 == 0 else list(range(m)) + [-1]
    mm = len(players)
    rounds = []
    for _ in range(mm - 1):
        pairs = [
            tuple(sorted((players[i], players[mm - 1 - i])))
            for i in range(mm // 2)
            if players[i] >= 0 and players[mm - 1 - i] >= 0
        ]
        p = np.array([x for x, _ in pairs], dtype=int)
        q = np.array([y for _, y in pairs], dtype=int)
        rounds.append((p, q))
        players = [players[0], players[-1]] + players[1:-1]
    return rounds


def _jacobi(a: NDArray) -> tuple[NDArray, NDArray]:
    """Cyclic Jacobi on a symmetric matrix. Returns (eigenvalues, vectors)."""
    m = a.shape[0]
    v = np.eye(m)
    if m == 1:
        return np.array([a[0, 0]]), v
    a = a.copy()
    tol = JACOBI_TOL * max(np.linalg.norm(a), 1.0)
    iu = np.triu_indices(m, 1)
    rounds = _round_robin_pairs(m)
    for _ in range(MAX_SWEEPS):
        if np.abs(a[iu]).max() <= tol:
            return np.diag(a).copy(), v
        for p, q in rounds:
            apq = a[p, q]
            live = np.abs(apq) > tol
            if not live.any():
                continue
            pl, ql, apq = p[live], q[live], apq[live]
            theta = (a[ql, ql] - a[pl, pl]) / (2.0 * apq)
            t = np.sign(theta) / (np.abs(theta) + np.hypot(1.0, theta))
            t[theta == 0] = 1.0
            c = 1.0 / np.hypot(1.0, t)
            s = t * c
            ap, aq = a[pl, :], a[ql, :]
            a[pl, :] = c[:, None] * ap - s[:, None] * aq
            a[ql, :] = s[:, None] * ap + c[:, None] * aq
            ap, aq = a[:, pl], a[:, ql]
            a[:, pl] = ap * c - aq * s
            a[:, ql] = ap * s + aq * c
            a[pl, ql] = 0.0
            a[ql, pl] = 0.0
            vp, vq = v[:, pl], v[:, ql]
            v[:, pl] = vp * c - vq * s
            v[:, ql] = vp * s + vq * c
    residual = float(np.abs(a[iu]).max())
    raise NumericalFailureError(
        f"Jacobi did not converge in {MAX_SWEEPS} sweeps "
        f"(max off-diagonal {residual:.3e})",
        residual=residual,
    )


def _summary(w: NDArray, psd: bool) -> tuple[NDArray, SpectralSummary]:
    order = np.argsort(w)[::-1]
    w = w[order]
    rho_max = float(w[0])
    if psd:
        # Gram-type inputs: roundoff-level negatives are clamped to zero.
        tol = TOL_EIG_REL * max(abs(rho_max), 0.0)
        w = np.where((w > -tol) & (w < 0.0), 0.0, w)
    rho_min = float(w[-1])
    cond = rho_max / rho_min if rho_min > 0 else math.inf
    return order, SpectralSummary(w, rho_max, rho_min, cond)


def eig_sym(m, psd: bool = False) -> tuple[SpectralSummary, NDArray[np.float64]]:
    """Eigendecompose a symmetric matrix.

    Parameters
    ----------
    m : SymMatrix or ndarray
        The matrix to decompose.
    psd : bool
        Label the input as positive semi-definite: eigenvalues within
        roundoff below zero are clamped to 0 in the summary.

    Returns
    -------
    (SpectralSummary, V) where the columns of V are orthonormal
    eigenvectors matching `summary.eigenvalues` (sorted descending).
    """
    sm = as_sym(m)
    w, v = _jacobi(sm.a)
    order, summary = _summary(w, psd)
    return summary, v[:, order]


def trace_power(m, i: int) -> float:
    """Tr(m^i), computed from the eigenvalues rather than matrix powers."""
    if i < 1:
        raise ValueError("power must be >= 1")
    summary, _ = eig_sym(m)
    return float(np.sum(summary.eigenvalues**i))


def solve_spd(
    m, b, rcond_min: float = RCOND_MIN, psd_clamp: bool = True
) -> tuple[NDArray[np.float64], float]:
    """Solve m x = b for a symmetric positive-definite m.

    Solves through the spectral decomposition, which makes the returned
    reciprocal-condition estimate exact.  The floor `rcond_min` is a
    feature, not a safety net: an ill-conditioned Krylov Gram matrix is
    precisely the instability this package is built to surface, so the
    solver raises instead of returning an exploded solution.

    Parameters
    ----------
    m : SymMatrix or ndarray
    b : ndarray
    rcond_min : float
        Refuse to solve when rho_min/rho_max falls below this.
    psd_clamp : bool
        Treat roundoff-negative eigenvalues of a Gram-type input as zero.
        A genuinely negative eigenvalue raises regardless.

    Returns
    -------
    (x, rcond)

    Raises
    ------
    NotPositiveDefiniteError
        If the smallest eigenvalue is negative beyond roundoff.
    SingularSystemError
        If the reciprocal condition is below `rcond_min`.
    """
    sm = as_sym(m)
    b = np.asarray(b, dtype=float)
    summary, v = eig_sym(sm, psd=psd_clamp)
    w = summary.eigenvalues
    if summary.rho_min < 0:
        raise NotPositiveDefiniteError(
            f"matrix has negative eigenvalue {summary.rho_min:.6e}"
        )
    rcond = summary.rho_min / summary.rho_max if summary.rho_max > 0 else 0.0
    if rcond < rcond_min:
        raise SingularSystemError(
            f"system numerically singular: rcond {rcond:.3e} < {rcond_min:.3e}",
            rcond=float(rcond),
        )
    x = v @ ((v.T @ b) / w)
    # One step of iterative refinement recovers most of the forward
    # accuracy lost to ill conditioning (dims are tiny, cost is nil).
    r = b - sm.a @ x
    if np.all(np.isfinite(r)):
        x = x + v @ ((v.T @ r) / w)
    return x, float(rcond)


def orthonormal_colspace(basis: NDArray) -> NDArray[np.float64]:
    """Orthonormal basis of the numerically detected column space.

    Modified Gram-Schmidt with re-orthogonalization; columns whose residual
    norm drops below ORTH_DROP_TOL times the first retained column norm are
    dropped (rank-revealing).
    """
    basis = np.asarray(basis, dtype=float)
    if basis.ndim != 2 or basis.shape[1] < 1:
        raise ValueError("basis must have at least one column")
    kept: list[NDArray] = []
    ref = None
    for j in range(basis.shape[1]):
        u = basis[:, j].astype(float).copy()
        for _ in range(2):
            for qv in kept:
                u -= (qv @ u) * qv
        norm = np.linalg.norm(u)
        if ref is None:
            if norm == 0.0:
                continue
            ref = norm
        if norm <= ORTH_DROP_TOL * ref:
            continue
        kept.append(u / norm)
    if not kept:
        raise ValueError("basis has numerical rank zero")
    return np.column_stack(kept)


def project_onto_colspace(basis: NDArray, y: NDArray) -> NDArray[np.float64]:
    """Orthogonal projection of y onto the column space of `basis`.

    Rank-deficient bases are handled by projecting onto the numerically
    detected column space.
    """
    q = orthonormal_colspace(basis)
    y = np.asarray(y, dtype=float)
    return q @ (q.T @ y)
