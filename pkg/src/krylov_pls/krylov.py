"""Empirical and population Krylov structures.

The K-component PLS predictor lives in the Krylov space spanned by
G_hat = (sigma_hat, Sigma sigma_hat, ..., Sigma^{K-1} sigma_hat).  This
module builds that basis, its Gram matrix Theta_hat = G_hat' Sigma G_hat,
and the population counterparts (G, Theta, D = diag(Theta), the
correlation form R = D^{-1/2} Theta D^{-1/2}, the Krylov coordinates
Lambda = Theta^{-1} G' sigma and the target beta_bar = G Lambda).

The Krylov basis is deliberately NOT re-orthogonalized: the estimator
algebra, and its failure modes when the components are nearly dependent,
operate on the raw basis, and hiding the conditioning would hide exactly
the phenomenon this package measures.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numpy.typing import NDArray

from .data import GramSummary, population_sigma
from .linalg import RCOND_MIN, SymMatrix, as_sym, eig_sym


class PopulationDegenerateError(ValueError):
    """Population Theta is numerically singular (components dependent).

    Signals that K is too large for this signal: the Krylov components are
    linearly dependent, violating the minimal-independence assumption.
    """

    def __init__(self, message: str, rcond: float):
        super().__init__(message)
        self.rcond = rcond


@dataclass(frozen=True)
class EmpiricalKrylov:
    """Empirical Krylov basis G_hat and its Gram matrix Theta_hat."""

    g_hat: NDArray[np.float64]
    theta_hat: SymMatrix
    k: int


@dataclass(frozen=True)
class PopulationKrylov:
    """Population Krylov structures driving bounds, oracle and scenarios.

    Fields
    ------
    g, theta : the population basis and its Gram matrix G' Sigma G
    d : diag(theta), the squared norms sigma' Sigma^{2i-1} sigma
    r : the correlation form D^{-1/2} Theta D^{-1/2}
    lam : Krylov coordinates, solving Theta lam = G' sigma
    beta_bar : G lam, the best Krylov-space predictor
    lam_tilde : D^{1/2} lam
    lam_bar : marginal coordinates, (G' sigma)_i / d_i
    rcond_theta : reciprocal condition of theta
    """

    g: NDArray[np.float64]
    theta: SymMatrix
    d: NDArray[np.float64]
    r: SymMatrix
    lam: NDArray[np.float64]
    beta_bar: NDArray[np.float64]
    lam_tilde: NDArray[np.float64]
    lam_bar: NDArray[np.float64]
    k: int
    rcond_theta: float


@dataclass(frozen=True)
class RhatDiagnostic:
    """R_hat = D^{-1/2} Theta_hat D^{-1/2}, normalized by the population D.

    An analysis device rather than an estimator (the population D is not
    observable); exposed to check the high-probability inversion lemma
    empirically.
    """

    r_hat: SymMatrix
    rho_min_rhat: float
    rho_dev: float


def krylov_basis(sigma_mat, v: NDArray, k: int) -> NDArray[np.float64]:
    """Columns v, Sigma v, ..., Sigma^{k-1} v via iterated mat-vecs."""
    a = sigma_mat.a if isinstance(sigma_mat, SymMatrix) else np.asarray(sigma_mat)
    v = np.asarray(v, dtype=float)
    cols = [v]
    for _ in range(k - 1):
        cols.append(a @ cols[-1])
    return np.column_stack(cols)


def build_empirical_krylov(gs: GramSummary, k: int) -> EmpiricalKrylov:
    """Build G_hat and Theta_hat from the sufficient statistics.

    Theta_hat is assembled as the single quadratic form G_hat' Sigma G_hat
    (symmetrized); a singular Theta_hat is detected at solve time, not
    here.
    """
    if not 1 <= k <= gs.p:
        raise ValueError(f"k must be in [1, {gs.p}], got {k}")
    g_hat = krylov_basis(gs.sigma_mat, gs.sigma_hat, k)
    theta_hat = SymMatrix(g_hat.T @ (gs.sigma_mat.a @ g_hat))
    return EmpiricalKrylov(g_hat=g_hat, theta_hat=theta_hat, k=k)


def build_population_krylov(
    sigma_mat, beta, k: int, rcond_min: float = RCOND_MIN
) -> PopulationKrylov:
    """Build the population Krylov structures for true coefficients beta."""
    sigma_mat = as_sym(sigma_mat)
    beta = np.asarray(beta, dtype=float)
    if not 1 <= k <= sigma_mat.dim:
        raise ValueError(f"k must be in [1, {sigma_mat.dim}], got {k}")
    sigma = population_sigma(sigma_mat, beta)
    g = krylov_basis(sigma_mat, sigma, k)
    theta = SymMatrix(g.T @ (sigma_mat.a @ g))
    summary, vec = eig_sym(theta, psd=True)
    rcond = summary.rho_min / summary.rho_max if summary.rho_max > 0 else 0.0
    if rcond < rcond_min:
        raise PopulationDegenerateError(
            f"population Theta is numerically singular (rcond {rcond:.3e}); "
            f"the {k} Krylov components are linearly dependent",
            rcond=float(rcond),
        )
    gts = g.T @ sigma
    lam = vec @ ((vec.T @ gts) / summary.eigenvalues)
    d = theta.diag()
    dis = 1.0 / np.sqrt(d)
    r = SymMatrix(theta.a * np.outer(dis, dis))
    return PopulationKrylov(
        g=g,
        theta=theta,
        d=d,
        r=r,
        lam=lam,
        beta_bar=g @ lam,
        lam_tilde=np.sqrt(d) * lam,
        lam_bar=gts / d,
        k=k,
        rcond_theta=float(rcond),
    )


def rhat_diagnostic(pop: PopulationKrylov, emp: EmpiricalKrylov) -> RhatDiagnostic:
    """Compare the population-normalized R_hat with R.

    rho_min_rhat is the smallest eigenvalue of R_hat; rho_dev is the
    spectral radius of the symmetric difference R_hat - R.
    """
    if emp.k != pop.k:
        raise ValueError("population and empirical component counts differ")
    dis = 1.0 / np.sqrt(pop.d)
    r_hat = SymMatrix(emp.theta_hat.a * np.outer(dis, dis))
    s_hat, _ = eig_sym(r_hat, psd=True)
    s_dev, _ = eig_sym(SymMatrix(r_hat.a - pop.r.a))
    rho_dev = max(abs(s_dev.rho_max), abs(s_dev.rho_min))
    return RhatDiagnostic(
        r_hat=r_hat, rho_min_rhat=float(s_hat.rho_min), rho_dev=float(rho_dev)
    )
