"""The fitted objects: Krylov PLS, its ridge-regularized variant, and the
oracle pseudo-estimator.

All three share the closed form beta_hat = G_hat u for a K-vector of
coordinates u:

* plain PLS solves              Theta_hat u = G_hat' sigma_hat,
* ridge PLS solves   (Theta_hat + Delta_alpha) u = G_hat' sigma_hat with a
  diagonal penalty Delta_alpha = diag(alpha_1, ..., alpha_K),
* the oracle uses the population coordinates u = Lambda, isolating the
  error made in estimating the Krylov directions.

A singular Theta_hat is a hard error by design (no silent pseudo-inverse):
the regularized variant exists precisely because that inversion explodes
when the per-component signal-to-noise ratio is too low.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from numpy.typing import NDArray

from .data import Dataset, GramSummary
from .krylov import EmpiricalKrylov, PopulationKrylov, build_empirical_krylov
from .linalg import RCOND_MIN, SingularSystemError, SymMatrix, eig_sym, solve_spd

VARIANTS = ("iterative", "krylov", "ridge", "oracle")


class SingularKrylovError(SingularSystemError):
    """Theta_hat is numerically singular; ridge regularization applies."""


@dataclass(frozen=True)
class PlsFit:
    """A fitted coefficient vector with its provenance and conditioning.

    rcond_theta is the reciprocal condition of the K x K system actually
    solved; k_effective can fall below k when the iterative algorithm
    stops early on a vanishing component.
    """

    beta_hat: NDArray[np.float64]
    k: int
    variant: str
    rcond_theta: float
    k_effective: int
    alpha: NDArray[np.float64] | None = None

    def __post_init__(self):
        if self.variant not in VARIANTS:
            raise ValueError(f"unknown variant {self.variant!r}")
        if self.variant == "ridge":
            if self.alpha is None or np.any(np.asarray(self.alpha) < 0):
                raise ValueError("ridge fits require alpha >= 0")
        if not 0.0 <= self.rcond_theta <= 1.0:
            raise ValueError("rcond_theta must lie in [0, 1]")

    def to_record(self) -> dict:
        """Flat key-value record used by the CLI's JSON output."""
        rec = {
            "variant": self.variant,
            "k": self.k,
            "k_effective": self.k_effective,
            "rcond_theta": self.rcond_theta,
            "beta_hat": [float(v) for v in self.beta_hat],
        }
        if self.alpha is not None:
            rec["alpha"] = [float(a) for a in self.alpha]
        return rec


@dataclass(frozen=True)
class RidgeSchedule:
    """Per-component ridge penalties alpha_i and the constants behind them.

    The theoretical schedule is

        alpha_i = c_delta * K * (tau2/n) * rho(Sigma)^i * Tr(Sigma^i),

    with c_delta = 16 * C_delta and C_delta = max(g(x), 2 sqrt(2 x)) at
    x = ln(6K/delta), g(x) = 1 + 2x + 2 sqrt(x).  Per-index overrides C_i
    replace c_delta, mirroring the practical constants of the simulation
    study (the theoretical c_delta is very conservative).
    """

    alpha: NDArray[np.float64]
    c_delta: float
    delta: float
    overrides: NDArray[np.float64] | None = None

    def __post_init__(self):
        if np.any(np.asarray(self.alpha) < 0):
            raise ValueError("alpha entries must be >= 0")


def schedule_constants(k: int, delta: float) -> tuple[float, float, float]:
    """(x_delta, C_delta, c_delta) for K components at level delta."""
    if not 0 < delta < 1:
        raise ValueError("delta must lie in (0, 1)")
    x = math.log(6 * k / delta)
    g = 1.0 + 2.0 * x + 2.0 * math.sqrt(x)
    c_big = max(g, 2.0 * math.sqrt(2.0 * x))
    return x, c_big, 16.0 * c_big


def ridge_schedule(
    gs: GramSummary,
    k: int,
    tau2: float,
    delta: float,
    overrides=None,
) -> RidgeSchedule:
    """Build the ridge penalty schedule from the design's spectrum.

    Parameters
    ----------
    gs : GramSummary
    k : number of components
    tau2 : noise variance.  The schedule depends on the unknown tau^2; it
        must be supplied (see :func:`estimate_tau2_ols` for a plug-in).
    delta : significance level in (0, 1)
    overrides : optional length-k vector of constants C_i replacing
        c_delta per index.
    """
    _, c_big, c_small = schedule_constants(k, delta)
    summary, _ = eig_sym(gs.sigma_mat, psd=True)
    rho = summary.rho_max
    traces = np.array(
        [np.sum(summary.eigenvalues ** i) for i in range(1, k + 1)]
    )
    powers = rho ** np.arange(1, k + 1)
    if overrides is None:
        consts = np.full(k, c_small)
        ov = None
    else:
        ov = np.asarray(overrides, dtype=float)
        if ov.shape != (k,):
            raise ValueError(f"overrides must have length {k}")
        consts = ov
    alpha = consts * k * (tau2 / gs.n) * powers * traces
    return RidgeSchedule(alpha=alpha, c_delta=c_small, delta=delta, overrides=ov)


def _coordinate_fit(
    emp: EmpiricalKrylov,
    gs: GramSummary,
    system: SymMatrix,
    variant: str,
    rcond_min: float,
    alpha=None,
) -> PlsFit:
    rhs = emp.g_hat.T @ gs.sigma_hat
    try:
        u, rcond = solve_spd(system, rhs, rcond_min=rcond_min)
    except SingularSystemError as err:
        raise SingularKrylovError(
            f"Krylov Gram matrix numerically singular (rcond {err.rcond:.3e}); "
            "consider the ridge variant",
            rcond=err.rcond,
        ) from err
    return PlsFit(
        beta_hat=emp.g_hat @ u,
        k=emp.k,
        variant=variant,
        rcond_theta=rcond,
        k_effective=emp.k,
        alpha=alpha,
    )


def fit_pls_krylov(
    gs: GramSummary, k: int, rcond_min: float = RCOND_MIN
) -> PlsFit:
    """K-component PLS through its Krylov closed form.

    Solves Theta_hat u = G_hat' sigma_hat and returns beta_hat = G_hat u,
    the minimizer of ||Y - X b||^2 over the empirical Krylov space.

    Raises
    ------
    SingularKrylovError
        When rcond(Theta_hat) < rcond_min.  Callers may fall back to
        :func:`fit_pls_ridge`.
    """
    emp = build_empirical_krylov(gs, k)
    return _coordinate_fit(emp, gs, emp.theta_hat, "krylov", rcond_min)


def fit_pls_ridge(
    gs: GramSummary, k: int, schedule: RidgeSchedule, rcond_min: float = RCOND_MIN
) -> PlsFit:
    """Ridge-regularized PLS: solve (Theta_hat + Delta_alpha) u = G_hat' sigma_hat.

    With all alpha_i = 0 this degenerates to :func:`fit_pls_krylov`,
    including its singularity error.
    """
    alpha = np.asarray(schedule.alpha, dtype=float)
    if alpha.shape != (k,):
        raise ValueError(f"schedule.alpha must have length {k}")
    emp = build_empirical_krylov(gs, k)
    system = SymMatrix(emp.theta_hat.a + np.diag(alpha))
    fit = _coordinate_fit(emp, gs, system, "ridge", rcond_min, alpha=alpha)
    return fit


def fit_oracle(gs: GramSummary, pop: PopulationKrylov, k: int) -> PlsFit:
    """Oracle pseudo-estimator: empirical directions, population coordinates.

    beta_or = G_hat Lambda.  Only the K Krylov directions are estimated;
    the coordinates Lambda are taken as known, so its risk isolates the
    direction-estimation error (and is invariant to pure signal scaling).
    """
    if pop.k != k:
        raise ValueError("population structure was built for a different k")
    emp = build_empirical_krylov(gs, k)
    return PlsFit(
        beta_hat=emp.g_hat @ pop.lam,
        k=k,
        variant="oracle",
        rcond_theta=pop.rcond_theta,
        k_effective=k,
    )


def prediction_risk(x: NDArray, beta_true: NDArray, fit: PlsFit) -> float:
    """In-sample prediction risk (1/n) ||X (beta_hat - beta)||^2."""
    x = np.asarray(x, dtype=float)
    d = fit.beta_hat - np.asarray(beta_true, dtype=float)
    r = x @ d
    return float(r @ r / x.shape[0])


def penalized_objective(
    gs: GramSummary, emp: EmpiricalKrylov, y_norm2_over_n: float, u, alpha
) -> float:
    """(1/n)||Y - X G_hat u||^2 + u' Delta_alpha u, in sufficient statistics.

    Expanding the square gives Y'Y/n - 2 u' G_hat' sigma_hat
    + u' Theta_hat u + u' Delta_alpha u; the ridge solution is the unique
    minimizer (the objective is strongly convex once some alpha_i > 0).
    Accepts a batch of coordinate vectors as rows.
    """
    u = np.atleast_2d(np.asarray(u, dtype=float))
    rhs = emp.g_hat.T @ gs.sigma_hat
    quad = np.einsum("ij,jk,ik->i", u, emp.theta_hat.a, u)
    pen = np.einsum("ij,j,ij->i", u, np.asarray(alpha, dtype=float), u)
    vals = y_norm2_over_n - 2.0 * (u @ rhs) + quad + pen
    return vals if vals.shape[0] > 1 else float(vals[0])


def estimate_tau2_ols(d: Dataset) -> float:
    """Plug-in noise variance from OLS residuals (requires n > p).

    Not part of the theory: the bound and schedule formulas take the true
    tau^2; this is offered as a practical stand-in only.
    """
    if d.n <= d.p:
        raise ValueError("OLS plug-in for tau2 requires n > p")
    coef, *_ = np.linalg.lstsq(d.x, d.y, rcond=None)
    resid = d.y - d.x @ coef
    return float(resid @ resid / (d.n - d.p))
