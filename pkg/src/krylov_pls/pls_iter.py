"""Classical iterative PLS: loadings, components, deflation.

Each step takes the loading w_k = X(k)' Y / ||X(k)' Y||, forms the
component t_k = X(k) w_k, and deflates X(k+1) = X(k) - P_[t_k] X(k).
Deflation makes the components pairwise orthogonal, so the restricted
least-squares fit over span(w_1, ..., w_K) has the closed coordinates
t_k' Y / t_k' t_k; no general solver is involved.

The span of the loadings equals the empirical Krylov space, so this fit
and the closed-form Krylov fit agree whenever the Krylov Gram matrix is
well conditioned; keeping both routes gives a cross-implementation check.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numpy.typing import NDArray

from .data import Dataset
from .estimators import PlsFit

#: Relative threshold below which a loading denominator or component norm
#: is treated as zero and the iteration stops early.
DROP_TOL = 1e-12


class EmptyModelError(ValueError):
    """X'Y is exactly zero: no PLS component can be constructed."""


@dataclass(frozen=True)
class IterativePlsState:
    """Loadings, components and the current deflated design."""

    loadings: NDArray[np.float64]
    components: NDArray[np.float64]
    deflated: NDArray[np.float64]
    k_effective: int


def fit_pls_iterative(d: Dataset, k: int) -> tuple[PlsFit, IterativePlsState]:
    """Fit K-component PLS by the iterative deflation algorithm.

    Returns the fit (variant "iterative") together with the internal
    state.  Stops early with k_effective < k when a loading denominator
    or a component norm underflows DROP_TOL relative to the first one.
    """
    if not 1 <= k <= d.p:
        raise ValueError(f"k must be in [1, {d.p}], got {k}")
    xk = d.x.copy()
    y = d.y
    loadings: list[NDArray] = []
    components: list[NDArray] = []
    # r_j expresses t_j = X r_j in the original design; beta_hat needs it.
    carriers: list[NDArray] = []
    w0_norm = None
    t0_norm2 = None
    for _ in range(k):
        wv = xk.T @ y
        nw = float(np.linalg.norm(wv))
        if w0_norm is None:
            if nw == 0.0:
                raise EmptyModelError("X'Y is exactly zero; empty model")
            w0_norm = nw
        if nw <= DROP_TOL * w0_norm:
            break
        wv = wv / nw
        t = xk @ wv
        nt2 = float(t @ t)
        if t0_norm2 is None:
            t0_norm2 = nt2
        if nt2 <= (DROP_TOL**2) * t0_norm2 or nt2 == 0.0:
            break
        r = wv.copy()
        xw = d.x @ wv
        for rj, tj in zip(carriers, components):
            r -= (tj @ xw) / (tj @ tj) * rj
        loadings.append(wv)
        components.append(t)
        carriers.append(r)
        xk = xk - np.outer(t, t @ xk) / nt2
    beta_hat = np.zeros(d.p)
    for r, t in zip(carriers, components):
        beta_hat += r * float(t @ y) / float(t @ t)
    norms2 = np.array([t @ t for t in components])
    state = IterativePlsState(
        loadings=np.column_stack(loadings),
        components=np.column_stack(components),
        deflated=xk,
        k_effective=len(components),
    )
    fit = PlsFit(
        beta_hat=beta_hat,
        k=k,
        variant="iterative",
        rcond_theta=float(norms2.min() / norms2.max()),
        k_effective=len(components),
    )
    return fit, state
