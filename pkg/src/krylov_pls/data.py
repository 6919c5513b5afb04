"""Data layer: datasets, sufficient statistics, and synthetic generation.

The statistical model is Y = X b + e with e ~ N(0, tau^2 I).  The design X
is fixed; all estimators in this package consume only the sufficient
statistics Sigma = X'X/n and sigma_hat = X'Y/n.  Synthetic designs are
drawn Gaussian and then orthogonalized so the empirical Gram matrix is
exactly the requested diagonal spectrum, which keeps the population
quantities used by bounds and oracles in exact agreement with the design.

Randomness comes from counter-based Philox streams keyed by (seed, stream
index), so replications are reproducible independently of scheduling.
"""

from __future__ import annotations

import csv
import warnings
from dataclasses import dataclass

import numpy as np
from numpy.typing import NDArray

from .linalg import SymMatrix

#: Philox stream index reserved for design generation (replication streams
#: use indices below 2^63).
_DESIGN_STREAM = 1 << 63

#: Default significance level for probabilistic routines.
DEFAULT_DELTA = 0.05

#: Default noise variance (the simulation study's tau^2 = 1).
DEFAULT_TAU2 = 1.0


@dataclass(frozen=True)
class Dataset:
    """A fixed design matrix with its response vector."""

    x: NDArray[np.float64]
    y: NDArray[np.float64]

    def __post_init__(self):
        x = np.asarray(self.x, dtype=float)
        y = np.asarray(self.y, dtype=float)
        if x.ndim != 2:
            raise ValueError("x must be a 2-d array")
        if y.ndim != 1 or y.shape[0] != x.shape[0]:
            raise ValueError("y must be a vector with one entry per row of x")
        if x.shape[0] < 1 or x.shape[1] < 1:
            raise ValueError("need n >= 1 and p >= 1")
        if not np.all(np.isfinite(x)) or not np.all(np.isfinite(y)):
            raise ValueError("non-finite entries in the data")
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "y", y)

    @property
    def n(self) -> int:
        return self.x.shape[0]

    @property
    def p(self) -> int:
        return self.x.shape[1]


@dataclass(frozen=True)
class ModelSpec:
    """True coefficients, noise variance and master seed of a linear model."""

    beta: NDArray[np.float64]
    tau2: float = DEFAULT_TAU2
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "beta", np.asarray(self.beta, dtype=float))
        if not self.tau2 > 0:
            raise ValueError("tau2 must be > 0")


@dataclass(frozen=True)
class GramSummary:
    """Sufficient statistics Sigma = X'X/n and sigma_hat = X'Y/n."""

    sigma_mat: SymMatrix
    sigma_hat: NDArray[np.float64]
    n: int
    p: int


def gram_summary(d: Dataset) -> GramSummary:
    """Compute the sufficient statistics of a dataset."""
    sigma_mat = SymMatrix(d.x.T @ d.x / d.n)
    sigma_hat = d.x.T @ d.y / d.n
    return GramSummary(sigma_mat=sigma_mat, sigma_hat=sigma_hat, n=d.n, p=d.p)


def population_sigma(sigma_mat, beta) -> NDArray[np.float64]:
    """Population covariance sigma = E[sigma_hat] = Sigma beta."""
    a = sigma_mat.a if isinstance(sigma_mat, SymMatrix) else np.asarray(sigma_mat)
    return a @ np.asarray(beta, dtype=float)


def _philox(seed: int, stream: int) -> np.random.Generator:
    key = np.array([np.uint64(seed), np.uint64(stream)], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))


def gen_design(
    n: int, spectrum, seed: int, exact: bool = True
) -> NDArray[np.float64]:
    """Generate a fixed Gaussian design with a prescribed Gram spectrum.

    Rows are drawn i.i.d. N(0, diag(spectrum)); with ``exact=True`` (the
    default) the columns are then orthogonalized (modified Gram-Schmidt,
    two passes) and rescaled so that X'X/n equals diag(spectrum) exactly.
    The raw draw is kept for robustness experiments via ``exact=False``.

    Deterministic given (n, spectrum, seed).
    """
    spectrum = np.asarray(spectrum, dtype=float)
    if spectrum.ndim != 1 or np.any(spectrum <= 0):
        raise ValueError("spectrum must be a vector of positive reals")
    p = spectrum.shape[0]
    rng = _philox(seed, _DESIGN_STREAM)
    x = rng.standard_normal((n, p)) * np.sqrt(spectrum)
    if not exact:
        return x
    if n < p:
        warnings.warn(
            f"n={n} < p={p}: the empirical Gram matrix is singular by "
            "construction; skipping the exact-spectrum pass",
            stacklevel=2,
        )
        return x
    for j in range(p):
        for _ in range(2):
            for i in range(j):
                x[:, j] -= (x[:, i] @ x[:, j]) / (x[:, i] @ x[:, i]) * x[:, i]
        x[:, j] *= np.sqrt(n * spectrum[j]) / np.linalg.norm(x[:, j])
    return x


def gen_noise(
    n: int, tau2: float, seed: int, replication_index: int
) -> NDArray[np.float64]:
    """Noise vector of one replication: n i.i.d. N(0, tau2) draws.

    The stream is keyed by (seed, replication_index): distinct
    replications are independent and the same pair reproduces the same
    noise bit for bit, regardless of how replications are scheduled.
    """
    if replication_index < 0 or replication_index >= _DESIGN_STREAM:
        raise ValueError("replication_index out of range")
    rng = _philox(seed, replication_index)
    return rng.standard_normal(n) * np.sqrt(tau2)


def gen_response(
    x: NDArray, spec: ModelSpec, replication_index: int
) -> NDArray[np.float64]:
    """Draw Y = X beta + eps for one replication (see :func:`gen_noise`)."""
    x = np.asarray(x, dtype=float)
    return x @ spec.beta + gen_noise(x.shape[0], spec.tau2, spec.seed, replication_index)


def write_csv(path, d: Dataset) -> None:
    """Write a dataset as CSV with header x1,...,xp,y (round-trip floats)."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow([f"x{j + 1}" for j in range(d.p)] + ["y"])
        for i in range(d.n):
            writer.writerow([repr(float(v)) for v in d.x[i]] + [repr(float(d.y[i]))])


class CsvFormatError(ValueError):
    """Malformed dataset CSV; carries the offending row and column."""

    def __init__(self, message: str, row: int, column: int | None = None):
        super().__init__(message)
        self.row = row
        self.column = column


def read_csv(path) -> Dataset:
    """Read a dataset CSV written by :func:`write_csv`.

    Raises CsvFormatError with the 1-based row (and column, when it
    applies) of the first problem found.
    """
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise CsvFormatError("empty file", row=1) from None
        header = [h.strip() for h in header]
        if len(header) < 2 or header[-1] != "y":
            raise CsvFormatError("header must be x1,...,xp,y", row=1)
        p = len(header) - 1
        if header[:-1] != [f"x{j + 1}" for j in range(p)]:
            raise CsvFormatError("header must be x1,...,xp,y", row=1)
        xs, ys = [], []
        for i, row in enumerate(reader, start=2):
            if len(row) != p + 1:
                raise CsvFormatError(
                    f"expected {p + 1} fields, got {len(row)}", row=i
                )
            vals = []
            for j, field in enumerate(row):
                try:
                    vals.append(float(field))
                except ValueError:
                    raise CsvFormatError(
                        f"not a number: {field!r}", row=i, column=j + 1
                    ) from None
            xs.append(vals[:-1])
            ys.append(vals[-1])
    if not xs:
        raise CsvFormatError("no data rows", row=2)
    return Dataset(x=np.asarray(xs), y=np.asarray(ys))
