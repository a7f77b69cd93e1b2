"""Correlations, principal components and least squares on per-user counts.

The eigensolver (cyclic Jacobi) and the linear solver (Gaussian elimination
with partial pivoting) are implemented here; numpy only stores the arrays.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .dataset import ACTIVITY_FIELDS, Dataset, activity_table
from .errors import DataError, NumericError


class ZeroVarianceColumn(DataError):
    def __init__(self, column: str):
        self.column = column
        super().__init__(f"column {column!r} has zero variance")


class ColumnMismatch(DataError):
    pass


class ConvergenceFailure(NumericError):
    pass


class SingularDesign(NumericError):
    pass


class DegenerateResponse(NumericError):
    pass


@dataclass(frozen=True)
class VariableMatrix:
    values: np.ndarray
    columns: tuple[str, ...]

    def __post_init__(self) -> None:
        v = np.asarray(self.values, dtype=float)
        if v.ndim != 2 or v.shape[1] != len(self.columns):
            raise DataError(f"matrix shape {v.shape} does not match {len(self.columns)} columns")
        if v.shape[0] < 2:
            raise DataError("need at least 2 rows")
        if not np.all(np.isfinite(v)):
            raise DataError("matrix contains missing or infinite values")
        object.__setattr__(self, "values", v)

    @property
    def n_rows(self) -> int:
        return self.values.shape[0]

    def column(self, name: str) -> np.ndarray:
        try:
            return self.values[:, self.columns.index(name)]
        except ValueError:
            raise ColumnMismatch(f"no column {name!r}") from None

    def select(self, names: Sequence[str]) -> "VariableMatrix":
        return VariableMatrix(np.column_stack([self.column(c) for c in names]), tuple(names))


def activity_matrix(d: Dataset, users: Sequence[int] | None = None, log1p: bool = False) -> VariableMatrix:
    """Users x functionality counts; rows follow ``users`` (default: all)."""
    table = activity_table(d)
    m = np.column_stack([table[c] for c in ACTIVITY_FIELDS]).astype(float)
    if users is not None:
        pos = {u.id: i for i, u in enumerate(d.users)}
        m = m[[pos[u] for u in users]]
    if log1p:
        m = np.log1p(m)
    return VariableMatrix(m, ACTIVITY_FIELDS)


# --- correlation ----------------------------------------------------------

@dataclass(frozen=True)
class CorrelationMatrix:
    values: np.ndarray
    columns: tuple[str, ...]


def _centered(m: VariableMatrix) -> np.ndarray:
    for j, name in enumerate(m.columns):
        if np.ptp(m.values[:, j]) == 0:
            raise ZeroVarianceColumn(name)
    return m.values - m.values.mean(axis=0)


def correlation_matrix(m: VariableMatrix) -> CorrelationMatrix:
    """Pearson coefficients, each unordered pair computed once."""
    c = _centered(m)
    norms = np.sqrt(np.einsum("ij,ij->j", c, c))
    p = len(m.columns)
    r = np.eye(p)
    for i in range(p):
        for j in range(i + 1, p):
            v = float(np.dot(c[:, i], c[:, j]) / (norms[i] * norms[j]))
            r[i, j] = r[j, i] = min(1.0, max(-1.0, v))
    return CorrelationMatrix(r, m.columns)


# --- eigen decomposition -----------------------------------------------------

def jacobi_eigh(a: np.ndarray, tol: float = 1e-12, max_sweeps: int = 100) -> tuple[np.ndarray, np.ndarray]:
    """Eigenvalues and eigenvectors (columns) of a symmetric matrix.

    Cyclic Jacobi: sweep over all off-diagonal pairs, zeroing each with a
    plane rotation, until the off-diagonal Frobenius norm drops below
    ``tol``.  Results are unsorted.
    """
    a = np.array(a, dtype=float)
    n = a.shape[0]
    if a.shape != (n, n) or not np.allclose(a, a.T, rtol=0, atol=1e-12):
        raise ValueError("jacobi_eigh needs a symmetric square matrix")
    a = (a + a.T) / 2
    v = np.eye(n)

    def off(x: np.ndarray) -> float:
        upper = np.triu(x, 1)
        return math.sqrt(2.0 * float(np.sum(upper * upper)))

    for _ in range(max_sweeps):
        if off(a) < tol:
            return np.diag(a).copy(), v
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                if apq == 0.0:
                    continue
                h = a[q, q] - a[p, p]
                if abs(h) + 100.0 * abs(apq) == abs(h):
                    # theta would overflow; t ~ 1 / (2 theta)
                    t = apq / h
                else:
                    theta = h / (2.0 * apq)
                    t = math.copysign(1.0, theta) / (abs(theta) + math.sqrt(theta * theta + 1.0))
                c = 1.0 / math.sqrt(t * t + 1.0)
                s = t * c
                ap, aq = a[:, p].copy(), a[:, q].copy()
                a[:, p] = c * ap - s * aq
                a[:, q] = s * ap + c * aq
                rp, rq = a[p, :].copy(), a[q, :].copy()
                a[p, :] = c * rp - s * rq
                a[q, :] = s * rp + c * rq
                a[p, q] = a[q, p] = 0.0
                vp, vq = v[:, p].copy(), v[:, q].copy()
                v[:, p] = c * vp - s * vq
                v[:, q] = s * vp + c * vq
    if off(a) < tol:
        return np.diag(a).copy(), v
    raise ConvergenceFailure(f"Jacobi did not converge in {max_sweeps} sweeps (off-norm {off(a):.3g})")


@dataclass(frozen=True)
class PcaResult:
    columns: tuple[str, ...]
    eigenvalues: np.ndarray          # all p, descending
    eigenvectors: np.ndarray         # p x p, columns match eigenvalues
    n_components: int
    means: np.ndarray
    stds: np.ndarray                 # population (ddof=0) standard deviations

    @property
    def loadings(self) -> np.ndarray:
        """Variable x retained-component correlations."""
        k = self.n_components
        return self.eigenvectors[:, :k] * np.sqrt(np.clip(self.eigenvalues[:k], 0, None))

    @property
    def variance_explained(self) -> np.ndarray:
        return self.eigenvalues[: self.n_components] / len(self.columns)


def pca(m: VariableMatrix, n_components: int = 3) -> PcaResult:
    """Principal components of the correlation matrix of ``m``.

    Each eigenvector is signed so that its largest-magnitude entry is
    positive.
    """
    p = len(m.columns)
    if not 1 <= n_components <= p:
        raise ValueError(f"n_components must be in [1, {p}]")
    corr = correlation_matrix(m).values
    values, vectors = jacobi_eigh(corr)
    order = np.argsort(-values, kind="stable")
    values, vectors = values[order], vectors[:, order]
    for j in range(p):
        if vectors[np.argmax(np.abs(vectors[:, j])), j] < 0:
            vectors[:, j] = -vectors[:, j]
    return PcaResult(m.columns, values, vectors, n_components,
                     m.values.mean(axis=0), m.values.std(axis=0))


def pca_project(r: PcaResult, m: VariableMatrix) -> np.ndarray:
    """Scores (n x k) of the rows of ``m`` on the retained components."""
    if tuple(m.columns) != tuple(r.columns):
        raise ColumnMismatch(f"columns {m.columns} differ from fitted {r.columns}")
    z = (m.values - r.means) / r.stds
    return z @ r.eigenvectors[:, : r.n_components]


# --- least squares ----------------------------------------------------------

def solve_linear(a: np.ndarray, b: np.ndarray, pivot_tol: float = 1e-10) -> np.ndarray:
    """Solve ``a x = b`` by Gaussian elimination with partial pivoting.

    Raises :class:`SingularDesign` when a pivot falls below ``pivot_tol``
    times the largest absolute entry of ``a``.
    """
    a = np.array(a, dtype=float)
    x = np.array(b, dtype=float)
    n = a.shape[0]
    scale = float(np.max(np.abs(a))) if a.size else 0.0
    if scale == 0.0:
        raise SingularDesign("zero matrix")
    for k in range(n):
        piv = k + int(np.argmax(np.abs(a[k:, k])))
        if abs(a[piv, k]) <= pivot_tol * scale:
            raise SingularDesign(f"matrix is singular (pivot {abs(a[piv, k]):.3g} at step {k})")
        if piv != k:
            a[[k, piv]] = a[[piv, k]]
            x[[k, piv]] = x[[piv, k]]
        f = a[k + 1:, k] / a[k, k]
        a[k + 1:, k:] -= np.outer(f, a[k, k:])
        x[k + 1:] -= f * x[k]
    for k in range(n - 1, -1, -1):
        x[k] = (x[k] - np.dot(a[k, k + 1:], x[k + 1:])) / a[k, k]
    return x


@dataclass(frozen=True)
class OlsResult:
    response: str
    regressors: tuple[str, ...]
    intercept: float
    coefficients: np.ndarray
    r_squared: float
    rss: float

    def coefficient(self, name: str) -> float:
        return float(self.coefficients[self.regressors.index(name)])

    def predict(self, x: np.ndarray) -> np.ndarray:
        return self.intercept + np.asarray(x, dtype=float) @ self.coefficients


def ols(m: VariableMatrix, response: str, regressors: Sequence[str]) -> OlsResult:
    """Least-squares fit with intercept through the normal equations.

    Regressors are centred and scaled to unit norm before forming the Gram
    matrix, which keeps the elimination well conditioned; one step of
    iterative refinement follows the solve.
    """
    regressors = tuple(regressors)
    if not regressors:
        raise ValueError("need at least one regressor")
    y = m.column(response)
    x = m.select(regressors).values
    n, k = x.shape
    if n <= k + 1:
        raise DataError(f"need more than {k + 1} rows for {k} regressors, got {n}")
    y_mean = y.mean()
    yc = y - y_mean
    ss_tot = float(np.dot(yc, yc))
    if ss_tot == 0.0:
        raise DegenerateResponse(f"response {response!r} has zero variance")
    x_mean = x.mean(axis=0)
    xc = x - x_mean
    norms = np.sqrt(np.einsum("ij,ij->j", xc, xc))
    for name, nrm in zip(regressors, norms):
        if nrm == 0.0:
            raise SingularDesign(f"regressor {name!r} is constant")
    xs = xc / norms
    gram = xs.T @ xs
    rhs = xs.T @ yc
    beta = solve_linear(gram, rhs)
    beta += solve_linear(gram, rhs - gram @ beta)
    coef = beta / norms
    intercept = float(y_mean - x_mean @ coef)
    resid = y - intercept - x @ coef
    rss = float(np.dot(resid, resid))
    r2 = min(1.0, max(0.0, 1.0 - rss / ss_tot))
    return OlsResult(response, regressors, intercept, coef, r2, rss)
