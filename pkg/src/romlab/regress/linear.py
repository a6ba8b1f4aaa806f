"""Linear ridge and quadratic truncated-SVD closures."""

import numpy as np

from ..errors import ValidationError
from .base import ClosureModel


class RidgeModel(ClosureModel):
    """``g_i(u) = intercept_i + coef[i] . u``."""

    kind = "ridge"

    def __init__(self, intercept, coef, meta=None):
        super().__init__(coef.shape[0], meta)
        self.intercept = np.asarray(intercept, dtype=float)
        self.coef = np.asarray(coef, dtype=float)

    @property
    def parameter_count(self):
        return self.r * (self.r + 1)

    def _predict(self, U):
        return U @ self.coef.T + self.intercept

    def to_arrays(self):
        return [self.intercept, self.coef]

    def header_fields(self):
        return {"alpha": float(self.meta.get("alpha", 0.0)).hex()}

    @classmethod
    def from_arrays(cls, r, arrays, header):
        return cls(arrays[0], arrays[1], {"alpha": float.fromhex(header.get("alpha", "0x0p+0"))})


def fit_ridge(dataset, alpha):
    """Per-component ridge regression with an unpenalized intercept.

    Minimizes ``|y_i - beta_0 - X beta|^2 + alpha |beta|^2`` (the scikit-learn
    ``Ridge`` objective) by centering, i.e. ``(Xc^T Xc + alpha I) beta = Xc^T yc``.
    """
    if alpha < 0:
        raise ValidationError("alpha must be non-negative")
    X, Y = dataset.inputs, dataset.targets
    x_mean, y_mean = X.mean(axis=0), Y.mean(axis=0)
    Xc, Yc = X - x_mean, Y - y_mean
    lhs = Xc.T @ Xc + alpha * np.eye(X.shape[1])
    try:
        coef = np.linalg.solve(lhs, Xc.T @ Yc).T
    except np.linalg.LinAlgError as exc:
        raise np.linalg.LinAlgError(f"ridge system is singular at alpha={alpha}") from exc
    if alpha == 0 and np.linalg.matrix_rank(lhs) < lhs.shape[0]:
        raise np.linalg.LinAlgError("ridge system is singular at alpha=0")
    intercept = y_mean - coef @ x_mean
    return RidgeModel(intercept, coef, {"alpha": alpha})


def quadratic_features(U):
    """Rows ``[u_j] + [u_j u_k]`` (``j, k = 1..r``, ``k`` fastest)."""
    U = np.atleast_2d(U)
    n, r = U.shape
    return np.hstack([U, (U[:, :, None] * U[:, None, :]).reshape(n, r * r)])


def design_matrix(inputs):
    """Least-squares matrix ``G`` of shape ``(N r, r^2 + r^3)``.

    Row ``j*r + i`` holds the features of sample ``j`` in the block of unknowns
    belonging to component ``i``; unknowns are ``vec(A~)`` then ``vec(B~)``
    (row-major).
    """
    M = quadratic_features(inputs)
    n, r = np.atleast_2d(inputs).shape
    G = np.zeros((n * r, r * r + r ** 3))
    for i in range(r):
        rows = np.arange(n) * r + i
        G[rows, i * r:(i + 1) * r] = M[:, :r]
        G[rows, r * r + i * r * r:r * r + (i + 1) * r * r] = M[:, r:]
    return G


def pack_quadratic(A, B):
    return np.concatenate([np.ravel(A), np.ravel(B)])


def unpack_quadratic(x, r):
    return x[:r * r].reshape(r, r), x[r * r:].reshape(r, r, r)


class QuadraticModel(ClosureModel):
    """``g_i(u) = sum_j A[i,j] u_j + sum_jk B[i,j,k] u_j u_k``."""

    kind = "quadratic-tsvd"

    def __init__(self, A, B, meta=None):
        super().__init__(A.shape[0], meta)
        self.A = np.asarray(A, dtype=float)
        self.B = np.asarray(B, dtype=float)

    @property
    def parameter_count(self):
        return self.r ** 2 + self.r ** 3

    def _predict(self, U):
        return U @ self.A.T + np.einsum("ijk,nj,nk->ni", self.B, U, U)

    def to_arrays(self):
        return [self.A, self.B]

    def header_fields(self):
        return {"svd_rank": int(self.meta.get("svd_rank", 0))}

    @classmethod
    def from_arrays(cls, r, arrays, header):
        return cls(arrays[0], arrays[1], {"svd_rank": int(header.get("svd_rank", 0))})


def _feature_svd(inputs):
    M = quadratic_features(inputs)
    U, s, Vt = np.linalg.svd(M, full_matrices=False)
    return U, s, Vt


def design_rank(inputs, rtol=None):
    """Numerical rank of the design matrix ``G``.

    ``G`` repeats the per-sample feature matrix once per component, so its rank
    is ``r`` times the feature rank.
    """
    U = np.atleast_2d(inputs)
    _, s, _ = _feature_svd(U)
    G_shape = (U.shape[0] * U.shape[1], U.shape[1] ** 2 + U.shape[1] ** 3)
    tol = (rtol if rtol is not None else max(G_shape) * np.finfo(float).eps) * s[0]
    return U.shape[1] * int(np.count_nonzero(s > tol))


def fit_quadratic_tsvd(dataset, svd_rank):
    """Least-squares fit of the quadratic closure regularized by truncated SVD.

    The singular values of ``G`` are those of the feature matrix, each repeated
    once per component.  Keeping the ``svd_rank`` largest resolves ties in
    component order, which makes the truncation deterministic.
    """
    X, T = dataset.inputs, dataset.targets
    n, r = X.shape
    rank = design_rank(X)
    if not 1 <= svd_rank <= rank:
        raise ValidationError(f"svd_rank must lie in [1, {rank}], got {svd_rank}")
    Us, s, Vt = _feature_svd(X)
    full, extra = divmod(svd_rank, r)
    A = np.empty((r, r))
    B = np.empty((r, r, r))
    for i in range(r):
        k = full + (1 if i < extra else 0)
        w = Vt[:k].T @ ((Us[:, :k].T @ T[:, i]) / s[:k])
        A[i] = w[:r]
        B[i] = w[r:].reshape(r, r)
    return QuadraticModel(A, B, {"svd_rank": svd_rank})
