"""Proper orthogonal decomposition by the method of snapshots."""

from dataclasses import dataclass

import numpy as np

from ._binio import header_int, read_container, take, write_container
from .errors import DimensionError, HeaderError, RankError, ValidationError
from .fields import Discretization, dot

RANK_CUTOFF = 1e-13


@dataclass(frozen=True, eq=False)
class PodBasis:
    """Orthonormal modes (columns of ``modes``) and their energies.

    ``eigenvalues`` are those of the snapshot correlation matrix ``G / K``.
    """

    modes: np.ndarray
    eigenvalues: np.ndarray
    zeroth_mode: np.ndarray
    discretization: Discretization

    def __post_init__(self):
        if self.modes.ndim != 2 or self.modes.shape[1] != self.eigenvalues.size:
            raise DimensionError("modes and eigenvalues disagree in rank")
        if self.zeroth_mode.shape != (self.modes.shape[0],):
            raise DimensionError("zeroth mode length differs from mode length")
        for arr in (self.modes, self.eigenvalues, self.zeroth_mode):
            arr.setflags(write=False)

    @property
    def rank(self):
        return self.modes.shape[1]

    def energy_fraction(self, r):
        """Fraction of the retained energy captured by the first ``r`` modes."""
        lam = np.clip(self.eigenvalues, 0.0, None)
        return float(lam[:r].sum() / lam.sum())


def build_gramian(ensemble):
    """Snapshot Gramian ``G_kl = (u^k, u^l)``, symmetrized."""
    U = ensemble.snapshots
    G = dot(U, U, ensemble.discretization)
    return 0.5 * (G + G.T)


def _orthonormalize(modes, disc):
    # Cholesky-based Gram-Schmidt in the weighted product, applied twice;
    # the method of snapshots loses orthogonality for small eigenvalues.
    for _ in range(2):
        M = dot(modes, modes, disc)
        L = np.linalg.cholesky(0.5 * (M + M.T))
        modes = np.linalg.solve(L, modes.T).T
    return modes


def gramian_eigenpairs(G):
    """Eigenpairs of a symmetric Gramian in descending order."""
    lam, V = np.linalg.eigh(G)
    return lam[::-1], V[:, ::-1]


def numerical_rank(eigenvalues, cutoff=RANK_CUTOFF):
    """Number of eigenvalues above ``cutoff`` times the largest one."""
    lam = np.asarray(eigenvalues)
    if lam.size == 0 or lam[0] <= 0:
        return 0
    return int(np.count_nonzero(lam > cutoff * lam[0]))


def compute_pod(ensemble, R=None):
    """POD basis of rank ``R`` (numerical rank when ``None``).

    Each mode is fixed in sign so that its largest-magnitude entry is positive.
    """
    disc = ensemble.discretization
    K = ensemble.n_snapshots
    lam_g, V = gramian_eigenpairs(build_gramian(ensemble))
    rank = numerical_rank(lam_g)
    if R is None:
        R = rank
    if R < 1:
        raise ValidationError(f"rank must be at least 1, got {R}")
    if R > rank:
        raise RankError(
            f"requested rank {R} exceeds numerical rank {rank} "
            f"(eigenvalue {rank + 1} below {RANK_CUTOFF:g} * lambda_1)")
    lam_g, V = lam_g[:R], V[:, :R]
    modes = ensemble.snapshots @ (V / np.sqrt(lam_g))
    modes = _orthonormalize(modes, disc)
    idx = np.argmax(np.abs(modes), axis=0)
    signs = np.sign(modes[idx, np.arange(R)])
    modes = modes * signs
    return PodBasis(modes, lam_g / K, ensemble.zeroth_mode.copy(), disc)


def project(field, basis, r=None, centered=True):
    """Coefficients ``(u - phi0, phi_i)``, ``i <= r``.

    ``field`` may be one field or a matrix of fields in columns (the result then
    has one row per column).  Pass ``centered=False`` for raw fields that still
    contain the zeroth mode.
    """
    r = basis.rank if r is None else r
    if r > basis.rank or r < 0:
        raise DimensionError(f"r={r} outside [0, {basis.rank}]")
    u = np.asarray(field, dtype=float)
    if not centered:
        u = u - (basis.zeroth_mode if u.ndim == 1 else basis.zeroth_mode[:, None])
    coeffs = dot(u, basis.modes[:, :r], basis.discretization)
    return coeffs


def reconstruct(coeffs, basis):
    """``phi0 + sum_j a_j phi_j``; rows of a 2D ``coeffs`` give columns of fields."""
    a = np.asarray(coeffs, dtype=float)
    r = a.shape[-1]
    if r > basis.rank:
        raise DimensionError(f"{r} coefficients for a rank-{basis.rank} basis")
    if a.ndim == 1:
        return basis.zeroth_mode + basis.modes[:, :r] @ a
    return basis.zeroth_mode[:, None] + basis.modes[:, :r] @ a.T


BASIS_MAGIC = "ROMBAS01\n"


def save_basis(basis, path):
    disc = basis.discretization
    header = {"dimension": disc.dimension, "N": disc.n, "R": basis.rank,
              "boundary": disc.boundary, "length": float(disc.length).hex()}
    write_container(path, BASIS_MAGIC, header,
                    [disc.weights, basis.zeroth_mode, basis.eigenvalues,
                     basis.modes.ravel(order="F")])


def load_basis(path):
    header, payload = read_container(path, BASIS_MAGIC)
    dim = header_int(header, "dimension", path)
    n = header_int(header, "N", path)
    R = header_int(header, "R", path)
    if "boundary" not in header or "length" not in header:
        raise HeaderError(f"{path}: incomplete header")
    size = n * dim
    off = 0
    w, off = take(payload, off, n, path)
    phi0, off = take(payload, off, size, path)
    lam, off = take(payload, off, R, path)
    modes, off = take(payload, off, size * R, path)
    if off != payload.size:
        raise HeaderError(f"{path}: payload longer than header announces")
    disc = Discretization(dim, w, header["boundary"], float.fromhex(header["length"]))
    return PodBasis(modes.reshape((size, R), order="F"), lam, phi0, disc)
