"""Discretized velocity fields, the weighted L2 inner product and snapshot data.

Only uniform 1D grids carry derivative stencils.  Two-dimensional ensembles can
be stored, projected and decomposed, but operator assembly on them raises
:class:`~romlab.errors.CapabilityError` (load assembled operators instead).
"""

from dataclasses import dataclass, field

import numpy as np

from . import _bdfext
from ._binio import (header_float, header_int, read_container, take,
                     write_container)
from .errors import (CapabilityError, DimensionError, DivergenceError,
                     HeaderError, ValidationError)

PERIODIC = "periodic"
DIRICHLET = "homogeneous-dirichlet"
BLOWUP_LIMIT = 1e6


@dataclass(frozen=True, eq=False)
class Discretization:
    """Grid, quadrature weights and stencils.

    Fields with ``dimension`` components are stored component-blocked, so a
    vector field has length ``dimension * n``.
    """

    dimension: int
    weights: np.ndarray
    boundary: str = PERIODIC
    length: float = 2.0 * np.pi
    stencil: str | None = "fd2"

    def __post_init__(self):
        w = np.asarray(self.weights)
        if w.dtype != np.float64:
            raise ValidationError("quadrature weights must be float64")
        if self.dimension not in (1, 2):
            raise ValidationError(f"dimension must be 1 or 2, got {self.dimension}")
        if self.boundary not in (PERIODIC, DIRICHLET):
            raise ValidationError(f"unknown boundary type {self.boundary!r}")
        if w.ndim != 1 or w.size < 2 or np.any(w <= 0):
            raise ValidationError("quadrature weights must be a positive 1D array")
        if self.dimension != 1:
            object.__setattr__(self, "stencil", None)
        w.setflags(write=False)
        object.__setattr__(self, "weights", w)

    @classmethod
    def periodic(cls, n, length=2.0 * np.pi):
        """Uniform periodic grid ``x_i = i*h`` on ``[0, length)``."""
        h = length / n
        return cls(1, np.full(n, h), PERIODIC, float(length))

    @classmethod
    def dirichlet(cls, n, length=1.0):
        """Uniform grid on ``[0, length]`` including both (zero) end nodes."""
        h = length / (n - 1)
        w = np.full(n, h)
        w[0] = w[-1] = 0.5 * h
        return cls(1, w, DIRICHLET, float(length))

    @property
    def n(self):
        return self.weights.size

    @property
    def field_size(self):
        return self.n * self.dimension

    @property
    def h(self):
        if self.boundary == PERIODIC:
            return self.length / self.n
        return self.length / (self.n - 1)

    @property
    def nodes(self):
        if self.dimension != 1:
            raise CapabilityError("node coordinates are only defined in 1D")
        return np.arange(self.n) * self.h

    @property
    def has_stencils(self):
        return self.stencil is not None

    def _need_stencil(self):
        if not self.has_stencils:
            raise CapabilityError(
                f"no derivative stencil for a {self.dimension}D discretization; "
                "load assembled operators instead")

    def gradient(self, u):
        """Second-order central difference ``du/dx``."""
        self._need_stencil()
        u = np.asarray(u, dtype=float)
        h = self.h
        if self.boundary == PERIODIC:
            return (np.roll(u, -1, axis=0) - np.roll(u, 1, axis=0)) / (2.0 * h)
        return np.gradient(u, h, axis=0, edge_order=2)

    def advect(self, a, b):
        """Discrete ``(a . grad) b`` in skew-symmetric form.

        ``advect(u, u)`` is ``(u u_x + (u^2)_x) / 3``, which conserves both the
        mean and the energy of ``u`` on periodic grids.
        """
        return (a * self.gradient(b) + self.gradient(a * b)) / 3.0

    def _edge_differences(self, u):
        if self.boundary == PERIODIC:
            return (np.roll(u, -1, axis=0) - u) / self.h
        return np.diff(u, axis=0) / self.h

    def stiffness(self, u, v):
        """``(grad u, grad v)`` with edge-centred gradients (midpoint rule)."""
        self._need_stencil()
        du = self._edge_differences(np.asarray(u, dtype=float))
        dv = self._edge_differences(np.asarray(v, dtype=float))
        return self.h * np.tensordot(du, dv, axes=(0, 0))

    def laplacian(self, u):
        """Three-point Laplacian, the operator whose energy form is ``stiffness``."""
        self._need_stencil()
        u = np.asarray(u, dtype=float)
        h2 = self.h ** 2
        if self.boundary == PERIODIC:
            return (np.roll(u, -1, axis=0) - 2.0 * u + np.roll(u, 1, axis=0)) / h2
        out = np.zeros_like(u)
        out[1:-1] = (u[2:] - 2.0 * u[1:-1] + u[:-2]) / h2
        return out


def _tiled_weights(disc, size):
    if size != disc.field_size:
        raise DimensionError(
            f"field length {size} does not match discretization ({disc.field_size})")
    return np.tile(disc.weights, disc.dimension)


def dot(u, v, disc):
    """Weighted L2 inner product ``sum_i w_i u_i v_i``.

    Either argument may be a matrix whose columns are fields; the result is then
    the matrix of pairwise products.
    """
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    if u.shape[0] != v.shape[0]:
        raise DimensionError(f"length mismatch: {u.shape[0]} vs {v.shape[0]}")
    w = _tiled_weights(disc, u.shape[0])
    if u.ndim == 1 and v.ndim == 1:
        # w . (u*v) keeps the product exactly symmetric
        return float(np.dot(w, u * v))
    if u.ndim == 1:
        return (w * u) @ v
    return (w[:, None] * u).T @ v


@dataclass(frozen=True, eq=False)
class FieldEnsemble:
    """Snapshot matrix with its zeroth mode already subtracted.

    Column ``k`` of ``snapshots`` stores ``u(x, t_k) - zeroth_mode``.
    """

    discretization: Discretization
    snapshots: np.ndarray
    zeroth_mode: np.ndarray
    times: np.ndarray
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        U = np.asarray(self.snapshots)
        phi0 = np.asarray(self.zeroth_mode)
        t = np.asarray(self.times)
        for name, arr in (("snapshots", U), ("zeroth mode", phi0), ("times", t)):
            if arr.dtype != np.float64:
                raise ValidationError(f"{name} must be float64, got {arr.dtype}")
        if U.ndim != 2:
            raise DimensionError("snapshot matrix must be 2D (N x K)")
        size, K = U.shape
        _tiled_weights(self.discretization, size)
        if phi0.shape != (size,):
            raise DimensionError("zeroth mode length differs from snapshot length")
        if K < 2:
            raise ValidationError(f"an ensemble needs K >= 2 snapshots, got {K}")
        if t.shape != (K,):
            raise DimensionError("times length differs from snapshot count")
        steps = np.diff(t)
        if np.any(steps <= 0):
            raise ValidationError("sample times must be strictly increasing")
        if np.max(np.abs(steps - steps[0])) > 1e-12 * max(abs(steps[0]), np.max(np.abs(t))):
            raise ValidationError("sample times must be uniformly spaced")
        for arr in (U, phi0, t):
            arr.setflags(write=False)
        object.__setattr__(self, "snapshots", U)
        object.__setattr__(self, "zeroth_mode", phi0)
        object.__setattr__(self, "times", t)

    @property
    def n_snapshots(self):
        return self.snapshots.shape[1]

    @property
    def sample_dt(self):
        return float((self.times[-1] - self.times[0]) / (self.n_snapshots - 1))

    def full_fields(self):
        """Snapshots with the zeroth mode added back."""
        return self.snapshots + self.zeroth_mode[:, None]

    def subset(self, start, stop):
        """Ensemble over snapshot indices ``[start, stop)`` sharing the zeroth mode."""
        return FieldEnsemble(self.discretization, self.snapshots[:, start:stop].copy(),
                             self.zeroth_mode, self.times[start:stop].copy(),
                             dict(self.meta))


@dataclass(frozen=True)
class BurgersConfig:
    """Settings for :func:`generate_burgers`.

    ``n_snapshots`` samples are recorded every ``sample_dt`` starting after
    ``spinup`` time units; the solver takes ``substeps`` steps per sample.
    """

    n: int = 256
    viscosity: float = 0.005
    n_snapshots: int = 800
    sample_dt: float = 0.01
    profile: str = "sine"
    seed: int = 0
    substeps: int = 10
    order: int = 2
    spinup: float = 0.0
    length: float = 2.0 * np.pi

    @property
    def end_time(self):
        return self.spinup + (self.n_snapshots - 1) * self.sample_dt


def initial_profile(disc, profile, seed=0):
    """Initial condition by name: ``zero``, ``sine``, ``sine-mean`` or ``random``.

    ``random`` draws a seeded sum of the first eight Fourier modes with
    amplitudes decaying like ``1/k``.
    """
    x = disc.nodes
    k0 = 2.0 * np.pi / disc.length
    if profile == "zero":
        return np.zeros_like(x)
    if profile == "sine":
        return np.sin(k0 * x)
    if profile == "sine-mean":
        return 0.5 + np.sin(k0 * x)
    if profile == "random":
        rng = np.random.default_rng(seed)
        u = np.zeros_like(x)
        for k in range(1, 9):
            a, b = rng.standard_normal(2) / k
            u += a * np.sin(k * k0 * x) + b * np.cos(k * k0 * x)
        return u / np.max(np.abs(u))
    raise ValidationError(f"unknown initial profile {profile!r}")


def burgers_rhs(disc, u):
    """Explicit part of the Burgers semi-discretization, ``-(u . grad) u``."""
    return -disc.advect(u, u)


def integrate_burgers(disc, u0, viscosity, dt, n_steps, record_every=1, order=2):
    """Advance ``u_t + u u_x = nu u_xx`` with implicit diffusion.

    Returns the states at steps ``0, record_every, 2*record_every, ...`` as the
    columns of a matrix.  Raises :class:`DivergenceError` once ``|u|`` exceeds
    ``1e6``.
    """
    if disc.boundary != PERIODIC or disc.dimension != 1:
        raise CapabilityError("the Burgers generator supports 1D periodic grids only")
    if viscosity < 0:
        raise ValidationError("viscosity must be non-negative")
    n = disc.n
    h = disc.h
    # symbol of the three-point Laplacian in the FFT basis
    lam = -(4.0 / h ** 2) * np.sin(np.pi * np.fft.fftfreq(n)) ** 2
    u = np.array(u0, dtype=float)
    history = [u]
    nonlinear = [burgers_rhs(disc, u)]
    out = [u.copy()]
    for step in range(n_steps):
        k = _bdfext.ramp_order(step, order)
        b, a = _bdfext.BDF[k], _bdfext.EXT[k]
        rhs = -sum(b[i] * history[-i] for i in range(1, k + 1)) / dt
        rhs = rhs + sum(a[i - 1] * nonlinear[-i] for i in range(1, k + 1))
        u = np.real(np.fft.ifft(np.fft.fft(rhs) / (b[0] / dt - viscosity * lam)))
        if not np.all(np.isfinite(u)) or np.max(np.abs(u)) > BLOWUP_LIMIT:
            raise DivergenceError(f"Burgers solution blew up at step {step + 1}",
                                  step=step + 1)
        history = (history + [u])[-order:]
        nonlinear = (nonlinear + [burgers_rhs(disc, u)])[-order:]
        if (step + 1) % record_every == 0:
            out.append(u.copy())
    return np.column_stack(out)


def generate_burgers(config=None, **overrides):
    """Snapshot ensemble of 1D periodic viscous Burgers flow.

    The first recorded field becomes the zeroth mode and is subtracted from
    every snapshot.
    """
    cfg = config or BurgersConfig()
    if overrides:
        cfg = BurgersConfig(**{**cfg.__dict__, **overrides})
    if cfg.viscosity <= 0:
        raise ValidationError("viscosity must be positive")
    if cfg.n < 32 or cfg.n & (cfg.n - 1):
        raise ValidationError(f"N must be a power of two >= 32, got {cfg.n}")
    if cfg.substeps < 10:
        raise ValidationError("at least 10 solver steps per sample are required")
    if cfg.n_snapshots < 2:
        raise ValidationError("at least two snapshots are required")
    disc = Discretization.periodic(cfg.n, cfg.length)
    u0 = initial_profile(disc, cfg.profile, cfg.seed)
    dt = cfg.sample_dt / cfg.substeps
    n_spin = int(round(cfg.spinup / cfg.sample_dt)) * cfg.substeps
    total = n_spin + (cfg.n_snapshots - 1) * cfg.substeps
    states = integrate_burgers(disc, u0, cfg.viscosity, dt, total,
                               record_every=cfg.substeps, order=cfg.order)
    states = states[:, n_spin // cfg.substeps:]
    phi0 = states[:, 0].copy()
    times = cfg.spinup + cfg.sample_dt * np.arange(cfg.n_snapshots)
    meta = {"viscosity": cfg.viscosity, "Re": 1.0 / cfg.viscosity,
            "profile": cfg.profile, "seed": cfg.seed}
    return FieldEnsemble(disc, states - phi0[:, None], phi0, times, meta)


ENSEMBLE_MAGIC = "ROMSNAP1\n"


def save_ensemble(ensemble, path):
    """Write ``ensemble`` in the ``ROMSNAP1`` container format."""
    disc = ensemble.discretization
    N, K = ensemble.snapshots.shape
    header = {
        "dimension": disc.dimension,
        "N": disc.n,
        "K": K,
        "dt_s": float(ensemble.sample_dt).hex(),
        "boundary": disc.boundary,
        "length": float(disc.length).hex(),
    }
    if "Re" in ensemble.meta:
        header["Re"] = float(ensemble.meta["Re"]).hex()
    arrays = [disc.weights, ensemble.zeroth_mode, ensemble.times,
              ensemble.snapshots.ravel(order="F")]
    write_container(path, ENSEMBLE_MAGIC, header, arrays)


def load_ensemble(path):
    """Read an ensemble written by :func:`save_ensemble`."""
    header, payload = read_container(path, ENSEMBLE_MAGIC)
    dim = header_int(header, "dimension", path)
    n = header_int(header, "N", path)
    K = header_int(header, "K", path)
    length = header_float(header, "length", path)
    boundary = header.get("boundary")
    if boundary is None:
        raise HeaderError(f"{path}: missing header field 'boundary'")
    size = n * dim
    off = 0
    w, off = take(payload, off, n, path)
    phi0, off = take(payload, off, size, path)
    t, off = take(payload, off, K, path)
    U, off = take(payload, off, size * K, path)
    if off != payload.size:
        raise HeaderError(f"{path}: payload longer than header announces")
    disc = Discretization(dim, w, boundary, length)
    meta = {"Re": header_float(header, "Re", path)} if "Re" in header else {}
    return FieldEnsemble(disc, U.reshape((size, K), order="F"), phi0, t, meta)
