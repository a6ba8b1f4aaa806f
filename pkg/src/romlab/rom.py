"""Reduced Galerkin operators and the semi-implicit BDFk/EXTk ROM stepper."""

from dataclasses import dataclass

import numpy as np
from scipy.linalg import cho_factor, cho_solve

from . import _bdfext
from ._binio import header_float, header_int, read_container, take, write_container
from .errors import DimensionError, DivergenceError, EvaluationError, HeaderError, ValidationError
from .fields import dot


@dataclass(frozen=True, eq=False)
class RomOperators:
    """Reduced operators of a Galerkin ROM with zeroth mode ``phi0``.

    ``C[i, k, j] = (phi_i, (phi_k . grad) phi_j)``; ``C1[i, j]`` and ``C2[i, k]``
    couple the modes with ``phi0`` (``phi0 . grad phi_j`` and
    ``phi_k . grad phi0``), ``c0_i = (phi_i, (phi0 . grad) phi0)`` and
    ``a0_i = (grad phi_i, grad phi0)``.
    """

    B: np.ndarray
    A: np.ndarray
    C: np.ndarray
    c0: np.ndarray
    a0: np.ndarray
    C1: np.ndarray
    C2: np.ndarray
    Re: float

    def __post_init__(self):
        r = self.B.shape[0]
        shapes = {"B": (r, r), "A": (r, r), "C": (r, r, r), "c0": (r,),
                  "a0": (r,), "C1": (r, r), "C2": (r, r)}
        for name, shape in shapes.items():
            if getattr(self, name).shape != shape:
                raise DimensionError(f"operator {name} has shape "
                                     f"{getattr(self, name).shape}, expected {shape}")
        if not self.Re > 0:
            raise ValidationError("Re must be positive")

    @property
    def r(self):
        return self.B.shape[0]

    def truncate(self, r):
        """Operators of the leading ``r`` modes."""
        if r > self.r:
            raise DimensionError(f"cannot truncate rank {self.r} operators to {r}")
        return RomOperators(self.B[:r, :r].copy(), self.A[:r, :r].copy(),
                            self.C[:r, :r, :r].copy(), self.c0[:r].copy(),
                            self.a0[:r].copy(), self.C1[:r, :r].copy(),
                            self.C2[:r, :r].copy(), self.Re)

    def augmented_advection(self):
        """Tensor ``Cbar[i, k, j]`` with ``k, j = 0..r`` (index 0 is ``phi0``)."""
        r = self.r
        Cbar = np.zeros((r, r + 1, r + 1))
        Cbar[:, 1:, 1:] = self.C
        Cbar[:, 0, 0] = self.c0
        Cbar[:, 0, 1:] = self.C1
        Cbar[:, 1:, 0] = self.C2
        return Cbar

    def advection(self, u):
        """``C(ubar) ubar`` for reduced coefficients ``u`` (rows of a 2D array)."""
        u = np.asarray(u, dtype=float)
        quad = np.einsum("ikj,...k,...j->...i", self.C, u, u)
        return quad + u @ (self.C1 + self.C2).T + self.c0

    def diffusion(self, u):
        """``(A ubar) / Re``, zeroth-mode part included."""
        return (np.asarray(u) @ self.A.T + self.a0) / self.Re


def assemble_operators(basis, discretization=None, r=None, Re=1.0):
    """Galerkin operators of the first ``r`` modes of ``basis``.

    Raises :class:`~romlab.errors.CapabilityError` when the discretization has
    no derivative stencils.
    """
    disc = discretization or basis.discretization
    r = basis.rank if r is None else r
    if r > basis.rank:
        raise DimensionError(f"r={r} exceeds basis rank {basis.rank}")
    Phi = basis.modes[:, :r]
    phi0 = basis.zeroth_mode
    B = dot(Phi, Phi, disc)
    A = disc.stiffness(Phi, Phi)
    A = 0.5 * (A + A.T)
    C = np.empty((r, r, r))
    for k in range(r):
        C[:, k, :] = dot(Phi, disc.advect(Phi[:, k:k + 1], Phi), disc)
    c0 = dot(Phi, disc.advect(phi0, phi0), disc)
    a0 = disc.stiffness(Phi, phi0)
    C1 = dot(Phi, disc.advect(phi0[:, None], Phi), disc)
    C2 = dot(Phi, disc.advect(Phi, phi0[:, None]), disc)
    return RomOperators(B, A, C, c0, a0, C1, C2, float(Re))


def _check_augmented(u_bar, r):
    u_bar = np.asarray(u_bar, dtype=float)
    if u_bar.shape[-1] != r + 1:
        raise DimensionError(f"augmented state needs {r + 1} entries, got {u_bar.shape[-1]}")
    if np.any(u_bar[..., 0] != 1.0):
        raise ValidationError("the zeroth entry of an augmented state must be 1")
    return u_bar[..., 1:]


def rhs(operators, u_bar, closure=None):
    """``-C(ubar) ubar - A ubar / Re (+ g(u))`` for the augmented state ``u_bar``."""
    u = _check_augmented(u_bar, operators.r)
    out = -operators.advection(u) - operators.diffusion(u)
    if closure is not None:
        out = out + closure.predict(u)
    return out


@dataclass(frozen=True)
class StepperConfig:
    """Time step, BDF/EXT order, number of steps and optional Reynolds override."""

    dt: float
    order: int = 3
    n_steps: int = 1
    Re: float | None = None

    def __post_init__(self):
        if not self.dt > 0:
            raise ValidationError("dt must be positive")
        if self.order not in (1, 2, 3):
            raise ValidationError(f"order must be 1, 2 or 3, got {self.order}")
        if self.n_steps < 0:
            raise ValidationError("n_steps must be non-negative")


@dataclass(frozen=True, eq=False)
class Trajectory:
    times: np.ndarray
    coeffs: np.ndarray


def integrate(operators, initial, config, closure=None, t0=0.0):
    """Integrate the (optionally closed) ROM from ``initial`` coefficients.

    ``initial`` is either one coefficient vector or a history whose last row is
    the current state; with fewer than ``order`` history rows the order ramps
    up one step at a time (for third order the first step is a Richardson
    extrapolated BDF1/EXT1 step).  The closure is extrapolated like the
    advection.
    """
    ops = operators
    r = ops.r
    hist = np.atleast_2d(np.asarray(initial, dtype=float))
    if hist.shape[1] != r:
        raise DimensionError(f"initial state has {hist.shape[1]} entries, expected {r}")
    Re = config.Re if config.Re is not None else ops.Re
    dt, order = config.dt, config.order
    diff_const = ops.a0 / Re

    def explicit(u):
        out = -ops.advection(u)
        if closure is not None:
            try:
                out = out + closure.predict(u)
            except EvaluationError as exc:
                raise DivergenceError(str(exc)) from exc
        return out

    factors = {}

    def solve(k, h, history, nonlinear):
        b, a = _bdfext.BDF[k], _bdfext.EXT[k]
        if (k, h) not in factors:
            factors[k, h] = cho_factor((b[0] / h) * ops.B + ops.A / Re)
        rhs_vec = -(ops.B @ sum(b[i] * history[-i] for i in range(1, k + 1))) / h
        rhs_vec += sum(a[i - 1] * nonlinear[-i] for i in range(1, k + 1))
        rhs_vec -= diff_const
        return cho_solve(factors[k, h], rhs_vec)

    def checked(u, step):
        if not np.all(np.isfinite(u)):
            raise DivergenceError(f"ROM state became non-finite at step {step}", step=step)
        try:
            n_u = explicit(u)
        except DivergenceError as exc:
            raise DivergenceError(f"closure failed at step {step}: {exc}", step=step) from exc
        if not np.all(np.isfinite(n_u)):
            raise DivergenceError(f"ROM state became non-finite at step {step}", step=step)
        return n_u

    history = [row.copy() for row in hist[-order:]]
    nonlinear = [explicit(u) for u in history]
    out = np.empty((config.n_steps + 1, r))
    out[0] = history[-1]
    with np.errstate(over="ignore", invalid="ignore"):
        for step in range(config.n_steps):
            k = min(order, len(history))
            if k == 1 and order == 3:
                # A lone first-order start would cap the global order at two;
                # Richardson-extrapolate two half steps against one full step.
                half = solve(1, 0.5 * dt, history, nonlinear)
                n_half = checked(half, step + 1)
                two_halves = solve(1, 0.5 * dt, [half], [n_half])
                u = 2.0 * two_halves - solve(1, dt, history, nonlinear)
            else:
                u = solve(k, dt, history, nonlinear)
            n_u = checked(u, step + 1)
            history = (history + [u])[-order:]
            nonlinear = (nonlinear + [n_u])[-order:]
            out[step + 1] = u
    times = t0 + dt * np.arange(config.n_steps + 1)
    return Trajectory(times, out)


OPERATORS_MAGIC = "ROMOPS01\n"


def save_operators(operators, path):
    ops = operators
    write_container(path, OPERATORS_MAGIC, {"r": ops.r, "Re": float(ops.Re).hex()},
                    [ops.B, ops.A, ops.C, ops.c0, ops.a0, ops.C1, ops.C2])


def load_operators(path):
    """Read operators, e.g. assembled by an external full-order solver."""
    header, payload = read_container(path, OPERATORS_MAGIC)
    r = header_int(header, "r", path)
    Re = header_float(header, "Re", path)
    off = 0
    parts = []
    for shape in [(r, r), (r, r), (r, r, r), (r,), (r,), (r, r), (r, r)]:
        arr, off = take(payload, off, int(np.prod(shape)), path)
        parts.append(arr.reshape(shape))
    if off != payload.size:
        raise HeaderError(f"{path}: payload longer than header announces")
    return RomOperators(*parts, Re)
