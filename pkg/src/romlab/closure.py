"""Exact VMS closure targets and the supervised training set built from them."""

import csv
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .errors import DimensionError, ParseError, ValidationError
from .pod import project
from .rom import assemble_operators


@dataclass(frozen=True, eq=False)
class ClosureDataset:
    """Projected coefficients (inputs) and closure targets, one row per sample."""

    inputs: np.ndarray
    targets: np.ndarray
    times: np.ndarray
    r: int
    R: int

    def __post_init__(self):
        n = self.times.shape[0]
        if self.inputs.shape != (n, self.r) or self.targets.shape != (n, self.r):
            raise DimensionError("inputs/targets must both be (n_samples, r)")
        if not np.all(np.isfinite(self.targets)):
            raise ValidationError("closure targets contain non-finite values")

    @property
    def n_samples(self):
        return self.times.shape[0]

    def rows(self, start, stop):
        return ClosureDataset(self.inputs[start:stop], self.targets[start:stop],
                              self.times[start:stop], self.r, self.R)


def closure_terms(ops_R, coeffs, r):
    """``tau = -[C(ubar_R) ubar_R]_{1..r} + C_r(ubar_r) ubar_r`` per row of ``coeffs``.

    ``ops_R`` are the rank-``R`` operators and ``coeffs`` the ``R`` projected
    coefficients.  Adding ``tau`` to the resolved advection reproduces the first
    ``r`` components of the full one.
    """
    coeffs = np.atleast_2d(coeffs)
    full = ops_R.advection(coeffs)[:, :r]
    resolved = ops_R.truncate(r).advection(coeffs[:, :r])
    return resolved - full


def compute_targets(ensemble, basis, r, R=None, operators=None):
    """Closure dataset for every snapshot of ``ensemble``.

    ``operators`` may carry precomputed rank-``R`` operators of ``basis``.
    Stiffness contributions are excluded.
    """
    R = basis.rank if R is None else R
    if r < 1 or r > R:
        raise ValidationError(f"closure targets need 1 <= r <= R, got r={r}, R={R}")
    if R > basis.rank:
        raise ValidationError(f"R={R} exceeds basis rank {basis.rank}")
    ops = operators if operators is not None else assemble_operators(basis, r=R)
    if ops.r != R:
        ops = ops.truncate(R)
    coeffs = project(ensemble.snapshots, basis, R)
    tau = closure_terms(ops, coeffs, r)
    return ClosureDataset(coeffs[:, :r].copy(), tau, ensemble.times.copy(), r, R)


class Windows(NamedTuple):
    train: tuple
    validation: tuple
    test: tuple


def split_windows(axis, fractions):
    """Contiguous train/validation/test index ranges ``[start, stop)``.

    ``axis`` is a sample count, a time array or a :class:`ClosureDataset`;
    ``fractions`` are the three window lengths as fractions of the axis.
    """
    if isinstance(axis, ClosureDataset):
        n = axis.n_samples
    elif np.ndim(axis) == 0:
        n = int(axis)
    else:
        n = len(axis)
    fr = [float(f) for f in fractions]
    if len(fr) != 3:
        raise ValidationError("exactly three window fractions are required")
    if any(f <= 0 for f in fr):
        raise ValidationError(f"window fractions must be positive, got {fr}")
    total = sum(fr)
    if total > 1.0 + 1e-12:
        raise ValidationError(f"windows cover {total:g} of the available data")
    cuts = [0]
    acc = 0.0
    for f in fr:
        acc += f
        cuts.append(int(round(acc * n)))
    if len(set(cuts)) != 4:
        raise ValidationError(f"a window is empty for {n} samples")
    return Windows((cuts[0], cuts[1]), (cuts[1], cuts[2]), (cuts[2], cuts[3]))


def save_dataset(dataset, path):
    r = dataset.r
    with open(path, "w", newline="") as fh:
        fh.write(f"# R={dataset.R}\n")
        writer = csv.writer(fh)
        writer.writerow(["t"] + [f"u_{i + 1}" for i in range(r)]
                        + [f"tau_{i + 1}" for i in range(r)])
        for t, u, tau in zip(dataset.times, dataset.inputs, dataset.targets):
            writer.writerow([format(v, ".17g") for v in (t, *u, *tau)])


def load_dataset(path):
    with open(path, newline="") as fh:
        first = fh.readline()
        if not first.startswith("# R="):
            raise ParseError(f"{path}: missing '# R=' line")
        R = int(first[4:])
        reader = csv.reader(fh)
        header = next(reader)
        r = (len(header) - 1) // 2
        if header[0] != "t" or len(header) != 2 * r + 1:
            raise ParseError(f"{path}: bad column header")
        data = np.array([[float(v) for v in row] for row in reader], dtype=float)
    data = data.reshape(-1, 2 * r + 1)
    return ClosureDataset(data[:, 1:r + 1].copy(), data[:, r + 1:].copy(),
                          data[:, 0].copy(), r, R)
