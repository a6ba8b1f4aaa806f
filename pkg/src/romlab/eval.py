"""Kinetic-energy metrics, hold-out hyperparameter search and multi-seed studies."""

import csv
import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from .closure import compute_targets, split_windows
from .errors import (DimensionError, DivergenceError, RomlabError, SearchError,
                     ValidationError)
from .fields import dot
from .pod import compute_pod, project
from .regress import (SrConfig, NnConfig, fit_mlp, fit_quadratic_tsvd, fit_ridge,
                      fit_symbolic, design_rank, count_occurrences, simplify)
from .rom import StepperConfig, assemble_operators, integrate

SQRT_FORM = "sqrt"
QUADRATIC_FORM = "quadratic"


def _energy_from_squared_norm(sq, form):
    sq = np.asarray(sq, dtype=float)
    if np.any(sq < -1e-14):
        raise ArithmeticError(f"negative squared norm {sq.min():.3e}")
    sq = np.clip(sq, 0.0, None)
    if form == SQRT_FORM:
        return 0.5 * np.sqrt(sq)
    if form == QUADRATIC_FORM:
        return 0.5 * sq
    raise ValidationError(f"unknown energy form {form!r}")


class EnergyOps:
    """Kinetic energy of ``phi0 + sum_i u_i phi_i`` straight from coefficients.

    The default ``form='sqrt'`` is ``E = 0.5 * (int u.u)^(1/2)``; ``'quadratic'``
    gives the conventional ``0.5 * int u.u``.
    """

    def __init__(self, basis, form=SQRT_FORM):
        disc = basis.discretization
        self.basis = basis
        self.form = form
        self.phi0_sq = float(dot(basis.zeroth_mode, basis.zeroth_mode, disc))
        self.phi0_modes = dot(basis.modes, basis.zeroth_mode, disc)

    def squared_norm(self, coeffs):
        a = np.asarray(coeffs, dtype=float)
        r = a.shape[-1]
        return self.phi0_sq + 2.0 * a @ self.phi0_modes[:r] + np.sum(a * a, axis=-1)

    def __call__(self, coeffs):
        return _energy_from_squared_norm(self.squared_norm(coeffs), self.form)


def kinetic_energy(state, disc=None, energy_ops=None, form=SQRT_FORM):
    """Energy of a field (``disc`` given) or of coefficients (``energy_ops``)."""
    if energy_ops is not None:
        return energy_ops(state)
    if disc is None:
        raise ValidationError("pass a discretization for fields or EnergyOps for coefficients")
    u = np.asarray(state, dtype=float)
    if u.ndim == 1:
        sq = dot(u, u, disc)
    else:
        w = np.tile(disc.weights, disc.dimension)
        sq = np.einsum("ik,i,ik->k", u, w, u)
    return _energy_from_squared_norm(sq, form)


# -- metrics ------------------------------------------------------------------

def _pair(e_fom, e_rom):
    a = np.asarray(e_fom, dtype=float)
    b = np.asarray(e_rom, dtype=float)
    if a.shape != b.shape or a.ndim != 1 or a.size == 0:
        raise DimensionError("energy series must be non-empty and aligned")
    return a, b


def mse_val(e_fom, e_rom):
    a, b = _pair(e_fom, e_rom)
    return float(np.mean((a - b) ** 2))


def r2_val(e_fom, e_rom):
    a, b = _pair(e_fom, e_rom)
    var = float(np.mean((a - a.mean()) ** 2))
    if var == 0.0:
        raise ArithmeticError("FOM energy is constant over the window; R^2 undefined")
    return 1.0 - mse_val(a, b) / var


def rmse_test(e_fom, e_rom):
    a, b = _pair(e_fom, e_rom)
    zero = np.flatnonzero(a == 0.0)
    if zero.size:
        raise ZeroDivisionError(f"FOM energy is zero at sample {zero[0]}")
    return float(np.mean((a - b) ** 2 / a ** 2))


def mean_mse_tr(model, dataset):
    """Average over components of the training MSE of ``model``."""
    pred = model.predict(dataset.inputs)
    return float(np.mean(np.mean((dataset.targets - pred) ** 2, axis=0)))


# -- study set-up -------------------------------------------------------------

@dataclass(eq=False)
class Study:
    """Everything needed to train, run and score closures on one ensemble."""

    basis: object
    operators: object
    dataset: object
    energy_ops: EnergyOps
    e_fom: np.ndarray
    times: np.ndarray
    windows: object
    initial: np.ndarray
    sample_dt: float
    substeps: int = 10
    order: int = 3
    meta: dict = field(default_factory=dict)

    def rom_energy(self, model=None, n_samples=None):
        """ROM energy at the first ``n_samples`` sample times (all by default)."""
        n = len(self.e_fom) if n_samples is None else n_samples
        cfg = StepperConfig(self.sample_dt / self.substeps, self.order,
                            (n - 1) * self.substeps)
        traj = integrate(self.operators, self.initial, cfg, model, t0=self.times[0])
        return self.energy_ops(traj.coeffs[::self.substeps])

    def window(self, series, name):
        start, stop = getattr(self.windows, name)
        return np.asarray(series)[start:stop]


def build_study(ensemble, r, R, fractions=(0.25, 0.25, 0.5), Re=None,
                substeps=10, order=3, energy_form=SQRT_FORM):
    """POD, operators, closure data and FOM energies for one ensemble.

    The POD and the training targets use the training window only; the FOM
    energy covers every snapshot.
    """
    if not 1 <= r < R:
        raise ValidationError(f"a closure study needs 1 <= r < R, got r={r}, R={R}")
    windows = split_windows(ensemble.n_snapshots, fractions)
    train = ensemble.subset(*windows.train)
    basis = compute_pod(train, R)
    if Re is None:
        Re = ensemble.meta.get("Re")
    if Re is None:
        raise ValidationError("Reynolds number unknown; pass Re")
    ops_R = assemble_operators(basis, ensemble.discretization, R, Re)
    dataset = compute_targets(train, basis, r, R, ops_R)
    return assemble_study(ensemble, basis, ops_R, dataset, windows, substeps, order,
                          energy_form)


def assemble_study(ensemble, basis, operators, dataset, windows, substeps=10, order=3,
                   energy_form=SQRT_FORM):
    """Bundle already computed pieces; ``operators`` may be R- or r-sized."""
    r = dataset.r
    if operators.r < r:
        raise DimensionError(f"operators of size {operators.r} cannot serve r={r}")
    e_fom = kinetic_energy(ensemble.full_fields(), ensemble.discretization, form=energy_form)
    initial = project(ensemble.snapshots[:, 0], basis, r)
    meta = {"r": r, "R": dataset.R, "Re": operators.Re}
    return Study(basis, operators.truncate(r), dataset, EnergyOps(basis, energy_form),
                 e_fom, ensemble.times.copy(), windows, initial, ensemble.sample_dt,
                 substeps, order, meta)


# -- model families -----------------------------------------------------------

FAMILIES = ("lr", "d2", "sr", "nn")
STOCHASTIC = ("sr", "nn")


def fit_family(family, params, dataset, seed=0):
    """Fit one closure of ``family`` with hyperparameters ``params`` (a dict)."""
    params = dict(params)
    if family == "lr":
        return fit_ridge(dataset, params["alpha"])
    if family == "d2":
        return fit_quadratic_tsvd(dataset, params["svd_rank"])
    if family == "sr":
        return fit_symbolic(dataset, SrConfig(**{**params, "seed": seed}))
    if family == "nn":
        return fit_mlp(dataset, NnConfig(**{**params, "seed": seed}))
    raise ValidationError(f"unknown model family {family!r}")


def default_grid(family, dataset=None):
    """The hyperparameter grids used for hold-out selection.

    ``d2`` needs the dataset because its grid runs up to the design rank.
    """
    if family == "lr":
        return [{"alpha": float(m * 10 ** i)} for i in range(6) for m in range(1, 10)]
    if family == "d2":
        if dataset is None:
            raise ValidationError("the d2 grid depends on the training inputs")
        return [{"svd_rank": k} for k in range(1, design_rank(dataset.inputs) + 1)]
    if family == "sr":
        return [{"max_length": L, "generations": g, "primitive_set": p}
                for L in range(5, 55, 5) for g in (10, 25, 50, 75, 100)
                for p in range(1, 7)]
    if family == "nn":
        from .regress import ARCHITECTURES
        return [{"learning_rate": lr, "widths": w, "l2": l2, "dropout": d}
                for lr, w, l2, d in itertools.product(
                    (1e-4, 1e-3, 1e-2), ARCHITECTURES, (1e-5, 1e-4, 1e-3), (0.3, 0.4, 0.5))]
    raise ValidationError(f"unknown model family {family!r}")


@dataclass
class GridOutcome:
    params: dict
    r2_val: float
    parameter_count: int | None
    status: str = "ok"


def _validation_score(study, model):
    stop = study.windows.validation[1]
    e_rom = study.rom_energy(model, stop)
    return r2_val(study.window(study.e_fom, "validation"),
                  e_rom[slice(*study.windows.validation)])


def grid_search(family, grid, study, seed=0):
    """Pick the grid point whose closed ROM maximizes validation ``R^2``.

    Each point is fitted on the training targets, integrated over the training
    and validation windows and scored on the validation window.  Ties go to the
    smaller parameter count, then to the earlier grid point; runs that diverge
    score ``-inf``.  Returns ``(model, params, outcomes)``.
    """
    outcomes, best = [], None
    for pos, params in enumerate(grid):
        try:
            model = fit_family(family, params, study.dataset, seed)
        except (RomlabError, np.linalg.LinAlgError, ArithmeticError) as exc:
            outcomes.append(GridOutcome(dict(params), -math.inf, None, f"fit failed: {exc}"))
            continue
        try:
            score = _validation_score(study, model)
            status = "ok"
        except (DivergenceError, ArithmeticError) as exc:
            score, status = -math.inf, f"diverged: {exc}"
        if not np.isfinite(score):
            score = -math.inf
        outcomes.append(GridOutcome(dict(params), score, model.parameter_count, status))
        key = (score, -model.parameter_count, -pos)
        if score > -math.inf and (best is None or key > best[0]):
            best = (key, model, dict(params))
    if best is None:
        lines = "; ".join(f"{o.params}: {o.status}" for o in outcomes)
        raise SearchError(f"every grid point failed ({lines})", outcomes)
    return best[1], best[2], outcomes


@dataclass
class SeedRun:
    seed: int
    rmse_test: float
    mse_val: float
    r2_val: float
    mean_mse_tr: float
    parameter_count: int
    e_rom: np.ndarray | None = None
    model: object = None

    @property
    def diverged(self):
        return not np.isfinite(self.rmse_test)


def evaluate_model(study, model, seed=0):
    """Integrate the closed ROM over every window and score it."""
    try:
        e_rom = study.rom_energy(model)
    except (DivergenceError, ArithmeticError):
        nan = float("nan")
        return SeedRun(seed, nan, nan, nan, mean_mse_tr(model, study.dataset)
                       if model is not None else nan,
                       model.parameter_count if model is not None else 0, None, model)
    val_f, val_r = study.window(study.e_fom, "validation"), study.window(e_rom, "validation")
    test_f, test_r = study.window(study.e_fom, "test"), study.window(e_rom, "test")
    tr = mean_mse_tr(model, study.dataset) if model is not None else float("nan")
    return SeedRun(seed, rmse_test(test_f, test_r), mse_val(val_f, val_r),
                   r2_val(val_f, val_r), tr,
                   model.parameter_count if model is not None else 0, e_rom, model)


@dataclass
class MultiSeedResult:
    family: str
    params: dict
    runs: list

    @property
    def finite(self):
        return [run.rmse_test for run in self.runs if not run.diverged]

    @property
    def mean(self):
        vals = self.finite
        return float(np.mean(vals)) if vals else float("nan")

    @property
    def std(self):
        vals = self.finite
        return float(np.std(vals, ddof=1)) if len(vals) > 1 else 0.0

    @property
    def diverged_seeds(self):
        return [run.seed for run in self.runs if run.diverged]


def multi_seed(family, params, study, n_seeds=5, seeds=None):
    """Fit and score one configuration under seeds ``0..n_seeds-1``.

    Deterministic families are run once.  Diverged seeds are kept with a NaN
    score and left out of the mean and sample standard deviation.
    """
    if seeds is None:
        seeds = list(range(n_seeds)) if family in STOCHASTIC else [0]
    runs = [evaluate_model(study, fit_family(family, params, study.dataset, s), s)
            for s in seeds]
    return MultiSeedResult(family, dict(params), runs)


def occurrence_statistics(models, by_component=False):
    """Mean and sample std of term occurrences over runs.

    ``models`` holds one fitted symbolic model per run.  Counts are taken on the
    simplified expressions and summed over components unless ``by_component``;
    a term missing from a run counts as zero there.
    """
    per_run = []
    for model in models:
        trees = model.trees if hasattr(model, "trees") else [model]
        counts = {}
        for i, tree in enumerate(trees):
            for term, c in count_occurrences(simplify(tree)).items():
                key = (i + 1, term) if by_component else term
                counts[key] = counts.get(key, 0) + c
        per_run.append(counts)
    keys = sorted({k for c in per_run for k in c}, key=str)
    stats = {}
    for k in keys:
        vals = np.array([c.get(k, 0) for c in per_run], dtype=float)
        std = float(np.std(vals, ddof=1)) if len(vals) > 1 else 0.0
        stats[k] = (float(vals.mean()), std)
    return stats


# -- reports ------------------------------------------------------------------

@dataclass
class EvaluationReport:
    family: str
    params: dict
    result: MultiSeedResult
    e_fom: np.ndarray
    times: np.ndarray
    grid: list = field(default_factory=list)

    def rows(self):
        rows = []
        for run in self.result.runs:
            rows += [("rMSE_test", "test", run.seed, run.rmse_test),
                     ("MSE_val", "validation", run.seed, run.mse_val),
                     ("R2_val", "validation", run.seed, run.r2_val),
                     ("mean_MSE_tr", "train", run.seed, run.mean_mse_tr),
                     ("parameter_count", "-", run.seed, run.parameter_count)]
        rows += [("rMSE_test_mean", "test", "all", self.result.mean),
                 ("rMSE_test_std", "test", "all", self.result.std),
                 ("diverged_seeds", "test", "all", len(self.result.diverged_seeds))]
        return rows

    def summary(self):
        lines = [f"family: {self.family}",
                 f"hyperparameters: {_fmt_params(self.params)}",
                 f"seeds: {[run.seed for run in self.result.runs]}",
                 f"rMSE_test: {self.result.mean:.6e} +- {self.result.std:.6e}"]
        if self.result.diverged_seeds:
            lines.append(f"diverged seeds (nan): {self.result.diverged_seeds}")
        for o in self.grid:
            lines.append(f"grid {_fmt_params(o.params)}: R2_val={o.r2_val:.6e} "
                         f"params={o.parameter_count} {o.status}")
        return "\n".join(lines) + "\n"


def _fmt_params(params):
    return ", ".join(f"{k}={params[k]}" for k in sorted(params))


def _fmt(v):
    if isinstance(v, (float, np.floating)):
        return format(float(v), ".17g")
    return str(v)


def write_report_csv(report, path, header_lines=()):
    with open(path, "w", newline="") as fh:
        for line in header_lines:
            fh.write(f"# {line}\n")
        writer = csv.writer(fh)
        writer.writerow(["metric", "window", "seed", "value"])
        for metric, window, seed, value in report.rows():
            writer.writerow([metric, window, seed, _fmt(value)])


def write_energy_csv(times, e_fom, e_rom, path, header_lines=()):
    e_rom = np.full_like(e_fom, np.nan) if e_rom is None else e_rom
    with open(path, "w", newline="") as fh:
        for line in header_lines:
            fh.write(f"# {line}\n")
        writer = csv.writer(fh)
        writer.writerow(["t", "E_FOM", "E_ROM"])
        for row in zip(times, e_fom, e_rom):
            writer.writerow([_fmt(v) for v in row])
