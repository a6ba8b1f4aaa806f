"""Command-line driver: generate -> pod -> targets -> train -> rom-run -> evaluate.

Every stage reads and writes files in the ``--out`` directory, so ``pipeline``
is literally the stages run one after the other.
"""

import argparse
import ast
import configparser
import json
import os
import sys
from importlib import resources

import numpy as np

from . import __version__
from ._binio import fnv1a64
from .closure import compute_targets, load_dataset, save_dataset, split_windows
from .errors import DivergenceError, ParseError, RomlabError, ValidationError
from .eval import (EvaluationReport, assemble_study, evaluate_model, grid_search,
                   multi_seed, default_grid, write_energy_csv, write_report_csv)
from .fields import BurgersConfig, generate_burgers, load_ensemble, save_ensemble
from .pod import compute_pod, load_basis, save_basis
from .regress import load_model, load_symbolic, save_model, save_symbolic
from .rom import assemble_operators, load_operators, save_operators

EXIT_OK, EXIT_VALIDATION, EXIT_DIVERGENCE, EXIT_IO, EXIT_USAGE = 0, 1, 2, 3, 64

FILES = {
    "ensemble": "ensemble.bin",
    "basis": "basis.bin",
    "operators": "operators.bin",
    "dataset": "dataset.csv",
    "selection": "selection.json",
    "grid": "grid.txt",
    "model": "model",
    "rom_energy": "rom_energy.csv",
    "report": "report.csv",
    "summary": "summary.txt",
    "energy": "energy.csv",
}
STAGES = ("generate", "pod", "targets", "train", "rom-run", "evaluate")


def default_config_path():
    return str(resources.files("romlab") / "data" / "burgers.ini")


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_USAGE)


def build_parser():
    parser = _Parser(prog="romlab", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"romlab {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    for name in STAGES + ("pipeline",):
        p = sub.add_parser(name)
        p.add_argument("--config", help="INI file (defaults to the bundled Burgers study)")
        p.add_argument("--r", type=int, help="resolved ROM dimension")
        p.add_argument("--big-r", type=int, help="dimension of the reference ROM")
        p.add_argument("--family", choices=("lr", "d2", "sr", "nn"))
        p.add_argument("--seed", type=int)
        p.add_argument("--seeds", type=int, help="number of seeds for stochastic families")
        p.add_argument("--jobs", type=int, help="worker cap (fallback: ROMLAB_JOBS)")
        p.add_argument("--out", default="romlab-out", help="working directory")
        if name == "rom-run":
            p.add_argument("--no-closure", action="store_true",
                           help="run the plain Galerkin ROM")
    return parser


class PipelineConfig:
    """Flat settings assembled from the INI file and command-line overrides."""

    def __init__(self, args):
        path = args.config or default_config_path()
        cp = configparser.ConfigParser(inline_comment_prefixes=("#",))
        if not cp.read(path):
            raise OSError(f"cannot read config file {path}")
        self.config_path = path
        self.config_hash = _file_hash(path)
        gen = cp["generate"] if cp.has_section("generate") else {}
        fields = BurgersConfig.__dataclass_fields__
        self.generate = {}
        for key, value in gen.items():
            if key not in fields:
                raise ValidationError(f"unknown [generate] key {key!r}")
            kind = type(fields[key].default)
            self.generate[key] = value if kind is str else kind(ast.literal_eval(value))
        prob = cp["problem"] if cp.has_section("problem") else {}
        self.r = args.r if args.r is not None else int(prob.get("r", 3))
        self.R = args.big_r if args.big_r is not None else int(prob.get("big_r", 15))
        self.fractions = tuple(float(f) for f in prob.get("fractions", "0.25,0.25,0.5").split(","))
        step = cp["stepper"] if cp.has_section("stepper") else {}
        self.substeps = int(step.get("substeps", 10))
        self.order = int(step.get("order", 3))
        model = cp["model"] if cp.has_section("model") else {}
        self.family = args.family or model.get("family", "d2")
        self.grid_spec = model.get("grid", "full")
        self.seed = args.seed if args.seed is not None else int(model.get("seed", 0))
        self.n_seeds = args.seeds if args.seeds is not None else int(model.get("seeds", 5))
        jobs = args.jobs if args.jobs is not None else os.environ.get("ROMLAB_JOBS", 1)
        self.jobs = int(jobs)
        if self.jobs < 1:
            raise ValidationError("--jobs must be at least 1")
        self.out = args.out

    def path(self, key):
        name = FILES[key]
        if key == "model":
            name += ".txt" if self.family == "sr" else ".bin"
        return os.path.join(self.out, name)

    def check_dims(self):
        if not 1 <= self.r < self.R:
            raise ValidationError(f"need 1 <= r < R, got r={self.r}, R={self.R}")

    def grid(self, dataset):
        if self.grid_spec.strip() == "full":
            return default_grid(self.family, dataset)
        grid = ast.literal_eval(self.grid_spec)
        if not isinstance(grid, list) or not all(isinstance(g, dict) for g in grid):
            raise ValidationError("[model] grid must be 'full' or a list of dicts")
        return grid


def _file_hash(path):
    with open(path, "rb") as fh:
        return f"{fnv1a64(fh.read()):016x}"


def _manifest(cfg, inputs):
    hashes = " ".join(f"{os.path.basename(p)}:{_file_hash(p)}" for p in inputs)
    return (f"romlab {__version__} config:{cfg.config_hash} seed:{cfg.seed} "
            f"inputs: {hashes or '-'}")


def _require(cfg, *keys):
    for key in keys:
        path = cfg.path(key)
        if not os.path.exists(path):
            raise FileNotFoundError(f"missing input {path}; run the earlier stage first")
    return [cfg.path(k) for k in keys]


def _load_windows(cfg, ensemble):
    return split_windows(ensemble.n_snapshots, cfg.fractions)


def _study(cfg):
    _require(cfg, "ensemble", "basis", "operators", "dataset")
    ensemble = load_ensemble(cfg.path("ensemble"))
    dataset = load_dataset(cfg.path("dataset"))
    return assemble_study(ensemble, load_basis(cfg.path("basis")),
                          load_operators(cfg.path("operators")), dataset,
                          _load_windows(cfg, ensemble), cfg.substeps, cfg.order)


def _load_selection(cfg):
    _require(cfg, "selection")
    with open(cfg.path("selection")) as fh:
        sel = json.load(fh)
    if sel["family"] != cfg.family:
        raise ValidationError(f"selection was made for family {sel['family']!r}, "
                              f"not {cfg.family!r}")
    params = sel["params"]
    if "widths" in params:
        params["widths"] = tuple(params["widths"])
    return params


def _load_closure(cfg):
    _require(cfg, "model")
    if cfg.family == "sr":
        return load_symbolic(cfg.path("model"))
    return load_model(cfg.path("model"))


# -- stages -------------------------------------------------------------------

def stage_generate(cfg):
    ensemble = generate_burgers(BurgersConfig(**cfg.generate))
    save_ensemble(ensemble, cfg.path("ensemble"))
    return (f"generate: {ensemble.n_snapshots} snapshots of {ensemble.discretization.n} "
            f"points -> {cfg.path('ensemble')}")


def stage_pod(cfg):
    cfg.check_dims()
    _require(cfg, "ensemble")
    ensemble = load_ensemble(cfg.path("ensemble"))
    windows = _load_windows(cfg, ensemble)
    basis = compute_pod(ensemble.subset(*windows.train), cfg.R)
    save_basis(basis, cfg.path("basis"))
    return (f"pod: R={basis.rank} modes capture {basis.energy_fraction(cfg.R):.12f} of the "
            f"training energy -> {cfg.path('basis')}")


def stage_targets(cfg):
    cfg.check_dims()
    _require(cfg, "ensemble", "basis")
    ensemble = load_ensemble(cfg.path("ensemble"))
    basis = load_basis(cfg.path("basis"))
    if "Re" not in ensemble.meta:
        raise ValidationError("ensemble file carries no Reynolds number")
    ops = assemble_operators(basis, ensemble.discretization, cfg.R, ensemble.meta["Re"])
    train = ensemble.subset(*_load_windows(cfg, ensemble).train)
    dataset = compute_targets(train, basis, cfg.r, cfg.R, ops)
    save_operators(ops, cfg.path("operators"))
    save_dataset(dataset, cfg.path("dataset"))
    return (f"targets: {dataset.n_samples} samples, r={cfg.r}, R={cfg.R}, "
            f"max |tau|={np.abs(dataset.targets).max():.6e} -> {cfg.path('dataset')}")


def stage_train(cfg):
    study = _study(cfg)
    inputs = [cfg.path(k) for k in ("ensemble", "basis", "operators", "dataset")]
    model, params, outcomes = grid_search(cfg.family, cfg.grid(study.dataset), study, cfg.seed)
    if cfg.family == "sr":
        save_symbolic(model, cfg.path("model"))
    else:
        save_model(model, cfg.path("model"))
    with open(cfg.path("selection"), "w") as fh:
        json.dump({"family": cfg.family, "seed": cfg.seed, "params": params}, fh,
                  sort_keys=True, indent=1)
        fh.write("\n")
    with open(cfg.path("grid"), "w") as fh:
        fh.write(f"# {_manifest(cfg, inputs)}\n")
        for o in outcomes:
            fh.write(f"{json.dumps(o.params, sort_keys=True)}\tR2_val={o.r2_val!r}\t"
                     f"parameter_count={o.parameter_count}\t{o.status}\n")
    best = max(o.r2_val for o in outcomes)
    return (f"train: {cfg.family} selected {json.dumps(params, sort_keys=True)} "
            f"(R2_val={best:.6f}) from {len(outcomes)} grid points -> {cfg.path('model')}")


def stage_rom_run(cfg, no_closure=False):
    study = _study(cfg)
    inputs = [cfg.path(k) for k in ("ensemble", "basis", "operators", "dataset")]
    model = None
    if not no_closure:
        model = _load_closure(cfg)
        inputs.append(cfg.path("model"))
    run = evaluate_model(study, model, cfg.seed)
    write_energy_csv(study.times, study.e_fom, run.e_rom, cfg.path("rom_energy"),
                     [_manifest(cfg, inputs),
                      "status: " + ("diverged, E_ROM non-finite" if run.diverged else "ok")])
    if run.diverged:
        raise DivergenceError(f"rom-run: closed ROM diverged; see {cfg.path('rom_energy')}")
    label = "G-ROM" if model is None else f"{cfg.family} closure"
    return f"rom-run: {label} rMSE_test={run.rmse_test:.6e} -> {cfg.path('rom_energy')}"


def stage_evaluate(cfg):
    study = _study(cfg)
    params = _load_selection(cfg)
    inputs = [cfg.path(k) for k in ("ensemble", "basis", "operators", "dataset", "selection")]
    result = multi_seed(cfg.family, params, study, cfg.n_seeds)
    report = EvaluationReport(cfg.family, params, result, study.e_fom, study.times)
    header = [_manifest(cfg, inputs)]
    write_report_csv(report, cfg.path("report"), header)
    with open(cfg.path("summary"), "w") as fh:
        fh.write(f"# {header[0]}\n")
        fh.write(report.summary())
        base = evaluate_model(study, None)
        fh.write(f"G-ROM rMSE_test: {base.rmse_test:.6e}\n")
    first = next((run for run in result.runs if not run.diverged), None)
    write_energy_csv(study.times, study.e_fom, first.e_rom if first else None,
                     cfg.path("energy"), header)
    return (f"evaluate: {cfg.family} rMSE_test={result.mean:.6e} +- {result.std:.6e} over "
            f"{len(result.runs)} run(s) -> {cfg.path('report')}")


def run_subcommand(argv=None):
    """Parse ``argv``, run the requested stage(s) and return the exit code."""
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else EXIT_USAGE
    try:
        cfg = PipelineConfig(args)
        os.makedirs(cfg.out, exist_ok=True)
        if args.command == "pipeline":
            for name in STAGES:
                print(_dispatch(cfg, name, args))
        else:
            print(_dispatch(cfg, args.command, args))
    except DivergenceError as exc:
        print(f"romlab: divergence: {exc}", file=sys.stderr)
        return EXIT_DIVERGENCE
    except ValidationError as exc:
        print(f"romlab: invalid input: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except (OSError, ParseError) as exc:
        print(f"romlab: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (RomlabError, ValueError) as exc:
        print(f"romlab: error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    return EXIT_OK


def _dispatch(cfg, name, args):
    if name == "rom-run":
        return stage_rom_run(cfg, getattr(args, "no_closure", False))
    return {"generate": stage_generate, "pod": stage_pod, "targets": stage_targets,
            "train": stage_train, "evaluate": stage_evaluate}[name](cfg)


def main():
    sys.exit(run_subcommand())


if __name__ == "__main__":
    main()
