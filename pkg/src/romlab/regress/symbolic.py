"""Symbolic-regression closures: one evolved expression per component."""

import numpy as np

from ..errors import ParseError
from . import expr
from .base import ClosureModel
from .gp import SrConfig, config_dict, run_gp


class SymbolicModel(ClosureModel):
    kind = "symbolic"

    def __init__(self, trees, meta=None):
        super().__init__(len(trees), meta)
        self.trees = [t.copy() for t in trees]

    @property
    def parameter_count(self):
        return sum(expr.count_constants(t) for t in self.trees)

    def _predict(self, U):
        return np.column_stack([expr.evaluate(t, U) for t in self.trees])

    def expressions(self):
        return [expr.to_string(t) for t in self.trees]

    def simplified(self):
        return SymbolicModel([expr.simplify(t) for t in self.trees], self.meta)


def fit_symbolic(dataset, config=None, **overrides):
    """Run GP independently for every closure component.

    Component ``i`` uses a seed spawned from ``config.seed``, so a fixed config
    always returns the same expressions.
    """
    cfg = config or SrConfig()
    if overrides:
        cfg = SrConfig(**{**config_dict(cfg), **overrides})
    seeds = np.random.SeedSequence(cfg.seed).generate_state(dataset.r)
    trees, fits, infos = [], [], []
    for i in range(dataset.r):
        tree, fit, info = run_gp(dataset.inputs, dataset.targets[:, i], cfg,
                                 seed=int(seeds[i]))
        trees.append(tree)
        fits.append(fit)
        infos.append(info)
    meta = {"config": config_dict(cfg), "fitness": fits,
            "generations_run": [len(info["history"]) for info in infos],
            "constant_targets": [info["constant_target"] for info in infos]}
    return SymbolicModel(trees, meta)


def save_symbolic(model, path):
    """One expression per line, component order."""
    with open(path, "w") as fh:
        for line in model.expressions():
            fh.write(line + "\n")


def load_symbolic(path):
    with open(path) as fh:
        lines = [ln.strip() for ln in fh if ln.strip() and not ln.startswith("#")]
    if not lines:
        raise ParseError(f"{path}: no expressions")
    trees = [expr.parse(ln) for ln in lines]
    r = len(trees)
    for t in trees:
        for n in expr.nodes(t):
            if n.op == "var" and n.index >= r:
                raise ParseError(f"{path}: u{n.index + 1} exceeds r={r}")
    return SymbolicModel(trees)
