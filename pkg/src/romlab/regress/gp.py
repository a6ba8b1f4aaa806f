"""Genetic-programming symbolic regression with per-individual constant fitting.

Each generation: offspring are bred by size-5 tournaments, subtree crossover
and point/subtree mutation; every new individual has its numeric leaves tuned
by a few Levenberg-Marquardt iterations and is scored by
``1 - SSE / SST``.  The best individual ever seen is returned.
"""

import random
import warnings
from dataclasses import asdict, dataclass

import numpy as np

from ..errors import ValidationError
from . import expr
from .lm import levenberg_marquardt

MAX_LENGTHS = tuple(range(5, 55, 5))
GENERATIONS = (10, 25, 50, 75, 100)
PERFECT = 1.0 - 1e-12


@dataclass(frozen=True)
class SrConfig:
    """GP settings; the variation rates and elitism are common GP defaults."""

    primitive_set: int = 2
    max_length: int = 25
    generations: int = 50
    population: int = 1000
    tournament: int = 5
    lm_iterations: int = 10
    max_depth: int = 5
    crossover_prob: float = 0.9
    mutation_prob: float = 0.25
    elitism: int = 1
    lm_budget: int | None = None
    seed: int = 0

    def __post_init__(self):
        if self.primitive_set not in expr.PRIMITIVE_SETS:
            raise ValidationError(f"unknown primitive set {self.primitive_set}")
        if self.max_length < 1 or self.max_depth < 1:
            raise ValidationError("length and depth caps must be positive")
        if self.generations < 1 or self.population < 2 or self.tournament < 1:
            raise ValidationError("generations, population and tournament must be positive")

    @property
    def on_default_grid(self):
        """True when the tuned settings lie on the default search grids."""
        return (self.max_length in MAX_LENGTHS and self.generations in GENERATIONS
                and self.population == 1000 and self.tournament == 5
                and self.lm_iterations == 10 and self.max_depth == 5)


def fitness_from_sse(sse, sst):
    """``1 - SSE/SST``; a constant target scores 1 only when fit exactly."""
    if not np.isfinite(sse):
        return -np.inf
    if sst == 0.0:
        return 1.0 if sse <= 1e-24 else -np.inf
    return 1.0 - sse / sst


class _Engine:
    def __init__(self, X, y, cfg, seed):
        self.X = np.ascontiguousarray(X, dtype=float)
        self.y = np.asarray(y, dtype=float)
        self.cfg = cfg
        self.rng = random.Random(seed)
        self.functions = expr.PRIMITIVE_SETS[cfg.primitive_set]
        self.n_vars = self.X.shape[1]
        self.sst = float(np.sum((self.y - self.y.mean()) ** 2))
        # a constant column leaves only round-off in the centered values
        if self.sst <= self.y.size * (8 * np.finfo(float).eps * np.max(np.abs(self.y), initial=0)) ** 2:
            self.sst = 0.0
        self.cache = {}
        self.lm_calls = 0

    # -- construction -----------------------------------------------------
    def terminal(self):
        if self.rng.random() < 0.3:
            return expr.Node.const(self.rng.uniform(-1.0, 1.0))
        return expr.Node.var(self.rng.randrange(self.n_vars))

    def random_tree(self, max_depth, full, budget):
        """Grow/full tree with at most ``max_depth`` levels and ``budget`` nodes."""
        if max_depth <= 1 or budget < 2:
            return self.terminal()
        if not full and self.rng.random() < 0.3:
            return self.terminal()
        choices = [f for f in self.functions if expr.ARITY[f] + 1 <= budget]
        if not choices:
            return self.terminal()
        op = self.rng.choice(choices)
        if expr.ARITY[op] == 1:
            return expr.Node(op, [self.random_tree(max_depth - 1, full, budget - 1)])
        left_budget = (budget - 1) // 2
        left = self.random_tree(max_depth - 1, full, left_budget)
        right = self.random_tree(max_depth - 1, full,
                                 budget - 1 - expr.length(left))
        return expr.Node(op, [left, right])

    def initial_population(self):
        cfg = self.cfg
        pop = []
        depths = list(range(2, cfg.max_depth + 1))
        i = 0
        while len(pop) < cfg.population:
            d = depths[i % len(depths)]
            tree = self.random_tree(d, full=(i // len(depths)) % 2 == 0,
                                    budget=cfg.max_length)
            i += 1
            if self.valid(tree):
                pop.append(tree)
        return pop

    def valid(self, tree):
        return (expr.depth(tree) <= self.cfg.max_depth
                and expr.length(tree) <= self.cfg.max_length)

    # -- variation --------------------------------------------------------
    def pick_node(self, tree):
        """Random (parent, child index) slot; internal nodes favored 9:1."""
        slots = []
        stack = [(None, 0, tree)]
        while stack:
            parent, idx, node = stack.pop()
            slots.append((parent, idx, node))
            for j, c in enumerate(node.children):
                stack.append((node, j, c))
        internal = [s for s in slots if s[2].children]
        if internal and self.rng.random() < 0.9:
            return self.rng.choice(internal)
        return self.rng.choice([s for s in slots if not s[2].children])

    @staticmethod
    def replace(root, slot, new):
        parent, idx, _ = slot
        if parent is None:
            return new
        parent.children[idx] = new
        return root

    def crossover(self, a, b):
        for _ in range(5):
            child = a.copy()
            slot = self.pick_node(child)
            donor = self.pick_node(b)[2].copy()
            child = self.replace(child, slot, donor)
            if self.valid(child):
                return child
        return a.copy()

    def mutate(self, tree):
        for _ in range(5):
            child = tree.copy()
            if self.rng.random() < 0.5:
                self.point_mutation(child)
            else:
                slot = self.pick_node(child)
                room = self.cfg.max_length - expr.length(child) + expr.length(slot[2])
                sub = self.random_tree(self.rng.randint(1, 3), full=False, budget=max(room, 1))
                child = self.replace(child, slot, sub)
            if self.valid(child):
                return child
        return tree

    def point_mutation(self, tree):
        node = self.rng.choice(expr.nodes(tree))
        if node.op == "const":
            node.value += self.rng.gauss(0.0, 1.0)
        elif node.op == "var":
            node.index = self.rng.randrange(self.n_vars)
        else:
            same = [f for f in self.functions
                    if expr.ARITY[f] == expr.ARITY[node.op] and f != node.op]
            if same:
                node.op = self.rng.choice(same)

    def tournament(self, fitness):
        n = len(fitness)
        best = self.rng.randrange(n)
        for _ in range(self.cfg.tournament - 1):
            j = self.rng.randrange(n)
            if fitness[j] > fitness[best]:
                best = j
        return best

    # -- evaluation -------------------------------------------------------
    def evaluate(self, tree, optimize=True):
        key = expr.to_string(tree)
        hit = self.cache.get(key)
        if hit is not None:
            expr.set_params(tree, hit[0])
            return hit[1]
        X, y = self.X, self.y
        if optimize and self.cfg.lm_iterations > 0:
            self.lm_calls += 1

            def model(p, jacobian):
                expr.set_params(tree, p)
                if jacobian:
                    return expr.evaluate_with_jacobian(tree, X)
                return expr.evaluate(tree, X)

            p, sse = levenberg_marquardt(model, y, expr.get_params(tree),
                                         self.cfg.lm_iterations)
            expr.set_params(tree, p)
        else:
            with np.errstate(all="ignore"):
                res = y - expr.evaluate(tree, X)
                sse = float(res @ res)
        fit = fitness_from_sse(sse, self.sst)
        self.cache[key] = (expr.get_params(tree), fit)
        return fit

    def run(self):
        cfg = self.cfg
        pop = self.initial_population()
        fitness = [self.evaluate(t) for t in pop]
        best_i = int(np.argmax(fitness))
        best, best_fit = pop[best_i].copy(), fitness[best_i]
        history = [best_fit]
        for _ in range(cfg.generations - 1):
            if best_fit >= PERFECT:
                break
            order = sorted(range(len(pop)), key=lambda i: -fitness[i])
            new_pop = [pop[i].copy() for i in order[:cfg.elitism]]
            new_fit = [fitness[i] for i in order[:cfg.elitism]]
            budget = cfg.lm_budget
            while len(new_pop) < cfg.population:
                a = pop[self.tournament(fitness)]
                if self.rng.random() < cfg.crossover_prob:
                    child = self.crossover(a, pop[self.tournament(fitness)])
                else:
                    child = a.copy()
                if self.rng.random() < cfg.mutation_prob:
                    child = self.mutate(child)
                optimize = budget is None or budget > 0
                if budget is not None:
                    budget -= 1
                new_pop.append(child)
                new_fit.append(self.evaluate(child, optimize))
            pop, fitness = new_pop, new_fit
            i = int(np.argmax(fitness))
            if fitness[i] > best_fit:
                best, best_fit = pop[i].copy(), fitness[i]
            history.append(best_fit)
        return best, best_fit, history


def run_gp(X, y, config, seed=None):
    """Evolve one expression for target ``y``; returns ``(tree, fitness, info)``."""
    seed = config.seed if seed is None else seed
    y = np.asarray(y, dtype=float)
    engine = _Engine(X, y, config, seed)
    if engine.sst == 0.0:
        warnings.warn("constant target column: fitness is 1 only for an exact fit",
                      RuntimeWarning, stacklevel=2)
    tree, fit, history = engine.run()
    info = {"history": history, "lm_calls": engine.lm_calls,
            "constant_target": engine.sst == 0.0}
    return tree, fit, info


def config_dict(config):
    return asdict(config)
