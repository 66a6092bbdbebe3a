"""Differential-evolution training of QAOA angles.

The training objective is the shot-averaged cost returned by the
trajectory sampler, so it is stochastic by construction.  Instead of
drawing fresh shots on every call we pin one sampling seed per
(generation, member) slot; the whole run is then deterministic and
regression-testable, at the price of a small frozen shot-noise bias.
"""

from __future__ import annotations

import inspect
import json
import math
from typing import Callable, List, Optional, Sequence, Tuple, Union

import numpy as np

from .circuit import ParamCircuit, compile_qaoa
from .errors import InvalidConfig, MissingVariable, ParseError
from .pboly import BoolPoly
from .sim import NoiseModel, _seed_tuple, estimate_expectation, sample
from .transform import Hamiltonian

Seed = Union[int, Sequence[int]]

TWO_PI = 2.0 * math.pi


class DeConfig:
    """Knobs for DE/rand/1/bin.

    `dim` is the search-space dimension (2p for QAOA: all gammas, then
    all betas).  `population_size` defaults to 15 per dimension.  The
    run stops after `max_generations`, or earlier once the spread
    (max - min) of the population objectives falls below `tol`.  Every
    coordinate lives in the closed box `bounds`, default [0, 2*pi].
    """

    __slots__ = ("dim", "population_size", "f", "cr", "max_generations",
                 "tol", "bounds", "seed")

    def __init__(self, dim: int, population_size: Optional[int] = None,
                 f: float = 0.8, cr: float = 0.9, max_generations: int = 100,
                 tol: float = 1e-3, bounds: Tuple[float, float] = (0.0, TWO_PI),
                 seed: Seed = 0):
        if dim < 1:
            raise InvalidConfig(f"dimension must be >= 1, got {dim}")
        if population_size is None:
            population_size = 15 * dim
        if population_size < 4:
            raise InvalidConfig(
                f"population_size must be >= 4 for rand/1/bin, got {population_size}")
        if not 0.0 < f <= 2.0:
            raise InvalidConfig(f"weight f must lie in (0, 2], got {f}")
        if not 0.0 <= cr <= 1.0:
            raise InvalidConfig(f"crossover cr must lie in [0, 1], got {cr}")
        if max_generations < 1:
            raise InvalidConfig(f"max_generations must be >= 1, got {max_generations}")
        if tol < 0.0:
            raise InvalidConfig(f"tol must be nonnegative, got {tol}")
        lo, hi = float(bounds[0]), float(bounds[1])
        if not lo < hi:
            raise InvalidConfig(f"bounds must satisfy lower < upper, got [{lo}, {hi}]")
        object.__setattr__(self, "dim", int(dim))
        object.__setattr__(self, "population_size", int(population_size))
        object.__setattr__(self, "f", float(f))
        object.__setattr__(self, "cr", float(cr))
        object.__setattr__(self, "max_generations", int(max_generations))
        object.__setattr__(self, "tol", float(tol))
        object.__setattr__(self, "bounds", (lo, hi))
        object.__setattr__(self, "seed", _seed_tuple(seed))

    def __setattr__(self, key, value):
        raise AttributeError("DeConfig is immutable")

    def replace(self, **kw) -> "DeConfig":
        fields = {k: getattr(self, k) for k in self.__slots__}
        fields.update(kw)
        return DeConfig(**fields)

    def __repr__(self):
        return (f"DeConfig(dim={self.dim}, np={self.population_size}, "
                f"f={self.f}, cr={self.cr}, gens<={self.max_generations}, "
                f"tol={self.tol}, seed={self.seed})")


class OptResult:
    """Outcome of one DE run.

    `history` holds the population-best objective after initialization
    and after each completed generation, so it is non-increasing.
    `best_objective` is the minimum over every candidate evaluated.
    """

    __slots__ = ("best_params", "best_objective", "generations_used",
                 "evaluation_count", "history")

    def __init__(self, best_params: np.ndarray, best_objective: float,
                 generations_used: int, evaluation_count: int,
                 history: Sequence[float]):
        object.__setattr__(self, "best_params", np.array(best_params, dtype=float))
        object.__setattr__(self, "best_objective", float(best_objective))
        object.__setattr__(self, "generations_used", int(generations_used))
        object.__setattr__(self, "evaluation_count", int(evaluation_count))
        object.__setattr__(self, "history", [float(h) for h in history])
        self.best_params.setflags(write=False)

    def __setattr__(self, key, value):
        raise AttributeError("OptResult is immutable")

    def to_json(self) -> str:
        doc = {
            "best_params": [float(x) for x in self.best_params],
            "best_objective": self.best_objective,
            "generations_used": self.generations_used,
            "evaluation_count": self.evaluation_count,
            "history": self.history,
        }
        return json.dumps(doc, indent=2, sort_keys=True)

    @staticmethod
    def from_json(text: str) -> "OptResult":
        try:
            doc = json.loads(text)
            return OptResult(np.array(doc["best_params"], dtype=float),
                             doc["best_objective"], doc["generations_used"],
                             doc["evaluation_count"], doc["history"])
        except (KeyError, TypeError, ValueError) as exc:
            raise ParseError(f"bad optimizer result JSON: {exc}") from exc

    def __repr__(self):
        return (f"OptResult(best={self.best_objective:.6g}, "
                f"gens={self.generations_used}, evals={self.evaluation_count})")


def _accepts_key(objective: Callable) -> bool:
    try:
        params = inspect.signature(objective).parameters
    except (TypeError, ValueError):
        return False
    if "key" in params:
        return True
    return any(p.kind == inspect.Parameter.VAR_KEYWORD for p in params.values())


def minimize(objective: Callable[..., float], cfg: DeConfig) -> OptResult:
    """DE/rand/1/bin over the box given by cfg.bounds.

    If the objective accepts a `key` keyword it receives `(generation,
    member)` for each candidate, letting stochastic objectives pin their
    own randomness.  Selection is greedy (accept on <=) and applied
    synchronously at generation boundaries, so within one generation
    every trial competes against the previous population.
    """
    if not callable(objective):
        raise InvalidConfig("objective must be callable")
    keyed = _accepts_key(objective)

    def call(x, gen, member):
        if keyed:
            return float(objective(x, key=(gen, member)))
        return float(objective(x))

    rng = np.random.default_rng(list(cfg.seed))
    np_, dim = cfg.population_size, cfg.dim
    lo, hi = cfg.bounds

    pop = rng.uniform(lo, hi, size=(np_, dim))
    objs = np.array([call(pop[i], 0, i) for i in range(np_)])
    evals = np_
    history = [float(objs.min())]

    gens_used = cfg.max_generations
    for gen in range(1, cfg.max_generations + 1):
        if float(objs.max() - objs.min()) < cfg.tol:
            gens_used = gen
            break

        # Draw all decisions for this generation before any evaluation,
        # so the outcome cannot depend on evaluation order.
        r = np.empty((np_, 3), dtype=np.int64)
        for i in range(np_):
            picks = rng.choice(np_ - 1, size=3, replace=False)
            r[i] = picks + (picks >= i)
        cross = rng.random((np_, dim)) < cfg.cr
        jrand = rng.integers(0, dim, size=np_)
        cross[np.arange(np_), jrand] = True

        mutant = pop[r[:, 0]] + cfg.f * (pop[r[:, 1]] - pop[r[:, 2]])
        np.clip(mutant, lo, hi, out=mutant)
        trials = np.where(cross, mutant, pop)

        new_pop = pop.copy()
        new_objs = objs.copy()
        for i in range(np_):
            t_obj = call(trials[i], gen, i)
            evals += 1
            if t_obj <= objs[i]:
                new_pop[i] = trials[i]
                new_objs[i] = t_obj
        pop, objs = new_pop, new_objs
        history.append(float(objs.min()))

    best = int(np.argmin(objs))
    return OptResult(pop[best], float(objs[best]), gens_used, evals, history)


def train_qaoa(h: Hamiltonian, f: BoolPoly, p: int, nm: NoiseModel,
               m: int = 2048, cfg: Optional[DeConfig] = None) -> OptResult:
    """Train level-p QAOA angles for h against the cost polynomial f.

    The candidate vector is (gamma_1..gamma_p, beta_1..beta_p).  Each
    candidate is scored by sampling m shots under nm with the seed
    (cfg.seed, generation, member) and averaging f over the outcomes.
    Training runs under the same noise configuration used for any later
    evaluation; there is no separate calibration pass.
    """
    missing = [v for v in f.variables() if v not in h.var_map]
    if missing:
        raise MissingVariable(
            f"cost variables not represented in the Hamiltonian: "
            f"{', '.join(str(v) for v in sorted(missing))}")
    if cfg is None:
        cfg = DeConfig(dim=2 * p)
    elif cfg.dim != 2 * p:
        raise InvalidConfig(
            f"cfg.dim = {cfg.dim} but level p = {p} needs {2 * p} parameters")

    circuit = compile_qaoa(h, p)
    base = cfg.seed

    def objective(x, key):
        gen, member = key
        bound = circuit.bind(x[:p], x[p:])
        shots = sample(bound, nm, m, seed=(*base, gen, member))
        return estimate_expectation(shots, f, h.var_map)

    return minimize(objective, cfg)
