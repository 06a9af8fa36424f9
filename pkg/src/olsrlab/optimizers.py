"""Metaheuristic search over the protocol parameter box.

Five strategies share one budget-exact driver: particle swarm (PSO),
differential evolution (DE, rand/1/bin), a real-coded genetic algorithm
(GA), simulated annealing (SA), and uniform random search (RAND) as the
baseline.  A run performs exactly ``budget`` objective evaluations, no
matter how the algorithm's generation structure divides it: a final
partial generation is evaluated then truncated mid-stream.

Each run is reproducible from its seed and yields a :class:`RunRecord`
holding the full evaluation trajectory, the best candidate, and wall
clock timings.
"""

from __future__ import annotations

import json
import math
import time
from dataclasses import dataclass

import numpy as np

from .fitness import DEFAULT_WEIGHTS, Evaluation, FitnessWeights, OlsrObjective
from .netsim import QosMetrics
from .olsr import OlsrConfig
from .params import ParamSpace, decode_params, default_param_space

ALGORITHMS = ("PSO", "DE", "GA", "SA", "RAND")
POPULATION_BASED = ("PSO", "DE", "GA")

RUN_FORMAT = "olsrlab-run v1"


# -- benchmark objectives used for sanity campaigns -----------------------

def sphere(x) -> float:
    v = np.asarray(x, dtype=float)
    return float(np.sum(v * v))


def rastrigin(x) -> float:
    v = np.asarray(x, dtype=float)
    return float(10.0 * v.size + np.sum(v * v - 10.0 * np.cos(2.0 * math.pi * v)))


BENCHMARKS = {"sphere": sphere, "rastrigin": rastrigin}


@dataclass(frozen=True)
class OptimizerConfig:
    algorithm: str
    budget: int = 1000
    population: int = 10
    seed: int = 0
    # PSO
    inertia: float = 0.50
    cognitive_coef: float = 2.0
    social_coef: float = 2.0
    # DE; the scale factor is the classic recommended 0.5: small enough to
    # refine, large enough that the population cannot collapse prematurely
    crossover_rate: float = 0.90
    diff_weight: float = 0.50
    # GA
    crossover_prob: float = 0.80
    mutation_prob: float = 0.01
    # SA
    temp_decay: float = 0.80
    epoch_length: int = 20
    neighborhood_sigma: float = 0.10
    calibration_probes: int = 50

    def validate(self) -> "OptimizerConfig":
        if self.algorithm not in ALGORITHMS:
            raise ValueError(f"unknown algorithm {self.algorithm!r}; pick from {ALGORITHMS}")
        if self.budget < 1:
            raise ValueError("budget must be at least 1")
        if self.algorithm in POPULATION_BASED:
            minimum = 4 if self.algorithm == "DE" else 2
            if self.population < minimum:
                raise ValueError(f"{self.algorithm} needs a population of at least {minimum}")
            if self.budget < self.population:
                raise ValueError("budget must cover at least one full generation")
        for name in ("crossover_rate", "crossover_prob", "mutation_prob"):
            p = getattr(self, name)
            if not 0.0 <= p <= 1.0:
                raise ValueError(f"{name}={p!r} outside [0, 1]")
        if not 0.0 < self.temp_decay <= 1.0:
            raise ValueError("temp_decay must be in (0, 1]")
        if self.epoch_length < 1 or self.calibration_probes < 0:
            raise ValueError("epoch_length must be >= 1 and calibration_probes >= 0")
        return self


@dataclass
class RunRecord:
    """Everything one optimization run produced."""

    algorithm: str
    seed: int
    trajectory: list[tuple[int, float, tuple[float, ...]]]
    best: Evaluation
    time_to_best: float
    total_time: float

    @property
    def best_cost(self) -> float:
        return self.best.cost

    def best_so_far(self) -> list[float]:
        """Monotone best-cost series aligned with the trajectory."""
        series = []
        best = math.inf
        for _, cost, _ in self.trajectory:
            best = min(best, cost)
            series.append(best)
        return series

    def to_text(self, include_timing: bool = True) -> str:
        header = {
            "algorithm": self.algorithm,
            "seed": self.seed,
            "budget": len(self.trajectory),
        }
        summary = {
            "best_index": next(
                i for i, c, _ in self.trajectory if c == self.best.cost
            ),
            "best_cost": self.best.cost,
            "best_config": _config_to_dict(self.best.config),
            "best_metrics": _metrics_to_dict(self.best.metrics),
            "best_seed": self.best.seed,
        }
        if include_timing:
            summary["time_to_best"] = self.time_to_best
            summary["total_time"] = self.total_time
            summary["best_wall_time"] = self.best.wall_time
        lines = [RUN_FORMAT, json.dumps(header, sort_keys=True)]
        for index, cost, candidate in self.trajectory:
            lines.append(f"{index} {cost!r} " + " ".join(repr(v) for v in candidate))
        lines.append(json.dumps(summary, sort_keys=True))
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "RunRecord":
        lines = text.strip().splitlines()
        if not lines or lines[0] != RUN_FORMAT:
            raise ValueError(f"unsupported run record format: {lines[:1]!r}")
        header = json.loads(lines[1])
        summary = json.loads(lines[-1])
        trajectory = []
        for line in lines[2:-1]:
            parts = line.split()
            trajectory.append(
                (int(parts[0]), float(parts[1]), tuple(float(p) for p in parts[2:]))
            )
        metrics = summary.get("best_metrics")
        best = Evaluation(
            config=OlsrConfig(**summary["best_config"]),
            metrics=QosMetrics(**metrics) if metrics is not None else None,
            cost=summary["best_cost"],
            seed=summary.get("best_seed", header["seed"]),
            wall_time=summary.get("best_wall_time", 0.0),
        )
        return cls(
            algorithm=header["algorithm"],
            seed=header["seed"],
            trajectory=trajectory,
            best=best,
            time_to_best=summary.get("time_to_best", 0.0),
            total_time=summary.get("total_time", 0.0),
        )


def _config_to_dict(config: OlsrConfig) -> dict:
    return {
        "hello_interval": config.hello_interval,
        "refresh_interval": config.refresh_interval,
        "tc_interval": config.tc_interval,
        "willingness": config.willingness,
        "neighb_hold_time": config.neighb_hold_time,
        "top_hold_time": config.top_hold_time,
        "mid_hold_time": config.mid_hold_time,
        "dup_hold_time": config.dup_hold_time,
    }


def _metrics_to_dict(metrics: QosMetrics | None) -> dict | None:
    if metrics is None:
        return None
    return {name: getattr(metrics, name) for name in QosMetrics.__dataclass_fields__}


# -- budget bookkeeping ----------------------------------------------------

class _BudgetExhausted(Exception):
    pass


class _Recorder:
    """Wraps the objective, enforces the budget, and logs the trajectory."""

    def __init__(self, objective, budget: int):
        self.objective = objective
        self.budget = budget
        self.trajectory: list[tuple[int, float, tuple[float, ...]]] = []
        self.best_cost = math.inf
        self.best_x: tuple[float, ...] | None = None
        self.started = time.perf_counter()
        self.time_to_best = 0.0

    def __call__(self, x) -> float:
        if len(self.trajectory) >= self.budget:
            raise _BudgetExhausted
        candidate = tuple(float(v) for v in x)
        cost = float(self.objective(candidate))
        self.trajectory.append((len(self.trajectory), cost, candidate))
        if cost < self.best_cost:
            self.best_cost = cost
            self.best_x = candidate
            self.time_to_best = time.perf_counter() - self.started
        return cost


# -- step functions ---------------------------------------------------------

def pso_step(positions, velocities, personal_best, global_best, space: ParamSpace,
             rng, inertia: float = 0.50, cognitive_coef: float = 2.0,
             social_coef: float = 2.0):
    """One velocity/position update of the whole swarm (no evaluation).

    Velocities are clamped to +-(upper-lower) per dimension; positions are
    clamped into the box and the velocity of a clamped component is zeroed.
    """
    lo = np.asarray(space.lower)
    hi = np.asarray(space.upper)
    span = hi - lo
    shape = positions.shape
    r1 = rng.random(shape)
    r2 = rng.random(shape)
    vel = (inertia * velocities
           + cognitive_coef * r1 * (personal_best - positions)
           + social_coef * r2 * (global_best - positions))
    vel = np.clip(vel, -span, span)
    pos = positions + vel
    out = (pos < lo) | (pos > hi)
    pos = np.clip(pos, lo, hi)
    vel = np.where(out, 0.0, vel)
    return pos, vel


def de_step(population, costs, evaluate, space: ParamSpace, rng,
            crossover_rate: float = 0.90, diff_weight: float = 0.50):
    """One rand/1/bin generation with greedy (<=) selection, in place."""
    lo = np.asarray(space.lower)
    hi = np.asarray(space.upper)
    size, dims = population.shape
    for i in range(size):
        others = [j for j in range(size) if j != i]
        r1, r2, r3 = rng.choice(others, size=3, replace=False)
        mutant = population[r1] + diff_weight * (population[r2] - population[r3])
        cross = rng.random(dims) < crossover_rate
        cross[rng.integers(dims)] = True
        trial = np.clip(np.where(cross, mutant, population[i]), lo, hi)
        cost = evaluate(trial)
        if cost <= costs[i]:
            population[i] = trial
            costs[i] = cost
    return population, costs


def ga_step(population, costs, evaluate, space: ParamSpace, rng,
            crossover_prob: float = 0.80, mutation_prob: float = 0.01):
    """One generational replacement: tournaments, blend crossover, reset
    mutation, elitism of one.  The elite is re-evaluated with the rest so
    every generation costs exactly ``population`` evaluations."""
    lo = np.asarray(space.lower)
    hi = np.asarray(space.upper)
    size, dims = population.shape

    def tournament():
        i, j = rng.integers(0, size, size=2)
        return population[i] if costs[i] <= costs[j] else population[j]

    children = [population[int(np.argmin(costs))].copy()]
    while len(children) < size:
        p1, p2 = tournament(), tournament()
        if rng.random() < crossover_prob:
            alpha = rng.random()
            c1 = alpha * p1 + (1.0 - alpha) * p2
            c2 = (1.0 - alpha) * p1 + alpha * p2
        else:
            c1, c2 = p1.copy(), p2.copy()
        for child in (c1, c2):
            if len(children) >= size:
                break
            mask = rng.random(dims) < mutation_prob
            for d in np.nonzero(mask)[0]:
                child[d] = rng.uniform(lo[d], hi[d])
            children.append(np.clip(child, lo, hi))
    new_pop = np.stack(children)
    new_costs = np.array([evaluate(c) for c in new_pop])
    return new_pop, new_costs


def sa_step(current, current_cost, temperature, step_index, evaluate,
            space: ParamSpace, rng, neighborhood_sigma: float = 0.10,
            temp_decay: float = 0.80, epoch_length: int = 20):
    """One annealing move: Gaussian neighbor, Metropolis acceptance, and
    geometric cooling every ``epoch_length`` steps."""
    lo = np.asarray(space.lower)
    hi = np.asarray(space.upper)
    neighbor = np.clip(current + rng.normal(0.0, neighborhood_sigma * (hi - lo)), lo, hi)
    cost = evaluate(neighbor)
    delta = cost - current_cost
    if delta <= 0 or rng.random() < math.exp(-delta / temperature):
        current, current_cost = neighbor, cost
    if (step_index + 1) % epoch_length == 0:
        temperature *= temp_decay
    return current, current_cost, temperature


# -- drivers ----------------------------------------------------------------

def _init_population(space: ParamSpace, rng, size: int):
    lo = np.asarray(space.lower)
    hi = np.asarray(space.upper)
    return rng.uniform(lo, hi, size=(size, len(space)))


def _drive_rand(rec, space, cfg, rng):
    for _ in range(cfg.budget):
        rec(space.sample(rng))


def _drive_pso(rec, space, cfg, rng):
    pop = cfg.population
    positions = _init_population(space, rng, pop)
    velocities = np.zeros_like(positions)
    costs = np.array([rec(x) for x in positions])
    pbest = positions.copy()
    pbest_costs = costs.copy()
    g = int(np.argmin(pbest_costs))
    while True:
        positions, velocities = pso_step(
            positions, velocities, pbest, pbest[g], space, rng,
            cfg.inertia, cfg.cognitive_coef, cfg.social_coef,
        )
        for i in range(pop):
            cost = rec(positions[i])
            if cost <= pbest_costs[i]:
                pbest_costs[i] = cost
                pbest[i] = positions[i]
            if cost < pbest_costs[g]:
                g = i


def _drive_de(rec, space, cfg, rng):
    population = _init_population(space, rng, cfg.population)
    costs = np.array([rec(x) for x in population])
    while True:
        population, costs = de_step(population, costs, rec, space, rng,
                                    cfg.crossover_rate, cfg.diff_weight)


def _drive_ga(rec, space, cfg, rng):
    population = _init_population(space, rng, cfg.population)
    costs = np.array([rec(x) for x in population])
    while True:
        population, costs = ga_step(population, costs, rec, space, rng,
                                    cfg.crossover_prob, cfg.mutation_prob)


def _drive_sa(rec, space, cfg, rng):
    lo = np.asarray(space.lower)
    hi = np.asarray(space.upper)
    current = np.asarray(space.sample(rng))
    current_cost = rec(current)
    # temperature calibration: probe the neighborhood of the start point and
    # pick T0 so a typical uphill move is accepted with probability ~0.8
    uphill = []
    best = (current_cost, current)
    for _ in range(cfg.calibration_probes):
        probe = np.clip(current + rng.normal(0.0, cfg.neighborhood_sigma * (hi - lo)),
                        lo, hi)
        cost = rec(probe)
        if cost > current_cost:
            uphill.append(cost - current_cost)
        elif cost < best[0]:
            best = (cost, probe)
    if best[0] < current_cost:
        current_cost, current = best
    temperature = (sum(uphill) / len(uphill)) / -math.log(0.8) if uphill else 1.0
    step = 0
    while True:
        current, current_cost, temperature = sa_step(
            current, current_cost, temperature, step, rec, space, rng,
            cfg.neighborhood_sigma, cfg.temp_decay, cfg.epoch_length,
        )
        step += 1


_DRIVERS = {
    "RAND": _drive_rand,
    "PSO": _drive_pso,
    "DE": _drive_de,
    "GA": _drive_ga,
    "SA": _drive_sa,
}


def search(opt_config: OptimizerConfig, objective, space: ParamSpace | None = None) -> RunRecord:
    """Run one algorithm against an arbitrary objective callable.

    The objective is called exactly ``budget`` times.  If it exposes a
    ``best`` Evaluation attribute (as the simulation objective does) that
    is used for the record; otherwise the best candidate is decoded into
    a config with no metrics attached.
    """
    opt_config.validate()
    space = space or default_param_space()
    rng = np.random.default_rng(opt_config.seed)
    rec = _Recorder(objective, opt_config.budget)
    try:
        _DRIVERS[opt_config.algorithm](rec, space, opt_config, rng)
    except _BudgetExhausted:
        pass
    total = time.perf_counter() - rec.started
    best = getattr(objective, "best", None)
    if best is None or best.cost != rec.best_cost:
        best = Evaluation(
            config=decode_params(rec.best_x, space),
            metrics=None,
            cost=rec.best_cost,
            seed=opt_config.seed,
            wall_time=0.0,
        )
    return RunRecord(
        algorithm=opt_config.algorithm,
        seed=opt_config.seed,
        trajectory=rec.trajectory,
        best=best,
        time_to_best=rec.time_to_best,
        total_time=total,
    )


def optimize(opt_config: OptimizerConfig, scenario, weights: FitnessWeights = DEFAULT_WEIGHTS,
             *, eval_seeds=(0,), waive_config_validation: bool = False) -> RunRecord:
    """Tune the protocol for a scenario; exactly ``budget`` evaluations."""
    objective = OlsrObjective(scenario, weights, eval_seeds,
                              waive_config_validation=waive_config_validation)
    return search(opt_config, objective)


def random_search(objective, budget: int, seed: int,
                  space: ParamSpace | None = None) -> RunRecord:
    """Uniform sampling baseline over the box; best candidate retained."""
    return search(OptimizerConfig("RAND", budget=budget, seed=seed), objective, space)
