"""Monte Carlo, MLMC and filtered MLMC estimators of a field mean.

Level simulators are ``f_l = P_l^L o sim_l o R_L^l`` with optional Shapiro
filtering inside each transfer step. Estimates use the form where every level
correction is averaged on its own grid and then prolonged to level ``L`` once.

Costs are abstract and normalized by the finest-level simulator cost, so
``C_L = 1`` and a budget of ``100`` buys 100 crude MC samples.
"""

from __future__ import annotations

import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np

from . import rng
from .grid import GridHierarchy
from .transfer import TransferKind, TransferPipeline, pipeline_apply, prolong_step, restrict_step

ESTIMATOR_KINDS = {
    "MC": TransferKind.UNFILTERED,
    "MLMC": TransferKind.UNFILTERED,
    "F-MLMC": TransferKind.FILTERED,
    "F-MLMC-pre-only": TransferKind.PRE_ONLY,
    "F-MLMC-post-only": TransferKind.POST_ONLY,
}

# field elements per chunk when streaming samples through a level
_CHUNK_ELEMENTS = 1 << 19


def transfer_kind(name: str) -> TransferKind:
    try:
        return ESTIMATOR_KINDS[name]
    except KeyError:
        raise ValueError(f"unknown estimator {name!r}; choose from {sorted(ESTIMATOR_KINDS)}") from None


# ---------------------------------------------------------------------------
# cost model and allocation
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class CostModel:
    """Per-cell simulator cost ``alpha``, transfer cost ``beta``, refinement ``s``."""

    alpha: float
    beta: float
    s: int

    def __post_init__(self):
        if self.alpha <= 0 or self.beta < 0 or self.s < 2:
            raise ValueError("cost model needs alpha > 0, beta >= 0 and s >= 2")

    @property
    def gamma(self) -> float:
        return self.s / (self.s - 1) * self.beta / self.alpha

    def relative_cost(self, level: int, L: int) -> float:
        """``C_l / C_L``."""
        d = L - level
        return self.s ** (-d) * (1.0 + self.gamma * (self.s**d - 1))

    def costs(self, L: int) -> np.ndarray:
        return np.array([self.relative_cost(lv, L) for lv in range(L + 1)])


def cost_model(dim: int, estimator: str = "MLMC", q: int = 5, steps: int = 20) -> CostModel:
    """Cost model for the diffusion simulators (``3qT`` flops per cell in 1D, ``5qT`` in 2D)."""
    kind = transfer_kind(estimator)
    if dim == 1:
        alpha, beta_pre = 3 * q * steps, 4
    elif dim == 2:
        alpha, beta_pre = 5 * q * steps, 7
    else:
        raise ValueError(f"dimension must be 1 or 2, got {dim}")
    beta = beta_pre if kind.pre_filter else 1
    return CostModel(float(alpha), float(beta), 2**dim)


def cost_table(model: CostModel, depth: int) -> dict:
    """Normalized costs over levels ``L, L-1, ..., L-depth+1``.

    ``ratio[i]`` is ``C_l / C_{l-1}`` for the same level; it is NaN for the
    coarsest listed level.
    """
    L = depth - 1
    costs = model.costs(L)
    offsets = list(range(0, -depth, -1))
    normalized = [costs[L + o] for o in offsets]
    ratio = [costs[L + o] / costs[L + o - 1] if L + o - 1 >= 0 else float("nan") for o in offsets]
    return {"offset": offsets, "normalized": normalized, "ratio": ratio, "gamma": model.gamma}


@dataclass
class Allocation:
    M: list
    budget: float
    variances: list
    costs: list
    pair_costs: list
    S: float

    @property
    def nominal_cost(self) -> float:
        return float(np.dot(self.M, self.pair_costs))

    def to_dict(self) -> dict:
        d = asdict(self)
        d["nominal_cost"] = self.nominal_cost
        return d


def pair_costs(costs) -> np.ndarray:
    c = np.asarray(costs, dtype=float)
    out = c.copy()
    out[1:] += c[:-1]
    return out


def allocate(budget: float, costs, variances) -> Allocation:
    """Optimal sample sizes ``M_l = max(1, floor(C/S sqrt(V_l / (C_l + C_{l-1}))))``."""
    c = np.asarray(costs, dtype=float)
    v = np.asarray(variances, dtype=float)
    if budget <= 0:
        raise ValueError("budget must be positive")
    if c.shape != v.shape or c.ndim != 1 or c.size == 0:
        raise ValueError("costs and variances must be matching nonempty vectors")
    if np.any(c <= 0):
        raise ValueError("costs must be positive")
    if np.any(v < 0):
        raise ValueError("variances must be nonnegative")
    pc = pair_costs(c)
    S = float(np.sum(np.sqrt(v * pc)))
    if S == 0.0:
        M = np.ones(c.size, dtype=int)
    else:
        raw = budget / S * np.sqrt(v / pc)
        # values a few ulps below an integer are rounding noise (the single-level case is exact)
        raw = raw * (1.0 + 16 * np.finfo(float).eps)
        M = np.maximum(1, np.floor(raw)).astype(int)
    return Allocation([int(m) for m in M], float(budget), v.tolist(), c.tolist(), pc.tolist(), S)


# ---------------------------------------------------------------------------
# level simulators
# ---------------------------------------------------------------------------


@dataclass
class LevelSimulator:
    """``f_l``: restrict from ``L`` to ``level``, simulate, prolong back."""

    hierarchy: GridHierarchy
    simulators: list
    level: int
    kind: TransferKind = TransferKind.UNFILTERED

    def __call__(self, x) -> np.ndarray:
        h, L = self.hierarchy, self.hierarchy.L
        y = self.simulators[self.level](pipeline_apply(TransferPipeline(h, self.kind, L, self.level), x))
        return pipeline_apply(TransferPipeline(h, self.kind, self.level, L), y)


def _chunks(total: int, n: int):
    step = max(1, _CHUNK_ELEMENTS // max(1, n))
    for start in range(0, total, step):
        yield start, min(step, total - start)


def _restrict_down(x, hierarchy, kind, target):
    for lv in range(hierarchy.L, target, -1):
        x = restrict_step(x, hierarchy[lv], kind)
    return x


def _prolong_up(y, hierarchy, kind, source):
    for lv in range(source, hierarchy.L):
        y = prolong_step(y, hierarchy[lv], kind)
    return y


def level_difference(x, hierarchy: GridHierarchy, simulators, level: int, kind: TransferKind) -> np.ndarray:
    """Inner correction on grid ``level`` for finest-level inputs ``x``.

    Level ``l - 1`` inputs are one further step from the level-``l`` inputs.
    """
    xr = _restrict_down(x, hierarchy, kind, level)
    y = simulators[level](xr)
    if level == 0:
        return y
    xc = restrict_step(xr, hierarchy[level], kind)
    return y - prolong_step(simulators[level - 1](xc), hierarchy[level - 1], kind)


# ---------------------------------------------------------------------------
# pilot variances
# ---------------------------------------------------------------------------


class _RunningMoments:
    """Chan-style mergeable mean and sum of squared deviations."""

    def __init__(self, n: int):
        self.count = 0
        self.mean = np.zeros(n)
        self.m2 = np.zeros(n)

    def add(self, batch: np.ndarray):
        k = batch.shape[0]
        if k == 0:
            return
        bmean = batch.mean(axis=0)
        bm2 = ((batch - bmean) ** 2).sum(axis=0)
        tot = self.count + k
        delta = bmean - self.mean
        self.mean = self.mean + delta * (k / tot)
        self.m2 = self.m2 + bm2 + delta**2 * (self.count * k / tot)
        self.count = tot


def pilot_variances(hierarchy: GridHierarchy, simulators, pilot_size: int = 1000, seed: int = 0,
                    kind: TransferKind = TransferKind.UNFILTERED) -> np.ndarray:
    """Unbiased ``W_L``-norm variances of ``f_0(X)`` and ``f_l(X) - f_{l-1}(X)``.

    One pilot input ``X`` drives every level.
    """
    if pilot_size < 2:
        raise ValueError("pilot size must be at least 2")
    finest = hierarchy.finest
    n = finest.size
    stream = rng.stream(seed, rng.PILOT, 0, 0, n)
    moments = [_RunningMoments(n) for _ in hierarchy]
    for start, count in _chunks(pilot_size, n * len(hierarchy)):
        x = np.sqrt(finest.weight) * stream.normals(start, count)
        prev = None
        xr = x
        for lv in range(hierarchy.L, -1, -1):
            if lv < hierarchy.L:
                xr = restrict_step(xr, hierarchy[lv + 1], kind)
            g = _prolong_up(simulators[lv](xr), hierarchy, kind, lv)
            if prev is not None:
                moments[lv + 1].add(prev - g)
            prev = g
        moments[0].add(prev)
    w = finest.weight
    return np.array([w * m.m2.sum() / (m.count - 1) for m in moments])


# ---------------------------------------------------------------------------
# estimator runs
# ---------------------------------------------------------------------------


@dataclass
class EstimatorRun:
    kind: str
    depth: int
    seed: int
    replicate: int
    allocation: Allocation
    realized_cost: float
    estimate: np.ndarray = field(repr=False)

    def summary(self) -> dict:
        return {
            "kind": self.kind,
            "depth": self.depth,
            "seed": self.seed,
            "replicate": self.replicate,
            "M": self.allocation.M,
            "variances": self.allocation.variances,
            "costs": self.allocation.costs,
            "realized_cost": self.realized_cost,
        }

    def to_json(self) -> str:
        return json.dumps(self.summary(), sort_keys=True)


def estimate(hierarchy: GridHierarchy, simulators, M, kind: TransferKind, seed: int, replicate: int) -> np.ndarray:
    """One multilevel estimate on level ``L`` with sample sizes ``M``."""
    if len(M) != len(hierarchy) or len(simulators) != len(hierarchy):
        raise ValueError(f"allocation has {len(M)} levels but hierarchy has {len(hierarchy)}")
    finest = hierarchy.finest
    n = finest.size
    total = np.zeros(n)
    for lv in range(len(hierarchy)):
        stream = rng.stream(seed, rng.ESTIMATOR, replicate, lv, n)
        acc = np.zeros(hierarchy[lv].size)
        for start, count in _chunks(M[lv], n):
            x = np.sqrt(finest.weight) * stream.normals(start, count)
            acc += level_difference(x, hierarchy, simulators, lv, kind).sum(axis=0)
        total += _prolong_up(acc / M[lv], hierarchy, kind, lv)
    return total


def run_estimator(name: str, hierarchy: GridHierarchy, simulators, allocation: Allocation, seed: int = 0,
                  replicate: int = 0) -> EstimatorRun:
    kind = transfer_kind(name)
    if name == "MC" and len(hierarchy) != 1:
        raise ValueError("crude MC runs on a single-level hierarchy")
    est = estimate(hierarchy, simulators, allocation.M, kind, seed, replicate)
    return EstimatorRun(name, hierarchy.L, seed, replicate, allocation, allocation.nominal_cost, est)


def run_ensemble(name: str, hierarchy: GridHierarchy, simulators, allocation: Allocation, replicates: int,
                 seed: int = 0, workers: int = 1) -> np.ndarray:
    """Estimates of ``replicates`` independent runs, shaped ``(replicates, n_L)``.

    Replicate ``r`` always uses the same streams, so results do not depend on
    ``workers``.
    """
    kind = transfer_kind(name)
    out = np.empty((replicates, hierarchy.finest.size))

    def one(r):
        out[r] = estimate(hierarchy, simulators, allocation.M, kind, seed, r)

    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            list(pool.map(one, range(replicates)))
    else:
        for r in range(replicates):
            one(r)
    return out


def plan(name: str, hierarchy: GridHierarchy, simulators, budget: float = 100.0, pilot_size: int = 1000,
         seed: int = 0) -> Allocation:
    """Pilot variances and allocation for estimator ``name`` on ``hierarchy``.

    Crude MC needs no pilot: any positive variance gives ``floor(budget)``.
    """
    kind = transfer_kind(name)
    model = cost_model(hierarchy.dim, name)
    costs = model.costs(hierarchy.L)
    if len(hierarchy) == 1:
        alloc = allocate(budget, costs, [1.0])
        alloc.variances = [None]
        return alloc
    v = pilot_variances(hierarchy, simulators, pilot_size, seed, kind)
    return allocate(budget, costs, v)
