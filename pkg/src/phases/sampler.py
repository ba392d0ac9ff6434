"""Finite-n cross-validation: microcanonical MCMC over constrained graphs and
exact enumeration of the constrained count Z_n at tiny n.

The chain is a Metropolis walk over single-edge toggles whose target is the
uniform distribution on graphs with all constrained densities inside the open
windows (alpha_j - delta, alpha_j + delta).  Proposals are symmetric and the
target is an indicator, so acceptance is just window membership.  Densities
use the injective (finite-graph) convention throughout.
"""

from __future__ import annotations

import itertools
import logging
import math
from collections import Counter
from fractions import Fraction
from dataclasses import dataclass, field

import numpy as np

from .graphon import (
    ConstraintVector,
    FiniteGraph,
    StepGraphon,
    SubgraphPattern,
    _falling,
    _star_arity,
    decimal_fraction,
    finite_density,
)
from .optimizer import reference_construction

logger = logging.getLogger(__name__)

ENUM_N_CAP = 7
GENERIC_N_CAP = 30


class SamplerInitError(RuntimeError):
    """Could not construct a feasible initial graph within the repair budget."""


@dataclass(frozen=True)
class ChainConfig:
    """Metropolis chain configuration: burn_in and sample_interval default to
    50 n^2 and n^2 edge-toggle proposals."""

    n: int
    constraints: ConstraintVector
    seed: int = 0
    burn_in: int | None = None
    sample_interval: int | None = None
    n_samples: int = 10

    def __post_init__(self):
        if self.n < 4:
            raise ValueError("chains need n >= 4")
        if self.constraints.delta <= 0:
            raise ValueError("hard windows need a positive delta at finite n")
        if self.n_samples < 1:
            raise ValueError("n_samples must be >= 1")

    @property
    def burn_in_steps(self) -> int:
        return 50 * self.n * self.n if self.burn_in is None else self.burn_in

    @property
    def interval_steps(self) -> int:
        return self.n * self.n if self.sample_interval is None else self.sample_interval


@dataclass
class SampleRun:
    """Retained samples plus chain diagnostics; iterates over the graphs."""

    graphs: list[FiniteGraph]
    densities: np.ndarray  # (n_samples, n_constraints)
    acceptance_rate: float
    stalled: bool
    config: ChainConfig

    def __len__(self) -> int:
        return len(self.graphs)

    def __iter__(self):
        return iter(self.graphs)

    def __getitem__(self, i):
        return self.graphs[i]


class _DensityTracker:
    """Injective densities of the constraint patterns, updated per edge toggle.

    Edge, triangle, and k-star counts are maintained incrementally; any other
    pattern forces a full recount per proposal and is only allowed at small n.
    """

    def __init__(self, adj: np.ndarray, constraints: ConstraintVector):
        self.adj = adj
        self.n = adj.shape[0]
        self.kinds: list[tuple[str, int]] = []
        for pat in constraints.patterns:
            if pat == SubgraphPattern.edge():
                self.kinds.append(("edge", 0))
            elif pat == SubgraphPattern.triangle():
                self.kinds.append(("triangle", 0))
            elif _star_arity(pat) is not None:
                self.kinds.append(("star", _star_arity(pat)))
            else:
                if self.n > GENERIC_N_CAP:
                    raise ValueError(
                        "incremental updates support edge/triangle/k-star "
                        f"patterns; generic patterns need n <= {GENERIC_N_CAP}"
                    )
                self.kinds.append(("generic", 0))
        self.patterns = constraints.patterns
        self.edge_count = int(adj.sum()) // 2
        self.degrees = adj.sum(axis=1).astype(np.int64)
        a64 = adj.astype(np.int64)
        self.triangle_count = int(np.trace(a64 @ a64 @ a64)) // 6
        self.star_arities = sorted({k for kind, k in self.kinds if kind == "star"})
        self.star_sums = {
            r: int(sum(_falling(int(d), r) for d in self.degrees))
            for r in self.star_arities
        }

    def densities(self) -> np.ndarray:
        n = self.n
        out = np.empty(len(self.kinds))
        for j, (kind, r) in enumerate(self.kinds):
            if kind == "edge":
                out[j] = 2.0 * self.edge_count / (n * (n - 1))
            elif kind == "triangle":
                out[j] = 6.0 * self.triangle_count / _falling(n, 3)
            elif kind == "star":
                out[j] = self.star_sums[r] / _falling(n, r + 1)
            else:
                out[j] = float(finite_density(FiniteGraph(self.adj), self.patterns[j]))
        return out

    def toggled_densities(self, u: int, v: int) -> np.ndarray:
        """Densities after toggling edge (u, v), without mutating state."""
        n = self.n
        sign = -1 if self.adj[u, v] else 1
        common = int(self.adj[u] @ self.adj[v])
        out = np.empty(len(self.kinds))
        generic_adj = None
        for j, (kind, r) in enumerate(self.kinds):
            if kind == "edge":
                out[j] = 2.0 * (self.edge_count + sign) / (n * (n - 1))
            elif kind == "triangle":
                out[j] = 6.0 * (self.triangle_count + sign * common) / _falling(n, 3)
            elif kind == "star":
                du, dv = int(self.degrees[u]), int(self.degrees[v])
                s = self.star_sums[r]
                s += _falling(du + sign, r) - _falling(du, r)
                s += _falling(dv + sign, r) - _falling(dv, r)
                out[j] = s / _falling(n, r + 1)
            else:
                if generic_adj is None:
                    generic_adj = self.adj.copy()
                    generic_adj[u, v] = generic_adj[v, u] = 1 - generic_adj[u, v]
                out[j] = float(
                    finite_density(FiniteGraph(generic_adj), self.patterns[j])
                )
        return out

    def apply_toggle(self, u: int, v: int) -> None:
        sign = -1 if self.adj[u, v] else 1
        common = int(self.adj[u] @ self.adj[v])
        du, dv = int(self.degrees[u]), int(self.degrees[v])
        for r in self.star_arities:
            self.star_sums[r] += _falling(du + sign, r) - _falling(du, r)
            self.star_sums[r] += _falling(dv + sign, r) - _falling(dv, r)
        self.edge_count += sign
        self.triangle_count += sign * common
        self.degrees[u] += sign
        self.degrees[v] += sign
        self.adj[u, v] = self.adj[v, u] = 1 - self.adj[u, v]


def _initial_graphon(constraints: ConstraintVector) -> StepGraphon:
    by_pat = {p: t for p, t in constraints.terms}
    edge = SubgraphPattern.edge()
    tri = SubgraphPattern.triangle()
    if edge in by_pat and tri in by_pat:
        try:
            return reference_construction(by_pat[edge], by_pat[tri])
        except ValueError:
            pass
    if edge in by_pat:
        return StepGraphon.constant(max(1e-3, min(1 - 1e-3, by_pat[edge])))
    return StepGraphon.constant(0.5)


def _sample_from_graphon(q: StepGraphon, n: int, rng: np.random.Generator) -> np.ndarray:
    # largest-remainder block sizes
    raw = q.masses * n
    counts = np.floor(raw).astype(int)
    rem = n - counts.sum()
    order = np.argsort(-(raw - counts), kind="stable")
    for i in range(rem):
        counts[order[i % q.m]] += 1
    labels = np.repeat(np.arange(q.m), counts)
    probs = q.values[np.ix_(labels, labels)]
    u = rng.random((n, n))
    u = np.triu(u, 1)
    adj = (u < np.triu(probs, 1)).astype(np.int32)
    return adj + adj.T


def _violation(densities: np.ndarray, targets: np.ndarray, delta: float) -> float:
    # aim for the inner half of each window so the chain starts comfortably in
    return float(np.clip(np.abs(densities - targets) - 0.5 * delta, 0.0, None).sum())


def sample_constrained(cfg: ChainConfig) -> SampleRun:
    """Run the microcanonical chain and return thinned samples.

    The initial graph is drawn from the closed-form reference graphon and
    repaired into the windows by greedy toggles; SamplerInitError is raised if
    the repair budget runs out.  Every retained sample satisfies all windows.
    A full sweep with no accepted toggle sets the stalled flag.
    """
    n = cfg.n
    rng = np.random.default_rng(cfg.seed)
    targets = cfg.constraints.targets
    delta = cfg.constraints.delta
    adj = _sample_from_graphon(_initial_graphon(cfg.constraints), n, rng)
    tracker = _DensityTracker(adj, cfg.constraints)

    score = _violation(tracker.densities(), targets, delta)
    budget = 40 * n * n
    while score > 0.0 and budget > 0:
        budget -= 1
        u = int(rng.integers(n))
        v = int(rng.integers(n - 1))
        if v >= u:
            v += 1
        cand = _violation(tracker.toggled_densities(u, v), targets, delta)
        if cand < score - 1e-15:
            tracker.apply_toggle(u, v)
            score = cand
    dens = tracker.densities()
    if np.any(np.abs(dens - targets) >= delta):
        raise SamplerInitError(
            f"greedy repair failed to reach the constraint windows (densities {dens})"
        )

    sweep = n * (n - 1) // 2
    total = cfg.burn_in_steps + cfg.interval_steps * cfg.n_samples
    graphs: list[FiniteGraph] = []
    rows: list[np.ndarray] = []
    accepted = 0
    since_accept = 0
    stalled = False
    next_sample = cfg.burn_in_steps
    for step in range(1, total + 1):
        u = int(rng.integers(n))
        v = int(rng.integers(n - 1))
        if v >= u:
            v += 1
        cand = tracker.toggled_densities(u, v)
        if np.all(np.abs(cand - targets) < delta):
            tracker.apply_toggle(u, v)
            accepted += 1
            since_accept = 0
        else:
            since_accept += 1
            if since_accept >= sweep and not stalled:
                stalled = True
                logger.warning(
                    "chain stalled: no accepted toggle in a full sweep (%d proposals)",
                    sweep,
                )
        if step >= next_sample and len(graphs) < cfg.n_samples:
            graphs.append(FiniteGraph(tracker.adj.copy()))
            rows.append(tracker.densities())
            next_sample += cfg.interval_steps
    return SampleRun(
        graphs=graphs,
        densities=np.array(rows),
        acceptance_rate=accepted / total,
        stalled=stalled,
        config=cfg,
    )


# ---------------------------------------------------------------------------
# block recovery


@dataclass(frozen=True)
class BlockEstimate:
    """k-means block recovery: the step graphon, the clustering objective
    (within-cluster sum of squares), and node labels."""

    graphon: StepGraphon
    objective: float
    labels: np.ndarray


def estimate_block_structure(
    g: FiniteGraph, m: int, restarts: int = 10, seed: int = 0
) -> BlockEstimate:
    """Cluster nodes by adjacency-row profiles (Lloyd's algorithm, k-means++
    seeding, restarted) and return cluster masses and inter-cluster edge
    frequencies.  Empty clusters are dropped, so the result can have fewer
    than m blocks (duplicate-row graphs)."""
    if not 1 <= m <= 8:
        raise ValueError("estimate_block_structure supports m in 1..8")
    if m > g.n:
        raise ValueError(f"m={m} exceeds node count {g.n}")
    rows = g.adjacency.astype(float)
    n = g.n
    rng = np.random.default_rng(seed)
    best = None
    for _ in range(max(1, restarts)):
        centers = _kmeanspp(rows, m, rng)
        labels = None
        for _it in range(100):
            d2 = ((rows[:, None, :] - centers[None, :, :]) ** 2).sum(axis=2)
            new_labels = d2.argmin(axis=1)
            if labels is not None and np.array_equal(new_labels, labels):
                break
            labels = new_labels
            for k in range(centers.shape[0]):
                mask = labels == k
                if mask.any():
                    centers[k] = rows[mask].mean(axis=0)
        d2 = ((rows[:, None, :] - centers[None, :, :]) ** 2).sum(axis=2)
        obj = float(d2[np.arange(n), labels].sum())
        if best is None or obj < best[0] - 1e-12:
            best = (obj, labels.copy())
    obj, labels = best
    used = np.unique(labels)
    masses = []
    k_eff = len(used)
    values = np.zeros((k_eff, k_eff))
    for a, la in enumerate(used):
        ia = np.nonzero(labels == la)[0]
        masses.append(len(ia) / n)
        for b, lb in enumerate(used):
            ib = np.nonzero(labels == lb)[0]
            if a == b:
                na = len(ia)
                if na < 2:
                    # one-node cluster has no internal pairs; fall back to the
                    # node's overall connection frequency
                    values[a, a] = (
                        g.adjacency[ia[0]].sum() / (n - 1) if n > 1 else 0.0
                    )
                else:
                    values[a, a] = g.adjacency[np.ix_(ia, ia)].sum() / (na * (na - 1))
            else:
                values[a, b] = g.adjacency[np.ix_(ia, ib)].mean()
    return BlockEstimate(StepGraphon(masses, values), obj, labels)


def _kmeanspp(rows: np.ndarray, m: int, rng: np.random.Generator) -> np.ndarray:
    n = rows.shape[0]
    centers = [rows[int(rng.integers(n))]]
    while len(centers) < m:
        d2 = np.min(
            [((rows - c) ** 2).sum(axis=1) for c in centers], axis=0
        )
        total = d2.sum()
        if total <= 0:
            centers.append(centers[0])
            continue
        probs = d2 / total
        centers.append(rows[int(rng.choice(n, p=probs))])
    return np.array(centers, dtype=float)


# ---------------------------------------------------------------------------
# exact enumeration


@dataclass(frozen=True)
class EnumerationReport:
    """Exact count of labeled graphs meeting the windows, plus the joint
    (edge count, triangle count) histogram of all 2^binom(n,2) graphs."""

    n: int
    z: int
    total: int
    log_normalized: float  # (1/n^2) ln Z
    histogram: tuple[tuple[int, int, int], ...]  # (edge_count, triangle_count, count)
    constraints: tuple[tuple[dict, float], ...]
    delta: float

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "z": self.z,
            "total": self.total,
            "log_normalized": self.log_normalized,
            "histogram": [list(h) for h in self.histogram],
            "constraints": [[p, t] for p, t in self.constraints],
            "delta": self.delta,
        }


def _pattern_mask_classes(pattern: SubgraphPattern, n: int, bit: dict) -> Counter:
    """Required-edge bitmasks of all injective placements, with multiplicity."""
    classes: Counter = Counter()
    for nodes in itertools.permutations(range(n), pattern.k):
        mask = 0
        for u, v in pattern.edges:
            mask |= bit[(min(nodes[u - 1], nodes[v - 1]), max(nodes[u - 1], nodes[v - 1]))]
        classes[mask] += 1
    return classes


def enumerate_Z(n: int, constraints: ConstraintVector) -> EnumerationReport:
    """Exhaustively count labeled graphs on n nodes whose injective densities
    fall strictly inside every window (alpha_j - delta, alpha_j + delta)."""
    if n > ENUM_N_CAP:
        raise ValueError(f"exact enumeration capped at n = {ENUM_N_CAP}")
    if n < 1:
        raise ValueError("n must be positive")
    pairs = list(itertools.combinations(range(n), 2))
    n_edges = len(pairs)
    bit = {pair: 1 << i for i, pair in enumerate(pairs)}
    triples = []
    for a, b, c in itertools.combinations(range(n), 3):
        triples.append(bit[(a, b)] | bit[(a, c)] | bit[(b, c)])
    triples = np.array(triples, dtype=np.int64)
    vertex_masks = np.array(
        [sum(bit[(min(u, v), max(u, v))] for v in range(n) if v != u) for u in range(n)],
        dtype=np.int64,
    )

    delta = constraints.delta
    kinds = []
    for pat, target in constraints.terms:
        # strict integer count bounds equivalent to the open density window;
        # targets and delta are read at their decimal value (0.1 means 1/10)
        lo = decimal_fraction(target) - decimal_fraction(delta)
        hi = decimal_fraction(target) + decimal_fraction(delta)
        if pat == SubgraphPattern.edge():
            kind, r, aux, denom = "edge", 0, None, Fraction(1, n_edges)
        elif pat == SubgraphPattern.triangle():
            kind, r, aux, denom = "triangle", 0, None, Fraction(1, math.comb(n, 3))
        elif _star_arity(pat) is not None:
            r = _star_arity(pat)
            kind, aux, denom = "star", None, Fraction(1, _falling(n, r + 1))
        else:
            if not pat.is_all_present:
                raise ValueError("enumeration constraints must be all-present patterns")
            classes = _pattern_mask_classes(pat, n, bit)
            masks = np.array(list(classes.keys()), dtype=np.int64)
            mults = np.array(list(classes.values()), dtype=np.int64)
            kind, r, aux = "generic", pat.k, (masks, mults)
            denom = Fraction(1, _falling(n, pat.k))
        cmin = math.floor(lo / denom) + 1
        cmax = math.ceil(hi / denom) - 1
        kinds.append((kind, r, aux, cmin, cmax))

    total = 1 << n_edges
    z = 0
    hist: Counter = Counter()
    chunk = 1 << 20
    for lo in range(0, total, chunk):
        masks = np.arange(lo, min(lo + chunk, total), dtype=np.int64)
        edge_counts = np.bitwise_count(masks).astype(np.int64)
        tri_counts = np.zeros(masks.shape[0], dtype=np.int64)
        for t in triples:
            tri_counts += (masks & t) == t
        ok = np.ones(masks.shape[0], dtype=bool)
        degs = None
        for kind, r, aux, cmin, cmax in kinds:
            if kind == "edge":
                cnt = edge_counts
            elif kind == "triangle":
                cnt = tri_counts
            elif kind == "star":
                if degs is None:
                    degs = np.stack(
                        [np.bitwise_count(masks & vm) for vm in vertex_masks], axis=1
                    ).astype(np.int64)
                cnt = np.zeros(masks.shape[0], dtype=np.int64)
                for col in range(n):
                    ff = np.ones(masks.shape[0], dtype=np.int64)
                    for i in range(r):
                        ff = ff * (degs[:, col] - i)
                    cnt += ff
            else:
                pmasks, mults = aux
                cnt = np.zeros(masks.shape[0], dtype=np.int64)
                for pm, mult in zip(pmasks, mults):
                    cnt += mult * ((masks & pm) == pm)
            ok &= (cnt >= cmin) & (cnt <= cmax)
        z += int(ok.sum())
        keys = edge_counts * (10 * n**3) + tri_counts
        uniq, counts = np.unique(keys, return_counts=True)
        for k, cval in zip(uniq.tolist(), counts.tolist()):
            hist[(k // (10 * n**3), k % (10 * n**3))] += cval
    log_norm = -math.inf if z == 0 else math.log(z) / (n * n)
    histogram = tuple(sorted((e, t, c) for (e, t), c in hist.items()))
    return EnumerationReport(
        n=n,
        z=z,
        total=total,
        log_normalized=log_norm,
        histogram=histogram,
        constraints=tuple((p.to_dict(), float(t)) for p, t in constraints.terms),
        delta=delta,
    )
