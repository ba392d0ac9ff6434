"""Permutation limits: pattern densities, permuton entropy, the constrained
variational principle, and exact constrained counting.

Permutons are represented as k x k grid densities with uniform marginals
(every row and column of the cell matrix sums to k).  Pattern evaluation on
grids resolves within-cell ties by independent uniform sub-positions, which
is what the measure-theoretic definition forces; the exact evaluator weights
all orderings consistent with the cell ranks by their exact probabilities.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache

import numpy as np

from .graphon import decimal_fraction

MARGINAL_TOL = 1e-9
EXACT_PATTERN_CAP = 3
EXACT_RESOLUTION_CAP = 40
PLAIN_PATTERN_CAP = 6
STAR_PATTERN_CAP = 4
COUNT_N_CAP = 9
DENSITY_FLOOR = 1e-12

_U_LETTERS = "abc"
_V_LETTERS = "xyz"


@dataclass(frozen=True)
class Permutation:
    """A permutation of {1..n} stored by its value sequence."""

    values: tuple[int, ...]

    def __post_init__(self):
        n = len(self.values)
        if sorted(self.values) != list(range(1, n + 1)):
            raise ValueError("values must be a bijection on 1..n")

    @property
    def n(self) -> int:
        return len(self.values)

    @classmethod
    def identity(cls, n: int) -> "Permutation":
        return cls(tuple(range(1, n + 1)))

    @classmethod
    def from_line(cls, line: str) -> "Permutation":
        return cls(tuple(int(tok) for tok in line.split()))

    def to_line(self) -> str:
        return " ".join(str(v) for v in self.values)


@dataclass(frozen=True)
class StarPattern:
    """A pattern in S_k, optionally with wildcard symbols.

    symbols mixes fixed ranks with None placeholders; the density of a star
    pattern is the sum of the densities of all consistent completions
    (e.g. *2* covers 123 and 321)."""

    symbols: tuple[int | None, ...]

    def __post_init__(self):
        k = len(self.symbols)
        if k < 1:
            raise ValueError("pattern must have length >= 1")
        fixed = [s for s in self.symbols if s is not None]
        if len(set(fixed)) != len(fixed):
            raise ValueError("fixed symbols must be distinct")
        for s in fixed:
            if not 1 <= s <= k:
                raise ValueError(f"symbol {s} outside 1..{k}")

    @property
    def k(self) -> int:
        return len(self.symbols)

    @property
    def is_plain(self) -> bool:
        return all(s is not None for s in self.symbols)

    @classmethod
    def parse(cls, text: str) -> "StarPattern":
        """Parse e.g. "12", "123", "*2*" (single-digit symbols)."""
        syms: list[int | None] = []
        for ch in text.strip():
            if ch == "*":
                syms.append(None)
            elif ch.isdigit() and ch != "0":
                syms.append(int(ch))
            else:
                raise ValueError(f"bad pattern character {ch!r} in {text!r}")
        return cls(tuple(syms))

    def __str__(self) -> str:
        return "".join("*" if s is None else str(s) for s in self.symbols)

    def completions(self) -> tuple[tuple[int, ...], ...]:
        """All plain patterns consistent with the wildcards."""
        k = self.k
        free_pos = [i for i, s in enumerate(self.symbols) if s is None]
        unused = sorted(set(range(1, k + 1)) - {s for s in self.symbols if s is not None})
        out = []
        for fill in itertools.permutations(unused):
            full = list(self.symbols)
            for pos, val in zip(free_pos, fill):
                full[pos] = val
            out.append(tuple(full))
        return tuple(out)


class GridPermuton:
    """Piecewise-constant permuton: a k x k nonnegative cell-density matrix
    g with every row and column summing to k (uniform marginals).

    Convention: g[i][j] covers the x-interval (i/k, (i+1)/k) times the
    y-interval (j/k, (j+1)/k)."""

    __slots__ = ("k", "g")

    def __init__(self, g):
        arr = np.asarray(g, dtype=float)
        if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
            raise ValueError("cell density matrix must be square")
        k = arr.shape[0]
        if arr.min() < -1e-12:
            raise ValueError("cell densities must be nonnegative")
        arr = np.clip(arr, 0.0, None)
        rows = arr.sum(axis=1)
        cols = arr.sum(axis=0)
        if np.abs(rows - k).max() > MARGINAL_TOL * k or np.abs(cols - k).max() > MARGINAL_TOL * k:
            raise ValueError(
                "marginals are not uniform: row/col sums must equal the resolution"
            )
        arr.flags.writeable = False
        object.__setattr__(self, "k", k)
        object.__setattr__(self, "g", arr)

    def __setattr__(self, name, value):
        raise AttributeError("GridPermuton is immutable")

    @classmethod
    def uniform(cls, k: int) -> "GridPermuton":
        return cls(np.ones((k, k)))

    def to_dict(self) -> dict:
        return {"k": self.k, "g": self.g.tolist()}

    @classmethod
    def from_dict(cls, d: dict) -> "GridPermuton":
        p = cls(d["g"])
        if int(d.get("k", p.k)) != p.k:
            raise ValueError("k field disagrees with the g matrix shape")
        return p

    def __repr__(self):
        return f"GridPermuton(k={self.k})"


def perm_to_permuton(pi: Permutation) -> GridPermuton:
    """The n x n grid permuton of a permutation: each occupied cell carries
    density n so it integrates to 1/n."""
    n = pi.n
    g = np.zeros((n, n))
    for i, v in enumerate(pi.values):
        g[i, v - 1] = float(n)
    return GridPermuton(g)


def permuton_entropy(gamma: GridPermuton) -> float:
    """(1/k^2) sum of -g ln g over cells, with 0 ln 0 = 0.  Zero exactly on
    the uniform permuton, negative otherwise."""
    g = gamma.g
    mask = g > 0
    val = -np.sum(g[mask] * np.log(g[mask]))
    return float(val) / (gamma.k * gamma.k)


# ---------------------------------------------------------------------------
# pattern densities


def _rank_tuple(values) -> tuple[int, ...]:
    order = sorted(range(len(values)), key=lambda i: values[i])
    ranks = [0] * len(values)
    for r, i in enumerate(order, start=1):
        ranks[i] = r
    return tuple(ranks)


def perm_pattern_density(pi: Permutation, pattern: StarPattern) -> Fraction:
    """Fraction of k-subsets of positions whose induced relative order matches
    the pattern (any completion, for star patterns).  Exact rational."""
    k = pattern.k
    if k > pi.n:
        raise ValueError(f"pattern length {k} exceeds permutation size {pi.n}")
    cap = PLAIN_PATTERN_CAP if pattern.is_plain else STAR_PATTERN_CAP
    if k > cap:
        raise ValueError(f"pattern length {k} above cap {cap}")
    wanted = set(pattern.completions())
    count = 0
    vals = pi.values
    for combo in itertools.combinations(range(pi.n), k):
        if _rank_tuple([vals[i] for i in combo]) in wanted:
            count += 1
    return Fraction(count, math.comb(pi.n, k))


@lru_cache(maxsize=64)
def _chain_tensor(k: int, res: int) -> np.ndarray:
    """Weight tensor for weakly increasing cell chains of k points on one
    axis: strict steps weigh 1, ties weigh 1/(group size)!."""
    idx = np.arange(res)
    if k == 1:
        return np.ones(res)
    if k == 2:
        a, b = np.meshgrid(idx, idx, indexing="ij")
        return (a < b) + 0.5 * (a == b)
    if k == 3:
        a = idx[:, None, None]
        b = idx[None, :, None]
        c = idx[None, None, :]
        t = ((a < b) & (b < c)) * 1.0
        t += 0.5 * ((a == b) & (b < c))
        t += 0.5 * ((a < b) & (b == c))
        t += (1.0 / 6.0) * ((a == b) & (b == c))
        return t
    raise ValueError("chain tensors only built for k <= 3")


_EINSUM_CACHE: dict = {}


def _completion_einsum(tau: tuple[int, ...], res: int):
    k = len(tau)
    u = _U_LETTERS[:k]
    v = _V_LETTERS[:k]
    subs = [u[t] + v[tau[t] - 1] for t in range(k)] + [u, v]
    value_sub = ",".join(subs) + "->"
    key = (tau, res)
    if key not in _EINSUM_CACHE:
        w = np.empty((res, res))
        chain = _chain_tensor(k, res)
        ops = [w] * k + [chain, chain]
        path, _ = np.einsum_path(value_sub, *ops, optimize="greedy")
        grad_paths = []
        for t in range(k):
            out = subs[t]
            rest = subs[:t] + subs[t + 1 :]
            gsub = ",".join(rest) + "->" + out
            gops = [w] * (k - 1) + [chain, chain]
            gpath, _ = np.einsum_path(gsub, *gops, optimize="greedy")
            grad_paths.append((gsub, gpath))
        _EINSUM_CACHE[key] = (value_sub, path, grad_paths)
    return _EINSUM_CACHE[key]


def _exact_completion_density(w: np.ndarray, tau: tuple[int, ...]) -> float:
    res = w.shape[0]
    k = len(tau)
    value_sub, path, _ = _completion_einsum(tau, res)
    chain = _chain_tensor(k, res)
    ops = [w] * k + [chain, chain]
    return math.factorial(k) * float(np.einsum(value_sub, *ops, optimize=path))


def _exact_completion_grad(w: np.ndarray, tau: tuple[int, ...]) -> np.ndarray:
    """d(density)/d(w) for one completion; w = g / k^2."""
    res = w.shape[0]
    k = len(tau)
    _, _, grad_paths = _completion_einsum(tau, res)
    chain = _chain_tensor(k, res)
    out = np.zeros_like(w)
    fact = math.factorial(k)
    for t in range(k):
        gsub, gpath = grad_paths[t]
        ops = [w] * (k - 1) + [chain, chain]
        part = np.einsum(gsub, *ops, optimize=gpath)
        out += fact * part
    return out


def permuton_pattern_density(
    gamma: GridPermuton,
    pattern: StarPattern,
    method: str = "exact",
    samples: int = 200_000,
    seed: int = 0,
) -> float:
    """Probability that k independent points of the permuton, sorted by x,
    induce the pattern (summed over completions for star patterns).

    method="exact" integrates cell by cell with exact within-cell tie
    weights (pattern length <= 3, resolution <= 40); method="montecarlo"
    samples k points per draw and reads off the induced pattern.
    """
    k = pattern.k
    if method == "exact":
        if k > EXACT_PATTERN_CAP:
            raise ValueError(f"exact method supports pattern length <= {EXACT_PATTERN_CAP}")
        if gamma.k > EXACT_RESOLUTION_CAP:
            raise ValueError(f"exact method supports resolution <= {EXACT_RESOLUTION_CAP}")
        if k == 1:
            return 1.0
        w = gamma.g / (gamma.k * gamma.k)
        return float(sum(_exact_completion_density(w, tau) for tau in pattern.completions()))
    if method == "montecarlo":
        if k > PLAIN_PATTERN_CAP:
            raise ValueError(f"pattern length above cap {PLAIN_PATTERN_CAP}")
        if k == 1:
            return 1.0
        rng = np.random.default_rng(seed)
        res = gamma.k
        probs = (gamma.g / (res * res)).reshape(-1)
        probs = probs / probs.sum()
        cells = rng.choice(res * res, size=(samples, k), p=probs)
        ix = cells // res
        iy = cells % res
        x = (ix + rng.random((samples, k))) / res
        y = (iy + rng.random((samples, k))) / res
        order = np.argsort(x, axis=1)
        ysorted = np.take_along_axis(y, order, axis=1)
        ranks = np.argsort(np.argsort(ysorted, axis=1), axis=1) + 1
        base = k + 1
        codes = np.zeros(samples, dtype=np.int64)
        for t in range(k):
            codes = codes * base + ranks[:, t]
        wanted = set()
        for tau in pattern.completions():
            code = 0
            for t in range(k):
                code = code * base + tau[t]
            wanted.add(code)
        hits = np.isin(codes, np.array(sorted(wanted), dtype=np.int64))
        return float(hits.mean())
    raise ValueError(f"unknown method {method!r}")


def project_uniform_marginals(
    g: np.ndarray, tol: float = MARGINAL_TOL, max_iter: int = 5000
) -> np.ndarray:
    """Alternating row/column renormalization onto the uniform-marginal
    manifold (row and column sums equal to the resolution).  An input already
    within tolerance is returned unchanged."""
    out = np.clip(np.asarray(g, dtype=float), 0.0, None)
    k = out.shape[0]
    for _ in range(max_iter):
        rows = out.sum(axis=1)
        cols = out.sum(axis=0)
        if np.abs(rows - k).max() <= tol * k and np.abs(cols - k).max() <= tol * k:
            break
        out = out * (k / np.maximum(rows, 1e-300))[:, None]
        cols = out.sum(axis=0)
        out = out * (k / np.maximum(cols, 1e-300))[None, :]
    return out


# ---------------------------------------------------------------------------
# constrained entropy over permutons


@dataclass(frozen=True)
class PermutonOptimizerOptions:
    n_starts: int = 16
    seed: int = 0
    feasibility_tol: float = 1e-8
    penalty_init: float = 10.0
    penalty_growth: float = 5.0
    max_outer: int = 12
    max_inner: int = 400
    gtol: float = 1e-10


@dataclass(frozen=True)
class PermutonOptimizerResult:
    permuton: GridPermuton
    entropy: float
    residuals: tuple[float, ...]
    feasible: bool
    degenerate: bool

    def to_dict(self) -> dict:
        return {
            "permuton": self.permuton.to_dict(),
            "entropy": self.entropy,
            "residuals": list(self.residuals),
            "feasible": self.feasible,
            "degenerate": self.degenerate,
        }


class _StarDensity:
    """Exact value/gradient of one star-pattern density on grid permutons."""

    def __init__(self, pattern: StarPattern, res: int):
        if pattern.k > EXACT_PATTERN_CAP:
            raise ValueError(
                f"optimizer constraints need pattern length <= {EXACT_PATTERN_CAP}"
            )
        self.completions = pattern.completions()
        self.res = res

    def value(self, g: np.ndarray) -> float:
        w = g / (self.res * self.res)
        return float(sum(_exact_completion_density(w, tau) for tau in self.completions))

    def value_and_grad(self, g: np.ndarray):
        w = g / (self.res * self.res)
        val = 0.0
        grad = np.zeros_like(g)
        for tau in self.completions:
            val += _exact_completion_density(w, tau)
            grad += _exact_completion_grad(w, tau)
        return val, grad / (self.res * self.res)


def _perm_entropy_and_grad(g: np.ndarray):
    k2 = g.shape[0] * g.shape[0]
    gc = np.clip(g, DENSITY_FLOOR, None)
    val = float(-np.sum(gc * np.log(gc))) / k2
    grad = (-np.log(gc) - 1.0) / k2
    return val, grad


def maximize_permuton_entropy(
    constraints,
    resolution: int,
    opts: PermutonOptimizerOptions | None = None,
) -> PermutonOptimizerResult:
    """Maximize permuton entropy over grid permutons subject to star-pattern
    density constraints, keeping uniform marginals by alternating row/column
    renormalization after every ascent step.

    constraints: sequence of (StarPattern, target).  Infeasibility (no start
    reaches the tolerance) is reported explicitly; `degenerate` flags runs
    that collapsed onto the density floor (singular-permuton limits).
    """
    if resolution > EXACT_RESOLUTION_CAP:
        raise ValueError(f"resolution capped at {EXACT_RESOLUTION_CAP}")
    opts = opts or PermutonOptimizerOptions()
    constraints = [(p, float(t)) for p, t in constraints]
    evals = [_StarDensity(p, resolution) for p, _ in constraints]
    targets = np.array([t for _, t in constraints])
    rng = np.random.default_rng(opts.seed)

    starts = [np.ones((resolution, resolution))]
    while len(starts) < opts.n_starts:
        raw = rng.uniform(0.2, 1.8, (resolution, resolution))
        starts.append(project_uniform_marginals(raw))

    def run_start(g0: np.ndarray):
        g = g0.copy()
        lam = np.zeros(len(evals))
        rho = opts.penalty_init
        con = np.array([ev.value(g) for ev in evals]) - targets
        feas_hist: list[float] = []

        def al_value(gv):
            h, _ = _perm_entropy_and_grad(gv)
            cv = np.array([ev.value(gv) for ev in evals]) - targets
            return h - lam @ cv - 0.5 * rho * (cv @ cv), cv

        for rnd in range(opts.max_outer):
            f, con = al_value(g)
            eta = 0.5
            prev = None
            for _it in range(opts.max_inner):
                h, dh = _perm_entropy_and_grad(g)
                grad = dh.copy()
                for j, ev in enumerate(evals):
                    tval, dg = ev.value_and_grad(g)
                    grad -= (lam[j] + rho * (tval - targets[j])) * dg
                # exponentiated-gradient (mirror) step: multiplicative updates
                # compose cleanly with the multiplicative marginal projection
                logg = np.log(np.clip(g, DENSITY_FLOOR, None))
                if prev is not None:
                    dth = (logg - prev[0]).ravel()
                    dgr = (grad - prev[1]).ravel()
                    denom = -float(dth @ dgr)
                    if denom > 1e-18:
                        eta = float(dth @ dth) / denom
                eta = min(max(eta, 1e-10), 50.0)
                prev = (logg, grad.copy())
                accepted = False
                for _bt in range(60):
                    step = np.clip(eta * grad, -30.0, 30.0)
                    g_n = project_uniform_marginals(
                        np.clip(g * np.exp(step), DENSITY_FLOOR, None), max_iter=400
                    )
                    f_n, con_n = al_value(g_n)
                    if f_n + 1e-18 >= f:
                        accepted = True
                        break
                    eta /= 2.0
                    if eta < 1e-14:
                        break
                if not accepted:
                    break
                moved = np.abs(g_n - g).max()
                g, f, con = g_n, f_n, con_n
                if moved < opts.gtol:
                    break
            feas = float(np.abs(con).max(initial=0.0))
            feas_hist.append(feas)
            if feas < opts.feasibility_tol:
                break
            if rnd >= 4 and feas > 0.7 * feas_hist[-4] and feas > 1e4 * opts.feasibility_tol:
                break
            lam = lam + rho * con
            rho *= opts.penalty_growth
        g = project_uniform_marginals(np.clip(g, DENSITY_FLOOR, None))
        con = np.array([ev.value(g) for ev in evals]) - targets
        h, _ = _perm_entropy_and_grad(g)
        return {
            "g": g,
            "entropy": h,
            "residuals": np.abs(con),
            "feasible": bool(np.abs(con).max(initial=0.0) < opts.feasibility_tol),
        }

    pool = []
    g0 = starts[0]
    con0 = np.array([ev.value(g0) for ev in evals]) - targets
    if np.abs(con0).max(initial=0.0) < opts.feasibility_tol:
        pool.append(
            {
                "g": g0,
                "entropy": 0.0,
                "residuals": np.abs(con0),
                "feasible": True,
            }
        )
    for g_start in starts:
        pool.append(run_start(g_start))
    feasible = [r for r in pool if r["feasible"]]
    chosen = (
        max(feasible, key=lambda r: r["entropy"])
        if feasible
        else min(pool, key=lambda r: float(r["residuals"].max(initial=0.0)))
    )
    g_best = project_uniform_marginals(chosen["g"])
    degenerate = (not bool(feasible)) or bool(g_best.min() <= 10 * DENSITY_FLOOR)
    return PermutonOptimizerResult(
        permuton=GridPermuton(g_best),
        entropy=float(chosen["entropy"]),
        residuals=tuple(float(r) for r in chosen["residuals"]),
        feasible=bool(feasible),
        degenerate=degenerate,
    )


# ---------------------------------------------------------------------------
# exact counting


@dataclass(frozen=True)
class PermCountReport:
    """Exact |Lambda_n| and the normalized log-count (1/n) ln(|Lambda|/n!)."""

    n: int
    count: int
    total: int
    log_normalized: float
    constraints: tuple[tuple[str, float], ...]
    delta: float

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "count": self.count,
            "total": self.total,
            "log_normalized": self.log_normalized,
            "constraints": [[p, t] for p, t in self.constraints],
            "delta": self.delta,
        }


def count_constrained_perms(n: int, constraints, delta: float) -> PermCountReport:
    """Exhaustively count permutations in S_n whose pattern densities lie
    strictly inside (alpha_j - delta, alpha_j + delta); density comparisons
    are exact rational arithmetic."""
    if n > COUNT_N_CAP:
        raise ValueError(f"exhaustive counting capped at n = {COUNT_N_CAP}")
    if n < 1:
        raise ValueError("n must be positive")
    constraints = [(p, float(t)) for p, t in constraints]
    perms = np.array(list(itertools.permutations(range(1, n + 1))), dtype=np.int8)
    total = perms.shape[0]
    ok = np.ones(total, dtype=bool)
    for pattern, alpha in constraints:
        k = pattern.k
        if k > n:
            raise ValueError(f"pattern length {k} exceeds n={n}")
        cap = PLAIN_PATTERN_CAP if pattern.is_plain else STAR_PATTERN_CAP
        if k > cap:
            raise ValueError(f"pattern length {k} above cap {cap}")
        base = k + 1
        wanted = set()
        for tau in pattern.completions():
            code = 0
            for t in range(k):
                code = code * base + tau[t]
            wanted.add(code)
        wanted_arr = np.array(sorted(wanted), dtype=np.int64)
        counts = np.zeros(total, dtype=np.int64)
        for combo in itertools.combinations(range(n), k):
            sub = perms[:, combo]
            ranks = np.argsort(np.argsort(sub, axis=1), axis=1).astype(np.int64) + 1
            codes = np.zeros(total, dtype=np.int64)
            for t in range(k):
                codes = codes * base + ranks[:, t]
            counts += np.isin(codes, wanted_arr)
        b = math.comb(n, k)
        lo_f = decimal_fraction(alpha) - decimal_fraction(delta)
        hi_f = decimal_fraction(alpha) + decimal_fraction(delta)
        acceptable = np.array(
            [c for c in range(b + 1) if lo_f < Fraction(c, b) < hi_f], dtype=np.int64
        )
        ok &= np.isin(counts, acceptable)
    count = int(ok.sum())
    log_norm = -math.inf if count == 0 else (math.log(count) - math.lgamma(n + 1)) / n
    return PermCountReport(
        n=n,
        count=count,
        total=total,
        log_normalized=log_norm,
        constraints=tuple((str(p), t) for p, t in constraints),
        delta=float(delta),
    )
